"""Hot inner loops, in two interchangeable backends.

The numba backend JIT-compiles per-replicate scalar loops; the numpy
backend advances all rows of a block in lockstep one step at a time.
Both consume the same pre-generated uniform arrays with the same
floating-point operation order, so simulated paths are bit-identical
across backends.

Backend selection: numba when importable, unless the environment variable
CORRBERN_NUMBA is set to 0/false/off.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_requested() -> bool:
    val = os.environ.get("CORRBERN_NUMBA", "1").strip().lower()
    return val not in ("0", "false", "off", "no")


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------

def _advance_chunk_numpy(s, n0, u, inv, theta, omega, alpha, cap_local, cap_out):
    # s: (B,) float64 success counts after n0 steps, updated in place.
    # u: (B, T) uniforms driving steps n0+1 .. n0+T.
    # inv[t] = 1/(n0+t) for n0+t >= 1 (step n0+t+1 looks back at n0+t draws).
    # cap_local: sorted local offsets t at which to capture S into cap_out.
    T = u.shape[1]
    ncap = cap_local.shape[0]
    ptr = 0
    for t in range(T):
        if n0 + t == 0:
            hit = u[:, t] < alpha
        else:
            hit = u[:, t] < (omega + (theta * s) * inv[t])
        s += hit
        if ptr < ncap and cap_local[ptr] == t:
            cap_out[:, ptr] = s
            ptr += 1


def _advance_chunk_record_numpy(s, n0, u, inv, theta, omega, alpha, hits):
    T = u.shape[1]
    for t in range(T):
        if n0 + t == 0:
            hit = u[:, t] < alpha
        else:
            hit = u[:, t] < (omega + (theta * s) * inv[t])
        hits[:, t] = hit
        s += hit


def _pmf_evolve_numpy(theta, omega, alpha, n, snaps, out):
    # Forward DP on the exact law of the success count; one row kept,
    # O(n) memory. Snapshot rows copied out at the requested step counts.
    row = np.zeros(n + 1)
    row[0] = 1.0 - alpha
    row[1] = alpha
    sp = 0
    if snaps[sp] == 1:
        out[sp, :2] = row[:2]
        sp += 1
    karr = np.arange(n + 1, dtype=np.float64)
    buf = np.zeros(n + 1)
    for m in range(1, n):
        invm = 1.0 / m
        q = omega + (theta * karr[: m + 1]) * invm
        buf[: m + 2] = 0.0
        buf[: m + 1] += row[: m + 1] * (1.0 - q)
        buf[1 : m + 2] += row[: m + 1] * q
        row[: m + 2] = buf[: m + 2]
        if sp < snaps.shape[0] and snaps[sp] == m + 1:
            out[sp, : m + 2] = row[: m + 2]
            sp += 1


def _moment_recursion_numpy(theta, omega, alpha, idx, es_out, es2_out):
    # Same recursions as the scalar loop, solved in product form:
    #   E[S_{k+1}]   = (1 + theta/k)  E[S_k]   + omega
    #   E[S_{k+1}^2] = (1 + 2theta/k) E[S_k^2] + h_k
    # All partial terms are nonnegative, so the cumulative form is stable.
    n = int(idx[-1])
    k = np.arange(1, n, dtype=np.float64)
    a = np.empty(n)
    a[0] = 1.0
    if n > 1:
        np.cumprod(1.0 / (1.0 + theta / k), out=a[1:])
    A = np.cumsum(a)
    es = (alpha + omega * (A - 1.0)) / a
    if n > 1:
        g = 1.0 + 2.0 * theta / k
        h = (2.0 * omega + theta / k) * es[:-1] + omega
        G = np.empty(n)
        G[0] = 1.0
        np.cumprod(g, out=G[1:])
        csum = np.concatenate([[0.0], np.cumsum(h / G[1:])])
        es2 = G * (alpha + csum)
    else:
        es2 = np.array([alpha])
    es_out[:] = es[idx - 1]
    es2_out[:] = es2[idx - 1]


def _gamma_table_numpy(theta, n_max):
    k = np.arange(1, n_max, dtype=np.float64)
    a = np.empty(n_max)
    a[0] = 1.0
    if n_max > 1:
        np.cumprod(1.0 / (1.0 + theta / k), out=a[1:])
    return a, np.cumsum(a), np.cumsum(a * a)


_NUMPY_IMPL = {
    "advance_chunk": _advance_chunk_numpy,
    "advance_chunk_record": _advance_chunk_record_numpy,
    "pmf_evolve": _pmf_evolve_numpy,
    "moment_recursion": _moment_recursion_numpy,
    "gamma_table": _gamma_table_numpy,
}

# Lockstep vectorization favors wide blocks of short chunks.
_NUMPY_BLOCK = (16384, 512)


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

_NUMBA_IMPL = None
_NUMBA_BLOCK = (256, 32768)

try:  # pragma: no cover - exercised indirectly via backend tests
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _advance_chunk_numba(s, n0, u, inv, theta, omega, alpha, cap_local, cap_out):
        B, T = u.shape
        ncap = cap_local.shape[0]
        for i in range(B):
            si = s[i]
            ptr = 0
            for t in range(T):
                if n0 + t == 0:
                    q = alpha
                else:
                    q = omega + (theta * si) * inv[t]
                if u[i, t] < q:
                    si += 1.0
                if ptr < ncap and cap_local[ptr] == t:
                    cap_out[i, ptr] = si
                    ptr += 1
            s[i] = si

    @njit(cache=True, nogil=True)
    def _advance_chunk_record_numba(s, n0, u, inv, theta, omega, alpha, hits):
        B, T = u.shape
        for i in range(B):
            si = s[i]
            for t in range(T):
                if n0 + t == 0:
                    q = alpha
                else:
                    q = omega + (theta * si) * inv[t]
                if u[i, t] < q:
                    si += 1.0
                    hits[i, t] = 1.0
                else:
                    hits[i, t] = 0.0
            s[i] = si

    @njit(cache=True, nogil=True)
    def _pmf_evolve_numba(theta, omega, alpha, n, snaps, out):
        row = np.zeros(n + 1)
        row[0] = 1.0 - alpha
        row[1] = alpha
        sp = 0
        if snaps[sp] == 1:
            out[sp, 0] = row[0]
            out[sp, 1] = row[1]
            sp += 1
        for m in range(1, n):
            invm = 1.0 / m
            # Backward in-place update keeps a single O(n) row.
            row[m + 1] = row[m] * (omega + (theta * m) * invm)
            for k in range(m, 0, -1):
                qk = omega + (theta * k) * invm
                qkm1 = omega + (theta * (k - 1)) * invm
                row[k] = row[k] * (1.0 - qk) + row[k - 1] * qkm1
            row[0] = row[0] * (1.0 - omega)
            if sp < snaps.shape[0] and snaps[sp] == m + 1:
                for k in range(m + 2):
                    out[sp, k] = row[k]
                sp += 1

    @njit(cache=True, nogil=True)
    def _moment_recursion_numba(theta, omega, alpha, idx, es_out, es2_out):
        m = alpha
        x = alpha
        sp = 0
        if idx[sp] == 1:
            es_out[sp] = m
            es2_out[sp] = x
            sp += 1
        nmax = idx[idx.shape[0] - 1]
        for k in range(1, nmax):
            invk = 1.0 / k
            h = (2.0 * omega + theta * invk) * m + omega
            x = (1.0 + 2.0 * theta * invk) * x + h
            m = (1.0 + theta * invk) * m + omega
            if sp < idx.shape[0] and idx[sp] == k + 1:
                es_out[sp] = m
                es2_out[sp] = x
                sp += 1

    @njit(cache=True, nogil=True)
    def _gamma_table_numba_fill(theta, a, A, v):
        n_max = a.shape[0]
        a[0] = 1.0
        A[0] = 1.0
        v[0] = 1.0
        for k in range(1, n_max):
            a[k] = a[k - 1] / (1.0 + theta / k)
            A[k] = A[k - 1] + a[k]
            v[k] = v[k - 1] + a[k] * a[k]

    def _gamma_table_numba(theta, n_max):
        a = np.empty(n_max)
        A = np.empty(n_max)
        v = np.empty(n_max)
        _gamma_table_numba_fill(theta, a, A, v)
        return a, A, v

    _NUMBA_IMPL = {
        "advance_chunk": _advance_chunk_numba,
        "advance_chunk_record": _advance_chunk_record_numba,
        "pmf_evolve": _pmf_evolve_numba,
        "moment_recursion": _moment_recursion_numba,
        "gamma_table": _gamma_table_numba,
    }


IMPLEMENTATIONS = {"numpy": _NUMPY_IMPL}
if _NUMBA_IMPL is not None:
    IMPLEMENTATIONS["numba"] = _NUMBA_IMPL

if HAVE_NUMBA and _numba_requested():
    BACKEND = "numba"
    BLOCK_ROWS, CHUNK_COLS = _NUMBA_BLOCK
else:
    BACKEND = "numpy"
    BLOCK_ROWS, CHUNK_COLS = _NUMPY_BLOCK

_active = IMPLEMENTATIONS[BACKEND]
advance_chunk = _active["advance_chunk"]
advance_chunk_record = _active["advance_chunk_record"]
pmf_evolve = _active["pmf_evolve"]
moment_recursion = _active["moment_recursion"]
gamma_table = _active["gamma_table"]


def inv_steps(n0: int, length: int) -> np.ndarray:
    """Reciprocal table 1/(n0+t) for a chunk of steps; 0.0 at the unused t=0 slot."""
    k = n0 + np.arange(length, dtype=np.float64)
    out = np.zeros(length)
    np.divide(1.0, k, out=out, where=k >= 1.0)
    return out

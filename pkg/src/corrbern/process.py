"""The success-rate-reinforced Bernoulli process.

Step n+1 succeeds with probability (1-theta) p + theta S_n/n, where S_n
counts successes among the first n steps; the very first step succeeds
with probability alpha (the rate formula is undefined at n = 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .exceptions import ConfigurationError, ResourceLimitError
from .rng import DEFAULT_RNG, make_stream

PMF_DEFAULT_CAP = 5000


@dataclass(frozen=True)
class ModelParams:
    """The (theta, p, alpha) triple driving the process."""

    theta: float
    p: float
    alpha: float

    def __post_init__(self):
        for name in ("theta", "p", "alpha"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {val}")

    @property
    def omega(self) -> float:
        """The fixed-probability weight (1 - theta) * p."""
        return (1.0 - self.theta) * self.p


@dataclass(frozen=True)
class ProcessState:
    """Step count and success count; n = 0 is the pre-first-step state."""

    n: int
    s: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if not 0 <= self.s <= self.n:
            raise ValueError(f"s must be in [0, n], got s={self.s}, n={self.n}")


def success_probability(params: ModelParams, state: ProcessState) -> float:
    """P(next step succeeds | n steps done, s successes), for n >= 1."""
    if state.n < 1:
        raise ValueError("success_probability requires n >= 1; the first step uses alpha")
    return params.omega + params.theta * state.s / state.n


def step(params: ModelParams, state: ProcessState, u: float) -> ProcessState:
    """Advance one step, succeeding iff u < the conditional success probability."""
    if state.n == 0:
        q = params.alpha
    else:
        q = success_probability(params, state)
    return ProcessState(n=state.n + 1, s=state.s + (1 if u < q else 0))


@dataclass(frozen=True)
class Trajectory:
    """One sampled path, recorded at checkpoint step counts."""

    params: ModelParams
    horizon: int
    checkpoints: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    seed: int
    rng_name: str = DEFAULT_RNG

    def __post_init__(self):
        cps = self.checkpoints
        vals = self.values
        if len(cps) != len(vals):
            raise ValueError("checkpoints and values must have equal length")
        if len(cps) and (cps[0] < 1 or cps[-1] > self.horizon):
            raise ConfigurationError("checkpoints must lie in [1, horizon]")
        if np.any(np.diff(cps) <= 0):
            raise ValueError("checkpoints must be strictly increasing")
        ds = np.diff(vals)
        dn = np.diff(cps)
        if np.any(ds < 0) or np.any(ds > dn):
            raise ValueError("success counts must be non-decreasing with increments <= step gap")
        if len(vals) and not 0 <= vals[0] <= cps[0]:
            raise ValueError("success count exceeds step count")

    @property
    def is_dense_prefix(self) -> bool:
        """True when the checkpoints are exactly 1..len (full path retained)."""
        cps = self.checkpoints
        return len(cps) > 0 and cps[0] == 1 and cps[-1] == len(cps)


def normalize_checkpoints(checkpoints, horizon: int) -> np.ndarray:
    cps = np.unique(np.asarray(checkpoints, dtype=np.int64))
    if len(cps) == 0:
        raise ConfigurationError("at least one checkpoint is required")
    if cps[0] < 1 or cps[-1] > horizon:
        raise ConfigurationError(
            f"checkpoints must lie in [1, {horizon}], got range [{cps[0]}, {cps[-1]}]"
        )
    return cps


def simulate_path(
    params: ModelParams,
    horizon: int,
    checkpoints,
    seed: int,
    rng_name: str = DEFAULT_RNG,
) -> Trajectory:
    """Sample one path; identical inputs yield identical trajectories."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    cps = normalize_checkpoints(checkpoints, horizon)
    gen = make_stream(seed, 0, rng_name)
    s = np.zeros(1)
    out = np.empty((1, len(cps)))
    chunk = _kernels.CHUNK_COLS
    n0 = 0
    theta, omega, alpha = params.theta, params.omega, params.alpha
    while n0 < horizon:
        cur = min(chunk, horizon - n0)
        u = gen.random(cur).reshape(1, cur)
        inv = _kernels.inv_steps(n0, cur)
        lo = np.searchsorted(cps, n0, side="right")
        hi = np.searchsorted(cps, n0 + cur, side="right")
        cap_local = (cps[lo:hi] - n0 - 1).astype(np.int64)
        _kernels.advance_chunk(
            s, n0, u, inv, theta, omega, alpha, cap_local, out[:, lo:hi]
        )
        n0 += cur
    return Trajectory(
        params=params,
        horizon=horizon,
        checkpoints=cps,
        values=out[0].astype(np.int64),
        seed=seed,
        rng_name=rng_name,
    )


@dataclass(frozen=True)
class ExactPmf:
    """Exact law of the success count after n steps: probs[k] = P(S_n = k)."""

    n: int
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        if len(self.probs) != self.n + 1:
            raise ValueError("probs must have length n + 1")
        if np.any(self.probs < -1e-15):
            raise ValueError("probabilities must be nonnegative")
        if abs(float(self.probs.sum()) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1 within 1e-12")

    def mean(self) -> float:
        return float(np.arange(self.n + 1) @ self.probs)

    def second_moment(self) -> float:
        k = np.arange(self.n + 1, dtype=np.float64)
        return float((k * k) @ self.probs)

    def variance(self) -> float:
        return self.second_moment() - self.mean() ** 2

    def local_maxima(self) -> int:
        """Number of interior-or-edge local maxima (a coarse bimodality indicator)."""
        p = self.probs
        left = np.concatenate([[-np.inf], p[:-1]])
        right = np.concatenate([p[1:], [-np.inf]])
        return int(np.sum((p > left) & (p >= right)))


def exact_pmf_many(params: ModelParams, ns, max_n: int = PMF_DEFAULT_CAP) -> list[ExactPmf]:
    """Exact laws at several step counts from a single forward DP sweep."""
    snaps = np.unique(np.asarray(ns, dtype=np.int64))
    if snaps[0] < 1:
        raise ValueError("n must be >= 1")
    n = int(snaps[-1])
    if n > max_n:
        raise ResourceLimitError(
            f"exact pmf requested at n={n} exceeds cap {max_n} (O(n^2) work); raise max_n to override"
        )
    out = np.zeros((len(snaps), n + 1))
    _kernels.pmf_evolve(params.theta, params.omega, params.alpha, n, snaps, out)
    return [
        ExactPmf(n=int(m), probs=out[i, : int(m) + 1]) for i, m in enumerate(snaps)
    ]


def exact_pmf(params: ModelParams, n: int, max_n: int = PMF_DEFAULT_CAP) -> ExactPmf:
    """Exact law of the success count after n steps (forward DP, O(n^2) work)."""
    return exact_pmf_many(params, [n], max_n=max_n)[0]

"""Deterministic weight sequences driving all normalizations.

The weight sequence is a_1 = 1, a_{n+1} = a_n / (1 + theta/n), equal to
Gamma(n) Gamma(theta+1) / Gamma(n+theta).  A_n and v_n are its partial
sums and partial sums of squares.  Tables are built by the multiplicative
recursion (no large gamma ratios); the log-gamma closed form is used only
for cross-checks and for isolated large indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import digamma, gammaln, zeta

from . import _kernels

_EULER_GAMMA = float(np.euler_gamma)


def _validate_theta(theta: float) -> None:
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must be in [0, 1], got {theta}")


def lgamma_diff(n, s: float):
    """log Gamma(n+s) - log Gamma(n) to full relative precision.

    Direct gammaln differences cancel catastrophically for large n (the
    difference is ~ s log n while each term is ~ n log n); for n >= 50
    the Stirling expansions are differenced term by term instead, so the
    result keeps ~1e-15 relative accuracy out to arbitrary n.
    """
    n = np.asarray(n, dtype=np.float64)
    small = n < 50.0
    out = np.empty_like(n)
    if np.any(small):
        ns = n[small]
        out[small] = gammaln(ns + s) - gammaln(ns)
    if np.any(~small):
        nl = n[~small]
        lead = (nl - 0.5) * np.log1p(s / nl) + s * np.log(nl + s) - s
        corr = (
            (1.0 / (12.0 * (nl + s)) - 1.0 / (12.0 * nl))
            - (1.0 / (360.0 * (nl + s) ** 3) - 1.0 / (360.0 * nl**3))
            + (1.0 / (1260.0 * (nl + s) ** 5) - 1.0 / (1260.0 * nl**5))
        )
        out[~small] = lead + corr
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GammaRatioTable:
    """Weight sequence table: entry i of each array corresponds to n = i+1."""

    theta: float
    n_max: int
    a: np.ndarray = field(repr=False)
    A: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)

    def a_at(self, n: int) -> float:
        return float(self.a[n - 1])

    def A_at(self, n: int) -> float:
        return float(self.A[n - 1])

    def v_at(self, n: int) -> float:
        return float(self.v[n - 1])

    def explosion_coefficients(self) -> np.ndarray:
        """Ratios a_n^2 / v_n (the relative growth of v_n at step n)."""
        return self.a * self.a / self.v


def a_exact(theta: float, n) -> float | np.ndarray:
    """Closed-form a_n = Gamma(n)Gamma(theta+1)/Gamma(n+theta), in log space.

    For isolated large indices where a table is not materialized.
    """
    out = np.exp(gammaln(theta + 1.0) - lgamma_diff(n, theta))
    return float(out) if np.ndim(out) == 0 else out


def partial_sum_ratio(theta: float, n: int) -> float:
    """Closed-form A_n / (n a_n).

    Equals (Gamma(n+theta)/(Gamma(n+1)Gamma(theta)) - 1)/(theta - 1) for
    theta in (0, 1); the theta = 0 and theta = 1 boundaries are exact
    special cases (A_n = n, and harmonic partial sums, respectively).
    """
    _validate_theta(theta)
    if theta == 0.0:
        return 1.0
    if theta == 1.0:
        # a_k = 1/k, n a_n = 1, so the ratio is the n-th harmonic number.
        return float(digamma(n + 1.0) + _EULER_GAMMA)
    # Gamma(n+theta)/(Gamma(n+1) Gamma(theta))
    ratio = math.exp(lgamma_diff(n, theta) - math.log(n) - gammaln(theta))
    return (ratio - 1.0) / (theta - 1.0)


def build_table(theta: float, n_max: int, cross_check: bool = True) -> GammaRatioTable:
    """Build a_n, A_n, v_n for n = 1..n_max by the multiplicative recursion.

    When cross_check is set, spot indices are verified against the
    log-gamma closed form to 1e-10 relative.
    """
    _validate_theta(theta)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    a, A, v = _kernels.gamma_table(theta, n_max)
    if cross_check:
        spots = np.unique(np.geomspace(1, n_max, num=16).astype(np.int64))
        ref = a_exact(theta, spots.astype(np.float64))
        rel = np.abs(a[spots - 1] - ref) / ref
        if np.any(rel > 1e-10):
            raise RuntimeError(
                f"weight recursion disagrees with log-gamma form by {rel.max():.2e}"
            )
    return GammaRatioTable(theta=theta, n_max=n_max, a=a, A=A, v=v)


def a_asymptotic(theta: float, n: int) -> float:
    """Leading-order weight Gamma(1+theta) / n^theta."""
    _validate_theta(theta)
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.gamma(1.0 + theta) / n**theta


def v_asymptotic(theta: float, n: int) -> float:
    """Leading-order v_n in the regimes where v_n diverges (theta <= 1/2)."""
    _validate_theta(theta)
    if n < 1:
        raise ValueError("n must be >= 1")
    if theta > 0.5:
        raise ValueError("v_n converges for theta > 1/2; use v_limit instead")
    if theta == 0.5:
        return (math.pi / 4.0) * math.log(n)
    return math.gamma(theta + 1.0) ** 2 * n ** (1.0 - 2.0 * theta) / (1.0 - 2.0 * theta)


def v_limit(theta: float, tol: float = 1e-10) -> float:
    """Limit of v_n for theta > 1/2: sum of a_k^2 over all k.

    Computed as an explicit partial sum of a_k^2 plus a tail estimate.
    The tail uses a_k^2 = Gamma(theta+1)^2 (k^{-2theta}
    - theta(theta-1) k^{-2theta-1} + O(k^{-2theta-2})), whose first two
    terms sum to Hurwitz-zeta differences; the remainder is bounded by
    integral comparison of k^{-2theta-2}, and the truncation point is
    chosen so that bound is below tol.  Plain truncation cannot reach
    small tolerances anywhere in (1/2, 1]: the raw tail only decays like
    K^{1-2theta}.
    """
    _validate_theta(theta)
    if theta <= 0.5:
        raise ValueError("v_n diverges for theta <= 1/2; use v_asymptotic instead")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    g2 = math.gamma(theta + 1.0) ** 2
    # Remainder after the two-term tail correction is ~ c K^{-(2theta+1)}
    # with c of order g2; a safety factor of 10 keeps the bound honest.
    k_terms = (10.0 * g2 / (tol * (2.0 * theta + 1.0))) ** (1.0 / (2.0 * theta + 1.0))
    K = int(min(max(k_terms, 1e4), 4e6))
    k = np.arange(1, K, dtype=np.float64)
    a = np.empty(K)
    a[0] = 1.0
    np.cumprod(1.0 / (1.0 + theta / k), out=a[1:])
    partial = float(np.sum(a * a))
    kk = np.arange(1, K + 1, dtype=np.float64)
    h_2t = float(np.sum(kk ** (-2.0 * theta)))
    h_2t1 = float(np.sum(kk ** (-2.0 * theta - 1.0)))
    tail = g2 * (
        (float(zeta(2.0 * theta)) - h_2t)
        - theta * (theta - 1.0) * (float(zeta(2.0 * theta + 1.0)) - h_2t1)
    )
    return partial + tail


def lemma_b1_sum(a: float, b: float, n: int) -> float:
    """Closed form of sum_{k=1}^{n-1} Gamma(k+a) / Gamma(k+b).

    Equals Gamma(a+1)/((b-a-1)Gamma(b)) * (1 - Gamma(n+a)Gamma(b)
    / (Gamma(n+b-1)Gamma(a+1))), evaluated in log-gamma space.
    Requires b != a+1 (the b = a+1 case is a harmonic-type sum not covered
    by the telescoping identity).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if a <= -1.0 or b <= 0.0:
        raise ValueError("requires a > -1 and b > 0")
    if b == a + 1.0:
        raise ValueError("singular case b = a+1 (harmonic-type sum)")
    pref = math.exp(gammaln(a + 1.0) - gammaln(b)) / (b - a - 1.0)
    inner = 1.0 - math.exp(
        gammaln(n + a) + gammaln(b) - gammaln(n + b - 1.0) - gammaln(a + 1.0)
    )
    return pref * inner

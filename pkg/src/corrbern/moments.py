"""Exact finite-n moments of the success count S_n and of the martingale
transform M_n = a_n S_n - omega A_n, plus the moments of the almost-sure
limit L of n^{1-theta}(S_n/n - p) in the reinforced regime theta > 1/2.

Forward recursions are the computational path for E[S_n] and E[S_n^2];
gamma-ratio closed forms are evaluated in log space and serve as
cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .gamma_seq import GammaRatioTable, a_exact, lgamma_diff, partial_sum_ratio
from .process import ModelParams, ProcessState, Trajectory, success_probability


def mean_Sn(params: ModelParams, n: int) -> float:
    """Exact E[S_n] = (alpha + omega (A_n - 1)) / a_n, via log-gamma forms."""
    if n < 1:
        raise ValueError("n must be >= 1")
    a_n = a_exact(params.theta, n)
    return (params.alpha - params.omega) / a_n + params.omega * n * partial_sum_ratio(
        params.theta, n
    )


def moments_Sn_recursive(params: ModelParams, ns) -> tuple[np.ndarray, np.ndarray]:
    """Exact (E[S_n], E[S_n^2]) at several n from one forward recursion pass."""
    idx = np.unique(np.asarray(ns, dtype=np.int64))
    if idx[0] < 1:
        raise ValueError("n must be >= 1")
    es = np.empty(len(idx))
    es2 = np.empty(len(idx))
    _kernels.moment_recursion(params.theta, params.omega, params.alpha, idx, es, es2)
    return es, es2


def second_moment_Sn_recursive(params: ModelParams, n: int) -> float:
    """Exact E[S_n^2] by iterating E[S_{k+1}^2] = (1+2theta/k) E[S_k^2] + h_k."""
    _, es2 = moments_Sn_recursive(params, [n])
    return float(es2[0])


def second_moment_Sn_closed(params: ModelParams, n: int) -> float:
    """Exact E[S_n^2] from the gamma-ratio closed form (log-gamma space).

    The closed form carries a (2 theta - 1) denominator, so at
    theta = 1/2 this delegates to the recursion.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    theta, p, alpha = params.theta, params.p, params.alpha
    if theta == 0.5:
        return second_moment_Sn_recursive(params, n)
    omega = params.omega
    r2t = math.exp(lgamma_diff(n, 2.0 * theta))  # Gamma(n+2theta)/Gamma(n)
    rt = math.exp(lgamma_diff(n, theta))
    rt1 = math.exp(lgamma_diff(n, theta + 1.0))
    g2t1 = math.exp(gammaln(1.0 + 2.0 * theta))
    gt1 = math.exp(gammaln(1.0 + theta))
    term1 = alpha * r2t / g2t1
    term2 = p * (
        ((1.0 - 2.0 * omega) / (2.0 * theta - 1.0)) * (r2t / g2t1 - n)
        - p * (2.0 * r2t / g2t1 - n * (n + 1.0))
    )
    term3 = (alpha - p) * (
        (1.0 - 2.0 * omega) * (r2t / g2t1 - rt / gt1)
        - 2.0 * p * ((theta + 1.0) * r2t / g2t1 - rt1 / gt1)
    )
    return term1 + term2 + term3


def variance_Sn(params: ModelParams, n: int) -> float:
    """Exact Var(S_n) from the moment recursions."""
    es, es2 = moments_Sn_recursive(params, [n])
    return float(es2[0] - es[0] ** 2)


def variance_asymptotic(params: ModelParams, n: int) -> float:
    """Leading-order Var(S_n) for alpha = p, by dispersion regime.

    Returns p(1-p) n / (1-2theta) for theta < 1/2, p(1-p) n log n at
    theta = 1/2, and p(1-p) n^{2theta} / ((2theta-1) Gamma(theta)) for
    theta > 1/2.

    Caveat for theta > 1/2: the exact recursion converges to
    p(1-p) n^{2theta} / ((2theta-1) Gamma(2theta)) instead (consistent
    with the limit moments in moments_L); the Gamma(theta) form is kept
    as the documented interface contract.  See README.
    """
    if params.alpha != params.p:
        raise ValueError("the dispersion asymptote is stated for alpha = p")
    if n < 1:
        raise ValueError("n must be >= 1")
    theta, p = params.theta, params.p
    pq = p * (1.0 - p)
    if theta < 0.5:
        return pq * n / (1.0 - 2.0 * theta)
    if theta == 0.5:
        return pq * n * math.log(n)
    return pq * n ** (2.0 * theta) / ((2.0 * theta - 1.0) * math.gamma(theta))


def mean_Mn(params: ModelParams) -> float:
    """E[M_n] = alpha - omega, constant in n."""
    return params.alpha - params.omega


def second_moment_Mn(params: ModelParams, n: int) -> float:
    """Exact E[M_n^2] = a_n^2 E[S_n^2] - 2 omega A_n (alpha-omega) - omega^2 A_n^2."""
    es2 = second_moment_Sn_recursive(params, n)
    a_n = a_exact(params.theta, n)
    A_n = n * a_n * partial_sum_ratio(params.theta, n)
    omega = params.omega
    return a_n**2 * es2 - 2.0 * omega * A_n * (params.alpha - omega) - omega**2 * A_n**2


def second_moment_Mn_limit(params: ModelParams) -> float:
    """Limit of E[M_n^2] as n grows; finite only for theta > 1/2."""
    theta, p, alpha = params.theta, params.p, params.alpha
    if theta <= 0.5:
        raise ValueError("E[M_n^2] diverges for theta <= 1/2")
    g = math.gamma
    core = alpha + (alpha - p) * (1.0 - 4.0 * p) + p * (1.0 - 2.0 * theta * p) / (
        2.0 * theta - 1.0
    )
    return (g(theta + 1.0) ** 2 / g(2.0 * theta + 1.0)) * core + theta * p * (
        2.0 * (alpha - p) + theta * p
    )


@dataclass(frozen=True)
class LMoments:
    """First two moments of the limit variable L (theta > 1/2)."""

    mean_l: float
    second_moment_l: float

    @property
    def variance_l(self) -> float:
        return self.second_moment_l - self.mean_l**2

    def __post_init__(self):
        if self.variance_l < 0.0:
            raise ValueError("second moment below squared mean")


def moments_L(params: ModelParams) -> LMoments:
    """E[L] = (alpha-p)/Gamma(theta+1) and the matching second moment."""
    theta, p, alpha = params.theta, params.p, params.alpha
    if theta <= 0.5:
        raise ValueError("the limit variable L exists only for theta > 1/2")
    g = math.gamma
    mean_l = (alpha - p) / g(theta + 1.0)
    second = (
        alpha + (alpha - p) * (1.0 - 4.0 * p) + p * (1.0 - 2.0 * theta * p) / (2.0 * theta - 1.0)
    ) / g(2.0 * theta + 1.0)
    return LMoments(mean_l=mean_l, second_moment_l=second)


def conditional_xi_variance(params: ModelParams, state: ProcessState) -> float:
    """Conditional variance q(1-q) of the next centered increment."""
    q = success_probability(params, state)
    return q * (1.0 - q)


def r_tail(params: ModelParams, n: int, table: GammaRatioTable | None = None) -> float:
    """Tail-variance proxy p(1-p) n a_n^2 / (2 theta - 1), for theta > 1/2."""
    theta, p = params.theta, params.p
    if theta <= 0.5:
        raise ValueError("the tail variance proxy requires theta > 1/2")
    if table is not None and n <= table.n_max:
        a_n = table.a_at(n)
    else:
        a_n = a_exact(theta, n)
    return p * (1.0 - p) * n * a_n**2 / (2.0 * theta - 1.0)


@dataclass(frozen=True)
class MartingaleView:
    """Martingale transform of a trajectory at its checkpoints.

    xi and qv require the full path (dense-prefix checkpoints); on sparse
    checkpoints they are None and only m is available.
    """

    trajectory: Trajectory
    m: np.ndarray = field(repr=False)
    xi: np.ndarray | None = field(repr=False, default=None)
    qv: np.ndarray | None = field(repr=False, default=None)


def martingale_transform(traj: Trajectory, table: GammaRatioTable) -> MartingaleView:
    """M_n = a_n S_n - omega A_n at the trajectory's checkpoints.

    On a fully retained path this also reconstructs the increments
    xi_n = S_n - E[S_n | first n-1 steps] (with xi_1 = S_1 - omega, making
    M_n = sum a_k xi_k exact) and the predictable quadratic variation
    <M>_n = E[xi_1^2] + sum_{k>=2} a_k^2 q_{k-1}(1 - q_{k-1}).
    """
    params = traj.params
    if table.theta != params.theta:
        raise ValueError("table theta does not match trajectory params")
    cps = traj.checkpoints
    if len(cps) and cps[-1] > table.n_max:
        raise ValueError("table does not cover the trajectory horizon")
    omega = params.omega
    a_cp = table.a[cps - 1]
    A_cp = table.A[cps - 1]
    s_vals = traj.values.astype(np.float64)
    m = a_cp * s_vals - omega * A_cp
    if not traj.is_dense_prefix:
        return MartingaleView(trajectory=traj, m=m)
    n = len(cps)
    k = np.arange(1, n, dtype=np.float64)
    q_prev = omega + params.theta * s_vals[:-1] / k
    xi = np.empty(n)
    xi[0] = s_vals[0] - omega
    xi[1:] = s_vals[1:] - (omega + (1.0 + params.theta / k) * s_vals[:-1])
    alpha = params.alpha
    condvar = np.empty(n)
    condvar[0] = alpha - 2.0 * alpha * omega + omega * omega
    condvar[1:] = q_prev * (1.0 - q_prev)
    qv = np.cumsum(table.a[:n] ** 2 * condvar)
    return MartingaleView(trajectory=traj, m=m, xi=xi, qv=qv)

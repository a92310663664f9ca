"""Reproducible replicate engine with mergeable streaming summaries.

Replicate i draws from a stream seeded by (master_seed, i) only, so
per-replicate paths are bit-identical no matter how replicates are
grouped into blocks, shards, or threads.  Summaries keep one-pass
central-moment accumulators up to order 4 per checkpoint, merged
pairwise; merging is associative up to float rounding.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .exceptions import ConfigurationError
from .process import ModelParams, normalize_checkpoints
from .rng import DEFAULT_RNG, make_stream

RETAIN_MODES = ("summaries-only", "per-replicate-values", "full-paths")

FULL_PATH_CAP_DEFAULT = 50_000_000
SHARD_SIZE_DEFAULT = 8192


@dataclass(frozen=True)
class ExperimentPlan:
    params: ModelParams
    horizon: int
    checkpoints: np.ndarray = field(repr=False)
    replicates: int = 1
    master_seed: int = 0
    retain: str = "summaries-only"
    rng: str = DEFAULT_RNG
    shard_size: int = SHARD_SIZE_DEFAULT
    full_path_cap: int = FULL_PATH_CAP_DEFAULT

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigurationError("horizon must be >= 1")
        if self.replicates < 1:
            raise ConfigurationError("replicates must be >= 1")
        if self.retain not in RETAIN_MODES:
            raise ConfigurationError(f"retain must be one of {RETAIN_MODES}")
        if self.shard_size < 1:
            raise ConfigurationError("shard_size must be >= 1")
        object.__setattr__(
            self, "checkpoints", normalize_checkpoints(self.checkpoints, self.horizon)
        )
        if self.retain == "full-paths" and self.horizon * self.replicates > self.full_path_cap:
            raise ConfigurationError(
                f"full-paths retention needs horizon*replicates <= {self.full_path_cap}; "
                f"requested {self.horizon * self.replicates}"
            )

    def same_experiment(self, other: "ExperimentPlan") -> bool:
        return (
            self.params == other.params
            and self.horizon == other.horizon
            and np.array_equal(self.checkpoints, other.checkpoints)
            and self.master_seed == other.master_seed
            and self.retain == other.retain
            and self.rng == other.rng
        )


@dataclass
class ReplicateSummary:
    plan: ExperimentPlan
    rep_start: int
    rep_stop: int
    count: int
    mean: np.ndarray = field(repr=False)
    m2: np.ndarray = field(repr=False)
    m3: np.ndarray = field(repr=False)
    m4: np.ndarray = field(repr=False)
    minv: np.ndarray = field(repr=False)
    maxv: np.ndarray = field(repr=False)
    values: np.ndarray | None = field(repr=False, default=None)
    paths: np.ndarray | None = field(repr=False, default=None)
    backend: str = _kernels.BACKEND

    @classmethod
    def empty(cls, plan: ExperimentPlan, rep_start: int = 0) -> "ReplicateSummary":
        C = len(plan.checkpoints)
        return cls(
            plan=plan,
            rep_start=rep_start,
            rep_stop=rep_start,
            count=0,
            mean=np.zeros(C),
            m2=np.zeros(C),
            m3=np.zeros(C),
            m4=np.zeros(C),
            minv=np.full(C, np.inf),
            maxv=np.full(C, -np.inf),
            values=np.empty((0, C)) if plan.retain != "summaries-only" else None,
            paths=np.empty((0, plan.horizon), dtype=np.uint8)
            if plan.retain == "full-paths"
            else None,
        )

    def variance(self, ddof: int = 1) -> np.ndarray:
        if self.count <= ddof:
            return np.full_like(self.mean, np.nan)
        return self.m2 / (self.count - ddof)

    def skewness(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.sqrt(float(self.count)) * self.m3 / self.m2**1.5

    def excess_kurtosis(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.count * self.m4 / self.m2**2 - 3.0

    def checkpoint_rows(self) -> list[dict]:
        """Per-checkpoint statistics in checkpoint order (for CSV export)."""
        var = self.variance()
        skew = self.skewness()
        kurt = self.excess_kurtosis()
        return [
            {
                "n": int(n),
                "mean": float(self.mean[j]),
                "var": float(var[j]),
                "skew": float(skew[j]),
                "exkurt": float(kurt[j]),
                "min": float(self.minv[j]),
                "max": float(self.maxv[j]),
            }
            for j, n in enumerate(self.plan.checkpoints)
        ]

    def values_at(self, n: int) -> np.ndarray:
        """Per-replicate success counts at checkpoint n (retained modes only)."""
        if self.values is None:
            raise ConfigurationError(
                "per-replicate values were not retained; rerun with retain="
                "'per-replicate-values' or 'full-paths'"
            )
        j = int(np.searchsorted(self.plan.checkpoints, n))
        if j >= len(self.plan.checkpoints) or self.plan.checkpoints[j] != n:
            raise ConfigurationError(f"{n} is not a checkpoint of this plan")
        return self.values[:, j]


def _batch_central(x: np.ndarray):
    n = x.shape[0]
    mean = x.mean(axis=0)
    d = x - mean
    d2 = d * d
    return n, mean, d2.sum(axis=0), (d2 * d).sum(axis=0), (d2 * d2).sum(axis=0), x.min(
        axis=0
    ), x.max(axis=0)


def _merge_central(a, b):
    na, ma, m2a, m3a, m4a, mina, maxa = a
    nb, mb, m2b, m3b, m4b, minb, maxb = b
    if na == 0:
        return b
    if nb == 0:
        return a
    n = na + nb
    delta = mb - ma
    d2 = delta * delta
    mean = ma + delta * (nb / n)
    m2 = m2a + m2b + d2 * (na * nb / n)
    m3 = (
        m3a
        + m3b
        + d2 * delta * (na * nb * (na - nb) / (n * n))
        + 3.0 * delta * (na * m2b - nb * m2a) / n
    )
    m4 = (
        m4a
        + m4b
        + d2 * d2 * (na * nb * (na * na - na * nb + nb * nb) / (n * n * n))
        + 6.0 * d2 * (na * na * m2b + nb * nb * m2a) / (n * n)
        + 4.0 * delta * (na * m3b - nb * m3a) / n
    )
    return n, mean, m2, m3, m4, np.minimum(mina, minb), np.maximum(maxa, maxb)


def _run_shard(plan: ExperimentPlan, start: int, stop: int) -> ReplicateSummary:
    params = plan.params
    theta, omega, alpha = params.theta, params.omega, params.alpha
    cps = plan.checkpoints
    C = len(cps)
    horizon = plan.horizon
    n_local = stop - start
    retain_values = plan.retain != "summaries-only"
    retain_paths = plan.retain == "full-paths"
    values = np.empty((n_local, C)) if retain_values else None
    paths = np.empty((n_local, horizon), dtype=np.uint8) if retain_paths else None

    B_max = min(_kernels.BLOCK_ROWS, n_local)
    T_max = min(_kernels.CHUNK_COLS, horizon)
    u = np.empty((B_max, T_max))
    hits = np.empty((B_max, T_max)) if retain_paths else None

    acc = (0, np.zeros(C), np.zeros(C), np.zeros(C), np.zeros(C), np.full(C, np.inf), np.full(C, -np.inf))

    for bstart in range(start, stop, B_max):
        bstop = min(bstart + B_max, stop)
        B = bstop - bstart
        gens = [make_stream(plan.master_seed, i, plan.rng) for i in range(bstart, bstop)]
        s = np.zeros(B)
        capvals = np.empty((B, C))
        n0 = 0
        while n0 < horizon:
            cur = min(T_max, horizon - n0)
            for i, g in enumerate(gens):
                u[i, :cur] = g.random(cur)
            uv = u[:B, :cur]
            inv = _kernels.inv_steps(n0, cur)
            lo = int(np.searchsorted(cps, n0, side="right"))
            hi = int(np.searchsorted(cps, n0 + cur, side="right"))
            if retain_paths:
                s_before = s.copy()
                hv = hits[:B, :cur]
                _kernels.advance_chunk_record(s, n0, uv, inv, theta, omega, alpha, hv)
                paths[bstart - start : bstop - start, n0 : n0 + cur] = hv.astype(np.uint8)
                if hi > lo:
                    s_chunk = s_before[:, None] + np.cumsum(hv, axis=1)
                    capvals[:, lo:hi] = s_chunk[:, cps[lo:hi] - n0 - 1]
            else:
                cap_local = (cps[lo:hi] - n0 - 1).astype(np.int64)
                _kernels.advance_chunk(
                    s, n0, uv, inv, theta, omega, alpha, cap_local, capvals[:, lo:hi]
                )
            n0 += cur
        acc = _merge_central(acc, _batch_central(capvals))
        if retain_values:
            values[bstart - start : bstop - start] = capvals

    count, mean, m2, m3, m4, minv, maxv = acc
    return ReplicateSummary(
        plan=plan,
        rep_start=start,
        rep_stop=stop,
        count=count,
        mean=mean,
        m2=m2,
        m3=m3,
        m4=m4,
        minv=minv,
        maxv=maxv,
        values=values,
        paths=paths,
    )


def merge(a: ReplicateSummary, b: ReplicateSummary) -> ReplicateSummary:
    """Combine two summaries of disjoint replicate ranges of the same plan."""
    if not a.plan.same_experiment(b.plan):
        raise ConfigurationError("cannot merge summaries of different plans/checkpoints")
    if a.count == 0:
        return b
    if b.count == 0:
        return a
    if a.rep_start < b.rep_stop and b.rep_start < a.rep_stop:
        raise ConfigurationError("cannot merge overlapping replicate ranges")
    first, second = (a, b) if a.rep_start <= b.rep_start else (b, a)
    n, mean, m2, m3, m4, minv, maxv = _merge_central(
        (first.count, first.mean, first.m2, first.m3, first.m4, first.minv, first.maxv),
        (second.count, second.mean, second.m2, second.m3, second.m4, second.minv, second.maxv),
    )
    values = None
    paths = None
    if first.values is not None and second.values is not None:
        values = np.concatenate([first.values, second.values], axis=0)
    if first.paths is not None and second.paths is not None:
        paths = np.concatenate([first.paths, second.paths], axis=0)
    return ReplicateSummary(
        plan=a.plan,
        rep_start=min(a.rep_start, b.rep_start),
        rep_stop=max(a.rep_stop, b.rep_stop),
        count=n,
        mean=mean,
        m2=m2,
        m3=m3,
        m4=m4,
        minv=minv,
        maxv=maxv,
        values=values,
        paths=paths,
    )


def run(plan: ExperimentPlan, threads: int = 1) -> ReplicateSummary:
    """Execute the plan; results are independent of `threads` byte-for-byte."""
    shards = [
        (i, min(i + plan.shard_size, plan.replicates))
        for i in range(0, plan.replicates, plan.shard_size)
    ]
    if threads > 1 and len(shards) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            summaries = list(pool.map(lambda rg: _run_shard(plan, *rg), shards))
    else:
        summaries = [_run_shard(plan, a, b) for a, b in shards]
    total = summaries[0]
    for s in summaries[1:]:
        total = merge(total, s)
    return total


def metadata(summary: ReplicateSummary) -> dict:
    """Provenance block embedded in output files."""
    plan = summary.plan
    return {
        "theta": plan.params.theta,
        "p": plan.params.p,
        "alpha": plan.params.alpha,
        "horizon": plan.horizon,
        "replicates": plan.replicates,
        "checkpoints": [int(n) for n in plan.checkpoints],
        "master_seed": plan.master_seed,
        "rng": plan.rng,
        "stream": "SeedSequence([master_seed, replicate_index])",
        "retain": plan.retain,
        "backend": summary.backend,
    }

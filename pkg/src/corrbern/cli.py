"""Command-line front end: simulate, pmf, moments, verify.

Exit codes: 0 success (for verify: all gating checks passed), 1 a gating
verification check failed, 2 configuration or usage error.  Soft
(corridor/trend) checks are reported but never affect the exit code.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, moments, verify
from .config import Config, parse_config
from .exceptions import ConfigurationError
from .montecarlo import ExperimentPlan, metadata, run
from .process import exact_pmf
from .rng import derive_seed

THEOREM_REGIMES = {
    "lln": {"diffusive", "critical", "superdiffusive"},
    "clt": {"diffusive", "critical"},
    "fclt_cov": {"diffusive"},
    "asclt": {"diffusive", "critical"},
    "lil": {"diffusive", "critical"},
    "qsl": {"diffusive", "critical"},
    "l_moments": {"superdiffusive"},
    "strong_law": {"superdiffusive"},
    "fluctuation_clt": {"superdiffusive"},
    "fluctuation_lil": {"superdiffusive"},
}

_AUTO_THEOREMS = {
    "diffusive": ["lln", "clt", "fclt_cov", "asclt", "lil", "qsl"],
    "critical": ["lln", "clt", "asclt", "lil", "qsl"],
    "superdiffusive": ["lln", "l_moments", "strong_law", "fluctuation_clt", "fluctuation_lil"],
}


def _provenance(cfg: Config, seed: int) -> dict:
    return {
        "tool": "corrbern",
        "version": __version__,
        "theta": cfg.model.theta,
        "p": cfg.model.p,
        "alpha": cfg.model.alpha,
        "master_seed": seed,
    }


def _write_csv(path: Path, fieldnames, rows, provenance: dict) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        for key in sorted(provenance):
            fh.write(f"# {key}={provenance[key]}\n")
        writer = csv.writer(fh)
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow(row)


def _write_json(path: Path, obj) -> None:
    with path.open("w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _outdir(cfg: Config, args) -> Path:
    out = Path(args.out if args.out else cfg.output["directory"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seed(cfg: Config, args) -> int:
    return args.seed if args.seed is not None else cfg.experiment["master_seed"]


def _formats(cfg: Config, args) -> str:
    return args.format if args.format else cfg.output["formats"]


def _build_plan(cfg: Config, seed: int, checkpoints=None, retain=None) -> ExperimentPlan:
    exp = cfg.experiment
    return ExperimentPlan(
        params=cfg.model,
        horizon=exp["horizon"],
        checkpoints=cfg.checkpoints if checkpoints is None else checkpoints,
        replicates=exp["replicates"],
        master_seed=seed,
        retain=retain if retain is not None else exp["retain"],
        rng=exp["rng"],
        shard_size=exp["shard_size"],
    )


def cmd_simulate(cfg: Config, args) -> int:
    seed = _seed(cfg, args)
    out = _outdir(cfg, args)
    fmt = _formats(cfg, args)
    summary = run(_build_plan(cfg, seed), threads=args.threads)
    rows = summary.checkpoint_rows()
    meta = metadata(summary)
    meta.update(_provenance(cfg, seed))
    if fmt in ("csv", "both"):
        _write_csv(
            out / "summary.csv",
            ["n", "mean", "var", "skew", "exkurt", "min", "max"],
            [[r["n"], r["mean"], r["var"], r["skew"], r["exkurt"], r["min"], r["max"]] for r in rows],
            _provenance(cfg, seed),
        )
    if fmt in ("json", "both"):
        _write_json(out / "summary.json", {"metadata": meta, "checkpoints": rows})
    _write_json(out / "metadata.json", meta)
    print(f"wrote per-checkpoint summary for {summary.count} replicates to {out}")
    return 0


def cmd_pmf(cfg: Config, args) -> int:
    seed = _seed(cfg, args)
    out = _outdir(cfg, args)
    fmt = _formats(cfg, args)
    n = cfg.experiment["horizon"]
    pmf = exact_pmf(cfg.model, n, max_n=cfg.experiment["pmf_cap"])
    mean_exact = moments.mean_Sn(cfg.model, n)
    var_exact = moments.variance_Sn(cfg.model, n)
    mean_rel = abs(pmf.mean() - mean_exact) / max(1.0, abs(mean_exact))
    var_rel = abs(pmf.variance() - var_exact) / max(1.0, abs(var_exact))
    prov = _provenance(cfg, seed)
    prov["n"] = n
    if fmt in ("csv", "both"):
        _write_csv(
            out / "pmf.csv",
            ["k", "prob"],
            [[k, float(p)] for k, p in enumerate(pmf.probs)],
            prov,
        )
    if fmt in ("json", "both"):
        _write_json(
            out / "pmf.json",
            {"metadata": prov, "probs": [float(p) for p in pmf.probs]},
        )
    print(
        f"law of S_n at n={n}: mean={pmf.mean():.12g} (moments agree to {mean_rel:.2e}), "
        f"var={pmf.variance():.12g} (agree to {var_rel:.2e})"
    )
    if cfg.model.theta > 0.5:
        print(f"local maxima of the pmf (bimodality indicator, exploratory): {pmf.local_maxima()}")
    return 0


def cmd_moments(cfg: Config, args) -> int:
    seed = _seed(cfg, args)
    out = _outdir(cfg, args)
    fmt = _formats(cfg, args)
    params = cfg.model
    ns = cfg.checkpoints
    es, es2 = moments.moments_Sn_recursive(params, ns)
    var = es2 - es * es
    mn = moments.mean_Mn(params)
    with_asym = params.alpha == params.p
    with_l = params.theta > 0.5
    fields = ["n", "mean_Sn", "second_moment_Sn", "var_Sn", "mean_Mn", "second_moment_Mn"]
    if with_asym:
        fields.append("var_asymptotic")
    rows = []
    for j, n in enumerate(ns):
        n = int(n)
        row = [n, float(es[j]), float(es2[j]), float(var[j]), mn, moments.second_moment_Mn(params, n)]
        if with_asym:
            row.append(moments.variance_asymptotic(params, n))
        rows.append(row)
    prov = _provenance(cfg, seed)
    if with_l:
        lm = moments.moments_L(params)
        prov["mean_L"] = lm.mean_l
        prov["second_moment_L"] = lm.second_moment_l
        print(f"limit variable: E[L]={lm.mean_l:.6g}, E[L^2]={lm.second_moment_l:.6g}")
    else:
        prov["note"] = "L columns absent: theta <= 1/2"
    if fmt in ("csv", "both"):
        _write_csv(out / "moments.csv", fields, rows, prov)
    if fmt in ("json", "both"):
        _write_json(
            out / "moments.json",
            {"metadata": prov, "columns": fields, "rows": rows},
        )
    print(f"wrote exact moment table for {len(ns)} step counts to {out}")
    return 0


def _resolve_theorems(cfg: Config, regime: str) -> list[str]:
    spec = cfg.verify["theorems"].strip()
    if spec == "auto":
        return list(_AUTO_THEOREMS[regime])
    names = [tok for tok in spec.replace(",", " ").split() if tok]
    for name in names:
        if name not in THEOREM_REGIMES:
            raise ConfigurationError(f"unknown theorem check {name!r}")
        if regime not in THEOREM_REGIMES[name]:
            raise ConfigurationError(
                f"theorem check {name!r} does not apply to the {regime} regime "
                f"(theta={cfg.model.theta})"
            )
    return names


def cmd_verify(cfg: Config, args) -> int:
    seed = _seed(cfg, args)
    out = _outdir(cfg, args)
    fmt = _formats(cfg, args)
    params = cfg.model
    regime = verify.regime_of(params.theta)
    verify.assert_internal_consistency(params)
    theorems = _resolve_theorems(cfg, regime)
    ver = cfg.verify
    horizon = cfg.experiment["horizon"]

    cps = set(int(n) for n in cfg.checkpoints)
    profile_base = None
    if "fclt_cov" in theorems:
        if not 0.0 < ver["cov_s"] <= ver["cov_t"] <= 1.0:
            raise ConfigurationError("need 0 < cov_s <= cov_t <= 1")
        cps.add(int(math.floor(horizon * ver["cov_s"])))
        cps.add(int(math.floor(horizon * ver["cov_t"])))
    if "fluctuation_clt" in theorems:
        if not 1 <= ver["fluct_n"] < horizon:
            raise ConfigurationError("fluct_n must lie in [1, horizon)")
        cps.add(int(ver["fluct_n"]))
        cps.add(horizon)
    if "strong_law" in theorems:
        t_max = max(ver["profile_t"])
        profile_base = int(horizon // t_max)
        if profile_base < 1:
            raise ConfigurationError("profile_t values too large for the horizon")
        for t in ver["profile_t"]:
            cps.add(int(math.floor(profile_base * t)))

    needs_values = bool(
        {"clt", "fclt_cov", "l_moments", "strong_law", "fluctuation_clt", "fluctuation_lil"}
        & set(theorems)
    )
    plan = _build_plan(
        cfg,
        seed,
        checkpoints=sorted(cps),
        retain="per-replicate-values" if needs_values else "summaries-only",
    )
    summary = run(plan, threads=args.threads)

    reports: list[verify.VerificationReport] = []
    path_stats = None
    if {"asclt", "qsl"} & set(theorems):
        grid = np.linspace(ver["grid_min"], ver["grid_max"], ver["grid_points"])
        path_stats = verify.collect_path_stats(
            params,
            ver["asclt_horizon"],
            n_paths=1,
            master_seed=derive_seed(seed, 1),
            grid=grid if "asclt" in theorems else None,
            qsl_orders=tuple(ver["qsl_orders"]) if "qsl" in theorems else (),
            rng=cfg.experiment["rng"],
        )

    for name in theorems:
        if name == "lln":
            reports.append(verify.lln_check(summary, tol=ver["lln_tol"]))
        elif name == "clt":
            tols = {}
            if ver["ks_tol"] is not None:
                tols["ks"] = ver["ks_tol"]
            if ver["var_tol"] is not None:
                tols["var_rel_err"] = ver["var_tol"]
            reports.append(verify.clt_check(summary, tolerances=tols or None))
        elif name == "fclt_cov":
            reports.append(
                verify.fclt_covariance_check(
                    summary, ver["cov_s"], ver["cov_t"], n_base=horizon, tol=ver["cov_tol"]
                )
            )
        elif name == "asclt":
            reports.append(verify.asclt_empirical(path_stats, tol=ver["asclt_tol"]))
        elif name == "qsl":
            for r in ver["qsl_orders"]:
                reports.append(verify.qsl_average(path_stats, r, tol=ver["qsl_tol"]))
        elif name == "lil":
            lil_stats = verify.collect_path_stats(
                params,
                ver["lil_horizon"],
                n_paths=ver["lil_paths"],
                master_seed=derive_seed(seed, 2),
                lil=True,
                lil_min_n=ver["lil_min_n"],
                rng=cfg.experiment["rng"],
            )
            reports.append(
                verify.lil_check(
                    lil_stats, lo=ver["lil_lo"], hi=ver["lil_hi"], min_frac=ver["lil_frac"]
                )
            )
        elif name == "l_moments":
            reports.append(verify.l_moments_check(summary, m2_tol=ver["l_m2_tol"]))
        elif name == "strong_law":
            reports.append(verify.strong_law_profile(summary, ver["profile_t"], profile_base))
        elif name == "fluctuation_clt":
            reports.append(
                verify.fluctuation_clt_check(
                    summary,
                    ver["fluct_n"],
                    horizon,
                    tolerances={"var_rel_err": ver["fluct_var_tol"], "ks": ver["fluct_ks_tol"]},
                )
            )
        elif name == "fluctuation_lil":
            reports.append(
                verify.fluctuation_lil_check(
                    summary, lo=ver["lil_lo"], hi=ver["lil_hi"], min_frac=ver["lil_frac"]
                )
            )

    csv_rows = []
    gate_ok = True
    for report in reports:
        if fmt in ("json", "both"):
            _write_json(out / f"report_{report.theorem}.json", report.to_dict())
        csv_rows.extend(report.csv_rows())
        status = "pass" if report.all_passed else "FAIL"
        kind = "soft" if report.soft else "hard"
        if not report.soft and not report.all_passed:
            gate_ok = False
        print(f"[{status}] {report.theorem} ({kind}) " + ", ".join(
            f"{k}={v:.4g}" for k, v in sorted(report.statistics.items()) if isinstance(v, float)
        ))
    if fmt in ("csv", "both"):
        _write_csv(
            out / "reports.csv",
            ["theorem", "statistic", "value", "tolerance", "passed"],
            csv_rows,
            _provenance(cfg, seed),
        )
    _write_json(out / "metadata.json", {**metadata(summary), **_provenance(cfg, seed)})
    return 0 if gate_ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="corrbern",
        description="Simulate a success-rate-reinforced Bernoulli process and "
        "verify its limit behaviour.",
    )
    parser.add_argument("--version", action="version", version=f"corrbern {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("simulate", "run replicates and write per-checkpoint summary statistics"),
        ("pmf", "exact law of the success count by dynamic programming"),
        ("moments", "exact moment tables"),
        ("verify", "run the limit-theorem verification suite"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the INI config file")
        p.add_argument("--seed", type=int, default=None, help="override master seed")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument("--threads", type=int, default=1, help="worker threads")
        p.add_argument(
            "--format", choices=["csv", "json", "both"], default=None, help="output formats"
        )
    args = parser.parse_args(argv)
    commands = {
        "simulate": cmd_simulate,
        "pmf": cmd_pmf,
        "moments": cmd_moments,
        "verify": cmd_verify,
    }
    try:
        cfg = parse_config(args.config)
        return commands[args.command](cfg, args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Subcommands: ``test`` (directional/joint causal tests on two summary files),
``simulate`` (Monte-Carlo scenarios), ``diagnose`` (identification checks on
a ground-truth configuration), and ``truncnorm`` (truncated-normal moments,
a debugging aid). Exit codes: 0 success, 2 input error, 3 numerical
degeneracy.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import secrets
import sys
from dataclasses import dataclass, replace

import numpy as np

from .benchmarks import BenchmarkMethod, BenchmarkReport, mr_egger, mr_median, overall_ivw
from .errors import DegeneracyError, InputError
from .focusing import (
    Direction,
    Estimator,
    FocusConfig,
    TauSRule,
    TestReport,
    focused_mask,
    relevant_mask,
    test_direction,
)
from .gwasio import (
    SCHEMA_VERSION,
    HarmonizeMode,
    ReportFormat,
    emit_report,
    harmonize,
    load_gwas,
    parse_col_map,
    write_tsv_rows,
)
from .model import TruthConfig, diagnose_identification
from .simulation import (
    Method,
    ScenarioConfig,
    load_seed_effects,
    run_grid,
    run_scenario,
    synthetic_seed,
)
from .truncnorm import TruncSpec, truncnorm_mean, truncnorm_var

_FOCUSED_ESTIMATORS = {"ivw": Estimator.FOCUSED_IVW, "median": Estimator.FOCUSED_MEDIAN}
_BENCHMARK_ESTIMATORS = {
    "overall-ivw": BenchmarkMethod.OVERALL_IVW,
    "mr-median": BenchmarkMethod.MR_MEDIAN,
    "mr-egger": BenchmarkMethod.MR_EGGER,
}


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration of one ``test`` invocation."""

    focus: FocusConfig
    estimator: str
    direction: str
    harmonize_mode: HarmonizeMode
    rng_seed: int
    out_path: str | None
    fmt: ReportFormat
    col_map: dict[str, str] | None
    n_boot: int
    emit_snps: str | None
    emit_density: str | None

    def __post_init__(self):
        if self.emit_density is not None and self.estimator not in ("ivw", "overall-ivw"):
            raise InputError("--emit-density applies to the ivw and overall-ivw estimators only")
        if self.n_boot < 2:
            raise InputError("--n-boot must be at least 2")


def _add_common_output_args(sub):
    sub.add_argument("--seed", type=int, default=None, help="RNG seed; generated and printed if absent")
    sub.add_argument("--out", default=None, help="output path (stdout if absent)")
    sub.add_argument("--format", default="json", choices=["json", "tsv"], help="output format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bidirmr",
        description="Bi-directional causal-effect tests from two-sample GWAS summary statistics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="test causal directions between two traits")
    p_test.add_argument("--exposure", required=True, help="TSV of exposure-trait summary statistics")
    p_test.add_argument("--outcome", required=True, help="TSV of outcome-trait summary statistics")
    p_test.add_argument("--tau-f", type=float, default=1.5, help="outcome-association filter threshold")
    p_test.add_argument("--tau-s", default="auto", help="relevance threshold, or 'auto' for quantile(1-1/p)")
    p_test.add_argument("--alpha", type=float, default=0.05, help="significance level")
    p_test.add_argument(
        "--estimator",
        default="ivw",
        choices=sorted(_FOCUSED_ESTIMATORS) + sorted(_BENCHMARK_ESTIMATORS),
    )
    p_test.add_argument("--direction", default="both", choices=["dy", "yd", "both", "joint"])
    p_test.add_argument("--col-map", default=None, help="column aliases, e.g. 'b=beta,rsid=id'")
    p_test.add_argument("--mode", default="id", choices=["id", "allele"], help="harmonization mode")
    p_test.add_argument("--n-boot", type=int, default=2000, help="bootstrap replicates for median tests")
    p_test.add_argument("--emit-snps", default=None, help="write per-SNP membership/ratio TSV here")
    p_test.add_argument("--emit-density", default=None, help="write per-SNP IVW contribution TSV here")
    _add_common_output_args(p_test)
    p_test.set_defaults(func=_cmd_test)

    p_sim = sub.add_parser("simulate", help="run a Monte-Carlo scenario")
    src = p_sim.add_mutually_exclusive_group(required=True)
    src.add_argument("--synthetic", type=int, default=None, metavar="P", help="synthetic seed with P SNPs")
    src.add_argument("--seed-file", default=None, help="TSV with alpha_d, alpha_y, se_d, se_y columns")
    p_sim.add_argument("--kappa", type=float, default=1.0, help="activation-probability exponent")
    p_sim.add_argument("--beta-dy", type=float, default=0.0)
    p_sim.add_argument("--beta-yd", type=float, default=0.0)
    p_sim.add_argument("--reps", type=int, default=1000)
    p_sim.add_argument("--methods", default="focused_ivw", help="comma list of methods to run")
    p_sim.add_argument("--tau-f", type=float, default=1.5)
    p_sim.add_argument("--tau-s", default="auto")
    p_sim.add_argument("--alpha", type=float, default=0.05)
    p_sim.add_argument("--n-boot", type=int, default=2000)
    p_sim.add_argument(
        "--enforce-separation",
        type=float,
        default=None,
        metavar="C1",
        help="amplify active effects to c1*tau_f*sqrt(log p) noise units",
    )
    p_sim.add_argument("--grid", default=None, help="comma list of BETA_DY:BETA_YD pairs")
    _add_common_output_args(p_sim)
    p_sim.set_defaults(func=_cmd_simulate)

    p_diag = sub.add_parser("diagnose", help="identification diagnostics for a ground truth")
    p_diag.add_argument("--input", required=True, help="truth configuration (.json, or TSV columns pi_d pi_y se_d se_y)")
    p_diag.add_argument("--beta-dy", type=float, default=None, help="causal effect for TSV input")
    p_diag.add_argument("--beta-yd", type=float, default=None, help="causal effect for TSV input")
    p_diag.add_argument("--zero-tol", type=float, default=1e-12)
    _add_common_output_args(p_diag)
    p_diag.set_defaults(func=_cmd_diagnose)

    p_tn = sub.add_parser("truncnorm", help="truncated-normal mean and variance")
    p_tn.add_argument("--a", type=float, required=True, help="lower truncation bound")
    p_tn.add_argument("--b", type=float, required=True, help="upper truncation bound")
    p_tn.add_argument("--mu", type=float, default=0.0, help="location of the untruncated normal")
    _add_common_output_args(p_tn)
    p_tn.set_defaults(func=_cmd_truncnorm)

    return parser


def _resolve_seed(args) -> int:
    if args.seed is None:
        seed = secrets.randbits(32)
        print(f"seed: {seed}", file=sys.stderr)
        return seed
    return args.seed


def _focus_config(tau_f: float, tau_s: str, alpha: float) -> FocusConfig:
    if tau_s == "auto":
        return FocusConfig(tau_f=tau_f, alpha=alpha, tau_s_rule=TauSRule.ONE_OVER_P)
    try:
        tau_s_value = float(tau_s)
    except ValueError:
        raise InputError(f"--tau-s must be 'auto' or a number, got {tau_s!r}") from None
    return FocusConfig(tau_f=tau_f, tau_s=tau_s_value, alpha=alpha, tau_s_rule=TauSRule.EXPLICIT)


def _emit(document, args) -> None:
    text = emit_report(document, ReportFormat(args.format), args.out)
    if args.out is None:
        sys.stdout.write(text)


def _focused_row(report: TestReport) -> dict:
    return {
        "test": "directional",
        "direction": report.direction,
        "estimator": report.estimator,
        "alpha": report.alpha,
        "tau_f": report.tau_f,
        "tau_s": report.tau_s,
        "estimate": report.estimate,
        "se": report.null_sd,
        "z_score": report.z_score,
        "p_value": report.p_value,
        "reject": report.reject,
        "empty_set_reject": report.empty_set_reject,
        "n_selected": report.focused_size,
        "weight_sum": report.weight_sum,
        "max_weight_share": report.max_weight_share,
        "n_dropped_zero_denom": report.n_dropped_zero_denom,
        "bootstrap_inference": report.bootstrap_inference,
        "intercept": None,
        "intercept_se": None,
        "selected_ids": list(report.focused_ids),
    }


def _benchmark_row(report: BenchmarkReport, alpha: float, tau_f: float | None) -> dict:
    return {
        "test": "directional",
        "direction": report.direction,
        "estimator": report.method,
        "alpha": alpha,
        "tau_f": tau_f,
        "tau_s": report.tau_s,
        "estimate": report.estimate,
        "se": report.se,
        "z_score": report.z_score,
        "p_value": report.p_value,
        "reject": report.p_value <= alpha,
        "empty_set_reject": False,
        "n_selected": len(report.relevant_ids),
        "weight_sum": None,
        "max_weight_share": None,
        "n_dropped_zero_denom": 0,
        "bootstrap_inference": report.method is BenchmarkMethod.MR_MEDIAN,
        "intercept": report.intercept,
        "intercept_se": report.intercept_se,
        "selected_ids": list(report.relevant_ids),
    }


def _joint_row(estimator, alpha: float, reject: bool) -> dict:
    return {
        "test": "joint",
        "direction": "joint",
        "estimator": estimator,
        "alpha": alpha,
        "tau_f": None,
        "tau_s": None,
        "estimate": None,
        "se": None,
        "z_score": None,
        "p_value": None,
        "reject": reject,
        "empty_set_reject": False,
        "n_selected": None,
        "weight_sum": None,
        "max_weight_share": None,
        "n_dropped_zero_denom": 0,
        "bootstrap_inference": False,
        "intercept": None,
        "intercept_se": None,
        "selected_ids": [],
    }


def _run_estimator(panel, direction, cfg, name, rng, n_boot):
    if name in _FOCUSED_ESTIMATORS:
        report = test_direction(panel, direction, cfg, _FOCUSED_ESTIMATORS[name], rng, n_boot)
        return _focused_row(report)
    method = _BENCHMARK_ESTIMATORS[name]
    tau_s = cfg.resolve_tau_s(len(panel))
    if method is BenchmarkMethod.OVERALL_IVW:
        report = overall_ivw(panel, direction, tau_s)
    elif method is BenchmarkMethod.MR_MEDIAN:
        report = mr_median(panel, direction, tau_s, rng, n_boot)
    else:
        report = mr_egger(panel, direction, tau_s)
    return _benchmark_row(report, cfg.alpha, None)


def _emit_snp_table(path, panel, cfg):
    tau_s = cfg.resolve_tau_s(len(panel))
    f_dy = focused_mask(panel, Direction.D_TO_Y, cfg)
    f_yd = focused_mask(panel, Direction.Y_TO_D, cfg)
    r_dy = relevant_mask(panel, Direction.D_TO_Y, tau_s)
    r_yd = relevant_mask(panel, Direction.Y_TO_D, tau_s)
    columns = [
        "id", "beta_d", "se_d", "beta_y", "se_y",
        "relevant_dy", "relevant_yd", "focused_dy", "focused_yd", "ratio_dy", "ratio_yd",
    ]
    rows = []
    for j, snp_id in enumerate(panel.ids):
        ratio_dy = panel.beta_y[j] / panel.beta_d[j] if panel.beta_d[j] != 0.0 else None
        ratio_yd = panel.beta_d[j] / panel.beta_y[j] if panel.beta_y[j] != 0.0 else None
        rows.append(
            [
                snp_id,
                float(panel.beta_d[j]), float(panel.se_d[j]),
                float(panel.beta_y[j]), float(panel.se_y[j]),
                bool(r_dy[j]), bool(r_yd[j]), bool(f_dy[j]), bool(f_yd[j]),
                ratio_dy, ratio_yd,
            ]
        )
    write_tsv_rows(path, columns, rows)


def _emit_density_table(path, rows_by_direction):
    columns = ["direction", "id", "ratio", "weight", "contribution"]
    rows = []
    for direction, row in rows_by_direction:
        ids = row["selected_ids"]
        weights = row["_density_weights"]
        ratios = row["_density_ratios"]
        total = sum(weights)
        for snp_id, weight, ratio in zip(ids, weights, ratios):
            share = weight / total if total > 0 else None
            contribution = share * ratio if share is not None else None
            rows.append([direction, snp_id, ratio, share, contribution])
    write_tsv_rows(path, columns, rows)


def _attach_density(panel, direction, row):
    # Per-SNP IVW pieces for density plots of the normalized contributions.
    idx = panel.indices_of(row["selected_ids"])
    if direction is Direction.D_TO_Y:
        eb, ob, os_ = panel.beta_d[idx], panel.beta_y[idx], panel.se_y[idx]
    else:
        eb, ob, os_ = panel.beta_y[idx], panel.beta_d[idx], panel.se_d[idx]
    row["_density_weights"] = ((eb / os_) ** 2).tolist()
    row["_density_ratios"] = (ob / eb).tolist()


def _cmd_test(args) -> int:
    run = RunConfig(
        focus=_focus_config(args.tau_f, args.tau_s, args.alpha),
        estimator=args.estimator,
        direction=args.direction,
        harmonize_mode=HarmonizeMode(args.mode),
        rng_seed=_resolve_seed(args),
        out_path=args.out,
        fmt=ReportFormat(args.format),
        col_map=parse_col_map(args.col_map) if args.col_map else None,
        n_boot=args.n_boot,
        emit_snps=args.emit_snps,
        emit_density=args.emit_density,
    )
    rng = np.random.default_rng(run.rng_seed)
    exposure = load_gwas(args.exposure, run.col_map)
    outcome = load_gwas(args.outcome, run.col_map)
    panel = harmonize(exposure, outcome, run.harmonize_mode)
    cfg = run.focus

    if run.direction == "joint":
        half = replace(cfg, alpha=cfg.alpha / 2.0)
        sub_rows = [
            _run_estimator(panel, Direction.D_TO_Y, half, run.estimator, rng, run.n_boot),
            _run_estimator(panel, Direction.Y_TO_D, half, run.estimator, rng, run.n_boot),
        ]
        joint_reject = bool(sub_rows[0]["reject"] or sub_rows[1]["reject"])
        rows = sub_rows + [_joint_row(sub_rows[0]["estimator"], cfg.alpha, joint_reject)]
        density_directions = [Direction.D_TO_Y, Direction.Y_TO_D]
    else:
        directions = {
            "dy": [Direction.D_TO_Y],
            "yd": [Direction.Y_TO_D],
            "both": [Direction.D_TO_Y, Direction.Y_TO_D],
        }[run.direction]
        rows = [
            _run_estimator(panel, d, cfg, run.estimator, rng, run.n_boot) for d in directions
        ]
        density_directions = directions

    if run.emit_density is not None:
        pairs = []
        for direction, row in zip(density_directions, rows):
            if row["selected_ids"]:
                _attach_density(panel, direction, row)
                pairs.append((direction.value, row))
        _emit_density_table(run.emit_density, pairs)
        for _, row in pairs:
            del row["_density_weights"], row["_density_ratios"]
    if run.emit_snps is not None:
        _emit_snp_table(run.emit_snps, panel, cfg)

    document = {
        "schema_version": SCHEMA_VERSION,
        "command": "test",
        "seed": run.rng_seed,
        "n_snps": len(panel),
        "params": {
            "tau_f": cfg.tau_f,
            "tau_s": cfg.resolve_tau_s(len(panel)),
            "alpha": cfg.alpha,
            "estimator": run.estimator,
            "direction": run.direction,
            "harmonize_mode": run.harmonize_mode,
            "n_boot": run.n_boot,
        },
        "results": rows,
    }
    _emit(document, args)
    return 0


def _parse_methods(spec: str) -> tuple[Method, ...]:
    methods = []
    for item in spec.split(","):
        name = item.strip().replace("-", "_")
        if not name:
            continue
        try:
            methods.append(Method(name))
        except ValueError:
            raise InputError(
                f"unknown method {item.strip()!r}; choose from "
                + ", ".join(m.value for m in Method)
            ) from None
    if not methods:
        raise InputError("--methods must name at least one method")
    return tuple(methods)


def _parse_grid(spec: str) -> list[tuple[float, float]]:
    pairs = []
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split(":")
        if len(parts) != 2:
            raise InputError(f"grid entry {item!r} is not of the form BETA_DY:BETA_YD")
        try:
            pairs.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise InputError(f"grid entry {item!r} has non-numeric parts") from None
    if not pairs:
        raise InputError("--grid must contain at least one BETA_DY:BETA_YD pair")
    return pairs


def _scenario_rows(report, beta_dy, beta_yd):
    rows = []
    for method in report.methods:
        for direction in ("dy", "yd"):
            rows.append(
                {
                    "beta_dy": beta_dy,
                    "beta_yd": beta_yd,
                    "method": method,
                    "direction": direction,
                    "rejection_rate": report.rejection_rates[method][direction],
                    "valid_iv_proportion": report.valid_iv_proportions[method][direction],
                    "empty_set_rate": report.empty_set_rates[method][direction],
                    "error_count": report.error_counts[method][direction],
                }
            )
    return rows


def _cmd_simulate(args) -> int:
    seed = _resolve_seed(args)
    if args.synthetic is not None:
        seed_rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1,)))
        effects = synthetic_seed(args.synthetic, seed_rng)
    else:
        effects = load_seed_effects(args.seed_file)
    cfg = _focus_config(args.tau_f, args.tau_s, args.alpha)
    scenario = ScenarioConfig(
        kappa=args.kappa,
        beta_dy=args.beta_dy,
        beta_yd=args.beta_yd,
        n_reps=args.reps,
        focus=cfg,
        methods=_parse_methods(args.methods),
        rng_seed=seed,
        enforce_separation_c1=args.enforce_separation,
        n_boot=args.n_boot,
    )
    params = {
        "p": effects.p,
        "kappa": args.kappa,
        "n_reps": args.reps,
        "tau_f": cfg.tau_f,
        "tau_s": cfg.resolve_tau_s(effects.p),
        "alpha": cfg.alpha,
        "methods": [m.value for m in scenario.methods],
        "enforce_separation_c1": args.enforce_separation,
        "n_boot": args.n_boot,
    }
    if args.grid is not None:
        rows = []
        summaries = []
        for (beta_dy, beta_yd), report in run_grid(effects, scenario, _parse_grid(args.grid)):
            rows.extend(_scenario_rows(report, beta_dy, beta_yd))
            summaries.append(
                {
                    "beta_dy": beta_dy,
                    "beta_yd": beta_yd,
                    "mean_rho": list(report.mean_rho),
                    "mean_corr_pi": report.mean_corr_pi,
                }
            )
        document = {
            "schema_version": SCHEMA_VERSION,
            "command": "simulate",
            "seed": seed,
            "params": params,
            "cells": summaries,
            "results": rows,
        }
    else:
        report = run_scenario(effects, scenario)
        document = {
            "schema_version": SCHEMA_VERSION,
            "command": "simulate",
            "seed": seed,
            "params": params,
            "mean_rho": list(report.mean_rho),
            "mean_corr_pi": report.mean_corr_pi,
            "results": _scenario_rows(report, args.beta_dy, args.beta_yd),
        }
    _emit(document, args)
    return 0


def _load_truth(args) -> TruthConfig:
    path = args.input
    if path.endswith(".json"):
        with open(path, encoding="utf-8") as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}: invalid JSON ({exc})") from None
        missing = [k for k in ("pi_d", "pi_y", "se_d", "se_y") if k not in payload]
        if missing:
            raise InputError(f"{path}: missing keys {missing}")
        beta_dy = args.beta_dy if args.beta_dy is not None else payload.get("beta_dy", 0.0)
        beta_yd = args.beta_yd if args.beta_yd is not None else payload.get("beta_yd", 0.0)
        return TruthConfig(
            pi_d=payload["pi_d"],
            pi_y=payload["pi_y"],
            beta_dy=float(beta_dy),
            beta_yd=float(beta_yd),
            se_d=payload["se_d"],
            se_y=payload["se_y"],
        )
    required = ("pi_d", "pi_y", "se_d", "se_y")
    columns = {name: [] for name in required}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter="\t")
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path}: file is empty") from None
        missing = [c for c in required if c not in header]
        if missing:
            raise InputError(f"{path}: missing required columns {missing}")
        pos = {name: header.index(name) for name in required}
        for line_no, row in enumerate(reader, start=2):
            for name in required:
                try:
                    columns[name].append(float(row[pos[name]]))
                except (ValueError, IndexError):
                    raise InputError(f"{path}:{line_no}: bad value in column {name!r}") from None
    return TruthConfig(
        pi_d=columns["pi_d"],
        pi_y=columns["pi_y"],
        beta_dy=args.beta_dy if args.beta_dy is not None else 0.0,
        beta_yd=args.beta_yd if args.beta_yd is not None else 0.0,
        se_d=columns["se_d"],
        se_y=columns["se_y"],
    )


def _direction_row(direction: str, diag) -> dict:
    return {
        "direction": direction,
        "n_relevant": diag.n_relevant,
        "valid_rule": diag.valid_rule,
        "majority_rule": diag.majority_rule,
        "plurality_rule": diag.plurality_rule,
        "plurality_defined": diag.plurality_defined,
        "inside": diag.inside,
        "inside_defined": diag.inside_defined,
        "inside_critical_beta": diag.inside_critical_beta,
    }


def _cmd_diagnose(args) -> int:
    truth = _load_truth(args)
    report = diagnose_identification(truth, zero_tol=args.zero_tol)
    document = {
        "schema_version": SCHEMA_VERSION,
        "command": "diagnose",
        "p": truth.p,
        "beta_dy": truth.beta_dy,
        "beta_yd": truth.beta_yd,
        "counts": {
            "null": report.n_null,
            "valid_dy": report.n_valid_dy,
            "valid_yd": report.n_valid_yd,
            "pleiotropic": report.n_pleiotropic,
        },
        "results": [
            _direction_row("dy", report.d_to_y),
            _direction_row("yd", report.y_to_d),
        ],
    }
    _emit(document, args)
    return 0


def _cmd_truncnorm(args) -> int:
    spec = TruncSpec(lower=args.a, upper=args.b, mu=args.mu)
    document = {
        "schema_version": SCHEMA_VERSION,
        "command": "truncnorm",
        "results": [
            {
                "lower": args.a,
                "upper": args.b,
                "mu": args.mu,
                "mean": truncnorm_mean(spec),
                "variance": truncnorm_var(spec),
            }
        ],
    }
    _emit(document, args)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DegeneracyError as exc:
        print(f"degeneracy: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

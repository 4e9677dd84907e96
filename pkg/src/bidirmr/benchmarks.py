"""Comparator estimators: overall IVW, MR-Median, and MR-Egger.

These are the conventional one-directional methods run on the
relevance-screened SNP set (no outcome-side focusing, i.e. ``tau_f = inf``).
They serve as benchmarks: with bi-directional effects or correlated
pleiotropy their assumptions fail and they can reject true nulls at far more
than the nominal rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import EmptyRelevantSetError, RankDeficientError, ZeroDenominatorError
from .focusing import Direction, Panel, bootstrap_median_sd, relevant_set
from .truncnorm import std_sf

__all__ = [
    "BenchmarkMethod",
    "BenchmarkReport",
    "mr_egger",
    "mr_median",
    "overall_ivw",
]


class BenchmarkMethod(str, Enum):
    OVERALL_IVW = "overall_ivw"
    MR_MEDIAN = "mr_median"
    MR_EGGER = "mr_egger"


@dataclass(frozen=True)
class BenchmarkReport:
    """One benchmark estimate with its (method-specific) standard error.

    ``intercept``/``intercept_se`` are populated by MR-Egger only. The
    MR-Median ``se`` comes from a SNP bootstrap of the plain (unweighted)
    median; the Egger ``se`` is the classical weighted-least-squares one
    that treats the weights as exact inverse variances.
    """

    method: BenchmarkMethod
    direction: Direction
    tau_s: float
    estimate: float
    se: float
    z_score: float | None
    p_value: float
    intercept: float | None
    intercept_se: float | None
    relevant_ids: tuple[str, ...]


def _relevant_arrays(panel: Panel, direction: Direction, tau_s: float):
    ids = relevant_set(panel, direction, tau_s)
    if not ids:
        raise EmptyRelevantSetError(f"no SNP passes the relevance threshold tau_s={tau_s}")
    idx = panel.indices_of(ids)
    if direction is Direction.D_TO_Y:
        return ids, panel.beta_d[idx], panel.se_d[idx], panel.beta_y[idx], panel.se_y[idx]
    return ids, panel.beta_y[idx], panel.se_y[idx], panel.beta_d[idx], panel.se_d[idx]


def overall_ivw(panel: Panel, direction: Direction, tau_s: float) -> BenchmarkReport:
    """IVW ratio estimate over all relevance-screened SNPs.

    Identical aggregation to the focused IVW with an unbounded outcome
    filter; with no selection the null scale is ``sqrt(1 / weight_sum)``.
    """
    ids, exp_beta, _, out_beta, out_se = _relevant_arrays(panel, direction, tau_s)
    if np.any(exp_beta == 0.0):
        raise ZeroDenominatorError("ratio estimates need nonzero exposure associations")
    weights = (exp_beta / out_se) ** 2
    weight_sum = float(np.sum(weights))
    estimate = float(np.sum(weights * (out_beta / exp_beta)) / weight_sum)
    se = math.sqrt(1.0 / weight_sum)
    z = estimate / se
    return BenchmarkReport(
        method=BenchmarkMethod.OVERALL_IVW,
        direction=direction,
        tau_s=tau_s,
        estimate=estimate,
        se=se,
        z_score=z,
        p_value=2.0 * std_sf(abs(z)),
        intercept=None,
        intercept_se=None,
        relevant_ids=ids,
    )


def mr_median(
    panel: Panel,
    direction: Direction,
    tau_s: float,
    rng: np.random.Generator,
    n_boot: int = 2000,
) -> BenchmarkReport:
    """Plain median of ratio estimates over the relevance-screened set."""
    ids, exp_beta, _, out_beta, _ = _relevant_arrays(panel, direction, tau_s)
    if np.any(exp_beta == 0.0):
        raise ZeroDenominatorError("ratio estimates need nonzero exposure associations")
    ratios = out_beta / exp_beta
    estimate = float(np.median(ratios))
    se = bootstrap_median_sd(ratios, rng, n_boot)
    if se > 0.0:
        z = estimate / se
        p_value = 2.0 * std_sf(abs(z))
    else:
        z = None
        p_value = 1.0 if estimate == 0.0 else 0.0
    return BenchmarkReport(
        method=BenchmarkMethod.MR_MEDIAN,
        direction=direction,
        tau_s=tau_s,
        estimate=estimate,
        se=se,
        z_score=z,
        p_value=p_value,
        intercept=None,
        intercept_se=None,
        relevant_ids=ids,
    )


def mr_egger(panel: Panel, direction: Direction, tau_s: float) -> BenchmarkReport:
    """Weighted regression with intercept of outcome on exposure betas.

    Each SNP is first oriented so its exposure association is nonnegative
    (the regression is not invariant to per-SNP sign conventions otherwise).
    Weights are inverse squared outcome standard errors; standard errors of
    the coefficients treat those weights as exact inverse variances.
    """
    ids, exp_beta, _, out_beta, out_se = _relevant_arrays(panel, direction, tau_s)
    n = len(ids)
    if n < 3:
        raise RankDeficientError(f"Egger regression needs at least 3 relevant SNPs, got {n}")
    flip = exp_beta < 0.0
    x = np.where(flip, -exp_beta, exp_beta)
    y = np.where(flip, -out_beta, out_beta)
    if np.ptp(x) == 0.0:
        raise RankDeficientError("all oriented exposure associations are equal")

    root_w = 1.0 / out_se
    design = np.column_stack((root_w, root_w * x))
    coef, _, rank, _ = np.linalg.lstsq(design, root_w * y, rcond=None)
    if rank < 2:
        raise RankDeficientError("Egger design matrix is rank deficient")
    cov = np.linalg.inv(design.T @ design)
    intercept, slope = float(coef[0]), float(coef[1])
    se_slope = math.sqrt(cov[1, 1])
    se_intercept = math.sqrt(cov[0, 0])
    z = slope / se_slope
    return BenchmarkReport(
        method=BenchmarkMethod.MR_EGGER,
        direction=direction,
        tau_s=tau_s,
        estimate=slope,
        se=se_slope,
        z_score=z,
        p_value=2.0 * std_sf(abs(z)),
        intercept=intercept,
        intercept_se=se_intercept,
        relevant_ids=ids,
    )

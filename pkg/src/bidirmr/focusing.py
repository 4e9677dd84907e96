"""Focused instrument selection and post-selection tests for causal direction.

Testing whether trait D causally affects trait Y from two-sample summary data
is confounded by SNPs that act on Y directly: under the null "no effect of D
on Y" a SNP's outcome association is pure noise exactly when its direct
effect on Y is zero. The focused set for that direction therefore keeps SNPs
whose normalized outcome association is small, ``|beta_y| <= se_y * tau_f``,
while requiring a real exposure signal, ``|beta_d| >= se_d * tau_s``.

Selection has a price: conditional on being kept, the normalized outcome
noise of a retained SNP is a unit-variance normal truncated to
``[-tau_f, tau_f]``. The focused inverse-variance weighted statistic is a
weighted average of such truncated scores, so its null standard deviation is
``sqrt(var(trunc) / sum(weights))`` rather than ``sqrt(1 / sum(weights))``,
and the rejection region uses that deflated scale. An empty focused set is
itself evidence against the null (every candidate carries outcome signal)
and is reported as a rejection with a dedicated flag.

The second direction is tested by the same code path on a role-swapped view
of the panel. The focused median estimator is provided as a robust
companion; its p-value comes from a SNP-level bootstrap, which is a
pragmatic default rather than a derived limiting distribution, and reports
flag it as such.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    EmptyFocusedSetError,
    InputError,
    ZeroDenominatorError,
)
from .model import TruthConfig
from .truncnorm import TruncSpec, std_cdf, std_quantile, std_sf, truncnorm_mean, truncnorm_var

__all__ = [
    "Direction",
    "Estimator",
    "FocusConfig",
    "JointTestReport",
    "Panel",
    "PowerForecast",
    "SnpRecord",
    "TauSRule",
    "TestReport",
    "bootstrap_median_sd",
    "check_separation",
    "focused_ivw",
    "focused_mask",
    "focused_median",
    "focused_set",
    "null_sd_ivw",
    "power_forecast",
    "relevant_mask",
    "relevant_set",
    "test_direction",
    "test_joint_null",
]


class Direction(str, Enum):
    """Causal direction under test; ``D_TO_Y`` treats the first trait as exposure."""

    D_TO_Y = "dy"
    Y_TO_D = "yd"


class Estimator(str, Enum):
    FOCUSED_IVW = "focused_ivw"
    FOCUSED_MEDIAN = "focused_median"


class TauSRule(str, Enum):
    """How the relevance threshold is chosen: explicitly or as quantile(1 - 1/p)."""

    EXPLICIT = "explicit"
    ONE_OVER_P = "one_over_p"


@dataclass(frozen=True)
class SnpRecord:
    """Harmonized per-SNP summary statistics for both traits."""

    id: str
    beta_d: float
    se_d: float
    beta_y: float
    se_y: float

    def __post_init__(self):
        if not self.id:
            raise InputError("SNP id must be nonempty")
        for name in ("beta_d", "se_d", "beta_y", "se_y"):
            if not math.isfinite(getattr(self, name)):
                raise InputError(f"{name} must be finite for SNP {self.id!r}")
        if not (self.se_d > 0.0 and self.se_y > 0.0):
            raise InputError(f"standard errors must be positive for SNP {self.id!r}")


class Panel:
    """Immutable, id-indexed collection of SNP summary statistics.

    Stores column arrays for fast vectorized work; :attr:`records` rebuilds
    the per-SNP view on demand.
    """

    __slots__ = ("ids", "beta_d", "se_d", "beta_y", "se_y", "_index")

    def __init__(self, records: Iterable[SnpRecord]):
        records = tuple(records)
        self._init_from_arrays(
            tuple(r.id for r in records),
            np.array([r.beta_d for r in records], dtype=float),
            np.array([r.se_d for r in records], dtype=float),
            np.array([r.beta_y for r in records], dtype=float),
            np.array([r.se_y for r in records], dtype=float),
        )

    @classmethod
    def from_arrays(cls, ids, beta_d, se_d, beta_y, se_y) -> "Panel":
        panel = cls.__new__(cls)
        panel._init_from_arrays(
            tuple(str(i) for i in ids),
            np.array(beta_d, dtype=float),
            np.array(se_d, dtype=float),
            np.array(beta_y, dtype=float),
            np.array(se_y, dtype=float),
        )
        return panel

    def _init_from_arrays(self, ids, beta_d, se_d, beta_y, se_y):
        p = len(ids)
        if p < 1:
            raise InputError("a panel needs at least one SNP")
        for name, arr in (("beta_d", beta_d), ("se_d", se_d), ("beta_y", beta_y), ("se_y", se_y)):
            if arr.shape != (p,):
                raise InputError(f"{name} must have length {p}")
            if not np.all(np.isfinite(arr)):
                raise InputError(f"{name} must be finite")
        if not (np.all(se_d > 0.0) and np.all(se_y > 0.0)):
            raise InputError("standard errors must be positive")
        if any(not i for i in ids):
            raise InputError("SNP ids must be nonempty")
        index = {snp_id: j for j, snp_id in enumerate(ids)}
        if len(index) != p:
            raise InputError("SNP ids must be unique within a panel")
        for arr in (beta_d, se_d, beta_y, se_y):
            arr.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "beta_d", beta_d)
        object.__setattr__(self, "se_d", se_d)
        object.__setattr__(self, "beta_y", beta_y)
        object.__setattr__(self, "se_y", se_y)
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.ids)

    def __setattr__(self, name, value):
        raise AttributeError("Panel is immutable")

    @property
    def records(self) -> tuple[SnpRecord, ...]:
        return tuple(
            SnpRecord(
                self.ids[j],
                float(self.beta_d[j]),
                float(self.se_d[j]),
                float(self.beta_y[j]),
                float(self.se_y[j]),
            )
            for j in range(len(self))
        )

    def indices_of(self, snp_ids: Sequence[str]) -> np.ndarray:
        """Positions of the given ids, preserving their order; ids must be unique."""
        if len(set(snp_ids)) != len(snp_ids):
            raise InputError("SNP id subset must not contain duplicates")
        try:
            idx = np.fromiter((self._index[i] for i in snp_ids), dtype=np.intp, count=len(snp_ids))
        except KeyError as exc:
            raise InputError(f"SNP id {exc.args[0]!r} is not in the panel") from None
        return idx


@dataclass(frozen=True)
class FocusConfig:
    """Tuning parameters of the focusing filter and test level.

    ``tau_f`` bounds the normalized outcome association of retained SNPs
    (``inf`` disables focusing and recovers the overall estimators);
    ``tau_s`` screens for exposure relevance, either explicitly or via the
    ``ONE_OVER_P`` rule ``quantile(1 - 1/p)``.
    """

    tau_f: float = 1.5
    tau_s: float = 0.0
    alpha: float = 0.05
    tau_s_rule: TauSRule = TauSRule.ONE_OVER_P

    def __post_init__(self):
        if math.isnan(self.tau_f) or not self.tau_f > 0.0:
            raise InputError(f"tau_f must be positive, got {self.tau_f!r}")
        if not self.tau_s >= 0.0:
            raise InputError(f"tau_s must be nonnegative, got {self.tau_s!r}")
        if not 0.0 < self.alpha < 1.0:
            raise InputError(f"alpha must lie in (0, 1), got {self.alpha!r}")

    def resolve_tau_s(self, p: int) -> float:
        if self.tau_s_rule is TauSRule.EXPLICIT:
            return self.tau_s
        if p < 2:
            raise InputError("the 1/p relevance rule needs a panel with p >= 2")
        return std_quantile(1.0 - 1.0 / p)


def _roles(panel: Panel, direction: Direction):
    """(exposure_beta, exposure_se, outcome_beta, outcome_se) for a direction."""
    if direction is Direction.D_TO_Y:
        return panel.beta_d, panel.se_d, panel.beta_y, panel.se_y
    if direction is Direction.Y_TO_D:
        return panel.beta_y, panel.se_y, panel.beta_d, panel.se_d
    raise InputError(f"unknown direction {direction!r}")


def relevant_mask(panel: Panel, direction: Direction, tau_s: float) -> np.ndarray:
    """Boolean mask of SNPs with |exposure beta| >= se * tau_s."""
    if not tau_s >= 0.0:
        raise InputError(f"tau_s must be nonnegative, got {tau_s!r}")
    exp_beta, exp_se, _, _ = _roles(panel, direction)
    return np.abs(exp_beta) >= exp_se * tau_s


def relevant_set(panel: Panel, direction: Direction, tau_s: float) -> tuple[str, ...]:
    """Ids of relevance-screened SNPs, in panel order."""
    mask = relevant_mask(panel, direction, tau_s)
    return tuple(np.asarray(panel.ids, dtype=object)[mask])


def focused_mask(panel: Panel, direction: Direction, cfg: FocusConfig) -> np.ndarray:
    """Boolean mask of the focused set; both boundary comparisons are inclusive."""
    exp_beta, exp_se, out_beta, out_se = _roles(panel, direction)
    tau_s = cfg.resolve_tau_s(len(panel))
    return (np.abs(out_beta) <= out_se * cfg.tau_f) & (np.abs(exp_beta) >= exp_se * tau_s)


def focused_set(panel: Panel, direction: Direction, cfg: FocusConfig) -> tuple[str, ...]:
    """Ids of the focused set for a direction, in panel order (may be empty)."""
    mask = focused_mask(panel, direction, cfg)
    return tuple(np.asarray(panel.ids, dtype=object)[mask])


def _subset_arrays(panel: Panel, snp_ids: Sequence[str], direction: Direction):
    if len(snp_ids) == 0:
        raise EmptyFocusedSetError("the focused set is empty")
    idx = panel.indices_of(snp_ids)
    exp_beta, exp_se, out_beta, out_se = _roles(panel, direction)
    return exp_beta[idx], exp_se[idx], out_beta[idx], out_se[idx]


def focused_ivw(
    panel: Panel, snp_ids: Sequence[str], direction: Direction = Direction.D_TO_Y
) -> tuple[float, float]:
    """Inverse-variance weighted ratio estimate over a given SNP set.

    Returns ``(estimate, weight_sum)`` with weights
    ``exposure_beta^2 / outcome_se^2``; equals the slope of the
    through-origin weighted least squares of outcome on exposure betas.
    """
    exp_beta, _, out_beta, out_se = _subset_arrays(panel, snp_ids, direction)
    if np.any(exp_beta == 0.0):
        raise ZeroDenominatorError("ratio estimates need nonzero exposure associations")
    weights = (exp_beta / out_se) ** 2
    estimate = float(np.sum(weights * (out_beta / exp_beta)) / np.sum(weights))
    return estimate, float(np.sum(weights))


def focused_median(
    panel: Panel, snp_ids: Sequence[str], direction: Direction = Direction.D_TO_Y
) -> float:
    """Sample median of per-SNP ratio estimates over a given SNP set.

    Even cardinality averages the two central order statistics.
    """
    exp_beta, _, out_beta, _ = _subset_arrays(panel, snp_ids, direction)
    if np.any(exp_beta == 0.0):
        raise ZeroDenominatorError("ratio estimates need nonzero exposure associations")
    return float(np.median(out_beta / exp_beta))


def null_sd_ivw(weight_sum: float, tau_f: float) -> float:
    """Null standard deviation of the focused IVW statistic.

    The retained normalized outcome scores are truncated to
    ``[-tau_f, tau_f]`` under the null, so the scale is
    ``sqrt(var(trunc) / weight_sum)``; ``tau_f = inf`` recovers the
    unconditional ``sqrt(1 / weight_sum)``.
    """
    if not weight_sum > 0.0:
        raise InputError(f"weight_sum must be positive, got {weight_sum!r}")
    var0 = truncnorm_var(TruncSpec(-tau_f, tau_f, 0.0))
    return math.sqrt(var0 / weight_sum)


# Percentiles spanning +-1 standard deviation of a normal; the bootstrap
# spread is read off this central span rather than a raw standard deviation.
_PCTL_LO = std_cdf(-1.0)
_PCTL_HI = std_cdf(1.0)


def bootstrap_median_sd(ratios: np.ndarray, rng: np.random.Generator, n_boot: int = 2000) -> float:
    """Percentile-based bootstrap SD of the median of ``ratios``.

    Resamples SNPs with replacement and returns half the central
    one-sigma percentile span of the bootstrap medians.
    """
    ratios = np.asarray(ratios, dtype=float)
    if ratios.size == 0:
        raise EmptyFocusedSetError("cannot bootstrap an empty ratio set")
    if n_boot < 2:
        raise InputError("n_boot must be at least 2")
    idx = rng.integers(0, ratios.size, size=(n_boot, ratios.size))
    medians = np.median(ratios[idx], axis=1)
    lo, hi = np.quantile(medians, (_PCTL_LO, _PCTL_HI))
    return float((hi - lo) / 2.0)


@dataclass(frozen=True)
class TestReport:
    """Outcome of one directional test.

    ``reject`` is equivalent to ``empty_set_reject or p_value <= alpha``.
    An empty focused set rejects by construction with ``p_value`` recorded
    as 0 and ``empty_set_reject`` set, leaving the estimate fields None.
    ``null_sd`` is the truncated-normal scale for the IVW estimator and the
    bootstrap scale for the median, flagged by ``bootstrap_inference``.
    ``focused_size``, ``max_weight_share`` and ``n_dropped_zero_denom`` are
    diagnostics: no finite-sample cutoff is enforced on them.
    """

    direction: Direction
    estimator: Estimator
    alpha: float
    tau_f: float
    tau_s: float
    focused_ids: tuple[str, ...]
    focused_size: int
    estimate: float | None
    null_sd: float | None
    z_score: float | None
    p_value: float
    reject: bool
    empty_set_reject: bool
    weight_sum: float | None
    max_weight_share: float | None
    n_dropped_zero_denom: int
    bootstrap_inference: bool


def _empty_set_report(direction, estimator, cfg, tau_s, n_dropped) -> TestReport:
    return TestReport(
        direction=direction,
        estimator=estimator,
        alpha=cfg.alpha,
        tau_f=cfg.tau_f,
        tau_s=tau_s,
        focused_ids=(),
        focused_size=0,
        estimate=None,
        null_sd=None,
        z_score=None,
        p_value=0.0,
        reject=True,
        empty_set_reject=True,
        weight_sum=None,
        max_weight_share=None,
        n_dropped_zero_denom=n_dropped,
        bootstrap_inference=estimator is Estimator.FOCUSED_MEDIAN,
    )


def test_direction(
    panel: Panel,
    direction: Direction,
    cfg: FocusConfig,
    estimator: Estimator = Estimator.FOCUSED_IVW,
    rng: np.random.Generator | None = None,
    n_boot: int = 2000,
) -> TestReport:
    """Test the null of no causal effect in ``direction`` on a panel.

    Computes the focused set, rejects outright if it is empty, and otherwise
    compares the chosen estimator against its null scale: the
    truncated-normal IVW standard deviation, or the SNP bootstrap for the
    median (which requires ``rng``). SNPs with an exactly zero exposure beta
    (possible only when ``tau_s == 0``) contribute no ratio information and
    are dropped from the set, with the count reported.
    """
    estimator = Estimator(estimator)
    tau_s = cfg.resolve_tau_s(len(panel))
    mask = focused_mask(panel, direction, cfg)

    exp_beta, _, out_beta, out_se = _roles(panel, direction)
    zero_denom = mask & (exp_beta == 0.0)
    n_dropped = int(zero_denom.sum())
    mask = mask & ~zero_denom
    if not mask.any():
        return _empty_set_report(direction, estimator, cfg, tau_s, n_dropped)

    ids = tuple(np.asarray(panel.ids, dtype=object)[mask])
    eb = exp_beta[mask]
    ob = out_beta[mask]
    os_ = out_se[mask]
    weights = (eb / os_) ** 2
    weight_sum = float(np.sum(weights))
    max_share = float(np.max(weights) / weight_sum)
    ratios = ob / eb

    bootstrap = estimator is Estimator.FOCUSED_MEDIAN
    if bootstrap:
        if rng is None:
            raise InputError("focused median inference needs an rng for the SNP bootstrap")
        estimate = float(np.median(ratios))
        sd = bootstrap_median_sd(ratios, rng, n_boot)
        if sd > 0.0:
            z = estimate / sd
            p_value = 2.0 * std_sf(abs(z))
        else:
            z = None
            p_value = 1.0 if estimate == 0.0 else 0.0
        null_sd = sd
    else:
        estimate = float(np.sum(weights * ratios) / weight_sum)
        null_sd = null_sd_ivw(weight_sum, cfg.tau_f)
        z = estimate / null_sd
        p_value = 2.0 * std_sf(abs(z))

    return TestReport(
        direction=direction,
        estimator=estimator,
        alpha=cfg.alpha,
        tau_f=cfg.tau_f,
        tau_s=tau_s,
        focused_ids=ids,
        focused_size=len(ids),
        estimate=estimate,
        null_sd=null_sd,
        z_score=z,
        p_value=p_value,
        reject=p_value <= cfg.alpha,
        empty_set_reject=False,
        weight_sum=weight_sum,
        max_weight_share=max_share,
        n_dropped_zero_denom=n_dropped,
        bootstrap_inference=bootstrap,
    )


@dataclass(frozen=True)
class JointTestReport:
    """Bonferroni combination of the two directional tests.

    Each direction is tested at level ``alpha / 2``; the joint null of no
    causal effect in either direction is rejected when either rejects.
    """

    alpha: float
    reject: bool
    d_to_y: TestReport
    y_to_d: TestReport


def test_joint_null(
    panel: Panel,
    cfg: FocusConfig,
    estimator: Estimator = Estimator.FOCUSED_IVW,
    rng: np.random.Generator | None = None,
    n_boot: int = 2000,
) -> JointTestReport:
    """Test the joint null of no causal effect in either direction."""
    half = replace(cfg, alpha=cfg.alpha / 2.0)
    dy = test_direction(panel, Direction.D_TO_Y, half, estimator, rng, n_boot)
    yd = test_direction(panel, Direction.Y_TO_D, half, estimator, rng, n_boot)
    return JointTestReport(alpha=cfg.alpha, reject=dy.reject or yd.reject, d_to_y=dy, y_to_d=yd)


@dataclass(frozen=True)
class PowerForecast:
    """Normal approximation of the focused IVW statistic away from the null."""

    mu_alt: float
    sigma_alt: float
    rejection_threshold: float
    predicted_power: float


def power_forecast(
    panel: Panel,
    snp_ids: Sequence[str],
    mus: Mapping[str, float],
    cfg: FocusConfig,
    direction: Direction = Direction.D_TO_Y,
) -> PowerForecast:
    """Forecast rejection probability given hypothesized per-SNP signal.

    ``mus`` maps each id in ``snp_ids`` to its outcome signal-to-noise ratio
    (true outcome association over its standard error). Conditional on
    selection each normalized outcome estimate is a unit-variance normal
    with that location truncated to ``[-tau_f, tau_f]``, so the focused IVW
    statistic is approximately normal with

        mu    = sum_j w_j (se_out_j / beta_exp_j) E[trunc_j] / sum_j w_j
        sigma = sqrt( sum_j w_j var(trunc_j) ) / sum_j w_j

    and the forecast is the probability that such a normal lands beyond the
    null rejection threshold. With all ``mus`` zero this reproduces the null
    scale and the forecast equals ``alpha``.
    """
    exp_beta, _, _, out_se = _subset_arrays(panel, snp_ids, direction)
    if np.any(exp_beta == 0.0):
        raise ZeroDenominatorError("ratio estimates need nonzero exposure associations")
    try:
        mu_vec = np.array([float(mus[i]) for i in snp_ids], dtype=float)
    except KeyError as exc:
        raise InputError(f"missing signal-to-noise entry for SNP {exc.args[0]!r}") from None

    weights = (exp_beta / out_se) ** 2
    weight_sum = float(np.sum(weights))
    tn_mean = np.array(
        [truncnorm_mean(TruncSpec(-cfg.tau_f, cfg.tau_f, m)) for m in mu_vec], dtype=float
    )
    tn_var = np.array(
        [truncnorm_var(TruncSpec(-cfg.tau_f, cfg.tau_f, m)) for m in mu_vec], dtype=float
    )
    mu_alt = float(np.sum(weights * (out_se / exp_beta) * tn_mean) / weight_sum)
    sigma_alt = float(math.sqrt(np.sum(weights * tn_var)) / weight_sum)
    threshold = std_quantile(1.0 - cfg.alpha / 2.0) * null_sd_ivw(weight_sum, cfg.tau_f)
    power = std_sf((threshold - mu_alt) / sigma_alt) + std_cdf((-threshold - mu_alt) / sigma_alt)
    return PowerForecast(
        mu_alt=mu_alt,
        sigma_alt=sigma_alt,
        rejection_threshold=threshold,
        predicted_power=float(power),
    )


def check_separation(
    truth: TruthConfig,
    cfg: FocusConfig,
    c1: float,
    direction: Direction = Direction.D_TO_Y,
) -> bool:
    """Whether nonzero direct outcome effects clear the focusing filter.

    The focusing filter reliably excludes SNPs with a direct effect on the
    outcome only if those effects are large against their noise level:
    every SNP with a nonzero direct outcome effect must satisfy
    ``|pi / se| >= c1 * tau_f * sqrt(log p)``. Vacuously true when no such
    SNP exists. Ground-truth zeros are compared exactly.
    """
    if direction is Direction.D_TO_Y:
        pi, se = truth.pi_y, truth.se_y
    else:
        pi, se = truth.pi_d, truth.se_d
    active = pi != 0.0
    if not active.any():
        return True
    threshold = c1 * cfg.tau_f * math.sqrt(math.log(truth.p))
    return bool(np.min(np.abs(pi[active]) / se[active]) >= threshold)

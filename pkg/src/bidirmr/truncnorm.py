"""Standard-normal and truncated-normal special functions.

All post-selection inference in this package reduces to the first two moments
of a unit-variance normal distribution truncated to an interval ``[a, b]``:
conditioning an estimated association on having survived the focusing filter
turns its normalized noise into exactly such a truncated variable. The
functions here implement the classical closed forms

    mean = mu + (phi(a - mu) - phi(b - mu)) / Z
    var  = 1 + ((a - mu) phi(a - mu) - (b - mu) phi(b - mu)) / Z - (mean - mu)^2

with ``Z = Phi(b - mu) - Phi(a - mu)``, alongside the standard normal pdf,
cdf, survival function, and quantile.

Everything is pure ``math``-module scalar arithmetic (no external
special-function dependency); the cdf rides on ``math.erfc`` so both tails
keep full double precision, and the truncation mass is evaluated on whichever
side of the distribution avoids subtracting two numbers near 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateTruncationError, InputError

__all__ = [
    "DEGENERATE_MASS",
    "TruncSpec",
    "std_cdf",
    "std_pdf",
    "std_quantile",
    "std_sf",
    "truncnorm_mean",
    "truncnorm_var",
]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

#: Truncation windows with less probability mass than this raise
#: :class:`DegenerateTruncationError` rather than returning garbage.
DEGENERATE_MASS = 1e-300


def std_pdf(x: float) -> float:
    """Density of the standard normal distribution at ``x``."""
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


def std_cdf(x: float) -> float:
    """Distribution function of the standard normal distribution."""
    return 0.5 * math.erfc(-x / _SQRT2)


def std_sf(x: float) -> float:
    """Upper-tail probability ``1 - std_cdf(x)``, exact in the far tail."""
    return 0.5 * math.erfc(x / _SQRT2)


def std_quantile(p: float) -> float:
    """Inverse of :func:`std_cdf` on the open interval (0, 1).

    Newton iteration on the cdf with a bisection safeguard; converges to
    machine precision for every representable ``p`` in (0, 1).
    """
    if not 0.0 < p < 1.0:
        raise InputError(f"quantile requires 0 < p < 1, got {p!r}")
    if p == 0.5:
        return 0.0
    lo, hi = -40.0, 40.0
    x = 0.0
    for _ in range(200):
        err = std_cdf(x) - p
        if err > 0.0:
            hi = min(hi, x)
        elif err < 0.0:
            lo = max(lo, x)
        else:
            return x
        dens = std_pdf(x)
        step = err / dens if dens > 0.0 else math.inf
        x_next = x - step
        if not lo < x_next < hi:
            x_next = 0.5 * (lo + hi)
        if abs(x_next - x) <= 1e-16 * max(1.0, abs(x_next)):
            return x_next
        x = x_next
    return x


@dataclass(frozen=True)
class TruncSpec:
    """Unit-variance normal with location ``mu`` truncated to [lower, upper].

    Bounds may be infinite (one-sided or absent truncation); ``mu`` must be
    finite and ``lower < upper``.
    """

    lower: float
    upper: float
    mu: float = 0.0

    def __post_init__(self):
        if math.isnan(self.lower) or math.isnan(self.upper):
            raise InputError("truncation bounds must not be NaN")
        if not self.lower < self.upper:
            raise InputError(
                f"truncation requires lower < upper, got [{self.lower}, {self.upper}]"
            )
        if not math.isfinite(self.mu):
            raise InputError(f"location mu must be finite, got {self.mu!r}")


def _window_mass(alpha: float, beta: float) -> float:
    # P(alpha <= N(0,1) <= beta). When the whole window sits in the upper
    # tail the difference of cdf values near 1 would cancel; the survival
    # function keeps full precision there.
    if alpha >= 0.0:
        return std_sf(alpha) - std_sf(beta)
    return std_cdf(beta) - std_cdf(alpha)


def _xphi(x: float) -> float:
    # x * pdf(x) with the correct 0 limit at infinite bounds.
    if math.isinf(x):
        return 0.0
    return x * std_pdf(x)


def _standardized_window(spec: TruncSpec) -> tuple[float, float, float]:
    alpha = spec.lower - spec.mu
    beta = spec.upper - spec.mu
    mass = _window_mass(alpha, beta)
    if not mass > DEGENERATE_MASS:
        raise DegenerateTruncationError(
            f"truncation window [{spec.lower}, {spec.upper}] around mu={spec.mu} "
            f"carries mass {mass!r} <= {DEGENERATE_MASS}"
        )
    return alpha, beta, mass


def truncnorm_mean(spec: TruncSpec) -> float:
    """Mean of the truncated normal described by ``spec``."""
    alpha, beta, mass = _standardized_window(spec)
    return spec.mu + (std_pdf(alpha) - std_pdf(beta)) / mass


def truncnorm_var(spec: TruncSpec) -> float:
    """Variance of the truncated normal described by ``spec``.

    For a symmetric window ``[-t, t]`` around ``mu = 0`` this reduces
    algebraically to ``1 - 2 t phi(t) / (Phi(t) - Phi(-t))``. Interval
    truncation always shrinks variance, so the result lies in (0, 1].
    """
    alpha, beta, mass = _standardized_window(spec)
    shift = (std_pdf(alpha) - std_pdf(beta)) / mass
    return 1.0 + (_xphi(alpha) - _xphi(beta)) / mass - shift * shift

"""Approximating limit distribution functions for concentration curves.

All laws here are folded (supported on [0, inf)).  A ``LimitLaw`` evaluates
``F(z / scale)`` for a standard folded CDF ``F``; the generic mixture carries
its own scaling through the mixing law and ``sigma``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import specfun
from .counting import DegenerateMixing, MixingLaw
from .errors import ConvergenceError, DomainError

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
# 2 * phi(t) carries no representable mass beyond this point
_T_MAX = 40.0


def _quad_pieces(f, edges, tol: float) -> float:
    total = 0.0
    err = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(edges, edges[1:]):
            val, e = integrate.quad(f, lo, hi, epsabs=tol * 1e-3, epsrel=1e-12, limit=200)
            total += val
            err += e
    if err > tol:
        raise ConvergenceError(f"quadrature error estimate {err:.3g} exceeds {tol:.3g}")
    return total


def exponential_sqrt2_cdf(x: float) -> float:
    """1 - exp(-sqrt(2) x) for x >= 0."""
    return -math.expm1(-_SQRT2 * x) if x > 0 else 0.0


def folded_variance_gamma_cdf(r: float, x: float, tol: float = 1e-10) -> float:
    """V+_r(x) = E Phi_0(x / sqrt(Y)), Y ~ Gamma(r, 1), by quadrature.

    The complement 1 - E[1 - Phi_0(x / sqrt(Y))] is integrated because its
    integrand vanishes smoothly at y = 0 for every shape r.
    """
    if not r > 0:
        raise DomainError(f"shape r must be positive, got {r}")
    if x <= 0:
        return 0.0
    log_norm = math.lgamma(r)

    def f(y: float) -> float:
        if y <= 0.0:
            return 0.0
        tail = specfun.folded_normal_sf(x / math.sqrt(y))
        if tail == 0.0:
            return 0.0
        return tail * math.exp((r - 1.0) * math.log(y) - y - log_norm)

    knee = x * x / 2.0
    marks = {0.0, knee / 4, knee, 4 * knee, r, r + 10 * math.sqrt(r) + 10}
    y = max(4 * knee, 1e-300)
    while y < r:  # decade steps keep y^(r-1) resolved when x is tiny
        marks.add(y)
        y *= 100.0
    edges = sorted(marks)
    edges.append(math.inf)
    return min(max(1.0 - _quad_pieces(f, edges, tol), 0.0), 1.0)


def folded_student_cdf(r: float, x: float) -> float:
    """T+_r(x), the CDF of |T| for Student T with r degrees of freedom."""
    if not r > 0:
        raise DomainError(f"degrees of freedom must be positive, got {r}")
    if x <= 0:
        return 0.0
    x2 = x * x
    return specfun.regularized_beta(0.5, r / 2, x2 / (r + x2), r / (r + x2))


def mixture_cdf(mix: MixingLaw, sigma: float, z: float, tol: float = 1e-10) -> float:
    """E Phi_0(z / (2 sigma sqrt(Lambda))).

    Evaluated through the mixing CDF: Phi_0(c / sqrt(Lambda)) = P(Lambda < c^2 / zeta^2)
    for standard normal zeta, so the expectation is the integral of
    P(Lambda < c^2 / t^2) against the folded normal density 2 phi(t).
    """
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    if z <= 0:
        return 0.0
    c = z / (2.0 * sigma)
    if isinstance(mix, DegenerateMixing):
        return specfun.folded_normal_cdf(c / math.sqrt(mix.lam))

    def f(t: float) -> float:
        dens = 2.0 * _INV_SQRT_2PI * math.exp(-0.5 * t * t)
        if t <= 0.0:
            return dens
        u = (c / t) ** 2 if t > c * 1e-150 else math.inf
        return dens if math.isinf(u) else mix.cdf(u) * dens

    t_mid = c / math.sqrt(_typical(mix))
    marks = {0.0, 0.5, 1.0, 2.0, 4.0, 8.0, t_mid / 4, t_mid, 4 * t_mid, _T_MAX}
    t = max(4 * t_mid, 1e-300)
    while t < 0.5:  # P(Lambda < c^2/t^2) decays like a power of t when c is small
        marks.add(t)
        t *= 100.0
    edges = sorted(t for t in marks if 0.0 <= t <= _T_MAX)
    return _quad_pieces(f, edges, tol)


def _typical(mix: MixingLaw) -> float:
    cached = getattr(mix, "_median_cache", None)
    if cached is None:
        cached = mix.median()
        try:
            mix._median_cache = cached  # type: ignore[attr-defined]
        except AttributeError:
            pass
    return cached


@dataclass(frozen=True, eq=False)
class LimitLaw:
    """A folded limit law: ``kind`` selects the standard CDF, ``scale`` divides the argument.

    kinds: folded_normal, exponential_sqrt2, exponential (rate one),
    folded_variance_gamma (shape r), folded_student (r degrees of freedom),
    generic_mixture (uses ``mix`` and ``sigma``; ``scale`` is ignored).
    """

    kind: str
    scale: float = 1.0
    r: float | None = None
    mix: MixingLaw | None = None
    sigma: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _STANDARD and self.kind != "generic_mixture":
            raise DomainError(f"unknown limit law {self.kind!r}")
        if not self.scale > 0:
            raise DomainError(f"scale must be positive, got {self.scale}")
        if self.kind in ("folded_variance_gamma", "folded_student") and not (self.r and self.r > 0):
            raise DomainError(f"{self.kind} needs a positive shape r")
        if self.kind == "generic_mixture" and (self.mix is None or not self.sigma or self.sigma <= 0):
            raise DomainError("generic_mixture needs a mixing law and a positive sigma")

    def cdf(self, z: float) -> float:
        if z <= 0:
            return 0.0
        if self.kind == "generic_mixture":
            return mixture_cdf(self.mix, self.sigma, z)  # type: ignore[arg-type]
        return _STANDARD[self.kind](self, z / self.scale)

    def curve(self, zs) -> np.ndarray:
        return np.array([self.cdf(float(z)) for z in zs])

    @property
    def natural_scale(self) -> float:
        if self.kind == "generic_mixture":
            mean = self.mix.mean  # type: ignore[union-attr]
            spread = mean if math.isfinite(mean) else _typical(self.mix)  # type: ignore[arg-type]
            return 2.0 * self.sigma * math.sqrt(spread)  # type: ignore[operator]
        return self.scale

    def describe(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "generic_mixture":
            out["mix"] = {"kind": self.mix.kind, **self.mix.params()}  # type: ignore[union-attr]
            out["sigma"] = self.sigma
        else:
            out["scale"] = self.scale
            if self.r is not None:
                out["r"] = self.r
        return out


_STANDARD = {
    "folded_normal": lambda law, x: specfun.folded_normal_cdf(x),
    "exponential_sqrt2": lambda law, x: exponential_sqrt2_cdf(x),
    "exponential": lambda law, x: -math.expm1(-x),
    "folded_variance_gamma": lambda law, x: folded_variance_gamma_cdf(law.r, x),
    "folded_student": lambda law, x: folded_student_cdf(law.r, x),
}

LIMIT_KINDS = tuple(_STANDARD) + ("generic_mixture",)


def limit_cdf(law: LimitLaw, z: float) -> float:
    return law.cdf(z)

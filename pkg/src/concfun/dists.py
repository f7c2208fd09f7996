"""Summand distributions and the moment functionals the bounds consume.

Every model is a mean-zero, finite-variance law.  Lattice laws are handled by
exact sums over atoms; the continuous families use closed forms where they
exist and adaptive quadrature on decades of the half line otherwise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate

from . import specfun
from .errors import DomainError, MomentDivergenceError

_QUAD_KW = dict(epsabs=1e-14, epsrel=1e-12, limit=200)
_DECADE_LIMIT = 1e15
# draws per chunk when a random sum has to be summed term by term
_CHUNK_DRAWS = 4_000_000


def _quad(f: Callable[[float], float], a: float, b: float) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, _ = integrate.quad(f, a, b, **_QUAD_KW)
    return value


def integrate_half_line(
    f: Callable[[float], float],
    lo: float,
    hi: float = math.inf,
    breaks: Iterable[float] = (),
) -> float:
    """Integrate ``f`` over [lo, hi] piecewise, detecting power-law divergence.

    An infinite upper limit is covered decade by decade up to 1e15.  When the
    decade increments stop shrinking the integral is declared divergent;
    otherwise the remaining tail is extrapolated geometrically.
    """
    edges = sorted({lo, *(b for b in breaks if lo < b < hi)})
    total = 0.0
    for a, b in zip(edges, edges[1:]):
        total += _quad(f, a, b)
    if math.isfinite(hi):
        return total + _quad(f, edges[-1], hi)

    start = edges[-1]
    x0 = max(start, 1.0)
    if start < x0:
        total += _quad(f, start, x0)
    prev = prev_prev = None
    a = x0
    while a < _DECADE_LIMIT:
        b = a * 10.0
        inc = _quad(f, a, b)
        total += inc
        if prev is not None and abs(inc) <= 1e-17 * abs(total) and abs(inc) <= abs(prev):
            return total
        prev_prev, prev = prev, inc
        a = b
    if prev is None or prev_prev is None or prev == 0.0:
        return total
    ratio = prev / prev_prev
    if abs(prev) > 1e-10 * abs(total) and ratio >= 0.98:
        raise MomentDivergenceError("integral grows without bound on the half line")
    if 0.0 < ratio < 1.0:
        total += prev * ratio / (1.0 - ratio)
    return total


class SummandModel:
    """Base class for a mean-zero summand law.

    Subclasses provide the density or atoms, sampling, and whatever closed
    forms they have; the generic fallbacks integrate numerically.
    """

    kind: str = "abstract"
    is_lattice: bool = False
    symmetric_unimodal: bool = False

    @property
    def variance(self) -> float:
        raise NotImplementedError

    @property
    def scale_hint(self) -> float:
        """A representative magnitude used to place quadrature breakpoints."""
        return math.sqrt(self.variance)

    def params(self) -> dict:
        raise NotImplementedError

    def cdf(self, x: float) -> float:
        """P(X <= x)."""
        raise NotImplementedError

    def cdf_left(self, x: float) -> float:
        """P(X < x); equal to ``cdf`` for atomless laws."""
        return self.cdf(x)

    # continuous families override density/support; lattice overrides expect_even
    def density(self, x: float) -> float:
        raise NotImplementedError

    support_lo: float = 0.0
    support_hi: float = math.inf

    def expect_even(self, h: Callable[[float], float], breaks: Iterable[float] = ()) -> float:
        """E h(|X|) for a symmetric continuous law."""
        return 2.0 * integrate_half_line(
            lambda x: h(x) * self.density(x), self.support_lo, self.support_hi, breaks
        )

    def truncated_second_moment(self, t: float) -> float:
        return self.expect_even(lambda x: x * x if x >= t else 0.0, breaks=(t,))

    def truncated_third_abs_moment(self, t: float) -> float:
        return self.expect_even(lambda x: x**3 if x < t else 0.0, breaks=(t,))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def sum_given_counts(self, rng: np.random.Generator, counts: np.ndarray) -> np.ndarray:
        """One draw of X_1 + ... + X_k for each k in ``counts`` (empty sum is 0)."""
        counts = np.asarray(counts, dtype=np.int64)
        out = np.zeros(counts.shape[0])
        start = 0
        while start < counts.shape[0]:
            csum = np.cumsum(counts[start:])
            stop = start + max(int(np.searchsorted(csum, _CHUNK_DRAWS, side="right")), 1)
            block = counts[start:stop]
            total = int(block.sum())
            if total:
                draws = self.sample(rng, total)
                owner = np.repeat(np.arange(block.shape[0]), block)
                out[start:stop] = np.bincount(owner, weights=draws, minlength=block.shape[0])
            start = stop
        return out


class Lattice(SummandModel):
    """A finitely supported law given by its atoms."""

    is_lattice = True

    def __init__(self, values: Sequence[float], probs: Sequence[float], kind: str = "lattice"):
        v = np.asarray(values, dtype=float)
        p = np.asarray(probs, dtype=float)
        if v.ndim != 1 or v.shape != p.shape or v.size == 0:
            raise DomainError("lattice needs matching nonempty value and probability lists")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise DomainError(f"lattice probabilities must be nonnegative and sum to 1, got {p.sum()!r}")
        order = np.argsort(v, kind="stable")
        v, p = v[order], p[order]
        uniq, inv = np.unique(v, return_inverse=True)
        self.values = uniq
        self.probs = np.bincount(inv, weights=p)
        mean = float(self.values @ self.probs)
        if abs(mean) > 1e-12:
            raise DomainError(f"summand mean must be 0, got {mean!r}")
        self._variance = float((self.values**2) @ self.probs)
        if not self._variance > 0:
            raise DomainError("summand variance must be positive")
        self.kind = kind

    def __repr__(self) -> str:
        return f"Lattice(kind={self.kind!r}, values={self.values.tolist()}, probs={self.probs.tolist()})"

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Lattice)
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.probs, other.probs)
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def variance(self) -> float:
        return self._variance

    @property
    def scale_hint(self) -> float:
        return float(np.max(np.abs(self.values)))

    def params(self) -> dict:
        return {"values": self.values.tolist(), "probs": self.probs.tolist()}

    def cdf(self, x: float) -> float:
        return float(self.probs[self.values <= x].sum())

    def cdf_left(self, x: float) -> float:
        return float(self.probs[self.values < x].sum())

    def expect(self, h: Callable[[float], float]) -> float:
        return float(sum(pk * h(float(vk)) for vk, pk in zip(self.values, self.probs)))

    def expect_even(self, h: Callable[[float], float], breaks: Iterable[float] = ()) -> float:
        return self.expect(lambda x: h(abs(x)))

    def truncated_second_moment(self, t: float) -> float:
        a = np.abs(self.values)
        return float((a**2 * self.probs)[a >= t].sum())

    def truncated_third_abs_moment(self, t: float) -> float:
        a = np.abs(self.values)
        return float((a**3 * self.probs)[a < t].sum())

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        idx = rng.choice(self.values.size, size=size, p=self.probs)
        return self.values[idx]

    def sum_given_counts(self, rng: np.random.Generator, counts: np.ndarray) -> np.ndarray:
        counts = np.asarray(counts, dtype=np.int64)
        if self.values.size == 1:
            return self.values[0] * counts.astype(float)
        if self.values.size == 2:
            v0, v1 = self.values
            hits = rng.binomial(counts, self.probs[1])
            return v0 * counts + (v1 - v0) * hits
        tallies = rng.multinomial(counts, self.probs)
        return tallies @ self.values


def rademacher() -> Lattice:
    return Lattice([-1.0, 1.0], [0.5, 0.5], kind="rademacher")


def two_point_asymmetric(a: float, b: float, p: float) -> Lattice:
    """X = a with probability p and b otherwise; parameters must give mean zero."""
    if not 0 < p < 1:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    model = Lattice([a, b], [p, 1.0 - p], kind="two_point_asymmetric")
    return model


class _Continuous(SummandModel):
    def cdf(self, x: float) -> float:
        # symmetric about 0
        if x >= 0:
            return 0.5 + 0.5 * self._abs_cdf(x)
        return 0.5 - 0.5 * self._abs_cdf(-x)

    def _abs_cdf(self, x: float) -> float:
        """P(|X| < x) for x >= 0."""
        raise NotImplementedError

    def __eq__(self, other: object) -> bool:
        return type(self) is type(other) and self.params() == other.params()  # type: ignore[attr-defined]

    def __hash__(self) -> int:
        return hash((type(self).__name__, tuple(sorted(self.params().items()))))

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


class Normal(_Continuous):
    kind = "normal"
    symmetric_unimodal = True

    def __init__(self, scale: float = 1.0):
        if not scale > 0:
            raise DomainError(f"scale must be positive, got {scale}")
        self.scale = float(scale)

    @property
    def variance(self) -> float:
        return self.scale**2

    def params(self) -> dict:
        return {"scale": self.scale}

    def density(self, x: float) -> float:
        u = x / self.scale
        return math.exp(-0.5 * u * u) / (self.scale * math.sqrt(2 * math.pi))

    def _abs_cdf(self, x: float) -> float:
        return specfun.folded_normal_cdf(x / self.scale)

    def truncated_second_moment(self, t: float) -> float:
        u = t / self.scale
        phi = math.exp(-0.5 * u * u) / math.sqrt(2 * math.pi)
        return self.variance * (specfun.folded_normal_sf(u) + 2.0 * u * phi)

    def truncated_third_abs_moment(self, t: float) -> float:
        u = t / self.scale
        inner = 2.0 - (u * u + 2.0) * math.exp(-0.5 * u * u)
        return self.scale**3 * 2.0 * inner / math.sqrt(2 * math.pi)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.scale * rng.standard_normal(size)

    def sum_given_counts(self, rng: np.random.Generator, counts: np.ndarray) -> np.ndarray:
        counts = np.asarray(counts, dtype=np.int64)
        return self.scale * np.sqrt(counts) * rng.standard_normal(counts.shape[0])


class UniformSymmetric(_Continuous):
    kind = "uniform_symmetric"
    symmetric_unimodal = True

    def __init__(self, halfwidth: float = math.sqrt(3.0)):
        if not halfwidth > 0:
            raise DomainError(f"halfwidth must be positive, got {halfwidth}")
        self.halfwidth = float(halfwidth)
        self.support_hi = self.halfwidth

    @property
    def variance(self) -> float:
        return self.halfwidth**2 / 3.0

    def params(self) -> dict:
        return {"halfwidth": self.halfwidth}

    def density(self, x: float) -> float:
        return 0.5 / self.halfwidth if abs(x) <= self.halfwidth else 0.0

    def _abs_cdf(self, x: float) -> float:
        return min(x / self.halfwidth, 1.0)

    def truncated_second_moment(self, t: float) -> float:
        h = self.halfwidth
        return (h**3 - t**3) / (3.0 * h) if t < h else 0.0

    def truncated_third_abs_moment(self, t: float) -> float:
        h = self.halfwidth
        return min(t, h) ** 4 / (4.0 * h)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(-self.halfwidth, self.halfwidth, size)


class Laplace(_Continuous):
    kind = "laplace"
    symmetric_unimodal = True

    def __init__(self, scale: float = 1.0):
        if not scale > 0:
            raise DomainError(f"scale must be positive, got {scale}")
        self.scale = float(scale)

    @property
    def variance(self) -> float:
        return 2.0 * self.scale**2

    def params(self) -> dict:
        return {"scale": self.scale}

    def density(self, x: float) -> float:
        return 0.5 * math.exp(-abs(x) / self.scale) / self.scale

    def _abs_cdf(self, x: float) -> float:
        return -math.expm1(-x / self.scale)

    def truncated_second_moment(self, t: float) -> float:
        b = self.scale
        return (t * t + 2 * b * t + 2 * b * b) * math.exp(-t / b)

    def truncated_third_abs_moment(self, t: float) -> float:
        b = self.scale
        return b**3 * specfun.lower_incomplete_gamma(4.0, t / b)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.laplace(0.0, self.scale, size)

    def sum_given_counts(self, rng: np.random.Generator, counts: np.ndarray) -> np.ndarray:
        # a sum of k Laplace(b) variables is b * (G1 - G2) with G1, G2 ~ Gamma(k, 1)
        k = np.asarray(counts, dtype=float)
        return self.scale * (rng.standard_gamma(k) - rng.standard_gamma(k))


class SymmetrizedPareto(_Continuous):
    """Density (beta/2)|x|^(-beta-1) on |x| >= 1; infinite third moment for beta <= 3."""

    kind = "symmetrized_pareto"

    def __init__(self, beta: float = 2.5):
        if not beta > 2:
            raise DomainError(f"beta must exceed 2 for a finite variance, got {beta}")
        self.beta = float(beta)
        self.support_lo = 1.0

    @property
    def variance(self) -> float:
        return self.beta / (self.beta - 2.0)

    @property
    def scale_hint(self) -> float:
        return 1.0

    def params(self) -> dict:
        return {"beta": self.beta}

    def density(self, x: float) -> float:
        a = abs(x)
        return 0.5 * self.beta * a ** (-self.beta - 1.0) if a >= 1.0 else 0.0

    def _abs_cdf(self, x: float) -> float:
        return 1.0 - x ** (-self.beta) if x > 1.0 else 0.0

    def truncated_second_moment(self, t: float) -> float:
        c = max(t, 1.0)
        return self.beta * c ** (2.0 - self.beta) / (self.beta - 2.0)

    def truncated_third_abs_moment(self, t: float) -> float:
        if t <= 1.0:
            return 0.0
        if self.beta == 3.0:
            return self.beta * math.log(t)
        return self.beta * (t ** (3.0 - self.beta) - 1.0) / (3.0 - self.beta)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        mag = (1.0 - rng.random(size)) ** (-1.0 / self.beta)
        sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        return sign * mag


class ScaledStudent(_Continuous):
    """Student t with ``nu`` degrees of freedom rescaled to unit variance."""

    kind = "scaled_student"
    symmetric_unimodal = True

    def __init__(self, nu: float = 5.0):
        if not nu > 2:
            raise DomainError(f"nu must exceed 2 for a finite variance, got {nu}")
        self.nu = float(nu)
        self.c = math.sqrt((self.nu - 2.0) / self.nu)
        self._log_norm = (
            math.lgamma((self.nu + 1) / 2) - math.lgamma(self.nu / 2) - 0.5 * math.log(self.nu * math.pi)
        )

    @property
    def variance(self) -> float:
        return 1.0

    def params(self) -> dict:
        return {"nu": self.nu}

    def density(self, x: float) -> float:
        u = x / self.c
        return math.exp(self._log_norm - 0.5 * (self.nu + 1) * math.log1p(u * u / self.nu)) / self.c

    def _abs_cdf(self, x: float) -> float:
        u2 = (x / self.c) ** 2
        return specfun.regularized_beta(0.5, self.nu / 2, u2 / (self.nu + u2), self.nu / (self.nu + u2))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.c * rng.standard_t(self.nu, size)


FAMILIES: dict[str, Callable[..., SummandModel]] = {
    "rademacher": rademacher,
    "two_point_asymmetric": two_point_asymmetric,
    "lattice": Lattice,
    "normal": Normal,
    "uniform_symmetric": UniformSymmetric,
    "laplace": Laplace,
    "symmetrized_pareto": SymmetrizedPareto,
    "scaled_student": ScaledStudent,
}


def make_summand(kind: str, **params) -> SummandModel:
    try:
        factory = FAMILIES[kind]
    except KeyError:
        raise DomainError(f"unknown summand family {kind!r}; choose from {sorted(FAMILIES)}") from None
    return factory(**params)


@dataclass(frozen=True)
class SummandVector:
    """Independent, possibly non-identical summands X_1, ..., X_n."""

    models: tuple[SummandModel, ...]
    B2: float = field(init=False)

    def __post_init__(self) -> None:
        if len(self.models) == 0:
            raise DomainError("a summand vector needs at least one model")
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "B2", math.fsum(m.variance for m in self.models))

    @classmethod
    def iid(cls, model: SummandModel, n: int) -> "SummandVector":
        if n < 1:
            raise DomainError(f"n must be >= 1, got {n}")
        return cls((model,) * n)

    @property
    def B(self) -> float:
        return math.sqrt(self.B2)

    def __len__(self) -> int:
        return len(self.models)

    def grouped(self) -> list[tuple[SummandModel, int]]:
        """Distinct models with multiplicities, so i.i.d. blocks are evaluated once."""
        out: list[tuple[SummandModel, int]] = []
        for m in self.models:
            for i, (seen, k) in enumerate(out):
                if seen is m or seen == m:
                    out[i] = (seen, k + 1)
                    break
            else:
                out.append((m, 1))
        return out


# operation-style entry points


def variance(model: SummandModel) -> float:
    return model.variance


def truncated_second_moment(model: SummandModel, t: float) -> float:
    """E X^2 1(|X| >= t)."""
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    return model.truncated_second_moment(t)


def truncated_third_abs_moment(model: SummandModel, t: float) -> float:
    """E |X|^3 1(|X| < t)."""
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    return model.truncated_third_abs_moment(t)


def katz_functional(model: SummandModel, s: float) -> float:
    """E X^2 min{1, |X|/s}."""
    if not s > 0:
        raise DomainError(f"s must be positive, got {s}")
    return model.truncated_second_moment(s) + model.truncated_third_abs_moment(s) / s


def g_weighted_second_moment(model: SummandModel, g) -> float:
    """E X^2 g(X) for an even weight ``g``; raises MomentDivergenceError if infinite."""
    fn = g.evaluator if hasattr(g, "evaluator") else g
    value = model.expect_even(lambda x: x * x * fn(x), breaks=(model.scale_hint,))
    if not math.isfinite(value):
        raise MomentDivergenceError(f"E X^2 g(X) does not exist for {model!r}")
    return value


def abs_third_moment(model: SummandModel) -> float:
    """E|X|^3, raising MomentDivergenceError when it is infinite."""
    if isinstance(model, SymmetrizedPareto) and model.beta <= 3.0:
        raise MomentDivergenceError(f"E|X|^3 is infinite for beta={model.beta}")
    if isinstance(model, ScaledStudent) and model.nu <= 3.0:
        raise MomentDivergenceError(f"E|X|^3 is infinite for nu={model.nu}")
    return model.expect_even(lambda x: x**3, breaks=(model.scale_hint,))


def mixed_katz_functional(model: SummandModel, mixing, sigma: float) -> float:
    """E X^2 G(X) with G(x) = E min{1, |x| / (sigma sqrt(Lambda))}, X independent of Lambda."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    if not math.isfinite(mixing.mean):
        raise DomainError("the mixing law must have a finite mean")
    if mixing.kind == "degenerate":
        return katz_functional(model, sigma * math.sqrt(mixing.lam))
    knee = sigma * math.sqrt(mixing.median())
    return model.expect_even(lambda x: x * x * mixing.g_mix(x, sigma), breaks=(knee, model.scale_hint))


def sample(model: SummandModel, seed: int, count: int) -> np.ndarray:
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    return model.sample(np.random.default_rng(seed), count)

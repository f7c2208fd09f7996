"""Laws of the random number of summands and the mixing laws behind them.

Mixed Poisson counts are described by their mixing variable ``Lambda``:
exponential mixing gives the geometric law, gamma mixing the negative
binomial law, inverse-gamma mixing the Poisson-inverse-gamma law and a point
mass the plain Poisson law.
"""

from __future__ import annotations

import math
import warnings
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import integrate, optimize

from . import specfun
from .errors import DomainError

_MAX_SUPPORT = 20_000  # exact laws beyond this many terms are impractical anyway


# ---------------------------------------------------------------- mixing laws


class MixingLaw:
    """A positive mixing variable Lambda_n."""

    kind = "abstract"

    @property
    def mean(self) -> float:
        raise NotImplementedError

    def cdf(self, u: float) -> float:
        """P(Lambda < u)."""
        raise NotImplementedError

    def g_mix(self, x: float, sigma: float) -> float:
        """E min{1, |x| / (sigma sqrt(Lambda))}."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def scaled(self, c: float) -> "MixingLaw":
        """Law of c * Lambda."""
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    def median(self) -> float:
        lo, hi = 1e-300, 1.0
        while self.cdf(hi) < 0.5:
            hi *= 2.0
        return optimize.brentq(lambda u: self.cdf(u) - 0.5, lo, hi, xtol=1e-12 * hi)

    def __eq__(self, other: object) -> bool:
        return type(self) is type(other) and self.params() == other.params()  # type: ignore[attr-defined]

    def __hash__(self) -> int:
        return hash((self.kind, tuple(sorted(self.params().items()))))

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


class DegenerateMixing(MixingLaw):
    kind = "degenerate"

    def __init__(self, lam: float):
        if not lam > 0:
            raise DomainError(f"lambda must be positive, got {lam}")
        self.lam = float(lam)

    @property
    def mean(self) -> float:
        return self.lam

    def params(self) -> dict:
        return {"lam": self.lam}

    def cdf(self, u: float) -> float:
        return 1.0 if u > self.lam else 0.0

    def median(self) -> float:
        return self.lam

    def g_mix(self, x: float, sigma: float) -> float:
        return min(1.0, abs(x) / (sigma * math.sqrt(self.lam)))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, self.lam)

    def scaled(self, c: float) -> "DegenerateMixing":
        return DegenerateMixing(self.lam * c)


class GammaMixing(MixingLaw):
    """Gamma law with shape ``r`` and scale ``n`` (density lambda^(r-1) e^(-lambda/n) / (n^r Gamma(r)))."""

    kind = "gamma"

    def __init__(self, r: float, n: float):
        if not (r > 0 and n > 0):
            raise DomainError(f"gamma mixing needs r > 0 and n > 0, got r={r}, n={n}")
        self.r = float(r)
        self.n = float(n)

    @property
    def mean(self) -> float:
        return self.r * self.n

    def params(self) -> dict:
        return {"r": self.r, "n": self.n}

    def cdf(self, u: float) -> float:
        if u <= 0:
            return 0.0
        return specfun.regularized_lower_gamma(self.r, u / self.n)

    def g_mix(self, x: float, sigma: float) -> float:
        if x == 0:
            return 0.0
        u = x * x / (self.n * sigma * sigma)
        head = specfun.regularized_lower_gamma(self.r, u)
        coef = abs(x) / (sigma * math.sqrt(self.n))
        if self.r > 0.5:
            ratio = specfun.regularized_upper_gamma(self.r - 0.5, u) * math.exp(
                math.lgamma(self.r - 0.5) - math.lgamma(self.r)
            )
        else:
            ratio = specfun.upper_gamma_any(self.r - 0.5, u) / math.gamma(self.r)
        return head + coef * ratio

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.gamma(self.r, self.n, size)

    def scaled(self, c: float) -> "GammaMixing":
        return GammaMixing(self.r, self.n * c)


class ExponentialMixing(GammaMixing):
    """Exponential law with mean ``n``: the gamma law with shape 1."""

    kind = "exponential"

    def __init__(self, n: float):
        super().__init__(1.0, n)

    def params(self) -> dict:
        return {"n": self.n}

    def cdf(self, u: float) -> float:
        return -math.expm1(-u / self.n) if u > 0 else 0.0

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.exponential(self.n, size)

    def scaled(self, c: float) -> "ExponentialMixing":
        return ExponentialMixing(self.n * c)


class InverseGammaMixing(MixingLaw):
    """Inverse gamma law with shape r/2 and scale n/2; 1/Lambda is gamma with shape r/2, rate n/2."""

    kind = "inverse_gamma"

    def __init__(self, r: float, n: float):
        if not (r > 1 and n > 0):
            raise DomainError(f"inverse-gamma mixing needs r > 1 and n > 0, got r={r}, n={n}")
        self.r = float(r)
        self.n = float(n)

    @property
    def mean(self) -> float:
        return self.n / (self.r - 2.0) if self.r > 2 else math.inf

    def params(self) -> dict:
        return {"r": self.r, "n": self.n}

    def cdf(self, u: float) -> float:
        if u <= 0:
            return 0.0
        return specfun.regularized_upper_gamma(self.r / 2, self.n / (2.0 * u))

    def g_mix(self, x: float, sigma: float) -> float:
        if x == 0:
            return 0.0
        v = self.n * sigma * sigma / (2.0 * x * x)
        head = specfun.regularized_upper_gamma(self.r / 2, v)
        ratio = specfun.regularized_lower_gamma((self.r + 1) / 2, v) * math.exp(
            math.lgamma((self.r + 1) / 2) - math.lgamma(self.r / 2)
        )
        return head + abs(x) / sigma * math.sqrt(2.0 / self.n) * ratio

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return 1.0 / rng.gamma(self.r / 2, 2.0 / self.n, size)

    def scaled(self, c: float) -> "InverseGammaMixing":
        return InverseGammaMixing(self.r, self.n * c)


MIXING_LAWS = {
    "degenerate": DegenerateMixing,
    "exponential": ExponentialMixing,
    "gamma": GammaMixing,
    "inverse_gamma": InverseGammaMixing,
}


def make_mixing(kind: str, **params) -> MixingLaw:
    try:
        return MIXING_LAWS[kind](**params)
    except KeyError:
        raise DomainError(f"unknown mixing law {kind!r}; choose from {sorted(MIXING_LAWS)}") from None


def mixing_cdf(mix: MixingLaw, u: float) -> float:
    if not u > 0:
        raise DomainError(f"u must be positive, got {u}")
    return mix.cdf(u)


def g_mix(mix: MixingLaw, x: float, sigma: float) -> float:
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    return mix.g_mix(x, sigma)


# --------------------------------------------------------------- counting laws


class CountingLaw:
    """Law of a nonnegative integer number of summands."""

    kind = "abstract"
    mixing: MixingLaw | None = None

    @property
    def support_max(self) -> int | None:
        """Largest possible value, or None for unbounded support."""
        return None

    @property
    def mean(self) -> float:
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    def pmf(self, k: int) -> float:
        raise NotImplementedError

    def pmf_array(self, kmax: int) -> np.ndarray:
        return np.array([self.pmf(k) for k in range(kmax + 1)])

    def tail_cutoff(self, tail_eps: float) -> tuple[int, float]:
        """Smallest K with P(N > K) < tail_eps, and that tail mass."""
        top = self.support_max
        if top is not None:
            return top, 0.0
        acc = 0.0
        for k in range(_MAX_SUPPORT):
            acc += self.pmf(k)
            if 1.0 - acc < tail_eps:
                return k, max(1.0 - acc, 0.0)
        raise DomainError(f"counting tail does not fall below {tail_eps} within {_MAX_SUPPORT} terms")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.mixing is not None:
            return rng.poisson(self.mixing.sample(rng, size))
        raise NotImplementedError

    def __eq__(self, other: object) -> bool:
        return type(self) is type(other) and self.params() == other.params()  # type: ignore[attr-defined]

    def __hash__(self) -> int:
        return hash((self.kind, repr(sorted(self.params().items()))))

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


class Fixed(CountingLaw):
    """A nonrandom number of summands."""

    kind = "fixed"

    def __init__(self, n: int):
        if int(n) != n or n < 0:
            raise DomainError(f"n must be a nonnegative integer, got {n}")
        self.n = int(n)

    @property
    def support_max(self) -> int:
        return self.n

    @property
    def mean(self) -> float:
        return float(self.n)

    def params(self) -> dict:
        return {"n": self.n}

    def pmf(self, k: int) -> float:
        return 1.0 if k == self.n else 0.0

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, self.n, dtype=np.int64)


class PoissonBinomial(CountingLaw):
    """Sum of independent Bernoulli(p_j), p_j in (0, 1]."""

    kind = "poisson_binomial"

    def __init__(self, p: Sequence[float]):
        arr = np.asarray(p, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise DomainError("p must be a nonempty vector")
        if np.any(arr <= 0) or np.any(arr > 1):
            raise DomainError("every p_j must lie in (0, 1]")
        self.p = arr

    @property
    def support_max(self) -> int:
        return int(self.p.size)

    @property
    def theta(self) -> float:
        return math.fsum(self.p)

    @property
    def mean(self) -> float:
        return self.theta

    def params(self) -> dict:
        return {"p": self.p.tolist()}

    @cached_property
    def _table(self) -> np.ndarray:
        # coefficients of prod_j (1 - p_j + p_j s)
        table = np.zeros(self.p.size + 1)
        table[0] = 1.0
        for j, pj in enumerate(self.p, start=1):
            table[1 : j + 1] = table[1 : j + 1] * (1.0 - pj) + table[0:j] * pj
            table[0] *= 1.0 - pj
        return table

    def pmf(self, k: int) -> float:
        if k < 0 or k > self.p.size:
            return 0.0
        return float(self._table[k])

    def pmf_array(self, kmax: int) -> np.ndarray:
        out = np.zeros(kmax + 1)
        top = min(kmax, self.p.size)
        out[: top + 1] = self._table[: top + 1]
        return out

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        cdf = np.cumsum(self._table)
        cdf[-1] = 1.0
        return np.searchsorted(cdf, rng.random(size), side="right").astype(np.int64)


class Binomial(PoissonBinomial):
    kind = "binomial"

    def __init__(self, n: int, p: float):
        if int(n) != n or n < 1:
            raise DomainError(f"n must be a positive integer, got {n}")
        if not 0 < p <= 1:
            raise DomainError(f"p must lie in (0, 1], got {p}")
        self.n = int(n)
        self.prob = float(p)
        super().__init__(np.full(self.n, self.prob))

    @property
    def theta(self) -> float:
        return self.n * self.prob

    def params(self) -> dict:
        return {"n": self.n, "p": self.prob}

    def pmf(self, k: int) -> float:
        if k < 0 or k > self.n:
            return 0.0
        if self.prob == 1.0:
            return 1.0 if k == self.n else 0.0
        log_c = math.lgamma(self.n + 1) - math.lgamma(k + 1) - math.lgamma(self.n - k + 1)
        return math.exp(log_c + k * math.log(self.prob) + (self.n - k) * math.log1p(-self.prob))

    def pmf_array(self, kmax: int) -> np.ndarray:
        return np.array([self.pmf(k) for k in range(kmax + 1)])

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.binomial(self.n, self.prob, size)


class Poisson(CountingLaw):
    kind = "poisson"

    def __init__(self, lam: float):
        if not lam > 0:
            raise DomainError(f"lambda must be positive, got {lam}")
        self.lam = float(lam)
        self.mixing = DegenerateMixing(self.lam)

    @property
    def mean(self) -> float:
        return self.lam

    def params(self) -> dict:
        return {"lam": self.lam}

    def pmf(self, k: int) -> float:
        if k < 0:
            return 0.0
        return math.exp(k * math.log(self.lam) - self.lam - math.lgamma(k + 1))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.poisson(self.lam, size)


class NegativeBinomial(CountingLaw):
    """Mixed Poisson with gamma(r, scale n) mixing."""

    kind = "negative_binomial"

    def __init__(self, r: float, n: float):
        self.mixing = GammaMixing(r, n)
        self.r = float(r)
        self.n = float(n)

    @property
    def mean(self) -> float:
        return self.r * self.n

    def params(self) -> dict:
        return {"r": self.r, "n": self.n}

    def pmf(self, k: int) -> float:
        if k < 0:
            return 0.0
        r, n = self.r, self.n
        log_p = (
            math.lgamma(r + k)
            - math.lgamma(r)
            - math.lgamma(k + 1)
            - r * math.log1p(n)
            + k * (math.log(n) - math.log1p(n))
        )
        return math.exp(log_p)


class Geometric(NegativeBinomial):
    """P(N = k) = (1/(n+1)) (n/(n+1))^k: exponential mixing with mean n."""

    kind = "geometric"

    def __init__(self, n: float):
        super().__init__(1.0, n)
        self.mixing = ExponentialMixing(n)

    def params(self) -> dict:
        return {"n": self.n}

    def pmf(self, k: int) -> float:
        if k < 0:
            return 0.0
        n = self.n
        return math.exp(-math.log1p(n) + k * (math.log(n) - math.log1p(n)))


class PoissonInverseGamma(CountingLaw):
    """Mixed Poisson with inverse-gamma(r/2, n/2) mixing, r > 1."""

    kind = "poisson_inverse_gamma"

    def __init__(self, r: float, n: float):
        self.mixing = InverseGammaMixing(r, n)
        self.r = float(r)
        self.n = float(n)

    @property
    def mean(self) -> float:
        return self.mixing.mean

    def params(self) -> dict:
        return {"r": self.r, "n": self.n}

    def pmf(self, k: int) -> float:
        # integrate over w = 1/lambda, which is gamma(r/2, rate n/2); the
        # integrand vanishes smoothly at both ends
        if k < 0:
            return 0.0
        a = self.r / 2
        rate = self.n / 2

        def logf(w: float) -> float:
            return (
                -1.0 / w
                + (a - 1.0 - k) * math.log(w)
                - rate * w
                + a * math.log(rate)
                - math.lgamma(a)
                - math.lgamma(k + 1)
            )

        c = a - 1.0 - k
        w_peak = (c + math.sqrt(c * c + 4.0 * rate)) / (2.0 * rate)
        peak = logf(w_peak)

        def f(w: float) -> float:
            if w <= 0.0:
                return 0.0
            return math.exp(logf(w) - peak)

        edges = [0.0, w_peak / 8, w_peak / 2, w_peak, 2 * w_peak, 8 * w_peak, math.inf]
        total = 0.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            for lo, hi in zip(edges, edges[1:]):
                total += integrate.quad(f, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
        return total * math.exp(peak)


COUNTING_LAWS = {
    "fixed": Fixed,
    "poisson_binomial": PoissonBinomial,
    "binomial": Binomial,
    "poisson": Poisson,
    "geometric": Geometric,
    "negative_binomial": NegativeBinomial,
    "poisson_inverse_gamma": PoissonInverseGamma,
}


def make_counting(kind: str, **params) -> CountingLaw:
    try:
        return COUNTING_LAWS[kind](**params)
    except KeyError:
        raise DomainError(f"unknown counting law {kind!r}; choose from {sorted(COUNTING_LAWS)}") from None


def pmf(law: CountingLaw, k: int) -> float:
    return law.pmf(k)


def theta(law: CountingLaw) -> float:
    if not isinstance(law, PoissonBinomial):
        raise DomainError(f"theta is defined for Poisson-binomial laws, not {law.kind}")
    return law.theta


def sample_count(law: CountingLaw, seed: int) -> int:
    return int(law.sample(np.random.default_rng(seed), 1)[0])

"""Gamma-family special functions and normal CDFs.

The incomplete gamma functions follow the usual split: a power series for
the lower function when ``z < alpha + 1`` and a Lentz continued fraction for
the upper function otherwise.  The complementary value is obtained by
subtraction from one in regularized form, so ``P + Q == 1`` holds to
rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConvergenceError, DomainError

_FPMIN = 1e-300
_EULER_GAMMA = 0.57721566490153286061
_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class PrecisionPolicy:
    """Stopping rule shared by the series and continued fractions.

    ``abs_tol`` is the target absolute accuracy of regularized values
    (which live in [0, 1]); iterations stop once the relative update falls
    below ``abs_tol * 1e-4`` or machine epsilon, whichever is larger.
    """

    abs_tol: float = 1e-12
    max_iter: int = 1000

    def __post_init__(self) -> None:
        if not self.abs_tol > 0:
            raise DomainError(f"abs_tol must be positive, got {self.abs_tol}")
        if self.max_iter < 1:
            raise DomainError(f"max_iter must be >= 1, got {self.max_iter}")

    @property
    def step_tol(self) -> float:
        return max(self.abs_tol * 1e-4, 2.220446049250313e-16)


DEFAULT_POLICY = PrecisionPolicy()


def _check_alpha_z(alpha: float, z: float) -> None:
    if not alpha > 0 or math.isinf(alpha):
        raise DomainError(f"alpha must be positive and finite, got {alpha}")
    if not z >= 0:
        raise DomainError(f"z must be nonnegative, got {z}")


def log_gamma(alpha: float) -> float:
    """Return ``ln Gamma(alpha)`` for ``alpha > 0``."""
    if not alpha > 0:
        raise DomainError(f"log_gamma needs alpha > 0, got {alpha}")
    return math.lgamma(alpha)


def _log_prefactor(alpha: float, z: float) -> float:
    # ln(z^alpha e^-z / Gamma(alpha))
    return alpha * math.log(z) - z - math.lgamma(alpha)


def _lower_series(alpha: float, z: float, policy: PrecisionPolicy) -> float:
    term = 1.0 / alpha
    total = term
    ap = alpha
    for _ in range(policy.max_iter):
        ap += 1.0
        term *= z / ap
        total += term
        if abs(term) < abs(total) * policy.step_tol:
            return total * math.exp(_log_prefactor(alpha, z))
    raise ConvergenceError(f"lower gamma series did not converge (alpha={alpha}, z={z})")


def _upper_contfrac(alpha: float, z: float, policy: PrecisionPolicy) -> float:
    """Continued fraction for e^z z^-alpha Gamma(alpha, z); valid for any real alpha, z > 0."""
    b = z + 1.0 - alpha
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, policy.max_iter + 1):
        an = -i * (i - alpha)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < policy.step_tol:
            return h
    raise ConvergenceError(f"upper gamma continued fraction did not converge (alpha={alpha}, z={z})")


def regularized_lower_gamma(alpha: float, z: float, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """P(alpha, z) = gamma(alpha, z) / Gamma(alpha)."""
    _check_alpha_z(alpha, z)
    if z == 0.0:
        return 0.0
    if math.isinf(z):
        return 1.0
    if z < alpha + 1.0:
        return min(_lower_series(alpha, z, policy), 1.0)
    q = _upper_contfrac(alpha, z, policy) * math.exp(_log_prefactor(alpha, z))
    return 1.0 - q


def regularized_upper_gamma(alpha: float, z: float, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """Q(alpha, z) = Gamma(alpha, z) / Gamma(alpha)."""
    _check_alpha_z(alpha, z)
    if z == 0.0:
        return 1.0
    if math.isinf(z):
        return 0.0
    if z < alpha + 1.0:
        return max(1.0 - _lower_series(alpha, z, policy), 0.0)
    return _upper_contfrac(alpha, z, policy) * math.exp(_log_prefactor(alpha, z))


def lower_incomplete_gamma(alpha: float, z: float, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """gamma(alpha, z), the integral of y^(alpha-1) e^-y over [0, z]."""
    p = regularized_lower_gamma(alpha, z, policy)
    return p * math.exp(math.lgamma(alpha))


def upper_incomplete_gamma(alpha: float, z: float, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """Gamma(alpha, z), the integral of y^(alpha-1) e^-y over [z, inf)."""
    q = regularized_upper_gamma(alpha, z, policy)
    return q * math.exp(math.lgamma(alpha))


def exp_integral_e1(z: float, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """E1(z) = Gamma(0, z) for z > 0."""
    if not z > 0:
        raise DomainError(f"E1 needs z > 0, got {z}")
    if z > 1.0:
        return _upper_contfrac(0.0, z, policy) * math.exp(-z)
    total = 0.0
    term = 1.0
    for k in range(1, policy.max_iter + 1):
        term *= -z / k
        step = term / k
        total += step
        if abs(step) < policy.step_tol * max(abs(total), 1e-300):
            return -_EULER_GAMMA - math.log(z) - total
    raise ConvergenceError(f"E1 series did not converge (z={z})")


def upper_gamma_any(alpha: float, z: float, policy: PrecisionPolicy = DEFAULT_POLICY) -> float:
    """Gamma(alpha, z) for any real alpha and z > 0.

    Nonpositive alpha is reduced to (0, 1] by the recurrence
    Gamma(a, z) = (Gamma(a + 1, z) - z^a e^-z) / a, with Gamma(0, z) = E1(z).
    """
    if alpha > 0:
        return upper_incomplete_gamma(alpha, z, policy)
    if not z > 0:
        raise DomainError(f"Gamma(alpha, z) with alpha <= 0 needs z > 0, got {z}")
    if alpha == 0.0:
        return exp_integral_e1(z, policy)
    return (upper_gamma_any(alpha + 1.0, z, policy) - z**alpha * math.exp(-z)) / alpha


def _beta_contfrac(a: float, b: float, x: float, policy: PrecisionPolicy) -> float:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, policy.max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < policy.step_tol:
            return h
    raise ConvergenceError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def regularized_beta(
    a: float,
    b: float,
    x: float,
    xc: float | None = None,
    policy: PrecisionPolicy = DEFAULT_POLICY,
) -> float:
    """I_x(a, b).  Pass ``xc = 1 - x`` when it is known more accurately than by subtraction."""
    if not (a > 0 and b > 0):
        raise DomainError(f"incomplete beta needs a, b > 0, got a={a}, b={b}")
    if xc is None:
        xc = 1.0 - x
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"incomplete beta needs x in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if xc == 0.0:
        return 1.0
    log_bt = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log(xc)
    bt = math.exp(log_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _beta_contfrac(a, b, x, policy) / a
    return 1.0 - bt * _beta_contfrac(b, a, xc, policy) / b


def std_normal_cdf(x: float) -> float:
    """Standard normal distribution function Phi(x)."""
    return 0.5 * math.erfc(-x / _SQRT2)


def folded_normal_cdf(x: float) -> float:
    """Phi_0(x) = 2 Phi(x) - 1 for x >= 0 and 0 for x < 0, i.e. P(|zeta| < x)."""
    if x <= 0.0:
        return 0.0
    return math.erf(x / _SQRT2)


def folded_normal_sf(x: float) -> float:
    """1 - Phi_0(x), accurate in the upper tail."""
    if x <= 0.0:
        return 1.0
    return math.erfc(x / _SQRT2)

"""Right-hand sides of the concentration-function inequalities.

Each Q-bound is the matching uniform-distance (Berry-Esseen type) bound
multiplied by 4, the factor that transfers a sup-CDF distance to a
concentration-function distance.  For half-open windows the factor is 2, so
every constant is halved.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import dists
from .counting import ExponentialMixing, GammaMixing, InverseGammaMixing, MixingLaw
from .dists import SummandModel, SummandVector
from .errors import DomainError

THEOREM_IDS = ("t1", "c1", "t2", "t3", "t4", "c2", "c3", "t5", "t6", "t5-3rd", "t7", "c4", "c5", "c6")


@dataclass(frozen=True)
class ConstantsRegistry:
    c_be_general: float = 1.8627
    c_be_iid: float = 1.8546
    c_be_poisson_3rd: float = 0.3031
    c_q_general: float = 7.4508
    c_q_iid: float = 7.4184
    c_q_poisson_3rd: float = 1.2124
    lemma1_factor: float = 4.0
    halfopen_factor: float = 2.0

    def __post_init__(self) -> None:
        pairs = (
            (self.c_q_general, self.c_be_general),
            (self.c_q_iid, self.c_be_iid),
            (self.c_q_poisson_3rd, self.c_be_poisson_3rd),
        )
        for q, be in pairs:
            if abs(q - self.lemma1_factor * be) > 1e-12:
                raise DomainError(f"Q-constant {q} is not {self.lemma1_factor} x {be}")

    def q_constant(self, name: str, halfopen: bool = False) -> float:
        """Constant for the closed-window Q-bound ``name`` (general, iid or poisson_3rd)."""
        be = getattr(self, f"c_be_{name}")
        factor = self.halfopen_factor if halfopen else self.lemma1_factor
        return factor * be


CONSTANTS = ConstantsRegistry()


# ----------------------------------------------------------- class G weights


@dataclass(frozen=True)
class GFunction:
    evaluator: Callable[[float], float]
    label: str

    def __call__(self, x: float) -> float:
        return self.evaluator(x)


G_ABS = GFunction(abs, "abs")
G_ONE = GFunction(lambda x: 1.0, "one")


def g_power(delta: float) -> GFunction:
    """|x|^delta, a member of the class for 0 <= delta <= 1."""
    return GFunction(lambda x: abs(x) ** delta, f"power:{delta:g}")


def g_capped(c: float) -> GFunction:
    """min(|x|, c)."""
    return GFunction(lambda x: min(abs(x), c), f"capped:{c:g}")


def parse_g(label: str) -> GFunction:
    """Build a weight from ``abs``, ``one``, ``power:<delta>`` or ``capped:<c>``."""
    label = label.strip()
    if label == "abs":
        return G_ABS
    if label == "one":
        return G_ONE
    name, _, arg = label.partition(":")
    if name == "power" and arg:
        return g_power(float(arg))
    if name == "capped" and arg:
        return g_capped(float(arg))
    raise DomainError(f"unknown weight function {label!r}")


@dataclass
class GValidation:
    ok: bool
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def validate_g(g: GFunction, grid: Sequence[float], rtol: float = 1e-12) -> GValidation:
    """Check the class conditions on a finite positive grid.

    This is a necessary-condition test: evenness, nonnegativity with
    positivity for x > 0, and monotonicity of g and x/g along the grid.
    """
    xs = np.asarray(grid, dtype=float)
    if xs.size == 0 or np.any(xs <= 0) or np.any(np.diff(xs) <= 0):
        raise DomainError("the grid must be nonempty, positive and increasing")
    pos = np.array([g(float(x)) for x in xs])
    neg = np.array([g(float(-x)) for x in xs])
    bad: list[str] = []
    if np.any(np.abs(pos - neg) > rtol * np.maximum(np.abs(pos), 1.0)):
        bad.append("not even")
    if np.any(pos <= 0) or np.any(neg < 0) or g(0.0) < 0:
        bad.append("not positive for x > 0")
    if np.any(np.diff(pos) < -rtol * np.abs(pos[1:])):
        bad.append("g decreases")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = xs / pos
    if np.any(~np.isfinite(ratio)) or np.any(np.diff(ratio) < -rtol * np.abs(ratio[1:])):
        bad.append("x/g(x) decreases")
    return GValidation(not bad, bad)


# --------------------------------------------------------------- bound values


def _digest(inputs: dict) -> str:
    blob = json.dumps(inputs, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class BoundValue:
    theorem_id: str
    value: float
    inputs: dict
    inputs_digest: str = ""

    def __post_init__(self) -> None:
        if not self.value >= 0:
            raise DomainError(f"bound value must be nonnegative, got {self.value}")
        if not self.inputs_digest:
            object.__setattr__(self, "inputs_digest", _digest(self.inputs))

    @property
    def vacuous(self) -> bool:
        return self.value > 1.0

    def as_record(self) -> dict:
        return {"theorem_id": self.theorem_id, "inputs": self.inputs, "value": self.value}


def _model_inputs(model: SummandModel) -> dict:
    return {"kind": model.kind, **model.params()}


def _sv_inputs(sv: SummandVector) -> list:
    return [{"model": _model_inputs(m), "count": k} for m, k in sv.grouped()]


# ------------------------------------------------------- heterogeneous sums


def lindeberg_fraction(sv: SummandVector, eps: float) -> float:
    """(1/B^2) sum_i E X_i^2 1(|X_i| >= eps B)."""
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    t = eps * sv.B
    return math.fsum(k * m.truncated_second_moment(t) for m, k in sv.grouped()) / sv.B2


def lyapunov_fraction(sv: SummandVector, eps: float) -> float:
    """(1/B^3) sum_i E |X_i|^3 1(|X_i| < eps B)."""
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    t = eps * sv.B
    return math.fsum(k * m.truncated_third_abs_moment(t) for m, k in sv.grouped()) / (sv.B2 * sv.B)


def theorem1_bound(sv: SummandVector, eps: float, halfopen: bool = False) -> BoundValue:
    c = CONSTANTS.q_constant("general", halfopen)
    value = c * (lindeberg_fraction(sv, eps) + lyapunov_fraction(sv, eps))
    return BoundValue("t1", value, {"summands": _sv_inputs(sv), "eps": eps, "halfopen": halfopen})


def corollary1_bound(sv: SummandVector, eps: float, halfopen: bool = False) -> BoundValue:
    c = CONSTANTS.q_constant("general", halfopen)
    value = c * (eps + lindeberg_fraction(sv, eps))
    return BoundValue("c1", value, {"summands": _sv_inputs(sv), "eps": eps, "halfopen": halfopen})


def default_eps_grid() -> np.ndarray:
    return np.logspace(-3.0, 0.0, 64)


def minimize_over_eps(
    bound: Callable[..., BoundValue],
    sv: SummandVector,
    grid: Sequence[float] | None = None,
    halfopen: bool = False,
) -> tuple[float, BoundValue]:
    """Smallest bound over an eps-grid; returns (argmin eps, bound)."""
    eps_grid = default_eps_grid() if grid is None else np.asarray(grid, dtype=float)
    best: tuple[float, BoundValue] | None = None
    for eps in eps_grid:
        bv = bound(sv, float(eps), halfopen=halfopen)
        if best is None or bv.value < best[1].value:
            best = (float(eps), bv)
    assert best is not None
    return best


def theorem2_bound(sv: SummandVector, g: GFunction, halfopen: bool = False) -> BoundValue:
    c = CONSTANTS.q_constant("general", halfopen)
    total = math.fsum(k * dists.g_weighted_second_moment(m, g) for m, k in sv.grouped())
    value = c * total / (sv.B2 * g(sv.B))
    return BoundValue("t2", value, {"summands": _sv_inputs(sv), "g": g.label, "halfopen": halfopen})


# --------------------------------------------------------- i.i.d. summands


def _katz_bound(tid: str, const: str, model: SummandModel, scale2: float, halfopen: bool, **extra) -> BoundValue:
    if not scale2 > 0:
        raise DomainError(f"the count parameter must be positive, got {scale2}")
    s2 = model.variance
    value = CONSTANTS.q_constant(const, halfopen) / s2 * dists.katz_functional(model, math.sqrt(s2 * scale2))
    return BoundValue(tid, value, {"summand": _model_inputs(model), **extra, "halfopen": halfopen})


def _g_bound(
    tid: str, const: str, model: SummandModel, scale2: float, g: GFunction, halfopen: bool, **extra
) -> BoundValue:
    if not scale2 > 0:
        raise DomainError(f"the count parameter must be positive, got {scale2}")
    s2 = model.variance
    moment = dists.g_weighted_second_moment(model, g)
    value = CONSTANTS.q_constant(const, halfopen) * moment / (s2 * g(math.sqrt(s2 * scale2)))
    return BoundValue(tid, value, {"summand": _model_inputs(model), "g": g.label, **extra, "halfopen": halfopen})


def theorem3_bound(model: SummandModel, theta: float, halfopen: bool = False) -> BoundValue:
    """Poisson-binomial random sum with theta = p_1 + ... + p_n."""
    return _katz_bound("t3", "general", model, theta, halfopen, theta=theta)


def theorem4_bound(model: SummandModel, theta: float, g: GFunction, halfopen: bool = False) -> BoundValue:
    return _g_bound("t4", "general", model, theta, g, halfopen, theta=theta)


def corollary2_bound(model: SummandModel, n: int, p: float, halfopen: bool = False) -> BoundValue:
    """Binomial random sum, theta = np."""
    return _katz_bound("c2", "iid", model, n * p, halfopen, n=n, p=p)


def corollary3_bound(model: SummandModel, n: int, p: float, g: GFunction, halfopen: bool = False) -> BoundValue:
    return _g_bound("c3", "iid", model, n * p, g, halfopen, n=n, p=p)


def theorem5_bound(model: SummandModel, lam: float, halfopen: bool = False) -> BoundValue:
    """Poisson random sum with intensity lam."""
    return _katz_bound("t5", "iid", model, lam, halfopen, lam=lam)


def theorem6_bound(model: SummandModel, lam: float, g: GFunction, halfopen: bool = False) -> BoundValue:
    return _g_bound("t6", "iid", model, lam, g, halfopen, lam=lam)


def theorem5_third_moment_bound(model: SummandModel, lam: float, halfopen: bool = False) -> BoundValue:
    """1.2124 E|X|^3 / (sigma^3 sqrt(lam)); needs a finite third moment."""
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    m3 = dists.abs_third_moment(model)
    sigma = math.sqrt(model.variance)
    value = CONSTANTS.q_constant("poisson_3rd", halfopen) * m3 / (sigma**3 * math.sqrt(lam))
    return BoundValue("t5-3rd", value, {"summand": _model_inputs(model), "lam": lam, "halfopen": halfopen})


def theorem7_bound(model: SummandModel, mix: MixingLaw, halfopen: bool = False, theorem_id: str = "t7") -> BoundValue:
    """(7.4184 / sigma^2) E X^2 G(X) for a mixed Poisson random sum with mixing law ``mix``."""
    if not math.isfinite(mix.mean):
        raise DomainError("the mixing law must have a finite mean")
    sigma = math.sqrt(model.variance)
    kernel = dists.mixed_katz_functional(model, mix, sigma)
    value = CONSTANTS.q_constant("iid", halfopen) / model.variance * kernel
    inputs = {"summand": _model_inputs(model), "mix": {"kind": mix.kind, **mix.params()}, "halfopen": halfopen}
    return BoundValue(theorem_id, value, inputs)


def corollary4_bound(model: SummandModel, n: float, halfopen: bool = False) -> BoundValue:
    """Geometric random sum (exponential mixing with mean n)."""
    return theorem7_bound(model, ExponentialMixing(n), halfopen, theorem_id="c4")


def corollary5_bound(model: SummandModel, r: float, n: float, halfopen: bool = False) -> BoundValue:
    """Negative binomial random sum (gamma mixing, shape r, scale n)."""
    return theorem7_bound(model, GammaMixing(r, n), halfopen, theorem_id="c5")


def corollary6_bound(model: SummandModel, r: float, n: float, halfopen: bool = False) -> BoundValue:
    """Poisson-inverse-gamma random sum (inverse-gamma mixing with parameters r/2, n/2); needs r > 2."""
    return theorem7_bound(model, InverseGammaMixing(r, n), halfopen, theorem_id="c6")

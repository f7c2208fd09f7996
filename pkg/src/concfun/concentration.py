"""Concentration functions: empirical, exact-lattice and reference curves.

Q(z) = sup_x P(x <= xi <= x + z) and its half-open variant with windows
[x, x + z).  For a sample or a finite atom set the supremum is attained with
the left edge on an atom, so windows are anchored at sorted values and
scanned by the kernels in :mod:`concfun.kernels`.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy import optimize

from . import kernels
from .errors import DomainError

DEFAULT_GRID_POINTS = 512
DEFAULT_GRID_SPAN = 8.0


@dataclass(frozen=True)
class SortedSample:
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise DomainError("a sample needs at least one value")
        if not np.all(np.isfinite(v)):
            raise DomainError("sample values must be finite")
        if v.size > 1 and np.any(np.diff(v) < 0):
            raise DomainError("sample values must be sorted; use SortedSample.of")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def of(cls, values: Iterable[float]) -> "SortedSample":
        if not isinstance(values, np.ndarray):
            values = list(values)
        return cls(np.sort(np.asarray(values, dtype=float)))

    @property
    def size(self) -> int:
        return int(self.values.size)


class AtomicLaw:
    """A finitely supported probability law (atoms need not have mean zero)."""

    def __init__(self, values: Sequence[float], probs: Sequence[float], decimals: int | None = None):
        v = np.asarray(values, dtype=float)
        p = np.asarray(probs, dtype=float)
        if v.shape != p.shape or v.ndim != 1 or v.size == 0:
            raise DomainError("atoms and probabilities must be matching nonempty vectors")
        key = np.round(v, decimals) if decimals is not None else v
        uniq, inv = np.unique(key, return_inverse=True)
        self.values = uniq
        self.probs = np.bincount(inv, weights=p, minlength=uniq.size)

    @classmethod
    def point(cls, x: float = 0.0) -> "AtomicLaw":
        return cls([x], [1.0])

    @property
    def total_mass(self) -> float:
        return float(self.probs.sum())

    def cdf(self, x: float) -> float:
        return float(self.probs[self.values <= x].sum())

    def cdf_left(self, x: float) -> float:
        return float(self.probs[self.values < x].sum())

    def convolve(self, other: "AtomicLaw", decimals: int = 10) -> "AtomicLaw":
        vals = (self.values[:, None] + other.values[None, :]).ravel()
        probs = (self.probs[:, None] * other.probs[None, :]).ravel()
        return AtomicLaw(vals, probs, decimals=decimals)

    def pruned(self, floor: float = 0.0) -> "AtomicLaw":
        keep = self.probs > floor
        return AtomicLaw(self.values[keep], self.probs[keep])

    def variance(self) -> float:
        mean = float(self.values @ self.probs)
        return float(((self.values - mean) ** 2) @ self.probs)

    def __repr__(self) -> str:
        return f"AtomicLaw(n_atoms={self.values.size}, mass={self.total_mass:.12g})"


@dataclass(frozen=True)
class ConcentrationCurve:
    z: np.ndarray
    q: np.ndarray

    def __post_init__(self) -> None:
        z = np.asarray(self.z, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if z.shape != q.shape or z.ndim != 1:
            raise DomainError("z and q must be matching vectors")
        if z.size > 1 and np.any(np.diff(z) <= 0):
            raise DomainError("the z-grid must be increasing")
        if np.any(z < 0):
            raise DomainError("the z-grid must be nonnegative")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "q", q)

    def is_valid(self, atol: float = 1e-12) -> bool:
        """q in [0, 1] and nondecreasing along the grid."""
        in_range = bool(np.all(self.q >= -atol) and np.all(self.q <= 1 + atol))
        return in_range and bool(np.all(np.diff(self.q) >= -atol))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["z", "q"])
        for zi, qi in zip(self.z, self.q):
            w.writerow([f"{zi:.10g}", f"{qi:.10g}"])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"z": [float(f"{x:.10g}") for x in self.z], "q": [float(f"{x:.10g}") for x in self.q]})

    @classmethod
    def from_csv(cls, text: str) -> "ConcentrationCurve":
        rows = list(csv.reader(io.StringIO(text)))
        data = np.array([[float(a), float(b)] for a, b in rows[1:] if a])
        return cls(data[:, 0], data[:, 1])


class Deviation(NamedTuple):
    value: float
    z_at: float
    grid_spacing: float


# --------------------------------------------------------------- estimators


def q_hat_curve(sample: SortedSample, zs: Sequence[float], closed: bool = True) -> np.ndarray:
    """Empirical concentration function on a grid (closed or half-open windows)."""
    z = np.asarray(zs, dtype=float)
    if np.any(z < 0):
        raise DomainError("window lengths must be nonnegative")
    if not closed and np.any(z <= 0):
        raise DomainError("the half-open concentration function needs z > 0")
    counts = kernels.window_counts_max(sample.values, z, closed=closed)
    return counts / sample.size


def q_hat_closed(sample: SortedSample, z: float) -> float:
    """max_x of the empirical mass of [x, x + z]."""
    return float(q_hat_curve(sample, [z], closed=True)[0])


def q_hat_halfopen(sample: SortedSample, z: float) -> float:
    """max_x of the empirical mass of [x, x + z), z > 0."""
    if not z > 0:
        raise DomainError(f"the half-open concentration function needs z > 0, got {z}")
    return float(q_hat_curve(sample, [z], closed=False)[0])


def q_exact_curve(law, zs: Sequence[float], closed: bool = True) -> np.ndarray:
    """Exact concentration function of a finitely supported law on a grid."""
    values, probs = _atoms(law)
    z = np.asarray(zs, dtype=float)
    if not closed and np.any(z <= 0):
        raise DomainError("the half-open concentration function needs z > 0")
    return kernels.window_mass_max(values, probs, z, closed=closed)


def q_exact_lattice(law, z: float, closed: bool = True) -> float:
    return float(q_exact_curve(law, [z], closed=closed)[0])


def _atoms(law) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(law, AtomicLaw) or getattr(law, "is_lattice", False):
        return law.values, law.probs
    raise DomainError(f"{law!r} is not a finitely supported law")


def lemma2_reference(law, z: float) -> float:
    """P(|xi| < z/2) = F(z/2-) - F(-z/2); the concentration function of a symmetric unimodal law."""
    if z < 0:
        raise DomainError(f"z must be nonnegative, got {z}")
    if z == 0:
        return 0.0
    left = law.cdf_left(z / 2) if hasattr(law, "cdf_left") else law.cdf(z / 2)
    return max(left - law.cdf(-z / 2), 0.0)


def _q_numeric(model, z: float, points: int = 8001) -> float:
    """sup_x [F(x + z) - F(x-)] by a grid over window positions and a bounded refinement."""
    reach = z / 2 + 4.0 * max(model.scale_hint, 1.0)
    xs = -z / 2 + np.linspace(-reach, reach, points)

    def mass(x: float) -> float:
        return model.cdf(x + z) - model.cdf_left(x)

    vals = np.array([mass(float(x)) for x in xs])
    k = int(np.argmax(vals))
    step = xs[1] - xs[0]
    res = optimize.minimize_scalar(
        lambda x: -mass(x), bounds=(xs[k] - step, xs[k] + step), method="bounded", options={"xatol": 1e-10}
    )
    return max(float(vals[k]), -float(res.fun))


def q_reference(model, z: float) -> float:
    """Reference concentration function of a summand law: exact, by the symmetric unimodal formula, or numeric."""
    if getattr(model, "is_lattice", False) or isinstance(model, AtomicLaw):
        return q_exact_lattice(model, z)
    if z == 0:
        return 0.0
    if getattr(model, "symmetric_unimodal", False):
        return lemma2_reference(model, z)
    return _q_numeric(model, z)


# ------------------------------------------------------------ comparisons


def sup_deviation(curve_a: ConcentrationCurve, curve_b: ConcentrationCurve) -> Deviation:
    """Grid maximum of |a - b|, with the largest grid spacing for discretization bookkeeping."""
    if curve_a.z.shape != curve_b.z.shape or not np.array_equal(curve_a.z, curve_b.z):
        raise DomainError("curves must share the same z-grid")
    diff = np.abs(curve_a.q - curve_b.q)
    k = int(np.argmax(diff))
    spacing = float(np.max(np.diff(curve_a.z))) if curve_a.z.size > 1 else 0.0
    return Deviation(float(diff[k]), float(curve_a.z[k]), spacing)


def dkw_epsilon(m: int, confidence: float = 0.99) -> float:
    """DKW radius for the sup-CDF error of an m-sample at the given confidence.

    Uses sqrt(ln(2/alpha) / (2m)) with alpha = (1 - confidence) / 2, i.e.
    ln(400) at 99%.
    """
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    if not 0 < confidence < 1:
        raise DomainError(f"confidence must lie in (0, 1), got {confidence}")
    alpha = (1.0 - confidence) / 2.0
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * m))


def mc_error_budget(m: int, confidence: float = 0.99, halfopen: bool = False) -> float:
    """Bound on the Q-error of an m-sample estimate: 4 (or 2 for half-open) DKW radii."""
    return (2.0 if halfopen else 4.0) * dkw_epsilon(m, confidence)


def chebyshev_lower_bound(curve: ConcentrationCurve) -> float:
    """(1/4) max over the grid of z^2 (1 - Q(z)); never exceeds the variance."""
    return float(0.25 * np.max(curve.z**2 * (1.0 - curve.q)))


def default_grid(scale: float, points: int = DEFAULT_GRID_POINTS, span: float = DEFAULT_GRID_SPAN) -> np.ndarray:
    if not scale > 0:
        raise DomainError(f"grid scale must be positive, got {scale}")
    return np.linspace(0.0, span * scale, points)


def parse_grid(spec: str) -> np.ndarray:
    """``"start:stop:count"`` for an evenly spaced grid, or a comma-separated list."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise DomainError(f"grid spec {spec!r} must be start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1 or stop < start:
            raise DomainError(f"bad grid spec {spec!r}")
        return np.linspace(start, stop, count)
    return np.array([float(x) for x in spec.split(",") if x.strip()])

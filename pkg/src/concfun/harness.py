"""Verification experiments: simulate a random sum, compare its concentration
curve with the limit law, and check the deviation against the theorem bound.

Configurations are flat ``key = value`` documents::

    theorem = t5
    summand = symmetrized_pareto
    summand.beta = 2.5
    counting = poisson
    counting.lam = 100
    m = 1000000
    seed = 7

Vector parameters are comma separated or written ``linspace(a, b, k)``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from . import bounds, concentration, counting, dists, limits
from .concentration import AtomicLaw, ConcentrationCurve, SortedSample
from .counting import CountingLaw
from .dists import SummandModel, SummandVector
from .errors import ConfigError, DomainError

BATCH_SIZE = 250_000

_THEOREM_COUNTING = {
    "t1": {"fixed"},
    "c1": {"fixed"},
    "t2": {"fixed"},
    "t3": {"poisson_binomial", "binomial"},
    "t4": {"poisson_binomial", "binomial"},
    "c2": {"binomial"},
    "c3": {"binomial"},
    "t5": {"poisson"},
    "t6": {"poisson"},
    "t5-3rd": {"poisson"},
    "t7": {"poisson", "geometric", "negative_binomial", "poisson_inverse_gamma"},
    "c4": {"geometric"},
    "c5": {"negative_binomial"},
    "c6": {"poisson_inverse_gamma"},
}
_NEEDS_G = {"t2", "t4", "c3", "t6"}


# ------------------------------------------------------------------- config


def _parse_value(text: str) -> Any:
    text = text.strip()
    if text.startswith("linspace(") and text.endswith(")"):
        a, b, k = (s.strip() for s in text[len("linspace(") : -1].split(","))
        return np.linspace(float(a), float(b), int(k)).tolist()
    if "," in text:
        return [_parse_scalar(s) for s in text.split(",") if s.strip()]
    return _parse_scalar(text)


def _parse_scalar(text: str) -> Any:
    text = text.strip()
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_kv(text: str) -> dict[str, str]:
    """Read a flat ``key = value`` document; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key = key.strip()
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def _sub_params(kv: dict[str, str], prefix: str) -> dict[str, Any]:
    return {k[len(prefix) + 1 :]: _parse_value(v) for k, v in kv.items() if k.startswith(prefix + ".")}


def summand_from_kv(kv: dict[str, str]) -> SummandModel:
    if "summand" not in kv:
        raise ConfigError("missing key 'summand'")
    try:
        return dists.make_summand(kv["summand"], **_sub_params(kv, "summand"))
    except (DomainError, TypeError) as exc:
        raise ConfigError(f"bad summand specification: {exc}") from exc


def counting_from_kv(kv: dict[str, str]) -> CountingLaw:
    if "counting" not in kv:
        raise ConfigError("missing key 'counting'")
    params = _sub_params(kv, "counting")
    if "p" in params and kv["counting"] == "poisson_binomial" and not isinstance(params["p"], list):
        params["p"] = [params["p"]]
    try:
        return counting.make_counting(kv["counting"], **params)
    except (DomainError, TypeError) as exc:
        raise ConfigError(f"bad counting specification: {exc}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    theorem_id: str
    summand: SummandModel
    counting: CountingLaw
    m: int = 1_000_000
    seed: int = 0
    g: str | None = None
    eps: float | None = None
    grid: str = "auto"
    grid_points: int = concentration.DEFAULT_GRID_POINTS
    confidence: float = 0.99
    mode: str = "empirical"
    tail_eps: float = 1e-12
    workers: int = 1

    def __post_init__(self) -> None:
        tid = self.theorem_id
        if tid not in _THEOREM_COUNTING:
            raise ConfigError(f"unknown theorem id {tid!r}; choose from {list(bounds.THEOREM_IDS)}")
        if self.counting.kind not in _THEOREM_COUNTING[tid]:
            raise ConfigError(
                f"theorem {tid} needs counting law in {sorted(_THEOREM_COUNTING[tid])}, got {self.counting.kind!r}"
            )
        if self.counting.kind == "fixed" and self.counting.n < 1:  # type: ignore[attr-defined]
            raise ConfigError("a plain sum needs n >= 1")
        if tid in _NEEDS_G and not self.g:
            raise ConfigError(f"theorem {tid} needs a weight function 'g'")
        if self.mode not in ("empirical", "exact"):
            raise ConfigError(f"mode must be 'empirical' or 'exact', got {self.mode!r}")
        if self.mode == "empirical" and self.m < 10_000:
            raise ConfigError(f"empirical runs need m >= 10000, got {self.m}")
        if self.mode == "exact" and not self.summand.is_lattice:
            raise ConfigError("exact mode needs a lattice summand")
        if not 0 < self.confidence < 1:
            raise ConfigError(f"confidence must lie in (0, 1), got {self.confidence}")
        if tid in ("t7", "c6") and not math.isfinite(self.counting.mixing.mean):  # type: ignore[union-attr]
            raise ConfigError(f"theorem {tid} needs a mixing law with finite mean")

    @classmethod
    def from_text(cls, text: str, seed: int | None = None) -> "ExperimentConfig":
        kv = parse_kv(text)
        known = {"theorem", "summand", "counting", "m", "seed", "g", "eps", "grid", "grid_points",
                 "confidence", "mode", "tail_eps", "workers"}
        for key in kv:
            if key not in known and not key.startswith(("summand.", "counting.")):
                raise ConfigError(f"unknown configuration key {key!r}")
        if "theorem" not in kv:
            raise ConfigError("missing key 'theorem'")
        eps = kv.get("eps", "auto")
        try:
            return cls(
                theorem_id=kv["theorem"],
                summand=summand_from_kv(kv),
                counting=counting_from_kv(kv),
                m=int(float(kv.get("m", 1_000_000))),
                seed=int(kv.get("seed", 0)) if seed is None else int(seed),
                g=kv.get("g"),
                eps=None if eps == "auto" else float(eps),
                grid=kv.get("grid", "auto"),
                grid_points=int(kv.get("grid_points", concentration.DEFAULT_GRID_POINTS)),
                confidence=float(kv.get("confidence", 0.99)),
                mode=kv.get("mode", "empirical"),
                tail_eps=float(kv.get("tail_eps", 1e-12)),
                workers=int(kv.get("workers", 1)),
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path: str | Path, seed: int | None = None) -> "ExperimentConfig":
        return cls.from_text(Path(path).read_text(encoding="utf-8"), seed=seed)

    def canonical(self) -> dict[str, Any]:
        """Order-stable description used for the digest and in reports (workers excluded)."""
        return {
            "theorem": self.theorem_id,
            "summand": {"kind": self.summand.kind, **self.summand.params()},
            "counting": {"kind": self.counting.kind, **self.counting.params()},
            "m": self.m,
            "seed": self.seed,
            "g": self.g,
            "eps": self.eps,
            "grid": self.grid,
            "grid_points": self.grid_points,
            "confidence": self.confidence,
            "mode": self.mode,
            "tail_eps": self.tail_eps,
        }

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def default_config_names() -> list[str]:
    return sorted(p.name[: -len(".cfg")] for p in resources.files("concfun.experiments").iterdir()
                  if p.name.endswith(".cfg"))


def default_config_text(theorem_id: str) -> str:
    try:
        return resources.files("concfun.experiments").joinpath(f"{theorem_id}.cfg").read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"no shipped default experiment for {theorem_id!r}") from None


def default_config(theorem_id: str, **overrides) -> ExperimentConfig:
    cfg = ExperimentConfig.from_text(default_config_text(theorem_id))
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    return cfg


# -------------------------------------------------------------- random sums


def _batch(args: tuple) -> np.ndarray:
    summand, law, seed, index, size = args
    rng = np.random.default_rng([seed, index])
    counts = law.sample(rng, size)
    return summand.sum_given_counts(rng, counts)


def random_sum_sample(
    summand: SummandModel, law: CountingLaw, seed: int, m: int, workers: int = 1
) -> np.ndarray:
    """m independent replicates of X_1 + ... + X_N (0 when N = 0).

    Batch b draws from the stream seeded by (seed, b), so the output does not
    depend on how batches are spread over workers.
    """
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    jobs = []
    start = 0
    index = 0
    while start < m:
        size = min(BATCH_SIZE, m - start)
        jobs.append((summand, law, seed, index, size))
        start += size
        index += 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_batch, jobs))
    else:
        parts = [_batch(job) for job in jobs]
    return np.concatenate(parts)


def _as_atomic(summand) -> AtomicLaw:
    if isinstance(summand, AtomicLaw):
        return summand
    if getattr(summand, "is_lattice", False):
        return AtomicLaw(summand.values, summand.probs)
    raise DomainError("exact random-sum laws need a lattice summand")


def exact_random_sum_lattice(summand, law: CountingLaw, tail_eps: float = 1e-12) -> tuple[AtomicLaw, float]:
    """Law of S_N as the mixture sum_k P(N = k) (k-fold convolution), truncated where the
    counting tail drops below ``tail_eps``.  Returns the law and the dropped mass."""
    base = _as_atomic(summand)
    kmax, tail = law.tail_cutoff(tail_eps)
    weights = law.pmf_array(kmax)
    power = AtomicLaw.point(0.0)
    vals: list[np.ndarray] = []
    probs: list[np.ndarray] = []
    for k in range(kmax + 1):
        if k:
            power = power.convolve(base)
        if weights[k] > 0:
            vals.append(power.values)
            probs.append(weights[k] * power.probs)
    mixed = AtomicLaw(np.concatenate(vals), np.concatenate(probs), decimals=10)
    return mixed, tail


def xtilde_convolution(summand, p) -> AtomicLaw:
    """Law of X~_1 + ... + X~_n where X~_j equals X_j with probability p_j and 0 otherwise."""
    base = _as_atomic(summand)
    out = AtomicLaw.point(0.0)
    for pj in np.asarray(p, dtype=float):
        thinned = AtomicLaw(
            np.concatenate((base.values, [0.0])), np.concatenate((pj * base.probs, [1.0 - pj])), decimals=10
        )
        out = out.convolve(thinned)
    return out


# -------------------------------------------------------------- limit curves


def _sigma(cfg: ExperimentConfig) -> float:
    return math.sqrt(cfg.summand.variance)


def limit_laws(cfg: ExperimentConfig) -> tuple[limits.LimitLaw, dict[str, limits.LimitLaw]]:
    """The canonical approximating law and any printed-formula variants."""
    sigma = _sigma(cfg)
    law = cfg.counting
    kind = law.kind
    if kind == "fixed":
        return limits.LimitLaw("folded_normal", 2 * sigma * math.sqrt(law.n)), {}  # type: ignore[attr-defined]
    if kind in ("poisson_binomial", "binomial"):
        return limits.LimitLaw("folded_normal", 2 * sigma * math.sqrt(law.theta)), {}  # type: ignore[attr-defined]
    if kind == "poisson":
        return limits.LimitLaw("folded_normal", 2 * sigma * math.sqrt(law.lam)), {}  # type: ignore[attr-defined]
    mix = law.mixing
    assert mix is not None
    if cfg.theorem_id == "t7":
        canonical = limits.LimitLaw("generic_mixture", mix=mix, sigma=sigma)
        printed = limits.LimitLaw("generic_mixture", mix=mix.scaled(1.0 / mix.mean), sigma=1.0)
        return canonical, {"printed": printed}
    n = law.n  # type: ignore[attr-defined]
    if kind == "geometric":
        scale = 2 * sigma * math.sqrt(n)
        return limits.LimitLaw("exponential_sqrt2", scale), {"printed": limits.LimitLaw("exponential", scale)}
    if kind == "negative_binomial":
        r = law.r  # type: ignore[attr-defined]
        return limits.LimitLaw("folded_variance_gamma", 2 * sigma * math.sqrt(n), r=r), {}
    if kind == "poisson_inverse_gamma":
        r = law.r  # type: ignore[attr-defined]
        return limits.LimitLaw("folded_student", 2 * sigma * math.sqrt(n / r), r=r), {}
    raise ConfigError(f"no limit law for counting kind {kind!r}")


def z_grid(cfg: ExperimentConfig, canonical: limits.LimitLaw) -> np.ndarray:
    if cfg.grid == "auto":
        return concentration.default_grid(canonical.natural_scale, points=cfg.grid_points)
    return concentration.parse_grid(cfg.grid)


# -------------------------------------------------------------------- bounds


def config_bound(cfg: ExperimentConfig, halfopen: bool = False) -> bounds.BoundValue:
    tid = cfg.theorem_id
    model = cfg.summand
    law = cfg.counting
    g = bounds.parse_g(cfg.g) if cfg.g else None
    if tid in ("t1", "c1", "t2"):
        sv = SummandVector.iid(model, law.n)  # type: ignore[attr-defined]
        if tid == "t2":
            return bounds.theorem2_bound(sv, g, halfopen)  # type: ignore[arg-type]
        fn = bounds.theorem1_bound if tid == "t1" else bounds.corollary1_bound
        if cfg.eps is not None:
            return fn(sv, cfg.eps, halfopen)
        return bounds.minimize_over_eps(fn, sv, halfopen=halfopen)[1]
    if tid == "t3":
        return bounds.theorem3_bound(model, law.theta, halfopen)  # type: ignore[attr-defined]
    if tid == "t4":
        return bounds.theorem4_bound(model, law.theta, g, halfopen)  # type: ignore[attr-defined,arg-type]
    if tid == "c2":
        return bounds.corollary2_bound(model, law.n, law.prob, halfopen)  # type: ignore[attr-defined]
    if tid == "c3":
        return bounds.corollary3_bound(model, law.n, law.prob, g, halfopen)  # type: ignore[attr-defined,arg-type]
    if tid == "t5":
        return bounds.theorem5_bound(model, law.lam, halfopen)  # type: ignore[attr-defined]
    if tid == "t6":
        return bounds.theorem6_bound(model, law.lam, g, halfopen)  # type: ignore[attr-defined,arg-type]
    if tid == "t5-3rd":
        return bounds.theorem5_third_moment_bound(model, law.lam, halfopen)  # type: ignore[attr-defined]
    if tid == "t7":
        return bounds.theorem7_bound(model, law.mixing, halfopen)  # type: ignore[arg-type]
    if tid == "c4":
        return bounds.corollary4_bound(model, law.n, halfopen)  # type: ignore[attr-defined]
    if tid == "c5":
        return bounds.corollary5_bound(model, law.r, law.n, halfopen)  # type: ignore[attr-defined]
    if tid == "c6":
        return bounds.corollary6_bound(model, law.r, law.n, halfopen)  # type: ignore[attr-defined]
    raise ConfigError(f"unknown theorem id {tid!r}")


# -------------------------------------------------------------------- report


def _sig(x: float) -> float:
    return float(f"{x:.10g}")


def _sig_list(xs) -> list:
    return [None if x is None else _sig(float(x)) for x in xs]


@dataclass
class BoundReport:
    theorem_id: str
    mode: str
    seed: int
    m: int
    config_digest: str
    config: dict
    grid_points: int
    grid_max: float
    grid_spacing: float
    empirical_sup_deviation: float
    deviation_z: float
    mc_error_budget: float
    truncation_mass: float
    bound_value: float
    bound_vacuous: bool
    deviation_to_bound_ratio: float
    passed: bool
    halfopen_sup_deviation: float
    halfopen_mc_error_budget: float
    halfopen_bound_value: float
    halfopen_passed: bool
    halfopen_dominated: bool
    bound_inputs: dict
    limit_variants: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)

    def recompute_pass(self) -> bool:
        return _passes(self.mode, self.empirical_sup_deviation, self.bound_value,
                       self.mc_error_budget, self.truncation_mass)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "BoundReport":
        return cls(**{f.name: data[f.name] for f in fields(cls)})


def _passes(mode: str, dev: float, bound: float, budget: float, truncation: float) -> bool:
    if mode == "exact":
        return dev + truncation < bound
    return dev <= bound + budget


def run_verification(cfg: ExperimentConfig) -> BoundReport:
    canonical, variants = limit_laws(cfg)
    zs = z_grid(cfg, canonical)
    if zs.size < 2 or zs[0] != 0.0:
        zs = np.unique(np.concatenate(([0.0], zs)))
    zpos = zs[1:]

    if cfg.mode == "exact":
        law, truncation = exact_random_sum_lattice(cfg.summand, cfg.counting, cfg.tail_eps)
        q_closed = concentration.q_exact_curve(law, zs, closed=True)
        q_half = concentration.q_exact_curve(law, zpos, closed=False)
        budget = half_budget = 0.0
    else:
        sample = SortedSample(np.sort(random_sum_sample(cfg.summand, cfg.counting, cfg.seed, cfg.m, cfg.workers)))
        q_closed = concentration.q_hat_curve(sample, zs, closed=True)
        q_half = concentration.q_hat_curve(sample, zpos, closed=False)
        truncation = 0.0
        budget = concentration.mc_error_budget(cfg.m, cfg.confidence)
        half_budget = concentration.mc_error_budget(cfg.m, cfg.confidence, halfopen=True)

    limit_main = canonical.curve(zs)
    dev = concentration.sup_deviation(ConcentrationCurve(zs, q_closed), ConcentrationCurve(zs, limit_main))
    half_dev = float(np.max(np.abs(q_half - limit_main[1:])))
    curves = {"z": zs, "q_closed": q_closed, "q_halfopen": np.concatenate(([np.nan], q_half)),
              "limit_canonical": limit_main}
    variant_devs = {"canonical": dev.value}
    for name, vlaw in variants.items():
        vcurve = vlaw.curve(zs)
        curves[f"limit_{name}"] = vcurve
        variant_devs[name] = float(np.max(np.abs(q_closed - vcurve)))

    bound = config_bound(cfg)
    half_bound = config_bound(cfg, halfopen=True)

    dev_v, budget_v, trunc_v = _sig(dev.value), _sig(budget), _sig(truncation)
    half_dev_v, half_budget_v = _sig(half_dev), _sig(half_budget)
    bound_v, half_bound_v = _sig(bound.value), _sig(half_bound.value)
    return BoundReport(
        theorem_id=cfg.theorem_id,
        mode=cfg.mode,
        seed=cfg.seed,
        m=cfg.m,
        config_digest=cfg.digest(),
        config=json.loads(json.dumps(cfg.canonical())),
        grid_points=int(zs.size),
        grid_max=_sig(zs[-1]),
        grid_spacing=_sig(dev.grid_spacing),
        empirical_sup_deviation=dev_v,
        deviation_z=_sig(dev.z_at),
        mc_error_budget=budget_v,
        truncation_mass=trunc_v,
        bound_value=bound_v,
        bound_vacuous=bound_v > 1.0,
        deviation_to_bound_ratio=_sig(dev_v / bound_v),
        passed=_passes(cfg.mode, dev_v, bound_v, budget_v, trunc_v),
        halfopen_sup_deviation=half_dev_v,
        halfopen_mc_error_budget=half_budget_v,
        halfopen_bound_value=half_bound_v,
        halfopen_passed=_passes(cfg.mode, half_dev_v, half_bound_v, half_budget_v, trunc_v),
        halfopen_dominated=bool(np.all(q_half <= q_closed[1:])),
        bound_inputs=json.loads(json.dumps(bound.inputs, default=float)),
        limit_variants={k: _sig(v) for k, v in variant_devs.items()},
        curves={k: [None if not np.isfinite(x) else _sig(float(x)) for x in v] for k, v in curves.items()},
    )


# --------------------------------------------------------------- serializing

_SCALAR_TYPES = {f.name: f.type for f in fields(BoundReport)}
_JSON_FIELDS = ("config", "bound_inputs", "limit_variants")


def emit_report(report: BoundReport, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, allow_nan=False) + "\n"
    if fmt == "csv":
        return _emit_csv(report)
    raise ConfigError(f"unknown report format {fmt!r}")


def parse_report(text: str, fmt: str = "json") -> BoundReport:
    if fmt == "json":
        return BoundReport.from_dict(json.loads(text))
    if fmt == "csv":
        return _parse_csv(text)
    raise ConfigError(f"unknown report format {fmt!r}")


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.10g}"
    if value is None:
        return ""
    return str(value)


def _emit_csv(report: BoundReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["field", "value"])
    for f in fields(report):
        if f.name == "curves":
            continue
        value = getattr(report, f.name)
        if f.name in _JSON_FIELDS:
            w.writerow([f.name, json.dumps(value, sort_keys=True)])
        else:
            w.writerow([f.name, _fmt(value)])
    w.writerow([])
    names = list(report.curves)
    w.writerow(names)
    for row in zip(*(report.curves[n] for n in names)):
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _parse_csv(text: str) -> BoundReport:
    rows = list(csv.reader(io.StringIO(text)))
    split = rows.index([])
    data: dict[str, Any] = {}
    for name, raw in rows[1:split]:
        kind = _SCALAR_TYPES[name]
        if name in _JSON_FIELDS:
            data[name] = json.loads(raw)
        elif kind == "bool":
            data[name] = raw == "true"
        elif kind == "int":
            data[name] = int(raw)
        elif kind == "float":
            data[name] = float(raw)
        else:
            data[name] = raw
    header = rows[split + 1]
    cols: dict[str, list] = {h: [] for h in header}
    for row in rows[split + 2 :]:
        for h, cell in zip(header, row):
            cols[h].append(None if cell == "" else float(cell))
    data["curves"] = cols
    return BoundReport.from_dict(data)

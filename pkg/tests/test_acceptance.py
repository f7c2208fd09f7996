"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (lines go straight to the
terminal) or as a script with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import itertools
import math
import time

import numpy as np
import pytest
from scipy import integrate

from concfun import bounds, cli, concentration, counting, dists, harness, limits, specfun
from concfun.concentration import ConcentrationCurve, SortedSample

_LINES: list[str] = []


@pytest.fixture
def report(capsys):
    def emit(n: int, ok: bool, detail: str) -> None:
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return emit


# ---------------------------------------------------------------- criterion 1


def test_c01_incomplete_gamma_additivity(report):
    rng = np.random.default_rng(20240101)
    alphas = rng.uniform(0.05, 60.0, 200)
    zs = rng.uniform(0.0, 120.0, 200)
    t0 = time.perf_counter()
    worst = 0.0
    for a, z in zip(alphas, zs):
        total = specfun.lower_incomplete_gamma(a, z) + specfun.upper_incomplete_gamma(a, z)
        worst = max(worst, abs(total - math.gamma(a)) / math.gamma(a))
    elapsed = time.perf_counter() - t0
    report(1, worst <= 1e-11 and elapsed < 1.0, f"max rel err {worst:.2e} (tol 1e-11), {elapsed:.3f}s (< 1s)")


# ---------------------------------------------------------------- criterion 2


def _brute_q(v: np.ndarray, z: float, closed: bool) -> float:
    left = v[:, None]
    right = v[:, None] + z
    inside = (v[None, :] >= left) & ((v[None, :] <= right) if closed else (v[None, :] < right))
    return inside.sum(axis=1).max() / v.size


def test_c02_qhat_matches_bruteforce(report):
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    mismatches = 0
    for trial in range(1000):
        m = int(rng.integers(1, 201))
        if trial % 2:
            v = rng.integers(-10, 11, m).astype(float)  # heavy ties
            zs = np.arange(0.0, 8.0, 0.5)
        else:
            v = np.round(rng.normal(size=m), 2)
            zs = np.linspace(0.0, 3.0, 13)
        sample = SortedSample.of(v)
        fast_c = concentration.q_hat_curve(sample, zs, closed=True)
        fast_h = concentration.q_hat_curve(sample, zs[1:], closed=False)
        slow_c = np.array([_brute_q(sample.values, z, True) for z in zs])
        slow_h = np.array([_brute_q(sample.values, z, False) for z in zs[1:]])
        mismatches += int(not (np.array_equal(fast_c, slow_c) and np.array_equal(fast_h, slow_h)))
    elapsed = time.perf_counter() - t0
    report(2, mismatches == 0 and elapsed < 10.0, f"{mismatches} mismatching samples of 1000, {elapsed:.2f}s (< 10s)")


# ---------------------------------------------------------------- criterion 3


def test_c03_normal_symmetric_unimodal_formula(report):
    t0 = time.perf_counter()
    draws = np.random.default_rng(3).standard_normal(1_000_000)
    sample = SortedSample.of(draws)
    zs = concentration.default_grid(2.0)
    q = concentration.q_hat_curve(sample, zs)
    ref = np.array([specfun.folded_normal_cdf(z / 2) for z in zs])
    dev = float(np.max(np.abs(q - ref)))
    elapsed = time.perf_counter() - t0
    report(3, dev <= 0.005 and elapsed < 30.0, f"sup |Qhat - Phi0(z/2)| = {dev:.5f} (tol 0.005), {elapsed:.2f}s (< 30s)")


# ---------------------------------------------------------------- criterion 4


def test_c04_exponential_mixture_identity(report):
    xs = np.linspace(0.0, 5.0, 101)
    closed_form = -np.expm1(-math.sqrt(2.0) * xs)

    def direct(x: float) -> float:
        if x == 0:
            return 0.0
        f = lambda y: specfun.folded_normal_cdf(x / math.sqrt(y)) * math.exp(-y) if y > 0 else 0.0
        pieces = [0.0, x * x / 8, x * x / 2, 2 * x * x, 10.0, 50.0, math.inf]
        edges = sorted(set(pieces))
        return sum(integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0] for a, b in zip(edges, edges[1:]))

    quad_err = max(abs(direct(x) - c) for x, c in zip(xs, closed_form))
    v_err = max(abs(limits.folded_variance_gamma_cdf(1.0, x) - c) for x, c in zip(xs, closed_form))
    report(4, quad_err <= 1e-8 and v_err <= 1e-8,
           f"quadrature err {quad_err:.2e}, V+_1 err {v_err:.2e} (tol 1e-8)")


# ---------------------------------------------------------------- criterion 5


def test_c05_gamma_mixture_consistency(report):
    worst = 0.0
    for r, n, sigma in itertools.product((0.5, 1.0, 2.0), (1.0, 4.0), (1.0, 2.0)):
        mix = counting.GammaMixing(r, n)
        for z in np.linspace(0.0, 12.0 * sigma * math.sqrt(n * max(r, 1.0)), 25):
            a = limits.mixture_cdf(mix, sigma, z)
            b = limits.folded_variance_gamma_cdf(r, z / (2 * sigma * math.sqrt(n)))
            worst = max(worst, abs(a - b))
    report(5, worst <= 1e-8, f"max |mixture - V+_r| = {worst:.2e} over 12 (r, n, sigma) triples (tol 1e-8)")


# ---------------------------------------------------------------- criterion 6


def test_c06_inverse_gamma_mixture_consistency(report):
    worst = 0.0
    for r, n, sigma in itertools.product((3.0, 5.0), (4.0, 16.0), (1.0, 2.0)):
        mix = counting.InverseGammaMixing(r, n)
        for x in np.linspace(0.0, 8.0, 33):
            a = limits.mixture_cdf(mix, sigma, 2 * sigma * x * math.sqrt(n / r))
            worst = max(worst, abs(a - limits.folded_student_cdf(r, x)))
    report(6, worst <= 1e-8, f"max |mixture - T+_r| = {worst:.2e} (tol 1e-8)")


# ---------------------------------------------------------------- criterion 7


def test_c07_poisson_binomial_two_routes(report):
    rad = dists.rademacher()
    grid = (0.1, 0.5, 0.9)
    t0 = time.perf_counter()
    worst = 0.0
    support_ok = True
    count = 0
    for k in range(1, 9):
        for p in itertools.product(grid, repeat=k):
            mixed, tail = harness.exact_random_sum_lattice(rad, counting.PoissonBinomial(list(p)), 0.0)
            thinned = harness.xtilde_convolution(rad, p)
            a, b = mixed.pruned(), thinned.pruned()
            if tail != 0.0 or not np.array_equal(a.values, b.values):
                support_ok = False
                continue
            worst = max(worst, float(np.max(np.abs(a.probs - b.probs))))
            count += 1
    elapsed = time.perf_counter() - t0
    ok = support_ok and worst <= 1e-12 and elapsed < 10.0
    report(7, ok, f"{count} p-vectors, max atom diff {worst:.2e} (tol 1e-12), {elapsed:.2f}s (< 10s)")


# ---------------------------------------------------------- criteria 8 and 10


@pytest.fixture(scope="module")
def default_reports():
    t0 = time.perf_counter()
    reps = {tid: harness.run_verification(harness.default_config(tid)) for tid in bounds.THEOREM_IDS}
    return reps, time.perf_counter() - t0


def test_c08_theorem_suite(report, default_reports):
    reps, elapsed = default_reports
    failed = [t for t, r in reps.items() if not r.empirical_sup_deviation <= r.bound_value + r.mc_error_budget]
    families = {r.config["summand"]["kind"] for r in reps.values()}
    pareto = any(r.config["summand"]["kind"] == "symmetrized_pareto" and r.config["summand"]["beta"] == 2.5
                 for r in reps.values())
    m_ok = all(r.m == 1_000_000 for r in reps.values())
    covered = {"rademacher", "laplace", "symmetrized_pareto"} <= families and pareto
    ok = not failed and covered and m_ok and len(reps) == 14 and elapsed < 600
    report(8, ok, f"{14 - len(failed)}/14 ids hold at m=1e6, families {sorted(families)}, {elapsed:.1f}s (< 600s)")


def _variance_of_limit(law: limits.LimitLaw) -> float:
    half = (law.scale / 2) ** 2
    if law.kind == "folded_variance_gamma":
        return half * law.r
    if law.kind == "folded_student":
        return half * law.r / (law.r - 2)
    return half


def test_c09_chebyshev_property(report):
    models = {
        "rademacher": dists.rademacher(),
        "two_point_asymmetric": dists.two_point_asymmetric(-2.0, 1.0, 1.0 / 3.0),
        "lattice": dists.make_summand("lattice", values=[-2.0, 0.0, 1.0, 3.0], probs=[0.3, 0.3, 0.3, 0.1]),
        "normal": dists.make_summand("normal", scale=1.5),
        "uniform_symmetric": dists.make_summand("uniform_symmetric", halfwidth=2.0),
        "laplace": dists.make_summand("laplace", scale=1.0),
        "symmetrized_pareto": dists.make_summand("symmetrized_pareto", beta=2.5),
        "scaled_student": dists.make_summand("scaled_student", nu=5.0),
    }
    worst = 0.0
    for name, model in models.items():
        zs = np.linspace(0.0, 12.0 * math.sqrt(model.variance), 49)
        q = np.array([concentration.q_reference(model, float(z)) for z in zs])
        ratio = concentration.chebyshev_lower_bound(ConcentrationCurve(zs, q)) / model.variance
        worst = max(worst, ratio)
    laws = [
        limits.LimitLaw("folded_normal", 2.0),
        limits.LimitLaw("exponential_sqrt2", 2.0),
        limits.LimitLaw("folded_variance_gamma", 2.0, r=2.0),
        limits.LimitLaw("folded_student", 2.0, r=5.0),
    ]
    for law in laws:
        var = _variance_of_limit(law)
        zs = np.linspace(0.0, 12.0 * math.sqrt(var), 49)
        ratio = concentration.chebyshev_lower_bound(ConcentrationCurve(zs, law.curve(zs))) / var
        worst = max(worst, ratio)
    report(9, worst <= 1.01, f"max (1/4) sup z^2 (1 - Q) / sigma^2 = {worst:.4f} over {len(models) + len(laws)} laws (tol 1.01)")


def test_c10_halfopen(report, default_reports):
    reps, _ = default_reports
    dominated = [t for t, r in reps.items() if not r.halfopen_dominated]
    exact = all(
        bounds.CONSTANTS.q_constant(k, halfopen=True) * 2 == bounds.CONSTANTS.q_constant(k)
        for k in ("general", "iid", "poisson_3rd")
    )
    halved = all(math.isclose(2 * r.halfopen_bound_value, r.bound_value, rel_tol=1e-9) for r in reps.values())
    report(10, not dominated and exact and halved,
           f"Q~ <= Q on {14 - len(dominated)}/14 experiments, constants halved exactly: {exact and halved}")


# --------------------------------------------------------------- criterion 11


def test_c11_determinism(report, tmp_path):
    outs = []
    for fmt in ("json", "csv"):
        for i in range(2):
            path = tmp_path / f"run{i}.{fmt}"
            rc = cli.main(["verify", "t7", "--seed", "5", "--format", fmt, "--out", str(path)])
            assert rc == 0
            outs.append(path.read_bytes())
    same = outs[0] == outs[1] and outs[2] == outs[3]
    report(11, same, f"json identical: {outs[0] == outs[1]}, csv identical: {outs[2] == outs[3]}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))

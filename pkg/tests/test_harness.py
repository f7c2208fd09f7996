from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from concfun import concentration, counting, dists, harness
from concfun.errors import ConfigError

SMALL = """
theorem = t5-3rd
summand = rademacher
counting = poisson
counting.lam = 30   # small intensity keeps the test fast
m = 20000
seed = 9
"""


def small(**kw) -> harness.ExperimentConfig:
    return replace(harness.ExperimentConfig.from_text(SMALL), **kw)


def test_parse_kv_and_values():
    kv = harness.parse_kv("a = 1\n# comment\nb = x, y\n\nc = linspace(0, 1, 3)")
    assert kv == {"a": "1", "b": "x, y", "c": "linspace(0, 1, 3)"}
    assert harness._parse_value("linspace(0, 1, 3)") == [0.0, 0.5, 1.0]
    assert harness._parse_value("0.1, 0.2") == [0.1, 0.2]
    assert harness._parse_value("7") == 7
    with pytest.raises(ConfigError):
        harness.parse_kv("no equals sign")
    with pytest.raises(ConfigError):
        harness.parse_kv("a = 1\na = 2")


@pytest.mark.parametrize(
    "text,msg",
    [
        (SMALL.replace("theorem = t5-3rd", "theorem = t9"), "unknown theorem"),
        (SMALL.replace("counting = poisson", "counting = geometric").replace("counting.lam = 30", "counting.n = 5"),
         "needs counting law"),
        (SMALL.replace("m = 20000", "m = 500"), "m >= 10000"),
        (SMALL.replace("theorem = t5-3rd", "theorem = t6"), "weight function"),
        (SMALL + "colour = red\n", "unknown configuration key"),
        (SMALL.replace("summand = rademacher", "summand = cauchy"), "bad summand"),
        (SMALL.replace("counting.lam = 30", "counting.lam = -1"), "bad counting"),
        (SMALL + "mode = exact\n".replace("exact", "fuzzy"), "mode"),
    ],
)
def test_config_validation(text, msg):
    with pytest.raises(ConfigError, match=msg):
        harness.ExperimentConfig.from_text(text)


def test_c6_requires_finite_mean():
    text = "theorem = c6\nsummand = laplace\ncounting = poisson_inverse_gamma\ncounting.r = 2\ncounting.n = 4\n"
    with pytest.raises(ConfigError):
        harness.ExperimentConfig.from_text(text)


def test_exact_mode_needs_lattice():
    text = SMALL.replace("summand = rademacher", "summand = laplace") + "mode = exact\n"
    with pytest.raises(ConfigError):
        harness.ExperimentConfig.from_text(text)


def test_all_defaults_load():
    names = harness.default_config_names()
    assert sorted(names) == sorted(("t1", "c1", "t2", "t3", "t4", "c2", "c3", "t5", "t6", "t5-3rd", "t7", "c4", "c5", "c6"))
    for name in names:
        cfg = harness.default_config(name)
        assert cfg.theorem_id == name and cfg.m == 1_000_000
    with pytest.raises(ConfigError):
        harness.default_config_text("t99")


def test_digest_stable_and_sensitive():
    a, b = small(), harness.ExperimentConfig.from_text(SMALL)
    assert a.digest() == b.digest()
    assert small(seed=10).digest() != a.digest()
    assert small(workers=4).digest() == a.digest()


def test_random_sum_sample_properties():
    law = counting.Poisson(0.5)
    s = harness.random_sum_sample(dists.Laplace(1.0), law, seed=3, m=300_000)
    assert s.size == 300_000
    # P(S = 0) = P(N = 0) for an atomless summand
    assert np.mean(s == 0.0) == pytest.approx(math.exp(-0.5), abs=4e-3)
    assert np.var(s) == pytest.approx(0.5 * 2.0, rel=0.02)
    again = harness.random_sum_sample(dists.Laplace(1.0), law, seed=3, m=300_000)
    assert np.array_equal(s, again)


def test_random_sum_sample_independent_of_workers():
    law = counting.NegativeBinomial(2.0, 5.0)
    a = harness.random_sum_sample(dists.rademacher(), law, seed=1, m=600_000, workers=1)
    b = harness.random_sum_sample(dists.rademacher(), law, seed=1, m=600_000, workers=3)
    assert np.array_equal(a, b)


def test_exact_law_matches_simulation():
    rad = dists.rademacher()
    law = counting.Binomial(20, 0.4)
    exact, tail = harness.exact_random_sum_lattice(rad, law)
    assert tail == 0.0 and exact.total_mass == pytest.approx(1.0, abs=1e-14)
    assert exact.variance() == pytest.approx(8.0)
    zs = np.arange(0.0, 12.0, 1.0)
    q_exact = concentration.q_exact_curve(exact, zs)
    m = 200_000
    sample = concentration.SortedSample.of(harness.random_sum_sample(rad, law, 5, m))
    q_emp = concentration.q_hat_curve(sample, zs)
    assert np.max(np.abs(q_exact - q_emp)) <= concentration.mc_error_budget(m)


def test_exact_poisson_mixture_tail():
    exact, tail = harness.exact_random_sum_lattice(dists.rademacher(), counting.Poisson(4.0), 1e-12)
    assert 0.0 < tail < 1e-12
    assert exact.total_mass + tail == pytest.approx(1.0, abs=1e-13)


def test_limit_laws_per_counting_kind():
    cfg = harness.default_config("c4")
    canonical, variants = harness.limit_laws(cfg)
    assert canonical.kind == "exponential_sqrt2" and set(variants) == {"printed"}
    assert canonical.scale == pytest.approx(2 * math.sqrt(200))
    c6, _ = harness.limit_laws(harness.default_config("c6"))
    assert c6.kind == "folded_student" and c6.scale == pytest.approx(2 * math.sqrt(2) * math.sqrt(300 / 5))
    t7, v7 = harness.limit_laws(harness.default_config("t7"))
    assert t7.kind == "generic_mixture" and "printed" in v7


@pytest.fixture(scope="module")
def empirical_report():
    return harness.run_verification(small())


def test_run_verification_fields(empirical_report):
    r = empirical_report
    assert r.theorem_id == "t5-3rd" and r.mode == "empirical" and r.seed == 9
    assert r.mc_error_budget == pytest.approx(4 * concentration.dkw_epsilon(20000), rel=1e-9)
    assert r.halfopen_mc_error_budget == pytest.approx(r.mc_error_budget / 2, rel=1e-9)
    assert r.halfopen_bound_value == pytest.approx(r.bound_value / 2, rel=1e-9)
    assert r.passed == r.recompute_pass()
    assert r.halfopen_dominated
    assert len(r.curves["z"]) == r.grid_points == 512
    assert r.curves["q_halfopen"][0] is None


def test_report_roundtrip(empirical_report):
    for fmt in ("json", "csv"):
        text = harness.emit_report(empirical_report, fmt)
        back = harness.parse_report(text, fmt)
        assert back == empirical_report
        assert harness.emit_report(back, fmt) == text
    with pytest.raises(ConfigError):
        harness.emit_report(empirical_report, "xml")


def test_exact_mode_report():
    cfg = harness.ExperimentConfig.from_text(SMALL + "mode = exact\n")
    r = harness.run_verification(cfg)
    assert r.mc_error_budget == 0.0 and 0.0 < r.truncation_mass < 1e-11
    assert r.passed == (r.empirical_sup_deviation + r.truncation_mass < r.bound_value)
    assert r.passed


def test_explicit_grid_and_eps():
    text = """
theorem = c1
summand = rademacher
counting = fixed
counting.n = 100
eps = 0.2
grid = 0:20:41
m = 10000
"""
    cfg = harness.ExperimentConfig.from_text(text)
    r = harness.run_verification(cfg)
    assert r.grid_points == 41 and r.grid_max == 20.0
    assert r.bound_value == pytest.approx(7.4508 * 0.2, rel=1e-9)


def test_zero_count_gives_zero_sums():
    s = harness.random_sum_sample(dists.Laplace(1.0), counting.Fixed(0), seed=0, m=1000)
    assert np.all(s == 0.0)


def test_two_sure_trials_rademacher_frequencies():
    m = 100_000
    s = harness.random_sum_sample(dists.rademacher(), counting.PoissonBinomial([1.0, 1.0]), seed=2, m=m)
    assert set(np.unique(s)) == {-2.0, 0.0, 2.0}
    for value, p in ((-2.0, 0.25), (0.0, 0.5), (2.0, 0.25)):
        se = math.sqrt(p * (1 - p) / m)
        assert abs(np.mean(s == value) - p) <= 4 * se


def test_poisson_random_sum_variance():
    lam, m = 12.0, 200_000
    s = harness.random_sum_sample(dists.Laplace(1.0), counting.Poisson(lam), seed=8, m=m)
    target = lam * 2.0
    # Var of the sample variance: (mu4 - sigma^4) / m, with mu4 = lam E X^4 + 3 (lam sigma^2)^2
    se = math.sqrt((lam * 24.0 + 3 * target**2 - target**2) / m)
    assert abs(np.var(s) - target) <= 3 * se


def test_exact_law_trivial_cases():
    rad = dists.rademacher()
    one, tail = harness.exact_random_sum_lattice(rad, counting.Fixed(1))
    assert one.values.tolist() == [-1.0, 1.0] and one.probs.tolist() == [0.5, 0.5] and tail == 0.0
    two, _ = harness.exact_random_sum_lattice(rad, counting.Binomial(2, 0.5))
    # N ~ Bin(2, 1/2): P(N=0) = 1/4, P(N=1) = 1/2, P(N=2) = 1/4
    expect = {-2.0: 1 / 16, -1.0: 1 / 4, 0.0: 1 / 4 + 1 / 8, 1.0: 1 / 4, 2.0: 1 / 16}
    assert dict(zip(two.values.tolist(), two.probs.tolist())) == pytest.approx(expect, abs=1e-15)


def test_plain_sum_needs_summands():
    with pytest.raises(ConfigError):
        harness.ExperimentConfig.from_text(SMALL.replace("t5-3rd", "t1").replace("poisson", "fixed")
                                           .replace("counting.lam = 30", "counting.n = 0"))


def test_normal_single_summand_is_exact():
    text = "theorem = t1\nsummand = normal\ncounting = fixed\ncounting.n = 1\nm = 200000\nseed = 3\n"
    r = harness.run_verification(harness.ExperimentConfig.from_text(text))
    assert r.empirical_sup_deviation <= r.mc_error_budget
    assert r.passed


def test_rademacher_t1_regression():
    r = harness.run_verification(harness.default_config("t1"))
    # frozen from the shipped default at m = 1e6, seed 101
    assert r.empirical_sup_deviation == pytest.approx(0.099358, abs=1e-12)
    assert r.bound_value == pytest.approx(0.93135, abs=1e-10)
    assert r.passed and r.deviation_to_bound_ratio == pytest.approx(0.099358 / 0.93135, rel=1e-9)

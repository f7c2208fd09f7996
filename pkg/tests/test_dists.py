from __future__ import annotations

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from concfun import dists
from concfun.bounds import g_power
from concfun.dists import SummandModel, SummandVector
from concfun.errors import DomainError, MomentDivergenceError

# independent density oracles (mpmath), written from the family definitions
ORACLE_DENSITY = {
    "normal": lambda x: mp.npdf(x, 0, 1.5),
    "uniform_symmetric": lambda x: mp.mpf(1) / 4 if abs(x) <= 2 else mp.mpf(0),
    "laplace": lambda x: mp.exp(-abs(x)) / 2,
    "symmetrized_pareto": lambda x: mp.mpf(2.5) / 2 * abs(x) ** (-3.5) if abs(x) >= 1 else mp.mpf(0),
}
MODELS = {
    "normal": dists.Normal(1.5),
    "uniform_symmetric": dists.UniformSymmetric(2.0),
    "laplace": dists.Laplace(1.0),
    "symmetrized_pareto": dists.SymmetrizedPareto(2.5),
}
BREAKS = {"uniform_symmetric": [2], "symmetrized_pareto": [1, 10, 100, 10**4, 10**6]}


def _oracle(kind: str, h, lo=0, hi=mp.inf) -> float:
    f = ORACLE_DENSITY[kind]
    pts = sorted({mp.mpf(lo), *[mp.mpf(b) for b in BREAKS.get(kind, []) if lo < b < hi], hi})
    g = lambda x: h(x) * f(x)
    if hi == mp.inf and pts[-2] > 0:
        # map the last, infinite piece to (0, 1/a] so slow power tails are integrated accurately
        a = pts[-2]
        tail = mp.quad(lambda u: g(1 / u) / u**2, [0, 1 / a])
        return float(2 * (mp.quad(g, pts[:-1]) + tail))
    return float(2 * mp.quad(g, pts))


@pytest.mark.parametrize("kind", sorted(MODELS))
def test_variance_matches_oracle(kind):
    assert MODELS[kind].variance == pytest.approx(_oracle(kind, lambda x: x * x), rel=1e-10)


@pytest.mark.parametrize("kind", sorted(MODELS))
@pytest.mark.parametrize("t", [0.5, 1.7, 4.0])
def test_truncated_moments_match_oracle(kind, t):
    m = MODELS[kind]
    tail2 = _oracle(kind, lambda x: x * x, lo=t)
    inner3 = _oracle(kind, lambda x: x**3, hi=t)
    assert dists.truncated_second_moment(m, t) == pytest.approx(tail2, rel=1e-9, abs=1e-14)
    assert dists.truncated_third_abs_moment(m, t) == pytest.approx(inner3, rel=1e-9, abs=1e-14)


def test_frozen_derived_values():
    # oracle-derived, independent of the printed worked examples
    assert dists.katz_functional(dists.Laplace(1.0), 4.0) == pytest.approx(1.3260014, abs=1e-7)
    assert dists.truncated_third_abs_moment(dists.SymmetrizedPareto(2.5), 10.0) == pytest.approx(
        5 * (math.sqrt(10) - 1), rel=1e-12
    )
    assert dists.truncated_second_moment(dists.SymmetrizedPareto(2.5), 10.0) == pytest.approx(5 / math.sqrt(10))


def test_katz_for_rademacher():
    rad = dists.rademacher()
    assert dists.katz_functional(rad, 0.5) == 1.0
    assert dists.katz_functional(rad, 4.0) == 0.25


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(sorted(MODELS)), st.floats(0.05, 50.0))
def test_katz_between_bounds(kind, s):
    m = MODELS[kind]
    k = dists.katz_functional(m, s)
    assert 0.0 <= k <= m.variance * (1 + 1e-12)
    assert k <= dists.katz_functional(m, s / 2) + 1e-12


def test_student_family():
    m = dists.ScaledStudent(5.0)
    c = math.sqrt(3 / 5)
    assert m.cdf(1.0) == pytest.approx(stats.t.cdf(1.0 / c, 5), abs=1e-13)
    assert dists.abs_third_moment(m) == pytest.approx(stats.t.expect(lambda x: abs(x) ** 3, args=(5,)) * c**3, rel=1e-7)
    with pytest.raises(MomentDivergenceError):
        dists.abs_third_moment(dists.ScaledStudent(3.0))


def test_abs_third_moment():
    assert dists.abs_third_moment(dists.Laplace(1.0)) == pytest.approx(6.0, rel=1e-10)
    assert dists.abs_third_moment(dists.rademacher()) == 1.0
    with pytest.raises(MomentDivergenceError):
        dists.abs_third_moment(dists.SymmetrizedPareto(2.5))


def test_g_weighted_moment():
    assert dists.g_weighted_second_moment(dists.Laplace(1.0), abs) == pytest.approx(6.0, rel=1e-9)
    assert dists.g_weighted_second_moment(dists.SymmetrizedPareto(2.5), g_power(0.25)) == pytest.approx(10.0, rel=1e-8)
    with pytest.raises(MomentDivergenceError):
        dists.g_weighted_second_moment(dists.SymmetrizedPareto(2.5), abs)


def test_lattice_validation():
    with pytest.raises(DomainError):
        dists.Lattice([-1.0, 2.0], [0.5, 0.5])  # mean not zero
    with pytest.raises(DomainError):
        dists.Lattice([-1.0, 1.0], [0.5, 0.6])
    m = dists.two_point_asymmetric(-2.0, 1.0, 1 / 3)
    assert m.variance == pytest.approx(2.0)
    assert m.cdf(-2.0) == pytest.approx(1 / 3) and m.cdf_left(-2.0) == 0.0


def test_make_summand_registry():
    assert dists.make_summand("laplace", scale=2.0).variance == 8.0
    with pytest.raises(DomainError):
        dists.make_summand("cauchy")
    with pytest.raises(DomainError):
        dists.SymmetrizedPareto(2.0)


def test_summand_vector_grouping():
    lap = dists.Laplace(1.0)
    sv = SummandVector((lap, dists.rademacher(), dists.Laplace(1.0), dists.rademacher()))
    assert sv.B2 == pytest.approx(6.0)
    assert sorted(k for _, k in sv.grouped()) == [2, 2]
    assert len(SummandVector.iid(lap, 10)) == 10


@pytest.mark.parametrize(
    "model,ref",
    [
        (dists.Laplace(1.0), stats.laplace()),
        (dists.Normal(1.5), stats.norm(scale=1.5)),
        (dists.UniformSymmetric(2.0), stats.uniform(-2, 4)),
    ],
)
def test_sampling_matches_cdf(model, ref):
    draws = dists.sample(model, 11, 20000)
    assert stats.kstest(draws, ref.cdf).pvalue > 1e-3


def test_pareto_sampling_tail():
    draws = dists.sample(dists.SymmetrizedPareto(2.5), 3, 200000)
    m = dists.SymmetrizedPareto(2.5)
    for x in (1.5, 3.0, 10.0):
        assert np.mean(np.abs(draws) < x) == pytest.approx(m.cdf(x) - m.cdf(-x), abs=5e-3)


@pytest.mark.parametrize(
    "model",
    [dists.Laplace(1.0), dists.Normal(1.0), dists.rademacher(),
     dists.make_summand("lattice", values=[-2.0, 0.0, 1.0, 3.0], probs=[0.3, 0.3, 0.3, 0.1])],
)
def test_sum_shortcuts_match_generic_path(model):
    counts = np.random.default_rng(0).integers(0, 12, 20000)
    fast = model.sum_given_counts(np.random.default_rng(1), counts)
    slow = SummandModel.sum_given_counts(model, np.random.default_rng(2), counts)
    assert np.all(fast[counts == 0] == 0.0)
    assert stats.ks_2samp(fast, slow).pvalue > 1e-3


def test_integrate_half_line_detects_divergence():
    with pytest.raises(MomentDivergenceError):
        dists.integrate_half_line(lambda x: 1.0 / (1.0 + x), 0.0)
    assert dists.integrate_half_line(lambda x: math.exp(-x), 0.0) == pytest.approx(1.0, rel=1e-12)

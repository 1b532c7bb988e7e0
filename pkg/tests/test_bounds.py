import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from src.covering.bounds import (
    DEFAULT_EPSILON_GRID, CodebookSizes, EventSet, SubsetConstants, best_epsilon, evaluate, event_probability,
    good_set, lower_bound, lower_bound_raw, sweep_epsilon, tightest_constants, upper_bound_cauchy_schwarz,
    upper_bound_cauchy_schwarz_raw, upper_bound_chebyshev, upper_bound_chebyshev_raw,
)
from src.covering.distcore import SubsetId, power, validate_pmf
from src.covering.errors import BoundsError
from src.covering.typicality import typical_event
from tests.conftest import random_pmf

S = SubsetId.of


def k1_constants(alpha=0.0, gamma=0.0):
    return SubsetConstants({S(1): alpha}, {S(1): alpha}, gamma)


def test_constants_vanish_for_independent_law(uniform_cube):
    F = EventSet.coordinates_equal(uniform_cube.alphabet_sizes, [1, 2])
    c = tightest_constants(uniform_cube, F)
    assert c.alpha[S(1)] == pytest.approx(0.0, abs=1e-12)
    assert c.beta[S(1)] == pytest.approx(0.0, abs=1e-12)
    assert c.gamma == pytest.approx(0.0, abs=1e-12)


def test_singleton_event_constants_equal_its_ratio(rng):
    p = random_pmf(rng, [2, 2, 2])
    u = (1, 0, 1)
    F = EventSet.from_members(p.alphabet_sizes, [u])
    c = tightest_constants(p, F)
    joint = p.probs[u] / p.marginal_table(S(0, 2))[1, 1]
    single = p.marginal_table(S(0, 1))[1, 0] / p.marginal_table(S(0))[1]
    expected = math.log(joint / single)
    assert c.alpha[S(1)] == pytest.approx(expected)
    assert c.beta[S(1)] == pytest.approx(expected)
    assert c.gamma == pytest.approx(expected)


def test_dsbs_equal_event_constants(dsbs_pmf):
    F = EventSet.coordinates_equal(dsbs_pmf.alphabet_sizes, [1, 2])
    c = tightest_constants(dsbs_pmf, F)
    # both members carry ratio p(u_1|u_2) / p(u_1) = 0.9 / 0.5
    assert c.alpha[S(1)] == pytest.approx(math.log(1.8))
    assert c.gamma == pytest.approx(math.log(1.8))


def test_empty_event_rejected(uniform_cube):
    with pytest.raises(BoundsError):
        tightest_constants(uniform_cube, EventSet.empty(uniform_cube.alphabet_sizes))


def test_zero_denominator_on_member_rejected():
    p = validate_pmf([0.25] * 4 + [0] * 4, [2, 2, 2])
    F = EventSet.from_members(p.alphabet_sizes, [(1, 0, 0)])
    with pytest.raises(BoundsError):
        tightest_constants(p, F)


def test_lower_bound_examples():
    assert lower_bound(CodebookSizes((2,)), k1_constants(alpha=math.log(2))) == pytest.approx(0.0, abs=1e-12)
    assert lower_bound(CodebookSizes((0,)), k1_constants()) == 1.0
    assert lower_bound_raw(CodebookSizes((8,)), k1_constants()) == pytest.approx(-7.0)


def test_chebyshev_two_term_example():
    c = k1_constants()
    assert upper_bound_chebyshev(CodebookSizes((4,)), c, 0.5, 0.0) == pytest.approx(0.5)


def test_full_complement_is_clamped():
    c = k1_constants()
    assert upper_bound_chebyshev_raw(CodebookSizes((4,)), c, 0.3, 1.0) > 1.0
    assert upper_bound_chebyshev(CodebookSizes((4,)), c, 0.3, 1.0) == 1.0
    assert upper_bound_cauchy_schwarz(CodebookSizes((4,)), c, 0.3, 1.0) == 1.0


def test_cauchy_schwarz_beats_chebyshev_at_one_codeword():
    c = k1_constants()
    eps = 1e-9
    assert upper_bound_cauchy_schwarz_raw(CodebookSizes((1,)), c, eps, 0.0) == pytest.approx(0.5)
    assert upper_bound_chebyshev_raw(CodebookSizes((1,)), c, eps, 0.0) == pytest.approx(1.0)


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.1, 1.5])
def test_epsilon_outside_unit_interval(eps):
    with pytest.raises(BoundsError):
        upper_bound_chebyshev(CodebookSizes((2,)), k1_constants(), eps, 0.0)


def test_upper_bound_needs_a_codeword():
    with pytest.raises(BoundsError):
        upper_bound_cauchy_schwarz(CodebookSizes((0,)), k1_constants(), 0.5, 0.0)


def test_huge_rates_stay_finite(dsbs_pmf):
    F = EventSet.coordinates_equal(dsbs_pmf.alphabet_sizes, [1, 2])
    M = CodebookSizes.from_rates([1.0], 1000)
    assert len(str(M.sizes[0])) == 435
    rep = evaluate(dsbs_pmf, F, M, 0.5)
    assert 0.0 <= rep.upper_cauchy_schwarz <= 1.0
    assert rep.lower == 0.0


def test_codebook_sizes_from_rates():
    assert CodebookSizes.from_rates([0.5, 0.0], 2).sizes == (3, 1)
    assert CodebookSizes((2, 3)).of(SubsetId()) == 1
    assert CodebookSizes((2, 3)).of(S(1, 2)) == 6


def test_good_set_extremes(rng):
    p = random_pmf(rng, [2, 2, 2])
    full = good_set(p, EventSet.full(p.alphabet_sizes), 0.3)
    assert full.mask.all() and full.prob_outside == 0.0
    empty = good_set(p, EventSet.empty(p.alphabet_sizes), 0.3)
    assert not empty.mask.any() and empty.prob_outside == pytest.approx(1.0)


def test_event_probability_examples(uniform_cube):
    assert event_probability(uniform_cube, EventSet.full(uniform_cube.alphabet_sizes)) == pytest.approx(1.0)
    F = EventSet.coordinates_equal(uniform_cube.alphabet_sizes, [1, 2])
    assert event_probability(uniform_cube, F) == pytest.approx(0.5)


def test_product_event_probability_two_letters(dsbs_pmf):
    pw = power(dsbs_pmf, 2)
    F = EventSet.coordinates_equal(pw.alphabet_sizes, [1, 2])
    assert event_probability(pw, F) == pytest.approx(0.9 ** 2)


def test_projection_collapses_other_codebooks():
    F = EventSet.from_members([1, 2, 2, 1], [(0, 1, 0, 0)])
    proj = F.projection(S(1))
    assert proj.shape == (1, 2, 1, 1)
    assert proj[0, 1, 0, 0] and not proj[0, 0, 0, 0]


def test_member_outside_alphabets_rejected():
    with pytest.raises(BoundsError):
        EventSet.from_members([1, 2, 2], [(0, 2, 0)])


def _random_instance(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 3))
    p = random_pmf(rng, [2] * (k + 2))
    F = typical_event(p, 1, float(rng.choice([0.3, 0.7, 1.2])))
    M = CodebookSizes(tuple(int(m) for m in rng.integers(1, 5, size=k)))
    return p, F, M


@pytest.mark.parametrize("seed", range(100))
def test_cauchy_schwarz_never_exceeds_chebyshev(seed):
    p, F, M = _random_instance(seed)
    if F.is_empty():
        pytest.skip("empty typical set")
    for rep in sweep_epsilon(p, F, M):
        assert rep.upper_cauchy_schwarz_raw <= rep.upper_chebyshev_raw + 1e-12


@settings(max_examples=60, deadline=None)
@given(t_gamma=st.floats(-20, 20), logm=st.floats(0, 30), eps=st.floats(0.01, 0.99), p_fc=st.floats(0, 1))
def test_cauchy_schwarz_dominance_property(t_gamma, logm, eps, p_fc):
    M = CodebookSizes((max(1, int(math.exp(logm))),))
    c = k1_constants(gamma=t_gamma)
    assert upper_bound_cauchy_schwarz_raw(M, c, eps, p_fc) <= upper_bound_chebyshev_raw(M, c, eps, p_fc) + 1e-12


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), j=st.integers(0, 1), extra=st.integers(1, 50), eps=st.floats(0.05, 0.95))
def test_larger_codebooks_never_loosen_bounds(seed, j, extra, eps):
    p, F, M = _random_instance(seed)
    assume(not F.is_empty())
    c = tightest_constants(p, F)
    j %= M.k
    bigger = CodebookSizes(tuple(m + extra if i == j else m for i, m in enumerate(M.sizes)))
    assert lower_bound(bigger, c) <= lower_bound(M, c) + 1e-12
    for bound in (upper_bound_chebyshev_raw, upper_bound_cauchy_schwarz_raw):
        assert bound(bigger, c, eps, 0.0) <= bound(M, c, eps, 0.0) * (1 + 1e-12) + 1e-12


@pytest.mark.parametrize("seed", range(20))
def test_good_set_mass_bounded_by_complement(seed):
    rng = np.random.default_rng(1000 + seed)
    k = int(rng.integers(1, 3))
    p = random_pmf(rng, [2] * (k + 2))
    F = typical_event(p, 1, 0.5)
    p_fc = 1.0 - event_probability(p, F)
    for eps in DEFAULT_EPSILON_GRID:
        assert good_set(p, F, eps).prob_outside <= p_fc / eps + 1e-12


def test_best_epsilon_picks_smallest(uniform_cube):
    F = EventSet.coordinates_equal(uniform_cube.alphabet_sizes, [1, 2])
    reports = sweep_epsilon(uniform_cube, F, CodebookSizes((6,)))
    best = best_epsilon(reports)
    assert best.upper_cauchy_schwarz_raw == min(r.upper_cauchy_schwarz_raw for r in reports)
    assert len(reports) == len(DEFAULT_EPSILON_GRID)
    assert set(best.terms) == {"P(F^c)/eps", "full"}

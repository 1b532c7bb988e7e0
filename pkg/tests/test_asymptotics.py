import math

import numpy as np
import pytest
from scipy.special import logsumexp

from src.covering.asymptotics import (
    RateTuple, asymptotic_constants, atypicality_bound, boundary_scan, chernoff_exponent, converse_check,
    covering_threshold, direct_check, epsilon_schedule, exponent_report, golden_section_max, information_term,
    log_mgf,
)
from src.covering.distcore import SubsetId, codebook_subsets, full_codebook_set, validate_pmf
from src.covering.typicality import typical_mask
from tests.conftest import random_pmf

S = SubsetId.of
DSBS_I = math.log(2) + 0.1 * math.log(0.1) + 0.9 * math.log(0.9)


def bernoulli_quarter():
    return validate_pmf([0.25, 0.75], [1, 2, 1])


def test_information_term_is_conditional_mutual_information(dsbs_pmf):
    assert information_term(dsbs_pmf, S(1)) == pytest.approx(DSBS_I)
    assert covering_threshold(dsbs_pmf) == pytest.approx(DSBS_I)


@pytest.mark.parametrize("seed", range(50))
def test_constant_chain_identity(seed):
    rng = np.random.default_rng(seed)
    k = 2 + seed % 2
    p = random_pmf(rng, [2] * (k + 2))
    n, delta = int(rng.integers(1, 50)), float(rng.uniform(0.01, 0.2))
    c = asymptotic_constants(p, n, delta)
    full = full_codebook_set(k)
    for Sx in codebook_subsets(k):
        if Sx == full:
            continue
        lhs = (2 * c.gamma - c.alpha[Sx] - 2 * c.beta[full - Sx]) / n
        rhs = information_term(p, Sx) + (8 * k - 2 * len(Sx) + 10) * delta
        assert lhs == pytest.approx(rhs, abs=1e-10)


def test_constants_for_independent_law(rng):
    sizes = [2, 3, 2, 2]
    marginals = [rng.dirichlet(np.ones(s)) for s in sizes]
    p = validate_pmf(np.einsum("a,b,c,d->abcd", *marginals).ravel(), sizes)
    n, delta = 7, 0.05
    c = asymptotic_constants(p, n, delta)
    for Sx in codebook_subsets(2):
        assert c.alpha[Sx] == pytest.approx(-2 * n * (len(Sx) + 1) * delta, abs=1e-9)
        assert c.beta[Sx] == pytest.approx(-2 * n * (len(Sx) + 1) * delta, abs=1e-9)
    assert c.gamma == pytest.approx(2 * n * 3 * delta, abs=1e-9)


def test_constants_for_dsbs(dsbs_pmf):
    assert DSBS_I == pytest.approx(0.368064, abs=1e-6)
    c = asymptotic_constants(dsbs_pmf, 100, 0.01)
    assert c.alpha[S(1)] == pytest.approx(100 * (DSBS_I - 0.04))
    assert c.gamma == pytest.approx(100 * (DSBS_I + 0.04))
    assert asymptotic_constants(dsbs_pmf, 100, 0.0).alpha[S(1)] == pytest.approx(100 * DSBS_I)


def test_direct_and_converse_around_threshold(dsbs_pmf):
    delta = 0.03
    above = direct_check(dsbs_pmf, RateTuple((DSBS_I + 0.2,)), delta)
    assert above.satisfied and above.binding_subset == S(1)
    assert not direct_check(dsbs_pmf, RateTuple((DSBS_I,)), delta).satisfied
    assert converse_check(dsbs_pmf, RateTuple((DSBS_I - 4 * delta + 1e-9,)), delta).satisfied
    assert not converse_check(dsbs_pmf, RateTuple((DSBS_I - 0.3,)), delta).satisfied


def test_large_delta_passes_converse_everywhere(dsbs_pmf):
    assert converse_check(dsbs_pmf, RateTuple((0.0,)), 10.0).satisfied


def test_direct_uses_weaker_slack_only_for_full_set(rng):
    p = random_pmf(rng, [2, 2, 2, 2])
    R = RateTuple((5.0, 5.0))
    v = direct_check(p, R, 0.01)
    full = S(1, 2)
    assert v.per_subset_slack[full] == pytest.approx(10.0 - information_term(p, full) - 6 * 0.01)
    assert v.per_subset_slack[S(1)] == pytest.approx(5.0 - information_term(p, S(1)) - 24 * 0.01)


def test_boundary_scan_single_point(dsbs_pmf):
    rows = boundary_scan(dsbs_pmf, 0.03, [[1.0]])
    assert len(rows) == 1 and rows[0].direct and rows[0].converse


def test_boundary_scan_matches_pointwise_checks(rng):
    p = random_pmf(rng, [2, 2, 2, 2])
    axis = list(np.linspace(0.0, 1.0, 50))
    rows = boundary_scan(p, 0.01, [axis, axis])
    assert len(rows) == 2500
    assert rows[51].R == (axis[1], axis[1])
    for row in rows[::37]:
        assert row.direct == direct_check(p, RateTuple(row.R), 0.01).satisfied
        assert row.converse == converse_check(p, RateTuple(row.R), 0.01).satisfied
    # staircase: raising any rate never breaks the direct condition
    table = np.array([r.direct for r in rows]).reshape(50, 50)
    assert np.all(np.diff(table.astype(int), axis=0) >= 0)
    assert np.all(np.diff(table.astype(int), axis=1) >= 0)


def test_boundary_scan_rejects_bad_grid(dsbs_pmf):
    with pytest.raises(ValueError):
        boundary_scan(dsbs_pmf, 0.03, [[]])


def test_log_mgf_examples(rng):
    p = random_pmf(rng, [2, 3, 2])
    assert log_mgf(p, S(1, 2), 0.0) == pytest.approx(0.0, abs=1e-12)
    assert log_mgf(bernoulli_quarter(), S(1), 1.0) == pytest.approx(math.log(2))


def test_golden_section_on_parabola():
    t, value = golden_section_max(lambda x: -(x - 1.3) ** 2 + 2.0, 0.0, 4.0)
    assert t == pytest.approx(1.3, abs=1e-6)
    assert value == pytest.approx(2.0)


def grid_exponent(p, T, eps, tail):
    """Concave sup by a 1e-3 scan refined to 1e-6; None when the sup sits at the scan edge."""
    probs = p.marginal_table(T).ravel()
    probs = probs[probs > 0]
    x = -np.log(probs)
    H = float(probs @ x)
    y = x if tail == "upper" else -x
    a = (H if tail == "upper" else -H) + eps

    def f(t):
        return t * a - logsumexp(np.log(probs)[None, :] + t[:, None] * y[None, :], axis=1)

    coarse = np.linspace(0.0, 50.0, 50_001)
    i = int(np.argmax(f(coarse)))
    if i == len(coarse) - 1:
        return None
    fine = np.linspace(coarse[max(i - 1, 0)], coarse[i + 1], 2001)
    return float(f(fine).max())


def test_bernoulli_quarter_exponent_against_grid():
    p = bernoulli_quarter()
    expected = grid_exponent(p, S(1), 0.1, "upper")
    assert chernoff_exponent(p, S(1), 0.1, "upper") == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("seed", range(20))
def test_exponent_against_grid_oracle(seed):
    rng = np.random.default_rng(500 + seed)
    p = random_pmf(rng, [1, 2, 2])
    for tail in ("upper", "lower"):
        expected = grid_exponent(p, S(1, 2), 0.2, tail)
        if expected is None:
            continue
        got = chernoff_exponent(p, S(1, 2), 0.2, tail)
        assert got == pytest.approx(expected, abs=1e-6)
        assert got > 0


def test_exponent_shrinks_with_epsilon(rng):
    p = random_pmf(rng, [1, 2, 2])
    values = [chernoff_exponent(p, S(1, 2), eps) for eps in (0.2, 0.05, 1e-3, 1e-5)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert values[-1] < 1e-6


def test_uniform_law_exponent_is_unbounded(uniform_cube):
    rep = exponent_report(uniform_cube, 0.1)
    assert rep.overall == math.inf
    assert rep.prefactor == 2 * 7
    assert rep.unbounded
    assert atypicality_bound(uniform_cube, 0.1, 5) == 0.0


def test_atypicality_bound_at_zero_blocklength(dsbs_pmf):
    assert atypicality_bound(dsbs_pmf, 0.2, 0) == exponent_report(dsbs_pmf, 0.2).prefactor


def test_epsilon_schedule(dsbs_pmf, uniform_cube):
    assert epsilon_schedule(dsbs_pmf, 0.2, 0) == 0.5
    I = exponent_report(dsbs_pmf, 0.2).overall
    assert epsilon_schedule(dsbs_pmf, 0.2, 100) == pytest.approx(min(0.5, math.exp(-100 * I / 2)))
    assert epsilon_schedule(uniform_cube, 0.2, 10) == math.ulp(0.0)


def test_epsilon_schedule_residual_decays(dsbs_pmf):
    ratios = [atypicality_bound(dsbs_pmf, 0.2, n) / epsilon_schedule(dsbs_pmf, 0.2, n) for n in (200, 400, 800)]
    assert ratios[0] > ratios[1] > ratios[2]


@pytest.mark.slow
def test_atypicality_frequency_below_bound():
    p = validate_pmf([0.3, 0.2, 0.1, 0.4], [1, 2, 2])
    n, eps = 200, 0.2
    rng = np.random.default_rng(2024)
    draws = rng.choice(4, size=(10_000, n), p=p.probs.ravel())
    symbols = {0: np.zeros_like(draws), 1: draws // 2, 2: draws % 2}
    freq = 1.0 - typical_mask(p, symbols, eps).mean()
    assert freq <= atypicality_bound(p, eps, n)

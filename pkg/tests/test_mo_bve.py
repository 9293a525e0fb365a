import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from mmd2.errors import DomainError
from mmd2.mo_bve import (
    MOParams,
    conditional_density,
    conditional_exceedance,
    density,
    derived_properties,
    diagonal_atom,
    sample,
    sample_many,
    survival,
)

REF = MOParams(5.0, 2.5, 3.75)

rates = st.floats(0.0, 20.0, allow_nan=False)
times = st.floats(0.0, 3.0, allow_nan=False)


@st.composite
def mo_params(draw):
    m12 = draw(rates)
    lo = 0.0 if m12 > 0 else 0.05
    return MOParams(draw(st.floats(lo, 20.0)), draw(st.floats(lo, 20.0)), m12)


def three_sigma(p, n):
    return 3 * math.sqrt(p * (1 - p) / n)


# ---- parameters -------------------------------------------------------------


@pytest.mark.parametrize(
    "args", [(-1, 1, 1), (1, -0.1, 1), (1, 1, -2), (0, 1, 0), (1, 0, 0), (math.nan, 1, 1), (math.inf, 1, 1)]
)
def test_invalid_params_rejected(args):
    with pytest.raises(DomainError):
        MOParams(*args)


def test_zero_rates_allowed():
    MOParams(0, 0, 3)
    MOParams(1, 2, 0)


# ---- survival ---------------------------------------------------------------


def test_survival_at_origin_is_one():
    assert survival(MOParams(1, 1, 1), 0, 0) == 1.0


@pytest.mark.parametrize("a,b", [(0.3, 1.7), (2.0, 0.5), (1.0, 1.0)])
def test_survival_independent_product(a, b):
    assert survival(MOParams(1, 2, 0), a, b) == pytest.approx(math.exp(-a) * math.exp(-2 * b), rel=1e-15)


def test_survival_reference_point():
    assert survival(REF, 0.1, 0.2) == pytest.approx(math.exp(-1.75), rel=1e-15)
    assert survival(REF, 0.1, 0.2) == pytest.approx(0.173774, abs=5e-7)


def test_survival_reference_point_monte_carlo():
    x1, x2, _ = sample_many(REF, np.random.default_rng(1), 10**6)
    freq = np.mean((x1 > 0.1) & (x2 > 0.2))
    p = math.exp(-1.75)
    assert abs(freq - p) < three_sigma(p, 10**6)


def test_survival_rejects_negative():
    with pytest.raises(DomainError):
        survival(REF, -0.1, 0.2)
    with pytest.raises(DomainError):
        survival(REF, np.array([0.1, 0.2]), np.array([0.1, -1e-9]))


def test_survival_broadcasts():
    out = survival(REF, np.array([0.0, 0.1]), 0.2)
    assert out.shape == (2,)
    assert out[1] == pytest.approx(math.exp(-1.75))


@given(mo_params(), times, times, st.floats(0.0, 1.0))
def test_survival_nonincreasing(params, x, y, h):
    s = survival(params, x, y)
    assert 0 < s <= 1
    assert survival(params, x + h, y) <= s
    assert survival(params, x, y + h) <= s


@given(mo_params(), times)
def test_marginal_consistency(params, x):
    assert survival(params, x, 0) == pytest.approx(math.exp(-(params.mu1 + params.mu12) * x), rel=1e-12)
    assert survival(params, 0, x) == pytest.approx(math.exp(-(params.mu2 + params.mu12) * x), rel=1e-12)


# ---- density ----------------------------------------------------------------


def test_density_independent_product():
    d = density(MOParams(1, 1, 0), 1, 2)
    assert d.measure == "off_diagonal"
    assert d.value == pytest.approx(math.exp(-3), rel=1e-15)


def test_density_diagonal_reference():
    d = density(REF, 0.2, 0.2)
    assert d.measure == "diagonal"
    assert d.value == pytest.approx(3.75 * math.exp(-2.25), rel=1e-15)


def test_diagonal_density_integrates_to_tail_of_atom():
    # P(X = Y > t) = mu12/total * exp(-total t), from the shock construction
    t = 0.3
    val, _ = integrate.quad(lambda z: density(REF, z, z).value, t, np.inf)
    assert val == pytest.approx(REF.mu12 / REF.total * math.exp(-REF.total * t), rel=1e-10)


@given(mo_params(), st.floats(0.05, 2.0), st.floats(0.05, 2.0))
def test_off_diagonal_density_is_mixed_partial_of_survival(params, x, y):
    if abs(x - y) < 0.02:
        return
    h = 1e-4
    fd = (
        survival(params, x + h, y + h)
        - survival(params, x + h, y - h)
        - survival(params, x - h, y + h)
        + survival(params, x - h, y - h)
    ) / (4 * h * h)
    d = density(params, x, y)
    assert d.measure == "off_diagonal"
    assert d.value == pytest.approx(fd, rel=1e-5, abs=1e-8)


def test_density_mass_is_one():
    T = 12.0  # exp(-(mu+mu12) T) is negligible for both marginals
    f = lambda y, x: density(REF, x, y).value  # noqa: E731
    below, _ = integrate.dblquad(f, 0, T, 0, lambda x: x, epsabs=1e-12, epsrel=1e-12)
    above, _ = integrate.dblquad(f, 0, T, lambda x: x, T, epsabs=1e-12, epsrel=1e-12)
    diag, _ = integrate.quad(lambda z: density(REF, z, z).value, 0, T, epsabs=1e-13)
    assert below + above + diag == pytest.approx(1.0, abs=1e-6)
    # each region carries the mass of the matching ordering event
    props = derived_properties(REF)
    assert below == pytest.approx(props.p_y_less_x, abs=1e-6)
    assert above == pytest.approx(props.p_x_less_y, abs=1e-6)
    assert diag == pytest.approx(props.p_equal, abs=1e-6)


@pytest.mark.parametrize("x,y", [(0, 1), (1, 0), (-1, 1)])
def test_density_domain(x, y):
    with pytest.raises(DomainError):
        density(REF, x, y)


# ---- derived properties -----------------------------------------------------


def test_properties_homogeneous_reference():
    p = derived_properties(MOParams(3.75, 3.75, 3.75))
    assert p.p_equal == pytest.approx(1 / 3, rel=1e-15)
    assert p.min_rate == 11.25


def test_properties_independent():
    p = derived_properties(MOParams(1, 2, 0))
    assert (p.p_equal, p.correlation) == (0, 0)
    assert (p.marginal_rate_1, p.marginal_rate_2) == (1, 2)


def test_properties_pure_common_shock():
    p = derived_properties(MOParams(0, 0, 3))
    assert p.p_equal == 1
    assert (p.marginal_rate_1, p.marginal_rate_2) == (3, 3)


@given(mo_params())
def test_property_identities(params):
    p = derived_properties(params)
    assert p.p_equal + p.p_x_less_y + p.p_y_less_x == pytest.approx(1.0, abs=1e-12)
    assert p.correlation == p.p_equal
    assert 0 <= p.correlation <= 1


def test_correlation_against_moment_formula():
    m = REF
    # E[XY] = double integral of the survival function; split at the kink x == y
    f = lambda y, x: survival(m, x, y)  # noqa: E731
    lo, _ = integrate.dblquad(f, 0, 15, 0, lambda x: x, epsabs=1e-13, epsrel=1e-13)
    hi, _ = integrate.dblquad(f, 0, 15, lambda x: x, 15, epsabs=1e-13, epsrel=1e-13)
    exy = lo + hi
    a, b = m.mu1 + m.mu12, m.mu2 + m.mu12
    corr = (exy - 1 / (a * b)) * a * b
    assert corr == pytest.approx(derived_properties(m).correlation, abs=1e-8)


# ---- conditional law --------------------------------------------------------


def test_conditional_independent():
    assert conditional_density(MOParams(1, 1, 0), 1, 1.0, 2.0) == pytest.approx(math.exp(-2), rel=1e-15)


@pytest.mark.parametrize("given_", [1, 2])
@pytest.mark.parametrize("at", [0.1, 0.5, 1.3])
def test_conditional_mass_is_one(given_, at):
    f = lambda y: conditional_density(REF, given_, at, y)  # noqa: E731
    lo, _ = integrate.quad(f, 0, at, epsabs=1e-13, epsrel=1e-13)
    hi, _ = integrate.quad(f, at, np.inf, epsabs=1e-13, epsrel=1e-13)
    assert lo + hi + diagonal_atom(REF, given_, at) == pytest.approx(1.0, abs=1e-8)


@given(mo_params(), st.floats(0.05, 2.0), st.floats(0.05, 2.0))
def test_conditional_is_joint_over_marginal(params, at, y):
    if abs(at - y) < 1e-6:
        return
    a = params.mu1 + params.mu12
    marg = a * math.exp(-a * at)
    assert conditional_density(params, 1, at, y) == pytest.approx(density(params, at, y).value / marg, rel=1e-10)


def test_diagonal_atom_by_bayes():
    at = 0.4
    a = REF.mu1 + REF.mu12
    bayes = density(REF, at, at).value / (a * math.exp(-a * at))
    assert diagonal_atom(REF, 1, at) == pytest.approx(bayes, rel=1e-13)


def test_conditional_exceedance_reference():
    v = conditional_exceedance(REF, 2, 0.2)
    assert v == pytest.approx(2.5 / 6.25 * math.exp(-1), rel=1e-15)
    assert v == pytest.approx(0.147152, abs=5e-7)
    tail, _ = integrate.quad(lambda y: conditional_density(REF, 2, 0.2, y), 0.2, np.inf, epsabs=1e-13)
    assert tail == pytest.approx(v, rel=1e-9)


def test_conditional_diagonal_rejected():
    with pytest.raises(DomainError):
        conditional_density(REF, 1, 0.5, 0.5)
    with pytest.raises(DomainError):
        conditional_density(REF, 3, 0.5, 0.2)


# ---- sampler ----------------------------------------------------------------


def test_sample_deterministic():
    a = [sample(REF, np.random.default_rng(7)) for _ in range(3)]
    assert a[0] == a[1] == a[2]
    x1, x2, c = sample_many(REF, np.random.default_rng(7), 100)
    y1, y2, d = sample_many(REF, np.random.default_rng(7), 100)
    assert np.array_equal(x1, y1) and np.array_equal(x2, y2) and np.array_equal(c, d)


def test_sample_scalar_invariants(rng):
    for _ in range(2000):
        s = sample(REF, rng)
        assert s.x1 > 0 and s.x2 > 0
        assert s.common_shock == (s.x1 == s.x2)


def test_common_flag_iff_equal(rng):
    x1, x2, c = sample_many(REF, rng, 10**5)
    assert np.array_equal(c, x1 == x2)
    assert np.all(x1 > 0) and np.all(x2 > 0)


def test_no_common_shock_without_common_rate(rng):
    n = 10**6
    x1, x2, c = sample_many(MOParams(1, 2, 0), rng, n)
    assert not c.any()
    # sample correlation of independent variables has sd ~ 1/sqrt(n)
    assert abs(np.corrcoef(x1, x2)[0, 1]) < 3 / math.sqrt(n)


def test_common_fraction(rng):
    n = 10**6
    _, _, c = sample_many(MOParams(3.75, 3.75, 3.75), rng, n)
    assert abs(c.mean() - 1 / 3) < three_sigma(1 / 3, n)


def test_min_rate(rng):
    n = 10**6
    x1, x2, _ = sample_many(REF, rng, n)
    m = np.minimum(x1, x2)
    mean = 1 / REF.total  # exponential: sd equals mean
    assert abs(m.mean() - mean) < 3 * mean / math.sqrt(n)


def test_pure_common_shock_always_equal(rng):
    x1, x2, c = sample_many(MOParams(0, 0, 2.0), rng, 1000)
    assert c.all() and np.array_equal(x1, x2)


def test_sampler_survival_grid():
    n = 10**6
    x1, x2, _ = sample_many(REF, np.random.default_rng(11), n)
    pts = np.array([0.02, 0.05, 0.1, 0.2, 0.35])
    for x in pts:
        for y in pts:
            p = survival(REF, x, y)
            freq = np.mean((x1 > x) & (x2 > y))
            assert abs(freq - p) < three_sigma(p, n), (x, y, freq, p)


@pytest.mark.parametrize("x,y,t", [(0.05, 0.1, 0.05), (0.1, 0.02, 0.1), (0.0, 0.0, 0.15), (0.2, 0.2, 0.03)])
def test_weak_lack_of_memory(x, y, t):
    n = 10**6
    x1, x2, _ = sample_many(REF, np.random.default_rng(13), n)
    cond = (x1 > x) & (x2 > y)
    m = int(cond.sum())
    freq = np.mean((x1[cond] > x + t) & (x2[cond] > y + t))
    p = survival(REF, t, t)
    assert abs(freq - p) < three_sigma(p, m)
    # the exact law satisfies it identically
    assert survival(REF, x + t, y + t) / survival(REF, x, y) == pytest.approx(p, rel=1e-12)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpspectrum import measures
from mpspectrum.errors import DomainError
from mpspectrum.measures import IntervalUnion, Measure
from mpspectrum.numerics import integrate

DISCRETE_A = Measure.discrete([0.0, 1.0, 10.0], [0.2, 0.4, 0.4])
DISCRETE_B = Measure.discrete([-3.0, 3.0], [0.4, 0.6])
SC = Measure.semicircle(1.0)

upper_z = st.builds(complex, st.floats(-20, 20), st.floats(1e-3, 20))


def mp_closed_form(z, lam):
    # Law of X with ratio lam: roots of lam z m^2 + (z - 1 + lam) m + 1 = 0.
    disc = np.sqrt(complex((z - 1 - lam) ** 2 - 4 * lam))
    roots = [(1 - lam - z + s) / (2 * lam * z) for s in (disc, -disc)]
    return max(roots, key=lambda r: r.imag)


def test_atom_stieltjes():
    assert abs(Measure.atom(3.0).stieltjes(1j) - (0.3 + 0.1j)) < 1e-15


def test_semicircle_stieltjes_closed_form():
    m = SC.stieltjes(1j)
    assert abs(m - 2 * (math.sqrt(2) - 1) * 1j) < 1e-12


def test_semicircle_closed_form_matches_quadrature():
    part = SC.continuous[0][1]
    for z in (0.3 + 0.2j, -1.5 + 0.01j, 4 + 2j):
        quad = integrate(lambda x: part.pdf(np.array([x]))[0] / (x - z), -1.0, 1.0, tol=1e-12)
        assert abs(SC.stieltjes(z) - quad) < 1e-8


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_marchenko_pastur_matches_closed_form_on_grid(lam):
    mu = Measure.marchenko_pastur(lam)
    xs = np.linspace(-1, 8, 10)
    ys = np.logspace(-2, 1, 10)
    worst = max(abs(mu.stieltjes(complex(x, y)) - mp_closed_form(complex(x, y), lam)) for x in xs for y in ys)
    assert worst < 1e-8


def test_marchenko_pastur_zero_atom():
    mu = Measure.marchenko_pastur(2.0)
    assert abs(mu.atom_mass(0.0) - 0.5) < 1e-15
    assert Measure.marchenko_pastur(0.5).atom_mass(0.0) == 0.0
    assert not mu.in_D(0.0)


@settings(max_examples=200)
@given(upper_z)
def test_stieltjes_bounds(z):
    for mu in (DISCRETE_B, SC, Measure([(0.3, Measure.atom(1.0)), (0.7, Measure.semicircle(2.0, 1.0))])):
        m = mu.stieltjes(z)
        assert m.imag > 0
        assert abs(m) <= 1 / z.imag * (1 + 1e-12)


def test_stieltjes_rejects_bad_arguments():
    with pytest.raises(DomainError):
        SC.stieltjes(1.0 + 0j)
    with pytest.raises(DomainError):
        SC.stieltjes(complex(float("nan"), 1.0))


def test_stieltjes_real_examples():
    assert abs(DISCRETE_B.stieltjes_real(0.0) - 1 / 15) < 1e-15
    assert abs(SC.stieltjes_real(2.0) + 2 * (2 - math.sqrt(3))) < 1e-12
    assert abs(SC.stieltjes_real(-2.0) - 2 * (2 - math.sqrt(3))) < 1e-12
    assert -1e-6 < DISCRETE_B.stieltjes_real(1e7) < 0


def test_stieltjes_real_in_support_names_component():
    with pytest.raises(DomainError, match="atom"):
        DISCRETE_B.stieltjes_real(3.0)
    with pytest.raises(DomainError, match="Semicircle"):
        SC.stieltjes_real(0.5)


@pytest.mark.parametrize("x", [2.0, -1.7, 5.0])
def test_upper_limit_approaches_real_value(x):
    mu = Measure([(0.5, Measure.atom(-3.0)), (0.5, SC)])
    target = mu.stieltjes_real(x)
    errs = [abs(mu.stieltjes(complex(x, y)) - target) for y in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)]
    assert errs[-1] < 1e-5
    assert errs == sorted(errs, reverse=True)


@settings(max_examples=60)
@given(st.floats(1.05, 6.0), st.sampled_from([1, -1]))
def test_stieltjes_real_increasing(h, side):
    mu = Measure([(0.4, Measure.atom(-3.0)), (0.6, SC)])
    h = side * h
    if mu.support().contains(h) or mu.support().contains(h + 1e-4):
        return
    assert mu.stieltjes_real(h + 1e-4) > mu.stieltjes_real(h)


def test_inverse_moment_examples():
    assert abs(Measure.atom(3.0).inverse_moment(0.0, 2) - 1 / 9) < 1e-15
    assert abs(DISCRETE_B.inverse_moment(0.0, 2) - 1 / 9) < 1e-15
    assert DISCRETE_B.inverse_moment(0.5, 1) == DISCRETE_B.stieltjes_real(0.5)


@pytest.mark.parametrize("h", [1.3, -2.5, 4.0])
@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_inverse_moment_derivative_relation(h, k):
    mu = Measure([(0.4, Measure.atom(-3.0)), (0.6, SC)])
    from mpspectrum.numerics import central_difference
    d = central_difference(lambda t: mu.inverse_moment(t, k), h, 1e-3)
    exact = k * mu.inverse_moment(h, k + 1)
    assert abs(d - exact) <= 1e-7 * max(1.0, abs(exact))
    if k % 2 == 0:
        assert mu.inverse_moment(h, k) > 0


def test_semicircle_inverse_moments_match_quadrature():
    part = measures.Semicircle(0.7, 0.4)
    for h in (1.6, -0.8):
        for k in range(1, 6):
            quad = integrate(lambda x: part.pdf(np.array([x]))[0] / (x - h) ** k, part.lo, part.hi, tol=1e-11)
            assert abs(part.inverse_moment(h, k) - quad) <= 1e-8 * max(1, abs(quad))


def test_atom_mass_examples():
    assert DISCRETE_A.atom_mass(0.0) == pytest.approx(0.2, abs=1e-15)
    assert DISCRETE_A.atom_mass(0.5) == 0.0
    assert SC.atom_mass(0.0) == 0.0


def test_quantiles_and_moments():
    assert list(DISCRETE_B.quantiles(5)) == [-3.0, -3.0, 3.0, 3.0, 3.0]
    assert DISCRETE_A.second_moment() == pytest.approx(40.4, abs=1e-12)
    assert SC.second_moment() == pytest.approx(0.25, abs=1e-15)


@pytest.mark.parametrize("n", [10, 57, 200])
def test_quantile_cdf_distance(n):
    mu = Measure([(0.3, Measure.atom(0.5)), (0.7, Measure.semicircle(1.0, 2.0))])
    q = mu.quantiles(n)
    for x in np.linspace(0.8, 3.2, 41):
        assert abs(np.mean(q <= x) - mu.cdf(x)) <= 1.0 / n + 1e-12


def test_in_D_rules():
    assert SC.in_D(1.0)
    assert not DISCRETE_B.in_D(3.0)
    assert DISCRETE_B.in_D(0.0)


def test_weights_validated():
    with pytest.raises(DomainError):
        Measure([(0.5, Measure.atom(1.0))])
    with pytest.raises(DomainError):
        Measure([(1.2, Measure.atom(1.0)), (-0.2, Measure.atom(0.0))])


def test_flattening_merges_atoms():
    mu = Measure([(0.5, DISCRETE_B), (0.5, Measure.atom(3.0))])
    assert mu.atom_mass(3.0) == pytest.approx(0.8)
    assert len(mu.atom_locations) == 2


def test_general_density_normalization_checked():
    with pytest.raises(DomainError):
        measures.GeneralDensity(lambda x: np.ones_like(x), 0.0, 2.0)
    part = measures.GeneralDensity(lambda x: 0.5 * np.ones_like(x), 0.0, 2.0)
    mu = Measure([(1.0, part)])
    assert abs(mu.stieltjes(1 + 1j) - 0.5 * np.log((2 - (1 + 1j)) / (0 - (1 + 1j)))) < 1e-9


def test_density_table_transform():
    xs = np.linspace(-1, 1, 401)
    part = measures.DensityTable(xs, np.sqrt(1 - xs ** 2))
    mu = Measure([(1.0, part)])
    for z in (0.3 + 0.5j, 2.0 + 0.01j, -0.99 + 0.001j):
        oracle = sum(integrate(lambda x: part.pdf(np.array([x]))[0] / (x - z), a, b, tol=1e-13)
                     for a, b in zip(xs[:-1:20], xs[20::20]))
        assert abs(mu.stieltjes(z) - oracle) < 1e-9
    # Close to the semicircle it samples.
    assert abs(mu.stieltjes(0.3 + 0.5j) - SC.stieltjes(0.3 + 0.5j)) < 1e-3


def test_json_round_trip():
    xs = np.linspace(0, 1, 5)
    mu = Measure([(0.2, Measure.atom(1.0)), (0.3, SC), (0.25, Measure.marchenko_pastur(0.5, 2.0)),
                  (0.25, Measure([(1.0, measures.DensityTable(xs, 1 + xs))]))])
    import json
    again = Measure.from_dict(json.loads(json.dumps(mu.to_dict())))
    assert again == mu


def test_unknown_part_rejected():
    with pytest.raises(DomainError):
        Measure.from_dict({"components": [{"weight": 1.0, "part": {"type": "cauchy"}}]})


# IntervalUnion ---------------------------------------------------------------------

intervals = st.lists(st.tuples(st.floats(-10, 10), st.floats(0, 5)).map(lambda t: (t[0], t[0] + t[1])),
                     max_size=6)


@given(intervals, st.floats(-12, 12))
def test_union_and_complement_cover_line(ivs, x):
    u = IntervalUnion(ivs)
    c = u.complement()
    assert u.contains(x) != c.contains(x)


@given(intervals)
def test_union_sorted_disjoint(ivs):
    u = IntervalUnion(ivs)
    items = list(u)
    for (a, b), (c, d) in zip(items, items[1:]):
        assert a <= b < c <= d
    assert u.complement().complement() == u


def test_open_union_drops_degenerate():
    assert IntervalUnion([(1.0, 1.0)], closed=False).is_empty
    assert IntervalUnion([(1.0, 1.0)]).contains(1.0)

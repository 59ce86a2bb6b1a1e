import math

import numpy as np
import pytest
from scipy.special import digamma

import weakineq as w
from weakineq import verifier as vf
from weakineq.exceptions import DegenerateFamily

S = np.geomspace(1e-8, 1e-1, 15)


@pytest.fixture(scope="module")
def gauss():
    # N(0, 1/2): LSI Ent(f^2) <= int |f'|^2, Beckner with T(t) = t
    return w.build_measure(w.Potential.gaussian())


def test_ent_and_var_on_two_points():
    wts = np.array([0.5, 0.5])
    g = np.array([1.0, 3.0])
    assert vf.ent_q(wts, g) == pytest.approx(0.5 * math.log(0.5) + 1.5 * math.log(1.5), rel=1e-14)
    assert vf.var_q(wts, g) == pytest.approx(1.0)
    assert vf.ent_q(wts, np.zeros(2)) == 0.0


def test_functionals_gaussian_identity(gauss):
    # Ent(x^2) = E[x^2 log x^2] - (1/2) log(1/2), E[x^2 log x^2] = psi(3/2)/2
    ent, dir_, osc2, var = vf.functionals(gauss, gauss.grid)
    oracle = 0.5 * digamma(1.5) + 0.5 * math.log(2.0)
    assert ent == pytest.approx(oracle, rel=1e-5)
    assert dir_ == pytest.approx(1.0, rel=1e-12)
    assert var == pytest.approx(0.5, rel=1e-6)
    assert osc2 == pytest.approx((gauss.grid[-1] - gauss.grid[0]) ** 2)


def test_check_wlsi_on_exponential_extremal(gauss):
    f = np.exp(0.5 * gauss.grid)
    f = np.minimum(f, 50.0)
    assert vf.check_wlsi(gauss, f, 1.01, [1e-12])["holds"]
    assert not vf.check_wlsi(gauss, f, 0.9, [1e-12])["holds"]


def test_families_hold_for_lsi_constant(gauss):
    fam = sum((vf.make_family(gauss, k) for k in vf.FAMILY_KINDS[1:]), vf.make_family(gauss, vf.FAMILY_KINDS[0]))
    for f in fam.members:
        assert vf.check_wlsi(gauss, f, 1.0, S)["holds"]
    emp = vf.empirical_beta(gauss, fam, S, return_details=True)
    assert np.all(emp.beta <= 1.0 + 1e-9)
    assert emp.beta[0] > 0.3
    assert all(emp.worst_id)


def test_empirical_rate_csv(gauss, tmp_path):
    emp = vf.empirical_beta(gauss, vf.capacity_ramps(gauss), S, return_details=True)
    path = tmp_path / "emp.csv"
    emp.to_csv(path)
    lines = open(path).read().splitlines()
    assert lines[0] == "s,beta_emp,worst_f_id" and len(lines) == S.size + 1
    # each member's quotient decreases in s, so the supremum does too
    assert np.all(np.diff(emp.beta) <= 1e-15)


def test_degenerate_families(gauss):
    with pytest.raises(DegenerateFamily):
        vf.empirical_beta(gauss, vf.FunctionFamily("empty", [], []), S)
    const = vf.FunctionFamily("const", [np.ones(gauss.grid.size)], ["one"])
    assert np.all(vf.empirical_beta(gauss, const, S)(S) == 0.0)
    with pytest.raises(DegenerateFamily):
        vf.probe_entropy_osc_ratio(gauss, const)
    with pytest.raises(ValueError):
        vf.make_family(gauss, "nope")
    with pytest.raises(ValueError):
        vf.check_wlsi(gauss, np.ones(3), 1.0, S)


def test_random_family_is_seeded(gauss):
    a = vf.random_piecewise(gauss, n=5, seed=11)
    b = vf.random_piecewise(gauss, n=5, seed=11)
    c = vf.random_piecewise(gauss, n=5, seed=12)
    assert all(np.array_equal(x, y) for x, y in zip(a.members, b.members))
    assert not np.array_equal(a.members[0], c.members[0])


def test_gbi_limit_is_half_entropy(gauss):
    f = 1.0 + 0.5 * np.tanh(gauss.grid)
    ent = vf.functionals(gauss, f)[0]
    q = vf.gbi_quotient(gauss, f, lambda t: t, np.array([2.0 - 1e-6]))[0]
    assert q == pytest.approx(ent / 2, rel=1e-4)


def test_gbi_beckner_gaussian(gauss):
    for f in vf.capacity_ramps(gauss, k_max=8).members:
        rep = vf.check_gbi(gauss, f, lambda t: np.asarray(t, float))
        assert rep["holds"] and 1.0 < rep["p_star"] < 2.0


def test_probe_ratio_is_at_most_one_over_e(gauss):
    fam = vf.indicators_smoothed(gauss, levels=(0.5, 1 / math.e, 0.2, 0.05), widths=(0.01, 0.1))
    ratio, fid = vf.probe_entropy_osc_ratio(gauss, fam)
    assert 0.36 < ratio <= math.exp(-1) * (1 + 1e-9)
    assert "q=0.367879" in fid

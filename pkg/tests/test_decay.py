import csv
import math

import numpy as np
import pytest

import weakineq as w
from weakineq import decay
from weakineq.exceptions import NoCertificate, NotInvertible, PremiseViolated, TimeOutOfRange

T = np.array([0.0, 0.1, 1.0, 3.0, 10.0])


@pytest.mark.parametrize("form", ["stated", "gronwall"])
def test_xi_for_constant_rate(form):
    # -(b0/2) log(r/eps) = t  =>  r = eps exp(-2t/b0)
    b0, eps = 2.5, 0.1
    xi = decay.xi_from_beta(w.RateFunction.constant(b0), eps, form=form)
    r = eps * np.exp(-2 * T / b0)
    factor = (math.exp(-1) + eps) / (eps if form == "gronwall" else 1.0)
    assert np.allclose(xi(T), factor * r, rtol=1e-10)
    assert np.allclose(xi.r_of_t(T), r, rtol=1e-10)
    assert xi.params["prefactor_kind"] == "osc2"
    assert xi.is_nonincreasing(0.0, 50.0)


def test_xi_log_rate_inverts():
    b = w.RateFunction.power(1.0, 0.0, 1.0 / 3.0)
    xi = decay.xi_from_beta(b, 0.1)
    t = np.array([0.5, 5.0, 50.0])
    r = xi.r_of_t(t)
    assert np.allclose(decay.xi_inverse(b, 0.1, r), t, rtol=1e-9)


def test_xi_rejects_non_monotone_map():
    inc = w.RateFunction.from_log(lambda ls: np.exp(2 * np.asarray(ls)))
    with pytest.raises(NotInvertible):
        decay.xi_from_beta(inc, 0.1)
    with pytest.raises(ValueError):
        decay.xi_from_beta(w.RateFunction.constant(1.0), 0.1, form="other")


def test_converse_of_exponential_is_log():
    # psi(t) = 2 sqrt(2) e^{-t/2}  =>  beta(s) = 2 log(2 sqrt(2)/s)
    beta, rep = decay.converse_beta_from_xi(decay.exponential_curve(1.0, 1.0))
    s = np.array([1e-6, 1e-4, 1e-2])
    assert np.allclose(beta(s), 2 * np.log(2 * math.sqrt(2) / s), rtol=1e-9)
    assert rep["poincare"]


def test_converse_of_polynomial_decay_has_no_poincare():
    xi = decay.BoundCurve("poly", lambda t: (1 + np.asarray(t)) ** -2.0)
    beta, rep = decay.converse_beta_from_xi(xi)
    assert beta(1e-3) == pytest.approx(2 * math.sqrt(2) / 1e-3 - 1, rel=1e-8)
    assert not rep["poincare"]


def test_restricted_lsi_and_exponential_curves():
    c = decay.restricted_lsi_curve(4.0, 0.3)
    assert c(8.0) == pytest.approx(0.3 * math.exp(-2.0))
    assert decay.exponential_curve(0.5, 2.0)(2.0) == pytest.approx(2.0 * math.exp(-1.0))
    assert decay.constant_curve(1.5)(7.0) == 1.5


def test_curve_scaling_and_csv(tmp_path):
    c = decay.exponential_curve(1.0, 1.0).scaled(3.0)
    assert c(0.0) == 3.0
    path = tmp_path / "c.csv"
    c.to_csv(path, [0.0, 1.0])
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "bound", "name"] and len(rows) == 3


def test_entropy_split_bound():
    H, K, c = 0.1, math.exp(4), 1.0
    assert decay.entropy_split_bound(H, K, c) == pytest.approx((math.e + 2) * (0.1 / 4) * math.log(40.0))
    assert decay.entropy_split_bound(0.0, K, c) == 0.0
    with pytest.raises(PremiseViolated):
        decay.entropy_split_bound(H, math.e, c)
    with pytest.raises(PremiseViolated):
        decay.entropy_split_bound(1.0, K, c)


def test_iterated_curve_is_free():
    xi = decay.xi_from_beta(w.RateFunction.power(1.0, 0.0, 1.0), 0.1)
    it = decay.iterated_decay_curve(xi, 2, 0.1)
    assert it.params["free"] == ["C"]
    assert it.params["power"] == pytest.approx(1.8)
    with pytest.raises(ValueError):
        decay.iterated_decay_curve(xi, 0, 0.1)


def test_lo_curve():
    assert decay.lo_exponent(1.5, 0.1) == pytest.approx(1.35 / 1.85)
    assert decay.lo_exponent(1.0, 0.2) == pytest.approx(4 / 9)
    c = decay.lo_decay_curve(2.0, 0.1, t_offset=1.0)
    assert c(1.0) == pytest.approx(math.e)
    with pytest.raises(ValueError):
        decay.lo_decay_curve(0.5, 0.1)


def test_royer_bounds_ou():
    # V = x^2/2: V'^2 - V'' >= -1, so c_min = 1
    V = w.Potential.gaussian().scaled(0.5)
    lm, l2 = w.royer_bounds(V, 1.0, 0.1, 2.0)
    assert l2 == pytest.approx((0.2 * math.pi) ** -0.5 * math.exp(0.1) * math.e, rel=1e-12)
    assert math.isfinite(lm)
    lm_late, _ = w.royer_bounds(V, 1.0, 1.0, 2.0)
    assert math.isnan(lm_late)
    with pytest.raises(TimeOutOfRange):
        decay.royer_log_moment(V, 1.0, 1.0, 2.0)
    with pytest.raises(TimeOutOfRange):
        w.royer_bounds(V, 1.0, 0.0, 2.0)


def test_initial_condition():
    assert decay.check_initial_condition(1.5) <= 0
    assert decay.check_initial_condition(1.5, D=0.1) > 0


def test_l2_membership_threshold():
    assert w.l2_membership(1.5, 1.0)["finite"]
    assert not w.l2_membership(0.9, 1.0)["finite"]
    with pytest.raises(ValueError):
        w.l2_membership(-1.0, 1.0)


def test_tv_schedule():
    with pytest.raises(NoCertificate):
        w.tv_bound_schedule([10.0], lambda K: 0.0)
    sched = w.tv_bound_schedule([2.0, 8.0], lambda K: 1.0 / K, var_route=lambda t, K: K * np.exp(-t))
    t = np.array([0.0, 5.0])
    expect = np.minimum(np.sqrt(2.0 * np.exp(-t)) + 0.5, np.sqrt(8.0 * np.exp(-t)) + 0.125)
    assert np.allclose(sched(t), expect)


def test_tv_from_density_dominates_initial_tv():
    mu = w.build_measure(w.Potential.gaussian())
    h = 1.0 + 0.5 * np.tanh(3.0 * mu.grid)
    sched = decay.tv_bound_from_density(mu, h, [2.0, 4.0], C_P=0.5)
    tv0 = mu.integrate(np.abs(h - 1.0))
    assert sched(0.0) >= tv0 * (1 - 1e-6)
    assert sched.is_nonincreasing(0.0, 20.0)
    with pytest.raises(NoCertificate):
        decay.tv_bound_from_density(mu, h, [2.0])


def test_fit_stretched_exponent_recovers_synthetic():
    t = np.geomspace(0.1, 30, 50)
    fit = decay.fit_stretched_exponent(t, 3.0 * np.exp(-2.0 * t**0.6))
    assert fit["gamma"] == pytest.approx(0.6, abs=1e-6)
    assert fit["d"] == pytest.approx(2.0, rel=1e-6)


def test_fit_free_constant():
    c = decay.exponential_curve(1.0, 1.0)
    t = np.linspace(0, 3, 7)
    out = decay.fit_free_constant(c, t, 2.0 * np.exp(-t))
    assert out["C_dominating"] == pytest.approx(2.0) and out["C_lsq"] == pytest.approx(2.0)

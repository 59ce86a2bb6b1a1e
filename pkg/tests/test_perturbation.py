import json
import math

import numpy as np
import pytest
from scipy import integrate

import weakineq as w
from weakineq import perturbation as pt
from weakineq.exceptions import DerivativeMissing, PremiseViolated

LEB = w.Potential.lebesgue()
QUAD = w.Potential.gaussian()  # V = x^2


@pytest.fixture(scope="module")
def quad_report():
    return w.check_good(LEB, QUAD, lambda z: z, A=2.0)


def test_generator_on_lebesgue():
    x = np.array([-1.0, 0.0, 2.0])
    assert np.allclose(pt.generator_on(LEB, QUAD, x), 1.0)
    # base e^{-x^2}: LV = 1 - x * 2x
    assert np.allclose(pt.generator_on(QUAD, QUAD, x), 1.0 - 2 * x * x)
    with pytest.raises(DerivativeMissing):
        pt.generator_on(LEB, w.Potential(phi=lambda t: t * t), x)


def test_quadratic_is_good(quad_report):
    # |V'|^2 - 2LV = 4x^2 - 2 >= x^2 once x^2 >= 2
    r = quad_report
    assert r.verdict == "PASS" and not r.violations
    assert r.M_V == pytest.approx(2.0, abs=1e-6)
    assert r.inf_V == pytest.approx(0.0, abs=1e-6)
    assert r.h(10.0) == pytest.approx(2.0)
    for p, v in r.moments.items():
        assert v == pytest.approx(math.sqrt(math.pi / p), rel=1e-8)
    d = json.loads(r.to_json())
    assert d["verdict"] == "PASS" and d["n_violations"] == 0


def test_zero_G_needs_a_large_enough_A():
    assert w.check_good(LEB, QUAD, lambda z: np.zeros_like(z), A=0.0).verdict == "FAIL"
    assert w.check_good(LEB, QUAD, lambda z: np.zeros_like(z), A=1.0).verdict == "PASS"
    assert np.isinf(w.check_good(LEB, QUAD, lambda z: np.zeros_like(z), A=1.0).h(5.0))


def test_subexp_potential_h_growth():
    V = w.Potential.subexp(1.5, smoothed=True)
    r = w.check_good(LEB, V, lambda z: np.asarray(z) ** (2 / 3), A=5.0)
    assert r.verdict == "PASS"
    assert r.h(1e3) == pytest.approx(20.0, rel=1e-9)


def test_s_b():
    assert pt.s_b(w.RateFunction.constant(3.0), 5.0) == 0.0
    assert math.isinf(pt.s_b(w.RateFunction.constant(3.0), 1.0))
    assert pt.s_b(w.RateFunction.power(1.0, 0.0, 1.0), 10.0) == pytest.approx(math.exp(-10.0), rel=1e-9)


def test_tail_term_matches_quad():
    # nu = e^{-2x^2}/Z on the line; int_{x^2 >= b} 2x^2 dnu
    b = 1.0
    z = math.sqrt(math.pi / 2)
    oracle = 2 * integrate.quad(lambda x: 2 * x * x * math.exp(-2 * x * x) / z, 1.0, math.inf)[0]
    assert pt.tail_term(LEB, QUAD, b) == pytest.approx(oracle, rel=1e-6)


def test_wit_constants(quad_report):
    beta_wl = w.RateFunction.power(1.0, 0.0, 1.0)
    beta_wp = w.RateFunction.constant(0.25)
    b, u = 10.0, 1e-3
    C, D = w.wit_constants(quad_report, beta_wl, beta_wp, u, b)
    h = 2.0
    k = 2.0 + 2.0 * 2.0 + 2.0 * h
    assert C == pytest.approx(h + k * 0.25)
    expect_D = pt.s_b(beta_wl, h) + k * u + pt.tail_term(LEB, QUAD, b)
    assert D == pytest.approx(expect_D, rel=1e-12)
    with pytest.raises(PremiseViolated):
        w.wit_constants(quad_report, beta_wl, beta_wp, u, 1.0)
    with pytest.raises(ValueError):
        w.wit_constants(quad_report, beta_wl, beta_wp, 0.0, b)


def test_corollary_premises():
    V = w.Potential.subexp(1.5, smoothed=True)
    r = w.check_good(LEB, V, lambda z: np.asarray(z) ** (2 / 3), A=5.0)
    ok = w.corollary_ts_check(r, w.RateFunction.power(1.0, 0.0, 1.0 / 3.0))
    assert ok["poincare"] and ok["beta_v"] is not None
    # beta_v(s) = h(log(1/s)) = 2 log(1/s)^{1/3} once log(1/s) >= A
    assert ok["beta_v"](1e-6) == pytest.approx(2 * math.log(1e6) ** (1 / 3), rel=1e-9)
    no = w.corollary_ts_check(r, w.RateFunction.power(1.0, 0.0, 1.0))
    assert not no["poincare"] and no["h_premise"] and not no["beta_premise"]

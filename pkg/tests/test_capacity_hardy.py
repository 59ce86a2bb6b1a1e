import csv
import math

import numpy as np
import pytest
from scipy import integrate, optimize

import weakineq as w
from weakineq.capacity import kernel_s
from weakineq.exceptions import AtMedian, InsufficientRange


@pytest.fixture(scope="module")
def gauss():
    return w.build_measure(w.Potential.gaussian())


@pytest.fixture(scope="module")
def unif():
    return w.build_measure(w.Potential.uniform(0.0, 1.0), (0.0, 1.0, 512))


def _gauss_resistance(x):
    return integrate.quad(lambda t: math.sqrt(math.pi) * math.exp(t * t), 0.0, x)[0]


def test_kernel_values():
    m = 0.01
    assert kernel_s(m, "half") == pytest.approx(0.005 * math.log(51.0), rel=1e-14)
    assert kernel_s(m, "e2") == pytest.approx(0.005 * math.log(1 + math.e**2 / m), rel=1e-14)
    with pytest.raises(ValueError):
        kernel_s(m, "other")


def test_cap_halfline_gaussian(gauss):
    for x in (0.5, 1.0, 2.5):
        assert w.cap_halfline(gauss, x) == pytest.approx(1.0 / _gauss_resistance(x), rel=1e-8)
        assert w.cap_halfline(gauss, -x, "left") == pytest.approx(1.0 / _gauss_resistance(x), rel=1e-8)


def test_cap_at_median_raises(gauss):
    with pytest.raises(AtMedian):
        w.cap_halfline(gauss, gauss.median)
    with pytest.raises(ValueError):
        w.cap_halfline(gauss, -1.0, "right")


def test_capacity_rate_satisfies_necessary_condition(gauss):
    beta = w.beta_from_capacity(gauss)
    assert beta.is_nonincreasing(lo=beta.table[0][0], hi=beta.table[0][-1])
    rep = w.check_necessary(gauss, beta)
    assert rep["worst_ratio"] <= 1 + 1e-9 and not rep["violations"]
    assert w.check_necessary(gauss, beta.scaled(0.5))["violations"]


def test_profile_csv(gauss, tmp_path):
    p = w.capacity_profile(gauss, "right")
    path = tmp_path / "cap.csv"
    p.to_csv(path, beta=w.RateFunction.constant(1.0))
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["x", "mass", "cap", "s_star", "lhs", "ratio"]
    assert len(rows) == p.x.size + 1


def test_muckenhoupt_gaussian(gauss):
    # B = sup_x P(X > x) * int_0^x 1/rho for N(0, 1/2); C_P = 1/2
    res = optimize.minimize_scalar(lambda x: -0.5 * math.erfc(x) * _gauss_resistance(x),
                                   bounds=(0.01, 4.0), method="bounded", options={"xatol": 1e-10})
    oracle = -res.fun
    B, upper = w.poincare_constant_bounds(gauss)
    assert B == pytest.approx(oracle, rel=1e-3)
    assert B <= 0.5 <= upper


def test_muckenhoupt_uniform(unif):
    # B = sup (1 - x)(x - 1/2) = 1/16; C_P = 1/pi^2
    B, upper = w.poincare_constant_bounds(unif)
    assert B == pytest.approx(1 / 16, rel=1e-3)
    assert B <= 1 / math.pi**2 <= upper


def test_hardy_bounds_gaussian_constant_rate(gauss):
    hb = w.hardy_bounds(gauss, w.RateFunction.constant(1.0))
    assert 0 < hb.lower <= hb.upper < math.inf
    assert hb.divergent == []
    assert set(hb.to_dict()) >= {"lower", "upper", "b_plus", "B_minus"}


def test_hardy_flags_divergence_for_too_small_rate():
    mu = w.build_measure(w.Potential.heavy_tail(1.0))
    hb = w.hardy_bounds(mu, w.RateFunction.power(1.0, 0.0, 1.0))
    assert "b_plus" in hb.divergent and "B_plus" in hb.divergent


def test_hardy_grid_validation(gauss):
    with pytest.raises(InsufficientRange):
        w.hardy_bounds(gauss, w.RateFunction.constant(1.0), x_grid=np.array([1.0, 2.0]))


def test_fit_rate_exponents_exact_power():
    fit = w.fit_rate_exponents(w.RateFunction.power(2.0, 0.7, 1.3))
    assert fit["p"] == pytest.approx(0.7, abs=1e-9)
    assert fit["q"] == pytest.approx(1.3, abs=1e-8)
    assert fit["log_C"] == pytest.approx(math.log(2.0), abs=1e-8)
    with pytest.raises(InsufficientRange):
        w.fit_rate_exponents(w.RateFunction.constant(1.0), lo=1e-3, hi=1e-2)


def test_sufficient_condition_check_subexp():
    # phi = |x|^1.5: |phi''|/phi'^2 = 1/(3 x^1.5) is small away from 0 and
    # phi/phi'^2 ~ x^{1/2} is matched by log(1/s)^{1/3}
    V = w.Potential.subexp(1.5)
    beta = w.RateFunction.power(1.0, 0.0, 1.0 / 3.0)
    rep = w.sufficient_condition_check(V, beta, 0.5, (-3.0, 3.0))
    assert rep["verdict"] == "PASS"
    assert 0 < rep["A_prime"] <= rep["A"] and math.isfinite(rep["c"])
    assert rep["max_curvature_ratio"] == pytest.approx(1 / (3 * 3.0**1.5), rel=1e-3)
    near = w.sufficient_condition_check(V, beta, 0.5, (-0.1, 0.1))
    assert near["verdict"] == "FAIL" and not near["curvature_ok"]
    with pytest.raises(ValueError):
        w.sufficient_condition_check(V, beta, 1.5, (-3.0, 3.0))

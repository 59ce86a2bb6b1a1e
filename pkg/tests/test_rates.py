import json
import math
import warnings

import numpy as np
import pytest

import weakineq as w
from weakineq import rates
from weakineq.exceptions import InsufficientRange, PremiseWarning, ShapeViolation, UnsupportedKind

S = np.geomspace(1e-10, 0.05, 40)


def test_power_values():
    b = w.RateFunction.power(2.0, 0.5, 1.0)
    assert b(0.01) == pytest.approx(2.0 * 10.0 * math.log(100.0), rel=1e-14)
    # frozen above 1/e
    assert b(0.9) == pytest.approx(b(math.exp(-1)), rel=1e-14)


def test_power_rejects_increasing_shape():
    with pytest.raises(ValueError):
        w.RateFunction.power(1.0, -0.5, 0.0)
    with pytest.raises(ValueError):
        w.RateFunction.power(1.0, 0.0, -1.0)


def test_rate_rejects_nonpositive_argument():
    with pytest.raises(ValueError):
        w.RateFunction.constant(1.0)(0.0)


def test_tabulated_interpolation_and_extrapolation():
    s = np.array([1e-4, 1e-3, 1e-2])
    b = np.array([100.0, 10.0, 1.0])
    r = w.RateFunction.tabulated(s, b)
    assert r(math.sqrt(1e-4 * 1e-3)) == pytest.approx(math.sqrt(1000.0), rel=1e-12)
    assert r(1e-6) == pytest.approx(10000.0, rel=1e-12)
    assert r.is_nonincreasing(lo=1e-8, hi=1e-2)
    with pytest.raises(InsufficientRange):
        w.RateFunction.tabulated([1e-3], [1.0])
    with pytest.raises(ValueError):
        w.RateFunction.tabulated([1e-3, 1e-2], [1.0, -1.0])


def test_wlsi_to_wpi_formula_and_envelope():
    b0 = w.RateFunction.constant(2.0)
    s = np.array([1e-6, 1e-3, 0.1])
    raw = rates.wlsi_to_wpi_value(b0, s)
    assert np.allclose(raw, 48.0 / np.log1p(1.0 / (2 * s)), rtol=1e-14)
    env = w.wlsi_to_wpi(b0)
    assert env.is_nonincreasing(lo=1e-10, hi=0.25)
    assert np.all(env(s) >= raw * (1 - 1e-12))


def test_wpi_to_wlsi_formula():
    bwp = w.RateFunction.power(3.0, 0.5, 0.0)
    pol = w.ConstantsPolicy(c=2.0, c_prime=1.5)
    out = w.wpi_to_wlsi(bwp, pol)
    s = 1e-4
    L = math.log(1 / s)
    assert out(s) == pytest.approx(1.5 * bwp(2.0 * s / L) * L, rel=1e-12)


def test_wlsi_to_swlsi_formula():
    b = w.RateFunction.power(1.0, 0.0, 1.0)
    out = w.wlsi_to_swlsi(b, w.ConstantsPolicy(kappa=0.5))
    u = 1e-3
    arg = 0.5 * u**3 / math.log(1 / u) ** 6
    assert out(u) == pytest.approx(16.0 * b(arg), rel=1e-12)


def test_spi_of_constant_and_premise_warning():
    spi = w.wlsi_to_spi(w.RateFunction.constant(5.0))
    assert spi.premise_ok
    assert spi(2 * math.e**2) == pytest.approx(5.0, abs=1e-12)
    assert spi(1.0) == spi(2 * math.e)
    with pytest.warns(PremiseWarning):
        bad = w.wlsi_to_spi(w.RateFunction.power(1.0, 1.0, 0.0))
    assert not bad.premise_ok


def test_gbi_round_trip_shapes():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PremiseWarning)
        T = w.wlsi_to_gbi(w.RateFunction.constant(2.0))
    assert T(0.5) == pytest.approx(20.0 * 0.5 * 2.0, rel=1e-14)
    back = rates.gbi_to_wlsi(T)
    s = 1e-5
    L = math.log(1 / s)
    assert back(s) == pytest.approx(T(1.0 / L) * L, rel=1e-12)


def test_gbi_shape_violation():
    bad = rates.BecknerFunction(lambda t: 1.001 - t)
    with pytest.raises(ShapeViolation):
        rates.gbi_to_wlsi(bad)


def test_tensorize():
    b = w.RateFunction.power(1.0, 0.5, 0.0)
    assert w.tensorize(b, 10)(1e-3) == pytest.approx(b(1e-4), rel=1e-12)
    with pytest.raises(ValueError):
        w.tensorize(b, 0)


def test_tensorize_gbi_independent_of_n():
    b = w.RateFunction.power(1.0, 0.0, 0.5)
    r1, r2 = rates.tensorize_gbi(b, 2), rates.tensorize_gbi(b, 500)
    assert np.allclose(r1(S), r2(S))


def test_tensorize_gbi_rejects_log_rate():
    # T(t) = t log(4t) + 1 decreases near 0
    with pytest.raises(ShapeViolation):
        rates.tensorize_gbi(w.RateFunction.power(1.0, 0.0, 1.0), 3)


def test_perturb_bounded():
    b = w.RateFunction.power(1.0, 0.5, 0.0)
    cert = w.Certificate.source("WLSI", b)
    out = w.perturb_bounded(cert, 0.7)
    assert out.rate(1e-3) == pytest.approx(math.exp(1.4) * b(1e-3 * math.exp(-0.7)), rel=1e-12)
    assert out.provenance[-1]["step"] == "perturb_bounded"
    with pytest.raises(UnsupportedKind):
        w.perturb_bounded(w.Certificate.source("GBI", b), 1.0)
    with pytest.raises(ValueError):
        w.perturb_bounded(cert, -1.0)


def test_detect_poincare_range_check():
    with pytest.raises(InsufficientRange):
        w.detect_poincare(w.RateFunction.constant(1.0), lo=1e-3, hi=1e-2)
    rep = w.detect_poincare(w.RateFunction.power(3.0, 0.0, 1.0))
    assert rep["poincare"] and rep["slope"] == pytest.approx(1.0, abs=1e-9)


def test_restricted_ls_constant_for_constant_rate():
    A, u = w.restricted_ls_constant(w.RateFunction.constant(4.0), 2.0, 3.0)
    assert A == pytest.approx(4.0, rel=1e-9)
    assert u == pytest.approx(1e-12, rel=1e-6)
    with pytest.raises(ValueError):
        w.restricted_ls_constant(w.RateFunction.constant(4.0), 0.0, 1.0)


def test_convert_chain_and_json():
    cert = w.Certificate.source("WLSI", w.RateFunction.power(1.0, 0.0, 0.5))
    wpi = w.convert(cert, "WPI")
    back = w.convert(wpi, "WLSI")
    assert [p["step"] for p in back.provenance] == ["given", "wlsi_to_wpi", "wpi_to_wlsi"]
    d = json.loads(back.to_json())
    assert d["kind"] == "WLSI"
    assert w.convert(cert, "WLSI") is cert
    with pytest.raises(UnsupportedKind):
        w.convert(w.convert(cert, "SPI"), "WLSI")


def test_constants_policy_validation():
    assert w.ConstantsPolicy.from_dict({"c": 2}).c == 2.0
    with pytest.raises(ValueError):
        w.ConstantsPolicy.from_dict({"nope": 1})
    with pytest.raises(ValueError):
        w.ConstantsPolicy(kappa=-1.0)
    with pytest.raises(ValueError):
        w.ConstantsPolicy(s0=0.5)


def test_certificate_kind_validation():
    with pytest.raises(ValueError):
        w.Certificate.source("XYZ", w.RateFunction.constant(1.0))

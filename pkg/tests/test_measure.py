import math

import numpy as np
import pytest
from scipy import integrate

import weakineq as w
from weakineq.exceptions import MassDeficit, NegativeInput, NonFinitePotential
from weakineq.measure import GridFunction

# Gaussian reference: phi = x^2, so mu = N(0, 1/2).
E_QUARTER = math.exp(0.25)


@pytest.fixture(scope="module")
def gauss():
    return w.build_measure(w.Potential.gaussian())


def test_gaussian_normalizer_and_median(gauss):
    assert gauss.log_z == pytest.approx(0.5 * math.log(math.pi), abs=1e-10)
    assert gauss.median == pytest.approx(0.0, abs=1e-10)
    assert gauss.total_mass == pytest.approx(1.0, abs=1e-12)


def test_tail_mass_matches_erfc(gauss):
    for x in (0.5, 1.0, 2.0, 3.0):
        assert gauss.tail_mass(x, "right") == pytest.approx(0.5 * math.erfc(x), rel=1e-8)
        assert gauss.tail_mass(-x, "left") == pytest.approx(0.5 * math.erfc(x), rel=1e-8)


def test_quantile_roundtrip(gauss):
    p = np.array([1e-6, 0.01, 0.3, 0.5, 0.9, 1 - 1e-5])
    x = gauss.quantile(p)
    assert np.allclose(gauss.cdf_at(x), p, rtol=1e-8, atol=1e-14)


def test_functionals_closed_forms(gauss):
    x = gauss.grid
    assert w.variance(gauss, x) == pytest.approx(0.5, rel=1e-6)
    assert w.dirichlet(gauss, x) == pytest.approx(1.0, rel=1e-12)
    # Ent(e^x) = e^{1/4}/4 under N(0, 1/2)
    assert w.entropy(gauss, np.exp(x)) == pytest.approx(E_QUARTER / 4, rel=1e-4)
    assert w.oscillation(np.array([1.0, -2.0, 0.5])) == 3.0


def test_entropy_of_constant_is_zero(gauss):
    assert w.entropy(gauss, np.full(gauss.grid.size, 3.0)) == pytest.approx(0.0, abs=1e-12)


def test_entropy_rejects_negative_input(gauss):
    with pytest.raises(NegativeInput):
        w.entropy(gauss, -np.ones(gauss.grid.size))


def test_resistance_matches_quad(gauss):
    oracle = integrate.quad(lambda t: math.sqrt(math.pi) * math.exp(t * t), 0.0, 1.5)[0]
    assert float(gauss.resistance(0.0, 1.5)) == pytest.approx(oracle, rel=1e-8)


def test_heavy_tail_is_normalized():
    mu = w.build_measure(w.Potential.heavy_tail(2.0))
    assert mu.log_z == pytest.approx(0.0, abs=1e-6)
    assert mu.tail_mass(3.0) == pytest.approx(0.5 * 4.0**-2, rel=1e-6)


def test_subexp_smoothed_derivatives():
    pot = w.Potential.subexp(1.5, smoothed=True)
    x = np.linspace(-5, 5, 21)
    h = 1e-6
    assert np.allclose(pot.phi_prime(x), (pot.phi(x + h) - pot.phi(x - h)) / (2 * h), rtol=1e-6, atol=1e-8)


def test_truncation_raises_mass_deficit():
    with pytest.raises(MassDeficit):
        w.build_measure(w.Potential.gaussian(), (-1.0, 1.0, 128))


def test_grid_validation():
    with pytest.raises(ValueError):
        w.build_measure(w.Potential.gaussian(), (-5.0, 5.0, 10))
    with pytest.raises(ValueError):
        w.build_measure(w.Potential.gaussian(), (5.0, -5.0, 100))


def test_non_finite_potential():
    bad = w.Potential(phi=lambda t: np.where(np.abs(t) < 1, 0.0, np.inf))
    with pytest.raises(NonFinitePotential):
        w.build_measure(bad, (-2.0, 2.0, 100), check_mass=False)


def test_scaled_and_plus():
    g = w.Potential.gaussian()
    s = g.scaled(0.5)
    p = g.plus(g, weight=2.0)
    x = np.array([0.3, -1.2])
    assert np.allclose(s.phi(x), 0.5 * x * x)
    assert np.allclose(p.phi(x), 3 * x * x)


def test_grid_function_on_measure(gauss):
    f = GridFunction.from_callable(gauss, np.sin)
    assert f.values.shape == gauss.grid.shape
    assert gauss.integrate(f.values) == pytest.approx(0.0, abs=1e-10)

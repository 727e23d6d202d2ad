import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ringwaves import potentials as pot

ALL_SPECS = [
    pot.pendulum(1.0),
    pot.pendulum(0.7),
    pot.harmonic(),
    pot.hertz(),
    pot.toda(),
    pot.fpu(1.0),
    pot.fpu(-0.5),
    pot.bistable(1.0),
    pot.polynomial([0.0, 0.0, 1.0, 1.0]),  # omega^2 x^2 + x^3 with omega = 1
]


def test_pendulum_second_derivative_at_zero():
    assert pot.evaluate(pot.pendulum(1.0), 2, 0.0) == pytest.approx(1.0, abs=1e-15)


def test_hertz_second_derivative_vanishes_at_contact():
    assert pot.evaluate(pot.hertz(), 2, 0.0) == 0.0


def test_hertz_first_derivative_under_compression():
    assert pot.evaluate(pot.hertz(), 1, -1.0) == pytest.approx(-1.0, abs=1e-15)


def test_toda_curvature_at_origin():
    assert pot.evaluate(pot.toda(), 2, 0.0) == pytest.approx(1.0, abs=1e-15)


def test_hertz_vanishes_under_tension():
    x = np.linspace(1e-12, 5.0, 50)
    for order in (0, 1, 2):
        assert np.all(pot.evaluate(pot.hertz(), order, x) == 0.0)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.family + str(s.params))
def test_finite_difference_consistency(spec, rng):
    """Orders 0->1 and 1->2 agree with central differences at 200 points."""
    h = 1e-5
    xs = rng.uniform(-2.0, 2.0, size=200)
    if spec.family == "hertz":
        xs = xs[np.abs(xs) > 10 * h]  # keep away from the contact kink
    for lo in (0, 1):
        f_plus = pot.evaluate(spec, lo, xs + h)
        f_minus = pot.evaluate(spec, lo, xs - h)
        deriv = pot.evaluate(spec, lo + 1, xs)
        err = np.abs((f_plus - f_minus) / (2 * h) - deriv)
        assert np.all(err <= 1e-6 * (1.0 + np.abs(deriv)))


@pytest.mark.parametrize("spec", [pot.harmonic(), pot.toda(), pot.hertz()])
def test_convex_coupling_has_nonnegative_curvature(spec):
    x = np.linspace(-3.0, 3.0, 301)
    assert np.all(pot.evaluate(spec, 2, x) >= 0.0)


@given(st.floats(-10.0, 10.0))
@settings(max_examples=60, deadline=None)
def test_pendulum_matches_closed_form(x):
    w2 = 0.7**2
    spec = pot.pendulum(0.7)
    assert pot.evaluate(spec, 0, x) == pytest.approx(w2 * (1 - math.cos(x)), abs=1e-12)
    assert pot.evaluate(spec, 1, x) == pytest.approx(w2 * math.sin(x), abs=1e-12)


def test_polynomial_is_plain_power_series():
    spec = pot.polynomial([0.0, 0.0, 4.0, 1.0])  # 4 x^2 + x^3
    assert pot.evaluate(spec, 0, 2.0) == pytest.approx(24.0)
    assert pot.evaluate(spec, 1, 2.0) == pytest.approx(28.0)
    assert pot.evaluate(spec, 2, 2.0) == pytest.approx(20.0)


def test_role_restrictions():
    with pytest.raises(pot.PotentialConfigError):
        pot.hertz(role="onsite")
    with pytest.raises(pot.PotentialConfigError):
        pot.pendulum(1.0, role="coupling")
    with pytest.raises(pot.PotentialConfigError):
        pot.bistable(1.0, role="coupling")


def test_unknown_family_rejected():
    with pytest.raises(pot.PotentialConfigError):
        pot.PotentialSpec("quartic", "onsite")


def test_bad_order_and_nonfinite_input():
    with pytest.raises(ValueError):
        pot.evaluate(pot.harmonic(), 3, 0.0)
    with pytest.raises(ValueError):
        pot.evaluate(pot.harmonic(), 0, float("nan"))


class TestFindEquilibrium:
    def test_pendulum_small_seed_goes_to_origin(self):
        eq = pot.find_equilibrium(pot.pendulum(1.0), 0.1)
        assert abs(eq.a) <= 1e-9
        assert eq.residual <= 1e-12

    def test_pendulum_large_seed_goes_to_pi(self):
        eq = pot.find_equilibrium(pot.pendulum(1.0), 3.0)
        assert eq.a == pytest.approx(math.pi, abs=1e-10)

    def test_bistable_well(self):
        eq = pot.find_equilibrium(pot.bistable(1.0), 0.9)
        assert eq.a == pytest.approx(1.0, abs=1e-10)

    def test_zero_family_by_convention(self):
        eq = pot.find_equilibrium(pot.zero(), 5.0)
        assert eq.a == 0.0

    def test_divergence_reported(self):
        # U' = 1 + x^2 has no real root
        spec = pot.polynomial([0.0, 1.0, 0.0, 1.0 / 3.0])
        with pytest.raises(RuntimeError):
            pot.find_equilibrium(spec, 0.0)

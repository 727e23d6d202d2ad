import math

import numpy as np
import pytest

import ringwaves as rw
from ringwaves import spectrum as sp


def test_pendulum_ring_dispersion_by_hand(pendulum6):
    table = sp.dispersion(pendulum6)
    assert table.nu(1) == pytest.approx(math.sqrt(2.0), abs=1e-12)
    assert table.nu(2) == pytest.approx(2.0, abs=1e-12)
    assert table.nu(3) == pytest.approx(math.sqrt(5.0), abs=1e-12)
    assert table.nu(6) == pytest.approx(1.0, abs=1e-15)
    assert not table.all_equal


def test_contact_ring_is_totally_degenerate(cradle5):
    table = sp.dispersion(cradle5)
    assert table.all_equal
    for e in table.entries:
        assert e.nu == 1.0  # exactly omega: W''(0) = 0 contributes nothing


def test_chain_without_onsite_term():
    m = rw.build_model(6, rw.zero(), rw.harmonic())
    assert sp.dispersion(m).nu(1) == pytest.approx(1.0, abs=1e-12)  # 2 sin(pi/6)


def test_monotone_frequencies_with_positive_coupling(pendulum6):
    table = sp.dispersion(pendulum6)
    nus = [table.nu(k) for k in (1, 2, 3)]
    assert nus == sorted(nus)
    assert all(b > a for a, b in zip(nus, nus[1:]))


class TestNonResonance:
    def test_pendulum_first_mode_clean(self, pendulum6):
        rep = sp.non_resonance_check(pendulum6, 1)
        assert rep.non_resonant
        assert rep.resonant_pairs == ()

    def test_fpu_first_mode_hits_third(self, fpu6):
        rep = sp.non_resonance_check(fpu6, 1)
        assert not rep.non_resonant
        (l, j, nu_j, lnu), = rep.resonant_pairs
        assert (l, j) == (2, 3)
        assert nu_j == pytest.approx(2.0, abs=1e-12)
        assert lnu == pytest.approx(2.0, abs=1e-12)

    def test_degenerate_spectrum_flagged(self, cradle5):
        rep = sp.non_resonance_check(cradle5, 1)
        assert rep.degenerate
        assert not rep.non_resonant

    def test_scan_stops_above_top_frequency(self, pendulum6):
        # multiples beyond nu_max can never resonate, whatever l_max says
        rep = sp.non_resonance_check(pendulum6, 2, l_max=10**6)
        assert rep.non_resonant

    def test_l_max_guard(self, pendulum6):
        with pytest.raises(ValueError):
            sp.non_resonance_check(pendulum6, 1, l_max=1)


class TestResonanceParameters:
    def test_hand_value_n4(self):
        assert sp.resonance_parameters(4, 1, 2, 2) == pytest.approx(-4.0 / 3.0, abs=1e-12)

    def test_fpu_resonance_is_zero_parameter(self):
        assert sp.resonance_parameters(6, 1, 3, 2) == pytest.approx(0.0, abs=1e-12)

    def test_rejects_equal_modes(self):
        with pytest.raises(ValueError):
            sp.resonance_parameters(6, 2, 2, 3)

    def test_rejects_l_one(self):
        with pytest.raises(ValueError):
            sp.resonance_parameters(6, 1, 2, 1)

    def test_large_l_limit(self):
        # -omega_l(j) approaches (2 sin(k pi/n))^2 as l grows
        n, k, j = 8, 2, 3
        target = (2 * math.sin(math.pi * k / n)) ** 2
        vals = [-sp.resonance_parameters(n, k, j, l) for l in (10, 100, 10_000)]
        errs = [abs(v - target) for v in vals]
        assert errs[-1] <= 1e-7
        assert errs == sorted(errs, reverse=True)

    def test_consistency_with_frequency_check(self, fpu6):
        # resonance happens exactly when U''(a) = W''(0) * omega_l(j)
        rep = sp.non_resonance_check(fpu6, 1)
        (l, j, *_), = rep.resonant_pairs
        w = sp.resonance_parameters(6, 1, j, l)
        assert abs(fpu6.u2_at_a - fpu6.w2_at_0 * w) <= 1e-9


class TestThresholdMode:
    @pytest.mark.parametrize(
        "omega,n,expected",
        [(1.0, 12, 3), (0.1, 6, 1), (1.99, 4, 2)],
    )
    def test_hand_values(self, omega, n, expected):
        m = rw.build_model(n, rw.pendulum(omega), rw.harmonic(), equilibrium_seed=3.0)
        k0, approx = sp.k0_threshold(m)
        assert k0 == expected
        assert abs(approx - (n / math.pi) * math.asin(omega / 2)) <= 1e-12

    def test_no_mode_above_threshold(self):
        m = rw.build_model(3, rw.pendulum(2.5), rw.harmonic(), equilibrium_seed=3.0)
        k0, _ = sp.k0_threshold(m)
        assert k0 is None

    def test_requires_concave_onsite(self, pendulum6):
        with pytest.raises(ValueError):
            sp.k0_threshold(pendulum6)

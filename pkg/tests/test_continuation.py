import math

import numpy as np
import pytest

import ringwaves as rw
from ringwaves import continuation as ct
from ringwaves import galerkin as gk
from ringwaves import symmetry as sym

NU1_N5 = math.sqrt(1.0 + 4.0 * math.sin(math.pi / 5) ** 2)  # 1.54336...


@pytest.fixture(scope="module")
def small_branches(pendulum5):
    """All three families of the n=5 pendulum ring, continued to r ~ 0.12."""
    opts = ct.ContinuationOptions(max_amplitude=0.12, step_budget=200, step_max=0.02)
    return {fam: ct.continue_branch(pendulum5, 1, fam, opts) for fam in ("T", "S", "St")}


class TestInventory:
    def test_pendulum_ring_n5(self, pendulum5):
        entries = {e.k: e for e in ct.bifurcation_inventory(pendulum5)}
        assert entries[1].families == ("T", "S", "St")
        assert entries[2].families == ("T", "S", "St")
        assert entries[5].families == ("T",)
        assert entries[1].nu == pytest.approx(NU1_N5, abs=1e-12)

    def test_half_ring_mode_single_family(self, pendulum6):
        entries = {e.k: e for e in ct.bifurcation_inventory(pendulum6)}
        assert entries[3].families == ("T",)
        assert entries[3].nu == pytest.approx(math.sqrt(5.0), abs=1e-12)

    def test_inverted_equilibrium_drops_soft_modes(self):
        m = rw.build_model(12, rw.pendulum(1.0), rw.harmonic(), equilibrium_seed=3.0)
        entries = {e.k: e for e in ct.bifurcation_inventory(m)}
        for k in (1, 2):
            assert entries[k].status == "non_bifurcating"
        for k in range(3, 7):
            assert entries[k].status == "ok"

    def test_resonant_mode_reported_with_witness(self, fpu6):
        entries = {e.k: e for e in ct.bifurcation_inventory(fpu6)}
        assert entries[1].status == "resonant"
        l, j, nu_j, _ = entries[1].witness
        assert (l, j) == (2, 3)

    def test_degenerate_spectrum_defers(self, cradle5):
        with pytest.raises(ct.DegenerateSpectrumError):
            ct.bifurcation_inventory(cradle5)

    def test_zero_mean_drops_constant_mode(self):
        m = rw.build_model(5, rw.zero(), rw.toda())
        ks = [e.k for e in ct.bifurcation_inventory(m)]
        assert 5 not in ks


class TestKernelDirections:
    def test_traveling_profile(self, pendulum5):
        kd = ct.kernel_direction(pendulum5, 1, "T")
        t = np.linspace(0, 2 * np.pi, 11, endpoint=False)
        ref = np.cos(t[:, None] + np.arange(5)[None, :] * 2 * np.pi / 5)
        prof = kd.profile(t)
        scale = prof[0, 0] / ref[0, 0]
        assert np.max(np.abs(prof - scale * ref)) <= 1e-12
        assert gk.loop_norm(kd.loop) == pytest.approx(1.0, abs=1e-12)

    def test_mirror_profile_even_in_time(self, pendulum5):
        kd = ct.kernel_direction(pendulum5, 1, "S")
        t = np.linspace(0, 2 * np.pi, 11, endpoint=False)
        ref = np.cos(np.arange(5)[None, :] * 2 * np.pi / 5) * np.cos(t[:, None])
        prof = kd.profile(t)
        scale = prof[0, 0] / ref[0, 0]
        assert np.max(np.abs(prof - scale * ref)) <= 1e-12

    def test_shifted_profile_has_node(self, pendulum5):
        kd = ct.kernel_direction(pendulum5, 1, "St")
        t = np.linspace(0, 2 * np.pi, 11, endpoint=False)
        ref = np.sin(np.arange(5)[None, :] * 2 * np.pi / 5) * np.sin(t[:, None])
        prof = kd.profile(t)
        i, j = np.unravel_index(np.abs(ref).argmax(), ref.shape)
        scale = prof[i, j] / ref[i, j]
        assert np.max(np.abs(prof - scale * ref)) <= 1e-12
        # the site carrying mode index n has no first-order motion
        assert np.max(np.abs(prof[:, 0])) <= 1e-12

    def test_rejects_soft_modes(self):
        m = rw.build_model(12, rw.pendulum(1.0), rw.harmonic(), equilibrium_seed=3.0)
        with pytest.raises(ValueError):
            ct.kernel_direction(m, 1, "T")


class TestBranches:
    def test_onset_extrapolation_all_families(self, pendulum5):
        for fam in ("T", "S", "St"):
            nu0 = ct.onset_extrapolation(pendulum5, 1, fam)
            assert abs(nu0 - NU1_N5) <= 1e-3

    def test_accepted_points_meet_invariants(self, small_branches):
        for fam, br in small_branches.items():
            assert br.termination == "max_amplitude"
            for p in br.points:
                assert p.residual <= 1e-9
                assert p.sym_residual <= 1e-10

    def test_points_satisfy_wave_patterns(self, small_branches, pendulum5):
        for fam, br in small_branches.items():
            H = ct.kernel_direction(pendulum5, 1, fam).group
            for p in br.points:
                assert sym.pattern_residual(p.loop.coefficients, H) <= 1e-10

    def test_deviation_from_template_is_higher_order(self, pendulum5):
        """|x - r e| = O(r^2); the odd pendulum force sharpens it to r^3."""
        kd = ct.kernel_direction(pendulum5, 1, "T")
        basis = sym.fixed_space(kd.group, 10)
        rs = np.logspace(-3, -1, 5)
        devs = []
        for r in rs:
            u, nu, red = ct._amplitude_pinned_point(
                pendulum5, kd, basis, float(r), kd.nu_onset, 1e-12
            )
            tpl = kd.loop.with_truncation(10).coefficients
            devs.append(gk.loop_norm(red.loop(u, nu).coefficients - r * tpl))
        slope = np.polyfit(np.log(rs), np.log(devs), 1)[0]
        assert slope >= 2.0 - 0.1  # the claimed order-r^2 bound
        assert 2.5 <= slope <= 3.5  # measured odd-force behavior

    def test_families_stay_apart(self, small_branches):
        """The three waves at equal amplitude are genuinely different orbits."""

        def at_amplitude(br, r0):
            p = min(br.points, key=lambda p: abs(p.r - r0))
            return p.loop

        r0 = 1e-2
        loops = {f: at_amplitude(b, r0) for f, b in small_branches.items()}
        for a, b in (("T", "S"), ("T", "St"), ("S", "St")):
            d = gk.loop_norm(loops[a].coefficients - loops[b].coefficients)
            assert d > 1e-3

    def test_truncation_adequacy(self, small_branches, pendulum5):
        """Residual re-evaluated at doubled cutoff stays near tolerance."""
        for br in small_branches.values():
            p = br.points[-1]
            refined = p.loop.with_truncation(2 * p.loop.l0)
            assert gk.residual(pendulum5, refined).total <= 10 * 1e-9

    def test_frequencies_decrease_along_soft_branch(self, small_branches):
        # the pendulum softens: frequency drops with amplitude
        for br in small_branches.values():
            rs = [p.r for p in br.points]
            nus = [p.nu for p in br.points]
            assert rs == sorted(rs)
            assert nus[-1] < nus[0]

    def test_resonant_continuation_refused(self, fpu6):
        with pytest.raises(ct.ResonantModeError, match="nu_3"):
            ct.continue_branch(fpu6, 1, "T")

    def test_degenerate_continuation_refused(self, cradle5):
        with pytest.raises(ct.DegenerateSpectrumError):
            ct.continue_branch(cradle5, 1, "T")

    def test_step_budget_termination(self, pendulum5):
        br = ct.continue_branch(
            pendulum5, 1, "T",
            ct.ContinuationOptions(step_budget=3, step_init=1e-3, step_max=1e-3),
        )
        assert br.termination == "step_budget"
        assert len(br.points) == 4

    def test_toda_ring_uses_twisted_families(self):
        """Asymmetric coupling forces select the parity-corrected groups."""
        m = rw.build_model(5, rw.zero(), rw.toda())
        kd = ct.kernel_direction(m, 1, "T")
        assert kd.group.twisted
        br = ct.continue_branch(
            m, 1, "T", ct.ContinuationOptions(max_amplitude=0.05, step_budget=60)
        )
        assert br.termination == "max_amplitude"
        assert all(p.residual <= 1e-9 for p in br.points)
        assert all(p.sym_residual <= 1e-10 for p in br.points)


class TestParitySelection:
    def test_plain_reflection_for_even_coupling(self, pendulum5):
        assert ct.select_twist(pendulum5, "S", 1) is False

    def test_twisted_reflection_for_contact_force(self, cradle5):
        assert ct.select_twist(cradle5, "S", None) is True

    def test_probe_detects_broken_reflection(self, cradle5):
        H = sym.build_isotropy("S", 5, None, twisted=False)
        assert not all(ct.generator_commutes(cradle5, g) for g in H.generators)


class TestFrequencyScan:
    def test_pendulum_ring_crossings(self, pendulum6):
        res = ct.frequency_scan(pendulum6, "T", (1.2, 2.4))
        assert not res.degenerate
        nus = [nu for _, nu in res.crossings]
        assert len(nus) == 3
        assert nus[0] == pytest.approx(math.sqrt(2.0), abs=1e-9)
        assert nus[1] == pytest.approx(2.0, abs=1e-9)
        assert nus[2] == pytest.approx(math.sqrt(5.0), abs=1e-9)

    def test_empty_window(self, pendulum6):
        assert ct.frequency_scan(pendulum6, "T", (3.0, 4.0)).crossings == ()

    def test_degenerate_crossing_flagged(self, cradle5):
        res = ct.frequency_scan(cradle5, "T", (0.5, 1.5))
        assert res.degenerate
        assert res.multiplicity == 5
        assert res.crossings[0][1] == pytest.approx(1.0, abs=1e-12)

    def test_standing_families_skip_unpaired_modes(self, pendulum6):
        res = ct.frequency_scan(pendulum6, "S", (1.2, 2.4))
        ks = [k for k, _ in res.crossings]
        assert 3 not in ks  # k = n/2 carries no standing family

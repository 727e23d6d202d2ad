import math

import numpy as np
import pytest

import ringwaves as rw
from ringwaves import galerkin as gk
from ringwaves import symmetry as sym
from ringwaves.lattice import circulant_basis
from ringwaves.spectrum import mode_frequency_squared


def harmonic_loop(n, l0, nu, k, amp, cb=None):
    cb = cb or circulant_basis(n)
    X = np.zeros((l0 + 1, n), dtype=complex)
    X[1] = amp * cb.vector(k)
    return gk.LoopState(n, l0, nu, X)


def random_loop_state(n, l0, nu, rng, scale=0.05, max_harmonic=None):
    X = scale * (rng.normal(size=(l0 + 1, n)) + 1j * rng.normal(size=(l0 + 1, n)))
    X[0] = X[0].real
    if max_harmonic is not None:
        X[max_harmonic + 1 :] = 0.0
    return gk.LoopState(n, l0, nu, X)


class TestRepresentation:
    def test_parseval(self, rng):
        loop = random_loop_state(5, 6, 1.3, rng)
        s = loop.samples()
        sample_norm = math.sqrt(np.mean(np.sum(s**2, axis=1)))
        assert abs(sample_norm - gk.loop_norm(loop)) <= 1e-12

    def test_samples_are_real_valued_interpolant(self, rng):
        loop = random_loop_state(4, 5, 1.0, rng)
        t = 2 * np.pi * 3 / gk.sample_count(5)
        assert np.allclose(loop.samples()[3], loop.value_at(t), atol=1e-13)

    def test_spectral_differentiation_exact(self):
        # with no forces at all the residual is exactly (l nu)^2 X_l
        m = rw.build_model(5, rw.zero(), rw.zero(role="coupling"), zero_mean_mode=False)
        loop = harmonic_loop(5, 6, 1.7, 2, 0.3)
        F = gk.residual(m, loop).coefficients
        expect = np.zeros_like(loop.coefficients)
        expect[1] = loop.nu**2 * loop.coefficients[1]
        assert np.max(np.abs(F - expect)) == 0.0

    def test_json_round_trip(self, rng):
        loop = random_loop_state(5, 4, 1.23, rng)
        back = gk.LoopState.from_json_dict(loop.to_json_dict())
        assert back.n == loop.n and back.l0 == loop.l0 and back.nu == loop.nu
        assert np.array_equal(back.coefficients, loop.coefficients)

    def test_rvec_round_trip(self, rng):
        loop = random_loop_state(6, 5, 1.0, rng)
        u = gk.loop_to_rvec(loop.coefficients)
        assert np.max(np.abs(gk.rvec_to_coeffs(u, 6, 5) - loop.coefficients)) <= 1e-15
        assert abs(np.linalg.norm(u) - gk.loop_norm(loop)) <= 1e-13

    def test_truncation_change(self, rng):
        loop = random_loop_state(5, 4, 1.0, rng)
        up = loop.with_truncation(8)
        assert np.array_equal(up.coefficients[:5], loop.coefficients)
        assert np.all(up.coefficients[5:] == 0)


class TestResidual:
    def test_zero_at_equilibrium(self, pendulum5):
        rep = gk.residual(pendulum5, gk.LoopState.zero(5, 6, 1.3))
        assert rep.total <= 1e-14

    @pytest.mark.parametrize("k", [1, 2, 5])
    def test_linearization_eigenvalue(self, pendulum5, k):
        """An infinitesimal harmonic picks up lambda_k(nu) = nu^2 - nu_k^2."""
        eps, nu = 1e-8, 1.3
        cb = circulant_basis(5)
        loop = harmonic_loop(5, 6, nu, k, eps, cb)
        F = gk.residual(pendulum5, loop).coefficients
        lam = nu**2 - mode_frequency_squared(pendulum5, k)
        measured = np.vdot(cb.vector(k), F[1]) / eps
        assert measured.real == pytest.approx(lam, abs=1e-6 * abs(lam))
        assert abs(measured.imag) <= 1e-8

    def test_time_shift_equivariance(self, pendulum5, rng):
        # low-harmonic support keeps the transcendental force dealiased
        loop = random_loop_state(5, 6, 1.3, rng, scale=0.05, max_harmonic=2)
        F = gk.residual(pendulum5, loop).coefficients
        for units in (1, 3, 5):
            g = sym.time_shift(5, units)
            shifted = loop.replace(coefficients=sym.act_coeffs(g, loop.coefficients))
            Fs = gk.residual(pendulum5, shifted).coefficients
            assert np.max(np.abs(Fs - sym.act_coeffs(g, F))) <= 1e-12

    def test_group_equivariance_small_amplitude(self, pendulum5, rng):
        """f(g x) = g f(x) for the full element set at dealiased amplitudes."""
        loop = random_loop_state(5, 6, 1.3, rng, scale=0.05, max_harmonic=2)
        F = gk.residual(pendulum5, loop).coefficients
        worst = 0.0
        for _ in range(60):
            g = sym.GroupElement(
                5, bool(rng.integers(2)), int(rng.integers(5)),
                bool(rng.integers(2)), int(rng.integers(10)),
            )
            lhs = gk.residual(
                pendulum5, loop.replace(coefficients=sym.act_coeffs(g, loop.coefficients))
            ).coefficients
            worst = max(worst, float(np.max(np.abs(lhs - sym.act_coeffs(g, F)))))
        assert worst <= 1e-10

    def test_polynomial_force_equivariance_any_amplitude(self, fpu6, rng):
        """Cubic forces transform exactly on the dealiased grid (twisted family)."""
        X = 0.5 * (rng.normal(size=(7, 6)) + 1j * rng.normal(size=(7, 6)))
        X[0] = X[0].real
        X -= X.mean(axis=1, keepdims=True)
        loop = gk.LoopState(6, 6, 1.1, X)
        F = gk.residual(fpu6, loop).coefficients
        g = sym.GroupElement(6, sflip=True, srot=2, trev=True, tshift=3, neg=True)
        lhs = gk.residual(fpu6, loop.replace(coefficients=sym.act_coeffs(g, X))).coefficients
        assert np.max(np.abs(lhs - sym.act_coeffs(g, F))) <= 1e-12

    def test_zero_mean_projection(self, fpu6, rng):
        loop = random_loop_state(6, 4, 1.0, rng)
        F = gk.residual(fpu6, loop).coefficients
        assert np.max(np.abs(F.mean(axis=1))) <= 1e-14


class TestJacobian:
    def test_diagonal_at_equilibrium(self, pendulum5):
        cb = circulant_basis(5)
        x = gk.LoopState.zero(5, 4, 1.3)
        y = harmonic_loop(5, 4, 1.3, 2, 1.0, cb)
        out = gk.jacobian_action(pendulum5, x, y)
        lam = 1.3**2 - mode_frequency_squared(pendulum5, 2)
        assert np.max(np.abs(out - lam * y.coefficients)) <= 1e-12

    def test_conserved_mode_is_flat(self):
        m = rw.build_model(6, rw.zero(), rw.harmonic())
        x = gk.LoopState.zero(6, 4, 1.0)
        Y = np.zeros((5, 6), dtype=complex)
        Y[0] = 1.0  # constant-in-space, constant-in-time direction
        out = gk.jacobian_action(m, x, gk.LoopState(6, 4, 1.0, Y))
        assert np.max(np.abs(out[0])) <= 1e-14

    def test_matches_finite_differences(self, pendulum5, rng):
        loop = random_loop_state(5, 5, 1.3, rng, scale=0.05)
        J = gk.jacobian_dense(pendulum5, loop)
        u = gk.loop_to_rvec(loop.coefficients)
        h = 1e-6
        for _ in range(5):
            d = rng.normal(size=u.size)
            d /= np.linalg.norm(d)
            fp = gk.residual_rvec(
                pendulum5, loop.replace(coefficients=gk.rvec_to_coeffs(u + h * d, 5, 5))
            )
            fm = gk.residual_rvec(
                pendulum5, loop.replace(coefficients=gk.rvec_to_coeffs(u - h * d, 5, 5))
            )
            fd = (fp - fm) / (2 * h)
            ref = J @ d
            assert np.linalg.norm(fd - ref) <= 1e-6 * (1.0 + np.linalg.norm(ref))

    def test_action_matches_dense(self, pendulum5, rng):
        loop = random_loop_state(5, 5, 1.3, rng)
        J = gk.jacobian_dense(pendulum5, loop)
        y = random_loop_state(5, 5, 1.3, rng, scale=1.0)
        via_dense = gk.rvec_to_coeffs(J @ gk.loop_to_rvec(y.coefficients), 5, 5)
        via_action = gk.jacobian_action(pendulum5, loop, y)
        assert np.max(np.abs(via_dense - via_action)) <= 1e-12

    def test_nu_derivative(self, pendulum5, rng):
        loop = random_loop_state(5, 4, 1.3, rng)
        h = 1e-7
        fp = gk.residual_rvec(pendulum5, loop.replace(nu=loop.nu + h))
        fm = gk.residual_rvec(pendulum5, loop.replace(nu=loop.nu - h))
        fd = (fp - fm) / (2 * h)
        assert np.linalg.norm(fd - gk.nu_derivative_rvec(loop)) <= 1e-6


class TestSlaveSolve:
    def test_zero_master_gives_zero_tail(self, pendulum5):
        loop = gk.solve_slave(pendulum5, np.zeros(5, dtype=complex), 1.3, 8)
        assert gk.loop_norm(loop) <= 1e-12

    def test_quadratic_bound(self):
        """|x2(r)| = O(r^2): the log-log slope is at least 2 - 0.1."""
        m = rw.build_model(4, rw.pendulum(1.0), rw.harmonic())
        cb = circulant_basis(4)
        nu = 1.05 * math.sqrt(mode_frequency_squared(m, 1))
        rs, norms = [], []
        for r in (1e-1, 1e-2, 1e-3):
            sol = gk.solve_slave(m, r * cb.vector(1), nu, 10)
            X2 = sol.coefficients.copy()
            X2[1] = 0.0
            rs.append(r)
            norms.append(gk.loop_norm(X2))
        slope = np.polyfit(np.log(rs), np.log(norms), 1)[0]
        assert slope >= 2.0 - 0.1

    def test_equivariance(self, pendulum5, rng):
        cb = circulant_basis(5)
        x1 = 0.05 * cb.vector(1) + 0.02 * cb.vector(4)
        nu = 1.6
        base = gk.solve_slave(pendulum5, x1, nu, 8)
        for g in (sym.rotation(5, 2), sym.time_shift(5, 3),
                  sym.compose(sym.reflection(5), sym.time_reversal(5))):
            gx1 = sym.act_coeffs(g, base.coefficients)[1]
            moved = gk.solve_slave(pendulum5, gx1, nu, 8)
            expect = sym.act_coeffs(g, base.coefficients)
            assert gk.loop_norm(moved.coefficients - expect) <= 1e-10

    def test_restricted_solve_stays_in_fixed_space(self, pendulum5):
        H = sym.build_isotropy("S", 5, 1)
        basis = sym.fixed_space(H, 8)
        kd_dir = sym.first_mode_pair_direction(H, 1)
        loop = gk.solve_slave(pendulum5, 0.05 * kd_dir, 1.6, 8, basis=basis)
        assert sym.symmetry_residual(loop.coefficients, H) <= 1e-12

    def test_divergence_reported(self):
        # exactly resonant slave block (2 nu = nu_2) with a quadratically
        # forced second harmonic has no nearby solution
        m = rw.build_model(4, rw.zero(), rw.fpu(1.0))
        cb = circulant_basis(4)
        with pytest.raises(gk.SlaveDivergence):
            gk.solve_slave(m, 0.05 * cb.vector(1), 1.0, 8, max_iter=12)


class TestTruncationChoice:
    def test_linear_model_needs_minimum(self):
        m = rw.build_model(5, rw.polynomial([0.0, 0.0, 0.5]), rw.harmonic())
        assert gk.choose_truncation(m, (1.0, 1.4), 1e-8) == 4

    def test_pendulum_moderate_amplitude(self, pendulum5):
        l0 = gk.choose_truncation(pendulum5, (1.5, 1.6), 1e-8, probe_amplitude=0.2)
        assert 4 <= l0 <= 32
        loop = gk.solve_slave(
            pendulum5, 0.2 * circulant_basis(5).vector(1) / math.sqrt(2), 1.55, l0
        )
        assert gk.tail_fraction(loop) < 1e-8

    def test_zero_tolerance_rejected(self, pendulum5):
        with pytest.raises(ValueError):
            gk.choose_truncation(pendulum5, (1.0, 1.5), 0.0)


class TestVariationalStructure:
    def test_residual_is_action_gradient(self, pendulum5, rng):
        """<F(x), y> equals the directional derivative of the action."""
        loop = random_loop_state(5, 6, 1.3, rng, scale=0.1)
        F = gk.residual_rvec(pendulum5, loop)
        u = gk.loop_to_rvec(loop.coefficients)
        h = 1e-6
        for _ in range(5):
            d = rng.normal(size=u.size)
            d /= np.linalg.norm(d)
            ap = gk.action_value(
                pendulum5, loop.replace(coefficients=gk.rvec_to_coeffs(u + h * d, 5, 6))
            )
            am = gk.action_value(
                pendulum5, loop.replace(coefficients=gk.rvec_to_coeffs(u - h * d, 5, 6))
            )
            fd = (ap - am) / (2 * h)
            pairing = 2 * math.pi * float(F @ d)
            assert abs(fd - pairing) <= 1e-6 * (1.0 + abs(fd))

    def test_action_vanishes_at_equilibrium(self, pendulum5):
        assert gk.action_value(pendulum5, gk.LoopState.zero(5, 4, 1.3)) == 0.0

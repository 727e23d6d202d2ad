"""Separable standing waves of the fully homogeneous chain.

With no on-site force and the even power-law coupling W(q) = (2/5)|q|^{5/2},
waves q_j(t) = a_j q(t) split into a scalar oscillator for q(t) and a
spatial recursion for the profile a_j. The recursion is an area-preserving
planar map in (profile value, bond momentum) coordinates; its bounded
orbits are spatially periodic or quasiperiodic standing-wave profiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

__all__ = [
    "PlanarMapState",
    "ScalarOrbit",
    "planar_map",
    "map_jacobian_det",
    "orbit_scan",
    "scalar_period",
    "sample_scalar_orbit",
]

ESCAPE_RADIUS = 1e8


@dataclass(frozen=True)
class PlanarMapState:
    a: float
    b: float


def _g(b: float) -> float:
    """b |b|^{-1/3}, extended by 0 at b = 0."""
    return math.copysign(abs(b) ** (2.0 / 3.0), b) if b != 0.0 else 0.0


def planar_map(state: PlanarMapState | tuple[float, float]) -> PlanarMapState:
    """One step of the profile map (a, b) -> (a + b|b|^{-1/3}, b - a')."""
    a, b = (state.a, state.b) if isinstance(state, PlanarMapState) else state
    a_next = a + _g(b)
    return PlanarMapState(a_next, b - a_next)


def map_jacobian_det(state: PlanarMapState | tuple[float, float]) -> float:
    """Determinant of the analytic map Jacobian; identically 1 away from b = 0."""
    a, b = (state.a, state.b) if isinstance(state, PlanarMapState) else state
    if b == 0.0:
        raise ValueError("Jacobian is singular at b = 0 (|b|^{-1/3} derivative blows up)")
    c = (2.0 / 3.0) * abs(b) ** (-1.0 / 3.0)
    # rows: d(a')/d(a,b) = (1, c); d(b')/d(a,b) = (-1, 1 - c)
    return 1.0 * (1.0 - c) - c * (-1.0)


def orbit_iterates(seed: tuple[float, float], iterations: int) -> np.ndarray:
    """Iterates of the planar map from a seed, shape (iterations + 1, 2)."""
    out = np.empty((iterations + 1, 2))
    s = PlanarMapState(*seed)
    out[0] = (s.a, s.b)
    for i in range(1, iterations + 1):
        s = planar_map(s)
        out[i] = (s.a, s.b)
        if not (abs(s.a) < ESCAPE_RADIUS and abs(s.b) < ESCAPE_RADIUS):
            out = out[: i + 1]
            break
    return out


def orbit_scan(
    radii, iterations: int, n_angles: int = 8
) -> list[tuple[float, float, float, bool]]:
    """Max orbit radius for seeds on a polar grid.

    Returns rows (seed_a, seed_b, max_radius, escaped); escape means an
    iterate left the overflow guard radius before the budget ran out.
    """
    if iterations > 10**7:
        raise ValueError("iteration budget capped at 1e7")
    rows = []
    for r in np.atleast_1d(np.asarray(radii, dtype=float)):
        for theta in 2.0 * np.pi * np.arange(n_angles) / n_angles:
            seed = (r * math.cos(theta), r * math.sin(theta))
            orb = orbit_iterates(seed, iterations)
            rad = np.hypot(orb[:, 0], orb[:, 1]).max()
            escaped = orb.shape[0] < iterations + 1
            rows.append((seed[0], seed[1], float(rad), escaped))
    return rows


def _w_even(q: np.ndarray) -> np.ndarray:
    """Full even potential (2/5)|q|^{5/2} used by the separable ansatz."""
    return 0.4 * np.abs(q) ** 2.5


def _w_even_force(q: np.ndarray) -> np.ndarray:
    return np.sign(q) * np.abs(q) ** 1.5


def scalar_period(E: float) -> float:
    """Period of -q'' = W'(q) at energy E for the even 5/2-power potential.

    T(E) = 4 int_0^{qmax} dq / sqrt(2(E - W(q))) with qmax = (5E/2)^{2/5};
    the turning-point singularity is removed by substituting
    q = qmax (1 - v^2), leaving a smooth integrand for adaptive
    quadrature. Homogeneity gives the scaling T ~ E^{-1/10}.
    """
    if E <= 0:
        raise ValueError("energy must be positive")
    qmax = (2.5 * E) ** 0.4

    def integrand(v: float) -> float:
        # q = qmax (1 - v^2): the turning-point square root becomes regular
        u = 1.0 - v * v
        val = 1.0 - u**2.5
        return 2.0 * v / math.sqrt(val) if val > 0 else 2.0 / math.sqrt(2.5)

    scale = 4.0 * qmax / math.sqrt(2.0 * E)
    quadval, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200)
    return scale * quadval


@dataclass(frozen=True)
class ScalarOrbit:
    energy: float
    period: float  # from direct integration
    times: np.ndarray
    q: np.ndarray
    qdot: np.ndarray

    @property
    def energy_series(self) -> np.ndarray:
        return 0.5 * self.qdot**2 + _w_even(self.q)


def sample_scalar_orbit(E: float, num: int = 400, tol: float = 1e-12) -> ScalarOrbit:
    """Integrate one period of the scalar oscillator from the turning point.

    The period is measured by the return of qdot to zero at the opposite
    turning point (half period, doubled).
    """
    if E <= 0:
        raise ValueError("energy must be positive")
    qmax = (2.5 * E) ** 0.4
    t_guess = scalar_period(E)

    def rhs(t, y):
        return [y[1], -_w_even_force(np.array(y[0]))]

    def at_turn(t, y):
        return y[1]

    at_turn.terminal = False
    at_turn.direction = 1.0  # qdot crosses zero from below at the far turning point

    sol = integrate.solve_ivp(
        rhs, (0.0, 1.25 * t_guess), [qmax, 0.0], rtol=tol, atol=tol * 1e-2,
        events=at_turn, dense_output=True, max_step=t_guess / 50.0,
    )
    if len(sol.t_events[0]) == 0:
        raise RuntimeError("no turning point found within the expected period")
    half = float(sol.t_events[0][0])
    period = 2.0 * half
    times = np.linspace(0.0, period, num)
    states = sol.sol(np.minimum(times, sol.t[-1]))
    return ScalarOrbit(E, period, times, states[0], states[1])

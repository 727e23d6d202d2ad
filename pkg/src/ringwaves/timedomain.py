"""Validation of computed loops by direct integration of -q'' = grad V(q).

An adaptive high-order integrator provides the tight local error needed
to certify periodicity of continued orbits; a fixed-step leapfrog is
available for long-run energy studies where symplectic structure
matters more than local accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .cradle import energy
from .galerkin import LoopState, residual
from .lattice import LatticeModel, grad_V

__all__ = [
    "TrajectorySample",
    "PeriodicityReport",
    "integrate_flow",
    "integrate_leapfrog",
    "verify_periodicity",
]

DEFAULT_TOL = 1e-10
RETURN_DISTANCE_TOL = 1e-6
ENERGY_DRIFT_TOL = 1e-8


@dataclass(frozen=True)
class TrajectorySample:
    times: np.ndarray
    q: np.ndarray  # shape (T, n)
    p: np.ndarray
    energy: np.ndarray

    @property
    def energy_drift(self) -> float:
        """Max relative energy deviation along the trajectory."""
        e0 = self.energy[0]
        scale = max(abs(e0), 1.0)
        return float(np.max(np.abs(self.energy - e0)) / scale)


def integrate_flow(
    model: LatticeModel,
    q0: np.ndarray,
    p0: np.ndarray,
    duration: float,
    tol: float = DEFAULT_TOL,
    num: int = 200,
) -> TrajectorySample:
    """Integrate the second-order flow with dense output at ``num`` times."""
    n = model.n
    q0 = np.asarray(q0, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    if not (np.all(np.isfinite(q0)) and np.all(np.isfinite(p0))):
        raise ValueError("non-finite initial data")

    def rhs(t, y):
        return np.concatenate([y[n:], -grad_V(model, y[:n])])

    times = np.linspace(0.0, duration, num)
    sol = integrate.solve_ivp(
        rhs, (0.0, duration), np.concatenate([q0, p0]),
        method="DOP853", rtol=tol, atol=tol * 1e-2, t_eval=times,
    )
    if not sol.success:
        raise RuntimeError(f"integration failed: {sol.message}")
    q = sol.y[:n].T
    p = sol.y[n:].T
    e = np.array([energy(model, qq, pp) for qq, pp in zip(q, p)])
    return TrajectorySample(sol.t, q, p, e)


def integrate_leapfrog(
    model: LatticeModel,
    q0: np.ndarray,
    p0: np.ndarray,
    duration: float,
    dt: float,
) -> TrajectorySample:
    """Fixed-step velocity-Verlet integration (symplectic, 2nd order)."""
    steps = int(np.ceil(duration / dt))
    q = np.asarray(q0, dtype=float).copy()
    p = np.asarray(p0, dtype=float).copy()
    times = np.empty(steps + 1)
    qs = np.empty((steps + 1, model.n))
    ps = np.empty((steps + 1, model.n))
    es = np.empty(steps + 1)
    times[0], qs[0], ps[0], es[0] = 0.0, q, p, energy(model, q, p)
    acc = -grad_V(model, q)
    for i in range(1, steps + 1):
        p_half = p + 0.5 * dt * acc
        q = q + dt * p_half
        acc = -grad_V(model, q)
        p = p_half + 0.5 * dt * acc
        times[i], qs[i], ps[i], es[i] = i * dt, q, p, energy(model, q, p)
    return TrajectorySample(times, qs, ps, es)


@dataclass(frozen=True)
class PeriodicityReport:
    loop_residual: float
    return_distance: float
    max_deviation: float  # against the trigonometric interpolant
    energy_drift: float
    period: float
    passed: bool


def verify_periodicity(
    model: LatticeModel,
    loop: LoopState,
    tol: float = DEFAULT_TOL,
    residual_tol: float = 1e-9,
    num: int = 128,
) -> PeriodicityReport:
    """Integrate one period from the loop's initial data and compare.

    The report passes when the loop is a converged solution (residual
    below ``residual_tol``), the phase-space return distance stays below
    1e-6, and the relative energy drift below 1e-8. Loops that are not
    solutions still integrate, serving as flagged negative controls.
    """
    rep = residual(model, loop)
    q0, p0 = loop.phase_point(model.a)
    period = 2.0 * np.pi / loop.nu
    traj = integrate_flow(model, q0, p0, period, tol=tol, num=num)
    q_end, p_end = traj.q[-1], traj.p[-1]
    ret = float(np.sqrt(np.sum((q_end - q0) ** 2) + np.sum((p_end - p0) ** 2)))
    dev = 0.0
    for t, qrow in zip(traj.times, traj.q):
        ref = model.a + loop.value_at(loop.nu * t)
        dev = max(dev, float(np.max(np.abs(qrow - ref))))
    ok = (
        rep.total <= residual_tol
        and ret <= RETURN_DISTANCE_TOL
        and traj.energy_drift <= ENERGY_DRIFT_TOL
    )
    return PeriodicityReport(rep.total, ret, dev, traj.energy_drift, period, ok)

"""Standing waves of the totally degenerate ring (W''(0) = 0).

When the coupling force has no linear part, every linear mode shares
the on-site frequency and branch continuation from simple eigenvalues
is unavailable. Instead, the first-harmonic amplitudes inside the fixed
space of a standing-wave group carry a reduced potential whose critical
points at fixed frequency are periodic solutions. This module builds
that potential by solving the dependent harmonics, searches its
critical points from seeded multistarts, polishes them into full
residual zeros, and counts distinct solution orbits.

The one-sided contact force is not an even function, so the standing
groups here use the parity-corrected reflection x_j -> -x_{-j}; the
plain permutation reflection does not commute with the flow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import galerkin as gk
from . import symmetry as sym
from .continuation import generator_commutes
from .lattice import LatticeModel, potential_V
from .spectrum import dispersion

__all__ = [
    "ReducedPotential",
    "CriticalPoint",
    "CriticalPointSet",
    "CradleSearchOptions",
    "DegenerateModelError",
    "standing_group",
    "reduced_potential",
    "critical_points",
    "energy",
    "polish_full",
]

GRADIENT_TOL = 1e-8
POLISH_TOL = 1e-9
DEDUP_DISTANCE = 1e-6
TRIVIAL_NORM = 1e-4


class DegenerateModelError(RuntimeError):
    """The model is not totally degenerate (or has U''(a) <= 0)."""


def _require_degenerate(model: LatticeModel) -> float:
    table = dispersion(model)
    if not table.all_equal:
        raise DegenerateModelError("spectrum is not totally degenerate (W''(0) != 0)")
    if model.u2_at_a <= 0:
        raise DegenerateModelError("degenerate search needs U''(a) > 0")
    return math.sqrt(model.u2_at_a)


def standing_group(model: LatticeModel, label: str) -> sym.IsotropyGroup:
    """The standing-wave group (S or St) whose parity fits the model."""
    if label not in ("S", "St"):
        raise ValueError("standing groups are labeled 'S' or 'St'")
    for twisted in (False, True):
        H = sym.build_isotropy(label, model.n, None, twisted=twisted)
        if all(generator_commutes(model, g) for g in H.generators):
            return H
    raise sym.SymmetryError(f"no reflection parity of {label} commutes with the model")


class ReducedPotential:
    """Reduced action on the first-harmonic block of Fix(H) at fixed nu.

    Coordinates ``u1`` live in the orthonormal first-harmonic block of
    the fixed space; the dependent harmonics are solved implicitly at
    every evaluation (warm-started from the previous call).
    """

    def __init__(
        self,
        model: LatticeModel,
        H: sym.IsotropyGroup,
        nu: float,
        l0: int = 32,
        slave_tol: float = 1e-11,
    ):
        self.model = model
        self.H = H
        self.nu = float(nu)
        self.l0 = l0
        self.slave_tol = slave_tol
        self.basis = sym.fixed_space(H, l0, zero_mean=model.zero_mean_mode)
        self.block1 = self.basis.blocks[1]
        self.dim = self.block1.shape[1]
        self._off = self.basis.blocks[0].shape[1]
        self._warm: gk.LoopState | None = None

    def first_harmonic(self, u1: np.ndarray) -> np.ndarray:
        """Complex first-harmonic coefficients for block coordinates u1."""
        v = self.block1 @ np.asarray(u1, dtype=float)
        n = self.model.n
        return (v[:n] + 1j * v[n:]) / math.sqrt(2.0)

    def solve(self, u1: np.ndarray) -> gk.LoopState:
        """Loop with the dependent harmonics solved at fixed u1."""
        x1 = self.first_harmonic(u1)
        loop = gk.solve_slave(
            self.model, x1, self.nu, self.l0, basis=self.basis,
            tol=self.slave_tol, start=self._warm,
        )
        self._warm = loop
        return loop

    def value_and_gradient(self, u1: np.ndarray) -> tuple[float, np.ndarray]:
        """Reduced action and its gradient in the block coordinates."""
        loop = self.solve(u1)
        value = gk.action_value(self.model, loop)
        F = gk.residual(self.model, loop).coefficients
        n = self.model.n
        f1 = np.concatenate([F[1].real, F[1].imag]) * math.sqrt(2.0)
        grad = 2.0 * math.pi * (self.block1.T @ f1)
        return value, grad

    def value(self, u1: np.ndarray) -> float:
        return self.value_and_gradient(u1)[0]

    def gradient(self, u1: np.ndarray) -> np.ndarray:
        return self.value_and_gradient(u1)[1]

    def hessian(self, u1: np.ndarray) -> np.ndarray:
        """Exact reduced Hessian via the Schur complement on the slave blocks."""
        loop = self.solve(u1)
        B = gk.basis_matrix(self.basis)
        J = B.T @ (gk.jacobian_dense(self.model, loop) @ B)
        i1 = np.zeros(self.basis.dim, dtype=bool)
        i1[self._off : self._off + self.dim] = True
        J11 = J[np.ix_(i1, i1)]
        J1s = J[np.ix_(i1, ~i1)]
        Js1 = J[np.ix_(~i1, i1)]
        Jss = J[np.ix_(~i1, ~i1)]
        return 2.0 * math.pi * (J11 - J1s @ np.linalg.solve(Jss, Js1))

    def newton_refine(
        self, u0: np.ndarray, tol: float = GRADIENT_TOL, max_iter: int = 40
    ) -> np.ndarray | None:
        """Damped Newton on the reduced gradient; None when it fails."""
        u = np.asarray(u0, dtype=float)
        try:
            g = self.gradient(u)
        except gk.SlaveDivergence:
            return None
        for _ in range(max_iter):
            gn = np.linalg.norm(g)
            if gn <= tol * 0.1:
                return u
            try:
                H = self.hessian(u)
                step = np.linalg.solve(H, -g)
            except (np.linalg.LinAlgError, gk.SlaveDivergence):
                return None
            if not np.all(np.isfinite(step)):
                return None
            scale = 1.0
            for _ in range(10):
                try:
                    g_new = self.gradient(u + scale * step)
                except gk.SlaveDivergence:
                    scale *= 0.5
                    continue
                if np.linalg.norm(g_new) < gn:
                    u = u + scale * step
                    g = g_new
                    break
                scale *= 0.5
            else:
                return None
        return u if np.linalg.norm(g) <= tol else None

    def quadratic_coefficient(self, direction: np.ndarray, scale: float = 1e-4) -> float:
        """Quadratic coefficient of the reduced action along a direction.

        Uses evaluations at first-harmonic magnitudes ``scale`` and
        ``scale/4``; the combination 32 Phi(s/4) - Phi(s) cancels the
        5/2-homogeneous contact term exactly, leaving the quadratic
        coefficient up to higher-order corrections. Returned value is
        normalized per unit |x1|^2.
        """
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        # block coordinates have twice the squared magnitude of x1
        s_u = scale * math.sqrt(2.0)
        v1 = self.value(s_u * d)
        v2 = self.value(0.25 * s_u * d)
        return (32.0 * v2 - v1) / scale**2


def reduced_potential(
    model: LatticeModel,
    H: sym.IsotropyGroup,
    u1: np.ndarray,
    nu: float,
    l0: int = 32,
) -> tuple[float, np.ndarray]:
    """One-shot evaluation of the reduced action and gradient."""
    _require_degenerate(model)
    return ReducedPotential(model, H, nu, l0).value_and_gradient(u1)


@dataclass(frozen=True)
class CriticalPoint:
    u1: np.ndarray
    nu: float
    value: float
    gradient_norm: float
    loop: gk.LoopState  # polished full solution in Fix(H)
    full_residual: float
    orbit_id: int


@dataclass(frozen=True)
class CriticalPointSet:
    group_label: str
    nu: float
    side: str  # "below" or "above" the degenerate frequency
    points: tuple[CriticalPoint, ...]

    @property
    def count(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class CradleSearchOptions:
    seed: int = 0
    starts_per_dim: int = 8
    radius_range: tuple[float, float] = (1e-3, 0.5)
    l0: int = 16  # search cutoff; the polish re-solves at l0_polish
    l0_polish: int = 48
    min_side_gap: float = 1e-3
    max_side_gap: float = 1e-1


def polish_full(
    pot: ReducedPotential, u1: np.ndarray, tol: float = POLISH_TOL, max_iter: int = 30
) -> gk.LoopState | None:
    """Newton on the full fixed-space system at fixed nu from a critical point."""
    model, basis = pot.model, pot.basis
    B = gk.basis_matrix(basis)
    try:
        loop = pot.solve(u1)
    except gk.SlaveDivergence:
        return None
    u = basis.from_coeffs(loop.coefficients)
    for _ in range(max_iter):
        loop = gk.LoopState(model.n, basis.l0, pot.nu, basis.to_coeffs(u))
        r = B.T @ gk.residual_rvec(model, loop)
        if np.linalg.norm(r) <= tol * 0.1:
            return loop
        J = B.T @ (gk.jacobian_dense(model, loop) @ B)
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(step)):
            return None
        u = u + step
    loop = gk.LoopState(model.n, basis.l0, pot.nu, basis.to_coeffs(u))
    if gk.residual(model, loop).total <= tol:
        return loop
    return None


def _dedup_elements(n: int) -> list[sym.GroupElement]:
    """Discrete candidates for identifying points on the same group orbit."""
    out = []
    for p in range(n):
        for fl in (False, True):
            for units in range(0, 2 * n, 1):
                for rev in (False, True):
                    for neg in (False, True):
                        out.append(sym.GroupElement(n, fl, p, rev, units, neg))
    return out


def critical_points(
    model: LatticeModel,
    H: sym.IsotropyGroup,
    nu: float,
    opts: CradleSearchOptions | None = None,
) -> CriticalPointSet:
    """Find distinct nontrivial critical points of the reduced action.

    Multistart Newton (scipy hybr on the gradient) from deterministic
    seeded starts; converged points are polished on the full system and
    deduplicated modulo the discrete symmetry orbit and sign flip.
    """
    opts = opts or CradleSearchOptions()
    omega = _require_degenerate(model)
    gap = abs(nu - omega)
    if not (opts.min_side_gap <= gap <= opts.max_side_gap):
        raise ValueError(
            f"|nu - omega| = {gap:.3e} outside [{opts.min_side_gap}, {opts.max_side_gap}]"
        )
    pot = ReducedPotential(model, H, nu, l0=opts.l0)
    pot_fine = ReducedPotential(model, H, nu, l0=opts.l0_polish)
    d = pot.dim
    rng = np.random.default_rng(opts.seed)
    n_starts = opts.starts_per_dim * d
    radii = np.geomspace(opts.radius_range[0], opts.radius_range[1], n_starts)

    found: list[tuple[np.ndarray, float, float, gk.LoopState, float]] = []
    for i in range(n_starts):
        direction = rng.normal(size=d)
        direction /= np.linalg.norm(direction)
        u_star = pot.newton_refine(radii[i] * direction)
        if u_star is None or np.linalg.norm(u_star) < TRIVIAL_NORM:
            continue
        # re-solve and polish at the fine truncation
        u_star = pot_fine.newton_refine(u_star)
        if u_star is None or np.linalg.norm(u_star) < TRIVIAL_NORM:
            continue
        try:
            val, grad = pot_fine.value_and_gradient(u_star)
        except gk.SlaveDivergence:
            continue
        gnorm = float(np.linalg.norm(grad))
        if gnorm > GRADIENT_TOL:
            continue
        loop = polish_full(pot_fine, u_star)
        if loop is None:
            continue
        full_res = gk.residual(model, loop).total
        if full_res > POLISH_TOL:
            continue
        found.append((u_star, val, gnorm, loop, full_res))

    # deduplicate modulo the discrete symmetry candidates
    cands = _dedup_elements(model.n)
    kept: list[tuple[np.ndarray, float, float, gk.LoopState, float]] = []
    for item in found:
        X = item[3].coefficients
        dup = False
        for old in kept:
            Y = old[3].coefficients
            if abs(gk.loop_norm(X) - gk.loop_norm(Y)) > 10 * DEDUP_DISTANCE:
                continue
            for g in cands:
                if sym.coeff_norm(sym.act_coeffs(g, X) - Y) <= DEDUP_DISTANCE:
                    dup = True
                    break
            if dup:
                break
        if not dup:
            kept.append(item)

    pts = tuple(
        CriticalPoint(u, nu, val, gn, loop, res, i)
        for i, (u, val, gn, loop, res) in enumerate(kept)
    )
    side = "below" if nu < omega else "above"
    return CriticalPointSet(H.label, nu, side, pts)


def energy(model: LatticeModel, q: np.ndarray, p: np.ndarray) -> float:
    """Hamiltonian |p|^2 / 2 + V(q)."""
    return float(0.5 * np.sum(np.asarray(p, float) ** 2) + potential_V(model, q))

"""Detection and continuation of symmetric periodic-wave branches.

Each branch lives in the fixed-point subspace of its isotropy group, so
the Newton systems carry no phase conditions: spatial and temporal
phases are pinned by the symmetry. Branches start from the kernel
direction of the linearization at the bifurcation frequency and are
followed by pseudo-arclength steps in (reduced coordinates, frequency).

For models whose coupling potential is not an even function, the plain
site reflection does not commute with the flow and the parity-corrected
("twisted") isotropy groups are selected automatically; an equivariance
probe validates the choice against the actual gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import galerkin as gk
from . import symmetry as sym
from .lattice import LatticeModel, grad_V
from .spectrum import dispersion, mode_frequency_squared, non_resonance_check

__all__ = [
    "ContinuationOptions",
    "BranchPoint",
    "Branch",
    "InventoryEntry",
    "KernelDirection",
    "DegenerateSpectrumError",
    "ResonantModeError",
    "InitialCorrectorError",
    "bifurcation_inventory",
    "kernel_direction",
    "continue_branch",
    "frequency_scan",
    "onset_extrapolation",
    "select_twist",
    "generator_commutes",
]

FAMILIES = ("T", "S", "St")

RESIDUAL_TOL = 1e-9
SYMMETRY_TOL = 1e-10
EQUIVARIANCE_PROBE_TOL = 1e-10
RECONNECT_NU_WINDOW = 1e-2


class DegenerateSpectrumError(RuntimeError):
    """All mode frequencies coincide; use the degenerate-case machinery."""


class ResonantModeError(RuntimeError):
    """The requested mode fails the non-resonance condition."""


class InitialCorrectorError(RuntimeError):
    """The first Newton solve at minimal amplitude did not converge."""


@dataclass(frozen=True)
class ContinuationOptions:
    r_min: float = 1e-4
    max_amplitude: float = 0.25
    nu_min: float = 1e-3
    step_init: float = 0.02
    step_min: float = 1e-5
    step_max: float = 0.1
    step_grow: float = 1.3
    target_newton: int = 3
    max_newton: int = 8
    max_halvings: int = 8
    step_budget: int = 500
    l0: int | None = None
    l0_max: int = 128
    tail_tol: float = 1e-8
    newton_tol: float = 1e-11
    twisted: bool | None = None  # None selects by equivariance probe


@dataclass(frozen=True)
class BranchPoint:
    r: float
    nu: float
    u: np.ndarray
    loop: gk.LoopState
    residual: float
    sym_residual: float
    tail_fraction: float
    sobolev: float


@dataclass
class Branch:
    family: str
    k: int
    n: int
    onset_nu: float
    twisted: bool
    points: list[BranchPoint] = field(default_factory=list)
    termination: str = "running"
    reconnected_nu: float | None = None
    l0_final: int = 0


@dataclass(frozen=True)
class InventoryEntry:
    k: int
    nu: float
    families: tuple[str, ...]
    status: str  # "ok" | "non_bifurcating" | "resonant"
    witness: tuple | None = None  # (l, j, nu_j, l*nu_k) for resonant modes

    @property
    def count(self) -> int:
        return len(self.families)


# ---------------------------------------------------------------------------
# parity selection


def generator_commutes(model: LatticeModel, g: sym.GroupElement, trials: int = 5) -> bool:
    """Probe whether the spatial part of g commutes with grad V."""
    rng = np.random.default_rng(12345)
    idx = g.site_map()
    sgn = -1.0 if g.neg else 1.0
    for _ in range(trials):
        x = 0.3 * rng.normal(size=model.n)
        if model.zero_mean_mode:
            x -= x.mean()
        lhs = grad_V(model, model.a + sgn * x[idx])
        rhs = sgn * grad_V(model, model.a + x)[idx]
        if np.max(np.abs(lhs - rhs)) > EQUIVARIANCE_PROBE_TOL:
            return False
    return True


def select_twist(model: LatticeModel, label: str, k: int | None) -> bool:
    """Pick the reflection parity whose group commutes with the flow.

    The plain action is preferred when both work (even coupling); the
    twisted variant requires the on-site potential to be even about the
    equilibrium, which the probe verifies implicitly.
    """
    for twisted in (False, True):
        H = sym.build_isotropy(label, model.n, k, twisted=twisted)
        if all(generator_commutes(model, g) for g in H.generators):
            return twisted
    raise sym.SymmetryError(
        f"neither reflection parity of {label} commutes with this model's gradient"
    )


# ---------------------------------------------------------------------------
# inventory


def bifurcation_inventory(model: LatticeModel, l_max: int = 100) -> list[InventoryEntry]:
    """Modes and branch families predicted to bifurcate from the equilibrium.

    Non-resonant modes with nu_k > 0 contribute three families for
    k in [1, n/2) and the traveling family alone for k in {n/2, n}.
    """
    table = dispersion(model)
    if table.all_equal:
        raise DegenerateSpectrumError(
            "all mode frequencies coincide (W''(0) = 0); use the degenerate-case search"
        )
    _check_hessian_invertible(model)
    entries: list[InventoryEntry] = []
    n = model.n
    ks = [k for k in range(1, n // 2 + 1)] + ([] if model.zero_mean_mode else [n])
    for k in ks:
        e = table.entry(k)
        if not e.bifurcating:
            entries.append(InventoryEntry(k, e.nu, (), "non_bifurcating"))
            continue
        rep = non_resonance_check(model, k, l_max)
        if not rep.non_resonant:
            entries.append(InventoryEntry(k, e.nu, (), "resonant", rep.resonant_pairs[0]))
            continue
        fams = ("T",) if (k == n or 2 * k == n) else ("T", "S", "St")
        entries.append(InventoryEntry(k, e.nu, fams, "ok"))
    return entries


def _check_hessian_invertible(model: LatticeModel) -> None:
    eigs = [
        model.u2_at_a + (2.0 * math.sin(math.pi * k / model.n)) ** 2 * model.w2_at_0
        for k in range(1, model.n + 1)
    ]
    if model.zero_mean_mode:
        eigs = eigs[:-1]  # the constant mode is projected out
    if any(abs(e) < 1e-12 for e in eigs):
        raise ValueError("Hessian at the equilibrium is singular; no branch inventory")


# ---------------------------------------------------------------------------
# kernel directions


@dataclass(frozen=True)
class KernelDirection:
    """Unit first-harmonic loop spanning the kernel block of Fix(H)."""

    family: str
    k: int
    group: sym.IsotropyGroup
    nu_onset: float
    loop: gk.LoopState  # unit loop norm, pure first harmonic

    def profile(self, t: np.ndarray) -> np.ndarray:
        """Sampled template, shape (len(t), n)."""
        ph = np.exp(1j * np.outer(np.asarray(t, float), [0.0, 1.0]))
        return 2.0 * (ph @ self.loop.coefficients).real


def kernel_direction(
    model: LatticeModel, k: int, family: str, twisted: bool | None = None
) -> KernelDirection:
    """Construct the bifurcation kernel template for (k, family)."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    nsq = mode_frequency_squared(model, k)
    if nsq <= 0:
        raise ValueError(f"mode {k} does not bifurcate (nu^2 = {nsq:.3e})")
    if twisted is None:
        twisted = select_twist(model, family, k)
    H = sym.build_isotropy(family, model.n, k, twisted=twisted)
    x1 = sym.first_mode_pair_direction(H, k)
    # deterministic sign: make the mode-k coefficient lean positive real
    j = np.arange(model.n)
    ek = np.exp(2j * np.pi * ((j * k) % model.n) / model.n) / math.sqrt(model.n)
    z = np.vdot(ek, x1)
    if z.real < -1e-12 or (abs(z.real) <= 1e-12 and z.imag < 0):
        x1 = -x1
    X = np.zeros((2, model.n), dtype=complex)
    X[1] = x1
    loop = gk.LoopState(model.n, 1, math.sqrt(nsq), X)
    return KernelDirection(family, k, H, math.sqrt(nsq), loop)


# ---------------------------------------------------------------------------
# reduced Newton machinery


class _Reduced:
    """Residual and Jacobian restricted to a fixed-space basis."""

    def __init__(self, model: LatticeModel, basis: sym.FixedSpaceBasis):
        self.model = model
        self.basis = basis
        self.B = gk.basis_matrix(basis)
        self.n = model.n
        self.l0 = basis.l0

    def loop(self, u: np.ndarray, nu: float) -> gk.LoopState:
        return gk.LoopState(self.n, self.l0, nu, self.basis.to_coeffs(u))

    def residual(self, u: np.ndarray, nu: float) -> np.ndarray:
        return self.B.T @ gk.residual_rvec(self.model, self.loop(u, nu))

    def jacobian(self, u: np.ndarray, nu: float) -> tuple[np.ndarray, np.ndarray]:
        loop = self.loop(u, nu)
        J = gk.jacobian_dense(self.model, loop)
        Ju = self.B.T @ (J @ self.B)
        Jnu = self.B.T @ gk.nu_derivative_rvec(loop)
        return Ju, Jnu


def _newton_bordered(
    red: _Reduced,
    u: np.ndarray,
    nu: float,
    row: np.ndarray,
    rhs_row: float,
    tol: float,
    max_iter: int,
) -> tuple[np.ndarray, float, bool, int]:
    """Newton on [reduced residual; row . (u, nu) - rhs_row] = 0."""
    d = u.size
    for it in range(max_iter):
        G = red.residual(u, nu)
        c = float(row[:d] @ u + row[d] * nu - rhs_row)
        if np.linalg.norm(G) <= tol and abs(c) <= tol * 10:
            return u, nu, True, it
        Ju, Jnu = red.jacobian(u, nu)
        A = np.zeros((d + 1, d + 1))
        A[:d, :d] = Ju
        A[:d, d] = Jnu
        A[d, :] = row
        try:
            delta = np.linalg.solve(A, -np.concatenate([G, [c]]))
        except np.linalg.LinAlgError:
            return u, nu, False, it
        u = u + delta[:d]
        nu = float(nu + delta[d])
    G = red.residual(u, nu)
    c = float(row[:d] @ u + row[d] * nu - rhs_row)
    ok = np.linalg.norm(G) <= tol and abs(c) <= tol * 10
    return u, nu, ok, max_iter


def _amplitude_pinned_point(
    model: LatticeModel,
    kd: KernelDirection,
    basis: sym.FixedSpaceBasis,
    r: float,
    nu_seed: float,
    tol: float,
    max_iter: int = 25,
) -> tuple[np.ndarray, float, _Reduced]:
    """Solve for the branch point with amplitude pinned to r (frequency free)."""
    red = _Reduced(model, basis)
    e_u = basis.from_coeffs(kd.loop.with_truncation(basis.l0).coefficients)
    e_u /= np.linalg.norm(e_u)
    try:
        seeded = gk.solve_slave(
            model, r * kd.loop.coefficients[1], nu_seed, basis.l0, basis=basis
        )
        u0 = basis.from_coeffs(seeded.coefficients)
    except gk.SlaveDivergence:
        u0 = r * e_u
    row = np.concatenate([e_u, [0.0]])
    u, nu, ok, _ = _newton_bordered(red, u0, nu_seed, row, r, tol, max_iter)
    if not ok:
        raise InitialCorrectorError(
            f"corrector at amplitude {r:.2e} failed; try a smaller r_min"
        )
    return u, nu, red


def _tangent(
    red: _Reduced, u: np.ndarray, nu: float, prev: np.ndarray
) -> np.ndarray:
    """Unit tangent of the branch, oriented along ``prev``."""
    d = u.size
    Ju, Jnu = red.jacobian(u, nu)
    A = np.zeros((d + 1, d + 1))
    A[:d, :d] = Ju
    A[:d, d] = Jnu
    A[d, :] = prev
    rhs = np.zeros(d + 1)
    rhs[d] = 1.0
    tau = np.linalg.solve(A, rhs)
    tau /= np.linalg.norm(tau)
    if tau @ prev < 0:
        tau = -tau
    return tau


def _diagnose(
    model: LatticeModel,
    H: sym.IsotropyGroup,
    loop: gk.LoopState,
    u: np.ndarray,
    e_u: np.ndarray,
) -> BranchPoint:
    rep = gk.residual(model, loop)
    return BranchPoint(
        r=float(u @ e_u),
        nu=loop.nu,
        u=u.copy(),
        loop=loop,
        residual=rep.total,
        sym_residual=sym.symmetry_residual(loop.coefficients, H),
        tail_fraction=rep.loop_tail_fraction,
        sobolev=gk.sobolev_norm(loop),
    )


def continue_branch(
    model: LatticeModel, k: int, family: str, opts: ContinuationOptions | None = None
) -> Branch:
    """Continue the (k, family) branch from its bifurcation frequency.

    The first corrector pins the amplitude at ``r_min``; subsequent
    points follow pseudo-arclength steps restricted to Fix(H). The
    returned branch records one diagnosed point per accepted step and
    the reason continuation stopped.
    """
    opts = opts or ContinuationOptions()
    rep = non_resonance_check(model, k)
    if rep.degenerate:
        raise DegenerateSpectrumError(
            "all mode frequencies coincide; use the degenerate-case search"
        )
    if not rep.non_resonant:
        l, j, nu_j, lnu = rep.resonant_pairs[0]
        raise ResonantModeError(
            f"mode {k} is resonant: {l} * nu_{k} = nu_{j} = {nu_j:.12g}"
        )
    kd = kernel_direction(model, k, family, twisted=opts.twisted)
    H = kd.group
    nu_k = kd.nu_onset
    table = dispersion(model)
    other_onsets = [e.nu for e in table.entries if e.bifurcating and e.k != k]

    l0 = opts.l0 or 8
    branch = Branch(family, k, model.n, nu_k, H.twisted)

    basis = sym.fixed_space(H, l0, zero_mean=model.zero_mean_mode)
    e_u = basis.from_coeffs(kd.loop.with_truncation(l0).coefficients)
    e_u /= np.linalg.norm(e_u)
    u, nu, red = _amplitude_pinned_point(model, kd, basis, opts.r_min, nu_k, opts.newton_tol)
    point = _diagnose(model, H, red.loop(u, nu), u, e_u)
    branch.points.append(point)

    prev = np.concatenate([e_u, [0.0]])
    tau = _tangent(red, u, nu, prev)
    ds = opts.step_init

    def grow_l0() -> bool:
        nonlocal l0, basis, e_u, red, u, nu, tau
        if l0 >= opts.l0_max:
            return False
        l0 = min(2 * l0, opts.l0_max)
        basis = sym.fixed_space(H, l0, zero_mean=model.zero_mean_mode)
        e_u = basis.from_coeffs(kd.loop.with_truncation(l0).coefficients)
        e_u /= np.linalg.norm(e_u)
        new_red = _Reduced(model, basis)
        u_new = basis.from_coeffs(red.loop(u, nu).with_truncation(l0).coefficients)
        row = np.concatenate([e_u, [0.0]])
        r_now = float(u_new @ e_u)
        u_new, nu_new, ok, _ = _newton_bordered(
            new_red, u_new, nu, row, r_now, opts.newton_tol, 25
        )
        if not ok:
            return False
        red, u, nu = new_red, u_new, nu_new
        return True

    # after a truncation change the tangent is re-derived from the amplitude
    # direction rather than padded across bases
    def retangent() -> None:
        nonlocal tau
        prev_dir = np.zeros(u.size + 1)
        sign = math.copysign(1.0, float(u @ e_u)) if abs(u @ e_u) > 0 else 1.0
        prev_dir[: u.size] = sign * e_u
        tau = _tangent(red, u, nu, prev_dir)

    steps = 0
    halvings = 0
    while True:
        if steps >= opts.step_budget:
            branch.termination = "step_budget"
            break
        r_now = float(u @ e_u)
        if abs(r_now) >= opts.max_amplitude:
            branch.termination = "max_amplitude"
            break
        if nu <= opts.nu_min:
            branch.termination = "min_frequency"
            break
        near = [nj for nj in other_onsets if abs(nu - nj) < RECONNECT_NU_WINDOW]
        if abs(r_now) < opts.r_min / 2.0 and near:
            branch.termination = "reconnected"
            branch.reconnected_nu = near[0]
            break

        w_pred = np.concatenate([u, [nu]]) + ds * tau
        u_try, nu_try, ok, iters = _newton_bordered(
            red, w_pred[:-1], float(w_pred[-1]), tau, float(tau @ w_pred),
            opts.newton_tol, opts.max_newton,
        )
        if not ok:
            ds *= 0.5
            halvings += 1
            if ds < opts.step_min or halvings > opts.max_halvings:
                branch.termination = "step_failure"
                break
            continue
        halvings = 0
        steps += 1

        loop = red.loop(u_try, nu_try)
        rep_full = gk.residual(model, loop)
        if rep_full.loop_tail_fraction > opts.tail_tol or rep_full.total > RESIDUAL_TOL:
            u, nu = u_try, nu_try
            if not grow_l0():
                branch.termination = "truncation"
                break
            retangent()
            loop = red.loop(u, nu)
            point = _diagnose(model, H, loop, u, e_u)
            branch.points.append(point)
            continue

        u, nu = u_try, nu_try
        point = _diagnose(model, H, loop, u, e_u)
        branch.points.append(point)
        tau = _tangent(red, u, nu, tau)
        if iters <= opts.target_newton:
            ds = min(ds * opts.step_grow, opts.step_max)

    branch.l0_final = l0
    return branch


# ---------------------------------------------------------------------------
# onset extrapolation and frequency scans


def onset_extrapolation(
    model: LatticeModel,
    k: int,
    family: str,
    r_values: tuple[float, ...] = (1e-4, 2e-4, 4e-4),
    l0: int = 8,
    twisted: bool | None = None,
) -> float:
    """Richardson extrapolation of the branch frequency to zero amplitude.

    Assumes nu(r) = nu* + c r^2 + O(r^4) and eliminates successive
    orders from solves at geometrically spaced amplitudes.
    """
    kd = kernel_direction(model, k, family, twisted=twisted)
    basis = sym.fixed_space(kd.group, l0, zero_mean=model.zero_mean_mode)
    nus = []
    for r in sorted(r_values):
        _, nu, _ = _amplitude_pinned_point(model, kd, basis, r, kd.nu_onset, 1e-12)
        nus.append(nu)
    vals = np.array(nus)
    while vals.size > 1:
        vals = (4.0 * vals[:-1] - vals[1:]) / 3.0
    return float(vals[0])


@dataclass(frozen=True)
class ScanResult:
    crossings: tuple[tuple[int, float], ...]
    degenerate: bool
    multiplicity: int = 1


def frequency_scan(
    model: LatticeModel,
    family: str,
    window: tuple[float, float],
    tol: float = 1e-10,
) -> ScanResult:
    """Locate zeros of the restricted first-harmonic blocks in a nu window.

    Each mode k valid for the family contributes lambda_k(nu) =
    nu^2 - nu_k^2, whose unique positive zero is found by bisection.
    A totally degenerate spectrum reports one crossing of multiplicity n.
    """
    lo, hi = window
    if not 0 < lo < hi:
        raise ValueError("window must satisfy 0 < lo < hi")
    table = dispersion(model)
    if table.all_equal:
        nu0 = table.entries[0].nu
        inside = lo < nu0 < hi
        return ScanResult(((0, nu0),) if inside else (), True, model.n)
    if family == "T":
        ks = [e.k for e in table.entries]
    else:
        ks = [e.k for e in table.entries if e.k < model.n / 2]
    out = []
    for k in ks:
        nsq = mode_frequency_squared(model, k)

        def lam(nu: float) -> float:
            return nu * nu - nsq

        if lam(lo) == 0.0 or lam(hi) == 0.0:
            raise ValueError("window endpoints must not be crossing points")
        if lam(lo) * lam(hi) > 0:
            continue
        a, b = lo, hi
        while b - a > tol:
            mid = 0.5 * (a + b)
            if lam(a) * lam(mid) <= 0:
                b = mid
            else:
                a = mid
        out.append((k, 0.5 * (a + b)))
    out.sort(key=lambda t: t[1])
    return ScanResult(tuple(out), False)

"""Harmonic-balance representation of periodic loops and their residual.

A loop x(t) in R^n, 2*pi-periodic in scaled time, is stored through its
one-sided Fourier coefficients X_l (complex, l = 0..l0, negative
harmonics implied by reality). The periodic residual is

    F_l = (l nu)^2 X_l - [grad V(a + x(.))]_l,

with the nonlinear term evaluated on N = 4 l0 + 2 equispaced samples so
that cubic force terms transform without aliasing into the retained
band. The matching real coordinate vector ("rvec") lists X_0 and then
sqrt(2) Re X_l, sqrt(2) Im X_l per harmonic; Euclidean norms of rvecs
equal loop L2 norms, and the dense Jacobian is symmetric apart from the
frequency diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .lattice import LatticeModel, grad_V, hessian_apply, potential_V
from .potentials import evaluate

__all__ = [
    "LoopState",
    "ResidualReport",
    "SlaveDivergence",
    "TruncationError",
    "sample_count",
    "residual",
    "residual_rvec",
    "jacobian_action",
    "jacobian_dense",
    "nu_derivative_rvec",
    "solve_slave",
    "choose_truncation",
    "action_value",
    "loop_norm",
    "loop_inner",
    "sobolev_norm",
    "tail_fraction",
    "first_mode_norm",
    "loop_to_rvec",
    "rvec_to_coeffs",
    "basis_matrix",
]


class SlaveDivergence(RuntimeError):
    """Newton iteration on the dependent harmonics failed to contract."""


class TruncationError(RuntimeError):
    """No admissible harmonic cutoff meets the tail tolerance."""


def sample_count(l0: int) -> int:
    """Time samples used for the nonlinear term (dealiased for cubics)."""
    return 4 * l0 + 2


@lru_cache(maxsize=64)
def _grids(l0: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(t, Z, S): sample times, synthesis phases exp(i l t), real basis S.

    S columns follow the rvec layout: [1, sqrt(2) cos(l t), -sqrt(2) sin(l t)];
    S^T S = N I, so analysis is S^T / N.
    """
    N = sample_count(l0)
    t = 2.0 * np.pi * np.arange(N) / N
    l = np.arange(l0 + 1)
    Z = np.exp(1j * np.outer(t, l))
    cols = [np.ones(N)]
    for ll in range(1, l0 + 1):
        cols.append(math.sqrt(2.0) * np.cos(ll * t))
        cols.append(-math.sqrt(2.0) * np.sin(ll * t))
    return t, Z, np.array(cols).T


@dataclass(frozen=True)
class LoopState:
    """Truncated Fourier loop with its frequency.

    ``coefficients[l, j]`` is the l-th harmonic of oscillator j; the
    loop period in original time is 2*pi/nu.
    """

    n: int
    l0: int
    nu: float
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        X = np.asarray(self.coefficients, dtype=complex)
        if X.shape != (self.l0 + 1, self.n):
            raise ValueError(f"coefficient shape {X.shape} != {(self.l0 + 1, self.n)}")
        object.__setattr__(self, "coefficients", X)

    def replace(self, **kw) -> "LoopState":
        return replace(self, **kw)

    @staticmethod
    def zero(n: int, l0: int, nu: float) -> "LoopState":
        return LoopState(n, l0, nu, np.zeros((l0 + 1, n), dtype=complex))

    def samples(self) -> np.ndarray:
        """Real time samples, shape (N, n)."""
        _, Z, _ = _grids(self.l0)
        return 2.0 * (Z @ self.coefficients).real - self.coefficients[0].real[None, :]

    def derivative_samples(self) -> np.ndarray:
        """Samples of dx/dt (scaled time)."""
        _, Z, _ = _grids(self.l0)
        il = 1j * np.arange(self.l0 + 1)
        return 2.0 * (Z @ (il[:, None] * self.coefficients)).real

    def value_at(self, t: float) -> np.ndarray:
        """Trigonometric interpolation of x at scaled time t."""
        phase = np.exp(1j * np.arange(self.l0 + 1) * t)
        return 2.0 * (phase @ self.coefficients).real - self.coefficients[0].real

    def derivative_at(self, t: float) -> np.ndarray:
        l = np.arange(self.l0 + 1)
        phase = 1j * l * np.exp(1j * l * t)
        return 2.0 * (phase @ self.coefficients).real

    def phase_point(self, a: float, t: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """Initial data (q, p) in original time for -q'' = grad V(q)."""
        return a + self.value_at(t), self.nu * self.derivative_at(t)

    def with_truncation(self, l0: int) -> "LoopState":
        """Zero-pad or drop harmonics to reach the requested cutoff."""
        X = np.zeros((l0 + 1, self.n), dtype=complex)
        keep = min(l0, self.l0)
        X[: keep + 1] = self.coefficients[: keep + 1]
        return LoopState(self.n, l0, self.nu, X)

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "l0": self.l0,
            "nu": self.nu,
            "re": self.coefficients.real.tolist(),
            "im": self.coefficients.imag.tolist(),
        }

    @staticmethod
    def from_json_dict(d: dict) -> "LoopState":
        X = np.array(d["re"], dtype=float) + 1j * np.array(d["im"], dtype=float)
        return LoopState(int(d["n"]), int(d["l0"]), float(d["nu"]), X)


# ---------------------------------------------------------------------------
# norms and layout conversions


def loop_norm(x) -> float:
    """L2 norm of the loop, sqrt((1/2pi) int |x|^2 dt)."""
    X = x if isinstance(x, np.ndarray) else x.coefficients
    return math.sqrt(float(np.sum(np.abs(X[0]) ** 2) + 2.0 * np.sum(np.abs(X[1:]) ** 2)))


def loop_inner(x, y) -> float:
    """Real L2 pairing of two loops (coefficient form)."""
    X = x if isinstance(x, np.ndarray) else x.coefficients
    Y = y if isinstance(y, np.ndarray) else y.coefficients
    v = np.sum(X[0] * np.conj(Y[0])) + 2.0 * np.sum(X[1:] * np.conj(Y[1:]))
    return float(v.real)


def sobolev_norm(x) -> float:
    """Norm with weight (1 + l^2) per harmonic."""
    X = x if isinstance(x, np.ndarray) else x.coefficients
    w = 1.0 + np.arange(X.shape[0]) ** 2
    tot = np.sum(w[0] * np.abs(X[0]) ** 2) + 2.0 * np.sum(w[1:, None] * np.abs(X[1:]) ** 2)
    return math.sqrt(float(tot))


def tail_fraction(x) -> float:
    """Fraction of the loop norm carried by the top two harmonics."""
    X = x if isinstance(x, np.ndarray) else x.coefficients
    total = loop_norm(X)
    if total == 0.0:
        return 0.0
    tail = math.sqrt(float(2.0 * np.sum(np.abs(X[-2:]) ** 2)))
    return tail / total


def first_mode_norm(x) -> float:
    """|x_1|: magnitude of the first-harmonic coefficient vector."""
    X = x if isinstance(x, np.ndarray) else x.coefficients
    return float(np.linalg.norm(X[1]))


def loop_to_rvec(X: np.ndarray) -> np.ndarray:
    """Flatten coefficients to the real layout [X_0, sqrt2 Re X_l, sqrt2 Im X_l]."""
    l0 = X.shape[0] - 1
    parts = [X[0].real]
    for l in range(1, l0 + 1):
        parts.append(math.sqrt(2.0) * X[l].real)
        parts.append(math.sqrt(2.0) * X[l].imag)
    return np.concatenate(parts)


def rvec_to_coeffs(u: np.ndarray, n: int, l0: int) -> np.ndarray:
    X = np.zeros((l0 + 1, n), dtype=complex)
    X[0] = u[:n]
    for l in range(1, l0 + 1):
        a = u[(2 * l - 1) * n : 2 * l * n]
        b = u[2 * l * n : (2 * l + 1) * n]
        X[l] = (a + 1j * b) / math.sqrt(2.0)
    return X


def basis_matrix(basis) -> np.ndarray:
    """Embed a FixedSpaceBasis into the global rvec layout, shape (D, d)."""
    n = basis.group.n
    l0 = basis.l0
    D = n * (2 * l0 + 1)
    B = np.zeros((D, basis.dim))
    pos = 0
    for l, blk in enumerate(basis.blocks):
        d = blk.shape[1]
        if l == 0:
            B[:n, pos : pos + d] = blk
        else:
            B[(2 * l - 1) * n : (2 * l + 1) * n, pos : pos + d] = blk
        pos += d
    return B


def _dof_l(l0: int) -> np.ndarray:
    """Harmonic number of each coefficient row in the rvec layout."""
    li = np.arange(2 * l0 + 1)
    return (li + 1) // 2


def _zero_mean_rows(F: np.ndarray) -> np.ndarray:
    return F - F.mean(axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# residual and Jacobian


@dataclass(frozen=True)
class ResidualReport:
    """Residual coefficients with the norms used for step control."""

    coefficients: np.ndarray
    total: float
    tail: float  # residual norm in the top two harmonics
    loop_tail_fraction: float

    @property
    def norm(self) -> float:
        return self.total


def _force_coeffs(model: LatticeModel, x: LoopState) -> np.ndarray:
    """Fourier coefficients of grad V(a + x(.)) on the retained band."""
    _, Z, _ = _grids(x.l0)
    q = model.a + x.samples()
    g = grad_V(model, q)
    N = q.shape[0]
    return (np.conj(Z).T @ g) / N


def residual(model: LatticeModel, x: LoopState) -> ResidualReport:
    """F_l = (l nu)^2 X_l - [grad V(a + x)]_l; zero exactly at the equilibrium."""
    if model.n != x.n:
        raise ValueError("loop and model disagree on ring size")
    G = _force_coeffs(model, x)
    lsq = (np.arange(x.l0 + 1) * x.nu) ** 2
    F = lsq[:, None] * x.coefficients - G
    if model.zero_mean_mode:
        F = _zero_mean_rows(F)
    total = loop_norm(F)
    tail = math.sqrt(float(2.0 * np.sum(np.abs(F[-2:]) ** 2)))
    return ResidualReport(F, total, tail, tail_fraction(x))


def residual_rvec(model: LatticeModel, x: LoopState) -> np.ndarray:
    return loop_to_rvec(residual(model, x).coefficients)


def jacobian_action(model: LatticeModel, x: LoopState, y: LoopState) -> np.ndarray:
    """Directional derivative of the residual at x along y (coefficient form)."""
    if (x.n, x.l0) != (y.n, y.l0):
        raise ValueError("direction must share the loop truncation")
    _, Z, _ = _grids(x.l0)
    q = model.a + x.samples()
    ys = y.samples()
    z = hessian_apply(model, q, ys)
    N = q.shape[0]
    G = (np.conj(Z).T @ z) / N
    lsq = (np.arange(x.l0 + 1) * x.nu) ** 2
    out = lsq[:, None] * y.coefficients - G
    if model.zero_mean_mode:
        out = _zero_mean_rows(out)
    return out


def jacobian_dense(model: LatticeModel, x: LoopState) -> np.ndarray:
    """Dense residual Jacobian in rvec coordinates, shape (D, D)."""
    n, l0 = x.n, x.l0
    _, _, S = _grids(l0)
    N = S.shape[0]
    q = model.a + x.samples()
    u2 = evaluate(model.onsite, 2, q)
    w2 = evaluate(model.coupling, 2, q - np.roll(q, 1, axis=-1))
    w2p = np.roll(w2, -1, axis=-1)

    K = 2 * l0 + 1
    J4 = np.zeros((K, n, K, n))
    diag = np.einsum("ma,mj,mb->ajb", S, u2 + w2 + w2p, S, optimize=True) / N
    sub = np.einsum("ma,mj,mb->ajb", S, w2, S, optimize=True) / N
    sup = np.einsum("ma,mj,mb->ajb", S, w2p, S, optimize=True) / N
    for j in range(n):
        J4[:, j, :, j] -= diag[:, j, :]
        J4[:, j, :, (j - 1) % n] += sub[:, j, :]
        J4[:, j, :, (j + 1) % n] += sup[:, j, :]
    J = J4.reshape(K * n, K * n)
    lsq = np.repeat((_dof_l(l0) * x.nu) ** 2, n)
    J[np.arange(K * n), np.arange(K * n)] += lsq
    if model.zero_mean_mode:
        J = J.reshape(K, n, K, n)
        J = J - J.mean(axis=1, keepdims=True)
        J = J - J.mean(axis=3, keepdims=True)
        J = J.reshape(K * n, K * n)
    return J


def nu_derivative_rvec(x: LoopState) -> np.ndarray:
    """d(residual)/d(nu) in rvec coordinates: 2 nu l^2 X_l."""
    l = np.arange(x.l0 + 1)
    dF = (2.0 * x.nu * l**2)[:, None] * x.coefficients
    return loop_to_rvec(dF)


# ---------------------------------------------------------------------------
# dependent (slave) harmonics


def _slave_dof_mask(n: int, l0: int) -> np.ndarray:
    """Rvec mask selecting every harmonic except l = 1."""
    mask = np.ones(n * (2 * l0 + 1), dtype=bool)
    mask[n : 3 * n] = False
    return mask


def solve_slave(
    model: LatticeModel,
    x1: np.ndarray,
    nu: float,
    l0: int,
    basis=None,
    tol: float = 1e-11,
    max_iter: int = 40,
    start: LoopState | None = None,
) -> LoopState:
    """Solve the complementary harmonics (l = 0 and l >= 2) at fixed x1.

    ``x1`` is the complex first-harmonic coefficient vector. When a
    FixedSpaceBasis is given, the unknowns are restricted to its blocks
    away from l = 1, which preserves the symmetry exactly. Returns the
    combined loop; raises SlaveDivergence when Newton fails.
    """
    n = model.n
    x1 = np.asarray(x1, dtype=complex)
    X = np.zeros((l0 + 1, n), dtype=complex)
    X[1] = x1
    if start is not None and start.l0 == l0:
        X[0] = start.coefficients[0]
        X[2:] = start.coefficients[2:]
    loop = LoopState(n, l0, nu, X)

    if basis is not None and basis.l0 != l0:
        raise ValueError("basis truncation must match the requested l0")
    if basis is not None:
        B = basis_matrix(basis)
        keep = np.ones(B.shape[1], dtype=bool)
        d1 = basis.blocks[1].shape[1] if l0 >= 1 else 0
        off = basis.blocks[0].shape[1]
        keep[off : off + d1] = False
        B = B[:, keep]
        restrict = lambda v: B.T @ v
        expand = lambda w: B @ w
    else:
        mask = _slave_dof_mask(n, l0)
        restrict = lambda v: v[mask]
        expand = lambda w: _expand_mask(w, mask)

    r = restrict(residual_rvec(model, loop))
    for _ in range(max_iter):
        if np.linalg.norm(r) <= tol:
            return loop
        J = jacobian_dense(model, loop)
        if basis is not None:
            Jr = B.T @ (J @ B)
        else:
            Jr = J[np.ix_(mask, mask)]
        try:
            step = np.linalg.solve(Jr, -r)
        except np.linalg.LinAlgError as err:
            raise SlaveDivergence(f"singular slave Jacobian ({err})") from err
        # backtracking on the slave residual norm
        base = np.linalg.norm(r)
        scale = 1.0
        for _ in range(9):
            cand = loop.replace(
                coefficients=loop.coefficients
                + rvec_to_coeffs(expand(scale * step), n, l0)
            )
            r_new = restrict(residual_rvec(model, cand))
            if np.linalg.norm(r_new) < base or np.linalg.norm(r_new) <= tol:
                loop, r = cand, r_new
                break
            scale *= 0.5
        else:
            raise SlaveDivergence("backtracking exhausted in the slave solve")
    if np.linalg.norm(r) <= tol:
        return loop
    raise SlaveDivergence(f"slave Newton stalled at |f2| = {np.linalg.norm(r):.3e}")


def _expand_mask(w: np.ndarray, mask: np.ndarray) -> np.ndarray:
    v = np.zeros(mask.shape[0])
    v[mask] = w
    return v


_L0_LADDER = (4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128)


def choose_truncation(
    model: LatticeModel,
    nu_range: tuple[float, float],
    tail_tol: float,
    k: int = 1,
    probe_amplitude: float = 1e-2,
) -> int:
    """Smallest cutoff whose converged probe orbit hides its top harmonics.

    Solves the dependent harmonics for a small first-harmonic probe on
    mode k at the midpoint frequency and grows l0 until the top two
    harmonics carry less than ``tail_tol`` of the loop norm.
    """
    if tail_tol <= 0.0:
        raise ValueError("tail tolerance must be positive")
    nu = 0.5 * (nu_range[0] + nu_range[1])
    j = np.arange(model.n)
    ek = np.exp(2j * np.pi * ((j * k) % model.n) / model.n) / math.sqrt(model.n)
    x1 = probe_amplitude * ek
    last_err: Exception | None = None
    for l0 in _L0_LADDER:
        try:
            loop = solve_slave(model, x1, nu, l0)
        except (SlaveDivergence, np.linalg.LinAlgError) as err:
            last_err = err
            continue
        if tail_fraction(loop) < tail_tol:
            return l0
    raise TruncationError(
        f"no cutoff up to {_L0_LADDER[-1]} met tail tolerance {tail_tol}"
        + (f" (last solver error: {last_err})" if last_err else "")
    )


# ---------------------------------------------------------------------------
# variational structure


def action_value(model: LatticeModel, x: LoopState) -> float:
    """Action integral int_0^{2pi} (nu^2 |x'|^2 / 2 - V(a + x) + V(a)) dt.

    The equilibrium offset makes the action vanish at x = 0; the
    residual is its L2 gradient.
    """
    q = model.a + x.samples()
    dx = x.derivative_samples()
    veq = potential_V(model, np.full(model.n, model.a))
    kin = 0.5 * x.nu**2 * np.sum(dx**2, axis=1)
    pot = (
        np.sum(evaluate(model.onsite, 0, q), axis=1)
        + np.sum(evaluate(model.coupling, 0, q - np.roll(q, 1, axis=-1)), axis=1)
        - veq
    )
    return float(2.0 * np.pi * np.mean(kin - pot))

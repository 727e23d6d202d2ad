"""Ring lattice model: potential V, gradient, Hessian, circulant modes.

The second-difference operator A (diagonal 2, cyclic off-diagonal -1)
is applied as an O(n) stencil; dense materializations exist for test
oracles. Its exact eigenstructure is carried by ``CirculantBasis``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .potentials import Equilibrium, PotentialSpec, evaluate, find_equilibrium

__all__ = [
    "LatticeModel",
    "CirculantBasis",
    "build_model",
    "grad_V",
    "hessian_V",
    "potential_V",
    "apply_A",
    "dense_A",
    "circulant_basis",
    "to_mode_coords",
    "from_mode_coords",
]

GRAD_EQUILIBRIUM_TOL = 1e-12


@dataclass(frozen=True)
class LatticeModel:
    """Ring of n oscillators with on-site and coupling potentials.

    ``a`` is the homogeneous equilibrium coordinate. ``zero_mean_mode``
    restricts all computations to the subspace sum_j x_j = 0 and is only
    valid when the on-site potential vanishes identically.
    """

    n: int
    onsite: PotentialSpec
    coupling: PotentialSpec
    a: float = 0.0
    zero_mean_mode: bool = False

    def __post_init__(self) -> None:
        if self.n < 3:
            raise ValueError(f"ring size must be at least 3, got {self.n}")
        if self.onsite.role != "onsite":
            raise ValueError("onsite spec must have role 'onsite'")
        if self.coupling.role != "coupling":
            raise ValueError("coupling spec must have role 'coupling'")
        if self.zero_mean_mode and self.onsite.family != "zero":
            raise ValueError("zero_mean_mode requires a vanishing on-site potential")
        wp0 = evaluate(self.coupling, 1, 0.0)
        if abs(wp0) > GRAD_EQUILIBRIUM_TOL:
            raise ValueError(f"coupling potential must satisfy W'(0) = 0, got {wp0}")
        g = grad_V(self, np.full(self.n, self.a))
        if np.max(np.abs(g)) > GRAD_EQUILIBRIUM_TOL:
            raise ValueError(f"a = {self.a} is not an equilibrium, |grad V| = {np.max(np.abs(g))}")

    @property
    def u2_at_a(self) -> float:
        """U''(a)."""
        return float(evaluate(self.onsite, 2, self.a))

    @property
    def w2_at_0(self) -> float:
        """W''(0)."""
        return float(evaluate(self.coupling, 2, 0.0))


def build_model(
    n: int,
    onsite: PotentialSpec,
    coupling: PotentialSpec,
    equilibrium_seed: float = 0.0,
    zero_mean_mode: bool | None = None,
) -> LatticeModel:
    """Construct a model, locating the equilibrium from the given seed."""
    eq: Equilibrium = find_equilibrium(onsite, equilibrium_seed)
    if zero_mean_mode is None:
        zero_mean_mode = onsite.family == "zero"
    return LatticeModel(n, onsite, coupling, eq.a, zero_mean_mode)


def potential_V(model: LatticeModel, q: np.ndarray) -> float:
    """V(q) = sum_j U(q_j) + W(q_j - q_{j-1}) with cyclic indices."""
    q = np.asarray(q, dtype=float)
    d = q - np.roll(q, 1, axis=-1)
    return float(np.sum(evaluate(model.onsite, 0, q)) + np.sum(evaluate(model.coupling, 0, d)))


def grad_V(model: LatticeModel, q: np.ndarray) -> np.ndarray:
    """Component j: U'(q_j) + W'(q_j - q_{j-1}) - W'(q_{j+1} - q_j).

    Accepts batches of configurations with sites on the last axis.
    """
    q = np.asarray(q, dtype=float)
    if not np.all(np.isfinite(q)):
        raise ValueError("non-finite configuration")
    wd = evaluate(model.coupling, 1, q - np.roll(q, 1, axis=-1))  # W' at bond (j-1, j)
    return evaluate(model.onsite, 1, q) + wd - np.roll(wd, -1, axis=-1)


def hessian_V(model: LatticeModel, q: np.ndarray) -> np.ndarray:
    """Dense symmetric Hessian of V at q."""
    q = np.asarray(q, dtype=float)
    n = model.n
    u2 = evaluate(model.onsite, 2, q)
    w2 = evaluate(model.coupling, 2, q - np.roll(q, 1))  # w2[j] at bond (j-1, j)
    H = np.zeros((n, n))
    idx = np.arange(n)
    H[idx, idx] = u2 + w2 + np.roll(w2, -1)
    H[idx, (idx - 1) % n] -= w2
    H[(idx - 1) % n, idx] -= w2
    return H


def hessian_apply(model: LatticeModel, q: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Hessian-vector product via the cyclic stencil; y may be batched (..., n)."""
    q = np.asarray(q, dtype=float)
    u2 = evaluate(model.onsite, 2, q)
    w2 = evaluate(model.coupling, 2, q - np.roll(q, 1))
    dy = y - np.roll(y, 1, axis=-1)  # dy[..., j] = y_j - y_{j-1}
    t = w2 * dy
    return u2 * y + t - np.roll(t, -1, axis=-1)


def apply_A(q: np.ndarray) -> np.ndarray:
    """Second-difference operator (Aq)_j = 2 q_j - q_{j-1} - q_{j+1}."""
    return 2.0 * q - np.roll(q, 1, axis=-1) - np.roll(q, -1, axis=-1)


def dense_A(n: int) -> np.ndarray:
    """Dense circulant second-difference matrix, for small-n oracles."""
    A = np.zeros((n, n))
    idx = np.arange(n)
    A[idx, idx] = 2.0
    A[idx, (idx + 1) % n] = -1.0
    A[idx, (idx - 1) % n] = -1.0
    return A


@dataclass(frozen=True)
class CirculantBasis:
    """Orthonormal circulant eigenvectors e_k and eigenvalues of A.

    ``vectors[k-1]`` has entries n^{-1/2} exp(2*pi*i*j*k/n) for j = 0..n-1
    and eigenvalue ``eigenvalues[k-1]`` = 4 sin^2(k*pi/n), k = 1..n.
    """

    n: int
    vectors: np.ndarray  # shape (n, n), row k-1 is e_k
    eigenvalues: np.ndarray  # shape (n,)

    def vector(self, k: int) -> np.ndarray:
        return self.vectors[(k - 1) % self.n]

    def eigenvalue(self, k: int) -> float:
        return float(self.eigenvalues[(k - 1) % self.n])


def circulant_basis(n: int) -> CirculantBasis:
    """Build the circulant eigenbasis of the ring with n >= 3 sites."""
    if n < 3:
        raise ValueError("n must be at least 3")
    j = np.arange(n)
    rows = []
    for k in range(1, n + 1):
        ang = 2.0 * np.pi * ((j * k) % n) / n  # exact integer reduction keeps phases clean
        rows.append((np.cos(ang) + 1j * np.sin(ang)) / np.sqrt(n))
    mu = 4.0 * np.sin(np.pi * np.arange(1, n + 1) / n) ** 2
    return CirculantBasis(n, np.array(rows), mu)


def to_mode_coords(basis: CirculantBasis, x: np.ndarray) -> np.ndarray:
    """Coefficients x_k with x = sum_k x_k e_k; index k-1 holds mode k."""
    return np.conj(basis.vectors) @ np.asarray(x, dtype=complex)


def from_mode_coords(basis: CirculantBasis, coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_mode_coords`."""
    return basis.vectors.T @ np.asarray(coeffs, dtype=complex)

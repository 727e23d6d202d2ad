"""Spatio-temporal symmetries of loops on the oscillator ring.

A group element combines a dihedral site permutation (affine index map
j -> f*j + p mod n) with a time transformation t -> eps*t + phi. All
generator phases are integer multiples of pi/n, stored exactly, so
group closure terminates without floating-point drift.

Loops are truncated Fourier series; the coefficient array has shape
(l0 + 1, n) with row l holding the complex l-th harmonic of every site
(negative harmonics implied by reality). The matching real coordinate
layout per harmonic is X_0 for l = 0 and (sqrt(2) Re X_l, sqrt(2) Im X_l)
for l >= 1, which makes Euclidean norms equal loop L2 norms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

__all__ = [
    "GroupElement",
    "IsotropyGroup",
    "FixedSpaceBasis",
    "SymmetryError",
    "identity",
    "rotation",
    "reflection",
    "time_shift",
    "time_reversal",
    "shifted_reversal",
    "compose",
    "enumerate_closure",
    "act_coeffs",
    "act",
    "build_isotropy",
    "fixed_space",
    "first_mode_block_dim",
    "expected_standing_dims",
    "symmetry_residual",
    "pattern_residual",
    "group_average_coeffs",
]

CLOSURE_BOUND_FACTOR = 4  # group order never exceeds 4 n^2
PROJECTOR_IDEMPOTENCY_TOL = 1e-10
RANK_CUTOFF = 1e-8


class SymmetryError(RuntimeError):
    """Inconsistent generators or a projector that fails to be idempotent."""


@dataclass(frozen=True)
class GroupElement:
    """One spatio-temporal symmetry of the ring of n oscillators.

    Site map: j -> (-1)^sflip * j + srot (mod n).
    Time map: t -> (-1)^trev * t + pi * tshift / n, tshift mod 2n.
    The loop action is (g x)_j(t) = s * x_{sitemap(j)}(timemap(t)) with
    an overall sign s = -1 when ``neg`` is set. The sign extends the
    bare permutation action: rings whose coupling potential is not even
    are only invariant under the parity-corrected reflection
    x_j -> -x_{-j}, which requires this extra factor.
    """

    n: int
    sflip: bool = False
    srot: int = 0
    trev: bool = False
    tshift: int = 0
    neg: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "srot", self.srot % self.n)
        object.__setattr__(self, "tshift", self.tshift % (2 * self.n))

    @property
    def phi(self) -> float:
        return math.pi * self.tshift / self.n

    def site_map(self) -> np.ndarray:
        """Index array idx with idx[j] = site whose history lands at j."""
        j = np.arange(self.n)
        return ((-j if self.sflip else j) + self.srot) % self.n

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return compose(self, other)

    def inverse(self) -> "GroupElement":
        f = -1 if self.sflip else 1
        e = -1 if self.trev else 1
        return GroupElement(
            self.n, self.sflip, -f * self.srot, self.trev, -e * self.tshift, self.neg
        )


def compose(g1: GroupElement, g2: GroupElement) -> GroupElement:
    """Element realizing the operator product rho(g1) rho(g2)."""
    if g1.n != g2.n:
        raise ValueError("cannot compose elements on different rings")
    f2 = -1 if g2.sflip else 1
    e2 = -1 if g2.trev else 1
    return GroupElement(
        g1.n,
        g1.sflip != g2.sflip,
        f2 * g1.srot + g2.srot,
        g1.trev != g2.trev,
        e2 * g1.tshift + g2.tshift,
        g1.neg != g2.neg,
    )


def identity(n: int) -> GroupElement:
    return GroupElement(n)


def rotation(n: int, p: int = 1) -> GroupElement:
    """Site shift j -> j + p."""
    return GroupElement(n, srot=p)


def reflection(n: int) -> GroupElement:
    """Site reflection j -> -j."""
    return GroupElement(n, sflip=True)


def time_shift(n: int, units: int) -> GroupElement:
    """Time shift by pi*units/n; one ring step of phase is units = 2."""
    return GroupElement(n, tshift=units)


def time_reversal(n: int) -> GroupElement:
    """t -> -t."""
    return GroupElement(n, trev=True)


def shifted_reversal(n: int, units: int) -> GroupElement:
    """The word 'shift then reversal': acts as x(-t - pi*units/n)."""
    return compose(time_shift(n, units), time_reversal(n))


def enumerate_closure(generators: list[GroupElement]) -> tuple[GroupElement, ...]:
    """Breadth-first multiplicative closure of the generator set."""
    if not generators:
        raise ValueError("need at least one generator")
    n = generators[0].n
    bound = 2 * CLOSURE_BOUND_FACTOR * n * n  # doubled for sign-extended groups
    elements = {identity(n)}
    frontier = list(elements)
    while frontier:
        new = []
        for g in generators:
            for h in frontier:
                gh = compose(g, h)
                if gh not in elements:
                    elements.add(gh)
                    new.append(gh)
                    if len(elements) > bound:
                        raise SymmetryError("group closure exceeded the size bound")
        frontier = new
    return tuple(
        sorted(elements, key=lambda g: (g.sflip, g.srot, g.trev, g.tshift, g.neg))
    )


def act_coeffs(g: GroupElement, X: np.ndarray) -> np.ndarray:
    """Apply a group element to a one-sided coefficient array (l0+1, n)."""
    X = np.asarray(X, dtype=complex)
    idx = g.site_map()
    Y = X[:, idx]
    l = np.arange(X.shape[0])
    sign = -1 if g.trev else 1
    units = (sign * l * g.tshift) % (2 * g.n)
    phase = np.exp(1j * np.pi * units / g.n)
    if g.trev:
        Y = np.conj(Y)
    if g.neg:
        Y = -Y
    return Y * phase[:, None]


def act(g: GroupElement, x):
    """Apply g to a coefficient array or to any object carrying one."""
    if isinstance(x, np.ndarray):
        return act_coeffs(g, x)
    return x.replace(coefficients=act_coeffs(g, x.coefficients))


# ---------------------------------------------------------------------------
# isotropy groups of the first-harmonic irreducible blocks


@dataclass(frozen=True)
class IsotropyGroup:
    """A maximal isotropy group with its generators and full element list.

    ``label`` is "T" (traveling), "S" (mirror standing) or "St"
    (half-period-shifted standing). ``k`` is the spatial mode, or None
    for the mode-summed standing groups used in the degenerate case.
    ``twisted`` marks the parity-corrected variant in which every
    reflection carries the global sign flip; it is the symmetry that
    survives when the coupling potential is not even.
    """

    label: str
    n: int
    k: int | None
    generators: tuple[GroupElement, ...]
    elements: tuple[GroupElement, ...]
    h: int | None = None  # gcd(k, n)
    kbar: int | None = None
    nbar: int | None = None
    m: int | None = None  # inverse of kbar mod nbar
    twisted: bool = False

    @property
    def order(self) -> int:
        return len(self.elements)

    def describe(self) -> str:
        kk = "" if self.k is None else f"_{self.k}"
        tw = ", twisted" if self.twisted else ""
        return f"{self.label}{kk}(n={self.n}, order={self.order}{tw})"


def _mode_arithmetic(n: int, k: int) -> tuple[int, int, int, int]:
    h = math.gcd(k, n)
    kbar, nbar = k // h, n // h
    return h, kbar, nbar, pow(kbar, -1, nbar)


def _twist(g: GroupElement) -> GroupElement:
    """Attach the global sign flip to reflection-type elements."""
    if not g.sflip:
        return g
    return GroupElement(g.n, g.sflip, g.srot, g.trev, g.tshift, not g.neg)


def build_isotropy(label: str, n: int, k: int | None, twisted: bool = False) -> IsotropyGroup:
    """Construct the isotropy group of the given family.

    For mode-labeled families, k in [1, n/2) gives all three labels,
    k = n/2 (n even) and k = n only the traveling family. ``k = None``
    builds the standing groups acting across all spatial modes at once.
    With ``twisted`` every reflection generator is replaced by the
    parity-corrected reflection x_j -> -x_{-j}.
    """
    if label not in ("T", "S", "St"):
        raise ValueError(f"unknown family label {label!r}")
    if k is None:
        if label == "T":
            raise ValueError("the traveling family requires a mode number")
        if label == "S":
            gens = [reflection(n), time_reversal(n)]
        elif n % 2 == 1:
            gens = [compose(reflection(n), time_shift(n, n)), shifted_reversal(n, n)]
        else:
            gens = [compose(reflection(n), rotation(n, 1)), shifted_reversal(n, 2)]
        if twisted:
            gens = [_twist(g) for g in gens]
        return IsotropyGroup(
            label, n, None, tuple(gens), enumerate_closure(gens), twisted=twisted
        )

    if not (1 <= k <= n // 2 or k == n):
        raise ValueError(f"mode k = {k} out of range for n = {n}")
    h, kbar, nbar, m = _mode_arithmetic(n, k)
    if label == "T":
        if k == n:
            gens = [rotation(n), reflection(n), time_reversal(n)]
        elif 2 * k == n:
            gens = [compose(rotation(n), time_shift(n, n)), reflection(n), time_reversal(n)]
        else:
            gens = [
                compose(rotation(n), time_shift(n, -2 * k)),
                compose(reflection(n), time_reversal(n)),
                rotation(n, nbar),
            ]
    else:
        if k == n or 2 * k == n:
            raise ValueError("standing families only exist for k in [1, n/2)")
        if nbar % 2 == 1:
            if label == "S":
                gens = [reflection(n), time_reversal(n), rotation(n, nbar)]
            else:
                gens = [
                    compose(reflection(n), time_shift(n, n)),
                    shifted_reversal(n, n),
                    rotation(n, nbar),
                ]
        else:
            half_turn = compose(rotation(n, nbar * m // 2), time_shift(n, n))
            if label == "S":
                gens = [reflection(n), time_reversal(n), half_turn, rotation(n, nbar)]
            else:
                gens = [
                    compose(reflection(n), rotation(n, m)),
                    shifted_reversal(n, 2 * m),
                    half_turn,
                    rotation(n, nbar),
                ]
    if twisted:
        gens = [_twist(g) for g in gens]
    return IsotropyGroup(
        label, n, k, tuple(gens), enumerate_closure(gens), h, kbar, nbar, m, twisted
    )


# ---------------------------------------------------------------------------
# fixed-point subspaces


def _block_matrix(g: GroupElement, l: int) -> np.ndarray:
    """Real matrix of g on the l-th harmonic block coordinates."""
    n = g.n
    idx = g.site_map()
    P = np.zeros((n, n))
    P[np.arange(n), idx] = 1.0
    if g.neg:
        P = -P
    if l == 0:
        return P
    sign = -1 if g.trev else 1
    units = (sign * l * g.tshift) % (2 * n)
    c = complex(np.exp(1j * np.pi * units / n))
    s = -1.0 if g.trev else 1.0
    return np.block([[c.real * P, -s * c.imag * P], [c.imag * P, s * c.real * P]])


def _mean_free_projector(n: int, l: int) -> np.ndarray:
    """Projector removing the spatially constant component of a block."""
    Q1 = np.eye(n) - np.full((n, n), 1.0 / n)
    if l == 0:
        return Q1
    Z = np.zeros((n, n))
    return np.block([[Q1, Z], [Z, Q1]])


@dataclass(frozen=True)
class FixedSpaceBasis:
    """Orthonormal basis of Fix(H) in the truncated loop space.

    ``blocks[l]`` holds the basis of the l-th harmonic block as columns;
    the loop L2 inner product equals the Euclidean one in these
    coordinates. ``first_mode_dim`` is the block dimension at l = 1.
    """

    group: IsotropyGroup
    l0: int
    blocks: tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return sum(b.shape[1] for b in self.blocks)

    @property
    def block_dims(self) -> tuple[int, ...]:
        return tuple(b.shape[1] for b in self.blocks)

    @property
    def first_mode_dim(self) -> int:
        return self.blocks[1].shape[1] if self.l0 >= 1 else 0

    def to_coeffs(self, u: np.ndarray) -> np.ndarray:
        """Expand reduced coordinates into a coefficient array."""
        n = self.group.n
        X = np.zeros((self.l0 + 1, n), dtype=complex)
        pos = 0
        for l, B in enumerate(self.blocks):
            d = B.shape[1]
            v = B @ u[pos : pos + d]
            if l == 0:
                X[0] = v
            else:
                X[l] = (v[:n] + 1j * v[n:]) / math.sqrt(2.0)
            pos += d
        return X

    def from_coeffs(self, X: np.ndarray) -> np.ndarray:
        """Project a coefficient array onto the basis coordinates."""
        n = self.group.n
        out = []
        for l, B in enumerate(self.blocks):
            if l == 0:
                v = X[0].real
            else:
                v = np.concatenate([X[l].real, X[l].imag]) * math.sqrt(2.0)
            out.append(B.T @ v)
        return np.concatenate(out)


def _block_projector(H: IsotropyGroup, l: int, zero_mean: bool) -> np.ndarray:
    mats = [_block_matrix(g, l) for g in H.elements]
    P = reduce(np.add, mats) / len(mats)
    if zero_mean:
        Q = _mean_free_projector(H.n, l)
        P = Q @ P @ Q
    err = np.linalg.norm(P @ P - P)
    if err > PROJECTOR_IDEMPOTENCY_TOL:
        raise SymmetryError(f"group-average projector not idempotent (error {err:.2e})")
    return P


def fixed_space(H: IsotropyGroup, l0: int, zero_mean: bool = False) -> FixedSpaceBasis:
    """Orthonormal basis of Fix(H) up to harmonic l0 by group averaging."""
    blocks = []
    for l in range(l0 + 1):
        P = _block_projector(H, l, zero_mean)
        U, s, _ = np.linalg.svd(P)
        blocks.append(U[:, s > RANK_CUTOFF])
    basis = FixedSpaceBasis(H, l0, tuple(blocks))
    if H.k is None and l0 >= 1 and not zero_mean:
        expected = expected_standing_dims(H.n, H.twisted)[0 if H.label == "S" else 1]
        if basis.first_mode_dim != expected:
            raise SymmetryError(
                f"first-mode dim of Fix({H.label}) is {basis.first_mode_dim}, expected {expected}"
            )
    return basis


def expected_standing_dims(n: int, twisted: bool = False) -> tuple[int, int]:
    """First-harmonic fixed-space dimensions of the two standing groups."""
    if n % 2 == 1:
        dims = ((n + 1) // 2, (n - 1) // 2)
        return dims[::-1] if twisted else dims
    if twisted:
        return n // 2 - 1, n // 2
    return n // 2 + 1, n // 2


def _pair_block_frame(n: int, k: int) -> np.ndarray:
    """Orthonormal real frame of the first-harmonic mode pair {k, n-k}."""
    j = np.arange(n)
    ek = np.exp(2j * np.pi * ((j * k) % n) / n) / math.sqrt(n)
    en_k = np.conj(ek)
    if k % n == (n - k) % n:
        members = [ek, 1j * ek]
    else:
        members = [ek, 1j * ek, en_k, 1j * en_k]
    return np.array([np.concatenate([z.real, z.imag]) for z in members]).T


def first_mode_block_dim(H: IsotropyGroup, k: int) -> int:
    """Dimension of Fix(H) inside the first-harmonic mode pair {k, n-k}."""
    V = _pair_block_frame(H.n, k)
    P = _block_projector(H, 1, zero_mean=False)
    M = V.T @ P @ V
    return int(np.sum(np.linalg.svd(M, compute_uv=False) > RANK_CUTOFF))


def first_mode_pair_direction(H: IsotropyGroup, k: int) -> np.ndarray:
    """Unit first-harmonic coefficient vector spanning Fix(H) in pair {k, n-k}.

    Raises when the fixed subspace of the pair block is not a line.
    """
    V = _pair_block_frame(H.n, k)
    P = _block_projector(H, 1, zero_mean=False)
    M = V.T @ P @ V
    w, vecs = np.linalg.eigh(M)
    fixed = vecs[:, w > 1.0 - RANK_CUTOFF]
    if fixed.shape[1] != 1:
        raise SymmetryError(
            f"pair block of {H.describe()} at mode {k} has dimension {fixed.shape[1]}"
        )
    v = V @ fixed[:, 0]
    n = H.n
    z = (v[:n] + 1j * v[n:]) / math.sqrt(2.0)  # unit loop norm
    return z


def group_average_coeffs(H: IsotropyGroup, X: np.ndarray) -> np.ndarray:
    """Project a coefficient array onto Fix(H) by averaging the action."""
    acc = np.zeros_like(np.asarray(X, dtype=complex))
    for g in H.elements:
        acc += act_coeffs(g, X)
    return acc / len(H.elements)


# ---------------------------------------------------------------------------
# residuals and wave-pattern predicates


def coeff_norm(X: np.ndarray) -> float:
    """Loop L2 norm from one-sided coefficients."""
    X = np.asarray(X, dtype=complex)
    total = np.sum(np.abs(X[0]) ** 2) + 2.0 * np.sum(np.abs(X[1:]) ** 2)
    return math.sqrt(float(total.real))


def symmetry_residual(x, H: IsotropyGroup) -> float:
    """Max over generators of |g x - x| relative to |x| (0 for the 0 loop)."""
    X = x if isinstance(x, np.ndarray) else x.coefficients
    nrm = coeff_norm(X)
    if nrm == 0.0:
        return 0.0
    return max(coeff_norm(act_coeffs(g, X) - X) for g in H.generators) / nrm


def _site_series(X: np.ndarray, j: int) -> np.ndarray:
    return X[:, j % X.shape[1]]


def _shifted(c: np.ndarray, delta: float) -> np.ndarray:
    """Coefficients of t -> x(t + delta)."""
    l = np.arange(c.shape[0])
    return c * np.exp(1j * l * delta)


def _series_norm(c: np.ndarray) -> float:
    return math.sqrt(float(np.abs(c[0]) ** 2 + 2.0 * np.sum(np.abs(c[1:]) ** 2)))


def _even_defect(c: np.ndarray, center: float) -> float:
    """Deviation of x from evenness about t = center."""
    d = _shifted(c, center)
    return math.sqrt(float(d[0].imag ** 2 + 2.0 * np.sum(d[1:].imag ** 2)))


def _half_period_defect(c: np.ndarray) -> float:
    """Deviation of x from pi-periodicity (odd harmonics)."""
    odd = c[1::2]
    return math.sqrt(float(2.0 * np.sum(np.abs(odd) ** 2)))


def _half_antiperiod_defect(c: np.ndarray) -> float:
    """Deviation of x from pi-antiperiodicity (even harmonics)."""
    even = c[2::2]
    return math.sqrt(float(np.abs(c[0]) ** 2 + 2.0 * np.sum(np.abs(even) ** 2)))


def pattern_residual(x, H: IsotropyGroup) -> float:
    """Time-domain wave-pattern defect of a loop for a mode-labeled family.

    Checks the repeated-wave structure (period nbar in space), the
    site-to-site relations of the family after relabeling sites by the
    modular inverse of kbar, the evenness of the designated sites, and
    pi-periodicity of the special site where the pattern demands it.
    All relations are evaluated exactly on Fourier coefficients.
    """
    if H.k is None:
        raise ValueError("pattern predicates are defined for mode-labeled families")
    X = x if isinstance(x, np.ndarray) else x.coefficients
    X = np.asarray(X, dtype=complex)
    n, nbar, m = H.n, H.nbar, H.m
    nrm = coeff_norm(X)
    if nrm == 0.0:
        return 0.0
    defects = []

    # wave of length nbar repeated h times
    for j in range(n):
        defects.append(_series_norm(_site_series(X, j + nbar) - _site_series(X, j)))

    def y(i: int) -> np.ndarray:
        return _site_series(X, (i * m) % n)

    zbar = 2.0 * math.pi / nbar
    s = -1.0 if H.twisted else 1.0  # sign carried by the reflection relations
    special = _half_antiperiod_defect if H.twisted else _half_period_defect
    if H.label == "T":
        for i in range(nbar):
            defects.append(_series_norm(_shifted(y(i + 1), -zbar) - y(i)))
            defects.append(_series_norm(s * np.conj(y(-i)) - y(i)))
    elif H.label == "S":
        for i in range(nbar):
            defects.append(_series_norm(s * y(nbar - i) - y(i)))
            defects.append(_even_defect(y(i), 0.0))
        if nbar % 2 == 0:
            for i in range(nbar):
                defects.append(_series_norm(_shifted(y(i + nbar // 2), math.pi) - y(i)))
        if nbar % 4 == 0:
            defects.append(special(y(nbar // 4)))
    else:
        if nbar % 2 == 1:
            for i in range(nbar):
                defects.append(_series_norm(s * _shifted(y(nbar - i), math.pi) - y(i)))
                defects.append(_even_defect(y(i), -math.pi / 2.0))
        else:
            center = -m * math.pi / n
            for i in range(nbar):
                defects.append(_series_norm(s * y(1 - i) - y(i)))
                defects.append(_series_norm(_shifted(y(i + nbar // 2), math.pi) - y(i)))
                defects.append(_even_defect(y(i), center))
            if nbar % 4 == 2:
                defects.append(special(y(((1 - nbar // 2) // 2) % nbar)))
    return max(defects) / nrm

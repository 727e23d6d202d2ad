"""Linear mode frequencies of the ring and their resonance structure.

The dispersion relation nu_k^2 = U''(a) + (2 sin(k pi/n))^2 W''(0) is
evaluated exactly; a mode bifurcates only when nu_k > 0 and no integer
multiple of nu_k collides with a higher mode frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .lattice import LatticeModel

__all__ = [
    "DispersionEntry",
    "DispersionTable",
    "ResonanceReport",
    "dispersion",
    "non_resonance_check",
    "resonance_parameters",
    "k0_threshold",
    "RESONANCE_TOL",
]

# absolute tolerance on frequency coincidences; all inputs are O(1)
RESONANCE_TOL = 1e-9


def _gap_squared(n: int, k: int) -> float:
    """(2 sin(k pi / n))^2."""
    return (2.0 * math.sin(math.pi * k / n)) ** 2


def mode_frequency_squared(model: LatticeModel, k: int) -> float:
    """nu_k^2 for mode k (k = n gives the spatially constant mode)."""
    return model.u2_at_a + _gap_squared(model.n, k) * model.w2_at_0


@dataclass(frozen=True)
class DispersionEntry:
    k: int
    nu_sq: float
    nu: float  # 0.0 when nu_sq <= 0
    bifurcating: bool  # nu_sq > 0


@dataclass(frozen=True)
class DispersionTable:
    """Frequencies for k = 1..floor(n/2) and the constant mode k = n."""

    n: int
    entries: tuple[DispersionEntry, ...]
    all_equal: bool  # W''(0) = 0, totally degenerate spectrum

    def entry(self, k: int) -> DispersionEntry:
        for e in self.entries:
            if e.k == k:
                return e
        raise KeyError(f"mode {k} not tabulated")

    def nu(self, k: int) -> float:
        return self.entry(k).nu


def dispersion(model: LatticeModel) -> DispersionTable:
    """Tabulate nu_k; entries with nu_k^2 <= 0 are flagged non-bifurcating."""
    ks = list(range(1, model.n // 2 + 1)) + [model.n]
    entries = []
    for k in ks:
        nsq = mode_frequency_squared(model, k)
        entries.append(DispersionEntry(k, nsq, math.sqrt(nsq) if nsq > 0 else 0.0, nsq > 0))
    return DispersionTable(model.n, tuple(entries), model.w2_at_0 == 0.0)


@dataclass(frozen=True)
class ResonanceReport:
    """Outcome of testing l*nu_k against nu_j for j in (k, n/2], l >= 2."""

    k: int
    non_resonant: bool
    resonant_pairs: tuple[tuple[int, int, float, float], ...] = ()  # (l, j, nu_j, l*nu_k)
    resonance_params: tuple[float, ...] = field(default=())  # omega_l(j) per pair
    degenerate: bool = False  # all frequencies equal, check inapplicable

    def __post_init__(self) -> None:
        assert self.non_resonant == (len(self.resonant_pairs) == 0)


def non_resonance_check(model: LatticeModel, k: int, l_max: int = 100) -> ResonanceReport:
    """Enumerate resonances l*nu_k = nu_j with j in (k, n/2] and l >= 2.

    Multiples beyond the largest mode frequency cannot resonate, so the
    scan stops there even if l_max is larger. A totally degenerate
    spectrum (W''(0) = 0) is reported as such rather than scanned.
    """
    if l_max < 2:
        raise ValueError("l_max must be at least 2")
    table = dispersion(model)
    if table.all_equal:
        return ResonanceReport(k, non_resonant=False,
                               resonant_pairs=((2, k, table.nu(k), 2 * table.nu(k)),),
                               resonance_params=(), degenerate=True)
    nu_k = table.nu(k)
    if nu_k <= 0:
        raise ValueError(f"mode {k} has nu_k^2 <= 0; non-resonance is undefined")
    higher = [e for e in table.entries if k < e.k <= model.n // 2]
    nu_top = max((e.nu for e in higher), default=0.0)
    pairs = []
    params = []
    for l in range(2, l_max + 1):
        if l * nu_k > nu_top + RESONANCE_TOL:
            break
        for e in higher:
            if abs(l * nu_k - e.nu) <= RESONANCE_TOL:
                pairs.append((l, e.k, e.nu, l * nu_k))
                params.append(resonance_parameters(model.n, k, e.k, l))
    return ResonanceReport(k, len(pairs) == 0, tuple(pairs), tuple(params))


def resonance_parameters(n: int, k: int, j: int, l: int) -> float:
    """Critical on-site stiffness at which l*nu_k = nu_j.

    Returns -[(2 sin(k pi/n))^2 - (2 sin(j pi/n))^2 / l^2] / (1 - 1/l^2);
    the resonance occurs exactly when U''(a) = W''(0) times this value.
    """
    if l < 2:
        raise ValueError("l must be at least 2 (l = 1 divides by zero)")
    if j == k:
        raise ValueError("j must differ from k")
    return -(_gap_squared(n, k) - _gap_squared(n, j) / l**2) / (1.0 - 1.0 / l**2)


def k0_threshold(model: LatticeModel) -> tuple[int | None, float]:
    """Smallest mode with nu_k^2 > 0 for a concave on-site term (U''(a) < 0).

    Returns (k0, asymptotic) where asymptotic = (n/pi) arcsin(omega/2) is
    the closed-form estimate; k0 is None when no mode in [1, n/2]
    satisfies the strict inequality.
    """
    u2 = model.u2_at_a
    if u2 >= 0:
        raise ValueError("threshold mode is only defined for U''(a) < 0")
    w2 = model.w2_at_0
    if w2 <= 0:
        raise ValueError("threshold mode requires W''(0) > 0")
    omega = math.sqrt(-u2 / w2)
    asymptotic = (model.n / math.pi) * math.asin(min(omega / 2.0, 1.0))
    for k in range(1, model.n // 2 + 1):
        if mode_frequency_squared(model, k) > 0:
            return k, asymptotic
    return None, asymptotic

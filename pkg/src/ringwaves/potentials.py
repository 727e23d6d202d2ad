"""On-site and coupling potentials with analytic derivatives.

Every family provides the potential value and its first two derivatives.
The one-sided contact potential is only meaningful as a coupling term,
the pendulum and bistable wells only as on-site terms; construction
enforces these roles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PotentialSpec",
    "Equilibrium",
    "PotentialConfigError",
    "pendulum",
    "harmonic",
    "hertz",
    "toda",
    "fpu",
    "bistable",
    "polynomial",
    "zero",
    "evaluate",
    "find_equilibrium",
]

FAMILIES = ("pendulum", "harmonic", "hertz", "fpu", "toda", "bistable", "polynomial", "zero")

# families that only make sense in one role
ONSITE_ONLY = ("pendulum", "bistable")
COUPLING_ONLY = ("hertz",)

EQUILIBRIUM_TOL = 1e-12
_NEWTON_MAX_ITER = 50


class PotentialConfigError(ValueError):
    """Invalid potential family, parameters, or role assignment."""


@dataclass(frozen=True)
class PotentialSpec:
    """A potential family with parameters and its role in the lattice.

    Parameters live in ``params``: ``omega`` for pendulum/bistable,
    ``beta`` for fpu, ``coefficients`` (tuple, index = power of x) for
    polynomial. Other families are parameter free.
    """

    family: str
    role: str
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise PotentialConfigError(f"unknown potential family {self.family!r}")
        if self.role not in ("onsite", "coupling"):
            raise PotentialConfigError(f"role must be 'onsite' or 'coupling', got {self.role!r}")
        if self.family in ONSITE_ONLY and self.role != "onsite":
            raise PotentialConfigError(f"{self.family} is only valid as an on-site potential")
        if self.family in COUPLING_ONLY and self.role != "coupling":
            raise PotentialConfigError(f"{self.family} is only valid as a coupling potential")
        if self.family in ("pendulum", "bistable") and "omega" not in self.params:
            raise PotentialConfigError(f"{self.family} requires parameter 'omega'")
        if self.family == "fpu" and "beta" not in self.params:
            raise PotentialConfigError("fpu requires parameter 'beta'")
        if self.family == "polynomial":
            coeffs = self.params.get("coefficients")
            if coeffs is None or len(coeffs) == 0:
                raise PotentialConfigError("polynomial requires a nonempty coefficient list")
            object.__setattr__(self, "params", {"coefficients": tuple(float(c) for c in coeffs)})


def pendulum(omega: float, role: str = "onsite") -> PotentialSpec:
    """U(x) = omega^2 (1 - cos x)."""
    return PotentialSpec("pendulum", role, {"omega": float(omega)})


def harmonic(role: str = "coupling") -> PotentialSpec:
    """W(x) = x^2 / 2."""
    return PotentialSpec("harmonic", role)


def hertz(role: str = "coupling") -> PotentialSpec:
    """One-sided contact: W(x) = (2/5)|x|^(5/2) for x <= 0, zero for x > 0."""
    return PotentialSpec("hertz", role)


def toda(role: str = "coupling") -> PotentialSpec:
    """W(x) = exp(-x) + x - 1."""
    return PotentialSpec("toda", role)


def fpu(beta: float, role: str = "coupling") -> PotentialSpec:
    """W(x) = x^2/2 + beta x^3/3."""
    return PotentialSpec("fpu", role, {"beta": float(beta)})


def bistable(omega: float, role: str = "onsite") -> PotentialSpec:
    """U(x) = omega^2 (1 - x^2)^2 / 4."""
    return PotentialSpec("bistable", role, {"omega": float(omega)})


def polynomial(coefficients, role: str = "onsite") -> PotentialSpec:
    """Plain polynomial, value = sum_k c[k] x^k with c indexed by power."""
    return PotentialSpec("polynomial", role, {"coefficients": tuple(coefficients)})


def zero(role: str = "onsite") -> PotentialSpec:
    """Identically zero potential."""
    return PotentialSpec("zero", role)


def _hertz_eval(order: int, x: np.ndarray) -> np.ndarray:
    # active only under compression (x <= 0); W'' has the one-sided limit 0 at x = 0
    neg = np.minimum(x, 0.0)
    if order == 0:
        return 0.4 * (-neg) ** 2.5
    if order == 1:
        return -((-neg) ** 1.5)
    return 1.5 * np.sqrt(-neg)


def _poly_eval(coeffs: tuple, order: int, x: np.ndarray) -> np.ndarray:
    c = list(coeffs)
    for _ in range(order):
        c = [k * c[k] for k in range(1, len(c))] or [0.0]
    # polyval wants highest power first
    return np.polyval(list(reversed(c)), x)


def evaluate(spec: PotentialSpec, order: int, x) -> np.ndarray | float:
    """Evaluate the potential (order 0) or its derivative (order 1 or 2) at x.

    Accepts scalars or arrays; returns the same shape. Raises on
    non-finite input and on orders outside {0, 1, 2}.
    """
    if order not in (0, 1, 2):
        raise ValueError(f"derivative order must be 0, 1 or 2, got {order}")
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite input to potential evaluation")
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)

    fam = spec.family
    if fam == "pendulum":
        w2 = spec.params["omega"] ** 2
        out = (w2 * (1.0 - np.cos(arr)), w2 * np.sin(arr), w2 * np.cos(arr))[order]
    elif fam == "harmonic":
        out = (0.5 * arr**2, arr, np.ones_like(arr))[order]
    elif fam == "hertz":
        out = _hertz_eval(order, arr)
    elif fam == "toda":
        e = np.exp(-arr)
        out = (e + arr - 1.0, 1.0 - e, e)[order]
    elif fam == "fpu":
        b = spec.params["beta"]
        out = (0.5 * arr**2 + b * arr**3 / 3.0, arr + b * arr**2, 1.0 + 2.0 * b * arr)[order]
    elif fam == "bistable":
        w2 = spec.params["omega"] ** 2
        out = (
            0.25 * w2 * (1.0 - arr**2) ** 2,
            w2 * arr * (arr**2 - 1.0),
            w2 * (3.0 * arr**2 - 1.0),
        )[order]
    elif fam == "polynomial":
        out = _poly_eval(spec.params["coefficients"], order, arr)
    else:  # zero
        out = np.zeros_like(arr)

    out = np.asarray(out, dtype=float)
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class Equilibrium:
    """Homogeneous equilibrium coordinate with its residual |U'(a)|."""

    a: float
    residual: float


def find_equilibrium(spec_onsite: PotentialSpec, seed: float = 0.0) -> Equilibrium:
    """Locate a root of U' by scalar Newton iteration from ``seed``.

    The zero family returns a = 0 by convention. Raises RuntimeError if
    Newton does not reach |U'(a)| <= 1e-12 within 50 iterations.
    """
    if spec_onsite.family == "zero":
        return Equilibrium(0.0, 0.0)
    a = float(seed)
    for _ in range(_NEWTON_MAX_ITER):
        g = evaluate(spec_onsite, 1, a)
        if abs(g) <= EQUILIBRIUM_TOL:
            return Equilibrium(a, abs(g))
        h = evaluate(spec_onsite, 2, a)
        if h == 0.0:
            break
        a -= g / h
    raise RuntimeError(
        f"equilibrium search did not converge from seed {seed} for family {spec_onsite.family}"
    )

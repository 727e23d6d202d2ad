"""Command-line entry point: configuration, orchestration, artifacts.

One JSON config describes the model and solver; each subcommand writes
CSV/JSON artifacts plus a resolved-config echo into the output
directory. Runs are deterministic for a fixed config and seed, and
every artifact carries the config hash and tool version in its header.

Exit codes: 0 success, 2 config error, 3 solver non-convergence,
4 validation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import continuation as ct
from . import cradle as cr
from . import galerkin as gk
from . import homogeneous as hg
from . import spectrum as sp
from . import symmetry as symm
from . import timedomain as td
from .lattice import LatticeModel, build_model
from .potentials import PotentialConfigError, PotentialSpec

__all__ = ["main", "run", "ConfigError", "load_config", "RunConfig"]

OUT_ENV_VAR = "RINGWAVES_OUT"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_VALIDATION = 4


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


class ValidationFailure(RuntimeError):
    """A validation subcommand measured an out-of-tolerance result."""


# ---------------------------------------------------------------------------
# config schema

_POTENTIAL_KEYS = {"family", "omega", "beta", "coefficients"}
_MODEL_KEYS = {"n", "onsite", "coupling", "equilibrium_seed", "zero_mean_mode"}
_SOLVER_KEYS = {"newton_tol", "tail_tol", "l0", "l0_max"}
_BRANCH_KEYS = {
    "k", "family", "r_min", "max_amplitude", "nu_min", "step_budget",
    "step_init", "step_max", "snapshot_every", "twisted",
}
_CRADLE_KEYS = {"nu_values", "groups", "starts_per_dim", "l0", "l0_polish", "radius_range"}
_HOMOG_KEYS = {"grid", "iters", "angles", "energy"}
_VALIDATE_KEYS = {"loop_file", "tol"}
_RESONANCE_KEYS = {"l_max"}
_TOP_KEYS = {"model", "solver", "seed", "branch", "cradle", "homog", "validate", "resonances"}


@dataclass
class RunConfig:
    model: dict
    solver: dict
    seed: int
    branch: dict = field(default_factory=dict)
    cradle: dict = field(default_factory=dict)
    homog: dict = field(default_factory=dict)
    validate: dict = field(default_factory=dict)
    resonances: dict = field(default_factory=dict)

    def resolved(self) -> dict:
        return {
            "model": self.model,
            "solver": self.solver,
            "seed": self.seed,
            "branch": self.branch,
            "cradle": self.cradle,
            "homog": self.homog,
            "validate": self.validate,
            "resonances": self.resonances,
            "tool_version": __version__,
        }


def _reject_unknown(d: dict, allowed: set, where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _potential_from_dict(d: dict, role: str, where: str) -> PotentialSpec:
    if not isinstance(d, dict) or "family" not in d:
        raise ConfigError(f"{where} must be an object with a 'family' key")
    _reject_unknown(d, _POTENTIAL_KEYS, where)
    params = {k: v for k, v in d.items() if k != "family"}
    try:
        return PotentialSpec(d["family"], role, params)
    except PotentialConfigError as err:
        raise ConfigError(f"{where}: {err}") from err


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate the JSON run configuration."""
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError as err:
        raise ConfigError(f"config file not found: {path}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON ({err})") from err
    if not isinstance(raw, dict):
        raise ConfigError("top-level config must be a JSON object")
    _reject_unknown(raw, _TOP_KEYS, "config")
    if "model" not in raw:
        raise ConfigError("config requires a 'model' section")
    model = dict(raw["model"])
    _reject_unknown(model, _MODEL_KEYS, "model")
    for key in ("n", "onsite", "coupling"):
        if key not in model:
            raise ConfigError(f"model requires '{key}'")
    model.setdefault("equilibrium_seed", 0.0)
    model.setdefault("zero_mean_mode", None)

    solver = dict(raw.get("solver", {}))
    _reject_unknown(solver, _SOLVER_KEYS, "solver")
    solver.setdefault("newton_tol", 1e-11)
    solver.setdefault("tail_tol", 1e-8)
    solver.setdefault("l0", None)
    solver.setdefault("l0_max", 128)

    branch = dict(raw.get("branch", {}))
    _reject_unknown(branch, _BRANCH_KEYS, "branch")
    branch.setdefault("k", 1)
    branch.setdefault("family", "T")
    branch.setdefault("r_min", 1e-4)
    branch.setdefault("max_amplitude", 0.25)
    branch.setdefault("nu_min", 1e-3)
    branch.setdefault("step_budget", 500)
    branch.setdefault("step_init", 0.02)
    branch.setdefault("step_max", 0.1)
    branch.setdefault("snapshot_every", 10)
    branch.setdefault("twisted", None)

    cradle_cfg = dict(raw.get("cradle", {}))
    _reject_unknown(cradle_cfg, _CRADLE_KEYS, "cradle")
    cradle_cfg.setdefault("nu_values", [0.98, 1.02])
    cradle_cfg.setdefault("groups", ["S", "St"])
    cradle_cfg.setdefault("starts_per_dim", 8)
    cradle_cfg.setdefault("l0", 16)
    cradle_cfg.setdefault("l0_polish", 48)
    cradle_cfg.setdefault("radius_range", [1e-3, 0.5])

    homog_cfg = dict(raw.get("homog", {}))
    _reject_unknown(homog_cfg, _HOMOG_KEYS, "homog")
    homog_cfg.setdefault("grid", [1e-3, 1e-2, 1e-1, 1.0])
    homog_cfg.setdefault("iters", 10000)
    homog_cfg.setdefault("angles", 8)
    homog_cfg.setdefault("energy", 1.0)

    validate_cfg = dict(raw.get("validate", {}))
    _reject_unknown(validate_cfg, _VALIDATE_KEYS, "validate")
    validate_cfg.setdefault("loop_file", None)
    validate_cfg.setdefault("tol", 1e-10)

    resonance_cfg = dict(raw.get("resonances", {}))
    _reject_unknown(resonance_cfg, _RESONANCE_KEYS, "resonances")
    resonance_cfg.setdefault("l_max", 100)

    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    return RunConfig(model, solver, seed, branch, cradle_cfg, homog_cfg, validate_cfg, resonance_cfg)


def _build_model(cfg: RunConfig) -> LatticeModel:
    m = cfg.model
    onsite = _potential_from_dict(m["onsite"], "onsite", "model.onsite")
    coupling = _potential_from_dict(m["coupling"], "coupling", "model.coupling")
    try:
        return build_model(
            int(m["n"]), onsite, coupling,
            equilibrium_seed=float(m["equilibrium_seed"]),
            zero_mean_mode=m["zero_mean_mode"],
        )
    except (ValueError, RuntimeError) as err:
        raise ConfigError(f"model construction failed: {err}") from err


# ---------------------------------------------------------------------------
# deterministic artifact writers


def _config_hash(cfg: RunConfig) -> str:
    blob = json.dumps(cfg.resolved(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: Path, columns: list[str], rows: list[tuple], cfg_hash: str) -> None:
    lines = [
        f"# tool: ringwaves {__version__}",
        f"# config_sha256: {cfg_hash}",
        ",".join(columns),
    ]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, payload: dict, cfg_hash: str) -> None:
    doc = {"meta": {"tool": "ringwaves", "version": __version__, "config_sha256": cfg_hash}}
    doc.update(payload)
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_dispersion(cfg: RunConfig, out: Path, args) -> int:
    model = _build_model(cfg)
    table = sp.dispersion(model)
    h = _config_hash(cfg)
    rows = [(e.k, e.nu, e.nu_sq, e.bifurcating) for e in table.entries]
    write_csv(out / "dispersion.csv", ["k", "nu_k", "nu_sq", "bifurcating"], rows, h)
    write_json(out / "dispersion.json", {
        "n": model.n,
        "all_equal": table.all_equal,
        "entries": [
            {"k": e.k, "nu": e.nu, "nu_sq": e.nu_sq, "bifurcating": e.bifurcating}
            for e in table.entries
        ],
    }, h)
    return EXIT_OK


def _cmd_resonances(cfg: RunConfig, out: Path, args) -> int:
    model = _build_model(cfg)
    table = sp.dispersion(model)
    h = _config_hash(cfg)
    l_max = int(cfg.resonances["l_max"])
    rows = []
    reports = []
    for e in table.entries:
        if e.k > model.n // 2 or not e.bifurcating:
            continue
        rep = sp.non_resonance_check(model, e.k, l_max)
        reports.append(rep)
        if rep.degenerate:
            rows.append((e.k, e.nu, False, "degenerate", "", ""))
            continue
        if rep.non_resonant:
            rows.append((e.k, e.nu, True, "", "", ""))
        else:
            for (l, j, nu_j, lnu), w in zip(rep.resonant_pairs, rep.resonance_params):
                rows.append((e.k, e.nu, False, l, j, w))
    write_csv(out / "resonances.csv",
              ["k", "nu_k", "non_resonant", "l", "j", "omega_l_j"], rows, h)
    write_json(out / "resonances.json", {
        "reports": [
            {
                "k": r.k,
                "non_resonant": r.non_resonant,
                "degenerate": r.degenerate,
                "pairs": [list(p) for p in r.resonant_pairs],
                "resonance_params": list(r.resonance_params),
            }
            for r in reports
        ]
    }, h)
    return EXIT_OK


def _cmd_fixdim(cfg: RunConfig, out: Path, args) -> int:
    model = _build_model(cfg)
    n = model.n
    h = _config_hash(cfg)
    rows = []
    for label in ("S", "St"):
        H = symm.build_isotropy(label, n, None)
        fb = symm.fixed_space(H, 1)
        expected = symm.expected_standing_dims(n)[0 if label == "S" else 1]
        rows.append((label, "", fb.first_mode_dim, expected))
    for k in range(1, n // 2 + 1):
        fams = ("T",) if 2 * k == n else ("T", "S", "St")
        for label in fams:
            H = symm.build_isotropy(label, n, k)
            rows.append((label, k, symm.first_mode_block_dim(H, k), 1))
    rows.append(("T", n, symm.first_mode_block_dim(symm.build_isotropy("T", n, n), n), 1))
    write_csv(out / "fixdim.csv", ["group", "k", "dim", "expected"], rows, h)
    bad = [r for r in rows if r[2] != r[3]]
    if bad:
        raise ValidationFailure(f"fixed-space dimensions off: {bad}")
    return EXIT_OK


def _branch_task(model, k, family, opts, out, h, snapshot_every):
    br = ct.continue_branch(model, k, family, opts)
    rows = [
        (i, p.r, p.nu, p.sobolev, p.residual, p.sym_residual, p.tail_fraction)
        for i, p in enumerate(br.points)
    ]
    name = f"branch_{family}_k{k}"
    write_csv(out / f"{name}.csv",
              ["index", "r", "nu", "h2_norm", "residual", "sym_residual", "tail"], rows, h)
    snaps = {
        str(i): p.loop.to_json_dict()
        for i, p in enumerate(br.points)
        if i % snapshot_every == 0 or i == len(br.points) - 1
    }
    write_json(out / f"{name}.json", {
        "family": family, "k": k, "onset_nu": br.onset_nu, "twisted": br.twisted,
        "termination": br.termination, "reconnected_nu": br.reconnected_nu,
        "l0_final": br.l0_final, "snapshots": snaps,
    }, h)
    return br


def _cmd_branch(cfg: RunConfig, out: Path, args) -> int:
    model = _build_model(cfg)
    b = cfg.branch
    k = int(args.k if args.k is not None else b["k"])
    family = args.family or b["family"]
    families = [family] if family != "all" else ["T", "S", "St"]
    opts = ct.ContinuationOptions(
        r_min=float(b["r_min"]),
        max_amplitude=float(b["max_amplitude"]),
        nu_min=float(b["nu_min"]),
        step_budget=int(args.steps if args.steps is not None else b["step_budget"]),
        step_init=float(b["step_init"]),
        step_max=float(b["step_max"]),
        l0=cfg.solver["l0"],
        l0_max=int(cfg.solver["l0_max"]),
        tail_tol=float(cfg.solver["tail_tol"]),
        newton_tol=float(cfg.solver["newton_tol"]),
        twisted=b["twisted"],
    )
    h = _config_hash(cfg)
    snap = int(b["snapshot_every"])
    if args.jobs > 1 and len(families) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            futures = [
                pool.submit(_branch_task, model, k, fam, opts, out, h, snap)
                for fam in families
            ]
            for f in futures:
                f.result()
    else:
        for fam in families:
            _branch_task(model, k, fam, opts, out, h, snap)
    return EXIT_OK


def _cmd_validate(cfg: RunConfig, out: Path, args) -> int:
    model = _build_model(cfg)
    loop_file = args.loop or cfg.validate["loop_file"]
    if loop_file is None:
        raise ConfigError("validate requires a loop file (--loop or validate.loop_file)")
    try:
        doc = json.loads(Path(loop_file).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read loop file: {err}") from err
    loop = gk.LoopState.from_json_dict(doc.get("loop", doc))
    rep = td.verify_periodicity(model, loop, tol=float(cfg.validate["tol"]))
    h = _config_hash(cfg)
    write_json(out / "validate.json", {
        "loop_residual": rep.loop_residual,
        "return_distance": rep.return_distance,
        "max_deviation": rep.max_deviation,
        "energy_drift": rep.energy_drift,
        "period": rep.period,
        "passed": rep.passed,
    }, h)
    if not rep.passed:
        raise ValidationFailure(
            f"periodicity check failed: return distance {rep.return_distance:.3e}, "
            f"energy drift {rep.energy_drift:.3e}"
        )
    return EXIT_OK


def _cmd_cradle(cfg: RunConfig, out: Path, args) -> int:
    model = _build_model(cfg)
    c = cfg.cradle
    nus = [float(args.nu)] if args.nu is not None else [float(v) for v in c["nu_values"]]
    opts = cr.CradleSearchOptions(
        seed=args.seed if args.seed is not None else cfg.seed,
        starts_per_dim=int(c["starts_per_dim"]),
        l0=int(c["l0"]),
        l0_polish=int(c["l0_polish"]),
        radius_range=tuple(float(v) for v in c["radius_range"]),
    )
    h = _config_hash(cfg)
    report = []
    snapshots = {}
    for label in c["groups"]:
        H = cr.standing_group(model, label)
        for nu in nus:
            cs = cr.critical_points(model, H, nu, opts)
            for p in cs.points:
                key = f"{label}_nu{nu:g}_{p.orbit_id}"
                snapshots[key] = p.loop.to_json_dict()
            report.append({
                "group": label, "twisted": H.twisted, "nu": nu, "side": cs.side,
                "count": cs.count,
                "points": [
                    {
                        "orbit_id": p.orbit_id,
                        "value": p.value,
                        "gradient_norm": p.gradient_norm,
                        "full_residual": p.full_residual,
                        "amplitude": float(np.linalg.norm(p.u1)),
                    }
                    for p in cs.points
                ],
            })
    total = sum(r["count"] for r in report)
    write_json(out / "cradle.json", {
        "total_distinct": total, "required_minimum": max(0, -(-(model.n - 2) // 2)),
        "searches": report, "snapshots": snapshots,
    }, h)
    return EXIT_OK


def _cmd_homog(cfg: RunConfig, out: Path, args) -> int:
    hc = cfg.homog
    grid = [float(g) for g in (args.grid.split(",") if args.grid else hc["grid"])]
    iters = int(args.iters if args.iters is not None else hc["iters"])
    energy = float(args.energy if args.energy is not None else hc["energy"])
    h = _config_hash(cfg)
    rows = hg.orbit_scan(grid, iters, n_angles=int(hc["angles"]))
    write_csv(out / "homog_scan.csv", ["seed_a", "seed_b", "max_radius", "escaped"], rows, h)
    orbit = hg.sample_scalar_orbit(energy)
    write_csv(out / "homog_orbit.csv", ["t", "q"],
              list(zip(orbit.times, orbit.q)), h)
    write_json(out / "homog.json", {
        "energy": energy,
        "period_integrated": orbit.period,
        "period_quadrature": hg.scalar_period(energy),
    }, h)
    return EXIT_OK


_COMMANDS = {
    "dispersion": _cmd_dispersion,
    "resonances": _cmd_resonances,
    "fixdim": _cmd_fixdim,
    "branch": _cmd_branch,
    "validate": _cmd_validate,
    "cradle": _cmd_cradle,
    "homog": _cmd_homog,
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ringwaves",
        description="Periodic traveling and standing waves on oscillator rings",
    )
    p.add_argument("command", choices=sorted(_COMMANDS))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", default=None, help=f"output directory (or ${OUT_ENV_VAR})")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--k", type=int, default=None, help="mode number (branch)")
    p.add_argument("--family", default=None, choices=["T", "S", "St", "all"])
    p.add_argument("--nu", type=float, default=None, help="frequency (cradle)")
    p.add_argument("--steps", type=int, default=None, help="step budget (branch)")
    p.add_argument("--grid", default=None, help="comma-separated seed radii (homog)")
    p.add_argument("--iters", type=int, default=None, help="map iterations (homog)")
    p.add_argument("--energy", type=float, default=None, help="scalar orbit energy (homog)")
    p.add_argument("--loop", default=None, help="loop JSON to validate")
    return p


def run(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        out = Path(args.out or os.environ.get(OUT_ENV_VAR, "out"))
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "resolved_config.json", {"config": cfg.resolved()}, _config_hash(cfg))
        return _COMMANDS[args.command](cfg, out, args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (ct.InitialCorrectorError, ct.ResonantModeError, ct.DegenerateSpectrumError,
            gk.SlaveDivergence, gk.TruncationError, cr.DegenerateModelError) as err:
        print(f"solver error: {err}", file=sys.stderr)
        return EXIT_SOLVER
    except ValidationFailure as err:
        print(f"validation failure: {err}", file=sys.stderr)
        return EXIT_VALIDATION


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Run configuration, orchestration of single runs and eps-sweeps, persistence.

Configs are YAML (nested key-value); every output file embeds a hash of the
resolved config plus the standing limitation warnings (periodic-torus
surrogate, acoustic wrap-around).  Diagnostics go to CSV with a fixed column
order, sweep summaries to JSON, field snapshots to the binary container.
Identical config and seed reproduce bit-identical outputs on one platform.

Per-eps runs of a sweep are independent and may execute in parallel; the
LOWMACH_WORKERS environment variable caps the worker count.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .compressible import CompressibleState, run as run_compressible_solver
from .compressible import wraparound_time
from .diagnostics import (
    CSV_COLUMNS,
    OrderFit,
    SweepResult,
    convergence_metrics,
    coupling_cancellation_residual,
    identity112_residual,
    observe_compressible,
)
from .eos import EosParams
from .incompressible import run as run_incompressible_solver
from .initial_data import (
    DataRecipe,
    make_compressible_data,
    make_limit_data,
    solenoidal_core_state,
)
from .integrate import Trajectory
from .snapshots import compressible_to_records, write_snapshot
from .spectral import GridSpec

__all__ = [
    "ConfigError",
    "RunConfig",
    "default_config",
    "load_config",
    "config_to_dict",
    "config_from_dict",
    "config_hash",
    "TORUS_WARNING",
    "write_diagnostics_csv",
    "cmd_run_compressible",
    "cmd_run_incompressible",
    "cmd_sweep",
    "cmd_check_identities",
    "sweep_result_to_dict",
]

WORKERS_ENV = "LOWMACH_WORKERS"

TORUS_WARNING = (
    "periodic-torus surrogate: whole-space decay hypotheses are replaced by a "
    "compactly supported entropy perturbation; strong convergence of the velocity "
    "for general data is not expected on the torus"
)


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Everything one run or sweep needs; defaults are the desk-scale setup."""

    grid: GridSpec
    eos: EosParams
    recipe: DataRecipe
    eps_list: tuple[float, ...] = (0.2, 0.1, 0.05, 0.025)
    T: float = 0.5
    cfl: float = 0.4
    observer_cadence: int = 4
    tol_elliptic: float = 1e-10
    out_dir: str = "out"
    seed: int = 0
    sample_count: int = 65
    save_snapshots: bool = False

    def __post_init__(self) -> None:
        if len(self.eps_list) == 0:
            raise ConfigError("eps_list must be nonempty")
        if any(not 0.0 < e <= 1.0 for e in self.eps_list):
            raise ConfigError("every eps must lie in (0, 1]")
        if any(a <= b for a, b in zip(self.eps_list, self.eps_list[1:])):
            raise ConfigError("eps_list must be strictly decreasing")
        if not self.T > 0.0:
            raise ConfigError("T must be positive")
        if not 0.0 < self.cfl < 1.0:
            raise ConfigError("cfl must lie in (0, 1)")
        if self.sample_count < 2:
            raise ConfigError("sample_count must be >= 2")
        if self.observer_cadence < 1:
            raise ConfigError("observer_cadence must be >= 1")


def default_config(**overrides: Any) -> RunConfig:
    base = RunConfig(
        grid=GridSpec(dim=2, n=64, length=2.0 * np.pi),
        eos=EosParams(gamma=1.4, p_bar=1.0),
        recipe=DataRecipe(),
    )
    return replace(base, **overrides) if overrides else base


# -- config (de)serialisation ----------------------------------------------------


def config_to_dict(config: RunConfig) -> dict[str, Any]:
    out = asdict(config)
    out["eps_list"] = list(config.eps_list)
    return out


def config_from_dict(data: dict[str, Any]) -> RunConfig:
    data = dict(data)
    known = {
        "grid",
        "eos",
        "recipe",
        "eps_list",
        "T",
        "cfl",
        "observer_cadence",
        "tol_elliptic",
        "out_dir",
        "seed",
        "sample_count",
        "save_snapshots",
    }
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        grid = GridSpec(**data.pop("grid", {"dim": 2, "n": 64}))
        eos = EosParams(**data.pop("eos", {}))
        recipe_raw = dict(data.pop("recipe", {}))
        recipe_raw.setdefault("seed", int(data.get("seed", 0)))
        recipe = DataRecipe(**recipe_raw)
        eps_list = tuple(float(e) for e in data.pop("eps_list", (0.2, 0.1, 0.05, 0.025)))
        return RunConfig(grid=grid, eos=eos, recipe=recipe, eps_list=eps_list, **data)
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err)) from err


def load_config(path: str | Path) -> RunConfig:
    """Parse a YAML config file; missing keys fall back to the defaults."""
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(data)


def config_hash(config: RunConfig) -> str:
    canon = json.dumps(config_to_dict(config), sort_keys=True)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


# -- output files -----------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_diagnostics_csv(
    path: str | Path,
    traj: Trajectory,
    header_meta: dict[str, str],
    warnings: list[str],
) -> None:
    """CSV with comment header lines, then the fixed column order."""
    lines = ["# lowmach diagnostics v1"]
    for key, value in header_meta.items():
        lines.append(f"# {key}={value}")
    for w in warnings:
        lines.append(f"# warning: {w}")
    lines.append(",".join(CSV_COLUMNS))
    for rec in traj.records:
        lines.append(",".join(_fmt(v) for v in rec.as_row()))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _snapshot_grid(config: RunConfig) -> np.ndarray:
    return np.linspace(0.0, config.T, config.sample_count)


def _run_warnings(config: RunConfig, state0: CompressibleState) -> list[str]:
    warnings = [TORUS_WARNING]
    t_wrap = wraparound_time(state0, config.eos)
    if config.T > t_wrap:
        warnings.append(
            f"horizon T={config.T:.6g} exceeds acoustic wrap-around time "
            f"{t_wrap:.6g} at eps={state0.eps}"
        )
    return warnings


def _write_meta(path: Path, payload: dict[str, Any]) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def run_one_compressible(
    config: RunConfig, eps: float, out_dir: Path | None = None
) -> tuple[Trajectory, list[str]]:
    """Build data for one eps, integrate, and persist CSV/meta/snapshots."""
    state0 = make_compressible_data(config.recipe, eps, config.grid, config.eos)
    warnings = _run_warnings(config, state0)
    traj = run_compressible_solver(
        state0,
        config.T,
        config.cfl,
        config.eos,
        observer_cadence=config.observer_cadence,
        snapshot_times=_snapshot_grid(config),
    )
    warnings.extend(traj.warnings)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        meta = {
            "config_hash": config_hash(config),
            "eps": eps,
            "complete": traj.complete,
            "steps": traj.steps,
            "initial_sobolev4": observe_compressible(state0, config.eos).sobolev4,
            "warnings": warnings,
        }
        write_diagnostics_csv(
            out_dir / "diagnostics.csv",
            traj,
            {"config_hash": meta["config_hash"], "eps": _fmt(eps)},
            warnings,
        )
        _write_meta(out_dir / "meta.json", meta)
        if config.save_snapshots:
            for i, snap in enumerate(traj.snapshots):
                write_snapshot(
                    out_dir / f"snapshot_{i:04d}.lmsnap",
                    compressible_to_records(snap),
                )
    return traj, warnings


def reference_state(config: RunConfig):
    """Limit-system initial data for the sweep reference.

    Well-prepared recipes filter the smallest-eps compressible data; general
    recipes use the solenoidal core of the recipe (their acoustic components
    have no incompressible counterpart).
    """
    if config.recipe.kind == "well_prepared":
        comp0 = make_compressible_data(
            config.recipe, min(config.eps_list), config.grid, config.eos
        )
        return make_limit_data(comp0, config.eos, tol=config.tol_elliptic)
    return solenoidal_core_state(
        config.recipe, config.grid, config.eos, tol=config.tol_elliptic
    )


def run_reference(config: RunConfig, out_dir: Path | None = None) -> Trajectory:
    state0 = reference_state(config)
    traj = run_incompressible_solver(
        state0,
        config.T,
        config.cfl,
        config.eos,
        observer_cadence=config.observer_cadence,
        snapshot_times=_snapshot_grid(config),
        tol=config.tol_elliptic,
    )
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_diagnostics_csv(
            out_dir / "diagnostics.csv",
            traj,
            {"config_hash": config_hash(config), "eps": "0 (limit system)"},
            [TORUS_WARNING] + traj.warnings,
        )
        _write_meta(
            out_dir / "meta.json",
            {
                "config_hash": config_hash(config),
                "system": "incompressible-limit",
                "complete": traj.complete,
                "steps": traj.steps,
                "warnings": [TORUS_WARNING] + traj.warnings,
            },
        )
    return traj


# -- commands ---------------------------------------------------------------------


def cmd_run_compressible(config: RunConfig) -> Path:
    """Single-eps compressible run; writes diagnostics CSV and meta.json."""
    if len(config.eps_list) != 1:
        raise ConfigError(
            "run-compressible needs exactly one eps; narrow eps_list or pass "
            "--eps-override"
        )
    eps = config.eps_list[0]
    out = Path(config.out_dir) / f"run_eps{eps:g}"
    run_one_compressible(config, eps, out)
    return out


def cmd_run_incompressible(config: RunConfig) -> Path:
    """Reference (limit-system) run; writes diagnostics CSV and meta.json."""
    out = Path(config.out_dir) / "reference"
    run_reference(config, out)
    return out


def _sweep_worker(config_dict: dict[str, Any], eps: float):
    config = config_from_dict(config_dict)
    out = Path(config.out_dir) / f"run_eps{eps:g}"
    try:
        traj, warnings = run_one_compressible(config, eps, out)
        return eps, traj, warnings, None
    except Exception as err:  # noqa: BLE001 - per-eps failures must not kill the sweep
        return eps, None, [], f"{type(err).__name__}: {err}"


def _worker_count(n_jobs: int) -> int:
    env = os.environ.get(WORKERS_ENV, "")
    if env.strip():
        return max(1, int(env))
    return max(1, min(n_jobs, os.cpu_count() or 1))


def cmd_sweep(config: RunConfig) -> SweepResult:
    """Run every eps plus the reference, compare, and write sweep.json."""
    if len(config.eps_list) < 2:
        raise ConfigError("sweep needs >= 2 eps values")
    out_root = Path(config.out_dir)
    out_root.mkdir(parents=True, exist_ok=True)

    ref = run_reference(config, out_root / "reference")

    trajs: dict[float, Trajectory] = {}
    sweep_warnings: list[str] = [TORUS_WARNING]
    workers = _worker_count(len(config.eps_list))
    results = []
    if workers == 1:
        for eps in config.eps_list:
            results.append(_sweep_worker(config_to_dict(config), eps))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_sweep_worker, config_to_dict(config), eps)
                for eps in config.eps_list
            ]
            results = [f.result() for f in futures]
    for eps, traj, warnings, error in results:
        if error is not None:
            sweep_warnings.append(f"eps={eps}: failed: {error}")
            continue
        trajs[eps] = traj
        for w in warnings:
            if w != TORUS_WARNING:
                sweep_warnings.append(f"eps={eps}: {w}")

    result = convergence_metrics(
        trajs,
        ref,
        config.grid,
        config.eos,
        min_points_for_orders=3,
    )
    result.warnings = sweep_warnings + result.warnings
    payload = sweep_result_to_dict(result)
    payload["config_hash"] = config_hash(config)
    payload["config"] = config_to_dict(config)
    (out_root / "sweep.json").write_text(
        json.dumps(payload, indent=2) + "\n", encoding="utf-8"
    )
    return result


def sweep_result_to_dict(result: SweepResult) -> dict[str, Any]:
    def order_dict(fit: OrderFit) -> dict[str, Any]:
        return {
            "order": fit.order,
            "fit_residual": fit.fit_residual,
            "points": fit.points,
            "reliable": fit.reliable,
            "note": fit.note,
        }

    return {
        "eps_list": list(result.eps_list),
        "completed": list(result.completed),
        "per_eps": {_fmt(e): v for e, v in result.per_eps.items()},
        "errors_vs_ref": {
            metric: {_fmt(e): v for e, v in table.items()}
            for metric, table in result.errors_vs_ref.items()
        },
        "orders": {m: order_dict(f) for m, f in result.orders.items()},
        "warnings": list(result.warnings),
    }


# -- identity suite -----------------------------------------------------------------


def cmd_check_identities(
    grid: GridSpec | None = None,
    seed: int = 0,
    n_fields: int = 100,
    threshold: float = 1e-10,
) -> dict[str, Any]:
    """Residuals of the structural identities over seeded random fields.

    Checks, per field draw: skew-adjointness <grad q, u> + <q, div u> = 0,
    curl(grad q) = 0, div(curl .) = 0, the induction expansion against the
    direct curl, and the integrated magnetic coupling cancellation.  All
    residuals are relative; the report is deterministic per seed.
    """
    grid = grid or GridSpec(dim=2, n=64)
    rng = np.random.default_rng(seed)
    worst: dict[str, float] = {
        "skew_adjoint": 0.0,
        "curl_grad": 0.0,
        "div_curl": 0.0,
        "induction_expansion": 0.0,
        "coupling": 0.0,
    }
    for _ in range(n_fields):
        q = grid.dealias(rng.standard_normal(grid.shape))
        u = grid.dealias(rng.standard_normal((grid.dim,) + grid.shape))
        H = grid.solenoidal_project(
            grid.dealias(rng.standard_normal((grid.dim,) + grid.shape))
        )
        gq = grid.grad(q)
        du = grid.div(u)
        skew = abs(grid.inner(gq, u) + grid.inner(q, du))
        scale = grid.l2_norm(gq) * grid.l2_norm(u) + grid.l2_norm(q) * grid.l2_norm(du)
        worst["skew_adjoint"] = max(worst["skew_adjoint"], skew / max(scale, 1e-300))

        cg_field = grid.curl(gq)
        worst["curl_grad"] = max(
            worst["curl_grad"], grid.l2_norm(cg_field) / max(grid.l2_norm(gq), 1e-300)
        )

        if grid.dim == 2:
            dc = grid.div(grid.curl(q))  # scalar q plays the out-of-plane component
            dc_scale = grid.sobolev_norm(q, 1.0)
        else:
            cu = grid.curl(u)
            dc = grid.div(cu)
            dc_scale = grid.sobolev_norm(u, 1.0)
        worst["div_curl"] = max(worst["div_curl"], grid.l2_norm(dc) / max(dc_scale, 1e-300))

        worst["induction_expansion"] = max(
            worst["induction_expansion"], identity112_residual(u, H, grid)
        )
        worst["coupling"] = max(
            worst["coupling"], coupling_cancellation_residual(u, H, grid)
        )

    passed = {name: value <= threshold for name, value in worst.items()}
    return {
        "grid": {"dim": grid.dim, "n": grid.n, "length": grid.length},
        "seed": seed,
        "n_fields": n_fields,
        "threshold": threshold,
        "max_residuals": worst,
        "passed": passed,
        "all_passed": all(passed.values()),
    }

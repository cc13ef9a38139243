"""Observers: energies, Sobolev proxies, identity residuals, and sweep metrics.

The quantities tracked here are the numerical stand-ins for the structural
facts behind the uniform bounds and the singular limit:

* the quadratic energy int(a q^2 + r |u|^2 + |H|^2) whose eps-uniform growth
  reflects the skew-adjoint cancellation of the 1/eps terms;
* the discrete H^4 norm of (S, q, u, H), the sup of which plays the role of
  the existence-interval bound;
* residuals of the exact discrete identities (magnetic coupling, induction
  expansion, div H);
* the second-order acoustic wave operator eps^2 d_t(a d_t q) - div(grad q / r)
  and its forcing F, whose decay in eps drives the fast-wave analysis;
* cross-eps error metrics against the incompressible reference and their
  least-squares convergence orders.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .compressible import (
    CompressibleState,
    _advect,
    faraday,
    faraday_expanded,
    lorentz_force,
)
from .eos import EosParams, coeff_a, coeff_r, density, r0
from .incompressible import IncompressibleState, mhd_energy
from .integrate import Trajectory
from .spectral import GridSpec

__all__ = [
    "CSV_COLUMNS",
    "DiagnosticsRecord",
    "quadratic_energy",
    "total_energy",
    "coupling_cancellation_residual",
    "identity112_residual",
    "divergence_residual",
    "curl_r0u",
    "observe_compressible",
    "observe_incompressible",
    "acoustic_residual",
    "acoustic_forcing",
    "acoustic_forcing_history",
    "linear_growth_constant",
    "fit_order",
    "OrderFit",
    "SweepResult",
    "convergence_metrics",
]

_FLOOR = 1e-300

CSV_COLUMNS = (
    "t",
    "quad_energy",
    "sobolev4",
    "l2_q",
    "l2_divu",
    "curl_r0u_norm",
    "coupling_residual",
    "identity112_residual",
    "divH_residual",
    "total_energy",
)


@dataclass
class DiagnosticsRecord:
    """One row of the run CSV; field order matches CSV_COLUMNS."""

    t: float
    quad_energy: float
    sobolev4: float
    l2_q: float
    l2_divu: float
    curl_r0u_norm: float
    coupling_residual: float
    identity112_residual: float
    divH_residual: float
    total_energy: float

    def as_row(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in CSV_COLUMNS)

    def validate(self) -> None:
        row = self.as_row()
        if not all(np.isfinite(row)):
            raise ValueError(f"non-finite diagnostics entry: {row}")


# -- pointwise functionals ---------------------------------------------------


def quadratic_energy(state: CompressibleState, params: EosParams) -> float:
    """int (a q^2 + r |u|^2 + |H|^2) dx with pointwise coefficients."""
    g = state.grid
    a = np.broadcast_to(
        np.asarray(coeff_a(state.S, state.eps * state.q, params)), g.shape
    )
    r = coeff_r(state.S, state.eps * state.q, params)
    dens = a * state.q**2 + r * np.sum(state.u**2, axis=0) + np.sum(state.H**2, axis=0)
    return g.integral(dens)


def total_energy(state: CompressibleState, params: EosParams) -> float:
    """Conserved physical energy reconstructed from the scaled variables.

    p = p_bar e^{eps q}, rho = R(S, p), e = p / ((gamma - 1) rho); the scaled
    velocity and magnetic field re-enter with the eps^2 of the change of
    variables: int [rho (e + eps^2 |u|^2 / 2) + eps^2 |H|^2 / 2] dx.
    """
    g = state.grid
    p = params.p_bar * np.exp(state.eps * state.q)
    rho = density(state.S, p, params)
    e = p / ((params.gamma - 1.0) * rho)
    eps2 = state.eps**2
    dens = rho * (e + 0.5 * eps2 * np.sum(state.u**2, axis=0)) + 0.5 * eps2 * np.sum(
        state.H**2, axis=0
    )
    return g.integral(dens)


def coupling_cancellation_residual(
    u: np.ndarray, H: np.ndarray, grid: GridSpec
) -> float:
    """|int (curl H x H) . u + int curl(u x H) . H| relative to its scale.

    Exact to roundoff on dealiased fields: the integrands cancel through the
    pointwise triple product and one spectral integration by parts.
    """
    t1 = grid.inner(lorentz_force(H, grid), u)
    t2 = grid.inner(faraday(u, H, grid), H)
    scale = grid.l2_norm(u) * grid.l2_norm(H) * grid.sobolev_norm(H, 1.0)
    return abs(t1 + t2) / max(scale, _FLOOR)


def identity112_residual(u: np.ndarray, H: np.ndarray, grid: GridSpec) -> float:
    """Relative disagreement of the two induction forms (direct vs expanded)."""
    direct = faraday(u, H, grid)
    expanded = faraday_expanded(u, H, grid)
    scale = max(grid.l2_norm(direct), grid.l2_norm(expanded), _FLOOR)
    return grid.l2_norm(direct - expanded) / scale


def divergence_residual(H: np.ndarray, grid: GridSpec) -> float:
    """||div H||_2 relative to ||H||_{H^1}."""
    return grid.l2_norm(grid.div(H)) / max(grid.sobolev_norm(H, 1.0), _FLOOR)


def curl_r0u(
    S: np.ndarray, u: np.ndarray, grid: GridSpec, params: EosParams
) -> tuple[np.ndarray, float]:
    """curl(r0(S) u) and its H^3 norm, the weighted-vorticity observable."""
    field = grid.curl(np.asarray(r0(S, params)) * u)
    return field, grid.sobolev_norm(field, 3.0)


def observe_compressible(
    state: CompressibleState, params: EosParams
) -> DiagnosticsRecord:
    g = state.grid
    sob4 = (
        g.sobolev_norm(state.S, 4.0)
        + g.sobolev_norm(state.q, 4.0)
        + g.sobolev_norm(state.u, 4.0)
        + g.sobolev_norm(state.H, 4.0)
    )
    _, curl_norm = curl_r0u(state.S, state.u, g, params)
    return DiagnosticsRecord(
        t=state.t,
        quad_energy=quadratic_energy(state, params),
        sobolev4=sob4,
        l2_q=g.l2_norm(state.q),
        l2_divu=g.l2_norm(g.div(state.u)),
        curl_r0u_norm=curl_norm,
        coupling_residual=coupling_cancellation_residual(state.u, state.H, g),
        identity112_residual=identity112_residual(state.u, state.H, g),
        divH_residual=divergence_residual(state.H, g),
        total_energy=total_energy(state, params),
    )


def observe_incompressible(
    state: IncompressibleState, params: EosParams
) -> DiagnosticsRecord:
    """Same schema for limit-system runs; l2_q is identically zero there."""
    g = state.grid
    r0_field = np.asarray(r0(state.Sbar, params))
    quad = g.integral(
        r0_field * np.sum(state.v**2, axis=0) + np.sum(state.Hbar**2, axis=0)
    )
    sob4 = (
        g.sobolev_norm(state.Sbar, 4.0)
        + g.sobolev_norm(state.v, 4.0)
        + g.sobolev_norm(state.Hbar, 4.0)
    )
    _, curl_norm = curl_r0u(state.Sbar, state.v, g, params)
    return DiagnosticsRecord(
        t=state.t,
        quad_energy=quad,
        sobolev4=sob4,
        l2_q=0.0,
        l2_divu=g.l2_norm(g.div(state.v)),
        curl_r0u_norm=curl_norm,
        coupling_residual=coupling_cancellation_residual(state.v, state.Hbar, g),
        identity112_residual=identity112_residual(state.v, state.Hbar, g),
        divH_residual=divergence_residual(state.Hbar, g),
        total_energy=mhd_energy(state, params),
    )


# -- acoustic wave structure ---------------------------------------------------


def _coeffs(state: CompressibleState, params: EosParams):
    a = np.broadcast_to(
        np.asarray(coeff_a(state.S, state.eps * state.q, params)), state.grid.shape
    )
    r = coeff_r(state.S, state.eps * state.q, params)
    return a, r


def _advective_term(state: CompressibleState, params: EosParams) -> np.ndarray:
    """a * dealiased (u . grad) q, the transported part of a d_t q."""
    a, _ = _coeffs(state, params)
    return a * _advect(state.grid, state.u, state.q)


def acoustic_forcing(
    prev: CompressibleState,
    mid: CompressibleState,
    nxt: CompressibleState,
    dt: float,
    params: EosParams,
) -> np.ndarray:
    """Right side F of the second-order wave form of the fast dynamics.

    F = eps div((u.grad)u) - eps div((curl H x H)/r) - eps^2 d_t(a (u.grad)q),
    with the time derivative centred over the three states.  The terms mirror
    the tendency assembly (dealiased products, pointwise coefficient
    divisions) so that for an integrated trajectory the wave identity holds
    up to the time-sampling error.
    """
    g = mid.grid
    eps = mid.eps
    _a, r = _coeffs(mid, params)
    adv_u = _advect(g, mid.u, mid.u)
    term1 = eps * g.div(adv_u)
    term2 = -eps * g.div(lorentz_force(mid.H, g) / r)
    d_adv = (_advective_term(nxt, params) - _advective_term(prev, params)) / (2.0 * dt)
    term3 = -(eps**2) * d_adv
    return term1 + term2 + term3


def acoustic_residual(
    prev: CompressibleState,
    mid: CompressibleState,
    nxt: CompressibleState,
    dt: float,
    params: EosParams,
) -> float:
    """Relative residual of eps^2 d_t(a d_t q) - div(grad q / r) = F.

    Time derivatives are centred differences over three equispaced states;
    spatial operators are spectral.  Normalised by ||q||_{H^2} at the middle
    time.  Shrinks at O(dt^2) in the sampling interval.
    """
    g = mid.grid
    eps = mid.eps
    a_prev, _ = _coeffs(prev, params)
    a_mid, r_mid = _coeffs(mid, params)
    a_next, _ = _coeffs(nxt, params)
    w_plus = 0.5 * (a_next + a_mid) * (nxt.q - mid.q) / dt
    w_minus = 0.5 * (a_mid + a_prev) * (mid.q - prev.q) / dt
    lhs = eps**2 * (w_plus - w_minus) / dt - g.div(g.grad(mid.q) / r_mid)
    F = acoustic_forcing(prev, mid, nxt, dt, params)
    return g.l2_norm(lhs - F) / max(g.sobolev_norm(mid.q, 2.0), _FLOOR)


def acoustic_forcing_history(
    traj: Trajectory, params: EosParams
) -> tuple[np.ndarray, np.ndarray]:
    """(times, ||F||_2) at the interior snapshot times of a trajectory.

    Requires at least three snapshots on a uniform time grid.
    """
    times = np.asarray(traj.snapshot_times)
    if len(times) < 3:
        raise ValueError("acoustic_forcing_history needs >= 3 snapshots")
    steps = np.diff(times)
    if np.max(np.abs(steps - steps[0])) > 1e-8 * max(steps[0], 1e-300):
        raise ValueError("snapshot times must be uniformly spaced")
    dt = float(steps[0])
    grid = traj.snapshots[0].grid
    out_t, out_f = [], []
    for i in range(1, len(times) - 1):
        F = acoustic_forcing(
            traj.snapshots[i - 1], traj.snapshots[i], traj.snapshots[i + 1], dt, params
        )
        out_t.append(times[i])
        out_f.append(grid.l2_norm(F))
    return np.array(out_t), np.array(out_f)


# -- sweep metrics -------------------------------------------------------------


def linear_growth_constant(times: np.ndarray, values: np.ndarray) -> float:
    """Smallest C with Q(t) <= Q(0) * (1 + C * t) over the samples.

    One-sided, matching the linear-in-time upper bound of the energy
    estimate; downward drift does not contribute.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if values[0] <= 0.0:
        raise ValueError("linear_growth_constant needs a positive initial value")
    mask = times > 0.0
    if not np.any(mask):
        return 0.0
    excess = np.maximum(values[mask] - values[0], 0.0)
    return float(np.max(excess / (values[0] * times[mask])))


@dataclass
class OrderFit:
    """Least-squares slope of log(err) against log(eps)."""

    order: float | None
    fit_residual: float | None
    points: int
    reliable: bool
    note: str = ""


def fit_order(
    eps_values: Sequence[float],
    errors: Sequence[float],
    residual_threshold: float = 0.3,
) -> OrderFit:
    """Fit err ~ C * eps^p in log space; flags degenerate or poor fits.

    Zero or non-finite errors are dropped (an exactly-zero error has no
    log-space image; a sweep of zeros reports an undefined order).
    """
    eps_arr = np.asarray(eps_values, dtype=float)
    err_arr = np.asarray(errors, dtype=float)
    keep = np.isfinite(err_arr) & (err_arr > 0.0) & np.isfinite(eps_arr)
    eps_arr, err_arr = eps_arr[keep], err_arr[keep]
    if len(eps_arr) < 2:
        return OrderFit(None, None, int(len(eps_arr)), False, "undefined (0/0)")
    log_e, log_err = np.log(eps_arr), np.log(err_arr)
    slope, intercept = np.polyfit(log_e, log_err, 1)
    resid = float(np.sqrt(np.mean((log_err - (slope * log_e + intercept)) ** 2)))
    reliable = resid <= residual_threshold
    note = "" if reliable else "order unreliable"
    return OrderFit(float(slope), resid, int(len(eps_arr)), reliable, note)


@dataclass
class SweepResult:
    """Cross-eps summary: per-run diagnostics, reference errors, fitted orders."""

    eps_list: list[float]
    completed: list[float]
    per_eps: dict[float, dict[str, float]]
    errors_vs_ref: dict[str, dict[float, float]]
    orders: dict[str, OrderFit] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


_ERROR_METRICS = ("l2t_q", "l2t_divu", "linf_u", "linf_H", "linf_S")


def _time_l2(times: np.ndarray, norms: np.ndarray) -> float:
    return float(np.sqrt(np.trapezoid(np.asarray(norms) ** 2, np.asarray(times))))


def convergence_metrics(
    comp_trajs: dict[float, Trajectory],
    ref: Trajectory,
    grid: GridSpec,
    params: EosParams,
    order_metrics: Sequence[str] = _ERROR_METRICS,
    min_points_for_orders: int = 2,
) -> SweepResult:
    """Error metrics per eps against the incompressible reference, plus orders.

    All trajectories must share the snapshot time grid and the spatial grid.
    Incomplete runs are excluded from the error table and noted in warnings.
    L^2-in-time metrics use the trapezoid rule on the observer cadence; the
    sup-in-time field errors compare snapshots at the shared times.
    """
    eps_list = sorted(comp_trajs, reverse=True)
    ref_times = np.asarray(ref.snapshot_times)
    result = SweepResult(
        eps_list=eps_list,
        completed=[],
        per_eps={},
        errors_vs_ref={m: {} for m in _ERROR_METRICS},
    )
    for eps in eps_list:
        traj = comp_trajs[eps]
        if not traj.complete:
            result.warnings.append(f"eps={eps}: run incomplete, excluded")
            continue
        times = np.asarray(traj.snapshot_times)
        if len(times) != len(ref_times) or np.max(np.abs(times - ref_times)) > 1e-9:
            raise ValueError(f"eps={eps}: snapshot time grid differs from reference")
        for snap in traj.snapshots:
            if snap.grid.shape != grid.shape:
                raise ValueError("snapshot grid differs from sweep grid")
        result.completed.append(eps)

        t_rec = traj.time_array
        summary = {
            "sup_sobolev4": float(np.max(traj.column("sobolev4"))),
            "quad_growth_const": linear_growth_constant(
                t_rec, traj.column("quad_energy")
            ),
            "max_divH_residual": float(np.max(traj.column("divH_residual"))),
            "max_coupling_residual": float(np.max(traj.column("coupling_residual"))),
        }
        try:
            _, f_norms = acoustic_forcing_history(traj, params)
            f_times = np.asarray(traj.snapshot_times)[1:-1]
            summary["forcing_l2"] = _time_l2(f_times, f_norms)
        except ValueError:
            pass
        result.per_eps[eps] = summary

        result.errors_vs_ref["l2t_q"][eps] = _time_l2(t_rec, traj.column("l2_q"))
        result.errors_vs_ref["l2t_divu"][eps] = _time_l2(t_rec, traj.column("l2_divu"))
        err_u = err_h = err_s = 0.0
        for comp, lim in zip(traj.snapshots, ref.snapshots):
            err_u = max(err_u, grid.l2_norm(comp.u - lim.v))
            err_h = max(err_h, grid.l2_norm(comp.H - lim.Hbar))
            err_s = max(err_s, grid.l2_norm(comp.S - lim.Sbar))
        result.errors_vs_ref["linf_u"][eps] = err_u
        result.errors_vs_ref["linf_H"][eps] = err_h
        result.errors_vs_ref["linf_S"][eps] = err_s

    if len(result.completed) >= min_points_for_orders:
        for metric in order_metrics:
            table = result.errors_vs_ref.get(metric, {})
            pts = [(e, table[e]) for e in result.completed if e in table]
            if len(pts) >= 2:
                result.orders[metric] = fit_order(
                    [p[0] for p in pts], [p[1] for p in pts]
                )
    return result

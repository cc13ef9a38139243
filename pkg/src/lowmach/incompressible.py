"""Variable-density incompressible ideal MHD: the eps -> 0 limit system.

Unknowns are a divergence-free velocity v, divergence-free magnetic field
Hbar, entropy Sbar, and the pressure pi, with the density entering only
through r0(Sbar):

    r0 (dv/dt + (v . grad) v) - curl(Hbar) x Hbar + grad(pi) = 0
    dHbar/dt = -(v . grad) Hbar + (Hbar . grad) v
    dSbar/dt = -(v . grad) Sbar
    div v = 0, div Hbar = 0

pi is a Lagrange multiplier recomputed each stage from the weighted elliptic
problem div((1/r0) grad pi) = div(raw momentum tendency), which makes the
projected tendency divergence-free; a plain Leray projection would be wrong
for nonconstant Sbar.  The initial-velocity filter maps arbitrary data onto
a divergence-free field with the same r0-weighted vorticity.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .eos import EosParams, r0
from .compressible import _advect, lorentz_force
from .integrate import IntegrationError, Trajectory, advance
from .spectral import GridSpec

__all__ = [
    "IncompressibleState",
    "IncompressibleTendency",
    "filter_initial_velocity",
    "pressure_solve",
    "rhs_incompressible",
    "stable_dt",
    "rk4_step",
    "run",
    "mhd_energy",
]


@dataclass
class IncompressibleState:
    """Fields of the limit system at one instant."""

    grid: GridSpec
    v: np.ndarray
    Hbar: np.ndarray
    Sbar: np.ndarray
    pi: np.ndarray
    t: float = 0.0

    def copy(self) -> "IncompressibleState":
        return IncompressibleState(
            grid=self.grid,
            v=self.v.copy(),
            Hbar=self.Hbar.copy(),
            Sbar=self.Sbar.copy(),
            pi=self.pi.copy(),
            t=self.t,
        )

    def check_invariants(self, div_tol: float = 1e-9) -> None:
        g = self.grid
        for name in ("v", "Hbar", "Sbar", "pi"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"non-finite samples in {name}")
        for name, vec in (("v", self.v), ("Hbar", self.Hbar)):
            d = g.l2_norm(g.div(vec))
            scale = g.sobolev_norm(vec, 1.0)
            if scale > 0.0 and d > div_tol * scale:
                raise ValueError(f"div {name} = {d:.3e} exceeds tolerance")
        mean_pi = abs(float(np.mean(self.pi)))
        if mean_pi > 1e-9 * max(float(np.max(np.abs(self.pi))), 1e-300):
            raise ValueError("pi must have zero mean")


@dataclass
class IncompressibleTendency:
    dv: np.ndarray
    dH: np.ndarray
    dS: np.ndarray
    pi: np.ndarray


def filter_initial_velocity(
    v0: np.ndarray,
    S0: np.ndarray,
    grid: GridSpec,
    params: EosParams,
    tol: float = 1e-10,
) -> np.ndarray:
    """Divergence-free w0 whose r0-weighted curl matches that of v0.

    Construction: with z = r0(S0) v0, solve div((z + grad phi)/r0) = 0 for
    zero-mean phi and return w0 = (z + grad phi)/r0.  The curl condition
    curl(r0 w0) = curl(r0 v0) holds identically because the correction is a
    gradient; ||div w0||_2 <= tol is enforced through the elliptic solve.
    For constant S0 this is the classical Leray projection.
    """
    r0_field = np.broadcast_to(np.asarray(r0(S0, params), dtype=float), grid.shape)
    z = r0_field * v0
    rhs = -grid.div(z / r0_field)
    rhs_norm = grid.l2_norm(rhs)
    if rhs_norm == 0.0:
        return v0.copy()
    # tol is an absolute bound on ||div w0||; the solver tolerance is relative,
    # floored at the roundoff level CG can actually reach
    rel_tol = max(tol / rhs_norm, 5e-14)
    phi = grid.var_coeff_elliptic_solve(1.0 / r0_field, rhs, tol=rel_tol)
    return (z + grid.grad(phi)) / r0_field


def _momentum_raw(state: IncompressibleState, params: EosParams) -> np.ndarray:
    """Unprojected velocity tendency -(v.grad)v + (curl H x H)/r0."""
    g = state.grid
    r0_field = np.broadcast_to(
        np.asarray(r0(state.Sbar, params), dtype=float), g.shape
    )
    return -_advect(g, state.v, state.v) + lorentz_force(state.Hbar, g) / r0_field


def pressure_solve(
    state: IncompressibleState, params: EosParams, tol: float = 1e-10
) -> np.ndarray:
    """Zero-mean pi with div((1/r0) grad pi) = div(raw momentum tendency)."""
    g = state.grid
    r0_field = np.broadcast_to(
        np.asarray(r0(state.Sbar, params), dtype=float), g.shape
    )
    rhs = g.div(_momentum_raw(state, params))
    if g.l2_norm(rhs) == 0.0:
        return np.zeros(g.shape)
    return g.var_coeff_elliptic_solve(1.0 / r0_field, rhs, tol=tol)


def rhs_incompressible(
    state: IncompressibleState, params: EosParams, tol: float = 1e-10
) -> IncompressibleTendency:
    """Projected tendency of (v, Hbar, Sbar) plus the multiplier pi."""
    g = state.grid
    r0_field = np.broadcast_to(
        np.asarray(r0(state.Sbar, params), dtype=float), g.shape
    )
    raw = _momentum_raw(state, params)
    rhs_div = g.div(raw)
    if g.l2_norm(rhs_div) == 0.0:
        pi = np.zeros(g.shape)
    else:
        pi = g.var_coeff_elliptic_solve(1.0 / r0_field, rhs_div, tol=tol)
    dv = raw - g.grad(pi) / r0_field
    dH = -_advect(g, state.v, state.Hbar) + _advect(g, state.Hbar, state.v)
    dS = -_advect(g, state.v, state.Sbar)
    return IncompressibleTendency(dv=dv, dH=dH, dS=dS, pi=pi)


def stable_dt(state: IncompressibleState, cfl: float, params: EosParams) -> float:
    """CFL step on the flow and Alfven speeds |v| + |Hbar|/sqrt(r0)."""
    if not 0.0 < cfl < 1.0:
        raise ValueError(f"cfl must lie in (0, 1), got {cfl}")
    g = state.grid
    r0_field = np.asarray(r0(state.Sbar, params), dtype=float)
    speed = np.sqrt(np.sum(state.v**2, axis=0)) + np.sqrt(
        np.sum(state.Hbar**2, axis=0) / r0_field
    )
    c = float(np.max(speed))
    if c == 0.0:
        c = 1.0  # quiescent state: any step is stable
    return cfl * g.dx / c


def _project_stage(state: IncompressibleState) -> IncompressibleState:
    g = state.grid
    return replace(
        state,
        v=g.solenoidal_project(state.v),
        Hbar=g.solenoidal_project(state.Hbar),
    )


def _apply(
    state: IncompressibleState, tend: IncompressibleTendency, coef: float
) -> IncompressibleState:
    return replace(
        state,
        v=state.v + coef * tend.dv,
        Hbar=state.Hbar + coef * tend.dH,
        Sbar=state.Sbar + coef * tend.dS,
    )


def rk4_step(
    state: IncompressibleState,
    dt: float,
    params: EosParams,
    tol: float = 1e-10,
) -> IncompressibleState:
    """Classical RK4 with v and Hbar re-projected divergence-free each stage."""
    k1 = rhs_incompressible(state, params, tol)
    k2 = rhs_incompressible(_project_stage(_apply(state, k1, dt / 2.0)), params, tol)
    k3 = rhs_incompressible(_project_stage(_apply(state, k2, dt / 2.0)), params, tol)
    k4 = rhs_incompressible(_project_stage(_apply(state, k3, dt)), params, tol)
    g = state.grid
    new = IncompressibleState(
        grid=g,
        v=state.v + (dt / 6.0) * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv),
        Hbar=state.Hbar + (dt / 6.0) * (k1.dH + 2.0 * k2.dH + 2.0 * k3.dH + k4.dH),
        Sbar=state.Sbar + (dt / 6.0) * (k1.dS + 2.0 * k2.dS + 2.0 * k3.dS + k4.dS),
        pi=k1.pi,
        t=state.t + dt,
    )
    new.v = g.solenoidal_project(new.v)
    new.Hbar = g.solenoidal_project(new.Hbar)
    for name in ("v", "Hbar", "Sbar"):
        if not np.all(np.isfinite(getattr(new, name))):
            raise IntegrationError(
                f"non-finite {name} after step to t={new.t:.6g}", state=new
            )
    return new


def mhd_energy(state: IncompressibleState, params: EosParams) -> float:
    """Total ideal-MHD energy of the limit system, int (r0 |v|^2 + |H|^2)/2."""
    g = state.grid
    r0_field = np.asarray(r0(state.Sbar, params), dtype=float)
    dens = r0_field * np.sum(state.v**2, axis=0) + np.sum(state.Hbar**2, axis=0)
    return 0.5 * g.integral(dens)


def run(
    state0: IncompressibleState,
    T: float,
    cfl: float,
    params: EosParams,
    observe_fn=None,
    observers=None,
    observer_cadence: int = 1,
    snapshot_times=None,
    tol: float = 1e-10,
) -> Trajectory:
    """Integrate the limit system to time T; mirrors the compressible run."""
    if observe_fn is None:
        from .diagnostics import observe_incompressible

        observe_fn = lambda s: observe_incompressible(s, params)  # noqa: E731
    return advance(
        state0,
        T,
        dt_fn=lambda s: stable_dt(s, cfl, params),
        step_fn=lambda s, dt: rk4_step(s, dt, params, tol=tol),
        observe_fn=observe_fn,
        observer_cadence=observer_cadence,
        snapshot_times=snapshot_times,
        observers=observers,
        copy_fn=lambda s: s.copy(),
    )

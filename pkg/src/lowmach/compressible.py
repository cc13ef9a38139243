"""Time integration of the Mach-scaled compressible non-isentropic MHD system.

Unknowns are the log-pressure q, velocity u, magnetic field H, and entropy S,
with Mach number eps in (0, 1].  The semi-discrete tendencies are

    dq/dt = -(u . grad) q - div(u) / (eps * a)
    du/dt = -(u . grad) u + (curl(H) x H - grad(q)/eps) / r
    dH/dt = curl(u x H)
    dS/dt = -(u . grad) S

with a = a(S, eps*q) and r = r(S, eps*q) evaluated pointwise each stage.
Quadratic products are dealiased by the 2/3 rule; the singular 1/eps terms
and the coefficient divisions are pointwise, which keeps the discrete
singular-term cancellation <a*(dq sing), q> + <r*(du sing), u> = 0 exact to
roundoff.  Time stepping is classical RK4 under an acoustic CFL constraint,
with a spectral solenoidal re-projection of H after each step to scrub
roundoff divergence.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .eos import EosParams, coeff_a, coeff_r
from .integrate import IntegrationError, Trajectory, advance
from .spectral import GridSpec

__all__ = [
    "CompressibleState",
    "CompressibleTendency",
    "lorentz_force",
    "faraday",
    "faraday_expanded",
    "singular_terms",
    "rhs",
    "linear_acoustic_rhs",
    "max_signal_speed",
    "stable_dt",
    "rk4_step",
    "run",
    "wraparound_time",
]


@dataclass
class CompressibleState:
    """Fields of the scaled system at one instant."""

    grid: GridSpec
    q: np.ndarray
    u: np.ndarray
    H: np.ndarray
    S: np.ndarray
    eps: float
    t: float = 0.0

    def copy(self) -> "CompressibleState":
        return CompressibleState(
            grid=self.grid,
            q=self.q.copy(),
            u=self.u.copy(),
            H=self.H.copy(),
            S=self.S.copy(),
            eps=self.eps,
            t=self.t,
        )

    def check_invariants(self, div_tol: float = 1e-10) -> None:
        """Validate finiteness, eps > 0, shapes, and div H = 0."""
        g = self.grid
        if not self.eps > 0.0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.q.shape != g.shape or self.S.shape != g.shape:
            raise ValueError("scalar field shape mismatch")
        if self.u.shape != (g.dim,) + g.shape or self.H.shape != (g.dim,) + g.shape:
            raise ValueError("vector field shape mismatch")
        for name in ("q", "u", "H", "S"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"non-finite samples in {name}")
        div_h = g.l2_norm(g.div(self.H))
        scale = g.sobolev_norm(self.H, 1.0)
        if scale > 0.0 and div_h > div_tol * scale:
            raise ValueError(f"div H = {div_h:.3e} exceeds {div_tol:.1e} * ||H||_H1")


@dataclass
class CompressibleTendency:
    dq: np.ndarray
    du: np.ndarray
    dH: np.ndarray
    dS: np.ndarray


def _advect(grid: GridSpec, u: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Dealiased (u . grad) f for scalar or vector f."""
    if f.ndim == grid.dim:
        out = sum(u[j] * grid.grad(f)[j] for j in range(grid.dim))
        return grid.dealias(out)
    return np.stack([_advect(grid, u, comp) for comp in f])


def lorentz_force(H: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Dealiased (curl H) x H.

    dim == 2 uses the out-of-plane embedding: scalar w = curl H gives
    w * (-H2, H1).
    """
    w = grid.curl(H)
    if grid.dim == 2:
        force = np.stack([-w * H[1], w * H[0]])
    else:
        force = np.cross(np.moveaxis(w, 0, -1), np.moveaxis(H, 0, -1))
        force = np.moveaxis(force, -1, 0)
    return grid.dealias(force)


def faraday(u: np.ndarray, H: np.ndarray, grid: GridSpec) -> np.ndarray:
    """curl(u x H) with the cross product dealiased before the curl."""
    if grid.dim == 2:
        e = grid.dealias(u[0] * H[1] - u[1] * H[0])
        return grid.curl(e)
    e = np.cross(np.moveaxis(u, 0, -1), np.moveaxis(H, 0, -1))
    return grid.curl(grid.dealias(np.moveaxis(e, -1, 0)))


def faraday_expanded(u: np.ndarray, H: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Four-term expansion u div H - H div u + (H . grad) u - (u . grad) H.

    Cross-checked against the direct curl form; on dealiased fields with
    div H = 0 the two agree to roundoff.
    """
    div_u = grid.div(u)
    div_h = grid.div(H)
    out = (
        grid.dealias(u * div_h)
        - grid.dealias(H * div_u)
        + _advect(grid, H, u)
        - _advect(grid, u, H)
    )
    return out


def singular_terms(
    state: CompressibleState, params: EosParams
) -> tuple[np.ndarray, np.ndarray]:
    """The 1/eps pieces of (dq, du) exactly as the tendency assembles them."""
    g = state.grid
    a = coeff_a(state.S, state.eps * state.q, params)
    r = coeff_r(state.S, state.eps * state.q, params)
    dq_sing = -g.div(state.u) / (state.eps * a)
    du_sing = -g.grad(state.q) / (state.eps * r)
    return dq_sing, du_sing


def rhs(state: CompressibleState, params: EosParams) -> CompressibleTendency:
    """Tendency of (q, u, H, S); see the module docstring for the forms."""
    g = state.grid
    eps = state.eps
    a = coeff_a(state.S, eps * state.q, params)
    r = coeff_r(state.S, eps * state.q, params)
    dq = -_advect(g, state.u, state.q) - g.div(state.u) / (eps * a)
    du = -_advect(g, state.u, state.u) + (
        lorentz_force(state.H, g) - g.grad(state.q) / eps
    ) / r
    dH = faraday(state.u, state.H, g)
    dS = -_advect(g, state.u, state.S)
    return CompressibleTendency(dq=dq, du=du, dH=dH, dS=dS)


def linear_acoustic_rhs(
    a0: float, r0_const: float
) -> Callable[[CompressibleState, EosParams], CompressibleTendency]:
    """Tendency with frozen constant coefficients and no nonlinear terms.

    Used as the exact-oscillation oracle: a single Fourier mode evolves as
    exp(+-i |k| t / (eps sqrt(a0 r0))).
    """

    def _rhs(state: CompressibleState, params: EosParams) -> CompressibleTendency:
        del params
        g = state.grid
        dq = -g.div(state.u) / (state.eps * a0)
        du = -g.grad(state.q) / (state.eps * r0_const)
        return CompressibleTendency(
            dq=dq, du=du, dH=np.zeros_like(state.H), dS=np.zeros_like(state.S)
        )

    return _rhs


def max_signal_speed(
    u: np.ndarray, H: np.ndarray, a: np.ndarray, r: np.ndarray, eps: float
) -> float:
    """max over the grid of |u| + |H|/sqrt(r) + 1/(eps sqrt(a r))."""
    speed = (
        np.sqrt(np.sum(u**2, axis=0))
        + np.sqrt(np.sum(H**2, axis=0) / r)
        + 1.0 / (eps * np.sqrt(a * r))
    )
    return float(np.max(speed))


def stable_dt(state: CompressibleState, cfl: float, params: EosParams) -> float:
    """Acoustic-CFL step: cfl * dx / c_max, which scales like eps * dx."""
    if not 0.0 < cfl < 1.0:
        raise ValueError(f"cfl must lie in (0, 1), got {cfl}")
    a = coeff_a(state.S, state.eps * state.q, params)
    r = coeff_r(state.S, state.eps * state.q, params)
    a = np.broadcast_to(np.asarray(a, dtype=float), state.grid.shape)
    return cfl * state.grid.dx / max_signal_speed(state.u, state.H, a, r, state.eps)


def _apply(
    state: CompressibleState, tend: CompressibleTendency, coef: float
) -> CompressibleState:
    return replace(
        state,
        q=state.q + coef * tend.dq,
        u=state.u + coef * tend.du,
        H=state.H + coef * tend.dH,
        S=state.S + coef * tend.dS,
    )


def rk4_step(
    state: CompressibleState,
    dt: float,
    params: EosParams,
    rhs_fn: Callable[[CompressibleState, EosParams], CompressibleTendency] = rhs,
) -> CompressibleState:
    """Classical RK4 step; re-projects H divergence-free afterwards."""
    k1 = rhs_fn(state, params)
    k2 = rhs_fn(_apply(state, k1, dt / 2.0), params)
    k3 = rhs_fn(_apply(state, k2, dt / 2.0), params)
    k4 = rhs_fn(_apply(state, k3, dt), params)
    g = state.grid
    new = CompressibleState(
        grid=g,
        q=state.q + (dt / 6.0) * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq),
        u=state.u + (dt / 6.0) * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du),
        H=state.H + (dt / 6.0) * (k1.dH + 2.0 * k2.dH + 2.0 * k3.dH + k4.dH),
        S=state.S + (dt / 6.0) * (k1.dS + 2.0 * k2.dS + 2.0 * k3.dS + k4.dS),
        eps=state.eps,
        t=state.t + dt,
    )
    new.H = g.solenoidal_project(new.H)
    for name in ("q", "u", "H", "S"):
        if not np.all(np.isfinite(getattr(new, name))):
            raise IntegrationError(
                f"non-finite {name} after step to t={new.t:.6g}", state=new
            )
    return new


def wraparound_time(state: CompressibleState, params: EosParams) -> float:
    """Shortest acoustic domain-crossing time eps * L * sqrt(min(a r)).

    Periodic-image re-entry invalidates the whole-space reading of any run
    longer than this; the harness warns rather than refuses.
    """
    a = coeff_a(state.S, state.eps * state.q, params)
    r = coeff_r(state.S, state.eps * state.q, params)
    ar_min = float(np.min(np.asarray(a) * np.asarray(r)))
    return state.eps * state.grid.length * float(np.sqrt(ar_min))


def run(
    state0: CompressibleState,
    T: float,
    cfl: float,
    params: EosParams,
    observe_fn=None,
    observers=None,
    observer_cadence: int = 1,
    snapshot_times=None,
) -> Trajectory:
    """Integrate to scaled time T with adaptive dt = stable_dt each step.

    ``observe_fn`` defaults to the standard diagnostics row; ``observers``
    are extra named scalar callbacks.  Snapshot times receive deep copies of
    the state for cross-run comparisons.  Returns a Trajectory; integration
    failure yields a partial record with ``complete`` False.
    """
    if observe_fn is None:
        from .diagnostics import observe_compressible

        observe_fn = lambda s: observe_compressible(s, params)  # noqa: E731
    traj = advance(
        state0,
        T,
        dt_fn=lambda s: stable_dt(s, cfl, params),
        step_fn=lambda s, dt: rk4_step(s, dt, params),
        observe_fn=observe_fn,
        observer_cadence=observer_cadence,
        snapshot_times=snapshot_times,
        observers=observers,
        copy_fn=lambda s: s.copy(),
    )
    t_wrap = wraparound_time(state0, params)
    if T > t_wrap:
        traj.warnings.append(
            f"horizon T={T:.4g} exceeds acoustic wrap-around time {t_wrap:.4g}; "
            "periodic images re-enter the domain"
        )
    return traj

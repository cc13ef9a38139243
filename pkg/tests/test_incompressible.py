"""Limit-system solver: the initial-velocity filter, the weighted pressure
projection against a closed-form Euler mode, steady states, transport, and
energy conservation."""

import numpy as np
import pytest

from lowmach.eos import EosParams, r0
from lowmach.incompressible import (
    IncompressibleState,
    filter_initial_velocity,
    mhd_energy,
    pressure_solve,
    rhs_incompressible,
    rk4_step,
    run,
    stable_dt,
)
from lowmach.initial_data import (
    DataRecipe,
    entropy_bump,
    random_scalar_field,
    random_solenoidal_field,
)


def _state(grid, v=None, H=None, S=None):
    zeros_v = np.zeros((grid.dim,) + grid.shape)
    return IncompressibleState(
        grid=grid,
        v=zeros_v.copy() if v is None else v,
        Hbar=zeros_v.copy() if H is None else H,
        Sbar=np.zeros(grid.shape) if S is None else S,
        pi=np.zeros(grid.shape),
    )


class TestFilterInitialVelocity:
    def test_solenoidal_input_unchanged(self, grid32, params, rng):
        g = grid32
        v0 = random_solenoidal_field(g, 1, 5, 1.0, rng)
        w0 = filter_initial_velocity(v0, np.full(g.shape, 0.4), g, params, tol=1e-10)
        assert np.abs(w0 - v0).max() < 1e-10

    def test_constant_entropy_is_leray_projection(self, grid32, params, rng):
        g = grid32
        v0 = rng.standard_normal((2,) + g.shape)
        w0 = filter_initial_velocity(v0, np.full(g.shape, 0.3), g, params, tol=1e-10)
        assert np.abs(w0 - g.solenoidal_project(v0)).max() < 1e-10

    def test_gradient_data_nonconstant_entropy(self, grid64, params, rng):
        g = grid64
        S0 = entropy_bump(g, 0.2, 0.0)
        v0 = g.grad(random_scalar_field(g, 1, 5, 1.0, rng))
        w0 = filter_initial_velocity(v0, S0, g, params, tol=1e-9)
        r0_field = r0(S0, params)
        assert g.l2_norm(g.div(w0)) <= 1e-9
        assert g.l2_norm(g.curl(r0_field * w0) - g.curl(r0_field * v0)) <= 1e-9


class TestPressureSolve:
    def test_rest_state(self, grid32, params):
        assert np.abs(pressure_solve(_state(grid32), params)).max() == 0.0

    def test_taylor_green_closed_form(self, grid64, params):
        # steady Euler vortex: (v.grad)v = grad((cos 2x + cos 2y)/4), so the
        # zero-mean pressure is -(cos 2x + cos 2y)/4 for r0 = 1
        g = grid64
        x, y = g.coords
        X = x * np.ones(g.shape)
        Y = y * np.ones(g.shape)
        v = np.stack([np.cos(X) * np.sin(Y), -np.sin(X) * np.cos(Y)])
        st = _state(g, v=v)
        pi = pressure_solve(st, params, tol=1e-12)
        assert np.abs(pi + (np.cos(2 * X) + np.cos(2 * Y)) / 4.0).max() < 1e-11

    def test_projected_tendency_divergence_free(self, grid64, params, rng):
        g = grid64
        st = _state(
            g,
            v=random_solenoidal_field(g, 1, 4, 0.5, rng),
            H=random_solenoidal_field(g, 1, 4, 0.5, rng),
            S=entropy_bump(g, 0.15, 0.0),
        )
        tend = rhs_incompressible(st, params, tol=1e-11)
        rel = g.l2_norm(g.div(tend.dv)) / max(g.sobolev_norm(tend.dv, 1.0), 1e-300)
        assert rel < 1e-10


class TestRhsIncompressible:
    def test_rest_with_constant_H(self, grid32, params):
        st = _state(grid32)
        st.Hbar = np.stack([np.full(grid32.shape, 0.7), np.full(grid32.shape, -0.1)])
        st.Sbar = entropy_bump(grid32, 0.1, 0.2)
        tend = rhs_incompressible(st, params)
        for part in (tend.dv, tend.dH, tend.dS):
            assert np.abs(part).max() < 1e-12

    def test_alfvenic_steady_state(self, grid64, params, rng):
        # v = Hbar with unit r0: the Lorentz force reduces to a gradient and
        # the projected velocity tendency vanishes
        g = grid64
        w = random_solenoidal_field(g, 1, 4, 0.4, rng)
        st = _state(g, v=w.copy(), H=w.copy())
        tend = rhs_incompressible(st, params, tol=1e-12)
        assert g.l2_norm(tend.dH) == 0.0
        assert g.l2_norm(tend.dv) <= 1e-9

    def test_entropy_advection_oracle(self, grid32, params):
        g = grid32
        x = g.coords[0]
        L = g.length
        st = _state(g)
        st.v = np.stack([np.ones(g.shape), np.zeros(g.shape)])
        st.Sbar = np.sin(2 * np.pi * x / L) * np.ones(g.shape)
        tend = rhs_incompressible(st, params)
        expect = -(2 * np.pi / L) * np.cos(2 * np.pi * x / L) * np.ones(g.shape)
        assert np.abs(tend.dS - expect).max() < 1e-12

    def test_cross_helicity_cancellation(self, grid64, params, rng):
        # <(curl H) x H, v> + <(H.grad)v - (v.grad)H, H> = 0
        from lowmach.compressible import _advect, lorentz_force

        g = grid64
        v = random_solenoidal_field(g, 1, 5, 0.7, rng)
        H = random_solenoidal_field(g, 1, 5, 0.7, rng)
        t1 = g.inner(lorentz_force(H, g), v)
        t2 = g.inner(_advect(g, H, v) - _advect(g, v, H), H)
        scale = g.l2_norm(v) * g.l2_norm(H) * g.sobolev_norm(H, 1.0)
        assert abs(t1 + t2) < 1e-11 * scale


class TestTimeStepping:
    def test_fixed_point_preserved(self, grid32, params):
        st = _state(grid32)
        st.Sbar = entropy_bump(grid32, 0.1, 0.0)
        new = rk4_step(st, 1e-2, params)
        assert np.abs(new.v).max() < 1e-13
        assert np.abs(new.Sbar - st.Sbar).max() < 1e-13

    def test_euler_kinetic_energy_conserved(self, grid32, params, rng):
        # constant entropy, no magnetic field: incompressible Euler
        g = grid32
        st = _state(g, v=random_solenoidal_field(g, 1, 4, 0.5, rng))
        traj = run(st, 0.3, 0.3, params, observer_cadence=2, tol=1e-11)
        E = traj.column("total_energy")
        assert np.max(np.abs(E - E[0])) < 1e-7 * abs(E[0])

    def test_full_mhd_energy_conserved(self, grid32, params, rng):
        g = grid32
        st = _state(
            g,
            v=random_solenoidal_field(g, 1, 4, 0.5, rng),
            H=random_solenoidal_field(g, 1, 4, 0.5, rng),
        )
        traj = run(st, 0.3, 0.3, params, observer_cadence=2, tol=1e-11)
        E = traj.column("total_energy")
        assert np.max(np.abs(E - E[0])) < 1e-7 * abs(E[0])

    def test_divergence_stays_clean(self, grid32, params, rng):
        g = grid32
        st = _state(
            g,
            v=random_solenoidal_field(g, 1, 4, 0.5, rng),
            H=random_solenoidal_field(g, 1, 4, 0.5, rng),
            S=entropy_bump(g, 0.1, 0.0),
        )
        traj = run(st, 0.1, 0.3, params, observer_cadence=1, tol=1e-10)
        assert max(r.l2_divu for r in traj.records) < 1e-9
        assert max(r.divH_residual for r in traj.records) < 1e-9

    def test_entropy_extremes_preserved(self, grid64, params, rng):
        g = grid64
        st = _state(
            g,
            v=random_solenoidal_field(g, 1, 4, 0.4, rng),
            S=entropy_bump(g, 0.1, 0.0),
        )
        traj = run(
            st, 0.25, 0.3, params, observer_cadence=10,
            snapshot_times=np.linspace(0, 0.25, 6), tol=1e-10,
        )
        smax = max(np.max(s.Sbar) for s in traj.snapshots)
        smin = min(np.min(s.Sbar) for s in traj.snapshots)
        assert smax <= np.max(st.Sbar) + 1e-6
        assert smin >= np.min(st.Sbar) - 1e-6

    def test_stable_dt_quiescent(self, grid32, params):
        st = _state(grid32)
        assert np.isfinite(stable_dt(st, 0.4, params))

    def test_mhd_energy_value(self, grid32, params):
        g = grid32
        x = g.coords[0]
        H = np.stack([np.zeros(g.shape), np.sin(x) * np.ones(g.shape)])
        st = _state(g, H=H)
        # int |H|^2 / 2 = (L^2 / 2) / 2
        assert mhd_energy(st, params) == pytest.approx(g.volume / 4.0, rel=1e-12)


class TestStateValidation:
    def test_invariants_pass(self, grid32, params, rng):
        st = _state(grid32, v=random_solenoidal_field(grid32, 1, 4, 1.0, rng))
        st.check_invariants()

    def test_rejects_divergent_velocity(self, grid32, rng):
        st = _state(grid32, v=rng.standard_normal((2,) + grid32.shape))
        with pytest.raises(ValueError):
            st.check_invariants()

    def test_rejects_nonzero_mean_pressure(self, grid32):
        st = _state(grid32)
        st.pi = np.full(grid32.shape, 0.3)
        with pytest.raises(ValueError):
            st.check_invariants()

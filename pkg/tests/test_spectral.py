"""Spectral operators against trigonometric identities, a sixth-order
finite-difference oracle, and manufactured elliptic solutions."""

import numpy as np
import pytest

from lowmach.initial_data import random_scalar_field
from lowmach.spectral import EllipticConvergenceError, GaugeError, GridSpec


def _mode(grid, axis=0, freq=1):
    """sin(2*pi*freq*x_axis/L) broadcast to the full grid."""
    arg = 2.0 * np.pi * freq * grid.coords[axis] / grid.length
    return np.sin(arg) * np.ones(grid.shape)


def _fd6_gradient(f, axis, dx):
    """Sixth-order centred difference on the periodic grid (oracle)."""
    out = np.zeros_like(f)
    for shift, w in ((1, 3 / 4), (2, -3 / 20), (3, 1 / 60)):
        out += w * (np.roll(f, -shift, axis=axis) - np.roll(f, shift, axis=axis))
    return out / dx


class TestGridSpec:
    @pytest.mark.parametrize("kwargs", [
        {"dim": 1, "n": 16},
        {"dim": 4, "n": 16},
        {"dim": 2, "n": 6},
        {"dim": 2, "n": 15},
        {"dim": 2, "n": 16, "length": 0.0},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            GridSpec(**kwargs)

    def test_geometry(self):
        g = GridSpec(dim=2, n=16, length=4.0)
        assert g.shape == (16, 16)
        assert g.dx == pytest.approx(0.25)
        assert g.volume == pytest.approx(16.0)


class TestGrad:
    def test_constant(self, grid32):
        f = np.full(grid32.shape, 3.7)
        assert np.abs(grid32.grad(f)).max() < 1e-13

    def test_single_mode(self, grid32):
        g = grid32
        f = _mode(g, axis=0)
        expect = (2 * np.pi / g.length) * np.cos(2 * np.pi * g.coords[0] / g.length)
        out = g.grad(f)
        assert np.abs(out[0] - expect * np.ones(g.shape)).max() < 1e-12
        assert np.abs(out[1]).max() < 1e-12

    def test_against_fd6_oracle(self):
        # fixed band-limited field sampled on successively finer grids: the
        # sixth-order stencil must approach the spectral (exact) derivative
        # at O(dx^6)
        def field(g):
            x, y = g.coords
            return (
                np.sin(3 * x) * np.cos(2 * y)
                + 0.5 * np.cos(5 * x + y)
                + 0.2 * np.sin(6 * y)
            ) * np.ones(g.shape)

        errs = []
        for n in (64, 128, 256):
            g = GridSpec(dim=2, n=n)
            f = field(g)
            spectral = g.grad(f)
            err = max(
                np.abs(spectral[axis] - _fd6_gradient(f, axis, g.dx)).max()
                for axis in range(2)
            )
            errs.append(err)
        orders = [np.log2(a / b) for a, b in zip(errs, errs[1:])]
        assert all(o > 5.8 for o in orders), (errs, orders)


class TestDivCurl:
    def test_div_constant(self, grid32):
        u = np.ones((2,) + grid32.shape)
        assert np.abs(grid32.div(u)).max() < 1e-13

    def test_div_grad_is_laplacian(self, grid32, rng):
        g = grid32
        f = g.dealias(rng.standard_normal(g.shape))
        assert np.abs(g.div(g.grad(f)) - g.laplacian(f)).max() < 1e-10

    def test_curl_grad_zero(self, grid32, rng):
        g = grid32
        f = rng.standard_normal(g.shape)
        gf = g.grad(f)
        assert g.l2_norm(g.curl(gf)) < 1e-11 * max(g.l2_norm(gf), 1.0)

    def test_curl_2d_example(self, grid32):
        g = grid32
        L = g.length
        x, y = g.coords
        scale = L / (2 * np.pi)
        u = np.stack([
            -np.sin(2 * np.pi * y / L) * scale * np.ones(g.shape),
            np.sin(2 * np.pi * x / L) * scale * np.ones(g.shape),
        ])
        expect = (np.cos(2 * np.pi * x / L) + np.cos(2 * np.pi * y / L)) * np.ones(g.shape)
        assert np.abs(g.curl(u) - expect).max() < 1e-12

    def test_curl_constant(self, grid32):
        u = np.ones((2,) + grid32.shape) * 2.5
        assert np.abs(grid32.curl(u)).max() < 1e-13

    def test_div_of_scalar_curl_2d(self, grid32, rng):
        g = grid32
        e = rng.standard_normal(g.shape)
        assert g.l2_norm(g.div(g.curl(e))) < 1e-11 * max(g.sobolev_norm(e, 1.0), 1.0)

    def test_3d_identities(self, grid3d, rng):
        g = grid3d
        u = g.dealias(rng.standard_normal((3,) + g.shape))
        f = g.dealias(rng.standard_normal(g.shape))
        assert g.l2_norm(g.div(g.curl(u))) < 1e-11
        assert g.l2_norm(g.curl(g.grad(f))) < 1e-11
        curl_curl = g.curl(g.curl(u))
        alt = np.stack([g.grad(g.div(u))[j] - g.laplacian(u[j]) for j in range(3)])
        assert np.abs(curl_curl - alt).max() < 1e-10


class TestLaplacian:
    def test_constant(self, grid32):
        assert np.abs(grid32.laplacian(np.full(grid32.shape, 2.0))).max() < 1e-12

    def test_eigenfunction(self, grid32):
        g = grid32
        f = _mode(g)
        k = 2 * np.pi / g.length
        assert np.abs(g.laplacian(f) + k**2 * f).max() < 1e-12


class TestPoisson:
    def test_zero(self, grid32):
        assert np.abs(grid32.poisson_solve(np.zeros(grid32.shape))).max() == 0.0

    def test_eigenfunction_inversion(self, grid32):
        g = grid32
        f = _mode(g)
        k = 2 * np.pi / g.length
        assert np.abs(g.poisson_solve(-(k**2) * f) - f).max() < 1e-12

    def test_random_residual(self, grid64, rng):
        g = grid64
        rhs = random_scalar_field(g, 1, 10, 1.0, rng)
        phi = g.poisson_solve(rhs)
        assert abs(float(np.mean(phi))) < 1e-13
        assert g.l2_norm(g.laplacian(phi) - rhs) < 1e-12 * g.l2_norm(rhs)

    def test_gauge_error(self, grid32):
        with pytest.raises(GaugeError):
            grid32.poisson_solve(np.ones(grid32.shape))


class TestVarCoeffElliptic:
    def test_constant_coefficient_reduces_to_poisson(self, grid32, rng):
        g = grid32
        rhs = random_scalar_field(g, 1, 8, 1.0, rng)
        phi_cg = g.var_coeff_elliptic_solve(np.ones(g.shape), rhs, tol=1e-12)
        phi_sp = g.poisson_solve(rhs)
        assert g.l2_norm(phi_cg - phi_sp) < 1e-10 * g.l2_norm(phi_sp)

    def test_manufactured_solution(self, grid64, rng):
        g = grid64
        phi_star = random_scalar_field(g, 1, 8, 1.0, rng)
        c = 2.0 + _mode(g)
        rhs = g.div(c * g.grad(phi_star))
        phi = g.var_coeff_elliptic_solve(c, rhs, tol=1e-12)
        h1_err = g.l2_norm(g.grad(phi - phi_star))
        assert h1_err < 1e-9 * g.l2_norm(g.grad(phi_star))

    def test_zero_rhs(self, grid32):
        out = grid32.var_coeff_elliptic_solve(np.ones(grid32.shape) * 2.0, np.zeros(grid32.shape))
        assert np.abs(out).max() == 0.0

    def test_nonpositive_coefficient_rejected(self, grid32, rng):
        c = np.ones(grid32.shape)
        c[0, 0] = -1.0
        rhs = random_scalar_field(grid32, 1, 5, 1.0, rng)
        with pytest.raises(ValueError):
            grid32.var_coeff_elliptic_solve(c, rhs)

    def test_iteration_cap_reports_residual(self, grid64, rng):
        g = grid64
        c = 1.0 + 0.95 * _mode(g)  # harsh contrast, starved iterations
        rhs = random_scalar_field(g, 1, 10, 1.0, rng)
        with pytest.raises(EllipticConvergenceError) as err:
            g.var_coeff_elliptic_solve(c, rhs, tol=1e-13, maxiter=2)
        assert err.value.residual > 1e-13


class TestSobolevNorm:
    def test_zero(self, grid32):
        assert grid32.sobolev_norm(np.zeros(grid32.shape), 2.0) == 0.0

    def test_single_mode_l2(self, grid32):
        # ||sin(2 pi x / L)||_{L^2} = sqrt(L^d / 2)
        g = grid32
        f = _mode(g)
        assert g.sobolev_norm(f, 0.0) == pytest.approx(np.sqrt(g.volume / 2.0), rel=1e-12)

    def test_matches_l2_at_s0(self, grid32, rng):
        g = grid32
        f = rng.standard_normal(g.shape)
        assert g.sobolev_norm(f, 0.0) == pytest.approx(g.l2_norm(f), rel=1e-12)

    def test_monotone_in_s(self, grid32, rng):
        g = grid32
        f = rng.standard_normal(g.shape)
        norms = [g.sobolev_norm(f, s) for s in (0.0, 0.5, 1.0, 2.0, 4.0)]
        assert all(a <= b * (1 + 1e-12) for a, b in zip(norms, norms[1:]))

    def test_negative_order_rejected(self, grid32):
        with pytest.raises(ValueError):
            grid32.sobolev_norm(np.zeros(grid32.shape), -1.0)

    def test_parseval_inner(self, grid32, rng):
        g = grid32
        f = rng.standard_normal(g.shape)
        assert g.inner(f, f) == pytest.approx(g.sobolev_norm(f, 0.0) ** 2, rel=1e-12)


class TestDealias:
    def test_band_limited_unchanged(self, grid32, rng):
        g = grid32
        f = random_scalar_field(g, 1, g.n // 3 - 1, 1.0, rng)
        assert np.abs(g.dealias(f) - f).max() < 1e-13

    def test_nyquist_mode_removed(self, grid32):
        g = grid32
        x = g.coords[0]
        f = np.cos(np.pi * x / g.dx) * np.ones(g.shape)  # frequency n/2
        assert np.abs(g.dealias(f)).max() < 1e-12

    def test_idempotent(self, grid32, rng):
        g = grid32
        f = rng.standard_normal(g.shape)
        once = g.dealias(f)
        assert np.abs(g.dealias(once) - once).max() < 1e-13


class TestSkewAdjoint:
    def test_grad_div_pairing(self, grid64, rng):
        g = grid64
        for _ in range(5):
            q = rng.standard_normal(g.shape)
            u = rng.standard_normal((2,) + g.shape)
            mism = abs(g.inner(g.grad(q), u) + g.inner(q, g.div(u)))
            scale = g.l2_norm(g.grad(q)) * g.l2_norm(u)
            assert mism < 1e-12 * max(scale, 1e-300)


class TestSolenoidalProject:
    def test_kills_divergence(self, grid32, rng):
        g = grid32
        u = rng.standard_normal((2,) + g.shape)
        up = g.solenoidal_project(u)
        assert g.l2_norm(g.div(up)) < 1e-12 * g.sobolev_norm(u, 1.0)

    def test_idempotent_and_leaves_solenoidal(self, grid32, rng):
        g = grid32
        u = g.solenoidal_project(rng.standard_normal((2,) + g.shape))
        assert np.abs(g.solenoidal_project(u) - u).max() < 1e-12

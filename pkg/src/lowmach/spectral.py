"""Periodic uniform grid with Fourier pseudo-spectral operators.

Fields live in physical space as plain float arrays: a scalar field has shape
``grid.shape`` and a vector field has shape ``(dim,) + grid.shape``.  All
differential operators are spectral multipliers, so the discrete vector
identities (curl grad = 0, div curl = 0, skew-adjointness of the
[[0, div], [grad, 0]] block operator) hold to roundoff rather than to
truncation error, which is what the cancellation diagnostics rely on.

Derivative multipliers zero the Nyquist mode of each axis.  Elliptic solves
fix the zero-mean gauge; the variable-coefficient solve is conjugate
gradients preconditioned by the constant-coefficient inverse.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

__all__ = [
    "GridSpec",
    "GaugeError",
    "EllipticConvergenceError",
    "scalar_like",
    "vector_like",
]


class GaugeError(ValueError):
    """Right-hand side violates the zero-mean solvability condition."""


class EllipticConvergenceError(RuntimeError):
    """Krylov iteration exhausted its budget; carries the achieved residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [0, length)^dim with n points per axis.

    n must be even and at least 8 (powers of two give the fastest FFTs).
    """

    dim: int
    n: int
    length: float = 2.0 * np.pi

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError(f"n must be even and >= 8, got {self.n}")
        if not self.length > 0.0:
            raise ValueError(f"length must be positive, got {self.length}")

    # -- geometry -----------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def cell_volume(self) -> float:
        return self.dx**self.dim

    @property
    def volume(self) -> float:
        return self.length**self.dim

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays, open mesh (broadcastable)."""
        x = np.arange(self.n) * self.dx
        return tuple(
            x.reshape((1,) * j + (self.n,) + (1,) * (self.dim - 1 - j))
            for j in range(self.dim)
        )

    # -- spectral machinery --------------------------------------------------

    @cached_property
    def _freq(self) -> np.ndarray:
        return np.fft.fftfreq(self.n, d=1.0 / self.n)  # integer frequencies

    @cached_property
    def k_full(self) -> tuple[np.ndarray, ...]:
        """Physical wavenumbers 2*pi*f/L per axis, open mesh, Nyquist kept."""
        k1 = 2.0 * np.pi * self._freq / self.length
        return tuple(
            k1.reshape((1,) * j + (self.n,) + (1,) * (self.dim - 1 - j))
            for j in range(self.dim)
        )

    @cached_property
    def k_deriv(self) -> tuple[np.ndarray, ...]:
        """Derivative wavenumbers: as k_full with the Nyquist mode zeroed."""
        out = []
        for j in range(self.dim):
            k = self.k_full[j].copy()
            nyq = np.abs(self._freq) == self.n // 2
            k[(0,) * j + (nyq,) + (0,) * (self.dim - 1 - j)] = 0.0
            out.append(k)
        return tuple(out)

    @cached_property
    def k2(self) -> np.ndarray:
        """Squared derivative wavenumber |k|^2 (Nyquist-zeroed)."""
        out = np.zeros(self.shape)
        for k in self.k_deriv:
            out = out + k**2
        return out

    @cached_property
    def k2_full(self) -> np.ndarray:
        """Squared wavenumber including Nyquist, used in Sobolev weights."""
        out = np.zeros(self.shape)
        for k in self.k_full:
            out = out + k**2
        return out

    @cached_property
    def _inv_k2(self) -> np.ndarray:
        inv = np.zeros(self.shape)
        nz = self.k2 > 0.0
        inv[nz] = 1.0 / self.k2[nz]
        return inv

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Two-thirds rule: keep modes with every |f_j| <= n/3."""
        keep = np.ones(self.shape, dtype=bool)
        cut = self.n / 3.0
        f = np.abs(self._freq)
        for j in range(self.dim):
            fj = f.reshape((1,) * j + (self.n,) + (1,) * (self.dim - 1 - j))
            keep = keep & (fj <= cut)
        return keep

    def fft(self, field: np.ndarray) -> np.ndarray:
        axes = tuple(range(-self.dim, 0))
        return np.fft.fftn(field, axes=axes)

    def ifft(self, spec: np.ndarray) -> np.ndarray:
        axes = tuple(range(-self.dim, 0))
        return np.real(np.fft.ifftn(spec, axes=axes))

    # -- differential operators ----------------------------------------------

    def grad(self, f: np.ndarray) -> np.ndarray:
        """Spectral gradient of a scalar field."""
        fh = self.fft(f)
        return np.stack([self.ifft(1j * k * fh) for k in self.k_deriv])

    def div(self, u: np.ndarray) -> np.ndarray:
        """Spectral divergence of a vector field."""
        out = 1j * self.k_deriv[0] * self.fft(u[0])
        for j in range(1, self.dim):
            out = out + 1j * self.k_deriv[j] * self.fft(u[j])
        return self.ifft(out)

    def curl(self, field: np.ndarray) -> np.ndarray:
        """Spectral curl.

        dim == 3: vector -> vector.  dim == 2: vector -> scalar vorticity
        (d_x u2 - d_y u1) and scalar e -> vector (d_y e, -d_x e), i.e. the
        curl of the out-of-plane embedding (0, 0, e).
        """
        kd = self.k_deriv
        if field.shape == self.shape:
            if self.dim != 2:
                raise ValueError("scalar curl is only defined for dim == 2")
            eh = self.fft(field)
            return np.stack([self.ifft(1j * kd[1] * eh), -self.ifft(1j * kd[0] * eh)])
        if field.shape != (self.dim,) + self.shape:
            raise ValueError(f"bad field shape {field.shape} for curl")
        if self.dim == 2:
            return self.ifft(
                1j * kd[0] * self.fft(field[1]) - 1j * kd[1] * self.fft(field[0])
            )
        uh = [self.fft(c) for c in field]
        return np.stack(
            [
                self.ifft(1j * kd[1] * uh[2] - 1j * kd[2] * uh[1]),
                self.ifft(1j * kd[2] * uh[0] - 1j * kd[0] * uh[2]),
                self.ifft(1j * kd[0] * uh[1] - 1j * kd[1] * uh[0]),
            ]
        )

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        """Spectral Laplacian, multiplier -|k|^2 (derivative wavenumbers)."""
        return self.ifft(-self.k2 * self.fft(f))

    def dealias(self, field: np.ndarray) -> np.ndarray:
        """Zero all modes with any |f_j| > n/3.  Idempotent."""
        return self.ifft(self.dealias_mask * self.fft(field))

    def solenoidal_project(self, u: np.ndarray) -> np.ndarray:
        """Remove the gradient part: u - grad(inverse-laplacian(div u))."""
        uh = [self.fft(c) for c in u]
        kdotu = sum(self.k_deriv[j] * uh[j] for j in range(self.dim))
        corr = self._inv_k2 * kdotu
        return np.stack(
            [self.ifft(uh[j] - self.k_deriv[j] * corr) for j in range(self.dim)]
        )

    # -- integrals and norms ---------------------------------------------------

    def integral(self, f: np.ndarray) -> float:
        return float(np.sum(f)) * self.cell_volume

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        """L2 inner product; vector fields contract over components."""
        return float(np.sum(f * g)) * self.cell_volume

    def l2_norm(self, f: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(f, f), 0.0)))

    def sobolev_norm(self, f: np.ndarray, s: float) -> float:
        """Discrete H^s norm via the multiplier (1 + |k|^2)^s.

        Parseval-normalised so s = 0 reproduces the L2 norm.  Vector fields
        return the root of the summed squared component norms.
        """
        if s < 0:
            raise ValueError("sobolev_norm requires s >= 0")
        w = (1.0 + self.k2_full) ** s
        comps = f if f.ndim == self.dim + 1 else f[None]
        total = 0.0
        for c in comps:
            ch = self.fft(c)
            total += float(np.sum(w * np.abs(ch) ** 2))
        norm2 = total * self.volume / float(self.n) ** (2 * self.dim)
        return float(np.sqrt(max(norm2, 0.0)))

    # -- elliptic solvers -------------------------------------------------------

    def _check_zero_mean(self, rhs: np.ndarray, what: str) -> None:
        mean = abs(float(np.mean(rhs)))
        scale = float(np.sqrt(np.mean(rhs**2)))
        if mean > 1e-10 * max(scale, 1e-300):
            raise GaugeError(
                f"{what}: rhs mean {mean:.3e} exceeds 1e-10 of its rms {scale:.3e}"
            )

    def poisson_solve(self, rhs: np.ndarray) -> np.ndarray:
        """Zero-mean phi with laplacian(phi) = rhs; rhs must have zero mean."""
        self._check_zero_mean(rhs, "poisson_solve")
        return self.ifft(-self._inv_k2 * self.fft(rhs))

    def var_coeff_elliptic_solve(
        self,
        c: np.ndarray,
        rhs: np.ndarray,
        tol: float = 1e-10,
        maxiter: int = 500,
    ) -> np.ndarray:
        """Zero-mean phi with div(c grad phi) = rhs.

        c must be strictly positive and rhs zero-mean.  Preconditioned CG on
        A = -div(c grad .) with the constant-coefficient spectral inverse at
        coefficient mean(c); converged when the true residual satisfies
        ||div(c grad phi) - rhs||_2 <= tol * ||rhs||_2.
        """
        if np.min(c) <= 0.0:
            raise ValueError("var_coeff_elliptic_solve requires c > 0 everywhere")
        self._check_zero_mean(rhs, "var_coeff_elliptic_solve")
        rhs_norm = self.l2_norm(rhs)
        if rhs_norm == 0.0:
            return np.zeros(self.shape)

        shape = self.shape
        size = int(np.prod(shape))
        c_mean = float(np.mean(c))

        def apply_A(x: np.ndarray) -> np.ndarray:
            phi = x.reshape(shape)
            return -self.div(c * self.grad(phi)).ravel()

        def apply_M(x: np.ndarray) -> np.ndarray:
            r = x.reshape(shape)
            return (self.ifft(self._inv_k2 * self.fft(r)) / c_mean).ravel()

        A = LinearOperator((size, size), matvec=apply_A, dtype=float)
        M = LinearOperator((size, size), matvec=apply_M, dtype=float)
        b = -rhs.ravel()
        x, _info = cg(A, b, rtol=0.1 * tol, atol=0.0, maxiter=maxiter, M=M)
        phi = x.reshape(shape)
        phi = phi - float(np.mean(phi))
        residual = self.l2_norm(self.div(c * self.grad(phi)) - rhs) / rhs_norm
        if residual > tol:
            raise EllipticConvergenceError(
                f"CG stalled at relative residual {residual:.3e} (tol {tol:.1e}, "
                f"maxiter {maxiter})",
                residual=residual,
            )
        return phi


def scalar_like(grid: GridSpec) -> np.ndarray:
    """Zero scalar field on the grid."""
    return np.zeros(grid.shape)


def vector_like(grid: GridSpec) -> np.ndarray:
    """Zero vector field on the grid."""
    return np.zeros((grid.dim,) + grid.shape)

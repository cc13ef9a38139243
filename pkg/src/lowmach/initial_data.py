"""Constructors for well-prepared and general initial states.

Well-prepared data excites no order-one acoustics: the log-pressure is O(eps)
and the velocity is solenoidal up to an O(eps) gradient part.  General data
carries O(1) acoustic components.  The entropy perturbation is a literal
compactly supported C-infinity bump, standing in for spatial decay toward a
constant background (the periodic box has no spatial infinity; sweep reports
carry this limitation as a warning).

All fields are drawn from a seeded generator in a fixed order, so a sweep
over eps shares one underlying realisation and only the eps-scalings differ.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compressible import CompressibleState
from .eos import EosParams
from .incompressible import IncompressibleState, filter_initial_velocity, pressure_solve
from .spectral import GridSpec

__all__ = [
    "DataRecipe",
    "random_scalar_field",
    "random_solenoidal_field",
    "entropy_bump",
    "make_compressible_data",
    "solenoidal_core_state",
    "make_limit_data",
]

# Support radius of the entropy bump as a fraction of the period, and the
# steepness of exp(a - a/(1 - s^2)).  At 64^2 this leaves the content beyond
# the dealias band under 1e-8 of the bump amplitude.
_BUMP_RADIUS_FRAC = 0.45
_BUMP_STEEPNESS = 6.0


@dataclass(frozen=True)
class DataRecipe:
    """Parameters of one random initial-data family."""

    kind: str = "well_prepared"
    amplitude: float = 0.05
    seed: int = 0
    k_min: int = 1
    k_max: int = 4
    entropy_amplitude: float = 0.1
    base_entropy: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("well_prepared", "general"):
            raise ValueError(f"kind must be well_prepared or general, got {self.kind}")
        if self.amplitude < 0.0:
            raise ValueError("amplitude must be nonnegative")
        if not 1 <= self.k_min <= self.k_max:
            raise ValueError("need 1 <= k_min <= k_max")

    def check_band(self, grid: GridSpec) -> None:
        if self.k_max >= grid.n / 3.0:
            raise ValueError(
                f"k_max={self.k_max} is not dealias-safe on n={grid.n} (needs < n/3)"
            )


def _band_mask(grid: GridSpec, k_min: int, k_max: int) -> np.ndarray:
    f = np.fft.fftfreq(grid.n, d=1.0 / grid.n)
    mag2 = np.zeros(grid.shape)
    for j in range(grid.dim):
        fj = f.reshape((1,) * j + (grid.n,) + (1,) * (grid.dim - 1 - j))
        mag2 = mag2 + fj**2
    return (mag2 >= k_min**2) & (mag2 <= k_max**2)


def _rescale_rms(field: np.ndarray, amplitude: float) -> np.ndarray:
    rms = float(np.sqrt(np.mean(field**2)))
    if rms == 0.0 or amplitude == 0.0:
        return np.zeros_like(field)
    return field * (amplitude / rms)


def random_scalar_field(
    grid: GridSpec,
    k_min: int,
    k_max: int,
    amplitude: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Band-limited zero-mean scalar field with prescribed rms amplitude."""
    white = rng.standard_normal(grid.shape)
    mask = _band_mask(grid, k_min, k_max)
    field = grid.ifft(mask * grid.fft(white))
    return _rescale_rms(field - np.mean(field), amplitude)


def random_solenoidal_field(
    grid: GridSpec,
    k_min: int,
    k_max: int,
    amplitude: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Band-limited divergence-free zero-mean vector field, rms amplitude."""
    mask = _band_mask(grid, k_min, k_max)
    comps = [
        grid.ifft(mask * grid.fft(rng.standard_normal(grid.shape)))
        for _ in range(grid.dim)
    ]
    field = grid.solenoidal_project(np.stack(comps))
    rms = float(np.sqrt(np.mean(np.sum(field**2, axis=0))))
    if rms == 0.0 or amplitude == 0.0:
        return np.zeros_like(field)
    return field * (amplitude / rms)


def entropy_bump(grid: GridSpec, amplitude: float, base: float) -> np.ndarray:
    """base + amplitude * (C-infinity bump), compactly supported in the box.

    The bump exp(a - a/(1 - s^2)) is centred in the domain with radius
    0.45 * length, so its support stays strictly inside.
    """
    radius = _BUMP_RADIUS_FRAC * grid.length
    center = 0.5 * grid.length
    s2 = np.zeros(grid.shape)
    for x in grid.coords:
        s2 = s2 + (x - center) ** 2
    s2 = s2 / radius**2
    bump = np.zeros(grid.shape)
    inside = s2 < 1.0
    a = _BUMP_STEEPNESS
    bump[inside] = np.exp(a - a / (1.0 - s2[inside]))
    return base + amplitude * bump


def _draw_fields(
    recipe: DataRecipe, grid: GridSpec, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Draw (q_hat, gradient part, solenoidal w, H, S) in a fixed order."""
    q_hat = random_scalar_field(grid, recipe.k_min, recipe.k_max, recipe.amplitude, rng)
    psi = random_scalar_field(grid, recipe.k_min, recipe.k_max, 1.0, rng)
    grad_part = _rescale_rms_vec(grid.grad(psi), recipe.amplitude)
    w = random_solenoidal_field(grid, recipe.k_min, recipe.k_max, recipe.amplitude, rng)
    H = random_solenoidal_field(grid, recipe.k_min, recipe.k_max, recipe.amplitude, rng)
    S = entropy_bump(grid, recipe.entropy_amplitude, recipe.base_entropy)
    return q_hat, grad_part, w, H, S


def _rescale_rms_vec(field: np.ndarray, amplitude: float) -> np.ndarray:
    rms = float(np.sqrt(np.mean(np.sum(field**2, axis=0))))
    if rms == 0.0 or amplitude == 0.0:
        return np.zeros_like(field)
    return field * (amplitude / rms)


def make_compressible_data(
    recipe: DataRecipe, eps: float, grid: GridSpec, params: EosParams
) -> CompressibleState:
    """Initial compressible state for one Mach number.

    well_prepared: q0 = eps * q_hat and u0 = w + eps * grad part, so both the
    log-pressure and div u0 are O(eps).  general: q0 and the gradient part of
    u0 are order one and eps-independent.  H0 is solenoidal and S0 is the
    entropy bump.  The same seed reproduces the same underlying fields for
    every eps.
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    recipe.check_band(grid)
    del params  # the construction is independent of the gas law
    rng = np.random.default_rng(recipe.seed)
    q_hat, grad_part, w, H, S = _draw_fields(recipe, grid, rng)
    if recipe.kind == "well_prepared":
        q = eps * q_hat
        u = w + eps * grad_part
    else:
        q = q_hat
        u = w + grad_part
    return CompressibleState(grid=grid, q=q, u=u, H=H, S=S, eps=eps, t=0.0)


def solenoidal_core_state(
    recipe: DataRecipe, grid: GridSpec, params: EosParams, tol: float = 1e-10
) -> IncompressibleState:
    """Limit-system data built from the recipe's solenoidal velocity core.

    Used as the sweep reference for general data, where the acoustic
    components have no incompressible counterpart.
    """
    recipe.check_band(grid)
    rng = np.random.default_rng(recipe.seed)
    _q_hat, _grad_part, w, H, S = _draw_fields(recipe, grid, rng)
    v0 = filter_initial_velocity(w, S, grid, params, tol=tol)
    state = IncompressibleState(
        grid=grid, v=v0, Hbar=H, Sbar=S, pi=np.zeros(grid.shape), t=0.0
    )
    state.pi = pressure_solve(state, params, tol=tol)
    return state


def make_limit_data(
    comp0: CompressibleState, params: EosParams, tol: float = 1e-10
) -> IncompressibleState:
    """Matched limit-system data: Sbar = S0, Hbar = H0, v = filtered u0."""
    grid = comp0.grid
    v0 = filter_initial_velocity(comp0.u, comp0.S, grid, params, tol=tol)
    state = IncompressibleState(
        grid=grid,
        v=v0,
        Hbar=comp0.H.copy(),
        Sbar=comp0.S.copy(),
        pi=np.zeros(grid.shape),
        t=0.0,
    )
    state.pi = pressure_solve(state, params, tol=tol)
    return state

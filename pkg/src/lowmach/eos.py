"""Polytropic equation of state and the coefficient functions of the scaled system.

The gas law is rho = R(S, p) = p**(1/gamma) * exp(-S/gamma) with gamma > 1.
Pressure is nondimensionalised as p = p_bar * exp(eps * q), which turns the
continuity and momentum equations into equations for the log-pressure q with
coefficient fields

    a(S, eps*q) = (p / R) * dR/dp     (constant 1/gamma for a polytropic gas)
    r(S, eps*q) = R / p

All solver code goes through these functions so an alternative gas law is a
drop-in replacement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "EosParams",
    "density",
    "density_dp",
    "coeff_a",
    "coeff_r",
    "r0",
    "g_factor",
]

# Below this Mach number the factored coefficient g switches to its Taylor
# series: (1 - e^x)/eps loses digits once x = eps*q*(1 - 1/gamma) underflows
# against 1.
_G_SERIES_EPS = 1e-6


@dataclass(frozen=True)
class EosParams:
    """Ratio of specific heats and reference pressure.

    gamma must exceed 1 (polytropic gas), p_bar must be positive.
    """

    gamma: float = 1.4
    p_bar: float = 1.0

    def __post_init__(self) -> None:
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must be > 1, got {self.gamma}")
        if not self.p_bar > 0.0:
            raise ValueError(f"p_bar must be > 0, got {self.p_bar}")


def density(S, p, params: EosParams):
    """Mass density R(S, p) = p**(1/gamma) * exp(-S/gamma).

    Strictly positive and strictly increasing in p.  Raises ValueError for
    non-positive pressure.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0):
        raise ValueError("density requires positive pressure")
    inv_g = 1.0 / params.gamma
    return p**inv_g * np.exp(-np.asarray(S, dtype=float) * inv_g)


def density_dp(S, p, params: EosParams):
    """Partial derivative of the gas law with respect to pressure."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0):
        raise ValueError("density_dp requires positive pressure")
    inv_g = 1.0 / params.gamma
    return inv_g * p ** (inv_g - 1.0) * np.exp(-np.asarray(S, dtype=float) * inv_g)


def coeff_a(S, eps_q, params: EosParams):
    """Coefficient a(S, eps*q) = (p / R) * dR/dp at p = p_bar * exp(eps*q).

    Evaluated through the general formula; for the polytropic law it reduces
    to the constant 1/gamma, which the test suite confirms.
    """
    p = params.p_bar * np.exp(np.asarray(eps_q, dtype=float))
    return p * density_dp(S, p, params) / density(S, p, params)


def coeff_r(S, eps_q, params: EosParams):
    """Coefficient r(S, eps*q) = R(S, p) / p at p = p_bar * exp(eps*q).

    Equals (p_bar * e^{eps q})**(1/gamma - 1) * exp(-S/gamma); strictly
    positive.
    """
    p = params.p_bar * np.exp(np.asarray(eps_q, dtype=float))
    inv_g = 1.0 / params.gamma
    return p ** (inv_g - 1.0) * np.exp(-np.asarray(S, dtype=float) * inv_g)


def r0(S, params: EosParams):
    """r evaluated at zero log-pressure: r0(S) = r(S, 0)."""
    return coeff_r(S, 0.0, params)


def g_factor(S, q, eps: float, params: EosParams):
    """Factored form of f = 1 - r0(S)/r(S, eps*q), with f = eps * g.

    For eps > 0 returns (1 - exp(eps*q*(1 - 1/gamma)))/eps; at eps = 0 the
    analytic limit -q*(1 - 1/gamma).  Continuous in eps at 0.  S is accepted
    for signature uniformity; for the polytropic law g does not depend on it.
    """
    if eps < 0.0:
        raise ValueError("g_factor requires eps >= 0")
    del S  # the polytropic f factors as a function of eps*q alone
    c = 1.0 - 1.0 / params.gamma
    q = np.asarray(q, dtype=float)
    if eps < _G_SERIES_EPS:
        # Taylor series of -(e^x - 1)/eps in x = eps*q*c; truncation is
        # below 1e-18 relative for eps < 1e-6 and |q*c| <= O(10).
        x = eps * q * c
        return -q * c * (1.0 + x / 2.0 + x * x / 6.0)
    return -np.expm1(eps * q * c) / eps

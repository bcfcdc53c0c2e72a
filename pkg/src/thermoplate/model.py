"""Symbol matrices and state transforms for the damped thermoelastic plate system.

The plate deflection u and the temperature deviation theta satisfy, after a
Fourier transform in space, a pair of ODEs per frequency xi.  Writing
r = |xi|, the second-order pair is reduced to a first-order system for the
state vector

    w = (u_t^ + r^2 u^,  u_t^ - r^2 u^,  theta^)

which evolves by w_t + A(r) w = 0 with

    A(r) = r^2 * COUPLING_LAP + r^(2*sigma) * COUPLING_DAMP.

sigma in [0, 2] selects the damping mechanism acting on u_t: sigma = 0 is
friction, sigma = 2 is Kelvin-Voigt, intermediate values are structural
damping.  At r = 0 we use the convention r^0 = 1 so that the friction term
survives at the zero mode (A(0) = COUPLING_DAMP when sigma = 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Coefficient blocks of the first-order symbol.  COUPLING_LAP multiplies r^2
# (plate/heat coupling), COUPLING_DAMP multiplies r^(2*sigma) (the damping).
COUPLING_LAP = 0.5 * np.array([[0.0, -2.0, -2.0],
                               [2.0, 0.0, -2.0],
                               [1.0, 1.0, 2.0]])
COUPLING_DAMP = 0.5 * np.array([[1.0, 1.0, 0.0],
                                [1.0, 1.0, 0.0],
                                [0.0, 0.0, 0.0]])


@dataclass(frozen=True)
class ModelParams:
    """Damping exponent sigma in [0, 2] and space dimension dim >= 1."""

    sigma: float
    dim: int = 1

    def __post_init__(self):
        if not 0.0 <= self.sigma <= 2.0:
            raise ValueError(f"sigma must lie in [0, 2], got {self.sigma}")
        if self.dim < 1 or int(self.dim) != self.dim:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")


def coefficient_matrices():
    """Return copies of the two 3x3 coefficient blocks (r^2 part, r^(2s) part)."""
    return COUPLING_LAP.copy(), COUPLING_DAMP.copy()


def damping_power(r, sigma):
    """r**(2*sigma) with the convention 0**0 = 1 (friction survives at r = 0)."""
    r = np.asarray(r, dtype=float)
    if sigma == 0.0:
        return np.ones_like(r)
    return r ** (2.0 * sigma)


def symbol_matrix(r: float, params: ModelParams) -> np.ndarray:
    """Evaluate A(r) = r^2 * COUPLING_LAP + r^(2*sigma) * COUPLING_DAMP.

    Entries are real; returned as a float array.
    """
    if r < 0:
        raise ValueError("frequency magnitude r must be non-negative")
    return r * r * COUPLING_LAP + float(damping_power(r, params.sigma)) * COUPLING_DAMP


def state_from_physical(phys, r):
    """Map (u^, u_t^, theta^) to the first-order state (w1, w2, w3).

    `phys` has the component axis first, shape (3, ...); `r` broadcasts
    against the trailing axes.
    """
    phys = np.asarray(phys)
    u, ut, th = phys[0], phys[1], phys[2]
    r2 = np.asarray(r) ** 2
    return np.stack([ut + r2 * u, ut - r2 * u, th])


def physical_from_state(w, r):
    """Invert state_from_physical; requires r > 0 (u^ is 1/r^2-weighted).

    The zero mode must be reconstructed from its own scalar ODE, see the
    grid evolution in `evolve`.
    """
    r = np.asarray(r)
    if np.any(r <= 0):
        raise ValueError("physical_from_state requires r > 0 (zero mode is special)")
    w = np.asarray(w)
    w1, w2, w3 = w[0], w[1], w[2]
    u = (w1 - w2) / (2.0 * r ** 2)
    ut = 0.5 * (w1 + w2)
    return np.stack([u, ut, w3])

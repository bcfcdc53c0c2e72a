"""Diagonalizer chains and asymptotic root formulas by frequency zone.

The symbol A(r) is brought to diagonal-plus-small-remainder form by an
explicit chain of changes of basis.  Which chain applies depends on which
coefficient block dominates:

* damping-dominant regime (sigma < 1 at small r, or sigma > 1 at large r):
  four-factor chain T0 * T1 * T1half * T2 built from fixed integer matrices
  scaled by powers of r; the roots behave like

      (r^(4-2s),  r^2 + r^(4-2s),  r^(2s) - 2 r^(4-2s))    [+ O(r^(6-4s))]

* coupling-dominant regime (the swapped zones): a single constant factor,
  the eigenvector matrix of the r^2 coefficient block; the roots behave like
  the "offset" constants times r^2 [+ O(r^(2s))].

* sigma = 1: both blocks balance; the constant eigenvector matrix of their
  sum diagonalises A(r) exactly for every r and the roots are the
  "critical" constants times r^2 (exact, not asymptotic).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import COUPLING_DAMP, COUPLING_LAP, ModelParams, damping_power, symbol_matrix
from .spectrum import (EPS_DEFAULT, N_DEFAULT, SpectralTriple, branch_constants,
                       eigenvalues_grid, _match_to_reference)

# Leading factor of the damping-dominant chain: diagonalises the damping
# block (columns: kernel, kernel, range).
T0_DAMPING = np.array([[-1.0, 0.0, 1.0],
                       [1.0, 0.0, 1.0],
                       [0.0, 1.0, 0.0]])

# Integer stencils of the three r-dependent correction factors.
N1_STENCIL = np.array([[0.0, 0.0, 1.0],
                       [0.0, 0.0, 1.0],
                       [1.0, 1.0, 0.0]])
N1HALF_STENCIL = np.array([[0.0, 0.0, 0.0],
                           [0.0, 0.0, 1.0],
                           [0.0, 1.0, 0.0]])
N2_STENCIL = np.array([[0.0, 1.0, 0.0],
                       [-1.0, 0.0, 0.0],
                       [0.0, 0.0, 0.0]])


@dataclass(frozen=True)
class Zone:
    """Frequency zone tag with its boundaries eps < N."""

    tag: str  # "small" | "bounded" | "large"
    eps: float = EPS_DEFAULT
    N: float = N_DEFAULT

    def __post_init__(self):
        if self.tag not in ("small", "bounded", "large"):
            raise ValueError(f"unknown zone tag {self.tag!r}")
        if not self.eps < self.N:
            raise ValueError("zone boundaries require eps < N")


@dataclass(frozen=True)
class DiagonalizerChain:
    """The change-of-basis factors and their product for one (sigma, zone)."""

    T0: np.ndarray
    T1: np.ndarray
    T1half: np.ndarray
    T2: np.ndarray
    composite: np.ndarray
    sigma: float
    zone: Zone


@dataclass(frozen=True)
class AsymptoticRoots:
    """Asymptotic root triple plus the exponent of its error term."""

    values: SpectralTriple
    remainder_order: float


def _phase_ordered_eigvecs(M: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Eigenvector matrix of M with columns matched to `reference` eigenvalues.

    Columns are normalised to unit length with the largest-modulus entry made
    real positive, so the result is deterministic.
    """
    w, V = np.linalg.eig(M.astype(complex))
    cols = []
    used = set()
    for target in reference:
        j = min((abs(w[k] - target), k) for k in range(3) if k not in used)[1]
        used.add(j)
        v = V[:, j]
        pivot = np.argmax(np.abs(v))
        v = v / v[pivot] * np.abs(v[pivot])
        cols.append(v / np.linalg.norm(v))
    T = np.column_stack(cols)
    if abs(np.linalg.det(T)) < 1e-12:
        raise ArithmeticError("degenerate eigenvector matrix (root collision?)")
    return T


def coupling_eigenvector_matrix() -> np.ndarray:
    """Eigenvector matrix of the r^2 block, columns ordered by the offset constants."""
    return _phase_ordered_eigvecs(COUPLING_LAP, branch_constants("offset").values)


def balanced_eigenvector_matrix() -> np.ndarray:
    """Eigenvector matrix of the sigma=1 block sum, ordered by the critical constants."""
    return _phase_ordered_eigvecs(COUPLING_LAP + COUPLING_DAMP,
                                  branch_constants("critical").values)


def _is_damping_dominant(sigma: float, zone: Zone) -> bool:
    if zone.tag == "bounded":
        raise ValueError("no diagonalizer chain in the bounded zone")
    if sigma < 1.0:
        return zone.tag == "small"
    if sigma > 1.0:
        return zone.tag == "large"
    raise ValueError("sigma = 1 is exact for all frequencies; no zone case")


def diagonalizer(params: ModelParams, zone: Zone, r: float) -> DiagonalizerChain:
    """Explicit diagonalizer chain for a covered (sigma, zone) pair at radius r."""
    if r <= 0:
        raise ValueError("r must be positive")
    sigma = params.sigma
    eye = np.eye(3)
    if sigma == 1.0:
        T0 = balanced_eigenvector_matrix()
        return DiagonalizerChain(T0=T0, T1=eye.copy(), T1half=eye.copy(),
                                 T2=eye.copy(), composite=T0, sigma=sigma, zone=zone)
    if _is_damping_dominant(sigma, zone):
        step = r ** (2.0 - 2.0 * sigma)
        T0 = T0_DAMPING.copy()
        T1 = eye + step * N1_STENCIL
        T1half = eye + r ** (4.0 - 4.0 * sigma) * N1HALF_STENCIL
        T2 = eye + step * N2_STENCIL
        composite = T0 @ T1 @ T1half @ T2
    else:
        T0 = coupling_eigenvector_matrix()
        T1 = eye.astype(complex)
        T1half = eye.astype(complex)
        T2 = eye.astype(complex)
        composite = T0
    if abs(np.linalg.det(composite)) < 1e-12:
        raise ArithmeticError("diagonalizer chain is singular at this radius")
    return DiagonalizerChain(T0=T0, T1=T1, T1half=T1half, T2=T2,
                             composite=composite, sigma=sigma, zone=zone)


def asymptotic_roots(r: float, params: ModelParams, zone: Zone) -> AsymptoticRoots:
    """Printed asymptotic root formulas with the matching remainder order."""
    if r <= 0:
        raise ValueError("r must be positive")
    sigma = params.sigma
    if sigma == 1.0:
        raise ValueError("sigma = 1 roots are exact; use the spectrum module")
    if _is_damping_dominant(sigma, zone):
        slow = r ** (4.0 - 2.0 * sigma)
        vals = SpectralTriple(slow,
                              r ** 2 + slow,
                              float(damping_power(r, sigma)) - 2.0 * slow,
                              branch_labels=("plate", "heat", "damping"))
        order = 6.0 - 4.0 * sigma
    else:
        y = branch_constants("offset").values
        vals = SpectralTriple(y[0] * r * r, y[1] * r * r, y[2] * r * r,
                              branch_labels=("offset_1", "offset_2", "offset_3"))
        order = 2.0 * sigma
    return AsymptoticRoots(values=vals, remainder_order=order)


def error_order_fit(params: ModelParams, zone: Zone, r_grid):
    """Fitted exponents of |exact - asymptotic| per branch over a log r grid.

    Returns a list of three slopes; a slope is None where the two root
    families agree to 1e-14 across the whole grid (exact match, no scaling
    law to fit).
    """
    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid.size < 8:
        raise ValueError("need at least 8 grid points for an order fit")
    exact = eigenvalues_grid(r_grid, params)
    errs = np.empty((3, r_grid.size))
    for i, r in enumerate(r_grid):
        pred = asymptotic_roots(float(r), params, zone).values.values
        matched = _match_to_reference(exact[i], pred)
        errs[:, i] = np.abs(matched - pred)
    slopes = []
    for b in range(3):
        if np.all(errs[b] < 1e-14):
            slopes.append(None)
            continue
        safe = np.maximum(errs[b], 1e-300)
        slopes.append(float(np.polyfit(np.log(r_grid), np.log(safe), 1)[0]))
    return slopes

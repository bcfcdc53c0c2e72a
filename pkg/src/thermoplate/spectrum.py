"""Characteristic roots of the plate symbol and spectral scans.

The 3x3 symbol A(r) has the monic characteristic polynomial

    lam^3 + c2*lam^2 + c1*lam + c0,
    c2 = -(r^(2s) + r^2),  c1 = 2 r^4 + r^(2+2s),  c0 = -r^6,

whose roots (the characteristic roots) govern decay and oscillation of every
Fourier mode.  Roots are computed by a depressed-cubic Cardano formula in
complex arithmetic, polished by Newton steps, with a companion-matrix
fallback near triple degeneracy.  All of it is vectorised so whole frequency
grids are solved in one call.

Two special root triples appear throughout:

* kind="offset":   roots of y^3 - y^2 + 2y - 1 = 0, the eigenvalues of the
  r^2 coefficient block; the roots scale as y_j r^2 wherever that block
  dominates.
* kind="critical": roots of y^3 - 2y^2 + 3y - 1 = 0, the exact scaled roots
  at sigma = 1 where both blocks balance (eigenvalues are y_j r^2 for all r).

Both triples are evaluated from closed-form radical expressions and
cross-checked against the polished cubic solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .model import ModelParams, damping_power, symbol_matrix

# Default frequency-zone boundaries: |xi| <= EPS_DEFAULT is "small",
# |xi| >= N_DEFAULT is "large".  Overridable everywhere they are used.
EPS_DEFAULT = 0.1
N_DEFAULT = 10.0

_NEWTON_STEPS = 6
_TRIPLE_DEGENERACY_TOL = 1e-14
_ROOT_COLLISION_TOL = 1e-8


@dataclass(frozen=True)
class CubicCoeffs:
    """Coefficients of the monic cubic lam^3 + c2 lam^2 + c1 lam + c0."""

    c2: float
    c1: float
    c0: float


@dataclass(frozen=True)
class SpectralTriple:
    """Three characteristic roots at one frequency magnitude, with branch tags."""

    lam1: complex
    lam2: complex
    lam3: complex
    branch_labels: tuple = ("", "", "")

    @property
    def values(self) -> np.ndarray:
        return np.array([self.lam1, self.lam2, self.lam3])


@dataclass(frozen=True)
class EigenDecomp:
    """Right eigenvector matrix V, its inverse, roots, conditioning, degeneracy."""

    V: np.ndarray
    V_inv: np.ndarray
    lambdas: SpectralTriple
    cond: float
    degenerate: bool


@dataclass(frozen=True)
class BranchConstants:
    """A labelled root triple of one of the two universal cubics."""

    kind: str
    values: np.ndarray


def char_poly(r: float, params: ModelParams) -> CubicCoeffs:
    """Monic characteristic-polynomial coefficients of the symbol at radius r."""
    if r < 0:
        raise ValueError("r must be non-negative")
    rd = float(damping_power(r, params.sigma))
    return CubicCoeffs(c2=-(rd + r * r), c1=2.0 * r ** 4 + r * r * rd, c0=-(r ** 6))


def _poly_eval(c2, c1, c0, lam):
    return ((lam + c2) * lam + c1) * lam + c0


def _newton_polish(c2, c1, c0, roots):
    """Vectorised Newton iterations on the monic cubic; safeguarded divisor."""
    for _ in range(_NEWTON_STEPS):
        p = _poly_eval(c2, c1, c0, roots)
        dp = (3.0 * roots + 2.0 * c2) * roots + c1
        small = np.abs(dp) < 1e-300
        step = np.where(small, 0.0, p / np.where(small, 1.0, dp))
        roots = roots - step
    return roots


def _pair_conjugates(roots, c2, c1, c0):
    """Clean root triples of real cubics: one real root + exact conjugate pair.

    Real coefficients force either three real roots or a conjugate pair; the
    complex Cardano branch cuts can leave ~1e-16 asymmetries which this
    removes without moving any root beyond round-off.
    """
    scale = 1.0 + np.max(np.abs(roots), axis=-1)
    im = np.abs(roots.imag)
    near_real = im <= 1e-9 * scale[..., None]
    all_real = np.all(near_real, axis=-1)
    out = roots.copy()
    out[all_real] = out[all_real].real + 0.0j
    mixed = ~all_real
    if np.any(mixed):
        sub = out[mixed]
        # index of the most-real root; remaining two become an exact pair
        k = np.argmin(np.abs(sub.imag), axis=-1)
        rows = np.arange(sub.shape[0])
        others = np.array([[j for j in range(3) if j != kk] for kk in k])
        a = sub[rows, others[:, 0]]
        b = sub[rows, others[:, 1]]
        re = 0.5 * (a.real + b.real)
        imv = 0.5 * (np.abs(a.imag) + np.abs(b.imag))
        sgn = np.where(a.imag >= 0, 1.0, -1.0)
        sub[rows, k[rows]] = sub[rows, k[rows]].real + 0.0j
        sub[rows, others[:, 0]] = re + 1j * sgn * imv
        sub[rows, others[:, 1]] = re - 1j * sgn * imv
        out[mixed] = sub
    return out


def solve_cubic_many(c2, c1, c0) -> np.ndarray:
    """Roots of a batch of monic real cubics; returns shape (..., 3) complex.

    Depressed-cubic Cardano in complex arithmetic, anti-cancellation branch
    choice, Newton polishing, and a companion-matrix fallback where the
    discriminant signals near-triple degeneracy.
    """
    c2 = np.asarray(c2, dtype=float)
    c1 = np.asarray(c1, dtype=float)
    c0 = np.asarray(c0, dtype=float)
    shape = np.broadcast_shapes(c2.shape, c1.shape, c0.shape)
    c2, c1, c0 = (np.broadcast_to(a, shape).astype(float) for a in (c2, c1, c0))

    p = c1 - c2 * c2 / 3.0
    q = 2.0 * c2 ** 3 / 27.0 - c2 * c1 / 3.0 + c0
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3

    s = np.sqrt(disc.astype(complex))
    # pick the +/- sign that avoids cancellation in -q/2 +/- s
    u3a = -q / 2.0 + s
    u3b = -q / 2.0 - s
    u3 = np.where(np.abs(u3a) >= np.abs(u3b), u3a, u3b)
    u = u3 ** (1.0 / 3.0)

    omega = np.exp(2j * np.pi / 3.0)
    roots = np.empty(shape + (3,), dtype=complex)
    safe = np.abs(u) > 0
    for k, w in enumerate((1.0, omega, omega ** 2)):
        uk = u * w
        xk = np.where(safe, uk - np.where(safe, p, 0.0) / np.where(safe, 3.0 * uk, 1.0), 0.0)
        roots[..., k] = xk - c2 / 3.0
    # u == 0 means p == q == 0: triple root at -c2/3 (already filled above)

    roots = _newton_polish(c2[..., None], c1[..., None], c0[..., None], roots)

    # near-triple degeneracy: Cardano + Newton lose digits, use companion matrix
    mag = np.maximum.reduce([np.ones(shape), np.abs(c2),
                             np.abs(c1) ** 0.5, np.abs(c0) ** (1.0 / 3.0)])
    degen = np.abs(disc) < _TRIPLE_DEGENERACY_TOL * mag ** 6
    if np.any(degen):
        idx = np.argwhere(degen)
        for ij in idx:
            t = tuple(ij)
            comp = np.array([[0.0, 0.0, -c0[t]],
                             [1.0, 0.0, -c1[t]],
                             [0.0, 1.0, -c2[t]]])
            roots[t] = np.linalg.eigvals(comp)

    return _pair_conjugates(roots, c2, c1, c0)


def solve_cubic(c: CubicCoeffs) -> SpectralTriple:
    """Roots of one monic cubic, as a SpectralTriple (labels unset)."""
    r = solve_cubic_many(np.array(c.c2), np.array(c.c1), np.array(c.c0))
    return SpectralTriple(lam1=r[0], lam2=r[1], lam3=r[2])


def branch_constants(kind: str) -> BranchConstants:
    """Closed-form root triples of the two universal cubics, cross-checked.

    kind="offset" solves y^3 - y^2 + 2y - 1 = 0; kind="critical" solves
    y^3 - 2y^2 + 3y - 1 = 0.  The radical expressions and the numeric cubic
    solver must agree to 1e-10 componentwise, else something is broken.
    """
    s69 = math.sqrt(69.0)
    if kind == "offset":
        z1 = ((3.0 * s69 + 11.0) / 2.0) ** (1.0 / 3.0) - ((3.0 * s69 - 11.0) / 2.0) ** (1.0 / 3.0)
        z2 = ((3.0 * s69 + 11.0) / 2.0) ** (1.0 / 3.0) + ((3.0 * s69 - 11.0) / 2.0) ** (1.0 / 3.0)
        vals = np.array([
            (1.0 + z1) / 3.0,
            (1.0 - z1 / 2.0 + 1j * math.sqrt(3.0) / 2.0 * z2) / 3.0,
            (1.0 - z1 / 2.0 - 1j * math.sqrt(3.0) / 2.0 * z2) / 3.0,
        ])
        coeffs = CubicCoeffs(-1.0, 2.0, -1.0)
    elif kind == "critical":
        z3 = (1.0 / 3.0) * (-11.0 / 2.0 + 1.5 * s69) ** (1.0 / 3.0)
        z4 = (-0.5 + 1j * math.sqrt(3.0) / 2.0) * z3
        z5 = (-0.5 - 1j * math.sqrt(3.0) / 2.0) * z3
        vals = np.array([z - 5.0 / (9.0 * z) + 2.0 / 3.0 for z in (z3, z4, z5)])
        coeffs = CubicCoeffs(-2.0, 3.0, -1.0)
    else:
        raise ValueError(f"unknown kind {kind!r}; expected 'offset' or 'critical'")

    solved = solve_cubic_many(coeffs.c2, coeffs.c1, coeffs.c0)
    matched = _match_to_reference(solved, vals)
    if np.max(np.abs(matched - vals)) > 1e-10:
        raise AssertionError(f"radical/{kind} values disagree with the cubic solver")
    return BranchConstants(kind=kind, values=vals)


def _match_to_reference(roots, reference):
    """Reorder `roots` to minimise total distance to `reference` (3 items)."""
    best, best_perm = None, None
    for perm in permutations(range(3)):
        d = sum(abs(roots[perm[i]] - reference[i]) for i in range(3))
        if best is None or d < best:
            best, best_perm = d, perm
    return np.array([roots[best_perm[i]] for i in range(3)])


def _structural_prediction(r, sigma):
    """Small-zone (sigma<1) / large-zone (sigma>1) root formulas."""
    slow = r ** (4.0 - 2.0 * sigma)
    return np.array([slow,
                     r ** 2 + slow,
                     float(damping_power(r, sigma)) - 2.0 * slow], dtype=complex)


_STRUCTURAL_LABELS = ("plate", "heat", "damping")
_OFFSET_LABELS = ("offset_1", "offset_2", "offset_3")
_CRITICAL_LABELS = ("critical_1", "critical_2", "critical_3")


def _zone_prediction(r, sigma, eps=EPS_DEFAULT, N=N_DEFAULT):
    """(predicted roots, labels) in the zone containing r; None in the middle."""
    if sigma == 1.0:
        return branch_constants("critical").values * r * r, _CRITICAL_LABELS
    if r <= eps:
        if sigma < 1.0:
            return _structural_prediction(r, sigma), _STRUCTURAL_LABELS
        return branch_constants("offset").values * r * r, _OFFSET_LABELS
    if r >= N:
        if sigma < 1.0:
            return branch_constants("offset").values * r * r, _OFFSET_LABELS
        return _structural_prediction(r, sigma), _STRUCTURAL_LABELS
    return None, None


def eigenvalues(r: float, params: ModelParams,
                eps: float = EPS_DEFAULT, N: float = N_DEFAULT) -> SpectralTriple:
    """Characteristic roots at radius r with branch labels.

    In the small/large zones each root is matched to the nearest asymptotic
    prediction.  In the bounded zone labels are propagated by continuity
    along a short log-spaced walk from the small-zone boundary.
    """
    roots = solve_cubic_many(*_coeff_arrays(np.array([r]), params))[0]
    pred, labels = _zone_prediction(r, params.sigma, eps, N)
    if pred is not None:
        ordered = _match_to_reference(roots, pred)
        return SpectralTriple(*ordered, branch_labels=labels)

    # bounded zone, sigma != 1: continuity walk from r = eps
    path = np.geomspace(eps, r, 33)
    pred0, labels = _zone_prediction(path[0], params.sigma, eps, N)
    prev = _match_to_reference(
        solve_cubic_many(*_coeff_arrays(path[:1], params))[0], pred0)
    for rv in path[1:]:
        cur = solve_cubic_many(*_coeff_arrays(np.array([rv]), params))[0]
        prev = _match_to_reference(cur, prev)
    return SpectralTriple(*prev, branch_labels=labels)


def _coeff_arrays(r, params: ModelParams):
    r = np.asarray(r, dtype=float)
    rd = damping_power(r, params.sigma)
    return -(rd + r * r), 2.0 * r ** 4 + r * r * rd, -(r ** 6)


def eigenvalues_grid(r_values, params: ModelParams) -> np.ndarray:
    """Unlabelled root triples for an array of radii; shape (len(r), 3)."""
    return solve_cubic_many(*_coeff_arrays(np.asarray(r_values, dtype=float), params))


def branch_sweep(params: ModelParams, r_grid) -> np.ndarray:
    """Continuity-ordered root branches along an increasing r grid.

    Returns shape (3, len(r_grid)); row j follows one continuous branch,
    ordered at the first grid point by the zone prediction there.
    """
    r_grid = np.asarray(r_grid, dtype=float)
    roots = eigenvalues_grid(r_grid, params)
    out = np.empty((3, r_grid.size), dtype=complex)
    pred, _ = _zone_prediction(r_grid[0], params.sigma)
    if pred is None:
        pred = roots[0]
    out[:, 0] = _match_to_reference(roots[0], pred)
    for i in range(1, r_grid.size):
        out[:, i] = _match_to_reference(roots[i], out[:, i - 1])
    return out


def eigen_decomp(r: float, params: ModelParams,
                 collision_tol: float = _ROOT_COLLISION_TOL) -> EigenDecomp:
    """Eigen-decomposition of the symbol with polished roots on the diagonal.

    Eigenvectors come from numpy's solver; eigenvalues are replaced by the
    Newton-polished cubic roots matched column by column.  `degenerate` is
    set when two roots collide within collision_tol, in which case V may be
    ill-conditioned and callers should fall back to a series exponential.
    """
    A = symbol_matrix(r, params)
    w, V = np.linalg.eig(A.astype(complex))
    trip = eigenvalues(r, params)
    lam = _match_to_reference(trip.values, w)

    d01 = abs(lam[0] - lam[1]) < collision_tol * (1 + abs(lam[0]) + abs(lam[1]))
    d02 = abs(lam[0] - lam[2]) < collision_tol * (1 + abs(lam[0]) + abs(lam[2]))
    d12 = abs(lam[1] - lam[2]) < collision_tol * (1 + abs(lam[1]) + abs(lam[2]))
    degenerate = bool(d01 or d02 or d12)

    cond = float(np.linalg.cond(V))
    V_inv = np.linalg.inv(V)
    return EigenDecomp(V=V, V_inv=V_inv,
                       lambdas=SpectralTriple(*lam, branch_labels=trip.branch_labels),
                       cond=cond, degenerate=degenerate)


def spectral_gap_scan(params: ModelParams, eps: float, N: float,
                      samples: int) -> float:
    """Minimum over a log-spaced r grid in [eps, N] of min_j Re lambda_j.

    A strictly positive return verifies the exponential stability of the
    bounded frequency zone.
    """
    if samples == 1:
        if not (eps == N):
            raise ValueError("samples must be >= 2 for a proper scan")
        grid = np.array([eps])
    elif samples < 2:
        raise ValueError("samples must be >= 2")
    else:
        if not 0 < eps < N:
            raise ValueError("need 0 < eps < N")
        grid = np.geomspace(eps, N, samples)
    roots = eigenvalues_grid(grid, params)
    return float(np.min(roots.real))


def smoothing_exponent(params: ModelParams, r_lo: float, r_hi: float,
                       samples: int = 48) -> float:
    """Growth exponent of the spectral abscissa min_j Re lambda_j(r) for large r.

    Least-squares slope of log(abscissa) vs log(r) over a log grid in
    [r_lo, r_hi].  Expected: 2 for sigma in [0, 1], 4 - 2*sigma for
    sigma in (1, 2), and 0 at sigma = 2 (uniform rate, no smoothing gain).
    """
    if not (1.0 <= r_lo < r_hi):
        raise ValueError("need 1 <= r_lo < r_hi in the large-frequency zone")
    grid = np.geomspace(r_lo, r_hi, samples)
    absc = np.min(eigenvalues_grid(grid, params).real, axis=1)
    if np.any(absc <= 0):
        raise ArithmeticError("non-positive spectral abscissa at large r; "
                              "root solver is broken")
    slope = np.polyfit(np.log(grid), np.log(absc), 1)[0]
    return float(slope)

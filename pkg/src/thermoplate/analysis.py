"""Norms, moments, predicted decay rates, and profile/diffusion diagnostics.

Everything here reduces a grid evolution to numbers that can be compared
against closed-form rate predictions: Parseval-based Sobolev norms, weighted
L1 norms, the mean/moment decomposition of initial data, log-log slope fits,
and the reference diffusion systems whose distance to the full solution
decays strictly faster than the solution itself.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .asymptotics import (N1HALF_STENCIL, N1_STENCIL, T0_DAMPING,
                          coupling_eigenvector_matrix)
from .evolve import Grid, GridPropagator, PropagatorOptions
from .model import ModelParams, damping_power, state_from_physical
from .spectrum import EPS_DEFAULT, N_DEFAULT, branch_constants

_DEFAULT_OPTS = PropagatorOptions()


@dataclass(frozen=True)
class NormSpec:
    """A norm choice: sobolev(s), lebesgue(q) or weighted_l1(delta)."""

    kind: str
    param: float = 0.0

    def __post_init__(self):
        if self.kind == "sobolev":
            if self.param < 0:
                raise ValueError("sobolev order s must be >= 0")
        elif self.kind == "lebesgue":
            if not (self.param >= 1):
                raise ValueError("lebesgue exponent q must be >= 1 (inf allowed)")
        elif self.kind == "weighted_l1":
            if not 0.0 <= self.param <= 1.0:
                raise ValueError("weight exponent delta must lie in [0, 1]")
        else:
            raise ValueError(f"unknown norm kind {self.kind!r}")


@dataclass(frozen=True)
class DecayFit:
    """Log-log least-squares fit of a norm trajectory."""

    slope: float
    intercept: float
    r_squared: float
    window: tuple

    def __post_init__(self):
        if not self.window[0] < self.window[1]:
            raise ValueError("fit window must be increasing")


@dataclass(frozen=True)
class MomentDecomp:
    """Componentwise data mean P and the weighted L^{1,1} norm of the data."""

    P: np.ndarray
    weighted_norm: float


@dataclass(frozen=True)
class ProfileCheck:
    """Result of the two-sided compensated-norm check."""

    lower_ok: bool
    upper_fit: DecayFit
    ratio_min: float
    ratio_max: float
    rate: float
    times: np.ndarray
    norms: np.ndarray
    compensated: np.ndarray


def _smoothstep(u):
    """C^infinity step: 0 for u <= 0, 1 for u >= 1, exp(-1/u) glue between."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        ga = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        gb = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    return ga / (ga + gb)


def zone_cutoff(r, eps: float = EPS_DEFAULT, N: float = N_DEFAULT):
    """Smooth partition of unity (chi_small, chi_mid, chi_large) at radius r.

    chi_small is supported in r <= eps (transition width eps/2), chi_large in
    r >= N (transition width N/2), and the three add to 1 exactly.
    """
    if not eps < N:
        raise ValueError("need eps < N")
    r = np.asarray(r, dtype=float)
    chi_small = 1.0 - _smoothstep((r - 0.5 * eps) / (0.5 * eps))
    chi_large = _smoothstep((r - N) / (0.5 * N))
    chi_mid = 1.0 - chi_small - chi_large
    return chi_small, chi_mid, chi_large


def sobolev_norm(w_hat, grid: Grid, s: float = 0.0) -> float:
    """Homogeneous Sobolev norm from Fourier coefficients by Parseval.

    norm^2 = L^n * sum_k |xi_k|^(2s) |w_hat_k|^2, summed over components when
    `w_hat` carries a leading component axis.  The zero mode contributes its
    plain modulus at s = 0 and nothing for s > 0.
    """
    if s < 0:
        raise ValueError("s must be >= 0")
    w_hat = np.asarray(w_hat)
    r = grid.radii()
    if s == 0.0:
        weight = np.ones_like(r)
    else:
        weight = np.where(r > 0, r ** (2.0 * s), 0.0)
    total = np.sum(weight * np.abs(w_hat) ** 2)
    return float(np.sqrt(grid.box_length ** grid.dim * total))


def spatial_l2_norm(f, grid: Grid) -> float:
    """Riemann-sum L2 norm in physical space (Parseval cross-check)."""
    return float(np.sqrt(np.sum(np.abs(np.asarray(f)) ** 2) * grid.cell_volume))


def lebesgue_norm(f, grid: Grid, q: float) -> float:
    """Riemann-sum Lq norm; q = inf uses the grid maximum."""
    f = np.abs(np.asarray(f))
    if np.isinf(q):
        return float(np.max(f))
    if q < 1:
        raise ValueError("q must be >= 1")
    return float((np.sum(f ** q) * grid.cell_volume) ** (1.0 / q))


def weighted_l1_norm(f, grid: Grid, delta: float) -> float:
    """Riemann sum of (1 + |x - center|)^delta * |f| over the box.

    Warns when more than a 1e-8 fraction of the mass sits within two cells
    of the boundary, where the periodic weight is ambiguous.
    """
    if not 0.0 <= delta <= 1.0:
        raise ValueError("delta must lie in [0, 1]")
    f = np.abs(np.asarray(f, dtype=float))
    total = float(np.sum(f))
    if total > 0:
        edge = 2 * grid.spacing
        ax = grid.axis_coords()
        near = (ax < edge) | (ax > grid.box_length - edge)
        mask = np.zeros(grid.shape, dtype=bool)
        for d in range(grid.dim):
            shape = [1] * grid.dim
            shape[d] = grid.points_per_axis
            mask |= near.reshape(shape)
        if float(np.sum(f[mask])) > 1e-8 * total:
            warnings.warn("significant mass within two cells of the boundary; "
                          "the centred weight is ambiguous under periodification")
    w = (1.0 + grid.centered_radius()) ** delta
    return float(np.sum(w * f) * grid.cell_volume)


def centered_fourier(f, grid: Grid) -> np.ndarray:
    """Continuum-convention Fourier transform with x measured from the box centre.

    Approximates (2*pi)^(-n/2) * integral f(x) exp(-i x.xi) dx over the box
    with x in [-L/2, L/2)^n; the centring shows up as a parity phase on the
    DFT.
    """
    M = grid.points_per_axis
    k = np.fft.fftfreq(M, d=1.0 / M).astype(np.int64)
    mesh = np.meshgrid(*([k] * grid.dim), indexing="ij")
    parity = (-1.0) ** (sum(mesh) % 2)
    pref = grid.cell_volume * (2.0 * np.pi) ** (-0.5 * grid.dim)
    return pref * parity * np.fft.fftn(np.asarray(f), axes=tuple(range(-grid.dim, 0)))


# Calibrated constant of the first-moment bound |f^(xi) - P| <= C |xi| W:
# |exp(-i u) - 1| <= |u| gives C = (2*pi)^(-n/2); asserted with 10% headroom.
def moment_bound_constant(dim: int) -> float:
    return (2.0 * np.pi) ** (-0.5 * dim)


def moment(fields, grid: Grid, validate: bool = True) -> MomentDecomp:
    """Componentwise data mean P and the L^{1,1} norm of the 3-vector field.

    P_l = (2*pi)^(-n/2) * integral of component l; weighted_norm integrates
    (1 + |x - center|) against the pointwise Euclidean magnitude.  When
    `validate` is set, |f^(xi) - P| <= 1.1 * C * |xi| * weighted_norm is
    spot-checked on the lowest nonzero lattice frequencies.
    """
    fields = np.asarray(fields, dtype=float)
    if fields.shape != (3,) + grid.shape:
        raise ValueError("expected a (3, ...) field stack matching the grid")
    pref = (2.0 * np.pi) ** (-0.5 * grid.dim)
    P = pref * np.sum(fields.reshape(3, -1), axis=1) * grid.cell_volume
    mag = np.sqrt(np.sum(fields ** 2, axis=0))
    weighted = float(np.sum((1.0 + grid.centered_radius()) * mag) * grid.cell_volume)

    if validate:
        fh = centered_fourier(fields, grid)
        r = grid.radii().ravel()
        order = np.argsort(r, kind="stable")
        sample = [i for i in order if r[i] > 0][:32]
        diff = np.sqrt(np.sum(np.abs(fh.reshape(3, -1)[:, sample]
                                     - P[:, None]) ** 2, axis=0))
        bound = 1.1 * moment_bound_constant(grid.dim) * r[sample] * weighted
        if np.any(diff > bound + 1e-12):
            raise AssertionError("first-moment bound violated; data is not "
                                 "resolved or not box-concentrated")
    return MomentDecomp(P=P, weighted_norm=weighted)


def energy_decay_rate(sigma: float, n: int, m: float, s: float) -> float:
    """Predicted decay exponent of the state Sobolev norm for L^m data."""
    if not 1.0 <= m <= 2.0:
        raise ValueError("m must lie in [1, 2]")
    if s < 0 or n < 1:
        raise ValueError("need s >= 0 and n >= 1")
    num = (2.0 - m) * n + 2.0 * m * s
    if sigma < 1.0:
        return num / (4.0 * m * (2.0 - sigma))
    return num / (4.0 * m)


def lp_lq_decay_rate(sigma: float, n: int, p: float, q: float, s: float) -> float:
    """Predicted decay exponent of the Lp -> Lq mapping of the evolution."""
    if not (1.0 <= p <= q):
        raise ValueError("need 1 <= p <= q")
    if s < 0:
        raise ValueError("s must be >= 0")
    gap = 1.0 / p - (0.0 if np.isinf(q) else 1.0 / q)
    if sigma < 1.0:
        return s / (4.0 - 2.0 * sigma) + n * gap / (4.0 - 2.0 * sigma)
    return s / 2.0 + n * gap / 2.0


def profile_decay_rate(sigma: float, n: int, s: float) -> float:
    """Claimed sharp two-sided rate (n + 2s) / (4 * max(2 - sigma, 1))."""
    if s < 0 or n < 1:
        raise ValueError("need s >= 0 and n >= 1")
    return (n + 2.0 * s) / (4.0 * max(2.0 - sigma, 1.0))


def diffusion_gain(sigma: float) -> float:
    """Claimed extra decay of the reference-system residual over the solution."""
    if not 0.0 <= sigma <= 2.0:
        raise ValueError("sigma must lie in [0, 2]")
    if sigma < 1.0:
        return (1.0 - sigma) / (2.0 - sigma)
    return sigma - 1.0


def expected_rate(context: str, **kw) -> float:
    """Dispatch the closed-form rate predictions by context name."""
    if context == "energy":
        return energy_decay_rate(kw["sigma"], kw["n"], kw["m"], kw["s"])
    if context == "lp_lq":
        return lp_lq_decay_rate(kw["sigma"], kw["n"], kw["p"], kw["q"], kw["s"])
    if context == "profile":
        return profile_decay_rate(kw["sigma"], kw["n"], kw["s"])
    if context == "diffusion_gain":
        return diffusion_gain(kw["sigma"])
    raise ValueError(f"unknown rate context {context!r}")


def decay_fit(times, values) -> DecayFit:
    """Ordinary least squares of log(value) on log(time)."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size < 6:
        raise ValueError("need at least 6 samples for a decay fit")
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    if np.any(values <= 0):
        raise ValueError("values must be positive for a log-log fit")
    lt, lv = np.log(times), np.log(values)
    slope, intercept = np.polyfit(lt, lv, 1)
    resid = lv - (slope * lt + intercept)
    ss_tot = float(np.sum((lv - lv.mean()) ** 2))
    r2 = 1.0 if ss_tot < 1e-30 else 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return DecayFit(slope=float(slope), intercept=float(intercept),
                    r_squared=r2, window=(float(times[0]), float(times[-1])))


def _reference_factors(r_values: np.ndarray, params: ModelParams):
    """Conjugation matrices and exponent triples of the reference system.

    For sigma < 1 the conjugation is the r-dependent truncated chain
    T0 (I + r^(2-2s) N1) (I + r^(4-4s) N1half) with diffusive exponents
    (r^(4-2s), r^2, r^(2s)); for sigma > 1 it is the constant eigenvector
    matrix of the r^2 block with exponents y_j r^2.
    """
    sigma = params.sigma
    if sigma == 1.0:
        raise ValueError("no improved reference system at sigma = 1")
    K = r_values.size
    if sigma < 1.0:
        step = r_values ** (2.0 - 2.0 * sigma)
        step2 = r_values ** (4.0 - 4.0 * sigma)
        eye = np.eye(3)
        T = (T0_DAMPING[None, :, :]
             @ (eye[None, :, :] + step[:, None, None] * N1_STENCIL)
             @ (eye[None, :, :] + step2[:, None, None] * N1HALF_STENCIL))
        T = T.astype(complex)
        h = np.stack([r_values ** (4.0 - 2.0 * sigma),
                      r_values ** 2,
                      damping_power(r_values, sigma)], axis=1).astype(complex)
    else:
        T0 = coupling_eigenvector_matrix()
        T = np.broadcast_to(T0, (K, 3, 3)).astype(complex)
        y = branch_constants("offset").values
        h = (r_values ** 2)[:, None] * y[None, :]
    T_inv = np.linalg.inv(T)
    return T, T_inv, h


def reference_solution(w0, r: float, params: ModelParams, t: float) -> np.ndarray:
    """Evolve one mode by the diffusive reference system (small-radius regime)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    T, T_inv, h = _reference_factors(np.array([float(r)]), params)
    w0 = np.asarray(w0, dtype=complex)
    return (T[0] * np.exp(-h[0] * t)) @ (T_inv[0] @ w0)


class ReferencePropagator:
    """Grid-wide reference-system evolution sharing one factorisation."""

    def __init__(self, grid: Grid, params: ModelParams):
        self.grid = grid
        ksq = grid.wave_index_sq().ravel()
        self._uniq, self._inverse = np.unique(ksq, return_inverse=True)
        r_u = grid.min_radius * np.sqrt(self._uniq.astype(float))
        self._T, self._T_inv, self._h = _reference_factors(r_u, params)

    def propagate_hat(self, w_hat: np.ndarray, t: float) -> np.ndarray:
        flat = np.asarray(w_hat, dtype=complex).reshape(3, -1)
        phase = np.exp(-self._h * t)
        P = (self._T * phase[:, None, :]) @ self._T_inv
        out = np.einsum("mij,jm->im", P[self._inverse], flat)
        return out.reshape((3,) + self.grid.shape)


def _initial_state_hat(fields, grid: Grid) -> np.ndarray:
    fields = np.asarray(fields, dtype=float)
    hats = np.stack([grid.forward_fft(f) for f in fields])
    return state_from_physical(hats, grid.radii())


def state_norm_curve(fields, grid: Grid, params: ModelParams, s: float, times,
                     opts: PropagatorOptions = _DEFAULT_OPTS,
                     propagator: GridPropagator | None = None) -> np.ndarray:
    """Sobolev norms of the evolved state at the given times."""
    w0 = _initial_state_hat(fields, grid)
    prop = propagator or GridPropagator(grid, params, opts)
    return np.array([sobolev_norm(prop.propagate_hat(w0, float(t)), grid, s)
                     for t in times])


def residual_norm_curve(fields, grid: Grid, params: ModelParams, s: float, times,
                        eps: float = EPS_DEFAULT, N: float = N_DEFAULT,
                        opts: PropagatorOptions = _DEFAULT_OPTS,
                        propagator: GridPropagator | None = None) -> np.ndarray:
    """Small-zone Sobolev norms of (full solution - reference solution)."""
    w0 = _initial_state_hat(fields, grid)
    full = propagator or GridPropagator(grid, params, opts)
    ref = ReferencePropagator(grid, params)
    chi = zone_cutoff(grid.radii(), eps, N)[0]
    vals = []
    for t in times:
        diff = full.propagate_hat(w0, float(t)) - ref.propagate_hat(w0, float(t))
        vals.append(sobolev_norm(chi * diff, grid, s))
    return np.array(vals)


def diffusion_residual(fields, grid: Grid, params: ModelParams, s: float, times,
                       eps: float = EPS_DEFAULT, N: float = N_DEFAULT,
                       opts: PropagatorOptions = _DEFAULT_OPTS) -> DecayFit:
    """Decay fit of the reference-system residual (sigma = 1 rejected)."""
    if params.sigma == 1.0:
        raise ValueError("no improved reference system at sigma = 1")
    vals = residual_norm_curve(fields, grid, params, s, times, eps, N, opts)
    return decay_fit(times, vals)


def two_sided_profile_check(fields, grid: Grid, params: ModelParams, s: float,
                            times, floor_factor: float = 0.01,
                            opts: PropagatorOptions = _DEFAULT_OPTS,
                            propagator: GridPropagator | None = None) -> ProfileCheck:
    """Compensated-norm check of the claimed sharp two-sided decay rate.

    Multiplies the measured state norm by t^rate with the claimed profile
    rate; a genuinely two-sided profile keeps this quantity inside a fixed
    band.  lower_ok asserts the band floor against floor_factor * |P|.
    """
    dec = moment(fields, grid)
    p_mag = float(np.linalg.norm(dec.P))
    if p_mag < 1e-12:
        raise ValueError("nonzero data mean vector P is required for the "
                         "two-sided profile check")
    times = np.asarray(times, dtype=float)
    norms = state_norm_curve(fields, grid, params, s, times, opts,
                             propagator=propagator)
    rate = profile_decay_rate(params.sigma, grid.dim, s)
    comp = norms * times ** rate
    return ProfileCheck(lower_ok=bool(np.min(comp) >= floor_factor * p_mag),
                        upper_fit=decay_fit(times, norms),
                        ratio_min=float(np.min(comp)),
                        ratio_max=float(np.max(comp)),
                        rate=rate, times=times, norms=norms, compensated=comp)

"""Propagation of initial data: per-mode exponentials and FFT grid evolution.

Every Fourier mode evolves independently by the 3x3 matrix exponential
exp(-t A(r)).  The production route diagonalises A(r) (exact cubic roots on
the diagonal, numeric eigenvectors) and falls back to a scaling-and-squaring
series wherever roots collide.  An independently coded series exponential
(`expm_oracle`) exists purely to cross-check the production route in tests.

Grid evolution is pseudo-spectral on a periodic box: forward FFT, per-mode
state transform and propagation, inverse FFT.  The FFT convention is fixed
here once: `forward_fft` divides by M^n, so a pure mode of amplitude a has
Fourier coefficient a, and the spatial L2 norm equals
sqrt(L^n * sum |f_hat|^2) (see `analysis.sobolev_norm`).

The zero mode is special: the state evolves by exp(-t A(0)) (identity for
sigma > 0, damping-block decay for sigma = 0), while u itself follows its
scalar ODE there, u_tt = 0 for sigma > 0 and u_tt + u_t = 0 for sigma = 0.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, state_from_physical
from .spectrum import branch_constants, solve_cubic_many

_PERMS = np.array([(0, 1, 2), (0, 2, 1), (1, 0, 2),
                   (1, 2, 0), (2, 0, 1), (2, 1, 0)])


@dataclass(frozen=True)
class Grid:
    """Periodic box discretisation: dim in {1,2,3}, M points per axis, length L."""

    dim: int
    points_per_axis: int
    box_length: float

    def __post_init__(self):
        M = self.points_per_axis
        if self.dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")
        if M < 8 or (M & (M - 1)) != 0:
            raise ValueError("points_per_axis must be a power of two >= 8")
        if self.box_length <= 0:
            raise ValueError("box_length must be positive")

    @property
    def shape(self):
        return (self.points_per_axis,) * self.dim

    @property
    def spacing(self) -> float:
        return self.box_length / self.points_per_axis

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def nyquist_radius(self) -> float:
        return np.pi * self.points_per_axis / self.box_length

    @property
    def min_radius(self) -> float:
        """Smallest nonzero frequency magnitude 2*pi/L."""
        return 2.0 * np.pi / self.box_length

    def axis_coords(self) -> np.ndarray:
        """Grid coordinates along one axis, measured from the box corner."""
        return np.arange(self.points_per_axis) * self.spacing

    def coords(self):
        """Meshgrid coordinate arrays (one per axis), corner origin."""
        ax = self.axis_coords()
        return np.meshgrid(*([ax] * self.dim), indexing="ij")

    def centered_radius(self) -> np.ndarray:
        """|x - center| over the grid (weight coordinate for weighted norms)."""
        c = 0.5 * self.box_length
        ax = self.axis_coords() - c
        mesh = np.meshgrid(*([ax] * self.dim), indexing="ij")
        return np.sqrt(sum(m ** 2 for m in mesh))

    def wave_index_sq(self) -> np.ndarray:
        """Integer |k|^2 over the frequency lattice (exact grouping key)."""
        M = self.points_per_axis
        k = np.fft.fftfreq(M, d=1.0 / M).astype(np.int64)
        mesh = np.meshgrid(*([k] * self.dim), indexing="ij")
        return sum(m * m for m in mesh)

    def radii(self) -> np.ndarray:
        """Frequency magnitudes |xi| = (2*pi/L) * |k| over the lattice."""
        return self.min_radius * np.sqrt(self.wave_index_sq().astype(float))

    def forward_fft(self, f) -> np.ndarray:
        return np.fft.fftn(np.asarray(f)) / self.points_per_axis ** self.dim

    def inverse_fft(self, fh) -> np.ndarray:
        return np.fft.ifftn(np.asarray(fh)) * self.points_per_axis ** self.dim


@dataclass(frozen=True)
class SpectralState:
    """Three complex Fourier fields over the grid lattice at one time."""

    grid: Grid
    w: np.ndarray  # shape (3, *grid.shape), complex
    t: float = 0.0

    def __post_init__(self):
        if self.w.shape != (3,) + self.grid.shape:
            raise ValueError("state shape does not match the grid")
        if self.t < 0:
            raise ValueError("time stamp must be non-negative")


@dataclass(frozen=True)
class PropagatorOptions:
    """Method selection and robustness thresholds for per-mode propagation."""

    method: str = "auto"  # "auto" | "eigen" | "series"
    degeneracy_tol: float = 1e-8
    cond_max: float = 1e8
    series_order: int = 20
    series_theta: float = 0.5

    def __post_init__(self):
        if self.method not in ("auto", "eigen", "series"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.degeneracy_tol <= 0:
            raise ValueError("degeneracy_tol must be positive")


_DEFAULT_OPTS = PropagatorOptions()


def _series_expm(M: np.ndarray, order: int, theta: float) -> np.ndarray:
    """Scaling-and-squaring truncated Taylor exponential of a 3x3 matrix."""
    M = np.asarray(M, dtype=complex)
    nrm = np.linalg.norm(M, np.inf)
    s = 0 if nrm <= theta else int(np.ceil(np.log2(nrm / theta)))
    B = M / (2.0 ** s)
    E = np.eye(3, dtype=complex)
    term = np.eye(3, dtype=complex)
    for k in range(1, order + 1):
        term = term @ B / k
        E = E + term
    for _ in range(s):
        E = E @ E
    return E


def expm_oracle(M: np.ndarray, t: float) -> np.ndarray:
    """Independent exp(-t*M) for tests: fixed order-24 Taylor with squaring.

    Deliberately shares no code with the production propagator's eigen route;
    used as the second side of the propagator cross-check.
    """
    A = -t * np.asarray(M, dtype=complex)
    nrm = np.linalg.norm(A, np.inf)
    s = 0 if nrm <= 0.25 else int(np.ceil(np.log2(nrm / 0.25)))
    B = A / (2.0 ** s)
    E = np.eye(3, dtype=complex)
    term = np.eye(3, dtype=complex)
    for k in range(1, 25):
        term = term @ B / k
        E = E + term
    for _ in range(s):
        E = E @ E
    return E


def _batched_factors(r_values: np.ndarray, params: ModelParams,
                     opts: PropagatorOptions):
    """Eigen factors (V, V_inv, lam) for an array of radii plus a series mask.

    Roots come from the polished cubic solver and are matched to numpy's
    eigenvalues column by column; modes whose roots collide (or whose
    eigenvector matrix is ill-conditioned) are flagged for the series route.
    """
    K = r_values.size
    rd = np.ones(K) if params.sigma == 0.0 else r_values ** (2.0 * params.sigma)
    from .model import COUPLING_DAMP, COUPLING_LAP
    A = (r_values ** 2)[:, None, None] * COUPLING_LAP + rd[:, None, None] * COUPLING_DAMP

    lam = solve_cubic_many(-(rd + r_values ** 2),
                           2.0 * r_values ** 4 + r_values ** 2 * rd,
                           -(r_values ** 6))

    w, V = np.linalg.eig(A.astype(complex))
    # match polished roots to numpy's eigenvalue order, vectorised over modes
    cost = np.zeros((K, len(_PERMS)))
    for p, perm in enumerate(_PERMS):
        cost[:, p] = np.abs(lam[:, perm] - w).sum(axis=1)
    best = np.argmin(cost, axis=1)
    lam_matched = np.take_along_axis(lam, _PERMS[best], axis=1)

    sep_scale = 1.0 + np.abs(lam_matched)[:, :, None] + np.abs(lam_matched)[:, None, :]
    diff = np.abs(lam_matched[:, :, None] - lam_matched[:, None, :])
    iu = np.triu_indices(3, k=1)
    collide = np.any(diff[:, iu[0], iu[1]] <
                     opts.degeneracy_tol * sep_scale[:, iu[0], iu[1]], axis=1)
    cond = np.linalg.cond(V)
    series_mask = collide | (cond > opts.cond_max) | ~np.isfinite(cond)
    if opts.method == "series":
        series_mask = np.ones(K, dtype=bool)
    elif opts.method == "eigen":
        if np.any(series_mask):
            raise ArithmeticError("eigen route requested but roots are degenerate")
        series_mask = np.zeros(K, dtype=bool)

    V_inv = np.full_like(V, np.nan)
    ok = ~series_mask
    if np.any(ok):
        V_inv[ok] = np.linalg.inv(V[ok])
    return A, V, V_inv, lam_matched, series_mask


def propagator_matrix(r: float, params: ModelParams, t: float,
                      opts: PropagatorOptions = _DEFAULT_OPTS) -> np.ndarray:
    """The 3x3 matrix exp(-t A(r)) by the production route."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0.0:
        return np.eye(3, dtype=complex)
    A, V, V_inv, lam, series = _batched_factors(np.array([float(r)]), params, opts)
    if series[0]:
        return _series_expm(-t * A[0], opts.series_order, opts.series_theta)
    return (V[0] * np.exp(-lam[0] * t)) @ V_inv[0]


def propagate_mode(w0, r: float, params: ModelParams, t: float,
                   opts: PropagatorOptions = _DEFAULT_OPTS) -> np.ndarray:
    """Evolve one 3-component Fourier amplitude by time t."""
    w0 = np.asarray(w0, dtype=complex)
    if t == 0.0:
        return w0.copy()
    return propagator_matrix(r, params, t, opts) @ w0


class GridPropagator:
    """Precomputed per-radius factors for repeated propagation on one grid.

    Building the factors costs one batched eigen-decomposition over the
    distinct |k|^2 values of the lattice; each subsequent time evaluation is
    a pair of gathered 3x3 products per mode.
    """

    def __init__(self, grid: Grid, params: ModelParams,
                 opts: PropagatorOptions = _DEFAULT_OPTS,
                 threads: int | None = None):
        self.grid = grid
        self.params = params
        self.opts = opts
        ksq = grid.wave_index_sq().ravel()
        self._uniq, self._inverse = np.unique(ksq, return_inverse=True)
        self._r_u = grid.min_radius * np.sqrt(self._uniq.astype(float))
        if threads and threads > 1 and self._r_u.size >= 2 * threads:
            # chunked factorisation; results are gathered in input order so
            # the outcome is identical to the serial path
            chunks = np.array_split(np.arange(self._r_u.size), threads)
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(
                    lambda idx: _batched_factors(self._r_u[idx], params, opts),
                    chunks))
            self._A = np.concatenate([p[0] for p in parts])
            self._V = np.concatenate([p[1] for p in parts])
            self._V_inv = np.concatenate([p[2] for p in parts])
            self._lam = np.concatenate([p[3] for p in parts])
            self._series = np.concatenate([p[4] for p in parts])
        else:
            (self._A, self._V, self._V_inv,
             self._lam, self._series) = _batched_factors(self._r_u, params, opts)

    @property
    def unique_radii(self) -> np.ndarray:
        return self._r_u

    def mode_matrices(self, t: float) -> np.ndarray:
        """exp(-t A(r)) for every distinct radius; shape (K, 3, 3)."""
        K = self._r_u.size
        P = np.empty((K, 3, 3), dtype=complex)
        ok = ~self._series
        if np.any(ok):
            phase = np.exp(-self._lam[ok] * t)
            P[ok] = (self._V[ok] * phase[:, None, :]) @ self._V_inv[ok]
        for idx in np.nonzero(self._series)[0]:
            P[idx] = _series_expm(-t * self._A[idx],
                                  self.opts.series_order, self.opts.series_theta)
        return P

    def propagate_hat(self, w_hat: np.ndarray, t: float) -> np.ndarray:
        """Apply exp(-t A) mode by mode to a (3, *grid.shape) state."""
        if t == 0.0:
            return np.asarray(w_hat, dtype=complex).copy()
        flat = np.asarray(w_hat, dtype=complex).reshape(3, -1)
        P = self.mode_matrices(t)[self._inverse]      # (modes, 3, 3)
        out = np.einsum("mij,jm->im", P, flat)
        return out.reshape((3,) + self.grid.shape)


def trustworthy_horizon(grid: Grid, params: ModelParams) -> float:
    """Largest time at which the periodic box still mimics free space.

    The box replaces the frequency continuum below r_min = 2*pi/L; decay
    fits are trusted while the slowest resolved mode has barely decayed,
    t <= 0.1 / min_j Re lambda_j(r_min).
    """
    lam = solve_cubic_many(
        *(np.array([c]) for c in _char_coeffs(grid.min_radius, params)))[0]
    absc = float(np.min(lam.real))
    if absc <= 0:
        raise ArithmeticError("non-positive abscissa at the box frequency")
    return 0.1 / absc


def _char_coeffs(r: float, params: ModelParams):
    rd = 1.0 if (r == 0.0 and params.sigma == 0.0) else r ** (2.0 * params.sigma)
    return -(rd + r * r), 2.0 * r ** 4 + r * r * rd, -(r ** 6)


def _zero_mode_u(u0_zero, u1_zero, sigma: float, t: float):
    """u^ at the zero mode from its own scalar ODE."""
    if sigma == 0.0:
        return u0_zero + (1.0 - np.exp(-t)) * u1_zero
    return u0_zero + t * u1_zero


def evolve_grid(fields, grid: Grid, params: ModelParams, t: float,
                opts: PropagatorOptions = _DEFAULT_OPTS,
                propagator: GridPropagator | None = None):
    """Evolve real (u0, u1, theta0) on a periodic grid to time t.

    Returns real fields (u, u_t, theta).  A prebuilt GridPropagator can
    be passed to amortise the factorisation across several times.
    """
    u0, u1, th0 = (np.asarray(f, dtype=float) for f in fields)
    if u0.shape != grid.shape or u1.shape != grid.shape or th0.shape != grid.shape:
        raise ValueError("field shapes do not match the grid")
    if t < 0:
        raise ValueError("t must be non-negative")
    if propagator is None:
        propagator = GridPropagator(grid, params, opts)

    u0h = grid.forward_fft(u0)
    u1h = grid.forward_fft(u1)
    th0h = grid.forward_fft(th0)
    r = grid.radii()
    w0 = state_from_physical(np.stack([u0h, u1h, th0h]), r)
    wt = propagator.propagate_hat(w0, t)

    zero = grid.wave_index_sq() == 0
    r_safe = np.where(zero, 1.0, r)
    uh = (wt[0] - wt[1]) / (2.0 * r_safe ** 2)
    uth = 0.5 * (wt[0] + wt[1])
    thh = wt[2]
    uh = np.where(zero, _zero_mode_u(u0h, u1h, params.sigma, t), uh)

    out = []
    for fh in (uh, uth, thh):
        f = grid.inverse_fft(fh)
        scale = np.max(np.abs(f.real)) + 1e-300
        if np.max(np.abs(f.imag)) > 1e-10 * max(1.0, scale):
            raise ArithmeticError("evolved field has a non-negligible imaginary part")
        out.append(f.real)
    return tuple(out)


def complex_heat_kernel(y: complex, t: float, x, dim: int = 1) -> np.ndarray:
    """Complex heat kernel (4*pi*y*t)^(-n/2) * exp(-|x|^2 / (4*y*t)).

    Principal branch; requires Re y > 0 and t > 0.  `x` is the radial
    distance (any array shape).
    """
    y = complex(y)
    if y.real <= 0:
        raise ValueError("complex diffusion constant must have positive real part")
    if t <= 0:
        raise ValueError("t must be positive")
    x = np.asarray(x, dtype=float)
    pref = (4.0 * np.pi * y * t) ** (-0.5 * dim)
    return pref * np.exp(-(x ** 2) / (4.0 * y * t))


def gaussian_heat_evolution(amplitude: float, width: float, y: complex,
                            t: float, x, dim: int = 1) -> np.ndarray:
    """Closed form of the complex heat semigroup acting on a centred Gaussian.

    For g(x) = amplitude * exp(-|x|^2 / (2 width^2)), the solution of
    v_t + y * (-Laplace) v = 0 with v(0) = g is again a (complex) Gaussian:

        v(t,x) = amplitude * (width^2 / (width^2 + 2 y t))^(n/2)
                 * exp(-|x|^2 / (2 (width^2 + 2 y t))).
    """
    y = complex(y)
    if y.real <= 0:
        raise ValueError("complex diffusion constant must have positive real part")
    x = np.asarray(x, dtype=float)
    s = width * width + 2.0 * y * t
    pref = amplitude * (width * width / s) ** (0.5 * dim)
    return pref * np.exp(-(x ** 2) / (2.0 * s))


def sigma1_gaussian_state(grid: Grid, amplitudes, width: float, t: float):
    """Space-domain oracle for sigma = 1 evolution of Gaussian state data.

    `amplitudes` are the three state amplitudes (a1, a2, a3): the initial
    state components are a_k * exp(-|x - c|^2 / (2 width^2)) with c the box
    centre.  (Physically: u0 = 0, u1 and theta0 Gaussians give a1 = a2.)
    The state at time t is assembled from spectral projections of the
    balanced coefficient block and the Gaussian heat closed form; no FFT and
    no per-mode numerics are involved.
    """
    from .asymptotics import balanced_eigenvector_matrix
    if t <= 0:
        raise ValueError("t must be positive")
    ys = branch_constants("critical").values
    T = balanced_eigenvector_matrix()
    T_inv = np.linalg.inv(T)
    xr = grid.centered_radius()
    out = np.zeros((3,) + grid.shape, dtype=complex)
    for j in range(3):
        proj = np.outer(T[:, j], T_inv[j, :])      # spectral projection
        for k in range(3):
            if amplitudes[k] == 0:
                continue
            gk = gaussian_heat_evolution(amplitudes[k], width, ys[j], t, xr,
                                         dim=grid.dim)
            for l in range(3):
                out[l] += proj[l, k] * gk
    if np.max(np.abs(out.imag)) > 1e-9 * (np.max(np.abs(out.real)) + 1e-300):
        raise ArithmeticError("oracle state has a non-negligible imaginary part")
    return out.real


def scalar_route(u0_hat: complex, u1_hat: complex, theta0_hat: complex,
                 r: float, params: ModelParams, t: float,
                 degeneracy_tol: float = 1e-8) -> complex:
    """u^(t) from the third-order scalar formulation (cross-check route).

    Eliminating theta turns the pair of mode ODEs into a single third-order
    equation for u^ whose characteristic roots are the negatives of the
    symbol's roots.  With distinct roots mu_j,

        u^(t) = sum_j c_j exp(mu_j t),

    where the c_j solve the Vandermonde system for the initial values
    (u^, u^_t, u^_tt)(0) and u^_tt(0) = -r^4 u0 - r^(2s) u1 + r^2 theta0.
    """
    if r <= 0:
        raise ValueError("r must be positive (zero mode is handled separately)")
    if t < 0:
        raise ValueError("t must be non-negative")
    rd = r ** (2.0 * params.sigma)
    mu = solve_cubic_many(np.array(rd + r * r),
                          np.array(2.0 * r ** 4 + r * r * rd),
                          np.array(r ** 6))
    for i in range(3):
        for j in range(i + 1, 3):
            if abs(mu[i] - mu[j]) < degeneracy_tol * (1 + abs(mu[i]) + abs(mu[j])):
                raise ArithmeticError("degenerate scalar route; use matrix propagator")
    u2_hat = -r ** 4 * u0_hat - rd * u1_hat + r * r * theta0_hat
    total = 0.0 + 0.0j
    for j in range(3):
        k, l = [i for i in range(3) if i != j]
        num = u2_hat - (mu[k] + mu[l]) * u1_hat + mu[k] * mu[l] * u0_hat
        den = (mu[j] - mu[k]) * (mu[j] - mu[l])
        total += num / den * np.exp(mu[j] * t)
    return complex(total)

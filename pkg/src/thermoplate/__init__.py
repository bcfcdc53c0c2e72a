"""Spectral toolkit for damped thermoelastic plate dynamics on periodic grids."""

from .model import (COUPLING_DAMP, COUPLING_LAP, ModelParams,
                    coefficient_matrices, physical_from_state,
                    state_from_physical, symbol_matrix)
from .spectrum import (BranchConstants, CubicCoeffs, EigenDecomp,
                       SpectralTriple, branch_constants, branch_sweep,
                       char_poly, eigen_decomp, eigenvalues, eigenvalues_grid,
                       smoothing_exponent, solve_cubic, solve_cubic_many,
                       spectral_gap_scan)
from .asymptotics import (AsymptoticRoots, DiagonalizerChain, Zone,
                          asymptotic_roots, diagonalizer, error_order_fit)
from .evolve import (Grid, GridPropagator, PropagatorOptions, SpectralState,
                     complex_heat_kernel, evolve_grid, expm_oracle,
                     gaussian_heat_evolution, propagate_mode,
                     propagator_matrix, scalar_route, sigma1_gaussian_state,
                     trustworthy_horizon)
from .analysis import (DecayFit, MomentDecomp, NormSpec, ProfileCheck,
                       decay_fit, diffusion_gain, diffusion_residual,
                       energy_decay_rate, expected_rate, lp_lq_decay_rate,
                       moment, profile_decay_rate, reference_solution,
                       residual_norm_curve, sobolev_norm, spatial_l2_norm,
                       state_norm_curve, two_sided_profile_check,
                       weighted_l1_norm, zone_cutoff)

__version__ = "0.1.0"

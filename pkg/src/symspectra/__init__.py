"""Weyl functions, characteristic matrices and (pseudo)spectral functions of
regular first-order symmetric systems on a finite interval."""

from .blockspace import BlockDims, ProjectorSet, canonical_structure_matrix, projectors
from .boundary import (BoundaryMaps, BoundaryPair, Eigenvalue, MaximalPair,
                       PairReport, boundary_determinant, boundary_maps,
                       eigenfunction, eigenvalues_selfadjoint,
                       green_identity_residual, membership_residual, solve_bvp,
                       validate_pair)
from .config import DEFAULT_TOLS, Tolerances
from .fourier import (DefectReport, IsometryReport, MulTminBasis,
                      TransformResult, fourier_transform,
                      fourier_transform_many, inverse_transform,
                      isometry_report, mul_tmin_basis, parseval_defect,
                      project_off)
from .propagator import (Propagation, fundamental_solution,
                         lagrange_bilinear_check, monodromy, monodromy_batch,
                         propagate, propagation_batch)
from .resolvent import (CrossCheckReport, apply_resolvent_integral,
                        resolvent_crosscheck, resolvent_identity_check)
from .spectral import (DiscreteL2Sigma, SpectralFunction, StieltjesIncrement,
                       build_spectral_function, extract_jump, l2sigma_ops,
                       stieltjes_increment)
from .system import (DefinitenessReport, GridFunction, PiecewiseMatrixPoly,
                     SymmetricSystem, ValidationReport, probe_definiteness,
                     validate_system, weighted_inner_product, weighted_norm)
from .weyl import (AdmissibilityEstimate, WeylData, WeylSolutions,
                   admissibility, characteristic_matrix, omega_evaluator,
                   weyl_function, weyl_solutions)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

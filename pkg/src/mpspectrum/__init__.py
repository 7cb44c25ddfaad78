"""Limiting spectral distributions of ``B_n + X^T A_n X / n``.

Submodules: :mod:`measures` (input laws), :mod:`numerics`, :mod:`solver`
(Stieltjes transform, density, atoms, model CDF), :mod:`support`
(support, edges), :mod:`simulate` (Monte Carlo and eigensolver) and
:mod:`cli`.
"""

from .errors import (ConsistencyError, ConvergenceError, DegenerateEdgeError, DomainError,
                     MPSpectrumError)
from .measures import IntervalUnion, Measure
from .simulate import EigenResult, EnsembleConfig, eigenvalues_symmetric, gap_and_mass_audit, ks_distance, sample_w
from .solver import (DensityGrid, MasterEquation, ModelCDF, SolutionPoint, SolverConfig, atom_masses, density_at,
                     model_cdf, solve_at)
from .support import (EdgeRecord, HCurvePoint, SupportAnalyzer, SupportReport, determine_support, edge_behavior,
                      h_curve, h_domain, in_E_A)

__version__ = "0.1.0"

__all__ = [
    "ConsistencyError", "ConvergenceError", "DegenerateEdgeError", "DomainError", "MPSpectrumError",
    "IntervalUnion", "Measure", "EigenResult", "EnsembleConfig", "eigenvalues_symmetric",
    "gap_and_mass_audit", "ks_distance", "sample_w", "DensityGrid", "MasterEquation", "ModelCDF",
    "SolutionPoint", "SolverConfig", "atom_masses", "density_at", "model_cdf", "solve_at",
    "EdgeRecord", "HCurvePoint", "SupportAnalyzer", "SupportReport", "determine_support",
    "edge_behavior", "h_curve", "h_domain", "in_E_A",
]

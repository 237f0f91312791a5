"""Numerical laboratory for the weighted inverse mean curvature flow.

Profile metrics in spherical symmetry, a regularized level-set elliptic
solver with barrier audits, classical and weak flow monotonicity checks for
the generalized Hawking mass, ADM mass backends, and Penrose-inequality
verdicts on asymptotically flat initial data (M, g, h).
"""

from .geometry import (RadialGrid, OriginKind, SliceGeometry, ProfileMetric,
                       ConformalProfileMetric, ConformalFlatMetric,
                       GeometryError, UniformCubic, slice_geometry,
                       curvature_pack, flat_profile,
                       profile_from_schwarzschild, conformal_transform,
                       isotropic_schwarzschild_phi, profile_to_csv,
                       profile_from_csv)
from .energy import (WeightField, DECReport, EnergyError, weight_from_samples,
                     energy_momentum, dec_residual, smooth_weight)
from .flow import (FlowTrace, FlowStatus, FlowError, NotOuterUntrapped,
                   run_classical_flow, monotone_quantities,
                   classical_diagnostics)
from .elliptic import (EllipticProblem, EllipticSolution, EllipticError,
                       NewtonDiverged, ContinuationStuck, epsilon_schedule,
                       subsolution_domain, solve_regularized, barrier_check,
                       epsilon_sweep, solve_regularized_cartesian)
from .weak import (LevelSetFamily, HullResult, GrowthLedger, WeakFlowError,
                   NonMonotoneU, LevelOutOfRange, extract_level_sets,
                   cartesian_level_area, weak_h_check, minimize_hull,
                   growth_ledger)
from .mass import (MassReport, MassError, InsufficientExtent, hawking_mass,
                   adm_mass, adm_mass_flux, asymptotic_compare,
                   penrose_verdict, blowdown_check)
from .scenarios import (InitialDataTriple, Provenance, ScenarioError,
                        DeltaTooLarge, TailNotConverged, NoHorizon,
                        make_scenario, triple_from_csv, build_example,
                        flow_gauge, find_horizon)
from .verify import CriterionResult, run_acceptance
from .cli import RunConfig, run_command, write_report

__version__ = "0.1.0"

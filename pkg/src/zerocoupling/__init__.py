"""Cyclically monotone zero-couplings of infinite measures on punctured
Euclidean space, with origin-reservoir transport, properness criteria, and
tail-limit experiments for regularly varying laws."""

from .measures import (ANGULAR_DENSITIES, Cone, ConeMass, DiscreteMeasure,
                       HomogeneousMeasure, discretize, homogeneous_from_config,
                       mass_annulus, mass_cone, parse_config,
                       truncate_and_balance)
from .monotone import (DiscretePotential, SupportSet, is_cyclically_monotone,
                       is_monotone, push_forward, rockafellar_potential,
                       subdifferential_contains)
from .onedim import solve_1d
from .proper import (INFINITE_MASS, HalfLineMasses, check_1d_criterion,
                     check_cone_condition, check_homogeneous_support,
                     check_necessary, check_proper, residual_decomposition)
from .regvar import (RVModel, Window, check_coupling_homogeneity,
                     check_gradient_homogeneity, fell_window_distance,
                     m0_distance, portmanteau_check, rescaled_empirical,
                     rv_model_from_config, sample, scaled_subdifferential,
                     split_seed, tail_coupling_experiment)
from .transport import (ORIGIN, ZeroCoupling, brute_force_min_cost,
                        check_margins, coupling_cost, coupling_support,
                        solve_zero_coupling, trivial_zero_coupling)
from . import oracle

__version__ = "0.1.0"

"""Differentially private node removal for epidemic control on contact networks."""

from ._accel import backend, set_backend, use_backend
from .dp import PrivacyBudget, child_rng, derive_seed, exponential_choice, make_rng, sample_laplace, sparse_vector_below
from .epidemic import SirConfig, SirOutcome, simulate_sir
from .fileio import ExperimentRecord, load_edge_list, read_records, save_edge_list, write_records
from .generators import GeneratorSpec, generate, parse_generator
from .graph import (
    ConvergenceError,
    Graph,
    count_walks4,
    degree,
    max_degree,
    neighbor_degree_sum,
    remove_nodes,
    spectral_radius,
    walks4_through,
)
from .maxdeg import (
    ExplicitSolution,
    MaxDegTask,
    build_maxdeg_instance,
    maxdeg_opt,
    privmaxdeg_explicit,
    privmaxdeg_implicit,
)
from .multicover import (
    UNBOUNDED,
    ImplicitSolution,
    InfeasibleError,
    MultiCoverInstance,
    brute_force_opt,
    decode_cover,
    exact_permutation_probability,
    greedy_cover,
    private_permutation,
    utility,
    weighted_private_permutation,
)
from .report import PrivacyReport
from .spectral import (
    SpectralCoverTask,
    SpectralWalkTask,
    build_spectral_instance,
    greedy_walk_hitting,
    privminsr_multiset,
    privminsr_walks,
)

__version__ = "0.1.0"

"""Latent consensus for multi-agent systems without a spanning in-tree.

Computes the consensus a networked system would reach under vanishingly weak
regularizing links (a dummy hub, uniform background links, or PageRank-type
damping of an opinion-pooling matrix), validating every closed form against
simulation and a brute-force spanning in-forest oracle.
"""

__version__ = "0.1.0"

from .digraph import (
    GraphFormatError,
    NotLaplacianError,
    WeightedDigraph,
    from_dependency_matrix,
    has_spanning_in_tree,
    laplacian,
    parse_digraph,
    random_digraph,
    serialize_digraph,
    validate_laplacian,
)
from .forests import (
    DEFAULT_ENUMERATION_CAP,
    EnumerationCapError,
    ForestSummary,
    enumerate_in_forests,
    max_forest_matrix,
    parametric_forest_matrix,
)
from .orthoproj import ConsensusSubspace, consensus_subspace, orthogonal_projector, orthoproj_consensus
from .protocols import (
    ConsensusReport,
    Trajectory,
    consensus_cross_check,
    continuous_limit,
    latent_consensus,
    power_limit,
    simulate_continuous,
    simulate_discrete,
    simulate_to_limit,
    symmetric_hub_consistency,
)
from .regularize import (
    BackgroundAugmentation,
    DiscreteRegularization,
    HubAugmentation,
    RegularizationSpec,
    background_eigenprojection,
    background_laplacian,
    background_limit,
    degroot_hub_eigenprojection,
    degroot_hub_limit,
    degroot_hub_matrix,
    hub_augment,
    hub_eigenprojection,
    laplacian_pair_identity_residual,
    pagerank_limit,
    pagerank_matrix,
    pagerank_power_limit,
    parse_regularization_spec,
    serialize_regularization_spec,
    subordinate_hub_limit,
    symmetric_hub_limit,
)
from .spectra import (
    Eigenprojection,
    IndexResult,
    NumericalDegeneracyError,
    eigenprojection,
    eigenprojection_resolvent,
    exp_regularization_identity_residual,
    laplacian_exp_limit,
    matrix_exponential,
    matrix_index,
    power_monomial_identity_residual,
)

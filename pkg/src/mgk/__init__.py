"""Commutator calculus for finite Mal'tsev algebras.

Congruence lattices, centralizing double relations and connectors, the
commutator of congruences with an exhaustive cross-checking oracle, and
classifiers for trivial, central, normal, and double central extensions of
congruence pairs, with group, Lie-algebra, reflexive-graph, and precrossed
module front ends.
"""

from .algebra import (
    DEFAULT_LIMITS,
    FiniteAlgebra,
    Homomorphism,
    InternalDisagreementError,
    Limits,
    Operation,
    ParseError,
    PreconditionError,
    QuadrupleRelation,
    ValidationError,
    check_homomorphism,
    pair_algebra,
    product_algebra,
    quotient_algebra,
    subalgebra,
    subalgebra_closure,
    validate_algebra,
)
from .commutator import (
    ConnectorTable,
    NonCentralizingError,
    box,
    centralizes,
    commutator,
    commutator_oracle,
    connector,
    double_relation,
    generated_double_relation,
)
from .congruence import (
    Partition,
    congruence_closure,
    congruence_lattice,
    direct_image,
    inverse_image,
    is_congruence,
    join,
    kernel_pair,
    meet,
)
from .galois import (
    DoubleExtensionSquare,
    PullbackCube,
    TwoEqMorphism,
    TwoEqObject,
    build_pullback_cube,
    classify_morphism,
    is_central_extension,
    is_double_central,
    is_double_extension,
    is_normal_extension_oracle,
    is_trivial_extension,
    kernel_pair_object,
    pullback_square_stability_check,
    quotient_extension,
    reflection_unit,
)
from .instances import (
    GROUP_CATALOG,
    GraphMorphism,
    LieAlgebraFp,
    PrecrossedModule,
    ReflexiveGraphOverB,
    build_group,
    build_lie_algebra,
    graph_double_central,
    graph_extension_central,
    graph_is_internal_groupoid,
    group_commutator_subgroup,
    normal_subgroup_to_partition,
    partition_to_normal_subgroup,
    peiffer_commutator,
    semidirect_graph,
)

__version__ = "0.1.0"

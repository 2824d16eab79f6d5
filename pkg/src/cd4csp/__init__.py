"""Bounded-width constraint solving over CD(4) templates.

A library plus CLI for constraint satisfaction problems whose template
relations are invariant under three ternary operations forming a short
chain of Jonsson terms.  Consistency followed by ideal and simple
reductions extracts a homomorphism whenever one exists; a brute-force
oracle and a structural check suite validate the machinery on small
instances.
"""

__version__ = "0.1.0"
SCHEMA_VERSION = 1

from .algebra import (
    Congruence,
    FiniteAlgebra,
    OperationTable,
    TermExpr,
    all_congruences,
    coatom_congruences,
    eval_op,
    eval_term,
    is_subdirect_binary,
    kernel,
    principal_congruence,
    quotient_algebra,
    sg_closure,
)
from .errors import CD4Error, InputError, InvariantViolation, ResourceBudgetError
from .ideals import (
    Carrier,
    IdealSide,
    absorption_witness,
    find_proper_ideal,
    generates_minimal_ideal,
    ideal_closure,
    is_ideal,
    is_ideal_free,
)
from .jonsson import (
    JonssonReport,
    PreprocessResult,
    derived_l,
    derived_r,
    preprocess_terms,
    verify_cd4,
    verify_lr_idempotence,
)
from .oracle import (
    GenParams,
    LemmaReport,
    TwoFanWitness,
    brute_force_hom,
    enumerate_cd4_algebras,
    enumerate_subdirect,
    lemma_suite,
    random_instance,
    random_planted_instance,
)
from .reductions import Platoon, SolveTrace, find_platoon, ideal_reduce, simple_reduce, solve
from .relstruct import (
    RelStructure,
    inv_close_relation,
    is_homomorphism,
    is_partial_homomorphism,
    is_polymorphism,
    validate_template,
)
from .strategy import (
    EMPTY,
    Strategy,
    choose_k,
    enforce,
    extract_solution,
    init_full,
    is_winning,
    singleton_coordinates,
)

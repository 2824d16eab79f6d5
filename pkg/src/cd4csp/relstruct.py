"""Relational structures, homomorphism checks, and polymorphism closure."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Mapping

from .algebra import FiniteAlgebra, OperationTable, closed_under_ops, sg_closure
from .errors import InputError

Assignment = dict  # partial map: instance element -> template element


@dataclass(frozen=True)
class RelStructure:
    universe: int
    arities: tuple[tuple[str, int], ...]  # sorted (name, arity) pairs
    relations: Mapping[str, frozenset[tuple[int, ...]]]

    @staticmethod
    def build(universe: int, relations: Mapping[str, tuple[int, list]]) -> "RelStructure":
        """relations: name -> (arity, tuples)."""
        if universe < 0:
            raise InputError(f"universe must be >= 0, got {universe}")
        arities = []
        rels = {}
        for name in sorted(relations):
            arity, tuples = relations[name]
            if arity < 1:
                raise InputError(f"relation {name}: arity must be >= 1")
            frozen = set()
            for t in tuples:
                t = tuple(t)
                if len(t) != arity:
                    raise InputError(f"relation {name}: tuple {t} has wrong arity")
                for v in t:
                    if not isinstance(v, int) or not (0 <= v < universe):
                        raise InputError(f"relation {name}: entry {v} out of range")
                frozen.add(t)
            arities.append((name, arity))
            rels[name] = frozenset(frozen)
        return RelStructure(universe, tuple(arities), rels)

    @property
    def vocabulary(self) -> tuple[tuple[str, int], ...]:
        return self.arities

    def max_arity(self) -> int:
        return max((a for _, a in self.arities), default=0)


def _check_vocab(A: RelStructure, B: RelStructure):
    if A.vocabulary != B.vocabulary:
        raise InputError(
            f"vocabulary mismatch: {A.vocabulary} vs {B.vocabulary}"
        )


def is_homomorphism(h: Assignment, A: RelStructure, B: RelStructure) -> bool:
    """h must be total on A and map every relation tuple into B's relation."""
    _check_vocab(A, B)
    if set(h) != set(range(A.universe)):
        raise InputError("assignment is not total on the instance universe")
    for v in h.values():
        if not (0 <= v < B.universe):
            raise InputError(f"assignment value {v} out of template range")
    return all(
        tuple(h[a] for a in t) in B.relations[name]
        for name, _ in A.vocabulary
        for t in A.relations[name]
    )


def is_partial_homomorphism(f: Assignment, A: RelStructure, B: RelStructure) -> bool:
    """Like is_homomorphism but only tuples entirely inside dom(f) count."""
    _check_vocab(A, B)
    dom = set(f)
    for a in dom:
        if not (0 <= a < A.universe):
            raise InputError(f"domain element {a} out of instance range")
    for v in f.values():
        if not (0 <= v < B.universe):
            raise InputError(f"assignment value {v} out of template range")
    return all(
        tuple(f[a] for a in t) in B.relations[name]
        for name, _ in A.vocabulary
        for t in A.relations[name]
        if dom.issuperset(t)
    )


def is_polymorphism(op: OperationTable, B: RelStructure) -> bool:
    """Coordinatewise application of op to any arity-many tuples of each
    relation must land back in the relation."""
    if op.size != B.universe:
        raise InputError(f"operation size {op.size} != universe {B.universe}")
    for name, arity in B.vocabulary:
        rel = B.relations[name]
        if not rel:
            continue
        if op.arity == 3:
            if not closed_under_ops([[op.table] * arity], [op.size] * arity, rel):
                return False
        else:
            for combo in itertools.product(sorted(rel), repeat=op.arity):
                image = tuple(op.eval(*args) for args in zip(*combo))
                if image not in rel:
                    return False
    return True


def inv_close_relation(
    rel: set[tuple[int, ...]], alg: FiniteAlgebra
) -> frozenset[tuple[int, ...]]:
    """Least relation containing rel that is preserved by the algebra:
    the subuniverse of the arity-power generated by rel."""
    tuples = {tuple(t) for t in rel}
    if not tuples:
        raise InputError("cannot close an empty relation")
    arity = len(next(iter(tuples)))
    if any(len(t) != arity for t in tuples):
        raise InputError("mixed arities in relation")
    return sg_closure(alg, arity, tuples)


def validate_template(B: RelStructure, alg: FiniteAlgebra) -> list[str]:
    """Names of relations not preserved by one of the three operations."""
    if alg.size != B.universe:
        raise InputError(f"algebra size {alg.size} != template universe {B.universe}")
    return [
        name
        for name, _ in B.vocabulary
        if not all(is_polymorphism(op, B) for op in alg.ops)
    ]


# --- JSON interface ---------------------------------------------------------


def structure_to_json(S: RelStructure) -> dict:
    return {
        "universe": S.universe,
        "relations": {
            name: {"arity": arity, "tuples": sorted(map(list, S.relations[name]))}
            for name, arity in S.vocabulary
        },
    }


def structure_from_json(doc: dict) -> RelStructure:
    if not isinstance(doc, dict) or "universe" not in doc or "relations" not in doc:
        raise InputError("structure JSON must have 'universe' and 'relations' keys")
    universe = doc["universe"]
    if not isinstance(universe, int) or universe < 0:
        raise InputError(f"invalid universe {universe!r}")
    rels = doc["relations"]
    if not isinstance(rels, dict):
        raise InputError("'relations' must be an object")
    build_arg = {}
    for name, spec in rels.items():
        if not isinstance(spec, dict) or "arity" not in spec or "tuples" not in spec:
            raise InputError(f"relation {name} needs 'arity' and 'tuples'")
        build_arg[name] = (spec["arity"], spec["tuples"])
    return RelStructure.build(universe, build_arg)


def load_structure(path: str) -> RelStructure:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise InputError(f"no such file: {path}")
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}")
    return structure_from_json(doc)


def save_structure(S: RelStructure, path: str):
    with open(path, "w") as fh:
        json.dump(structure_to_json(S), fh, indent=2, sort_keys=True)
        fh.write("\n")

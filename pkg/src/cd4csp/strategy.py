"""The (k-1,k)-strategy table and the consistency fixpoint.

A strategy is, for every index set I of instance elements with
1 <= |I| <= k, the relation view of the partial homomorphisms with domain
I: a set H_I of template tuples indexed by sorted I.  The consistency
procedure starts from all partial homomorphisms and removes mappings until
both coherence conditions hold:

  * downward: restricting any member of H_J to I inside J stays in H_I;
  * forth: any member of H_I with |I| < k extends to every I + {a}.

The greatest such table is unique, so the worklist order is irrelevant to
the result; an optional seed shuffles the schedule to let tests check that.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Optional

from .algebra import FiniteAlgebra, closed_under_ops
from .config import STRATEGY_TABLE_LIMIT
from .errors import InputError, InvariantViolation, ResourceBudgetError
from .relstruct import Assignment, RelStructure, is_homomorphism

IndexSet = tuple  # sorted tuple of instance elements
BTuple = tuple  # template values indexed by the index set


class _Empty:
    """Distinguished value for 'no winning strategy exists'."""

    def __repr__(self):
        return "Empty"

    def __bool__(self):
        return False


EMPTY = _Empty()


@dataclass
class Strategy:
    A: RelStructure
    B: RelStructure
    alg: Optional[FiniteAlgebra]
    k: int
    table: dict

    def copy(self) -> "Strategy":
        return Strategy(self.A, self.B, self.alg, self.k, dict(self.table))

    def coordinate_sizes(self) -> dict:
        return {i: len(self.table[(i,)]) for i in range(self.A.universe)}

    def potential(self) -> int:
        return sum(len(self.table[(i,)]) for i in range(self.A.universe))


def choose_k(A: RelStructure) -> int:
    return max(3, A.max_arity())


def _index_sets(n: int, k: int) -> list[IndexSet]:
    sets: list[IndexSet] = []
    for size in range(1, min(n, k) + 1):
        sets.extend(itertools.combinations(range(n), size))
    return sets


def _scoped_tuples(A: RelStructure, I: IndexSet) -> list[tuple[str, tuple]]:
    dom = set(I)
    return [
        (name, t)
        for name, _ in A.vocabulary
        for t in A.relations[name]
        if dom.issuperset(t)
    ]


def init_full(
    A: RelStructure, B: RelStructure, k: int, alg: Optional[FiniteAlgebra] = None
) -> Strategy:
    """All partial homomorphisms with domain size <= k, in relation view."""
    if A.vocabulary != B.vocabulary:
        raise InputError("instance and template vocabularies differ")
    sets = _index_sets(A.universe, k)
    if len(sets) > STRATEGY_TABLE_LIMIT:
        raise ResourceBudgetError(
            f"strategy table would need {len(sets)} index sets"
        )
    table = {}
    for I in sets:
        scoped = _scoped_tuples(A, I)
        pos = {a: i for i, a in enumerate(I)}
        good = set()
        for values in itertools.product(range(B.universe), repeat=len(I)):
            if all(
                tuple(values[pos[a]] for a in t) in B.relations[name]
                for name, t in scoped
            ):
                good.add(values)
        table[I] = good
    return Strategy(A, B, alg, k, table)


def _cover_pairs(table: dict) -> list[tuple[IndexSet, IndexSet, tuple[int, ...]]]:
    """(I, J, positions of I inside J) for every cover pair I = J minus one."""
    out = []
    for J in table:
        if len(J) < 2:
            continue
        for drop in range(len(J)):
            I = J[:drop] + J[drop + 1 :]
            out.append((I, J, tuple(i for i in range(len(J)) if i != drop)))
    return out


def enforce(H: Strategy, order_seed: Optional[int] = None):
    """Greatest coherent sub-table, or EMPTY.

    Alternates H_I <- H_I /\\ proj_I(H_J) and H_J <- H_J /\\ proj^-1(H_I)
    over cover pairs until stable.  ``order_seed`` randomizes the worklist
    order; the fixpoint is the same for every schedule.
    """
    table = {I: set(v) for I, v in H.table.items()}
    pairs = sorted(_cover_pairs(table))
    rng = random.Random(order_seed) if order_seed is not None else None
    touching: dict[IndexSet, list[int]] = {}
    for idx, (I, J, _) in enumerate(pairs):
        touching.setdefault(I, []).append(idx)
        touching.setdefault(J, []).append(idx)
    pending = list(range(len(pairs)))
    queued = [True] * len(pairs)

    def push(key: IndexSet):
        for idx in touching.get(key, ()):
            if not queued[idx]:
                queued[idx] = True
                pending.append(idx)

    while pending:
        idx = pending.pop(rng.randrange(len(pending)) if rng else 0)
        queued[idx] = False
        I, J, positions = pairs[idx]
        hi, hj = table[I], table[J]
        projected = {tuple(t[p] for p in positions) for t in hj}
        new_i = hi & projected
        if len(new_i) < len(hi):
            if not new_i:
                return EMPTY
            table[I] = new_i
            hi = new_i
            push(I)
        new_j = {t for t in hj if tuple(t[p] for p in positions) in hi}
        if len(new_j) < len(hj):
            if not new_j:
                return EMPTY
            table[J] = new_j
            push(J)
    if any(not v for v in table.values()):
        return EMPTY
    return Strategy(H.A, H.B, H.alg, H.k, {I: frozenset(v) for I, v in table.items()})


def winning_violations(H) -> list[str]:
    """Every reason H fails to be a winning strategy (empty when it is one)."""
    if H is EMPTY:
        return ["strategy is Empty"]
    problems = []
    table = H.table
    expected = set(_index_sets(H.A.universe, H.k))
    if set(table) != expected:
        problems.append("index sets of the table are not all I with 1 <= |I| <= k")
        return problems
    for I, tuples in table.items():
        if not tuples:
            problems.append(f"H_{list(I)} is empty")
    for I, J, positions in _cover_pairs(table):
        hi, hj = table[I], table[J]
        proj = {tuple(t[p] for p in positions) for t in hj}
        if not proj.issubset(hi):
            problems.append(f"projection of H_{list(J)} leaves H_{list(I)}")
        if len(I) < H.k and not set(hi).issubset(proj):
            problems.append(f"H_{list(I)} does not extend to H_{list(J)}")
    for I, tuples in table.items():
        scoped = _scoped_tuples(H.A, I)
        pos = {a: i for i, a in enumerate(I)}
        for t in tuples:
            if not all(
                tuple(t[pos[a]] for a in at) in H.B.relations[name]
                for name, at in scoped
            ):
                problems.append(f"H_{list(I)} holds a non-homomorphism tuple")
                break
    if H.alg is not None:
        for I, tuples in table.items():
            if tuples and not closed_under_ops(
                [[op.table] * len(I) for op in H.alg.ops],
                [H.alg.size] * len(I),
                tuples,
            ):
                problems.append(f"H_{list(I)} is not closed under the operations")
    return problems


def is_winning(H) -> bool:
    return not winning_violations(H)


def singleton_coordinates(H: Strategy) -> set[int]:
    return {i for i in range(H.A.universe) if len(H.table[(i,)]) == 1}


def extract_solution(H: Strategy) -> Assignment:
    """All-singleton strategy to total assignment; asserted a homomorphism."""
    solution = {}
    for i in range(H.A.universe):
        values = H.table[(i,)]
        if len(values) != 1:
            raise InputError(f"coordinate {i} is not a singleton")
        solution[i] = next(iter(values))[0]
    if not is_homomorphism(solution, H.A, H.B):
        raise InvariantViolation(
            "all-singleton strategy does not induce a homomorphism",
            payload={"assignment": solution},
        )
    return solution


def restriction_family(h: Assignment, A: RelStructure, k: int) -> dict:
    """Relation view of all restrictions of a total map to index sets of
    size <= k (used to test that consistency keeps every true solution)."""
    return {
        I: {tuple(h[a] for a in I)} for I in _index_sets(A.universe, k)
    }

"""Strategy transformations and the solve driver.

Two transformations shrink a winning strategy while keeping it winning:

  * ideal reduction: given a coordinate whose value algebra has a proper
    absorption ideal X, keep only mappings compatible with forcing that
    coordinate into X (two-stage filter, then a top-size completion);

  * simple reduction: when every active coordinate is ideal free, a
    "platoon" of coordinates whose pairwise projections become graphs of
    isomorphisms modulo maximal congruences is located; the strategy is
    filtered to one congruence class on the platoon and to mappings
    generating minimal r-ideals, then regenerated.

The driver alternates these until every coordinate is a singleton; the sum
of the coordinate set sizes strictly decreases at each step, so it
terminates.  Each transformation asserts the winning-strategy invariants of
its output instead of repairing them: a failure means a non-CD(4) template
slipped through validation or there is a bug.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .algebra import (
    Congruence,
    FiniteAlgebra,
    coatom_congruences,
    is_congruence,
    sg_closure,
)
from .errors import InputError, InvariantViolation
from .ideals import Carrier, IdealSide, find_proper_ideal, generates_minimal_ideal, is_ideal, is_ideal_free
from .jonsson import preprocess_terms, verify_cd4
from .relstruct import Assignment, RelStructure, validate_template
from .strategy import (
    EMPTY,
    Strategy,
    choose_k,
    enforce,
    extract_solution,
    init_full,
    singleton_coordinates,
    winning_violations,
)


@dataclass
class SolveTrace:
    """Ordered log of solve steps with the potential after each one."""

    steps: list = field(default_factory=list)
    verdict: Optional[str] = None

    def record(self, kind: str, potential: int, **details):
        if self.steps and kind != "enforce":
            previous = self.steps[-1]["potential"]
            if potential >= previous:
                raise InvariantViolation(
                    f"potential did not decrease: {previous} -> {potential} at {kind}",
                    payload=self.to_json(),
                )
        self.steps.append({"kind": kind, "potential": potential, **details})

    def to_json(self) -> dict:
        return {"steps": list(self.steps), "verdict": self.verdict}


def _coordinate_carrier(H: Strategy, i: int) -> Carrier:
    return Carrier.from_elements(H.alg, H.table[(i,)], assume_closed=True)


def _pair_values(H: Strategy, first: int, second: int) -> set[tuple[int, int]]:
    """H_{first,second} as pairs ordered (first, second)."""
    key = (first, second) if first < second else (second, first)
    pairs = H.table[key]
    if first < second:
        return {(t[0], t[1]) for t in pairs}
    return {(t[1], t[0]) for t in pairs}


# --- ideal reduction ---------------------------------------------------------


def ideal_reduce(
    H: Strategy, a: int, X: frozenset[int] | set[int], side: IdealSide
) -> Strategy:
    """Shrink H so that coordinate ``a`` ranges exactly over the proper
    ideal X of its value algebra.

    Index sets containing ``a`` are filtered by value; index sets that can
    still grow by ``a`` are replaced by projections of the filtered
    extension; full-size index sets without ``a`` keep the mappings whose
    every restriction survived the filtering stage.
    """
    values = {t[0] for t in H.table[(a,)]}
    X = frozenset(X)
    if not X or not X < values:
        raise InputError("X must be a nonempty proper subset of the coordinate values")
    carrier = _coordinate_carrier(H, a)
    if not is_ideal(carrier, {(x,) for x in X}, side):
        raise InputError(f"X is not an {side.value}-ideal of the coordinate algebra")

    k = H.k
    new_table: dict = {}
    for I in H.table:
        if a in I:
            pos = I.index(a)
            new_table[I] = frozenset(t for t in H.table[I] if t[pos] in X)
        elif len(I) < k:
            J = tuple(sorted(I + (a,)))
            pos_a = J.index(a)
            keep = [J.index(i) for i in I]
            new_table[I] = frozenset(
                tuple(t[p] for p in keep)
                for t in H.table[J]
                if t[pos_a] in X
            )
    for I in H.table:
        if a not in I and len(I) == k:
            restrictions = []
            for drop in range(k):
                sub = I[:drop] + I[drop + 1 :]
                keep = [i for i in range(k) if i != drop]
                restrictions.append((sub, keep))
            new_table[I] = frozenset(
                t
                for t in H.table[I]
                if all(
                    tuple(t[p] for p in keep) in new_table[sub]
                    for sub, keep in restrictions
                )
            )

    reduced = Strategy(H.A, H.B, H.alg, H.k, new_table)
    problems = winning_violations(reduced)
    if problems:
        raise InvariantViolation(
            f"ideal reduction at coordinate {a} broke the strategy",
            payload={"coordinate": a, "side": side.value, "problems": problems},
        )
    if {t[0] for t in reduced.table[(a,)]} != X:
        raise InvariantViolation(
            f"ideal reduction did not pin coordinate {a} to X"
        )
    return reduced


# --- platoon discovery -------------------------------------------------------


@dataclass
class Platoon:
    """Coordinates M with maximal congruences on their value algebras and
    coherent block bijections between the quotients."""

    members: tuple[int, ...]
    blocks: dict  # m -> tuple of frozensets of values (canonical order)
    tau: dict  # (m1, m2) -> tuple: block index of m1 -> block index of m2

    def value_block(self, m: int) -> dict:
        return {v: j for j, blk in enumerate(self.blocks[m]) for v in blk}


def _carrier_congruence_blocks(carrier: Carrier, theta: Congruence):
    """Congruence classes as frozensets of base values (width-1 carriers)."""
    return tuple(
        frozenset(carrier.elements[i][0] for i in cls) for cls in theta.classes()
    )


def _quotient_graph(
    H: Strategy, n: int, m: int, value_block_m: dict
) -> Optional[dict]:
    """If H_{n,m} modulo (identity x theta_m) is the graph of a map from the
    n-values onto the theta_m-classes, return it, else None."""
    phi: dict[int, int] = {}
    for vn, vm in _pair_values(H, n, m):
        b = value_block_m[vm]
        if phi.setdefault(vn, b) != b:
            return None
    return phi


def find_platoon(H: Strategy, active: list[int]) -> Platoon:
    """Grow a platoon greedily from the lowest active coordinate, then
    verify all three platoon statements exhaustively."""
    if not active:
        raise InputError("platoon discovery needs at least one active coordinate")
    active = sorted(active)
    carriers = {}
    for i in active:
        carriers[i] = _coordinate_carrier(H, i)
        if carriers[i].size < 2:
            raise InputError(f"coordinate {i} is a singleton")
        if not is_ideal_free(carriers[i]):
            raise InputError(f"coordinate {i} is not ideal free")

    m0 = active[0]
    coatoms = sorted(
        coatom_congruences(carriers[m0].induced_algebra), key=lambda c: c.blocks
    )
    theta: dict[int, Congruence] = {m0: coatoms[0]}
    blocks = {m0: _carrier_congruence_blocks(carriers[m0], theta[m0])}
    tau_from_m0: dict[int, tuple[int, ...]] = {
        m0: tuple(range(len(blocks[m0])))
    }
    members = [m0]

    grew = True
    while grew:
        grew = False
        for n in active:
            if n in members:
                continue
            for m in list(members):
                value_block_m = {
                    v: j for j, blk in enumerate(blocks[m]) for v in blk
                }
                phi = _quotient_graph(H, n, m, value_block_m)
                if phi is None:
                    continue
                if set(phi.values()) != set(range(len(blocks[m]))):
                    raise InvariantViolation(
                        f"projection of coordinate pair ({n},{m}) is not onto"
                    )
                labels = [phi[e[0]] for e in carriers[n].elements]
                theta_n = Congruence.from_labels(labels)
                if not is_congruence(carriers[n].induced_algebra, theta_n):
                    raise InvariantViolation(
                        f"kernel at coordinate {n} is not a congruence: "
                        "the quotient graph is not a homomorphism"
                    )
                theta[n] = theta_n
                blocks[n] = _carrier_congruence_blocks(carriers[n], theta_n)
                # tau_{n,m} by canonical class order of theta_n
                tau_nm = tuple(
                    phi[next(iter(blk))] for blk in blocks[n]
                )
                inv_nm = [0] * len(tau_nm)
                for j, img in enumerate(tau_nm):
                    inv_nm[img] = j
                tau_from_m0[n] = tuple(inv_nm[j] for j in tau_from_m0[m])
                members.append(n)
                members.sort()
                grew = True
                break

    tau: dict = {}
    for m1 in members:
        back = [0] * len(tau_from_m0[m1])
        for j0, img in enumerate(tau_from_m0[m1]):
            back[img] = j0
        for m2 in members:
            tau[(m1, m2)] = tuple(tau_from_m0[m2][back[j]] for j in range(len(back)))

    platoon = Platoon(tuple(members), blocks, tau)
    _verify_platoon(H, platoon, active, carriers, theta)
    return platoon


def _verify_platoon(H, platoon, active, carriers, theta):
    members = platoon.members
    for m in members:
        if theta[m] not in coatom_congruences(carriers[m].induced_algebra):
            raise InvariantViolation(
                f"congruence at coordinate {m} is not maximal"
            )
    value_blocks = {m: platoon.value_block(m) for m in members}
    for m1 in members:
        for m2 in members:
            if m1 == m2:
                continue
            actual = {
                (value_blocks[m1][x], value_blocks[m2][y])
                for x, y in _pair_values(H, m1, m2)
            }
            expected = {
                (j, platoon.tau[(m1, m2)][j])
                for j in range(len(platoon.blocks[m1]))
            }
            if actual != expected:
                raise InvariantViolation(
                    f"pair ({m1},{m2}) is not the stored block bijection",
                    payload={"actual": sorted(actual), "expected": sorted(expected)},
                )
    for m in members:
        for n in active:
            if n in members:
                continue
            actual = {
                (x, value_blocks[m][y]) for x, y in _pair_values(H, n, m)
            }
            n_values = {t[0] for t in H.table[(n,)]}
            expected = {
                (x, j) for x in n_values for j in range(len(platoon.blocks[m]))
            }
            if actual != expected:
                raise InvariantViolation(
                    f"pair ({n},{m}) modulo the congruence is not the full product"
                )
    for m1 in members:
        identity = tuple(range(len(platoon.blocks[m1])))
        if platoon.tau[(m1, m1)] != identity:
            raise InvariantViolation(f"tau[{m1},{m1}] is not the identity")
        for m2 in members:
            for m3 in members:
                composed = tuple(
                    platoon.tau[(m2, m3)][j] for j in platoon.tau[(m1, m2)]
                )
                if composed != platoon.tau[(m1, m3)]:
                    raise InvariantViolation(
                        f"tau does not compose along ({m1},{m2},{m3})"
                    )


# --- simple reduction --------------------------------------------------------


def simple_reduce(H: Strategy, platoon: Platoon) -> Strategy:
    """Filter to one coherent congruence class on the platoon and to
    mappings generating minimal r-ideals, then regenerate each entry."""
    members = platoon.members
    m0 = members[0]
    value_blocks = {m: platoon.value_block(m) for m in members}
    anchor = min(t[0] for t in H.table[(m0,)])
    class0 = value_blocks[m0][anchor]
    chosen = {
        m: platoon.blocks[m][platoon.tau[(m0, m)][class0]] for m in members
    }

    new_table: dict = {}
    for K in H.table:
        member_pos = [(K.index(m), m) for m in members if m in K]
        carrier = Carrier.from_elements(H.alg, H.table[K], assume_closed=True)
        seed = [
            t
            for t in sorted(H.table[K])
            if all(t[p] in chosen[m] for p, m in member_pos)
            and generates_minimal_ideal(carrier, t, IdealSide.R)
        ]
        if not seed:
            raise InvariantViolation(
                f"simple reduction seed is empty at index set {list(K)}",
                payload={"members": list(members)},
            )
        generated = sg_closure(H.alg, len(K), seed)
        if not generated <= H.table[K]:
            raise InvariantViolation(
                f"regenerated entry escapes the previous strategy at {list(K)}"
            )
        new_table[K] = frozenset(generated)

    reduced = Strategy(H.A, H.B, H.alg, H.k, new_table)
    problems = winning_violations(reduced)
    if problems:
        raise InvariantViolation(
            "simple reduction broke the strategy",
            payload={"members": list(members), "problems": problems},
        )
    for m in members:
        if not {t[0] for t in reduced.table[(m,)]} <= chosen[m]:
            raise InvariantViolation(
                f"platoon coordinate {m} escaped its congruence class"
            )
    return reduced


# --- the driver --------------------------------------------------------------


def solve(
    A: RelStructure,
    B: RelStructure,
    alg: FiniteAlgebra,
    *,
    unchecked: bool = False,
) -> tuple[Optional[Assignment], SolveTrace]:
    """Decide whether A maps homomorphically into B and produce a witness.

    Consistency first; when the fixpoint is nonempty, ideal and simple
    reductions shrink it to singletons and the induced assignment is
    verified.  An Empty fixpoint is a correct refusal for templates
    invariant under the algebra.
    """
    report = verify_cd4(alg)
    if not report.ok:
        raise InputError(
            f"algebra fails the CD(4) chain at {report.failures[0]}"
        )
    if not unchecked:
        bad = validate_template(B, alg)
        if bad:
            raise InputError(
                f"template relations not preserved by the algebra: {bad}"
            )
    prepped = preprocess_terms(alg).algebra

    trace = SolveTrace()
    k = choose_k(A)
    H = enforce(init_full(A, B, k, alg=prepped))
    if H is EMPTY:
        trace.record("enforce", 0, empty=True)
        trace.verdict = "UNSAT"
        return None, trace
    trace.record("enforce", H.potential())
    checked_fixpoint = False

    while True:
        singles = singleton_coordinates(H)
        if len(singles) == H.A.universe:
            solution = extract_solution(H)
            trace.verdict = "SAT"
            return solution, trace

        if not checked_fixpoint:
            # the reductions assert their own outputs; the fixpoint itself
            # is only guaranteed winning for validated templates
            problems = winning_violations(H)
            if problems:
                raise InvariantViolation(
                    "consistency fixpoint is not a winning strategy",
                    payload={"problems": problems, "trace": trace.to_json()},
                )
            checked_fixpoint = True

        active = sorted(set(range(H.A.universe)) - singles)
        reduced = None
        for a in active:
            found = find_proper_ideal(_coordinate_carrier(H, a))
            if found is not None:
                ideal, side = found
                X = frozenset(t[0] for t in ideal)
                reduced = ideal_reduce(H, a, X, side)
                trace.record(
                    "ideal_reduce",
                    reduced.potential(),
                    coordinate=a,
                    side=side.value,
                    ideal_size=len(X),
                )
                break
        if reduced is None:
            platoon = find_platoon(H, active)
            reduced = simple_reduce(H, platoon)
            trace.record(
                "simple_reduce",
                reduced.potential(),
                coordinates=list(platoon.members),
                class_sizes={
                    str(m): len(reduced.table[(m,)]) for m in platoon.members
                },
            )
        H = reduced

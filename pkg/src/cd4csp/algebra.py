"""Finite idempotent algebras with three ternary operations.

Everything downstream manipulates one data shape: a flat, row-major
operation table over a dense universe {0..n-1}.  Elements of powers are
plain tuples and the three operations act coordinatewise.  Congruences
are canonical block-id arrays so they can live in sets.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .config import CLOSURE_CELL_LIMIT, CONGRUENCE_ENUM_BOUND
from .errors import InputError, InvariantViolation, ResourceBudgetError

OP_NAMES = ("p1", "p2", "p3")


@dataclass(frozen=True)
class OperationTable:
    """A finitary operation on {0..size-1} stored as a flat value table.

    The table is row-major by argument tuple: for a ternary operation the
    value at (x, y, z) sits at index (x*size + y)*size + z.
    """

    arity: int
    size: int
    table: tuple[int, ...]

    def __post_init__(self):
        if self.arity < 1:
            raise InputError(f"arity must be >= 1, got {self.arity}")
        if self.size < 1:
            raise InputError(f"size must be >= 1, got {self.size}")
        if len(self.table) != self.size**self.arity:
            raise InputError(
                f"table length {len(self.table)} != {self.size}^{self.arity}"
            )
        for v in self.table:
            if not (0 <= v < self.size):
                raise InputError(f"table entry {v} out of range 0..{self.size - 1}")

    def eval(self, *args: int) -> int:
        if len(args) != self.arity:
            raise InputError(f"expected {self.arity} arguments, got {len(args)}")
        idx = 0
        for a in args:
            if not (0 <= a < self.size):
                raise InputError(f"argument {a} out of range 0..{self.size - 1}")
            idx = idx * self.size + a
        return self.table[idx]

    def is_idempotent(self) -> bool:
        return all(self.eval(*(x,) * self.arity) == x for x in range(self.size))


def eval_op(op: OperationTable, args: Sequence[int]) -> int:
    """Pure table lookup; validates ranges."""
    return op.eval(*args)


@dataclass(unsafe_hash=True)
class FiniteAlgebra:
    """Universe size plus the three ternary operations of the CD(4) signature.

    ``verified`` is a latch set by jonsson.verify_cd4 once the chain
    identities have been checked exhaustively; nothing here sets it.
    """

    size: int
    p1: OperationTable
    p2: OperationTable
    p3: OperationTable
    verified: bool = field(default=False, compare=False, hash=False)

    def __post_init__(self):
        for name, op in zip(OP_NAMES, (self.p1, self.p2, self.p3)):
            if op.arity != 3:
                raise InputError(f"{name} must be ternary, has arity {op.arity}")
            if op.size != self.size:
                raise InputError(f"{name} size {op.size} != algebra size {self.size}")
            if not op.is_idempotent():
                raise InputError(f"{name} is not idempotent")

    @property
    def ops(self) -> tuple[OperationTable, OperationTable, OperationTable]:
        return (self.p1, self.p2, self.p3)

    def apply(self, op_index: int, x: tuple, y: tuple, z: tuple) -> tuple:
        """Coordinatewise application to power elements."""
        op = self.ops[op_index]
        return tuple(op.eval(a, b, c) for a, b, c in zip(x, y, z))


# --- term expressions -------------------------------------------------------


@dataclass(frozen=True)
class TermExpr:
    """A term over the p1/p2/p3 signature: leaves are variable indices,
    internal nodes carry an operation name and three children."""

    op: str | None = None
    var: int | None = None
    children: tuple["TermExpr", ...] = ()

    @staticmethod
    def variable(index: int) -> "TermExpr":
        if index < 0:
            raise InputError(f"variable index must be >= 0, got {index}")
        return TermExpr(var=index)

    @staticmethod
    def apply(op: str, a: "TermExpr", b: "TermExpr", c: "TermExpr") -> "TermExpr":
        if op not in OP_NAMES:
            raise InputError(f"unknown operation {op!r}")
        return TermExpr(op=op, children=(a, b, c))

    def is_leaf(self) -> bool:
        return self.var is not None


def eval_term(t: TermExpr, alg: FiniteAlgebra, args: Sequence[int]) -> int:
    """Recursive evaluation; a leaf projects onto its variable."""
    if t.is_leaf():
        if t.var >= len(args):  # type: ignore[operator]
            raise InputError(f"variable {t.var} but only {len(args)} arguments")
        return args[t.var]  # type: ignore[index]
    if t.op not in OP_NAMES or len(t.children) != 3:
        raise InputError("malformed term node")
    op = alg.ops[OP_NAMES.index(t.op)]
    return op.eval(*(eval_term(c, alg, args) for c in t.children))


# --- dense closure kernel ---------------------------------------------------


def _code_weights(sizes: Sequence[int]) -> tuple[np.ndarray, int]:
    """Mixed-radix weights so that a row encodes to row @ weights."""
    m = len(sizes)
    weights = np.ones(m, dtype=np.int64)
    for c in range(m - 2, -1, -1):
        weights[c] = weights[c + 1] * sizes[c + 1]
    space = int(weights[0] * sizes[0]) if m else 1
    return weights, space


def _triple_image_codes(
    tables: Sequence[Sequence[int]],
    sizes: Sequence[int],
    weights: np.ndarray,
    elems: np.ndarray,
) -> np.ndarray:
    """Codes of the images of all element triples under one coordinatewise
    ternary operation.  Chunks over the first axis to bound memory."""
    s, m = elems.shape
    parts = []
    chunk = max(1, min(s, CLOSURE_CELL_LIMIT // max(1, s * s)))
    for lo in range(0, s, chunk):
        hi = min(s, lo + chunk)
        acc = np.zeros((hi - lo, s, s), dtype=np.int64)
        for c in range(m):
            n = sizes[c]
            t = np.asarray(tables[c], dtype=np.int64)
            col = elems[:, c]
            idx = (col[lo:hi, None, None] * n + col[None, :, None]) * n + col[
                None, None, :
            ]
            acc += t[idx] * weights[c]
        parts.append(acc.reshape(-1))
    return np.concatenate(parts)


def _decode_code(code: int, sizes: Sequence[int]) -> tuple:
    out = []
    for n in reversed(sizes):
        code, v = divmod(code, n)
        out.append(v)
    return tuple(reversed(out))


class _CodeSpace:
    """Membership testing for encoded tuples, dense when the code space is
    small enough, sorted-array based otherwise."""

    def __init__(self, sizes: Sequence[int]):
        self.sizes = list(sizes)
        self.weights, self.space = _code_weights(sizes)
        self.dense = self.space <= 32_000_000
        self._member = np.zeros(self.space, dtype=bool) if self.dense else None
        self._codes: set[int] = set()

    def encode(self, elems: Iterable[tuple]) -> list[int]:
        w = self.weights.tolist()
        return [sum(v * wc for v, wc in zip(t, w)) for t in elems]

    def add_codes(self, codes: Iterable[int]):
        codes = list(codes)
        self._codes.update(codes)
        if self.dense:
            self._member[codes] = True

    def fresh(self, image_codes: np.ndarray) -> list[int]:
        """Distinct codes from the image that are not yet members."""
        if self.dense:
            outside = image_codes[~self._member[image_codes]]
            if outside.size == 0:
                return []
            return np.unique(outside).tolist()
        return sorted(set(image_codes.tolist()) - self._codes)


def closed_under_ops(
    op_tables: Sequence[Sequence[Sequence[int]]],
    sizes: Sequence[int],
    elements: Iterable[tuple],
) -> bool:
    current = set(elements)
    if not current:
        return True
    space = _CodeSpace(sizes)
    space.add_codes(space.encode(current))
    elems = np.array(sorted(current), dtype=np.int64).reshape(len(current), -1)
    for tables in op_tables:
        codes = _triple_image_codes(tables, sizes, space.weights, elems)
        if space.fresh(codes):
            return False
    return True


def _power_tables(alg: FiniteAlgebra, m: int):
    return (
        [[alg.p1.table] * m, [alg.p2.table] * m, [alg.p3.table] * m],
        [alg.size] * m,
    )


def _normalize_power_elems(seed: Iterable, power: int) -> set[tuple]:
    out = set()
    for e in seed:
        t = (e,) if isinstance(e, int) else tuple(e)
        if len(t) != power:
            raise InputError(f"tuple {t} has length {len(t)}, expected {power}")
        out.add(t)
    return out


def sg_closure(alg: FiniteAlgebra, power: int, seed: Iterable) -> frozenset[tuple]:
    """Least superset of ``seed`` closed under the coordinatewise operations:
    the subuniverse of the ``power``-th power generated by the seed."""
    if power < 1:
        raise InputError(f"power must be >= 1, got {power}")
    current = _normalize_power_elems(seed, power)
    if not current:
        raise InputError("seed must be nonempty")
    for t in current:
        for v in t:
            if not (0 <= v < alg.size):
                raise InputError(f"seed entry {v} out of range")
    op_tables, sizes = _power_tables(alg, power)
    space = _CodeSpace(sizes)
    space.add_codes(space.encode(current))
    while True:
        elems = np.array(sorted(current), dtype=np.int64).reshape(len(current), -1)
        fresh: list[int] = []
        for tables in op_tables:
            codes = _triple_image_codes(tables, sizes, space.weights, elems)
            fresh.extend(space.fresh(codes))
        if not fresh:
            return frozenset(current)
        space.add_codes(fresh)
        current.update(_decode_code(code, sizes) for code in set(fresh))


# --- congruences ------------------------------------------------------------


@dataclass(frozen=True)
class Congruence:
    """A partition in canonical form: blocks[i] is the block id of element i
    and ids are assigned by first occurrence."""

    blocks: tuple[int, ...]

    @staticmethod
    def from_labels(labels: Sequence[int]) -> "Congruence":
        remap: dict[int, int] = {}
        out = []
        for lab in labels:
            if lab not in remap:
                remap[lab] = len(remap)
            out.append(remap[lab])
        return Congruence(tuple(out))

    @staticmethod
    def identity(n: int) -> "Congruence":
        return Congruence(tuple(range(n)))

    @staticmethod
    def full(n: int) -> "Congruence":
        return Congruence((0,) * n)

    @property
    def size(self) -> int:
        return len(self.blocks)

    @property
    def num_blocks(self) -> int:
        return max(self.blocks) + 1 if self.blocks else 0

    def relates(self, a: int, b: int) -> bool:
        return self.blocks[a] == self.blocks[b]

    def classes(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.num_blocks)]
        for i, b in enumerate(self.blocks):
            out[b].append(i)
        return out

    def refines(self, other: "Congruence") -> bool:
        """True iff every block of self lies inside a block of other."""
        seen: dict[int, int] = {}
        for i, b in enumerate(self.blocks):
            o = other.blocks[i]
            if b in seen:
                if seen[b] != o:
                    return False
            else:
                seen[b] = o
        return True

    def join(self, other: "Congruence") -> "Congruence":
        parent = list(range(self.size))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(a: int, b: int):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[rb] = ra

        for part in (self, other):
            firsts: dict[int, int] = {}
            for i, b in enumerate(part.blocks):
                if b in firsts:
                    union(firsts[b], i)
                else:
                    firsts[b] = i
        return Congruence.from_labels([find(i) for i in range(self.size)])

    def meet(self, other: "Congruence") -> "Congruence":
        return Congruence.from_labels(
            [self.blocks[i] * (max(other.blocks) + 1) + other.blocks[i] for i in range(self.size)]
        )


def is_congruence(alg: FiniteAlgebra, part: Congruence) -> bool:
    """Compatibility with the operations, one substituted coordinate at a
    time (sufficient by the usual chain argument)."""
    if part.size != alg.size:
        raise InputError("partition size does not match algebra size")
    n = alg.size
    related = [
        (u, v)
        for u in range(n)
        for v in range(u + 1, n)
        if part.relates(u, v)
    ]
    for op in alg.ops:
        for u, v in related:
            for c1 in range(n):
                for c2 in range(n):
                    if not part.relates(op.eval(u, c1, c2), op.eval(v, c1, c2)):
                        return False
                    if not part.relates(op.eval(c1, u, c2), op.eval(c1, v, c2)):
                        return False
                    if not part.relates(op.eval(c1, c2, u), op.eval(c1, c2, v)):
                        return False
    return True


def principal_congruence(alg: FiniteAlgebra, a: int, b: int) -> Congruence:
    """Least congruence identifying a and b: pair closure under unary
    polynomial translations of the three operations."""
    n = alg.size
    if not (0 <= a < n and 0 <= b < n):
        raise InputError("elements out of range")
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x: int, y: int) -> bool:
        rx, ry = find(x), find(y)
        if rx == ry:
            return False
        parent[ry] = rx
        return True

    work = []
    if union(a, b):
        work.append((a, b))
    consts = [(c1, c2) for c1 in range(n) for c2 in range(n)]
    while work:
        u, v = work.pop()
        for op in alg.ops:
            for c1, c2 in consts:
                for iu, iv in (
                    (op.eval(u, c1, c2), op.eval(v, c1, c2)),
                    (op.eval(c1, u, c2), op.eval(c1, v, c2)),
                    (op.eval(c1, c2, u), op.eval(c1, c2, v)),
                ):
                    if union(iu, iv):
                        work.append((iu, iv))
    return Congruence.from_labels([find(i) for i in range(n)])


def all_congruences(alg: FiniteAlgebra) -> frozenset[Congruence]:
    """Every congruence, as the join closure of the principal ones."""
    n = alg.size
    if n > CONGRUENCE_ENUM_BOUND:
        raise ResourceBudgetError(
            f"congruence enumeration bound {CONGRUENCE_ENUM_BOUND} exceeded (size {n})"
        )
    found: set[Congruence] = {Congruence.identity(n)}
    for a in range(n):
        for b in range(a + 1, n):
            found.add(principal_congruence(alg, a, b))
    while True:
        fresh = set()
        items = sorted(found, key=lambda c: c.blocks)
        for x, y in itertools.combinations(items, 2):
            j = x.join(y)
            if j not in found:
                fresh.add(j)
        if not fresh:
            return frozenset(found)
        found |= fresh


def coatom_congruences(alg: FiniteAlgebra) -> frozenset[Congruence]:
    """Congruences lying directly below the full relation.  Degenerate
    one-element algebras have none."""
    full = Congruence.full(alg.size)
    below = [c for c in all_congruences(alg) if c != full]
    return frozenset(
        c
        for c in below
        if not any(c != d and c.refines(d) for d in below)
    )


def quotient_algebra(alg: FiniteAlgebra, theta: Congruence) -> FiniteAlgebra:
    """Algebra on the blocks of theta; verifies well-definedness."""
    if not is_congruence(alg, theta):
        raise InvariantViolation("partition is not compatible with the operations")
    reps = [cls[0] for cls in theta.classes()]
    m = len(reps)
    tables = []
    for op in alg.ops:
        flat = []
        for i in range(m):
            for j in range(m):
                for k in range(m):
                    flat.append(theta.blocks[op.eval(reps[i], reps[j], reps[k])])
        tables.append(OperationTable(3, m, tuple(flat)))
    return FiniteAlgebra(m, *tables)


def kernel(mapping: Sequence[int]) -> Congruence:
    """Partition of the domain by equal image.  Compatibility with any
    particular algebra is the caller's assertion."""
    if not mapping:
        raise InputError("mapping must be nonempty")
    return Congruence.from_labels(list(mapping))


def is_subdirect_binary(rel: Iterable[tuple], n1: int, n2: int) -> bool:
    """True iff both projections of the binary relation are onto."""
    pairs = set(rel)
    for a, b in pairs:
        if not (0 <= a < n1 and 0 <= b < n2):
            raise InputError(f"pair ({a},{b}) out of range {n1}x{n2}")
    return {p[0] for p in pairs} == set(range(n1)) and {
        p[1] for p in pairs
    } == set(range(n2))


# --- JSON interface ---------------------------------------------------------


def algebra_to_json(alg: FiniteAlgebra) -> dict:
    return {
        "size": alg.size,
        "ops": {name: list(op.table) for name, op in zip(OP_NAMES, alg.ops)},
    }


def algebra_from_json(doc: dict) -> FiniteAlgebra:
    if not isinstance(doc, dict) or "size" not in doc or "ops" not in doc:
        raise InputError("algebra JSON must have 'size' and 'ops' keys")
    size = doc["size"]
    if not isinstance(size, int) or size < 1:
        raise InputError(f"invalid size {size!r}")
    ops = doc["ops"]
    if not isinstance(ops, dict) or set(ops) != set(OP_NAMES):
        raise InputError(f"ops must have exactly the keys {OP_NAMES}")
    tables = []
    for name in OP_NAMES:
        flat = ops[name]
        if not isinstance(flat, list) or not all(isinstance(v, int) for v in flat):
            raise InputError(f"{name} must be a flat list of integers")
        tables.append(OperationTable(3, size, tuple(flat)))
    return FiniteAlgebra(size, *tables)


def load_algebra(path: str) -> FiniteAlgebra:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise InputError(f"no such file: {path}")
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}")
    return algebra_from_json(doc)


def save_algebra(alg: FiniteAlgebra, path: str):
    with open(path, "w") as fh:
        json.dump(algebra_to_json(alg), fh, indent=2, sort_keys=True)
        fh.write("\n")


# --- helpers used by tests and the oracle -----------------------------------


def all_partitions(n: int) -> Iterator[Congruence]:
    """Every partition of {0..n-1}, in restricted-growth-string order."""

    def rec(prefix: list[int], next_id: int):
        if len(prefix) == n:
            yield Congruence(tuple(prefix))
            return
        for b in range(next_id + 1):
            yield from rec(prefix + [b], max(next_id, b + 1))

    yield from rec([0], 1) if n else iter(())

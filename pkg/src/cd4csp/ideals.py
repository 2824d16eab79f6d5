"""Absorption ideals inside explicit finite algebras.

A Carrier is an algebra given by an explicit element set: a subuniverse of
a product of base algebras, with the three operations acting coordinatewise.
Base elements and power tuples share this one code path; elements are always
tuples (length 1 for base elements).

An L-ideal of D is a nonempty subuniverse C with l(x,y) in C whenever x is
in C and y in D, where l(x,y) = p2(y,x,x); R-ideals absorb r(x,y) = p2(x,x,y).
Every ideal contains the principal ideal of each of its elements, so scans
over principal ideals settle ideal-freeness and minimality.

Internally each carrier works on dense element indices: the ternary tables
are materialized once per carrier (vectorized) and every closure after that
is index arithmetic.
"""

from __future__ import annotations

import enum
from functools import cached_property
from typing import Iterable, Optional

import numpy as np

from .algebra import FiniteAlgebra, OperationTable
from .errors import InputError
from .jonsson import derived_l, derived_r


class IdealSide(enum.Enum):
    L = "L"
    R = "R"


def _as_tuple(e) -> tuple:
    return (e,) if isinstance(e, int) else tuple(e)


class Carrier:
    """Explicit element set closed under the coordinatewise operations of
    the per-coordinate base algebras."""

    def __init__(self, coords: tuple[FiniteAlgebra, ...], elements: tuple[tuple, ...]):
        self.coords = coords
        self.elements = elements
        self.index = {e: i for i, e in enumerate(elements)}
        self._principal_cache: dict = {IdealSide.L: {}, IdealSide.R: {}}

    @staticmethod
    def from_elements(
        coords: Iterable[FiniteAlgebra] | FiniteAlgebra,
        elements: Iterable,
        *,
        assume_closed: bool = False,
    ) -> "Carrier":
        elems = tuple(sorted({_as_tuple(e) for e in elements}))
        if not elems:
            raise InputError("carrier must be nonempty")
        width = len(elems[0])
        if isinstance(coords, FiniteAlgebra):
            algs: tuple[FiniteAlgebra, ...] = (coords,) * width
        else:
            algs = tuple(coords)
        if any(len(e) != len(algs) for e in elems):
            raise InputError("element width does not match coordinate count")
        for e in elems:
            for c, v in enumerate(e):
                if not (0 <= v < algs[c].size):
                    raise InputError(f"element {e} out of range in coordinate {c}")
        car = Carrier(algs, elems)
        if not assume_closed:
            car._ternary_index_tables  # raises InputError when not closed
        return car

    @staticmethod
    def from_algebra(alg: FiniteAlgebra) -> "Carrier":
        return Carrier((alg,), tuple((x,) for x in range(alg.size)))

    @property
    def size(self) -> int:
        return len(self.elements)

    @property
    def width(self) -> int:
        return len(self.coords)

    # --- index-space machinery -------------------------------------------

    @cached_property
    def _row_codec(self):
        """Mixed-radix encoding of raw element rows, plus code -> index."""
        sizes = np.array([alg.size for alg in self.coords], dtype=np.int64)
        weights = np.ones(self.width, dtype=np.int64)
        for c in range(self.width - 2, -1, -1):
            weights[c] = weights[c + 1] * sizes[c + 1]
        space = int(weights[0] * sizes[0])
        rows = np.array(self.elements, dtype=np.int64).reshape(self.size, self.width)
        codes = rows @ weights
        if space <= 4_000_000:
            lookup = np.full(space, -1, dtype=np.int64)
            lookup[codes] = np.arange(self.size)
        else:
            lookup = None
        return weights, codes, lookup

    def _rows_to_indices(self, rows: np.ndarray) -> np.ndarray:
        weights, codes, lookup = self._row_codec
        flat = rows @ weights
        if lookup is not None:
            out = lookup[flat]
            if (out < 0).any():
                raise InputError("image row escapes the carrier: not a subuniverse")
            return out
        mapping = {int(c): i for i, c in enumerate(codes)}
        try:
            return np.array([mapping[int(c)] for c in flat], dtype=np.int64)
        except KeyError:
            raise InputError("image row escapes the carrier: not a subuniverse")

    @cached_property
    def _ternary_index_tables(self) -> list[np.ndarray]:
        """Three flat (size**3) tables of the operations on element indices."""
        E = np.array(self.elements, dtype=np.int64).reshape(self.size, self.width)
        tabs = []
        for o in range(3):
            rows = np.empty((self.size**3, self.width), dtype=np.int64)
            for c, alg in enumerate(self.coords):
                n = alg.size
                t = np.asarray(alg.ops[o].table, dtype=np.int64)
                col = E[:, c]
                idx = (col[:, None, None] * n + col[None, :, None]) * n + col[
                    None, None, :
                ]
                rows[:, c] = t[idx].reshape(-1)
            tabs.append(self._rows_to_indices(rows))
        return tabs

    @cached_property
    def _side_index_tables(self) -> dict:
        """Flat (size**2) tables of l and r on element indices."""
        E = np.array(self.elements, dtype=np.int64).reshape(self.size, self.width)
        out = {}
        for side, derive in ((IdealSide.L, derived_l), (IdealSide.R, derived_r)):
            rows = np.empty((self.size**2, self.width), dtype=np.int64)
            for c, alg in enumerate(self.coords):
                n = alg.size
                t = np.asarray(derive(alg).table, dtype=np.int64)
                col = E[:, c]
                rows[:, c] = t[(col[:, None] * n + col[None, :])].reshape(-1)
            out[side] = self._rows_to_indices(rows)
        return out

    def _fresh_under_ops(self, indices: frozenset[int]) -> list[int]:
        """Indices produced by one application round that are not yet in
        the set."""
        cur = np.fromiter(sorted(indices), dtype=np.int64, count=len(indices))
        member = np.zeros(self.size, dtype=bool)
        member[cur] = True
        s = self.size
        grid = (cur[:, None, None] * s + cur[None, :, None]) * s + cur[None, None, :]
        flat = grid.reshape(-1)
        found: set[int] = set()
        for tab in self._ternary_index_tables:
            img = tab[flat]
            outside = img[~member[img]]
            if outside.size:
                found.update(np.unique(outside).tolist())
        return sorted(found)

    def generate_indices(self, seed: Iterable[int]) -> frozenset[int]:
        """Indices of the subuniverse generated by the seed indices."""
        current = frozenset(seed)
        if not current:
            raise InputError("seed must be nonempty")
        while True:
            fresh = self._fresh_under_ops(current)
            if not fresh:
                return current
            current |= set(fresh)

    def _absorb_indices(self, indices: frozenset[int], side: IdealSide) -> frozenset[int]:
        cur = np.fromiter(sorted(indices), dtype=np.int64, count=len(indices))
        tab = self._side_index_tables[side]
        image = tab[(cur[:, None] * self.size + np.arange(self.size)[None, :])]
        return frozenset(np.unique(image).tolist())

    def ideal_closure_indices(self, seed: Iterable[int], side: IdealSide) -> frozenset[int]:
        current = self.generate_indices(seed)
        while True:
            absorbed = self._absorb_indices(current, side)
            if absorbed <= current:
                return current
            current = self.generate_indices(current | absorbed)

    def principal_ideal_indices(self, i: int, side: IdealSide) -> frozenset[int]:
        cache = self._principal_cache[side]
        if i not in cache:
            cache[i] = self.ideal_closure_indices([i], side)
        return cache[i]

    # --- tuple-space API ---------------------------------------------------

    def _to_indices(self, elems: Iterable) -> frozenset[int]:
        out = set()
        for e in elems:
            t = _as_tuple(e)
            if t not in self.index:
                raise InputError(f"element {t} not in carrier")
            out.add(self.index[t])
        return frozenset(out)

    def _to_elements(self, indices: Iterable[int]) -> frozenset[tuple]:
        return frozenset(self.elements[i] for i in indices)

    def sg_closure(self, seed: Iterable) -> frozenset[tuple]:
        return self._to_elements(self.generate_indices(self._to_indices(seed)))

    def side_apply(self, side: IdealSide, x, y) -> tuple:
        i, j = self.index[_as_tuple(x)], self.index[_as_tuple(y)]
        return self.elements[int(self._side_index_tables[side][i * self.size + j])]

    @cached_property
    def induced_algebra(self) -> FiniteAlgebra:
        """The same algebra presented on dense indices 0..size-1."""
        tables = [
            OperationTable(3, self.size, tuple(int(v) for v in tab))
            for tab in self._ternary_index_tables
        ]
        return FiniteAlgebra(self.size, *tables)


def is_ideal(D: Carrier, C: Iterable, side: IdealSide) -> bool:
    """C is a subuniverse of D absorbing the side operation."""
    subset = D._to_indices(C)
    if not subset:
        raise InputError("ideal candidate must be nonempty")
    if D._fresh_under_ops(subset):
        return False
    return D._absorb_indices(subset, side) <= subset


def ideal_closure(D: Carrier, seed: Iterable, side: IdealSide) -> frozenset[tuple]:
    """Least subuniverse containing the seed and absorbing the side
    operation: alternate generation and absorption sweeps until stable."""
    return D._to_elements(D.ideal_closure_indices(D._to_indices(seed), side))


def generates_minimal_ideal(D: Carrier, a, side: IdealSide) -> bool:
    """The ideal generated by ``a`` contains no proper sub-ideal, i.e.
    every element of it generates the whole of it back."""
    i = D.index[_as_tuple(a)]
    own = D.principal_ideal_indices(i, side)
    return all(i in D.principal_ideal_indices(c, side) for c in own)


def is_ideal_free(D: Carrier) -> bool:
    """Only ideal on either side is D itself.  Principal ideals suffice:
    any proper ideal contains a proper principal one."""
    full = frozenset(range(D.size))
    return all(
        D.principal_ideal_indices(i, side) == full
        for side in (IdealSide.L, IdealSide.R)
        for i in range(D.size)
    )


def find_proper_ideal(D: Carrier) -> Optional[tuple[frozenset[tuple], IdealSide]]:
    """A minimal proper principal ideal and its side, or None.

    Tie-break among inclusion-minimal candidates: smallest generator
    element, then L before R, then smallest ideal by (size, sorted
    elements)."""
    full = frozenset(range(D.size))
    candidates = []
    for i in range(D.size):
        for side in (IdealSide.L, IdealSide.R):
            ideal = D.principal_ideal_indices(i, side)
            if ideal != full:
                candidates.append((i, side, ideal))
    if not candidates:
        return None
    minimal = [
        (i, side, ideal)
        for i, side, ideal in candidates
        if not any(other < ideal for _, _, other in candidates)
    ]
    minimal.sort(
        key=lambda t: (
            D.elements[t[0]],
            t[1] is IdealSide.R,
            len(t[2]),
            sorted(D.elements[i] for i in t[2]),
        )
    )
    _, side, ideal = minimal[0]
    return D._to_elements(ideal), side


def absorption_witness(
    D: Carrier, X: Iterable, side: IdealSide
) -> Optional[tuple[tuple, tuple]]:
    """For a subuniverse X that is not a side-ideal, an x in X and x' outside
    with side(x,x') = x'.  Exhaustive scan; None would contradict the
    absorption retraction property and is reported rather than asserted."""
    subset = D._to_indices(X)
    if D._fresh_under_ops(subset):
        raise InputError("X is not a subuniverse")
    if D._absorb_indices(subset, side) <= subset:
        raise InputError("X is an ideal; no witness exists")
    tab = D._side_index_tables[side]
    for i in sorted(subset):
        for j in range(D.size):
            if j not in subset and int(tab[i * D.size + j]) == j:
                return D.elements[i], D.elements[j]
    return None

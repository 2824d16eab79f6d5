import itertools
import random

import pytest

from cd4csp import (
    Congruence,
    FiniteAlgebra,
    InputError,
    InvariantViolation,
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
from cd4csp.algebra import all_partitions, is_congruence

from conftest import majority_table


def maj3(x, y, z):
    return 1 if x + y + z >= 2 else 0


def naive_compatible(alg, part):
    """Full-pair compatibility scan, independent of the production check."""
    n = alg.size
    for op in alg.ops:
        for xs in itertools.product(range(n), repeat=3):
            for ys in itertools.product(range(n), repeat=3):
                if all(part.relates(a, b) for a, b in zip(xs, ys)):
                    if not part.relates(op.eval(*xs), op.eval(*ys)):
                        return False
    return True


def test_eval_op_majority_examples(maj_alg):
    assert eval_op(maj_alg.p1, (0, 1, 0)) == 0
    # oracle: enumerate all eight triples of the majority rule
    for args in itertools.product(range(2), repeat=3):
        assert eval_op(maj_alg.p1, args) == maj3(*args)
    assert eval_op(maj_alg.p1, (1, 1, 0)) == 1


def test_eval_op_idempotence_diagonal(maj_alg, idealfree_alg):
    for alg in (maj_alg, idealfree_alg):
        for op in alg.ops:
            for c in range(alg.size):
                assert eval_op(op, (c, c, c)) == c


def test_eval_op_rejects_out_of_range(maj_alg):
    with pytest.raises(InputError):
        eval_op(maj_alg.p1, (0, 2, 0))
    with pytest.raises(InputError):
        eval_op(maj_alg.p1, (0, 1))


def test_operation_table_validation():
    with pytest.raises(InputError):
        OperationTable(3, 2, (0,) * 7)
    with pytest.raises(InputError):
        OperationTable(3, 2, (0,) * 7 + (2,))


def test_eval_term_projection(maj_alg):
    t = TermExpr.variable(2)
    assert eval_term(t, maj_alg, (0, 1, 1)) == 1
    assert eval_term(t, maj_alg, (1, 0, 0)) == 0


def test_eval_term_l_pattern(maj_alg):
    # t = p2(y, x, x) evaluated at (x,y) = (0,1) is maj(1,0,0) = 0
    x, y = TermExpr.variable(0), TermExpr.variable(1)
    t = TermExpr.apply("p2", y, x, x)
    assert eval_term(t, maj_alg, (0, 1)) == maj3(1, 0, 0) == 0


def test_eval_term_malformed():
    with pytest.raises(InputError):
        TermExpr.apply("p4", TermExpr.variable(0), TermExpr.variable(0), TermExpr.variable(0))
    t = TermExpr.variable(3)
    op = OperationTable(3, 2, majority_table())
    alg = FiniteAlgebra(2, op, op, op)
    with pytest.raises(InputError):
        eval_term(t, alg, (0, 1))


def test_sg_closure_singleton(maj_alg):
    assert sg_closure(maj_alg, 1, {0}) == frozenset({(0,)})


def test_sg_closure_antichain_pair(maj_alg):
    # oracle: coordinatewise majority of any triple from the two tuples
    seed = {(0, 1), (1, 0)}
    expected = set()
    for triple in itertools.product(sorted(seed), repeat=3):
        expected.add(tuple(maj3(*vals) for vals in zip(*triple)))
    assert expected == seed
    assert sg_closure(maj_alg, 2, seed) == frozenset(seed)


def test_sg_closure_full_power(maj_alg, idealfree_alg):
    for alg in (maj_alg, idealfree_alg):
        full = set(itertools.product(range(alg.size), repeat=2))
        assert sg_closure(alg, 2, full) == frozenset(full)


def test_sg_closure_operator_laws(pool3):
    rng = random.Random(7)
    for _ in range(40):
        alg = rng.choice(pool3)
        power = rng.choice((1, 2))
        universe = list(itertools.product(range(alg.size), repeat=power))
        seed = set(rng.sample(universe, rng.randint(1, len(universe))))
        closed = sg_closure(alg, power, seed)
        assert seed <= closed  # extensive
        assert sg_closure(alg, power, closed) == closed  # idempotent
        smaller = set(rng.sample(sorted(seed), rng.randint(1, len(seed))))
        assert sg_closure(alg, power, smaller) <= closed  # monotone


def test_principal_congruence_trivial(maj_alg):
    assert principal_congruence(maj_alg, 1, 1) == Congruence.identity(2)
    assert principal_congruence(maj_alg, 0, 1) == Congruence.full(2)


def test_principal_congruence_vs_partition_scan(pool3):
    # oracle: minimal compatible partition containing the pair, over all
    # five partitions of a three-element universe
    for alg in pool3[:6]:
        compatible = [p for p in all_partitions(3) if naive_compatible(alg, p)]
        for a in range(3):
            for b in range(3):
                best = None
                for p in compatible:
                    if p.relates(a, b):
                        if best is None or sum(
                            1 for x in range(3) for y in range(3) if p.relates(x, y)
                        ) < sum(
                            1 for x in range(3) for y in range(3) if best.relates(x, y)
                        ):
                            best = p
                assert principal_congruence(alg, a, b) == best


def test_all_congruences_small(maj_alg):
    one = FiniteAlgebra(1, *(OperationTable(3, 1, (0,)),) * 3)
    assert all_congruences(one) == frozenset({Congruence.identity(1)})
    assert all_congruences(maj_alg) == frozenset(
        {Congruence.identity(2), Congruence.full(2)}
    )


def test_all_congruences_vs_partition_filter(pool3):
    for alg in pool3[:8]:
        expected = frozenset(
            p for p in all_partitions(alg.size) if naive_compatible(alg, p)
        )
        assert all_congruences(alg) == expected


def test_coatoms(maj_alg, pool3):
    assert coatom_congruences(maj_alg) == frozenset({Congruence.identity(2)})
    for alg in pool3[:8]:
        cons = all_congruences(alg)
        full = Congruence.full(alg.size)
        below = [c for c in cons if c != full]
        expected = frozenset(
            c for c in below if not any(c != d and c.refines(d) for d in below)
        )
        assert coatom_congruences(alg) == expected


def test_quotient_algebra(maj_alg):
    same = quotient_algebra(maj_alg, Congruence.identity(2))
    assert same.p1.table == maj_alg.p1.table
    tiny = quotient_algebra(maj_alg, Congruence.full(2))
    assert tiny.size == 1


def test_quotient_algebra_incompatible():
    # p2 of the ideal-free algebra is not compatible with {0,1} collapsed
    # on the three-element chain-extension below
    p1 = tuple(x for x in range(3) for _ in range(9))
    p3 = tuple(z for _ in range(9) for z in range(3))
    p2 = []
    for x in range(3):
        for y in range(3):
            for z in range(3):
                if z == x:
                    p2.append(x)
                elif y == x:
                    p2.append(z)
                elif z == y:
                    p2.append(x)
                else:
                    p2.append(z)
    alg = FiniteAlgebra(
        3,
        OperationTable(3, 3, p1),
        OperationTable(3, 3, tuple(p2)),
        OperationTable(3, 3, p3),
    )
    bad = Congruence((0, 0, 1))
    if not naive_compatible(alg, bad):
        with pytest.raises(InvariantViolation):
            quotient_algebra(alg, bad)


def test_kernel():
    assert kernel([0, 1, 2]) == Congruence.identity(3)
    assert kernel([5, 5, 5]) == Congruence.full(3)
    assert kernel([7, 7, 9]) == Congruence((0, 0, 1))


def test_is_subdirect_binary():
    assert is_subdirect_binary({(0, 0), (1, 1)}, 2, 2)
    assert not is_subdirect_binary({(0, 0), (0, 1)}, 2, 2)
    assert is_subdirect_binary(set(itertools.product(range(2), range(2))), 2, 2)
    with pytest.raises(InputError):
        is_subdirect_binary({(0, 2)}, 2, 2)


def test_congruence_lattice_distributive(pool2, pool3):
    # the defining property behind the chain characterization
    for alg in list(pool2) + list(pool3)[:6]:
        cons = sorted(all_congruences(alg), key=lambda c: c.blocks)
        for x, y, z in itertools.product(cons, repeat=3):
            lhs = x.meet(y.join(z))
            rhs = x.meet(y).join(x.meet(z))
            assert lhs == rhs


def test_every_congruence_passes_compatibility(pool3):
    for alg in pool3[:8]:
        for c in all_congruences(alg):
            assert is_congruence(alg, c)
            assert naive_compatible(alg, c)

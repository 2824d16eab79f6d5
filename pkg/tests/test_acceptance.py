"""Acceptance gate: each test enforces one release criterion at its stated
tolerance and prints a single PASS line when it holds."""

import itertools
import random
import time

import cd4csp.reductions as reductions
from cd4csp import (
    EMPTY,
    Carrier,
    IdealSide,
    brute_force_hom,
    choose_k,
    enforce,
    enumerate_cd4_algebras,
    ideal_closure,
    init_full,
    is_homomorphism,
    is_winning,
    lemma_suite,
    preprocess_terms,
    principal_congruence,
    random_instance,
    random_planted_instance,
    sg_closure,
    solve,
    verify_cd4,
    verify_lr_idempotence,
)
from cd4csp.strategy import restriction_family

N_INSTANCES = 200
N_PLANTED = 50


def _instance_seeds():
    return range(N_INSTANCES)


def test_criterion_1_jonsson_suite():
    start = time.monotonic()
    failures = 0
    counted = 0
    for size in (1, 2, 3):
        for alg in enumerate_cd4_algebras(size).algebras:
            counted += 1
            if not verify_cd4(alg).ok:
                failures += 1
                continue
            out = preprocess_terms(alg).algebra
            if not (verify_cd4(out).ok and verify_lr_idempotence(out).ok):
                failures += 1
    sampled = enumerate_cd4_algebras(4, 500).algebras
    assert len(sampled) >= 500
    for alg in sampled:
        counted += 1
        if not verify_cd4(alg).ok:
            failures += 1
            continue
        out = preprocess_terms(alg).algebra
        if not (verify_cd4(out).ok and verify_lr_idempotence(out).ok):
            failures += 1
    elapsed = time.monotonic() - start
    assert failures == 0
    assert elapsed < 60.0
    print(
        f"PASS criterion 1: chain + preprocessing postconditions on "
        f"{counted} algebras, 0 failures, {elapsed:.1f}s"
    )


def test_criterion_2_consistency_correctness():
    sound_violations = 0
    empties = 0
    for seed in _instance_seeds():
        A, B, _ = random_instance(seed)
        H = enforce(init_full(A, B, choose_k(A)))
        if H is EMPTY:
            empties += 1
            if brute_force_hom(A, B) is not None:
                sound_violations += 1
    assert sound_violations == 0

    containment_violations = 0
    for seed in range(10_000, 10_000 + N_PLANTED):
        A, B, _, h = random_planted_instance(seed)
        assert is_homomorphism(h, A, B)
        k = choose_k(A)
        H = enforce(init_full(A, B, k))
        assert H is not EMPTY
        for I, tuples in restriction_family(h, A, k).items():
            if not tuples <= H.table[I]:
                containment_violations += 1
    assert containment_violations == 0

    order_mismatches = 0
    for seed in _instance_seeds():
        A, B, _ = random_instance(seed)
        H = init_full(A, B, choose_k(A))
        first = enforce(H, order_seed=1)
        second = enforce(H, order_seed=2)
        if (first is EMPTY) != (second is EMPTY):
            order_mismatches += 1
        elif first is not EMPTY and first.table != second.table:
            order_mismatches += 1
    assert order_mismatches == 0
    print(
        f"PASS criterion 2: soundness on {N_INSTANCES} instances "
        f"({empties} empty fixpoints), containment on {N_PLANTED} planted, "
        f"order-independence on {N_INSTANCES}"
    )


def test_criterion_3_theorem_1_end_to_end():
    start = time.monotonic()
    disagreements = 0
    trace_violations = 0
    bad_maps = 0
    sat = 0
    for seed in _instance_seeds():
        A, B, alg = random_instance(seed)
        solution, trace = solve(A, B, alg)
        oracle = brute_force_hom(A, B)
        if (solution is None) != (oracle is None):
            disagreements += 1
        if solution is not None:
            sat += 1
            if not is_homomorphism(solution, A, B):
                bad_maps += 1
        potentials = [s["potential"] for s in trace.steps]
        if any(b >= a for a, b in zip(potentials, potentials[1:])):
            trace_violations += 1
    elapsed = time.monotonic() - start
    assert disagreements == 0
    assert bad_maps == 0
    assert trace_violations == 0
    assert elapsed < 300.0
    print(
        f"PASS criterion 3: solve matches the oracle on {N_INSTANCES} "
        f"instances ({sat} SAT), all traces strictly decreasing, "
        f"{elapsed:.1f}s"
    )


def test_criterion_4_reduction_assertions(monkeypatch):
    counts = {"ideal": 0, "simple": 0}
    original_ideal = reductions.ideal_reduce
    original_simple = reductions.simple_reduce
    original_platoon = reductions.find_platoon

    def checked_ideal(H, a, X, side):
        out = original_ideal(H, a, X, side)
        assert is_winning(out)
        assert {t[0] for t in out.table[(a,)]} == frozenset(X)
        assert all(out.table[I] <= H.table[I] for I in H.table)
        counts["ideal"] += 1
        return out

    def checked_platoon(H, active):
        platoon = original_platoon(H, active)
        # re-verify all three statements over the strategy data
        carriers = {
            i: Carrier.from_elements(H.alg, H.table[(i,)], assume_closed=True)
            for i in active
        }
        theta = {}
        for m in platoon.members:
            labels = [
                platoon.value_block(m)[e[0]] for e in carriers[m].elements
            ]
            from cd4csp.algebra import Congruence

            theta[m] = Congruence.from_labels(labels)
        reductions._verify_platoon(H, platoon, sorted(active), carriers, theta)
        return platoon

    def checked_simple(H, platoon):
        out = original_simple(H, platoon)
        assert is_winning(out)
        m0 = platoon.members[0]
        anchor = min(t[0] for t in H.table[(m0,)])
        class0 = platoon.value_block(m0)[anchor]
        for m in platoon.members:
            chosen = platoon.blocks[m][platoon.tau[(m0, m)][class0]]
            assert {t[0] for t in out.table[(m,)]} <= chosen
        assert all(out.table[I] <= H.table[I] for I in H.table)
        counts["simple"] += 1
        return out

    monkeypatch.setattr(reductions, "ideal_reduce", checked_ideal)
    monkeypatch.setattr(reductions, "simple_reduce", checked_simple)
    monkeypatch.setattr(reductions, "find_platoon", checked_platoon)

    for seed in _instance_seeds():
        A, B, alg = random_instance(seed)
        solve(A, B, alg)  # raises on any internal assertion failure
    assert counts["ideal"] > 0
    assert counts["simple"] > 0
    print(
        f"PASS criterion 4: {counts['ideal']} ideal reductions and "
        f"{counts['simple']} simple reductions re-verified, 0 failures"
    )


def test_criterion_5_lemma_suite():
    start = time.monotonic()
    reports = lemma_suite(max_size=3)
    elapsed = time.monotonic() - start
    assert elapsed < 600.0
    assert len(reports) == 7
    total_cex = 0
    for r in reports:
        total_cex += len(r.counterexamples)
    assert total_cex == 0
    summary = ", ".join(f"{r.lemma}={r.checked}/{r.vacuous}" for r in reports)
    print(
        f"PASS criterion 5: 0 counterexamples in {elapsed:.1f}s "
        f"(checked/vacuous: {summary})"
    )


def test_criterion_6_closure_operator_laws(pool2, pool3):
    pool = list(pool2) + list(pool3)
    rng = random.Random(2024)
    sg_failures = 0
    for _ in range(1000):
        alg = rng.choice(pool)
        power = rng.choice((1, 2))
        universe = list(itertools.product(range(alg.size), repeat=power))
        seed = set(rng.sample(universe, rng.randint(1, min(4, len(universe)))))
        closed = sg_closure(alg, power, seed)
        smaller = set(rng.sample(sorted(seed), rng.randint(1, len(seed))))
        if not (
            seed <= closed
            and sg_closure(alg, power, closed) == closed
            and sg_closure(alg, power, smaller) <= closed
        ):
            sg_failures += 1
    assert sg_failures == 0

    ideal_failures = 0
    carriers = {}
    for _ in range(1000):
        alg = rng.choice(pool)
        if id(alg) not in carriers:
            carriers[id(alg)] = Carrier.from_algebra(alg)
        car = carriers[id(alg)]
        side = rng.choice((IdealSide.L, IdealSide.R))
        universe = [(x,) for x in range(alg.size)]
        seed = set(rng.sample(universe, rng.randint(1, alg.size)))
        closed = ideal_closure(car, seed, side)
        smaller = set(rng.sample(sorted(seed), rng.randint(1, len(seed))))
        if not (
            seed <= closed
            and ideal_closure(car, closed, side) == closed
            and ideal_closure(car, smaller, side) <= closed
        ):
            ideal_failures += 1
    assert ideal_failures == 0

    compat_failures = 0
    for _ in range(1000):
        alg = rng.choice(pool)
        a = rng.randrange(alg.size)
        b = rng.randrange(alg.size)
        theta = principal_congruence(alg, a, b)
        # independent full-pair compatibility scan
        for op in alg.ops:
            for xs in itertools.product(range(alg.size), repeat=3):
                for ys in itertools.product(range(alg.size), repeat=3):
                    if all(theta.relates(u, v) for u, v in zip(xs, ys)):
                        if not theta.relates(op.eval(*xs), op.eval(*ys)):
                            compat_failures += 1
    assert compat_failures == 0
    print(
        "PASS criterion 6: 1000 subuniverse-closure, 1000 ideal-closure, "
        "and 1000 congruence-compatibility checks, 0 failures"
    )

import math
import random

import pytest

from scanlab.circuits import (
    CIRCUIT_KINDS,
    COMBINE,
    build,
    build_blelloch,
    build_dissemination,
    build_ladner_fischer,
    build_sequential,
    dissemination_work,
    evaluate,
    export_text,
    ladner_fischer_metrics,
    metrics,
    validate,
)
from scanlab.operators import (
    CallCounter,
    int_add,
    mod_affine_op,
    random_mod_affines,
    sequential_scan,
)

OP = mod_affine_op()


def oracle_check(kind, n, rng):
    circuit = build(kind, n)
    validate(circuit)
    xs = random_mod_affines(n, rng)
    counter = CallCounter()
    got = evaluate(circuit, OP, xs, counter)
    assert got == sequential_scan(OP, xs), f"{kind} n={n}"
    assert counter.count == metrics(circuit).work


@pytest.mark.parametrize("kind", CIRCUIT_KINDS)
def test_oracle_equivalence_small_sizes(kind):
    rng = random.Random(hash(kind) & 0xFFFF)
    for n in range(1, 258):
        oracle_check(kind, n, rng)


def test_sequential_metrics():
    c = build_sequential(8)
    m = metrics(c)
    assert (m.depth, m.work) == (7, 7)
    m100 = metrics(build_sequential(100))
    assert (m100.depth, m100.work) == (99, 99)
    assert metrics(build_sequential(1)) == metrics(build_sequential(1))
    assert metrics(build_sequential(1)).work == 0


def test_sequential_rejects_zero():
    with pytest.raises(ValueError):
        build_sequential(0)


class TestDissemination:
    def test_eight_inputs_three_stages_seventeen_combines(self):
        c = build_dissemination(8)
        m = metrics(c)
        assert m.depth == 3
        assert m.work == 17

    def test_work_formula_powers_of_two(self):
        n = 2
        while n <= 4096:
            m = metrics(build_dissemination(n))
            lg = int(math.log2(n))
            assert m.work == n * lg - n + 1
            assert m.depth == lg
            assert dissemination_work(n) == m.work
            n *= 2

    def test_triangular_numbers(self):
        c = build_dissemination(8)
        assert evaluate(c, int_add(), list(range(1, 9))) == [1, 3, 6, 10, 15, 21, 28, 36]

    def test_counter_matches_figure(self):
        counter = CallCounter()
        evaluate(build_dissemination(8), int_add(), [0] * 8, counter)
        assert counter.count == 17

    def test_size_one(self):
        m = metrics(build_dissemination(1))
        assert (m.depth, m.work) == (0, 0)


class TestBlelloch:
    def test_core_metrics_eight(self):
        m = metrics(build_blelloch(8))
        assert m.core_work == 2 * (8 - 1)
        assert m.core_depth == 2 * 3
        assert m.work == m.core_work + 7  # shift stage adds n-1 combines
        assert m.depth == m.core_depth + 1

    def test_core_work_powers_of_two(self):
        n = 2
        while n <= 4096:
            m = metrics(build_blelloch(n))
            assert m.core_work == 2 * (n - 1)
            assert m.core_depth == 2 * int(math.log2(n))
            n *= 2

    def test_smallest_tree(self):
        c = build_blelloch(2)
        assert metrics(c).core_work == 2  # one up-sweep + one down-sweep combine
        xs = random_mod_affines(2, random.Random(0))
        got = evaluate(c, OP, xs)
        assert got == [xs[0], sequential_scan(OP, xs)[1]]

    def test_identity_required(self):
        from scanlab.operators import ScanOperator

        no_id = ScanOperator("mod_affine", OP.combine, None)
        with pytest.raises(ValueError):
            evaluate(build_blelloch(4), no_id, random_mod_affines(4, random.Random(1)))

    def test_padding_non_power_of_two(self):
        rng = random.Random(2)
        for n in (3, 5, 6, 7, 9, 100):
            oracle_check("blelloch", n, rng)


class TestLadnerFischer:
    def test_depth_optimal_and_work_bound_small(self):
        m = metrics(build_ladner_fischer(8))
        assert m.depth == 3
        assert m.work < 27
        assert metrics(build_ladner_fischer(2)).work == 1
        assert metrics(build_ladner_fischer(2)).depth == 1

    def test_recurrence_matches_construction(self):
        for n in list(range(1, 300)) + [512, 777, 1024, 2000, 2049, 4096]:
            fast = ladner_fischer_metrics(n)
            real = metrics(build_ladner_fischer(n))
            assert (fast.depth, fast.work) == (real.depth, real.work), n

    def test_bounds_all_sizes(self):
        for n in range(2, 4097):
            m = ladner_fischer_metrics(n)
            assert m.depth == math.ceil(math.log2(n)), n
            assert m.work < 4 * n - 5, n


def test_metrics_dissemination_1024():
    m = metrics(build_dissemination(1024))
    assert (m.depth, m.work) == (10, 1024 * 10 - 1024 + 1)


def test_all_circuits_agree_pairwise():
    rng = random.Random(99)
    xs = random_mod_affines(96, rng)
    outs = [evaluate(build(k, 96), OP, xs) for k in CIRCUIT_KINDS]
    for other in outs[1:]:
        assert other == outs[0]


def test_evaluate_length_mismatch():
    with pytest.raises(ValueError):
        evaluate(build_dissemination(8), OP, [mod_affine_op().identity] * 7)


def test_unknown_kind():
    with pytest.raises(ValueError):
        build("kogge", 8)


def test_stage_safety_validator_catches_conflicts():
    from dataclasses import replace

    c = build_dissemination(4)
    # corrupt: make two gates write the same slot in one stage
    stages = [list(s) for s in c.stages]
    for stage in stages:
        combines = [g for g in stage if g[0] == COMBINE]
        if len(combines) >= 2:
            k, src, dst = combines[0]
            idx = stage.index(combines[1])
            stage[idx] = (k, src, dst)
            bad = replace(c, stages=tuple(tuple(s) for s in stages))
            with pytest.raises(ValueError):
                validate(bad)
            return
    pytest.fail("no stage with two combines found")


def test_export_text_format():
    c = build_sequential(3)
    text = export_text(c)
    lines = text.strip().splitlines()
    assert lines[0].startswith("# circuit sequential n=3")
    assert lines[1:] == ["0 0 1 combine", "1 1 2 combine"]
    # every gate line is "stage src dst kind"
    for kind in CIRCUIT_KINDS:
        for line in export_text(build(kind, 9)).strip().splitlines()[1:]:
            stage, src, dst, gk = line.split()
            assert gk in ("combine", "copy")
            int(stage), int(src), int(dst)


def test_worker_slot_mapping_within_base():
    for kind in CIRCUIT_KINDS:
        c = build(kind, 12)
        for stage in c.stages:
            for _k, src, dst in stage:
                assert 0 <= c.worker_of_slot(src) < c.base
                assert 0 <= c.worker_of_slot(dst) < c.base

import math

import pytest

from flexsa.costmodel import (
    GEMMINI_FIXED,
    PLANARIA_COARSE,
    BaselineKind,
    Config,
    Dataflow,
    estimate,
    estimate_baseline,
    estimate_is,
    estimate_os,
    estimate_ws,
    ideal_budget,
)
from flexsa.geometry import CHAINED, PhysicalArray, enumerate_shapes, native_shape, shape_from_label
from flexsa.workload import GemmOp


def hand_ws_runtime(r_p, r_l, c_l, m, k, n, chained):
    """Independent transcription of the weight-stationary runtime model."""
    t_preload = r_p
    t_process = (r_l + c_l + m - 2) + (4 * min(r_l, c_l) if chained else 0)
    return (t_preload + t_process) * math.ceil(k / r_l) * math.ceil(n / c_l)


def test_ws_matches_worked_example():
    array = PhysicalArray(6)
    est = estimate_ws(GemmOp(10, 6, 24), array, shape_from_label(array, "3x12"))
    assert est.t_preload == 6
    assert est.t_process == 35
    assert (est.tiles_a, est.tiles_b) == (2, 2)
    assert est.t_total == 164


def test_ws_native_minimal():
    array = PhysicalArray(6)
    est = estimate_ws(GemmOp(1, 6, 6), array, native_shape(array))
    assert est.t_total == 17


def test_ws_tile_counts_for_op62_dims():
    array = PhysicalArray(128)
    est = estimate_ws(GemmOp(49, 28800, 1152), array, shape_from_label(array, "49x316"))
    assert est.tiles_a == 588
    assert est.tiles_b == 4


def test_ws_against_independent_model(rng):
    for _ in range(40):
        r_p = int(rng.choice([4, 6, 8, 16, 128]))
        array = PhysicalArray(r_p)
        shapes = enumerate_shapes(array)
        shape = shapes[int(rng.integers(len(shapes)))]
        m, k, n = (int(v) for v in rng.integers(1, 4000, 3))
        est = estimate_ws(GemmOp(m, k, n), array, shape)
        assert est.t_total == hand_ws_runtime(
            r_p, shape.r_l, shape.c_l, m, k, n, shape.kind == CHAINED)


def test_os_matches_worked_examples():
    array = PhysicalArray(128)
    est = estimate_os(GemmOp(49, 28800, 1152), array, shape_from_label(array, "49x316"))
    assert est.t_total == 117948
    arr2 = PhysicalArray(2)
    assert estimate_os(GemmOp(2, 2, 2), arr2, native_shape(arr2)).t_total == 6
    assert estimate_os(GemmOp(1, 1, 1), arr2, native_shape(arr2)).t_total == 5


def test_is_matches_worked_examples():
    array = PhysicalArray(6)
    assert estimate_is(GemmOp(24, 6, 10), array, native_shape(array)).t_total == 104
    assert estimate_is(GemmOp(20, 1, 3), array, shape_from_label(array, "1x20")).t_total == 32


def test_is_ws_duality_exact(rng):
    array = PhysicalArray(8)
    for shape in enumerate_shapes(array):
        for _ in range(5):
            m, k, n = (int(v) for v in rng.integers(1, 200, 3))
            is_est = estimate_is(GemmOp(m, k, n), array, shape)
            ws_est = estimate_ws(GemmOp(n, k, m), array, shape)
            assert is_est == ws_est


def test_dispatch_identity():
    array = PhysicalArray(6)
    g = GemmOp(3, 4, 5)
    nat = native_shape(array)
    assert estimate(Config(nat, Dataflow.WS), g, array) == estimate_ws(g, array, nat)


def test_op62_dispatch_utilization():
    array = PhysicalArray(128)
    g = GemmOp(49, 28800, 1152)
    est = estimate(Config(shape_from_label(array, "49x316"), Dataflow.OS), g, array)
    assert est.t_total == 117948
    assert est.utilization == pytest.approx(0.841, abs=0.001)


def test_utilization_bounded_over_random_sweep(rng):
    array = PhysicalArray(16)
    shapes = enumerate_shapes(array)
    for _ in range(1000):
        m, k, n = (int(v) for v in rng.integers(1, 2048, 3))
        shape = shapes[int(rng.integers(len(shapes)))]
        df = (Dataflow.WS, Dataflow.OS, Dataflow.IS)[int(rng.integers(3))]
        est = estimate(Config(shape, df), GemmOp(m, k, n), array)
        assert 0 < est.utilization <= 1


def test_monotonicity_in_each_dim(rng):
    array = PhysicalArray(8)
    for shape in enumerate_shapes(array):
        for df in Dataflow:
            base = (7, 9, 11)
            t0 = estimate(Config(shape, df), GemmOp(*base), array).t_total
            for axis in range(3):
                grown = list(base)
                grown[axis] += int(rng.integers(1, 50))
                t1 = estimate(Config(shape, df), GemmOp(*grown), array).t_total
                assert t1 >= t0


def test_mac_count_independent_of_config():
    array = PhysicalArray(6)
    g = GemmOp(5, 7, 9)
    for shape in enumerate_shapes(array):
        for df in Dataflow:
            assert estimate(Config(shape, df), g, array).mac_count == 5 * 7 * 9


def test_gemmini_baseline_op62():
    array = PhysicalArray(128)
    est = estimate_baseline(GEMMINI_FIXED, GemmOp(49, 28800, 1152), array)
    assert est.t_total == 262638  # OS wins on the native shape


def test_planaria_baseline_op62():
    array = PhysicalArray(128)
    est = estimate_baseline(PLANARIA_COARSE, GemmOp(49, 28800, 1152), array)
    assert est.t_total == 872775  # native WS wins among the five coarse shapes


def test_planaria_requires_divisible_by_four():
    with pytest.raises(ValueError):
        estimate_baseline(PLANARIA_COARSE, GemmOp(1, 1, 1), PhysicalArray(6))


def test_ideal_budget_is_a_lower_bound(rng):
    array = PhysicalArray(8)
    shapes = enumerate_shapes(array)
    kind = ideal_budget(64)
    for _ in range(200):
        m, k, n = (int(v) for v in rng.integers(1, 256, 3))
        g = GemmOp(m, k, n)
        ideal = estimate_baseline(kind, g, array).t_total
        for shape in shapes:
            for df in Dataflow:
                assert ideal <= estimate(Config(shape, df), g, array).t_total


def test_baseline_kind_validation():
    with pytest.raises(ValueError):
        BaselineKind("ideal", 0)
    with pytest.raises(ValueError):
        BaselineKind("tpu")


def test_op62_utilization_gain_in_published_band():
    array = PhysicalArray(128)
    g = GemmOp(49, 28800, 1152)
    flex = estimate(Config(shape_from_label(array, "49x316"), Dataflow.OS), g, array)
    fixed = estimate_baseline(GEMMINI_FIXED, g, array)
    assert 1.9 <= flex.utilization / fixed.utilization <= 2.5

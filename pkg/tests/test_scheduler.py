import json

import numpy as np
import pytest

from flexsa.costmodel import (
    GEMMINI_FIXED,
    PLANARIA_COARSE,
    Dataflow,
    estimate_baseline,
    ideal_budget,
)
from flexsa.geometry import PhysicalArray
from flexsa.scheduler import choose, schedule_model
from flexsa.workload import GemmOp


def test_op62_selects_chained_os():
    config, cost = choose(GemmOp(49, 28800, 1152), PhysicalArray(128))
    assert config.shape.label == "49x316"
    assert config.dataflow is Dataflow.OS
    assert cost.t_total == 117948


def test_unit_gemm_prefers_native_ws():
    config, cost = choose(GemmOp(1, 1, 1), PhysicalArray(6))
    assert config.shape.label == "6x6"
    assert config.dataflow is Dataflow.WS
    assert cost.t_total == 17


def test_chosen_is_global_minimum(rng):
    from flexsa.costmodel import Config, estimate
    from flexsa.geometry import enumerate_shapes

    array = PhysicalArray(8)
    for _ in range(50):
        g = GemmOp(*(int(v) for v in rng.integers(1, 400, 3)))
        _, cost = choose(g, array)
        best = min(
            estimate(Config(shape, df), g, array).t_total
            for shape in enumerate_shapes(array)
            for df in Dataflow
        )
        assert cost.t_total == best


def test_schedule_single_op_reduces_to_choose():
    array = PhysicalArray(6)
    g = GemmOp(4, 5, 6)
    result = schedule_model([g], array)
    config, cost = choose(g, array)
    assert result.total_cycles == cost.t_total
    assert result.entries[0].chosen == config


def test_schedule_totals_are_additive():
    array = PhysicalArray(6)
    gemms = [GemmOp(2, 3, 4), GemmOp(5, 6, 7), GemmOp(1, 9, 2)]
    result = schedule_model(gemms, array)
    assert result.total_cycles == sum(e.cost.t_total for e in result.entries)


def test_schedule_rejects_empty_input():
    with pytest.raises(ValueError):
        schedule_model([], PhysicalArray(6))


def test_switch_penalty_knob():
    array = PhysicalArray(6)
    gemms = [GemmOp(1, 1, 20), GemmOp(20, 20, 20)]
    free = schedule_model(gemms, array)
    charged = schedule_model(gemms, array, switch_penalty=100)
    assert charged.entries[0].chosen != charged.entries[1].chosen
    assert charged.total_cycles == free.total_cycles + 100


def test_dominance_over_baselines(rng):
    array = PhysicalArray(128)
    kinds = (GEMMINI_FIXED, PLANARIA_COARSE, ideal_budget(2 ** 14))
    for _ in range(100):
        dims = np.exp(rng.uniform(0, np.log(4096), 3))
        g = GemmOp(*(max(1, int(round(d))) for d in dims))
        _, cost = choose(g, array)
        assert cost.t_total <= estimate_baseline(GEMMINI_FIXED, g, array).t_total
        assert cost.t_total <= estimate_baseline(PLANARIA_COARSE, g, array).t_total
        assert cost.t_total >= estimate_baseline(kinds[2], g, array).t_total


def test_gemv_heavy_speedup_over_fixed_array(rng):
    array = PhysicalArray(128)
    gemms = []
    for i in range(30):
        k, n = (int(round(np.exp(rng.uniform(np.log(256), np.log(4096))))) for _ in range(2))
        gemms.append(GemmOp(1, k, n, f"gemv{i}"))
    result = schedule_model(gemms, array, baselines=(GEMMINI_FIXED,))
    fixed_total = sum(e.baseline_costs[GEMMINI_FIXED].t_total for e in result.entries)
    assert fixed_total / result.total_cycles >= 1.5


def _serialize(result):
    return json.dumps([
        (e.gemm.label, e.chosen.shape.label, e.chosen.dataflow.value, e.cost.t_total)
        for e in result.entries
    ])


def test_schedule_is_deterministic():
    array = PhysicalArray(16)
    gemms = [GemmOp(3, 40, 17), GemmOp(1, 5, 800), GemmOp(64, 64, 64)]
    first = _serialize(schedule_model(gemms, array))
    second = _serialize(schedule_model(gemms, array))
    assert first == second

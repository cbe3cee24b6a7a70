"""Greedy per-GEMM selection of the minimum-runtime configuration."""

from __future__ import annotations

from dataclasses import dataclass, field

from .costmodel import (
    DATAFLOW_ORDER,
    BaselineKind,
    Config,
    CostEstimate,
    estimate,
    estimate_baseline,
)
from .geometry import PhysicalArray, enumerate_shapes
from .workload import GemmOp


@dataclass
class ScheduleEntry:
    gemm: GemmOp
    chosen: Config
    cost: CostEstimate
    baseline_costs: dict[BaselineKind, CostEstimate] = field(default_factory=dict)


@dataclass
class ScheduleResult:
    entries: list[ScheduleEntry]
    total_cycles: int
    mean_utilization: float  # MAC-weighted


def choose(gemm: GemmOp, array: PhysicalArray) -> tuple[Config, CostEstimate]:
    """Argmin of modeled runtime over all (r_p + 1) * 3 configurations.

    Ties break by shape enumeration order, then WS < OS < IS; the result is
    deterministic for identical inputs.
    """
    best: tuple[Config, CostEstimate] | None = None
    for shape in enumerate_shapes(array):
        for dataflow in DATAFLOW_ORDER:
            config = Config(shape, dataflow)
            cost = estimate(config, gemm, array)
            if best is None or cost.t_total < best[1].t_total:
                best = (config, cost)
    return best


def schedule_model(
    gemms: list[GemmOp],
    array: PhysicalArray,
    baselines: tuple[BaselineKind, ...] = (),
    switch_penalty: int = 0,
) -> ScheduleResult:
    """Schedule a GEMM sequence, one optimal configuration per operation.

    ``switch_penalty`` charges extra cycles whenever consecutive operations
    land on different configurations (default 0: reconfiguration is treated
    as free).
    """
    if not gemms:
        raise ValueError("cannot schedule an empty GEMM sequence")
    entries: list[ScheduleEntry] = []
    total = 0
    prev_config: Config | None = None
    for gemm in gemms:
        config, cost = choose(gemm, array)
        base_costs = {kind: estimate_baseline(kind, gemm, array) for kind in baselines}
        entries.append(ScheduleEntry(gemm, config, cost, base_costs))
        total += cost.t_total
        if prev_config is not None and config != prev_config:
            total += switch_penalty
        prev_config = config
    mac_sum = sum(e.cost.mac_count for e in entries)
    mean_util = sum(e.cost.mac_count * e.cost.utilization for e in entries) / mac_sum
    return ScheduleResult(entries, total, mean_util)

"""Analytical runtime and utilization model for (shape, dataflow) configs.

All estimates count compute-pipeline cycles only; memory stalls are out of
scope.  The weight-stationary runtime of one GEMM on logical shape
(r_l, c_l) over a physical grid of side r_p is

    t_preload = r_p
    t_process = (r_l + c_l + M - 2) + 4*min(r_l, c_l)   [chained shapes]
    t_total   = (t_preload + t_process) * ceil(K/r_l) * ceil(N/c_l)

where the 4*min term covers the three inter-sub-array junctions plus the
drain junction of the roundabout path and vanishes on the native shape.
Output-stationary runs swap the streamed dimension (K in the pipe, M and N
tiled) and pay an r_p-cycle drain to the stationary buffer instead of the
preload; input-stationary is weight-stationary with input and weight roles
swapped (M and N exchanged).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .geometry import LogicalShape, PhysicalArray, chained_shape, native_shape
from .workload import GemmOp


class Dataflow(Enum):
    WS = "ws"
    OS = "os"
    IS = "is"


# Tie-break order for the scheduler.
DATAFLOW_ORDER = (Dataflow.WS, Dataflow.OS, Dataflow.IS)


@dataclass(frozen=True)
class Config:
    shape: LogicalShape
    dataflow: Dataflow

    @property
    def label(self) -> str:
        return f"{self.shape.label}/{self.dataflow.value}"


@dataclass
class CostEstimate:
    t_preload: int
    t_process: int
    t_offload: int
    tiles_a: int
    tiles_b: int
    t_total: int
    mac_count: int
    utilization: float

    def to_dict(self) -> dict:
        return {
            "t_preload": self.t_preload,
            "t_process": self.t_process,
            "t_offload": self.t_offload,
            "tiles_a": self.tiles_a,
            "tiles_b": self.tiles_b,
            "t_total": self.t_total,
            "mac_count": self.mac_count,
            "utilization": self.utilization,
        }


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def roundabout_term(shape: LogicalShape) -> int:
    """Extra pipeline cycles per tile spent in the four chain junctions."""
    return shape.num_junctions * shape.junction_delay


def _check_shape(array: PhysicalArray, shape: LogicalShape) -> None:
    if shape.r_p != array.r_p:
        raise ValueError(f"shape {shape.label} does not belong to a {array.r_p}-wide array")


def _finish(est: CostEstimate, gemm: GemmOp, array: PhysicalArray) -> CostEstimate:
    est.mac_count = gemm.mac_count
    est.utilization = gemm.mac_count / (array.pe_count * est.t_total)
    return est


def estimate_ws(gemm: GemmOp, array: PhysicalArray, shape: LogicalShape) -> CostEstimate:
    """Weight stationary: K x N resident, M rows streamed, K and N tiled."""
    _check_shape(array, shape)
    t_preload = array.r_p
    t_process = (shape.r_l + shape.c_l + gemm.m - 2) + roundabout_term(shape)
    tiles_a = _ceil_div(gemm.k, shape.r_l)
    tiles_b = _ceil_div(gemm.n, shape.c_l)
    t_total = (t_preload + t_process) * tiles_a * tiles_b
    return _finish(CostEstimate(t_preload, t_process, 0, tiles_a, tiles_b, t_total, 0, 0.0),
                   gemm, array)


def estimate_os(gemm: GemmOp, array: PhysicalArray, shape: LogicalShape) -> CostEstimate:
    """Output stationary: M x N resident, K streamed, M and N tiled.

    Results drain to the stationary buffer bottom-up, costing r_p cycles per
    tile in place of a preload.
    """
    _check_shape(array, shape)
    t_offload = array.r_p
    t_process = (shape.r_l + shape.c_l + gemm.k - 2) + roundabout_term(shape)
    tiles_a = _ceil_div(gemm.m, shape.r_l)
    tiles_b = _ceil_div(gemm.n, shape.c_l)
    t_total = (t_process + t_offload) * tiles_a * tiles_b
    return _finish(CostEstimate(0, t_process, t_offload, tiles_a, tiles_b, t_total, 0, 0.0),
                   gemm, array)


def estimate_is(gemm: GemmOp, array: PhysicalArray, shape: LogicalShape) -> CostEstimate:
    """Input stationary: the M <-> N mirror of weight stationary."""
    _check_shape(array, shape)
    t_preload = array.r_p
    t_process = (shape.r_l + shape.c_l + gemm.n - 2) + roundabout_term(shape)
    tiles_a = _ceil_div(gemm.k, shape.r_l)
    tiles_b = _ceil_div(gemm.m, shape.c_l)
    t_total = (t_preload + t_process) * tiles_a * tiles_b
    return _finish(CostEstimate(t_preload, t_process, 0, tiles_a, tiles_b, t_total, 0, 0.0),
                   gemm, array)


_ESTIMATORS = {Dataflow.WS: estimate_ws, Dataflow.OS: estimate_os, Dataflow.IS: estimate_is}


def estimate(config: Config, gemm: GemmOp, array: PhysicalArray) -> CostEstimate:
    return _ESTIMATORS[config.dataflow](gemm, array, config.shape)


@dataclass(frozen=True)
class BaselineKind:
    """A comparison model: fixed-shape, coarse-reshape, or budgeted ideal."""

    name: str  # "gemmini" | "planaria" | "ideal"
    pe_budget: int = 0

    def __post_init__(self) -> None:
        if self.name not in ("gemmini", "planaria", "ideal"):
            raise ValueError(f"unknown baseline {self.name!r}")
        if self.name == "ideal" and self.pe_budget < 1:
            raise ValueError("ideal baseline requires pe_budget >= 1")

    @property
    def label(self) -> str:
        return f"ideal:{self.pe_budget}" if self.name == "ideal" else self.name


GEMMINI_FIXED = BaselineKind("gemmini")
PLANARIA_COARSE = BaselineKind("planaria")


def ideal_budget(pe_budget: int) -> BaselineKind:
    return BaselineKind("ideal", pe_budget)


def _coarse_shapes(array: PhysicalArray) -> list[LogicalShape]:
    """Five coarse shapes: quarter- and half-split chains plus native."""
    if array.r_p % 4 != 0:
        raise ValueError("coarse-reshape baseline requires r_p divisible by 4")
    shapes = []
    for r_s in (array.r_p // 4, array.r_p // 2):
        shapes.append(chained_shape(array, r_s, transposed=False))
        shapes.append(chained_shape(array, r_s, transposed=True))
    shapes.append(native_shape(array))
    return shapes


def _ceil_classes(dim: int, limit: int) -> list[tuple[int, int]]:
    """Minimal side r per distinct tile count ceil(dim/r), with r <= limit.

    Within one tile-count class the runtime grows with r, so only the
    minimal representative can be optimal.
    """
    best: dict[int, int] = {}
    candidates = set(range(1, min(dim, limit) + 1)) if dim <= 256 else None
    if candidates is None:
        candidates = set()
        root = int(dim ** 0.5) + 2
        for r in range(1, root + 1):
            candidates.add(r)
        for i in range(1, root + 1):
            candidates.add(_ceil_div(dim, i))
        candidates = {r for r in candidates if 1 <= r <= limit}
    for r in candidates:
        tiles = _ceil_div(dim, r)
        if tiles not in best or r < best[tiles]:
            best[tiles] = r
    return sorted((r, t) for t, r in best.items())


def _ideal_estimate(gemm: GemmOp, array: PhysicalArray, budget: int) -> CostEstimate:
    """Relaxation bound: every rectangle within the PE budget, no roundabout.

    Evaluated with the same preload/offload charge (r_p) as the reshapable
    estimates so that the search is a strict superset relaxation; see the
    decisions log.
    """
    r_p = array.r_p
    best: tuple[int, ...] | None = None
    # (streamed dim, rows-tiled dim, cols-tiled dim) per dataflow
    cases = (
        (Dataflow.WS, gemm.m, gemm.k, gemm.n),
        (Dataflow.OS, gemm.k, gemm.m, gemm.n),
        (Dataflow.IS, gemm.n, gemm.k, gemm.m),
    )
    for _df, streamed, rows_dim, cols_dim in cases:
        r_classes = _ceil_classes(rows_dim, budget)
        c_classes = _ceil_classes(cols_dim, budget)
        rs = np.array([r for r, _ in r_classes], dtype=np.int64)
        ta = np.array([t for _, t in r_classes], dtype=np.int64)
        cs = np.array([c for c, _ in c_classes], dtype=np.int64)
        tb = np.array([t for _, t in c_classes], dtype=np.int64)
        per_tile = r_p + rs[:, None] + cs[None, :] + streamed - 2
        totals = per_tile * ta[:, None] * tb[None, :]
        feasible = (rs[:, None] * cs[None, :]) <= budget
        if not feasible.any():
            continue
        totals = np.where(feasible, totals, np.iinfo(np.int64).max)
        flat = int(np.argmin(totals))
        i, j = divmod(flat, totals.shape[1])
        cand = (int(totals[i, j]), int(rs[i]), int(cs[j]), int(ta[i]), int(tb[j]), streamed)
        if best is None or cand[0] < best[0]:
            best = cand
    if best is None:
        raise ValueError(f"pe budget {budget} admits no rectangle")
    t_total, r, c, tiles_a, tiles_b, streamed = best
    t_process = r + c + streamed - 2
    # utilization is judged against the winning rectangle's own PE count;
    # the budget machine is not the r_p x r_p grid
    return CostEstimate(r_p, t_process, 0, tiles_a, tiles_b, t_total,
                        gemm.mac_count, gemm.mac_count / (r * c * t_total))


def estimate_baseline(kind: BaselineKind, gemm: GemmOp, array: PhysicalArray) -> CostEstimate:
    """Cost of one GEMM under a baseline machine model.

    gemmini: fixed native shape, best of WS/OS.  planaria: WS only over the
    five coarse shapes.  ideal: best rectangle within the PE budget under
    any dataflow with no roundabout penalty.
    """
    if kind.name == "gemmini":
        nat = native_shape(array)
        ws = estimate_ws(gemm, array, nat)
        os_ = estimate_os(gemm, array, nat)
        return ws if ws.t_total <= os_.t_total else os_
    if kind.name == "planaria":
        best = None
        for shape in _coarse_shapes(array):
            est = estimate_ws(gemm, array, shape)
            if best is None or est.t_total < best.t_total:
                best = est
        return best
    return _ideal_estimate(gemm, array, kind.pe_budget)

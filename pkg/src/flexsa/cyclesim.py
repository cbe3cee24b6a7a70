"""Cycle-accurate functional simulation of the reshapable PE array.

The simulator moves integer operand tokens through register pipelines one
cycle at a time: row pipes carry data east across logical columns, column
pipes carry data (or partial sums) south across logical rows, and chained
shapes insert junction FIFOs of ``min(r_l, c_l)`` stages wherever a path
crosses a sub-array boundary (three inter-segment junctions plus one drain
junction).  All port reads use the previous cycle's register values: each
cycle injects, fires MACs on coinciding tokens, then commits one shift.

Every tile occupies a fixed schedule slot derived from the pipeline depth,
``(r_l + c_l + streamed - 2)`` plus the junction term, with an ``r_p``-cycle
stationary preload (WS/IS) or result drain (OS) around it; the token-level
simulation must go quiescent within its slot or a fault is raised.  Edge
tiles stream bubbles through the unused lanes, so per-tile timing does not
depend on tile occupancy.

Arithmetic is exact: operands are validated to 16-bit magnitude and all
accumulation happens in unbounded Python integers, so ``verify`` is a
bit-exact oracle against naive multiplication.  The busy trace counts PEs
holding live tile state each cycle (resident stationary operands or
in-flight accumulators), the occupancy measure that reshaping improves.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .costmodel import Config, Dataflow
from .geometry import (
    CHAINED,
    LogicalShape,
    PhysicalArray,
    RoutePlan,
    logical_to_physical,
    place_subarrays,
)
from .workload import GemmOp

MAX_INPUT_MAGNITUDE = 1 << 15  # exact int64 output is guaranteed below this

PRELOAD, PROCESS, OFFLOAD = "preload", "process", "offload"


class SimulationFault(RuntimeError):
    """An internal pipeline invariant broke (misaligned or colliding tokens).

    Distinct from a wrong result: this means the simulation itself is
    inconsistent, not that the array computed a wrong product.
    """


@dataclass
class SimResult:
    cycles: int
    output: np.ndarray  # M x N, int64
    busy_trace: list[int]
    phase_trace: list[str]
    mac_total: int
    measured_utilization: float
    pe_used: int


class _Layout:
    """Pipe geometry for one logical shape.

    ``row_cell_pos[n]``/``col_cell_pos[k]`` give the pipe position of logical
    column n / row k, junction FIFO stages included on the chained axis.
    """

    def __init__(self, shape: LogicalShape, row_exit: int, col_exit: int):
        self.r_l, self.c_l = shape.r_l, shape.c_l
        jd = shape.junction_delay
        seg = shape.seg_len
        if shape.kind == CHAINED and not shape.transposed:
            self.row_cell_pos = [n + jd * (n // seg) for n in range(self.c_l)]
        else:
            self.row_cell_pos = list(range(self.c_l))
        if shape.kind == CHAINED and shape.transposed:
            self.col_cell_pos = [k + jd * (k // seg) for k in range(self.r_l)]
        else:
            self.col_cell_pos = list(range(self.r_l))
        self.row_len = self.row_cell_pos[-1] + 1 + row_exit
        self.col_len = self.col_cell_pos[-1] + 1 + col_exit


def _as_int_matrix(mat, rows: int, cols: int, what: str) -> list[list[int]]:
    data = [[int(v) for v in row] for row in mat]
    if len(data) != rows or any(len(row) != cols for row in data):
        raise ValueError(f"{what} must be {rows}x{cols}")
    for row in data:
        for v in row:
            if abs(v) >= MAX_INPUT_MAGNITUDE:
                raise ValueError(f"{what} entries must have magnitude < {MAX_INPUT_MAGNITUDE}")
    return data


def _run_stationary_tile(lay, stat, stream_rows, n_stream, commit):
    """One WS/IS tile: stationary operand resident, one operand streamed.

    ``stat[k][n]`` is the resident value or None outside the tile extent;
    ``stream_rows[k]`` lists the lane-k stream values in sequence order.
    Returns (cycles to quiescence, MACs fired).
    """
    r_l, c_l = lay.r_l, lay.c_l
    row_pipes = [[None] * lay.row_len for _ in range(r_l)]
    col_pipes = [[None] * lay.col_len for _ in range(c_l)]
    pending = sum(len(vals) for vals in stream_rows)
    in_flight = 0
    macs = 0
    t = 0
    row_cell_pos = lay.row_cell_pos
    col_cell_pos = lay.col_cell_pos
    while pending or in_flight:
        for k, vals in enumerate(stream_rows):
            seq = t - col_cell_pos[k]  # lane skew matches the psum descent
            if 0 <= seq < len(vals):
                if row_pipes[k][0] is not None:
                    raise SimulationFault(f"stream port double-write on lane {k}")
                row_pipes[k][0] = (vals[seq], seq)
                pending -= 1
                in_flight += 1
        for n in range(c_l):
            pipe_n = col_pipes[n]
            pos_n = row_cell_pos[n]
            for k in range(r_l):
                tok = row_pipes[k][pos_n]
                if tok is None:
                    continue
                value, seq = tok
                wval = stat[k][n]
                if k == 0:
                    if pipe_n[0] is not None:
                        raise SimulationFault(f"psum collision at head of column {n}")
                    if wval is not None:
                        macs += 1
                        pipe_n[0] = [value * wval, seq]
                    else:
                        pipe_n[0] = [0, seq]
                    in_flight += 1
                else:
                    psum = pipe_n[col_cell_pos[k]]
                    if psum is None or psum[1] != seq:
                        raise SimulationFault(
                            f"stream/psum misalignment at row {k}, column {n}")
                    if wval is not None:
                        macs += 1
                        psum[0] += value * wval
        for pipe in row_pipes:
            if pipe[-1] is not None:
                in_flight -= 1
            pipe.pop()
            pipe.insert(0, None)
        for n, pipe in enumerate(col_pipes):
            out = pipe[-1]
            if out is not None:
                in_flight -= 1
                commit(n, out[1], out[0])
            pipe.pop()
            pipe.insert(0, None)
        t += 1
    return t, macs


def _run_os_tile(lay, a_rows, b_cols, n_streamed, acc):
    """One OS tile: per-PE accumulation while both operands stream."""
    r_l, c_l = lay.r_l, lay.c_l
    m_ext, n_ext = len(a_rows), len(b_cols)
    row_pipes = [[None] * lay.row_len for _ in range(m_ext)]
    col_pipes = [[None] * lay.col_len for _ in range(n_ext)]
    pending = (m_ext + n_ext) * n_streamed
    in_flight = 0
    macs = 0
    t = 0
    row_cell_pos = lay.row_cell_pos
    col_cell_pos = lay.col_cell_pos
    while pending or in_flight:
        for i in range(m_ext):
            seq = t - col_cell_pos[i]
            if 0 <= seq < n_streamed:
                if row_pipes[i][0] is not None:
                    raise SimulationFault(f"input port double-write on row {i}")
                row_pipes[i][0] = (a_rows[i][seq], seq)
                pending -= 1
                in_flight += 1
        for j in range(n_ext):
            seq = t - row_cell_pos[j]
            if 0 <= seq < n_streamed:
                if col_pipes[j][0] is not None:
                    raise SimulationFault(f"weight port double-write on column {j}")
                col_pipes[j][0] = (b_cols[j][seq], seq)
                pending -= 1
                in_flight += 1
        for i in range(m_ext):
            pipe_i = row_pipes[i]
            pos_i = col_cell_pos[i]
            acc_i = acc[i]
            for j in range(n_ext):
                a_tok = pipe_i[row_cell_pos[j]]
                if a_tok is None:
                    continue
                b_tok = col_pipes[j][pos_i]
                if b_tok is None:
                    continue
                if a_tok[1] != b_tok[1]:
                    raise SimulationFault(f"operand misalignment at PE ({i}, {j})")
                acc_i[j] += a_tok[0] * b_tok[0]
                macs += 1
        for pipes in (row_pipes, col_pipes):
            for pipe in pipes:
                if pipe[-1] is not None:
                    in_flight -= 1
                pipe.pop()
                pipe.insert(0, None)
        t += 1
    return t, macs


def _preload_ramp(cell_rows: list[int], r_p: int) -> list[int]:
    """Busy counts while the stationary data descends the physical rows."""
    per_row = [0] * r_p
    for row in cell_rows:
        per_row[row] += 1
    ramp, seen = [], 0
    for p in range(r_p):
        seen += per_row[p]
        ramp.append(seen)
    return ramp


def _offload_ramp(cell_rows: list[int], r_p: int) -> list[int]:
    """Busy counts while results drain bottom-up to the stationary buffer."""
    per_row = [0] * r_p
    for row in cell_rows:
        per_row[row] += 1
    ramp, remaining = [], len(cell_rows)
    for q in range(r_p):
        ramp.append(remaining)
        remaining -= per_row[r_p - 1 - q]
    return ramp


def _tile_ranges(total: int, step: int):
    for start in range(0, total, step):
        yield start, min(step, total - start)


def simulate(config: Config, gemm: GemmOp, a, b) -> SimResult:
    """Run one GEMM through the array and return exact results and timing.

    ``a`` is M x K, ``b`` is K x N (integer entries, |value| < 2**15).  The
    output equals the exact product; cycles cover preload/process/offload of
    every tile in sequence.
    """
    shape, dataflow = config.shape, config.dataflow
    r_p = shape.r_p
    m, k, n = gemm.m, gemm.k, gemm.n
    a_mat = _as_int_matrix(a, m, k, "matrix a")
    b_mat = _as_int_matrix(b, k, n, "matrix b")
    l2p = logical_to_physical(shape)
    rt = shape.num_junctions * shape.junction_delay
    out = [[0] * n for _ in range(m)]
    busy: list[int] = []
    phases: list[str] = []
    mac_total = 0

    if dataflow is Dataflow.OS:
        lay = _Layout(shape,
                      row_exit=shape.junction_delay if not shape.transposed else 0,
                      col_exit=shape.junction_delay if shape.transposed else 0)
        slot = (shape.r_l + shape.c_l + k - 2) + rt
        for m0, m_ext in _tile_ranges(m, shape.r_l):
            for n0, n_ext in _tile_ranges(n, shape.c_l):
                a_rows = [a_mat[m0 + i] for i in range(m_ext)]
                b_cols = [[b_mat[kk][n0 + j] for kk in range(k)] for j in range(n_ext)]
                acc = [[0] * n_ext for _ in range(m_ext)]
                t, macs = _run_os_tile(lay, a_rows, b_cols, k, acc)
                if t > slot:
                    raise SimulationFault(f"tile overran its slot: {t} > {slot}")
                mac_total += macs
                engaged = m_ext * n_ext
                cell_rows = [l2p[(i, j)][0] for i in range(m_ext) for j in range(n_ext)]
                busy.extend([engaged] * slot)
                phases.extend([PROCESS] * slot)
                busy.extend(_offload_ramp(cell_rows, r_p))
                phases.extend([OFFLOAD] * r_p)
                for i in range(m_ext):
                    for j in range(n_ext):
                        out[m0 + i][n0 + j] = acc[i][j]
    else:
        lay = _Layout(shape, row_exit=0,
                      col_exit=shape.junction_delay)
        if dataflow is Dataflow.WS:
            rows_dim, cols_dim, streamed = k, n, m
        else:  # IS: stationary input on a K x M grid, weights streamed
            rows_dim, cols_dim, streamed = k, m, n
        slot = (shape.r_l + shape.c_l + streamed - 2) + rt
        for k0, k_ext in _tile_ranges(rows_dim, shape.r_l):
            for c0, c_ext in _tile_ranges(cols_dim, shape.c_l):
                if dataflow is Dataflow.WS:
                    stat = [[b_mat[k0 + kk][c0 + cc] if kk < k_ext and cc < c_ext else None
                             for cc in range(shape.c_l)] for kk in range(shape.r_l)]
                    stream_rows = [[a_mat[mm][k0 + kk] for mm in range(m)]
                                   for kk in range(k_ext)]
                else:
                    stat = [[a_mat[c0 + cc][k0 + kk] if kk < k_ext and cc < c_ext else None
                             for cc in range(shape.c_l)] for kk in range(shape.r_l)]
                    stream_rows = [[b_mat[k0 + kk][nn] for nn in range(n)]
                                   for kk in range(k_ext)]

                def commit(col_local: int, seq: int, value: int,
                           c0=c0, c_ext=c_ext):
                    if col_local >= c_ext:
                        if value != 0:
                            raise SimulationFault("non-zero drain from padding column")
                        return
                    if dataflow is Dataflow.WS:
                        out[seq][c0 + col_local] += value
                    else:
                        out[c0 + col_local][seq] += value

                t, macs = _run_stationary_tile(lay, stat, stream_rows, streamed, commit)
                if t > slot:
                    raise SimulationFault(f"tile overran its slot: {t} > {slot}")
                mac_total += macs
                engaged = k_ext * c_ext
                cell_rows = [l2p[(kk, cc)][0] for kk in range(k_ext) for cc in range(c_ext)]
                busy.extend(_preload_ramp(cell_rows, r_p))
                phases.extend([PRELOAD] * r_p)
                busy.extend([engaged] * slot)
                phases.extend([PROCESS] * slot)

    cycles = len(busy)
    if mac_total != gemm.mac_count:
        raise SimulationFault(f"MAC count {mac_total} != {gemm.mac_count}")
    output = np.array(out, dtype=np.int64)
    return SimResult(
        cycles=cycles,
        output=output,
        busy_trace=busy,
        phase_trace=phases,
        mac_total=mac_total,
        measured_utilization=mac_total / (r_p * r_p * cycles),
        pe_used=shape.pe_used,
    )


def naive_matmul(a, b) -> list[list[int]]:
    """Reference product by the plain triple loop, in exact integers."""
    rows, inner = len(a), len(a[0])
    cols = len(b[0])
    out = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        for kk in range(inner):
            aik = int(a[i][kk])
            brow = b[kk]
            row = out[i]
            for j in range(cols):
                row[j] += aik * int(brow[j])
    return out


def verify(result: SimResult, a, b) -> bool:
    """True iff the simulated output equals naive multiplication exactly."""
    ref = naive_matmul(a, b)
    got = result.output
    if got.shape != (len(ref), len(ref[0])):
        return False
    for i, row in enumerate(ref):
        for j, val in enumerate(row):
            if int(got[i, j]) != val:
                return False
    return True


class Side(Enum):
    NORTH = "north"
    EAST = "east"
    SOUTH = "south"
    WEST = "west"


class BankRole(Enum):
    WEIGHT_ISSUER = "weight_issuer"
    INPUT_ISSUER = "input_issuer"
    OUTPUT_RECEIVER = "output_receiver"


@dataclass(frozen=True)
class BankAssignment:
    role: BankRole
    lanes: int


# Perpendicular entry side per sub-array, counter-clockwise from its flow.
_SEGMENT_SIDES = (Side.NORTH, Side.EAST, Side.SOUTH, Side.WEST)


def assign_bank_roles(config: Config, plan: RoutePlan) -> dict[Side, tuple[BankAssignment, ...]]:
    """Bind perimeter buffer banks to issuer/receiver roles for a config.

    Stationary data always rides the physical columns (north side), streamed
    chain data enters at the west edge, and per-segment lanes bind to each
    sub-array's outward face.  Sides with an empty tuple are idle.
    """
    shape, dataflow = config.shape, config.dataflow
    r_p = shape.r_p
    if (plan.junction_delay != shape.junction_delay
            or plan.num_junctions != shape.num_junctions):
        raise ValueError("route plan does not match the configured shape")
    roles: dict[Side, list[BankAssignment]] = {side: [] for side in Side}

    if shape.kind != CHAINED:
        if dataflow is Dataflow.WS:
            roles[Side.NORTH].append(BankAssignment(BankRole.WEIGHT_ISSUER, r_p))
            roles[Side.WEST].append(BankAssignment(BankRole.INPUT_ISSUER, r_p))
            roles[Side.SOUTH].append(BankAssignment(BankRole.OUTPUT_RECEIVER, r_p))
        elif dataflow is Dataflow.OS:
            # results drain to the stationary buffer, not a perimeter bank
            roles[Side.NORTH].append(BankAssignment(BankRole.WEIGHT_ISSUER, r_p))
            roles[Side.WEST].append(BankAssignment(BankRole.INPUT_ISSUER, r_p))
        else:
            roles[Side.NORTH].append(BankAssignment(BankRole.INPUT_ISSUER, r_p))
            roles[Side.WEST].append(BankAssignment(BankRole.WEIGHT_ISSUER, r_p))
            roles[Side.SOUTH].append(BankAssignment(BankRole.OUTPUT_RECEIVER, r_p))
        return {side: tuple(entries) for side, entries in roles.items()}

    placement = place_subarrays(PhysicalArray(r_p), shape.r_s)
    _check_perimeter_reach(placement)
    seg_lanes = shape.seg_len
    chain_lanes = shape.r_s
    if dataflow is Dataflow.OS:
        # per-segment issuers on all four edges; the chain carries the other
        # non-stationary operand in from the west
        per_segment = BankRole.WEIGHT_ISSUER if not shape.transposed else BankRole.INPUT_ISSUER
        chain_role = BankRole.INPUT_ISSUER if not shape.transposed else BankRole.WEIGHT_ISSUER
        for side in _SEGMENT_SIDES:
            roles[side].append(BankAssignment(per_segment, seg_lanes))
        roles[Side.WEST].append(BankAssignment(chain_role, chain_lanes))
    else:
        stationary = BankRole.WEIGHT_ISSUER if dataflow is Dataflow.WS else BankRole.INPUT_ISSUER
        streamed = BankRole.INPUT_ISSUER if dataflow is Dataflow.WS else BankRole.WEIGHT_ISSUER
        roles[Side.NORTH].append(BankAssignment(stationary, r_p))
        if not shape.transposed:
            # streamed operand rides the chain; per-segment column drains
            roles[Side.WEST].append(BankAssignment(streamed, chain_lanes))
            for side in _SEGMENT_SIDES:
                roles[side].append(BankAssignment(BankRole.OUTPUT_RECEIVER, seg_lanes))
        else:
            # partial sums ride the chain and drain once, past the west edge
            for side in _SEGMENT_SIDES:
                roles[side].append(BankAssignment(streamed, seg_lanes))
            roles[Side.WEST].append(BankAssignment(BankRole.OUTPUT_RECEIVER, chain_lanes))
    return {side: tuple(entries) for side, entries in roles.items()}


def _check_perimeter_reach(placement) -> None:
    a, b, c, d = placement.subarrays
    reachable = (a.rect.r0 == 0 and b.rect.c1 == placement.r_p
                 and c.rect.r1 == placement.r_p and d.rect.c0 == 0)
    if not reachable:
        raise ValueError("sub-array placement does not reach the perimeter banks")

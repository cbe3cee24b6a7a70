"""flexsa: modeling toolkit for a reshapable multi-dataflow systolic array.

Enumerates the logical shapes reachable by chaining four sub-arrays through
roundabout neighbour links, models runtime under the OS/WS/IS dataflows,
schedules GEMM workloads onto the best (shape, dataflow) configuration and
validates everything against a cycle-accurate functional simulation.
"""

from .costmodel import (
    GEMMINI_FIXED,
    PLANARIA_COARSE,
    BaselineKind,
    Config,
    CostEstimate,
    Dataflow,
    estimate,
    estimate_baseline,
    estimate_is,
    estimate_os,
    estimate_ws,
    ideal_budget,
)
from .cyclesim import (
    BankAssignment,
    BankRole,
    Side,
    SimResult,
    SimulationFault,
    assign_bank_roles,
    naive_matmul,
    simulate,
    verify,
)
from .geometry import (
    LogicalShape,
    PERole,
    PhysicalArray,
    RoutePlan,
    SubArrayPlacement,
    chained_shape,
    enumerate_shapes,
    native_shape,
    place_subarrays,
    route,
    route_for,
    shape_from_label,
)
from .report import Report, SweepSpec, VerificationError, render, run_sweep
from .scheduler import ScheduleEntry, ScheduleResult, choose, schedule_model
from .workload import (
    GemmOp,
    LayerKind,
    LayerSpec,
    load_gemms,
    lower,
    lower_all,
    parse_gemms,
    parse_topology,
)

__version__ = "0.1.0"

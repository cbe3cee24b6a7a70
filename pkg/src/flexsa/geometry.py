"""Logical shapes, sub-array placement and routing for a reshapable PE grid.

A square grid of side ``r_p`` either runs natively as ``r_p x r_p`` or is
split into four rectangular sub-arrays that are chained end to end through
neighbour links (a pinwheel layout with an optional unused centre hole).
Chaining sub-arrays of ``r_s`` rows yields the logical shape
``r_s x 4*(r_p - r_s)`` when the row-wise operand rides the chain, or the
transpose when the column-wise operand does.  With ``r_s`` limited to half
the grid side, an array of side R supports exactly R + 1 logical shapes.

Streamed data crosses four chain boundaries per pass (three junctions
between consecutive sub-arrays plus one drain junction back to the buffer
edge).  Each crossing is modelled as a uniform pipeline delay of
``min(r_l, c_l)`` cycles; per-lane turning latencies are not modelled.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

NATIVE = "native"
CHAINED = "chained"

# Flow directions of the four chained sub-arrays, in chain order A->B->C->D.
FLOWS = ("east", "south", "west", "north")


class PERole(Enum):
    COMPUTE = "compute"
    COMPUTE_PASS_THROUGH = "compute_pass_through"
    IDLE = "idle"


@dataclass(frozen=True)
class PhysicalArray:
    """Square PE grid; the side must be even so four equal sub-arrays exist."""

    r_p: int

    def __post_init__(self) -> None:
        if self.r_p < 2 or self.r_p % 2 != 0:
            raise ValueError(f"array side must be even and >= 2, got {self.r_p}")

    @property
    def pe_count(self) -> int:
        return self.r_p * self.r_p


@dataclass(frozen=True)
class LogicalShape:
    """A runtime array shape: native, or chained from four sub-arrays."""

    r_l: int
    c_l: int
    kind: str  # NATIVE or CHAINED
    r_s: int = 0  # sub-array rows, 0 for native
    transposed: bool = False

    def __post_init__(self) -> None:
        if self.kind == NATIVE:
            if self.r_l != self.c_l or self.r_s != 0 or self.transposed:
                raise ValueError("native shape must be square with r_s = 0")
        elif self.kind == CHAINED:
            long_side = self.r_l if self.transposed else self.c_l
            short_side = self.c_l if self.transposed else self.r_l
            if short_side != self.r_s or long_side % 4 != 0:
                raise ValueError(f"inconsistent chained shape {self.r_l}x{self.c_l}")
            if not 1 <= self.r_s <= self.r_p // 2:
                raise ValueError(f"r_s={self.r_s} exceeds half of a {self.r_p}-wide array")
        else:
            raise ValueError(f"unknown shape kind {self.kind!r}")

    @property
    def r_p(self) -> int:
        """Side of the physical grid this shape lives on (derivable)."""
        if self.kind == NATIVE:
            return self.r_l
        return self.r_s + self.seg_len

    @property
    def seg_len(self) -> int:
        """Chain positions contributed by one sub-array (C_s = r_p - r_s)."""
        if self.kind == NATIVE:
            return 0
        return (self.r_l if self.transposed else self.c_l) // 4

    @property
    def pe_used(self) -> int:
        return self.r_l * self.c_l

    @property
    def junction_delay(self) -> int:
        return min(self.r_l, self.c_l) if self.kind == CHAINED else 0

    @property
    def num_junctions(self) -> int:
        return 4 if self.kind == CHAINED else 0

    @property
    def label(self) -> str:
        return f"{self.r_l}x{self.c_l}"


def native_shape(array: PhysicalArray) -> LogicalShape:
    return LogicalShape(array.r_p, array.r_p, NATIVE)


def chained_shape(array: PhysicalArray, r_s: int, transposed: bool) -> LogicalShape:
    if not 1 <= r_s <= array.r_p // 2:
        raise ValueError(f"r_s must be in [1, {array.r_p // 2}], got {r_s}")
    long_side = 4 * (array.r_p - r_s)
    if transposed:
        return LogicalShape(long_side, r_s, CHAINED, r_s, True)
    return LogicalShape(r_s, long_side, CHAINED, r_s, False)


def enumerate_shapes(array: PhysicalArray) -> list[LogicalShape]:
    """All r_p + 1 logical shapes, in the fixed scheduler tie-break order.

    Ascending r_s, untransposed before transposed, native last.
    """
    shapes: list[LogicalShape] = []
    for r_s in range(1, array.r_p // 2 + 1):
        shapes.append(chained_shape(array, r_s, transposed=False))
        shapes.append(chained_shape(array, r_s, transposed=True))
    shapes.append(native_shape(array))
    return shapes


def shape_from_label(array: PhysicalArray, label: str) -> LogicalShape:
    """Look up an enumerated shape by its 'RLxCL' label."""
    try:
        r_l, c_l = (int(part) for part in label.lower().split("x"))
    except ValueError:
        raise ValueError(f"malformed shape label {label!r}, expected RLxCL") from None
    for shape in enumerate_shapes(array):
        if shape.r_l == r_l and shape.c_l == c_l:
            return shape
    raise ValueError(f"shape {label} is not supported on a {array.r_p}x{array.r_p} array")


@dataclass(frozen=True)
class Rect:
    """Half-open row/col ranges on the physical grid."""

    r0: int
    r1: int
    c0: int
    c1: int

    @property
    def n_cells(self) -> int:
        return max(0, self.r1 - self.r0) * max(0, self.c1 - self.c0)

    def cells(self):
        for r in range(self.r0, self.r1):
            for c in range(self.c0, self.c1):
                yield r, c

    def contains(self, r: int, c: int) -> bool:
        return self.r0 <= r < self.r1 and self.c0 <= c < self.c1


@dataclass(frozen=True)
class SubArray:
    name: str  # "A".."D"
    rect: Rect
    flow: str  # east/south/west/north


@dataclass(frozen=True)
class SubArrayPlacement:
    r_p: int
    r_s: int
    subarrays: tuple[SubArray, ...]
    hole: Rect  # empty when r_s == r_p/2


def place_subarrays(array: PhysicalArray, r_s: int) -> SubArrayPlacement:
    """Pinwheel layout of four r_s x (r_p - r_s) sub-arrays around the hole."""
    r_p = array.r_p
    if not 1 <= r_s <= r_p // 2:
        raise ValueError(f"r_s must be in [1, {r_p // 2}], got {r_s}")
    c_s = r_p - r_s
    rects = (
        Rect(0, r_s, 0, c_s),
        Rect(0, c_s, c_s, r_p),
        Rect(c_s, r_p, r_s, r_p),
        Rect(r_s, r_p, 0, r_s),
    )
    subarrays = tuple(SubArray(name, rect, flow)
                      for name, rect, flow in zip("ABCD", rects, FLOWS))
    hole = Rect(r_s, c_s, r_s, c_s)
    return SubArrayPlacement(r_p, r_s, subarrays, hole)


def chain_cell(placement: SubArrayPlacement, seg: int, pos: int, lane: int) -> tuple[int, int]:
    """Physical coordinate of chain position ``pos`` on ``lane`` in segment ``seg``.

    Lanes run across the chain (0 <= lane < r_s); positions advance along the
    flow direction of each sub-array (0 <= pos < r_p - r_s).
    """
    r_p, r_s = placement.r_p, placement.r_s
    c_s = r_p - r_s
    if not (0 <= seg < 4 and 0 <= pos < c_s and 0 <= lane < r_s):
        raise ValueError(f"chain coordinate out of range: seg={seg} pos={pos} lane={lane}")
    if seg == 0:  # A, eastward
        return lane, pos
    if seg == 1:  # B, southward
        return pos, c_s + lane
    if seg == 2:  # C, westward
        return c_s + lane, r_p - 1 - pos
    return r_p - 1 - pos, lane  # D, northward


def logical_to_physical(shape: LogicalShape) -> dict[tuple[int, int], tuple[int, int]]:
    """Map each logical (row, col) to its physical grid coordinate."""
    if shape.kind == NATIVE:
        return {(i, j): (i, j) for i in range(shape.r_l) for j in range(shape.c_l)}
    placement = place_subarrays(PhysicalArray(shape.r_p), shape.r_s)
    seg_len = shape.seg_len
    mapping: dict[tuple[int, int], tuple[int, int]] = {}
    for i in range(shape.r_l):
        for j in range(shape.c_l):
            if shape.transposed:
                seg, pos, lane = i // seg_len, i % seg_len, j
            else:
                seg, pos, lane = j // seg_len, j % seg_len, i
            mapping[(i, j)] = chain_cell(placement, seg, pos, lane)
    return mapping


@dataclass(frozen=True)
class RoutePlan:
    """Per-PE roles plus the uniform junction timing of a configuration."""

    pe_roles: dict[tuple[int, int], PERole]
    junction_delay: int
    num_junctions: int

    @property
    def non_idle_cells(self) -> int:
        return sum(1 for role in self.pe_roles.values() if role is not PERole.IDLE)


def route(placement: SubArrayPlacement | None, shape: LogicalShape) -> RoutePlan:
    """Roles and junction delays for the roundabout path of ``shape``.

    ``placement`` must come from the same (r_p, r_s); pass None for the
    native shape.  The four turning regions (the r_s x r_s corner block on
    the receiving side of each junction) carry pass-through traffic on top
    of their own MACs.
    """
    if shape.kind == NATIVE:
        if placement is not None:
            raise ValueError("native shape takes no sub-array placement")
        roles = {cell: PERole.COMPUTE for cell in Rect(0, shape.r_l, 0, shape.c_l).cells()}
        return RoutePlan(roles, 0, 0)
    if placement is None:
        raise ValueError("chained shape requires a sub-array placement")
    if placement.r_s != shape.r_s or placement.r_p != shape.r_p:
        raise ValueError(
            f"placement (r_p={placement.r_p}, r_s={placement.r_s}) does not match "
            f"shape {shape.label}"
        )
    r_p, r_s = placement.r_p, placement.r_s
    c_s = r_p - r_s
    roles: dict[tuple[int, int], PERole] = {}
    for sub in placement.subarrays:
        for cell in sub.rect.cells():
            roles[cell] = PERole.COMPUTE
    # Turning corners, one per junction: A->B lands in B's top rows, B->C in
    # C's east columns, C->D in D's bottom rows, and the drain junction exits
    # through A's west columns.
    turning = (
        Rect(0, r_s, c_s, r_p),
        Rect(c_s, r_p, c_s, r_p),
        Rect(c_s, r_p, 0, r_s),
        Rect(0, r_s, 0, r_s),
    )
    for block in turning:
        for cell in block.cells():
            roles[cell] = PERole.COMPUTE_PASS_THROUGH
    for cell in placement.hole.cells():
        roles[cell] = PERole.IDLE
    return RoutePlan(roles, shape.junction_delay, shape.num_junctions)


def route_for(array: PhysicalArray, shape: LogicalShape) -> RoutePlan:
    """Build placement (if any) and route in one step."""
    if shape.r_p != array.r_p:
        raise ValueError(f"shape {shape.label} does not fit a {array.r_p}-wide array")
    if shape.kind == NATIVE:
        return route(None, shape)
    return route(place_subarrays(array, shape.r_s), shape)

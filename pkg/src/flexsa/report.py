"""Experiment sweeps and report rendering (json / csv / svg)."""

from __future__ import annotations

import csv
import io
import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass

import numpy as np

from .costmodel import (
    GEMMINI_FIXED,
    PLANARIA_COARSE,
    BaselineKind,
    Config,
    estimate_baseline,
    ideal_budget,
)
from .cyclesim import simulate, verify
from .geometry import PhysicalArray
from .scheduler import choose
from .workload import GemmOp, load_gemms

PRIMARY_MODE = "flexsa"
BASELINE_MODES = ("gemmini", "planaria", "ideal")
ALL_MODES = (PRIMARY_MODE,) + BASELINE_MODES

MAX_ARRAY_SIDE = 256
SIM_VALUE_RANGE = 8  # random operand magnitude for cross-check runs


class VerificationError(RuntimeError):
    """A cross-check simulation disagreed with the exact reference product."""


@dataclass(frozen=True)
class SweepSpec:
    topology_path: str
    array_sizes: tuple[int, ...]
    modes: tuple[str, ...] = ALL_MODES
    pe_budget: int = 0  # 0 means max(array)^2
    cross_check: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.array_sizes:
            raise ValueError("at least one array size is required")
        for size in self.array_sizes:
            if size < 2 or size > MAX_ARRAY_SIDE or size % 2 != 0:
                raise ValueError(f"array sizes must be even and within [2, {MAX_ARRAY_SIDE}]")
        if not self.modes:
            raise ValueError("at least one mode is required")
        for mode in self.modes:
            if mode not in ALL_MODES:
                raise ValueError(f"unknown mode {mode!r}; choose from {ALL_MODES}")
        if self.pe_budget and self.pe_budget < max(self.array_sizes) ** 2:
            raise ValueError("pe_budget must be at least the largest array's PE count")

    @property
    def effective_budget(self) -> int:
        return self.pe_budget or max(self.array_sizes) ** 2


@dataclass
class LayerRow:
    layer: str
    m: int
    k: int
    n: int
    shape: str  # chosen logical shape label, e.g. "49x316"
    r_s: int
    dataflow: str
    cycles: dict[str, int]  # per mode
    utilization: dict[str, float]  # per mode
    sim_cycles: int | None = None
    sim_verified: bool | None = None


@dataclass
class ArraySection:
    array: int
    modes: tuple[str, ...]
    layers: list[LayerRow]
    totals: dict[str, int]
    speedup: dict[str, float]  # total_mode / total_primary
    mean_utilization: dict[str, float]  # MAC-weighted


@dataclass
class Report:
    sections: list[ArraySection]
    pe_budget: int
    cross_check: bool

    def to_dict(self) -> dict:
        return {
            "pe_budget": self.pe_budget,
            "cross_check": self.cross_check,
            "arrays": [
                {
                    "array": sec.array,
                    "modes": list(sec.modes),
                    "layers": [
                        {
                            "layer": row.layer,
                            "m": row.m, "k": row.k, "n": row.n,
                            "shape": row.shape,
                            "r_s": row.r_s,
                            "dataflow": row.dataflow,
                            "cycles": row.cycles,
                            "utilization": row.utilization,
                            "sim_cycles": row.sim_cycles,
                            "sim_verified": row.sim_verified,
                        }
                        for row in sec.layers
                    ],
                    "totals": sec.totals,
                    "speedup": sec.speedup,
                    "mean_utilization": sec.mean_utilization,
                }
                for sec in self.sections
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Report":
        sections = []
        for sec in data["arrays"]:
            layers = [
                LayerRow(
                    layer=row["layer"], m=row["m"], k=row["k"], n=row["n"],
                    shape=row["shape"], r_s=row["r_s"], dataflow=row["dataflow"],
                    cycles={k: int(v) for k, v in row["cycles"].items()},
                    utilization={k: float(v) for k, v in row["utilization"].items()},
                    sim_cycles=row.get("sim_cycles"),
                    sim_verified=row.get("sim_verified"),
                )
                for row in sec["layers"]
            ]
            sections.append(ArraySection(
                array=sec["array"], modes=tuple(sec["modes"]), layers=layers,
                totals={k: int(v) for k, v in sec["totals"].items()},
                speedup={k: float(v) for k, v in sec["speedup"].items()},
                mean_utilization={k: float(v) for k, v in sec["mean_utilization"].items()},
            ))
        return cls(sections, int(data["pe_budget"]), bool(data["cross_check"]))


def _baseline_for(mode: str, budget: int) -> BaselineKind:
    if mode == "gemmini":
        return GEMMINI_FIXED
    if mode == "planaria":
        return PLANARIA_COARSE
    return ideal_budget(budget)


def _random_matrix(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.integers(-SIM_VALUE_RANGE, SIM_VALUE_RANGE + 1, size=(rows, cols))


def _cross_check(config: Config, gemm: GemmOp, rng: np.random.Generator) -> tuple[int, bool]:
    a = _random_matrix(rng, gemm.m, gemm.k)
    b = _random_matrix(rng, gemm.k, gemm.n)
    result = simulate(config, gemm, a, b)
    return result.cycles, verify(result, a, b)


def run_sweep(spec: SweepSpec, gemms: list[GemmOp] | None = None) -> Report:
    """Schedule the workload under every requested mode and array size.

    With ``cross_check`` set, each chosen configuration is also run through
    the cycle simulator on seeded random operands; any exact-result mismatch
    raises :class:`VerificationError`.
    """
    if gemms is None:
        gemms = load_gemms(spec.topology_path)
    if not gemms:
        raise ValueError(f"no GEMM operations found in {spec.topology_path!r}")
    budget = spec.effective_budget
    rng = np.random.default_rng(spec.seed)
    sections = []
    for size in spec.array_sizes:
        array = PhysicalArray(size)
        layers: list[LayerRow] = []
        totals = {mode: 0 for mode in spec.modes}
        util_weighted = {mode: 0.0 for mode in spec.modes}
        mac_sum = 0
        for gemm in gemms:
            config, cost = choose(gemm, array)
            cycles: dict[str, int] = {}
            utilization: dict[str, float] = {}
            for mode in spec.modes:
                if mode == PRIMARY_MODE:
                    est = cost
                else:
                    est = estimate_baseline(_baseline_for(mode, budget), gemm, array)
                cycles[mode] = est.t_total
                utilization[mode] = est.utilization
                totals[mode] += est.t_total
                util_weighted[mode] += est.utilization * gemm.mac_count
            mac_sum += gemm.mac_count
            row = LayerRow(
                layer=gemm.source_layer or gemm.label,
                m=gemm.m, k=gemm.k, n=gemm.n,
                shape=config.shape.label, r_s=config.shape.r_s,
                dataflow=config.dataflow.value,
                cycles=cycles, utilization=utilization,
            )
            if spec.cross_check:
                sim_cycles, ok = _cross_check(config, gemm, rng)
                row.sim_cycles, row.sim_verified = sim_cycles, ok
                if not ok:
                    raise VerificationError(
                        f"simulation mismatch for layer {row.layer} on array {size}")
            layers.append(row)
        primary_total = totals.get(PRIMARY_MODE, 0)
        speedup = {}
        if primary_total:
            speedup = {mode: totals[mode] / primary_total
                       for mode in spec.modes if mode != PRIMARY_MODE}
        mean_util = {mode: util_weighted[mode] / mac_sum for mode in spec.modes}
        sections.append(ArraySection(size, spec.modes, layers, totals, speedup, mean_util))
    return Report(sections, budget, spec.cross_check)


# ---------------------------------------------------------------------------
# rendering

_AGG_TOTAL, _AGG_SPEEDUP, _AGG_MEAN_UTIL = "__total__", "__speedup__", "__mean_util__"


def render(report: Report, fmt: str) -> bytes:
    """Serialize a report as json, csv or an svg bar chart."""
    if fmt == "json":
        return (json.dumps(report.to_dict(), indent=2) + "\n").encode()
    if fmt == "csv":
        return _render_csv(report)
    if fmt == "svg":
        return _render_svg(report)
    raise ValueError(f"unknown report format {fmt!r}; use json, csv or svg")


def _csv_header(modes: tuple[str, ...]) -> list[str]:
    head = ["array", "layer", "m", "k", "n", "shape", "r_s", "dataflow",
            "sim_cycles", "sim_verified"]
    for mode in modes:
        head += [f"cycles_{mode}", f"util_{mode}"]
    return head


def _render_csv(report: Report) -> bytes:
    buf = io.StringIO()
    modes = report.sections[0].modes if report.sections else ()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_csv_header(modes) + ["pe_budget", "cross_check"])
    meta_written = False
    for sec in report.sections:
        for row in sec.layers:
            record = [sec.array, row.layer, row.m, row.k, row.n, row.shape,
                      row.r_s, row.dataflow,
                      "" if row.sim_cycles is None else row.sim_cycles,
                      "" if row.sim_verified is None else int(row.sim_verified)]
            for mode in sec.modes:
                record += [row.cycles[mode], repr(row.utilization[mode])]
            if not meta_written:
                record += [report.pe_budget, int(report.cross_check)]
                meta_written = True
            writer.writerow(record)
        for tag, values in ((_AGG_TOTAL, sec.totals),
                            (_AGG_SPEEDUP, sec.speedup),
                            (_AGG_MEAN_UTIL, sec.mean_utilization)):
            record = [sec.array, tag, "", "", "", "", "", "", "", ""]
            for mode in sec.modes:
                val = values.get(mode, "")
                record += [repr(val) if isinstance(val, float) else val, ""]
            writer.writerow(record)
    return buf.getvalue().encode()


def report_from_csv(data: bytes) -> Report:
    """Rebuild a report from its csv rendering (numeric-field faithful)."""
    rows = list(csv.reader(io.StringIO(data.decode())))
    header = rows[0]
    modes = tuple(col[len("cycles_"):] for col in header if col.startswith("cycles_"))
    col_of = {name: i for i, name in enumerate(header)}
    pe_budget, cross_check = 0, False
    sections: dict[int, ArraySection] = {}
    for raw in rows[1:]:
        array = int(raw[0])
        if array not in sections:
            sections[array] = ArraySection(array, modes, [], {}, {}, {})
        sec = sections[array]
        tag = raw[1]
        if tag == _AGG_TOTAL:
            for i, mode in enumerate(modes):
                sec.totals[mode] = int(raw[10 + 2 * i])
            continue
        if tag == _AGG_SPEEDUP:
            for i, mode in enumerate(modes):
                cell = raw[10 + 2 * i]
                if cell:
                    sec.speedup[mode] = float(cell)
            continue
        if tag == _AGG_MEAN_UTIL:
            for i, mode in enumerate(modes):
                sec.mean_utilization[mode] = float(raw[10 + 2 * i])
            continue
        cycles = {mode: int(raw[10 + 2 * i]) for i, mode in enumerate(modes)}
        util = {mode: float(raw[11 + 2 * i]) for i, mode in enumerate(modes)}
        if len(raw) > col_of["pe_budget"] and raw[col_of["pe_budget"]]:
            pe_budget = int(raw[col_of["pe_budget"]])
            cross_check = bool(int(raw[col_of["cross_check"]]))
        sec.layers.append(LayerRow(
            layer=raw[1], m=int(raw[2]), k=int(raw[3]), n=int(raw[4]),
            shape=raw[5], r_s=int(raw[6]), dataflow=raw[7],
            cycles=cycles, utilization=util,
            sim_cycles=int(raw[8]) if raw[8] else None,
            sim_verified=bool(int(raw[9])) if raw[9] else None,
        ))
    ordered = [sections[key] for key in sections]
    return Report(ordered, pe_budget, cross_check)


_MODE_FILL = {
    "flexsa": "#2b6cb0",
    "gemmini": "#b03a2b",
    "planaria": "#8a7d2a",
    "ideal": "#3e8a4f",
}


def _render_svg(report: Report) -> bytes:
    """Grouped bar chart: total cycles and mean utilization per mode."""
    modes = report.sections[0].modes if report.sections else ()
    bar_w, gap, group_gap = 28, 6, 30
    panel_h, margin = 160, 40
    n_arrays = max(1, len(report.sections))
    group_w = n_arrays * (bar_w + gap) + group_gap
    width = margin * 2 + len(modes) * group_w
    height = margin * 3 + panel_h * 2
    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg",
                     width=str(width), height=str(height))
    panels = (
        ("total cycles", {sec.array: sec.totals for sec in report.sections}, margin),
        ("mean utilization",
         {sec.array: sec.mean_utilization for sec in report.sections},
         margin * 2 + panel_h),
    )
    for title, per_array, y0 in panels:
        ET.SubElement(svg, "text", x=str(margin), y=str(y0 - 8)).text = title
        peak = max((values.get(mode, 0) for values in per_array.values()
                    for mode in modes), default=1) or 1
        for mi, mode in enumerate(modes):
            group = ET.SubElement(svg, "g", attrib={
                "class": "mode-group", "data-mode": mode})
            gx = margin + mi * group_w
            for ai, (array, values) in enumerate(sorted(per_array.items())):
                val = values.get(mode, 0)
                h = panel_h * val / peak
                ET.SubElement(group, "rect", attrib={
                    "x": str(gx + ai * (bar_w + gap)),
                    "y": str(y0 + panel_h - h),
                    "width": str(bar_w),
                    "height": str(max(h, 0.5)),
                    "fill": _MODE_FILL.get(mode, "#555"),
                    "data-array": str(array),
                    "data-value": repr(float(val)),
                })
            label = ET.SubElement(svg, "text", x=str(gx),
                                  y=str(y0 + panel_h + 14))
            label.text = mode
    return ET.tostring(svg, encoding="utf-8", xml_declaration=True)

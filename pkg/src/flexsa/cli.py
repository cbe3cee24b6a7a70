"""Command line front end.

Subcommands: shapes, lower, estimate, schedule, simulate, sweep, report.
Exit codes: 0 success, 1 invalid input or usage, 2 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .costmodel import (
    GEMMINI_FIXED,
    PLANARIA_COARSE,
    Config,
    Dataflow,
    estimate,
    ideal_budget,
)
from .cyclesim import simulate, verify
from .geometry import PhysicalArray, enumerate_shapes, shape_from_label
from .report import (
    ALL_MODES,
    Report,
    SweepSpec,
    VerificationError,
    render,
    run_sweep,
)
from .scheduler import schedule_model
from .workload import GemmOp, load_gemms

EXIT_OK, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parse_gemm(text: str) -> GemmOp:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError("--gemm expects M,K,N")
    m, k, n = (int(p) for p in parts)
    return GemmOp(m, k, n)


def _emit(args, data: bytes) -> None:
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data.decode())


def _emit_json(args, obj) -> None:
    _emit(args, (json.dumps(obj, indent=2) + "\n").encode())


def _cmd_shapes(args) -> int:
    array = PhysicalArray(args.array)
    shapes = enumerate_shapes(array)
    if args.format == "json":
        _emit_json(args, [
            {"r_l": s.r_l, "c_l": s.c_l, "kind": s.kind, "r_s": s.r_s,
             "pe_used": s.pe_used}
            for s in shapes
        ])
    else:
        lines = ["r_l,c_l,kind,r_s,pe_used"]
        lines += [f"{s.r_l},{s.c_l},{s.kind},{s.r_s},{s.pe_used}" for s in shapes]
        _emit(args, ("\n".join(lines) + "\n").encode())
    return EXIT_OK


def _cmd_lower(args) -> int:
    gemms = load_gemms(args.topology)
    if args.format == "json":
        _emit_json(args, [
            {"name": g.source_layer, "m": g.m, "k": g.k, "n": g.n} for g in gemms
        ])
    else:
        lines = ["name,M,K,N"] + [f"{g.source_layer},{g.m},{g.k},{g.n}" for g in gemms]
        _emit(args, ("\n".join(lines) + "\n").encode())
    return EXIT_OK


def _cmd_estimate(args) -> int:
    array = PhysicalArray(args.array)
    shape = shape_from_label(array, args.shape)
    config = Config(shape, Dataflow(args.dataflow))
    est = estimate(config, _parse_gemm(args.gemm), array)
    payload = {"shape": shape.label, "dataflow": config.dataflow.value}
    payload.update(est.to_dict())
    _emit_json(args, payload)
    return EXIT_OK


def _parse_baselines(text: str, array: PhysicalArray):
    kinds = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if item == "gemmini":
            kinds.append(GEMMINI_FIXED)
        elif item == "planaria":
            kinds.append(PLANARIA_COARSE)
        elif item.startswith("ideal"):
            budget = array.pe_count
            if ":" in item:
                budget = int(item.split(":", 1)[1])
            kinds.append(ideal_budget(budget))
        else:
            raise ValueError(f"unknown baseline {item!r}")
    return tuple(kinds)


def _cmd_schedule(args) -> int:
    array = PhysicalArray(args.array)
    gemms = load_gemms(args.topology)
    baselines = _parse_baselines(args.baselines, array) if args.baselines else ()
    result = schedule_model(gemms, array, baselines,
                            switch_penalty=args.switch_penalty)
    payload = {
        "array": args.array,
        "total_cycles": result.total_cycles,
        "mean_utilization": result.mean_utilization,
        "entries": [
            {
                "layer": e.gemm.source_layer or e.gemm.label,
                "m": e.gemm.m, "k": e.gemm.k, "n": e.gemm.n,
                "shape": e.chosen.shape.label,
                "dataflow": e.chosen.dataflow.value,
                "cycles": e.cost.t_total,
                "utilization": e.cost.utilization,
                "baselines": {kind.label: est.t_total
                              for kind, est in e.baseline_costs.items()},
            }
            for e in result.entries
        ],
    }
    _emit_json(args, payload)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    array = PhysicalArray(args.array)
    shape = shape_from_label(array, args.shape)
    config = Config(shape, Dataflow(args.dataflow))
    gemm = _parse_gemm(args.gemm)
    rng = np.random.default_rng(args.seed)
    a = rng.integers(-8, 9, size=(gemm.m, gemm.k))
    b = rng.integers(-8, 9, size=(gemm.k, gemm.n))
    result = simulate(config, gemm, a, b)
    est = estimate(config, gemm, array)
    verified = verify(result, a, b) if args.check else None
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write("cycle,busy_pes,phase\n")
            for cycle, (busy, phase) in enumerate(
                    zip(result.busy_trace, result.phase_trace)):
                fh.write(f"{cycle},{busy},{phase}\n")
    _emit_json(args, {
        "shape": shape.label,
        "dataflow": config.dataflow.value,
        "gemm": {"m": gemm.m, "k": gemm.k, "n": gemm.n},
        "cycles": result.cycles,
        "model_cycles": est.t_total,
        "mac_total": result.mac_total,
        "measured_utilization": result.measured_utilization,
        "peak_busy": max(result.busy_trace),
        "verified": verified,
    })
    if verified is False:
        print("verification failed: output differs from exact product",
              file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _cmd_sweep(args) -> int:
    sizes = tuple(int(s) for s in args.arrays.split(","))
    modes = tuple(m.strip() for m in args.modes.split(",")) if args.modes else ALL_MODES
    spec = SweepSpec(
        topology_path=args.topology,
        array_sizes=sizes,
        modes=modes,
        pe_budget=args.budget,
        cross_check=args.cross_check,
        seed=args.seed,
    )
    report = run_sweep(spec)
    _emit(args, render(report, args.format))
    return EXIT_OK


def _cmd_report(args) -> int:
    with open(args.input, "r", encoding="utf-8") as fh:
        report = Report.from_dict(json.load(fh))
    _emit(args, render(report, args.format))
    return EXIT_OK


def _add_common(parser, formats=("json",)) -> None:
    parser.add_argument("--out", help="write output to this path instead of stdout")
    parser.add_argument("--format", default=formats[0], choices=formats)
    parser.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flexsa",
                     description="reshapable systolic array modeling toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("shapes", help="enumerate logical shapes")
    p.add_argument("--array", type=int, required=True)
    _add_common(p, formats=("csv", "json"))
    p.set_defaults(func=_cmd_shapes)

    p = sub.add_parser("lower", help="lower a topology file to GEMMs")
    p.add_argument("--topology", required=True)
    _add_common(p, formats=("csv", "json"))
    p.set_defaults(func=_cmd_lower)

    p = sub.add_parser("estimate", help="model one (shape, dataflow) config")
    p.add_argument("--gemm", required=True, metavar="M,K,N")
    p.add_argument("--array", type=int, required=True)
    p.add_argument("--shape", required=True, metavar="RLxCL")
    p.add_argument("--dataflow", required=True, choices=("os", "ws", "is"))
    _add_common(p)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("schedule", help="pick the best config per layer")
    p.add_argument("--topology", required=True)
    p.add_argument("--array", type=int, required=True)
    p.add_argument("--baselines", default="",
                   metavar="gemmini,planaria,ideal:B")
    p.add_argument("--switch-penalty", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=_cmd_schedule)

    p = sub.add_parser("simulate", help="cycle-accurate run on random operands")
    p.add_argument("--gemm", required=True, metavar="M,K,N")
    p.add_argument("--array", type=int, required=True)
    p.add_argument("--shape", required=True, metavar="RLxCL")
    p.add_argument("--dataflow", required=True, choices=("os", "ws", "is"))
    p.add_argument("--check", action="store_true",
                   help="verify against the exact product (exit 2 on mismatch)")
    p.add_argument("--trace", help="write a cycle,busy_pes,phase CSV here")
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="full experiment sweep and report")
    p.add_argument("--topology", required=True)
    p.add_argument("--arrays", required=True, metavar="R1,R2,...")
    p.add_argument("--modes", default="", metavar=",".join(ALL_MODES))
    p.add_argument("--budget", type=int, default=0)
    p.add_argument("--cross-check", action="store_true")
    _add_common(p, formats=("json", "csv", "svg"))
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("report", help="re-render a saved json report")
    p.add_argument("--input", required=True)
    _add_common(p, formats=("json", "csv", "svg"))
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except VerificationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""DNN layer descriptions and their lowering to GEMM operations.

Topology files follow the SCALE-sim CSV convention:

    Layer name, IFMAP Height, IFMAP Width, Filter Height, Filter Width,
    Channels, Num Filter, Strides[, Kind][, Hidden]

plus an alternative direct form with columns ``name,M,K,N``.  Trailing
commas are tolerated.  Column reuse for the non-convolution kinds:
FullyConnected takes batch from IFMAP Height; LstmCell takes batch from
IFMAP Height and the state width from Hidden; Gemm rows inside a topology
file map M, K, N to IFMAP Height, Channels and Num Filter.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum


class LayerKind(Enum):
    CONV2D = "Conv2D"
    FULLY_CONNECTED = "FullyConnected"
    LSTM_CELL = "LstmCell"
    GEMM = "Gemm"


_KIND_ALIASES = {
    "conv": LayerKind.CONV2D,
    "conv2d": LayerKind.CONV2D,
    "fc": LayerKind.FULLY_CONNECTED,
    "fullyconnected": LayerKind.FULLY_CONNECTED,
    "dense": LayerKind.FULLY_CONNECTED,
    "lstm": LayerKind.LSTM_CELL,
    "lstmcell": LayerKind.LSTM_CELL,
    "gemm": LayerKind.GEMM,
}


@dataclass(frozen=True)
class GemmOp:
    """One M*K by K*N multiplication, the unit of scheduling and simulation."""

    m: int
    k: int
    n: int
    source_layer: str = ""

    def __post_init__(self) -> None:
        if min(self.m, self.k, self.n) < 1:
            raise ValueError(f"GEMM dims must be >= 1, got {self.m},{self.k},{self.n}")

    @property
    def mac_count(self) -> int:
        return self.m * self.k * self.n

    @property
    def label(self) -> str:
        return f"{self.m}x{self.k}x{self.n}"


@dataclass(frozen=True)
class LayerSpec:
    name: str
    kind: LayerKind
    ifmap_h: int = 1
    ifmap_w: int = 1
    filter_h: int = 1
    filter_w: int = 1
    channels: int = 1
    num_filters: int = 1
    stride: int = 1
    batch: int = 1
    hidden: int = 0  # LstmCell only
    m: int = 0  # Gemm only
    k: int = 0
    n: int = 0

    def __post_init__(self) -> None:
        dims = (self.ifmap_h, self.ifmap_w, self.filter_h, self.filter_w,
                self.channels, self.num_filters, self.stride, self.batch)
        if min(dims) < 1:
            raise ValueError(f"layer {self.name!r}: all dimension fields must be positive")
        if self.kind is LayerKind.CONV2D:
            if self.ifmap_h < self.filter_h or self.ifmap_w < self.filter_w:
                raise ValueError(f"layer {self.name!r}: filter larger than ifmap")
        if self.kind is LayerKind.LSTM_CELL and self.hidden < 1:
            raise ValueError(f"layer {self.name!r}: LstmCell requires a positive Hidden")
        if self.kind is LayerKind.GEMM and min(self.m, self.k, self.n) < 1:
            raise ValueError(f"layer {self.name!r}: Gemm requires positive m, k, n")


def lower(layer: LayerSpec) -> list[GemmOp]:
    """Lower one layer to its GEMM operations.

    Conv2D uses im2col with valid (no) padding: M = H_out*W_out,
    K = filter_h*filter_w*channels, N = num_filters.  FullyConnected maps to
    (batch, channels, num_filters).  LstmCell fuses the four gates into one
    (batch, channels + hidden, 4*hidden) GEMM.  Gemm passes through.
    """
    if layer.kind is LayerKind.CONV2D:
        h_out = (layer.ifmap_h - layer.filter_h) // layer.stride + 1
        w_out = (layer.ifmap_w - layer.filter_w) // layer.stride + 1
        return [GemmOp(h_out * w_out,
                       layer.filter_h * layer.filter_w * layer.channels,
                       layer.num_filters, layer.name)]
    if layer.kind is LayerKind.FULLY_CONNECTED:
        return [GemmOp(layer.batch, layer.channels, layer.num_filters, layer.name)]
    if layer.kind is LayerKind.LSTM_CELL:
        return [GemmOp(layer.batch, layer.channels + layer.hidden, 4 * layer.hidden,
                       layer.name)]
    return [GemmOp(layer.m, layer.k, layer.n, layer.name)]


def lower_all(layers: list[LayerSpec]) -> list[GemmOp]:
    gemms: list[GemmOp] = []
    for layer in layers:
        gemms.extend(lower(layer))
    return gemms


def _split_row(row: list[str]) -> list[str]:
    cells = [cell.strip() for cell in row]
    while cells and cells[-1] == "":  # trailing comma
        cells.pop()
    return cells


def _int_field(value: str, what: str, line_no: int) -> int:
    try:
        parsed = int(value)
    except ValueError:
        raise ValueError(f"line {line_no}: {what} is not an integer: {value!r}") from None
    return parsed


def parse_topology(csv_text: str) -> list[LayerSpec]:
    """Parse a SCALE-sim style topology CSV into layer specs, in file order.

    The header row is required.  ``Kind`` defaults to Conv2D.  Errors carry
    the 1-based file line number of the offending row.
    """
    rows = list(csv.reader(io.StringIO(csv_text)))
    if not rows:
        raise ValueError("topology file is empty")
    header = [h.strip().lower() for h in _split_row(rows[0])]
    if len(header) < 8:
        raise ValueError("topology header must have at least 8 columns")
    kind_col = header.index("kind") if "kind" in header else None
    hidden_col = header.index("hidden") if "hidden" in header else None

    layers: list[LayerSpec] = []
    for idx, raw in enumerate(rows[1:], start=2):
        cells = _split_row(raw)
        if not cells:
            continue
        if len(cells) < 8:
            raise ValueError(f"line {idx}: expected at least 8 columns, got {len(cells)}")
        name = cells[0]
        kind = LayerKind.CONV2D
        if kind_col is not None and kind_col < len(cells) and cells[kind_col]:
            key = cells[kind_col].lower()
            if key not in _KIND_ALIASES:
                raise ValueError(f"line {idx}: unknown layer kind {cells[kind_col]!r}")
            kind = _KIND_ALIASES[key]
        nums = [_int_field(cells[i], f"column {i + 1}", idx) for i in range(1, 8)]
        ifmap_h, ifmap_w, filter_h, filter_w, channels, num_filters, stride = nums
        hidden = 0
        if hidden_col is not None and hidden_col < len(cells) and cells[hidden_col]:
            hidden = _int_field(cells[hidden_col], "Hidden", idx)
        try:
            if kind is LayerKind.CONV2D:
                layer = LayerSpec(name, kind, ifmap_h, ifmap_w, filter_h, filter_w,
                                  channels, num_filters, stride)
            elif kind is LayerKind.FULLY_CONNECTED:
                layer = LayerSpec(name, kind, channels=channels,
                                  num_filters=num_filters, batch=ifmap_h)
            elif kind is LayerKind.LSTM_CELL:
                layer = LayerSpec(name, kind, channels=channels, batch=ifmap_h,
                                  hidden=hidden)
            else:
                layer = LayerSpec(name, kind, m=ifmap_h, k=channels, n=num_filters)
        except ValueError as exc:
            raise ValueError(f"line {idx}: {exc}") from None
        layers.append(layer)
    return layers


def parse_gemms(csv_text: str) -> list[GemmOp]:
    """Parse a direct-GEMM CSV with columns name,M,K,N."""
    rows = list(csv.reader(io.StringIO(csv_text)))
    if not rows:
        raise ValueError("GEMM file is empty")
    header = [h.strip().lower() for h in _split_row(rows[0])]
    if header[:4] != ["name", "m", "k", "n"]:
        raise ValueError("GEMM file header must be name,M,K,N")
    gemms: list[GemmOp] = []
    for idx, raw in enumerate(rows[1:], start=2):
        cells = _split_row(raw)
        if not cells:
            continue
        if len(cells) < 4:
            raise ValueError(f"line {idx}: expected 4 columns, got {len(cells)}")
        m, k, n = (_int_field(cells[i], "MKN"[i - 1], idx) for i in (1, 2, 3))
        try:
            gemms.append(GemmOp(m, k, n, cells[0]))
        except ValueError as exc:
            raise ValueError(f"line {idx}: {exc}") from None
    return gemms


def load_gemms(path: str) -> list[GemmOp]:
    """Read either topology or direct-GEMM CSV, sniffing on the header."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    first = text.splitlines()[0].lower() if text.splitlines() else ""
    fields = [f.strip() for f in first.split(",") if f.strip()]
    if fields[:4] == ["name", "m", "k", "n"]:
        return parse_gemms(text)
    return lower_all(parse_topology(text))

import pytest

from flexsa.workload import (
    GemmOp,
    LayerKind,
    LayerSpec,
    lower,
    lower_all,
    parse_gemms,
    parse_topology,
)

HEADER = ("Layer name, IFMAP Height, IFMAP Width, Filter Height, Filter Width,"
          " Channels, Num Filter, Strides,\n")


def test_parse_conv_row():
    layers = parse_topology(HEADER + "L1,8,8,3,3,4,8,1,\n")
    assert len(layers) == 1
    layer = layers[0]
    assert layer.kind is LayerKind.CONV2D
    assert (layer.ifmap_h, layer.ifmap_w) == (8, 8)
    assert (layer.filter_h, layer.filter_w) == (3, 3)
    assert (layer.channels, layer.num_filters, layer.stride) == (4, 8, 1)


def test_parse_empty_data_section():
    assert parse_topology(HEADER) == []


def test_parse_zero_stride_rejected():
    with pytest.raises(ValueError, match="line 2"):
        parse_topology(HEADER + "L1,8,8,3,3,4,8,0,\n")


def test_parse_malformed_row_names_line():
    with pytest.raises(ValueError, match="line 3"):
        parse_topology(HEADER + "L1,8,8,3,3,4,8,1,\nL2,8,8,3,3,nope,8,1,\n")


def test_parse_kind_and_hidden_columns():
    text = (HEADER.rstrip("\n").rstrip(",") + ", Kind, Hidden,\n"
            "c1,8,8,3,3,4,8,1,Conv2D,,\n"
            "l1,1,1,1,1,512,1,1,LstmCell,512,\n"
            "f1,4,1,1,1,512,1024,1,FullyConnected,,\n")
    layers = parse_topology(text)
    assert [l.kind for l in layers] == [
        LayerKind.CONV2D, LayerKind.LSTM_CELL, LayerKind.FULLY_CONNECTED]
    assert layers[1].hidden == 512
    assert layers[2].batch == 4


def test_lower_conv_im2col():
    layer = LayerSpec("L1", LayerKind.CONV2D, 8, 8, 3, 3, 4, 8, 1)
    (g,) = lower(layer)
    assert (g.m, g.k, g.n) == (36, 36, 8)
    assert g.source_layer == "L1"


def test_lower_fully_connected():
    (g,) = lower(LayerSpec("fc", LayerKind.FULLY_CONNECTED,
                           batch=1, channels=512, num_filters=1024))
    assert (g.m, g.k, g.n) == (1, 512, 1024)


def test_lower_lstm_fused_gates():
    (g,) = lower(LayerSpec("lstm", LayerKind.LSTM_CELL,
                           batch=1, channels=512, hidden=512))
    assert (g.m, g.k, g.n) == (1, 1024, 2048)


def test_lower_explicit_gemm_passthrough():
    (g,) = lower(LayerSpec("g", LayerKind.GEMM, m=49, k=28800, n=1152))
    assert (g.m, g.k, g.n) == (49, 28800, 1152)


def test_conv_lowering_preserves_mac_work(rng):
    # M*K*N must equal the MAC count of the direct convolution
    for _ in range(50):
        fh, fw = rng.integers(1, 5, 2)
        ih = int(fh + rng.integers(0, 12))
        iw = int(fw + rng.integers(0, 12))
        ch, nf, stride = int(rng.integers(1, 9)), int(rng.integers(1, 9)), int(rng.integers(1, 3))
        layer = LayerSpec("x", LayerKind.CONV2D, ih, iw, int(fh), int(fw), ch, nf, stride)
        (g,) = lower(layer)
        h_out = (ih - fh) // stride + 1
        w_out = (iw - fw) // stride + 1
        assert g.m * g.k * g.n == h_out * w_out * fh * fw * ch * nf


def test_lowering_is_deterministic_and_order_preserving():
    text = HEADER + "A,8,8,3,3,4,8,1,\nB,6,6,3,3,2,4,1,\n"
    first = lower_all(parse_topology(text))
    second = lower_all(parse_topology(text))
    assert first == second
    assert [g.source_layer for g in first] == ["A", "B"]


def test_parse_direct_gemm_csv():
    gemms = parse_gemms("name,M,K,N\nop62,49,28800,1152\n")
    assert gemms == [GemmOp(49, 28800, 1152, "op62")]


def test_gemm_op_validates_dims():
    with pytest.raises(ValueError):
        GemmOp(0, 1, 1)

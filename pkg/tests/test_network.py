import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rtverify.config import default_weights_path
from rtverify.controllers import ExpertConfig, ReferencePath
from rtverify.flowpipe import Pose
from rtverify.network import Layer, NetworkError, NetworkSpec, nn_eval, nn_tm_propagate, output_bounds
from rtverify.taylor import TMVector
from rtverify.trainer import rollout_expert

BASELINE_MSE = 1.3285063753470108e-3


def small_net(seed=0, sizes=(3, 8, 8, 2)):
    rng = np.random.default_rng(seed)
    Ws = [rng.normal(0, 1, (o, i)) for i, o in zip(sizes, sizes[1:])]
    bs = [rng.normal(0, 0.5, o) for o in sizes[1:]]
    return NetworkSpec.from_arrays(Ws, bs)


def test_eval_examples():
    zero = NetworkSpec.from_arrays([np.zeros((4, 3)), np.zeros((2, 4))], [np.zeros(4), np.zeros(2)])
    assert np.array_equal(nn_eval(zero, [0.3, -1.0, 2.0]), [0.0, 0.0])
    ident = NetworkSpec.from_arrays([np.eye(3), np.eye(3)], [np.zeros(3), np.zeros(3)])
    assert np.array_equal(nn_eval(ident, [-1.0, 2.0, 0.0]), [0.0, 2.0, 0.0])


def test_trained_net_tracks_expert(trained_net):
    rows, ok = rollout_expert(Pose(0.5, 1.0, 0.0), ReferencePath.left_turn(), ExpertConfig())
    assert ok
    pred = nn_eval(trained_net, rows[:, 1:4])
    err = ((pred - rows[:, 4:6]) ** 2).sum(axis=1).mean()
    assert err <= 2.0 * BASELINE_MSE


def test_architecture(trained_net):
    assert trained_net.sizes == [3, 64, 64, 2]
    assert [l.activation for l in trained_net.layers] == ["relu", "relu", "identity"]


def test_dimension_and_activation_errors():
    net = small_net()
    with pytest.raises(NetworkError):
        nn_eval(net, [1.0, 2.0])
    with pytest.raises(NetworkError):
        nn_tm_propagate(net, TMVector.from_box([0, 0], [1, 1], 2))
    with pytest.raises(NetworkError):
        Layer(np.eye(2), np.zeros(2), "tanh")
    with pytest.raises(NetworkError):
        NetworkSpec.from_arrays([np.eye(3), np.eye(2)], [np.zeros(3), np.zeros(2)])
    with pytest.raises(NetworkError):
        NetworkSpec([Layer(np.eye(3), np.zeros(3), "relu")])


def test_weight_file_roundtrip_is_bit_identical(tmp_path, trained_net):
    p = tmp_path / "w.json"
    trained_net.save(p)
    again = NetworkSpec.load(p)
    for a, b in zip(trained_net.layers, again.layers):
        assert a.weight.tobytes() == b.weight.tobytes()
        assert a.bias.tobytes() == b.bias.tobytes()
    assert again.to_json() == trained_net.to_json()


def test_decimal_weights_accepted():
    doc = {
        "format": "rtverify-network/1",
        "layers": [{"activation": "identity", "weight": [[1, 0.5, -2]], "bias": [0.25]}],
    }
    net = NetworkSpec.from_json(json.dumps(doc))
    assert nn_eval(net, [1.0, 2.0, 0.5])[0] == 1.25
    doc["format"] = "other"
    with pytest.raises(NetworkError):
        NetworkSpec.from_json(json.dumps(doc))


def test_identity_network_returns_input_tm():
    net = NetworkSpec.from_arrays([np.eye(3)], [np.zeros(3)])
    tm = TMVector.from_box([0.1, 0.2, -0.3], [0.2, 0.4, 0.3], 2)
    out = nn_tm_propagate(net, tm)
    assert np.array_equal(out.coeffs, tm.coeffs)
    assert np.all(out.rem_lo == 0.0) and np.all(out.rem_hi == 0.0)


def test_point_input(trained_net):
    x = np.array([2.2, 1.3, 0.4])
    out = nn_tm_propagate(trained_net, TMVector.from_box(x, x, 2))
    lo, hi = out.range()
    y = nn_eval(trained_net, x)
    assert np.all(lo <= y) and np.all(y <= hi)
    assert np.all(out.rem_hi - out.rem_lo < 1e-6)


def test_box_around_origin_contains_samples(trained_net):
    lo, hi = output_bounds(trained_net, [-0.1] * 3, [0.1] * 3)
    pts = np.random.default_rng(3).uniform(-0.1, 0.1, (10_000, 3))
    ys = nn_eval(trained_net, pts)
    assert np.all(ys.min(axis=0) >= lo) and np.all(ys.max(axis=0) <= hi)


@pytest.mark.parametrize("symbolic", [True, False])
@pytest.mark.parametrize("bp,deg", [(1, 1), (2, 2), (3, 2), (2, 3)])
def test_soundness_on_random_boxes(symbolic, bp, deg):
    rng = np.random.default_rng(bp * 10 + deg)
    net = small_net(seed=deg)
    for _ in range(30):
        c = rng.uniform(-1, 1, 3)
        w = rng.uniform(0, 0.3, 3)
        tm = TMVector.from_box(c - w, c + w, deg)
        out = nn_tm_propagate(net, tm, bp, deg, symbolic)
        z = rng.uniform(-1, 1, (200, 3))
        x = c + w * z
        zz = np.hstack([z, np.zeros((200, 1))])
        assert out.contains(zz, nn_eval(net, x)).all()


def test_symbolic_never_wider_and_bp_tightens(trained_net):
    rng = np.random.default_rng(11)
    for _ in range(20):
        c = np.array([rng.uniform(0.5, 4.5), rng.uniform(0.5, 4.5), rng.uniform(-3, 3)])
        tm = TMVector.from_box(c - 0.02, c + 0.02, 2)
        sym = nn_tm_propagate(trained_net, tm, symbolic_remainder=True)
        naive = nn_tm_propagate(trained_net, tm, symbolic_remainder=False)
        assert np.all(sym.rem_hi - sym.rem_lo <= naive.rem_hi - naive.rem_lo)
    box = TMVector.from_box([2.0, 1.0, 0.0], [2.05, 1.05, 0.05], 2)
    w1 = nn_tm_propagate(trained_net, box, bp_order=1)
    w2 = nn_tm_propagate(trained_net, box, bp_order=2)
    assert np.all(w2.rem_hi - w2.rem_lo <= w1.rem_hi - w1.rem_lo)


@settings(max_examples=60, deadline=None)
@given(
    st.tuples(st.floats(0.3, 4.7), st.floats(0.3, 4.7), st.floats(-3.1, 3.1)),
    st.tuples(*[st.floats(0.0, 0.025)] * 3),
)
def test_symbolic_never_wider_on_small_boxes(c, hw):
    # tiny boxes leave most neurons stable, so the remainder is pure rounding slack
    net = NetworkSpec.load(default_weights_path())
    c, hw = np.array(c), np.array(hw)
    tm = TMVector.from_box(c - hw, c + hw, 2)
    sym = nn_tm_propagate(net, tm, symbolic_remainder=True)
    naive = nn_tm_propagate(net, tm, symbolic_remainder=False)
    assert np.all(sym.rem_hi - sym.rem_lo <= naive.rem_hi - naive.rem_lo)


def test_propagation_is_deterministic(trained_net):
    tm = TMVector.from_box([1.0, 1.0, 0.1], [1.04, 1.04, 0.14], 2)
    a = nn_tm_propagate(trained_net, tm)
    b = nn_tm_propagate(trained_net, tm)
    assert a.coeffs.tobytes() == b.coeffs.tobytes() and a.rem_hi.tobytes() == b.rem_hi.tobytes()

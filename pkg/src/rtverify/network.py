"""Feed-forward ReLU controller: exact evaluation, weight files, and
Taylor-model propagation.

Weight file schema (JSON, floats written with ``float.hex`` so a reload is
bit-identical)::

    {
      "format": "rtverify-network/1",
      "input_dim": 3,
      "output_dim": 2,
      "layers": [
        {"activation": "relu", "weight": [[w00, w01, ...], ...], "bias": [b0, ...]},
        ...
        {"activation": "identity", ...}
      ]
    }

``weight`` is row-major with shape (out, in). Decimal numbers are accepted
on load as well as hex strings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bernstein import relu_enclosures
from .interval import down, gamma, up
from .taylor import TMVector, _two_sum, basis, tmv_compose, tmv_truncate

FORMAT = "rtverify-network/1"
ACTIVATIONS = ("relu", "identity")


class NetworkError(ValueError):
    """Malformed network or unsupported layer."""


@dataclass
class Layer:
    weight: np.ndarray
    bias: np.ndarray
    activation: str = "relu"

    def __post_init__(self):
        self.weight = np.atleast_2d(np.asarray(self.weight, dtype=float))
        self.bias = np.asarray(self.bias, dtype=float).reshape(-1)
        if self.activation not in ACTIVATIONS:
            raise NetworkError(f"unsupported activation {self.activation!r}; only ReLU networks are verified")
        if self.bias.size != self.weight.shape[0]:
            raise NetworkError("bias length does not match weight rows")


@dataclass
class NetworkSpec:
    layers: list[Layer]

    def __post_init__(self):
        if not self.layers:
            raise NetworkError("network has no layers")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if nxt.weight.shape[1] != prev.weight.shape[0]:
                raise NetworkError("adjacent layer dimensions do not chain")
        if self.layers[-1].activation != "identity":
            raise NetworkError("final layer must be identity")

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weight.shape[0]

    @property
    def sizes(self) -> list[int]:
        return [self.input_dim] + [l.weight.shape[0] for l in self.layers]

    @classmethod
    def from_arrays(cls, weights, biases, hidden_activation: str = "relu") -> "NetworkSpec":
        acts = [hidden_activation] * (len(weights) - 1) + ["identity"]
        return cls([Layer(W, b, a) for W, b, a in zip(weights, biases, acts)])

    # -- files -----------------------------------------------------------
    def to_json(self) -> str:
        doc = {
            "format": FORMAT,
            "input_dim": self.input_dim,
            "output_dim": self.output_dim,
            "layers": [
                {
                    "activation": l.activation,
                    "weight": [[float(v).hex() for v in row] for row in l.weight],
                    "bias": [float(v).hex() for v in l.bias],
                }
                for l in self.layers
            ],
        }
        return json.dumps(doc, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "NetworkSpec":
        doc = json.loads(text)
        if doc.get("format") != FORMAT:
            raise NetworkError(f"unknown weight file format {doc.get('format')!r}")
        layers = [
            Layer(
                [[_parse_float(v) for v in row] for row in l["weight"]],
                [_parse_float(v) for v in l["bias"]],
                l["activation"],
            )
            for l in doc["layers"]
        ]
        net = cls(layers)
        if net.input_dim != doc.get("input_dim", net.input_dim) or net.output_dim != doc.get("output_dim", net.output_dim):
            raise NetworkError("declared dimensions disagree with layer shapes")
        return net

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "NetworkSpec":
        return cls.from_json(Path(path).read_text())


def _parse_float(v) -> float:
    if isinstance(v, str):
        return float.fromhex(v) if "x" in v.lower() else float(v)
    return float(v)


def nn_eval(net: NetworkSpec, x) -> np.ndarray:
    """Forward pass; ``x`` may be a single input or a batch (rows)."""
    a = np.asarray(x, dtype=float)
    if a.shape[-1] != net.input_dim:
        raise NetworkError(f"expected input of dimension {net.input_dim}, got {a.shape[-1]}")
    for layer in net.layers:
        a = a @ layer.weight.T + layer.bias
        if layer.activation == "relu":
            a = np.maximum(a, 0.0)
    return a


def _up0(x):
    """Round nonnegative radii up, leaving exact zeros at zero."""
    return np.where(x > 0.0, up(x), x)


def _is_selection(W: np.ndarray) -> bool:
    """Each row has at most one nonzero entry and it is a power of two, so
    ``W @ C`` involves no rounding."""
    nz = W != 0.0
    if np.any(nz.sum(axis=1) > 1):
        return False
    m, _ = np.frexp(np.abs(W[nz]))
    return bool(np.all(m == 0.5))


class _RemainderState:
    """Remainder radii of the current layer's Taylor models.

    Naive mode keeps one radius vector and pushes it through ``|W|`` at every
    affine map. Symbolic mode keeps a queue of (matrix, radius) pairs: each
    entry is a remainder source introduced at some layer together with the
    exact linear map carrying it to the current layer, and radii are only
    evaluated when a range is needed.
    """

    def __init__(self, rad: np.ndarray, symbolic: bool):
        self.symbolic = symbolic
        self.mats: list[np.ndarray] = []
        self.rads: list[np.ndarray] = []
        self.pending = rad.copy()
        # the naive radius is a sound bound too; symbolic mode keeps it as a
        # cap so rounding slack in the queue never makes it the wider one
        self.naive = rad.copy()

    def affine(self, W: np.ndarray):
        k = W.shape[1]
        self.naive = _up0((np.abs(W) @ self.naive) * (1.0 + gamma(k + 2)))
        if not self.symbolic:
            self.pending = self.naive
            return
        absW = np.abs(W)
        slack = np.zeros(W.shape[0])
        mats = []
        for M, r in zip(self.mats, self.rads):
            mats.append(W @ M)
            slack += absW @ (np.abs(M) @ r)
        self.mats = mats + [W]
        self.rads = self.rads + [self.pending]
        self.pending = _up0(gamma(k + 2) * slack * (1.0 + gamma(max(len(mats), 1) + 2)))

    def scale_rows(self, d: np.ndarray):
        """Multiply the transported remainder by diag(d)."""
        self.naive = _up0(np.abs(d) * self.naive)
        if not self.symbolic:
            self.pending = self.naive
            return
        slack = np.zeros(d.size)
        for i, (M, r) in enumerate(zip(self.mats, self.rads)):
            self.mats[i] = d[:, None] * M
            slack += np.abs(self.mats[i]) @ r
        self.pending = _up0(np.abs(d) * self.pending + _up0(2.0 ** -52 * slack))

    def zero_rows(self, rows: np.ndarray):
        for M in self.mats:
            M[rows] = 0.0
        self.pending[rows] = 0.0
        self.naive[rows] = 0.0

    def add(self, rad: np.ndarray):
        self.naive = _up0(self.naive + rad)
        self.pending = _up0(self.pending + rad) if self.symbolic else self.naive

    def radius(self) -> np.ndarray:
        total = self.pending.copy()
        if self.symbolic:
            for M, r in zip(self.mats, self.rads):
                total = total + np.abs(M) @ r
            total = _up0(total * (1.0 + gamma(len(self.mats) + max(r.size for r in self.rads) + 2))) if self.mats else total
            total = np.minimum(total, self.naive)
        return total


def nn_tm_propagate(
    net: NetworkSpec,
    tm_in: TMVector,
    bp_order: int = 2,
    tm_degree: int = 2,
    symbolic_remainder: bool = True,
) -> TMVector:
    """Enclose ``{net(s) : s in tm_in}`` by a Taylor model vector."""
    if tm_in.n != net.input_dim:
        raise NetworkError(f"expected {net.input_dim} input models, got {tm_in.n}")
    if bp_order < 1 or tm_degree < 1:
        raise ValueError("bp_order and tm_degree must be >= 1")
    for layer in net.layers:
        if layer.activation not in ACTIVATIONS:
            raise NetworkError(f"unsupported activation {layer.activation!r}")
    T = tmv_truncate(tm_in, tm_degree)
    h = T.h
    C = T.coeffs.copy()
    # fold remainder midpoints into the constant term; keep symmetric radii
    mid = 0.5 * (T.rem_lo + T.rem_hi)
    c0, e0 = _two_sum(C[:, 0], mid)
    rad = _up0(np.maximum(T.rem_hi - mid, mid - T.rem_lo) + np.abs(e0))
    C[:, 0] = c0
    state = _RemainderState(_up0(rad), symbolic_remainder)
    M = basis(tm_degree).size

    for layer in net.layers:
        W, b = layer.weight, layer.bias
        state.affine(W)
        Cn = W @ C
        if _is_selection(W):
            # W @ C is exact; only the bias addition can round
            Cn[:, 0], e = _two_sum(Cn[:, 0], b)
            state.add(_up0(np.abs(e)))
        else:
            Cn[:, 0] += b
            state.add(_up0(gamma(W.shape[1] + 3) * ((np.abs(W) @ np.abs(C)).sum(axis=1) + np.abs(b))))
        C = Cn
        if layer.activation == "identity":
            continue

        plo, phi = TMVector(C, 0.0, 0.0, tm_degree, h).poly_range()
        rho = state.radius()
        lo, hi = down(plo - rho), up(phi + rho)
        coeffs, err, dlo, dhi = relu_enclosures(lo, hi, bp_order, with_slopes=True)
        neg = hi <= 0.0
        pos = lo >= 0.0
        mixed = ~(neg | pos)

        d = np.ones(C.shape[0])
        d[neg] = 0.0
        local = np.zeros(C.shape[0])
        if np.any(mixed):
            g = TMVector(C[mixed], 0.0, 0.0, tm_degree, h)
            comp = tmv_compose(coeffs[mixed], g, tm_degree)
            cmid = 0.5 * (comp.rem_lo + comp.rem_hi)
            newc = comp.coeffs.copy()
            nc0, ec = _two_sum(newc[:, 0], cmid)
            crad = _up0(np.maximum(comp.rem_hi - cmid, cmid - comp.rem_lo) + np.abs(ec))
            newc[:, 0] = nc0
            C[mixed] = newc
            slope_mid = 0.5 * (dlo[mixed] + dhi[mixed])
            slope_dev = _up0(np.maximum(dhi[mixed] - slope_mid, slope_mid - dlo[mixed]))
            d[mixed] = slope_mid
            local[mixed] = _up0(_up0(slope_dev * rho[mixed]) + err[mixed] + crad)
        C[neg] = 0.0
        state.scale_rows(d)
        state.add(local)

    r = state.radius()
    return TMVector(C, -r, r, tm_degree, h)


def output_bounds(net: NetworkSpec, lo, hi, bp_order: int = 2, tm_degree: int = 2, symbolic_remainder: bool = True):
    """Interval bounds of the network over the input box [lo, hi]."""
    tm = TMVector.from_box(lo, hi, tm_degree)
    out = nn_tm_propagate(net, tm, bp_order, tm_degree, symbolic_remainder)
    return out.range()

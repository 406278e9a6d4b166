"""Expert demonstrations and supervised training of the ReLU controller."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .controllers import ExpertConfig, ReferencePath, expert_control
from .flowpipe import OMEGA_CAP, V_CAP, Pose, closed_form_unicycle, wrap_to_pi
from .network import NetworkSpec

log = logging.getLogger(__name__)

SAMPLE_DT = 0.05
DATASET_HEADER = ("traj_id", "t", "x", "y", "theta", "v", "omega")


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class StartJitter:
    """Start poses: arc length along the path in [0, along], lateral offset
    in [-lateral, lateral], heading offset from the path tangent in
    [-heading, heading]. All zero gives the path start with its tangent."""

    along: float = 0.0
    lateral: float = 0.0
    heading: float = 0.0


@dataclass
class Demonstration:
    traj_id: int
    samples: np.ndarray  # rows (t, x, y, theta, v, omega)

    @property
    def states(self) -> np.ndarray:
        return self.samples[:, 1:4]

    @property
    def labels(self) -> np.ndarray:
        return self.samples[:, 4:6]


def _start_pose(path: ReferencePath, jitter: StartJitter, rng: np.random.Generator) -> Pose:
    s = rng.uniform(0.0, jitter.along) if jitter.along > 0 else 0.0
    px, py = path.point_at(s)
    qx, qy = path.point_at(s + 0.01)
    tang = math.atan2(qy - py, qx - px)
    off = rng.uniform(-jitter.lateral, jitter.lateral) if jitter.lateral > 0 else 0.0
    dth = rng.uniform(-jitter.heading, jitter.heading) if jitter.heading > 0 else 0.0
    return Pose(px - off * math.sin(tang), py + off * math.cos(tang), wrap_to_pi(tang + dth))


def rollout_expert(start: Pose, path: ReferencePath, cfg: ExpertConfig, timeout: float = 120.0):
    """Expert trajectory sampled at 20 Hz; returns (rows, reached_goal)."""
    rows = []
    p = start
    n = int(round(timeout / SAMPLE_DT))
    for k in range(n):
        if path.in_goal(p):
            return np.array(rows).reshape(-1, 6), True
        u = expert_control(p, path, cfg)
        rows.append((k * SAMPLE_DT, p.x, p.y, wrap_to_pi(p.theta), u.v, u.omega))
        p = closed_form_unicycle(p, u, SAMPLE_DT)
    return np.array(rows).reshape(-1, 6), path.in_goal(p)


def generate_dataset(
    n_traj: int,
    start_jitter: StartJitter = StartJitter(),
    seed: int = 0,
    path: ReferencePath | None = None,
    expert: ExpertConfig = ExpertConfig(),
    timeout: float = 120.0,
) -> list[Demonstration]:
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    path = path or ReferencePath.left_turn()
    demos = []
    for i in range(n_traj):
        rng = np.random.default_rng([seed, i])
        rows, ok = rollout_expert(_start_pose(path, start_jitter, rng), path, expert, timeout)
        if not ok:
            log.warning("trajectory %d did not reach the goal within %.0f s; discarded", i, timeout)
            continue
        if len(rows):
            demos.append(Demonstration(i, rows))
    return demos


def check_labels(Y: np.ndarray) -> None:
    if np.any(np.abs(Y[:, 0]) > V_CAP) or np.any(np.abs(Y[:, 1]) > OMEGA_CAP):
        raise ValueError("training labels exceed actuator limits")


def save_dataset(demos: list[Demonstration], path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DATASET_HEADER)
    for d in demos:
        for r in d.samples:
            w.writerow([d.traj_id] + [repr(float(v)) for v in r])
    Path(path).write_text(buf.getvalue())


def load_dataset(path) -> list[Demonstration]:
    by_id: dict[int, list] = {}
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if tuple(header) != DATASET_HEADER:
            raise ValueError(f"unexpected dataset header {header}")
        for row in rd:
            by_id.setdefault(int(row[0]), []).append([float(v) for v in row[1:]])
    return [Demonstration(k, np.array(v)) for k, v in by_id.items()]


# -- MLP -------------------------------------------------------------------

def init_params(sizes, rng: np.random.Generator):
    """Uniform fan-in initialization scaled for ReLU."""
    Ws, bs = [], []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        lim = math.sqrt(6.0 / fan_in)
        Ws.append(rng.uniform(-lim, lim, (fan_out, fan_in)))
        bs.append(np.zeros(fan_out))
    return Ws, bs


def forward(Ws, bs, X):
    acts = [X]
    pre = []
    a = X
    for l, (W, b) in enumerate(zip(Ws, bs)):
        z = a @ W.T + b
        pre.append(z)
        a = z if l == len(Ws) - 1 else np.maximum(z, 0.0)
        acts.append(a)
    return pre, acts


def mse(pred: np.ndarray, Y: np.ndarray) -> float:
    """Mean over samples of the squared error norm."""
    return float(((pred - Y) ** 2).sum(axis=1).mean())


def loss_and_grads(Ws, bs, X, Y):
    pre, acts = forward(Ws, bs, X)
    n = X.shape[0]
    diff = acts[-1] - Y
    loss = float((diff ** 2).sum() / n)
    g = 2.0 * diff / n
    gW = [None] * len(Ws)
    gb = [None] * len(Ws)
    for l in range(len(Ws) - 1, -1, -1):
        if l < len(Ws) - 1:
            g = g * (pre[l] > 0.0)
        gW[l] = g.T @ acts[l]
        gb[l] = g.sum(axis=0)
        g = g @ Ws[l]
    return loss, gW, gb


def gradient_check(net: NetworkSpec, X, Y, n_weights: int = 100, eps: float = 1e-5, seed: int = 0) -> float:
    """Largest relative gap between backprop and central differences over
    ``n_weights`` randomly chosen parameters (weights and biases)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    Ws = [l.weight.copy() for l in net.layers]
    bs = [l.bias.copy() for l in net.layers]
    _, gW, gb = loss_and_grads(Ws, bs, X, Y)
    params = Ws + bs
    grads = gW + gb
    sizes = np.array([p.size for p in params])
    rng = np.random.default_rng(seed)
    flat = rng.choice(sizes.sum(), size=min(n_weights, int(sizes.sum())), replace=False)
    worst = 0.0
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    for f in flat:
        k = int(np.searchsorted(offsets, f, side="right") - 1)
        j = int(f - offsets[k])
        P = params[k].reshape(-1)
        old = P[j]
        P[j] = old + eps
        lp = loss_and_grads(Ws, bs, X, Y)[0]
        P[j] = old - eps
        lm = loss_and_grads(Ws, bs, X, Y)[0]
        P[j] = old
        num = (lp - lm) / (2.0 * eps)
        ana = grads[k].reshape(-1)[j]
        denom = max(abs(num), abs(ana), 1e-8)
        worst = max(worst, abs(num - ana) / denom)
    return worst


@dataclass
class TrainReport:
    train_loss: list[float] = field(default_factory=list)
    heldout_loss: list[float] = field(default_factory=list)
    best_epoch: int = -1
    best_heldout: float = math.inf
    n_train: int = 0
    n_heldout: int = 0

    def to_csv(self) -> str:
        lines = ["epoch,train_mse,heldout_mse"]
        for e, (a, b) in enumerate(zip(self.train_loss, self.heldout_loss)):
            lines.append(f"{e + 1},{a!r},{b!r}")
        return "\n".join(lines) + "\n"


def split_by_trajectory(demos: list[Demonstration], seed: int, heldout_frac: float = 0.1):
    ids = sorted(d.traj_id for d in demos)
    rng = np.random.default_rng([seed, 7])
    perm = rng.permutation(len(ids))
    n_val = int(round(heldout_frac * len(ids)))
    if len(ids) >= 2:
        n_val = max(1, n_val)
    val_ids = {ids[i] for i in perm[:n_val]}
    train = [d for d in demos if d.traj_id not in val_ids]
    held = [d for d in demos if d.traj_id in val_ids] or train
    return train, held


def _stack(demos):
    X = np.vstack([d.states for d in demos])
    Y = np.vstack([d.labels for d in demos])
    return X, Y


def train(
    demos: list[Demonstration],
    epochs: int = 60,
    learning_rate: float = 0.01,
    seed: int = 0,
    hidden=(64, 64),
    batch_size: int = 64,
    momentum: float = 0.9,
    decay_every: int = 20,
    heldout_frac: float = 0.1,
) -> tuple[NetworkSpec, TrainReport]:
    """Mini-batch gradient descent with momentum on the MSE; returns the
    weights with the lowest held-out loss."""
    if not demos:
        raise ValueError("empty dataset")
    tr, held = split_by_trajectory(demos, seed, heldout_frac)
    X, Y = _stack(tr)
    Xv, Yv = _stack(held)
    check_labels(Y)
    check_labels(Yv)
    rng = np.random.default_rng(seed)
    sizes = [X.shape[1], *hidden, Y.shape[1]]
    Ws, bs = init_params(sizes, rng)
    vW = [np.zeros_like(W) for W in Ws]
    vb = [np.zeros_like(b) for b in bs]
    rep = TrainReport(n_train=len(X), n_heldout=len(Xv))
    best = ([W.copy() for W in Ws], [b.copy() for b in bs])
    for ep in range(epochs):
        lr = learning_rate * 0.5 ** (ep // decay_every)
        order = rng.permutation(len(X))
        total = 0.0
        for s in range(0, len(X), batch_size):
            idx = order[s : s + batch_size]
            # overflow shows up as a non-finite loss, reported below
            with np.errstate(over="ignore", invalid="ignore"):
                loss, gW, gb = loss_and_grads(Ws, bs, X[idx], Y[idx])
            if not math.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at epoch {ep + 1}; lower the learning rate")
            total += loss * len(idx)
            for l in range(len(Ws)):
                vW[l] = momentum * vW[l] - lr * gW[l]
                vb[l] = momentum * vb[l] - lr * gb[l]
                Ws[l] += vW[l]
                bs[l] += vb[l]
        rep.train_loss.append(total / len(X))
        with np.errstate(over="ignore", invalid="ignore"):
            hv = mse(forward(Ws, bs, Xv)[1][-1], Yv)
        if not math.isfinite(hv):
            raise TrainingDiverged(f"non-finite held-out loss at epoch {ep + 1}")
        rep.heldout_loss.append(hv)
        if hv < rep.best_heldout:
            rep.best_heldout = hv
            rep.best_epoch = ep + 1
            best = ([W.copy() for W in Ws], [b.copy() for b in bs])
    return NetworkSpec.from_arrays(*best), rep


def heldout_mse(net: NetworkSpec, demos: list[Demonstration], seed: int, heldout_frac: float = 0.1) -> float:
    from .network import nn_eval

    _, held = split_by_trajectory(demos, seed, heldout_frac)
    Xv, Yv = _stack(held)
    return mse(nn_eval(net, Xv), Yv)

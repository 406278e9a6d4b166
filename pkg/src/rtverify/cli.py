"""Command-line front end: train, run, sweep-steps, sweep-orders, render."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import config as C
from .network import NetworkError, NetworkSpec
from .render import dump_sidecar, render_svg, sidecar
from .supervisor import run_episode
from .trainer import TrainingDiverged, generate_dataset, save_dataset, train

log = logging.getLogger("rtverify")

EXIT_OK = 0
EXIT_TIMEOUT = 1
EXIT_COLLISION = 2
EXIT_VERIFICATION = 3
EXIT_CONFIG = 4

STATUS_EXIT = {"goal": EXIT_OK, "timeout": EXIT_TIMEOUT, "collision": EXIT_COLLISION}

SWEEP_ROWS = (
    "Runtime",
    "Task Total Time Usage",
    "Obstacle Avoidance Controller Time Usage",
    "Obstacle Avoidance Controller Utilization",
)


def _out_dir(args) -> Path:
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _seed(args, cfg) -> int:
    return int(cfg["seed"] if args.seed is None else args.seed)


def _load_net(args) -> NetworkSpec:
    return NetworkSpec.load(args.weights or C.default_weights_path())


def cmd_train(args, cfg) -> int:
    seed = _seed(args, cfg)
    t = cfg["training"]
    demos = generate_dataset(
        t["n_traj"], C.start_jitter(cfg), seed, C.reference_path(cfg), C.expert_config(cfg)
    )
    net, rep = train(
        demos, t["epochs"], t["learning_rate"], seed, tuple(t["hidden"]), t["batch_size"], t["momentum"], t["decay_every"]
    )
    out = _out_dir(args)
    save_dataset(demos, out / "dataset.csv")
    net.save(out / "controller.json")
    (out / "training_report.csv").write_text(rep.to_csv())
    print(f"trajectories={len(demos)} samples={rep.n_train + rep.n_heldout} "
          f"best_epoch={rep.best_epoch} heldout_mse={rep.best_heldout!r}")
    return EXIT_OK


def run_one(cfg, net, seed, n_obstacles=None, steps=None, tm_degree=None, bp_order=None, deadline=None, record_boxes=True):
    scenario = C.build_scenario(cfg, seed, n_obstacles, name=f"seed {seed}")
    settings = C.verification_settings(cfg, steps=steps, tm_degree=tm_degree, bp_order=bp_order)
    ep = C.episode_settings(cfg, deadline)
    if not record_boxes:
        ep = replace(ep, record_boxes=False)
    return scenario, run_episode(scenario, net, settings, C.avoidance_config(cfg), ep)


def cmd_run(args, cfg) -> int:
    net = _load_net(args)
    seed = _seed(args, cfg)
    scenario, lg = run_one(cfg, net, seed, args.obstacles, args.steps, args.tm_degree, args.bp_order, args.deadline)
    out = _out_dir(args)
    (out / "episode.csv").write_text(lg.to_csv())
    doc = sidecar(scenario, lg)
    (out / "flowpipes.json").write_text(dump_sidecar(doc))
    rows = list(csv.DictReader(io.StringIO(lg.to_csv())))
    (out / "episode.svg").write_text(render_svg(doc, rows, cfg["render"]["box_stride"]))
    print(
        f"status={lg.status} ticks={len(lg.rows)} total_time={lg.total_time:.1f}s backup_time={lg.backup_time:.1f}s "
        f"utilization={lg.utilization:.2f}% cycles={lg.switch_cycles()} min_clearance={lg.min_clearance:.4f} "
        f"mean_runtime={lg.mean_runtime:.4f}s deadline_misses={lg.deadline_misses}"
    )
    return STATUS_EXIT[lg.status]


def _episode_seeds(args, cfg):
    n = args.episodes if args.episodes is not None else cfg["sweep"]["episodes"]
    base = _seed(args, cfg)
    return [base + i for i in range(n)]


def _n_obstacles(args, cfg):
    return cfg["sweep"]["obstacles"] if args.obstacles is None else args.obstacles


def sweep_steps(cfg, net, steps_list, seeds, n_obstacles, deadline=None):
    """Mean runtime, total time, backup time and utilization per step count."""
    table = {}
    for steps in steps_list:
        logs = [run_one(cfg, net, s, n_obstacles, steps=steps, deadline=deadline, record_boxes=False)[1] for s in seeds]
        total = sum(l.total_time for l in logs) / len(logs)
        backup = sum(l.backup_time for l in logs) / len(logs)
        runtime = sum(l.mean_runtime for l in logs) / len(logs)
        table[steps] = (runtime, total, backup, 100.0 * backup / total if total else 0.0)
    return table


def sweep_orders(cfg, net, tm_degrees, bp_orders, seeds, n_obstacles, deadline=None):
    """Mean verification runtime at 10 steps for each (TM degree, BP order)."""
    rows = []
    budget = float(deadline or cfg["verification"]["deadline"])
    for d in tm_degrees:
        for b in bp_orders:
            logs = [
                run_one(cfg, net, s, n_obstacles, steps=10, tm_degree=d, bp_order=b, deadline=deadline, record_boxes=False)[1]
                for s in seeds
            ]
            rt = sum(l.mean_runtime for l in logs) / len(logs)
            rows.append((d, b, rt, rt < budget))
    return rows


def cmd_sweep_steps(args, cfg) -> int:
    net = _load_net(args)
    steps_list = [args.steps] if args.steps else list(cfg["sweep"]["steps"])
    table = sweep_steps(cfg, net, steps_list, _episode_seeds(args, cfg), _n_obstacles(args, cfg), args.deadline)
    lines = ["metric," + ",".join(str(s) for s in steps_list)]
    for i, name in enumerate(SWEEP_ROWS):
        fmt = "{:.6f}" if i == 0 else "{:.2f}"
        lines.append(name + "," + ",".join(fmt.format(table[s][i]) for s in steps_list))
    text = "\n".join(lines) + "\n"
    (_out_dir(args) / "sweep_steps.csv").write_text(text)
    print(text, end="")
    return EXIT_OK


def cmd_sweep_orders(args, cfg) -> int:
    net = _load_net(args)
    degs = [args.tm_degree] if args.tm_degree else list(cfg["sweep"]["tm_degrees"])
    bps = [args.bp_order] if args.bp_order else list(cfg["sweep"]["bp_orders"])
    rows = sweep_orders(cfg, net, degs, bps, _episode_seeds(args, cfg), _n_obstacles(args, cfg), args.deadline)
    lines = ["tm_degree,bp_order,mean_runtime_s,valid"]
    lines += [f"{d},{b},{rt:.6f},{int(ok)}" for d, b, rt, ok in rows]
    text = "\n".join(lines) + "\n"
    (_out_dir(args) / "sweep_orders.csv").write_text(text)
    print(text, end="")
    return EXIT_OK


def cmd_render(args, cfg) -> int:
    src = Path(args.run_dir)
    doc = json.loads((src / "flowpipes.json").read_text())
    with open(src / "episode.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = Path(args.out) if args.out else src / "episode.svg"
    out.write_text(render_svg(doc, rows, args.box_stride or cfg["render"]["box_stride"]))
    print(out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rtverify", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, weights=True):
        p.add_argument("--config", help="YAML configuration file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out-dir", default="out")
        if weights:
            p.add_argument("--weights", help="controller weights (default: bundled)")
            p.add_argument("--deadline", type=float, help="verification deadline in seconds (default 0.2)")
            p.add_argument("--obstacles", type=int, help="number of random obstacles")

    p = sub.add_parser("train", help="generate demonstrations and train the controller")
    common(p, weights=False)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("run", help="run one closed-loop episode")
    common(p)
    p.add_argument("--steps", type=int)
    p.add_argument("--tm-degree", type=int)
    p.add_argument("--bp-order", type=int)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("sweep-steps", help="verification steps vs runtime table")
    common(p)
    p.add_argument("--steps", type=int, help="single step count instead of the configured list")
    p.add_argument("--episodes", type=int)
    p.set_defaults(fn=cmd_sweep_steps)

    p = sub.add_parser("sweep-orders", help="TM degree x BP order runtime table")
    common(p)
    p.add_argument("--tm-degree", type=int)
    p.add_argument("--bp-order", type=int)
    p.add_argument("--episodes", type=int)
    p.set_defaults(fn=cmd_sweep_orders)

    p = sub.add_parser("render", help="re-render an episode SVG from a run directory")
    p.add_argument("run_dir")
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--box-stride", type=int)
    p.set_defaults(fn=cmd_render)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = C.load_config(args.config)
    except C.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.fn(args, cfg)
    except C.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (NetworkError, OSError) as e:
        print(f"verification error: {e}", file=sys.stderr)
        return EXIT_VERIFICATION
    except TrainingDiverged as e:
        print(f"training diverged: {e}", file=sys.stderr)
        return EXIT_VERIFICATION


if __name__ == "__main__":
    sys.exit(main())

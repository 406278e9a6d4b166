"""SVG rendering of an episode: walls, obstacles, trajectory and per-tick
reachable-set boxes (green while the learned controller drives, red in
backup mode)."""

from __future__ import annotations

import json
from xml.sax.saxutils import quoteattr

from .supervisor import NN

SCALE = 100.0  # pixels per meter
PAD = 20.0
COLORS = {NN: "#2ca02c", "BACKUP": "#d62728"}


def _xy(x, y, size):
    return PAD + SCALE * x, PAD + SCALE * (size - y)


def render_svg(doc: dict, rows: list[dict], box_stride: int = 5) -> str:
    """``doc`` is the flowpipe sidecar (size, obstacles, path, boxes);
    ``rows`` are episode log rows with at least x, y and mode."""
    size = float(doc["size"])
    W = H = 2 * PAD + SCALE * size
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.0f}" height="{H:.0f}" viewBox="0 0 {W:.0f} {H:.0f}">',
        f'<rect x="{PAD}" y="{PAD}" width="{SCALE * size:.1f}" height="{SCALE * size:.1f}" fill="white" stroke="black" stroke-width="3"/>',
    ]
    path = doc.get("path") or []
    if path:
        pts = " ".join("{:.1f},{:.1f}".format(*_xy(x, y, size)) for x, y in path[::5] + [path[-1]])
        out.append(f'<polyline points="{pts}" fill="none" stroke="#999" stroke-dasharray="6 4" stroke-width="1"/>')
    goal_y = doc.get("goal_y")
    if goal_y is not None:
        gx, gy = _xy(0.0, size, size)
        out.append(
            f'<rect x="{gx:.1f}" y="{gy:.1f}" width="{SCALE * size:.1f}" height="{SCALE * (size - goal_y):.1f}" fill="#1f77b4" fill-opacity="0.08"/>'
        )
    for k, boxes in enumerate(doc.get("boxes", [])):
        if box_stride > 1 and k % box_stride:
            continue
        mode = rows[k]["mode"] if k < len(rows) else NN
        col = COLORS.get(mode, "#555")
        for xlo, xhi, ylo, yhi in boxes:
            x0, y0 = _xy(xlo, yhi, size)
            out.append(
                f'<rect x="{x0:.2f}" y="{y0:.2f}" width="{SCALE * (xhi - xlo):.2f}" height="{SCALE * (yhi - ylo):.2f}" '
                f'fill="{col}" fill-opacity="0.15" stroke="{col}" stroke-opacity="0.4" stroke-width="0.3"/>'
            )
    for ob in doc.get("obstacles", []):
        cx, cy = _xy(ob[0], ob[1], size)
        out.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{SCALE * ob[2]:.2f}" fill="#444" fill-opacity="0.8"/>')
    for a, b in zip(rows, rows[1:]):
        x0, y0 = _xy(float(a["x"]), float(a["y"]), size)
        x1, y1 = _xy(float(b["x"]), float(b["y"]), size)
        col = COLORS.get(a["mode"], "#555")
        out.append(f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" stroke="{col}" stroke-width="3"/>')
    title = doc.get("title")
    if title:
        out.append(f"<title>{_escape(title)}</title>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(s: str) -> str:
    return quoteattr(s)[1:-1]


def sidecar(scenario, log) -> dict:
    return {
        "size": scenario.world.size,
        "goal_y": scenario.path.goal_y,
        "obstacles": [[o.x, o.y, o.radius] for o in scenario.world.obstacles],
        "path": scenario.path.points.tolist(),
        "status": log.status,
        "boxes": [[list(map(float, b)) for b in boxes] for boxes in log.boxes],
        "title": f"{scenario.name} ({log.status})",
    }


def dump_sidecar(doc: dict) -> str:
    return json.dumps(doc, separators=(",", ":")) + "\n"

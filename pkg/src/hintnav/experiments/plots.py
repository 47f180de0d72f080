"""Dependency-free SVG/CSV artifact emission for runs."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..sim import FREE, OBSTACLE, SLOW, WorldSpec

_COLORS = {FREE: "#f4f2ec", SLOW: "#cfe3bf", OBSTACLE: "#5b5b5b"}


def _svg_header(w_px: float, h_px: float) -> str:
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{w_px:.0f}" '
            f'height="{h_px:.0f}" viewBox="0 0 {w_px:.0f} {h_px:.0f}">')


def render_overhead_svg(world: WorldSpec, trace=None, graph=None,
                        goal_xy=None, scale: float = 3.0,
                        cell_m: float = 2.0) -> str:
    """World raster + trails + graph + driven path as one SVG document.

    y is flipped so the world's +y points up on screen.
    """
    size_x, size_y = world.bounds
    W, H = size_x * scale, size_y * scale

    def pt(x, y):
        return x * scale, (size_y - y) * scale

    parts = [_svg_header(W, H)]
    k = int(round(cell_m / world.resolution))
    coarse = world.traversability[::k, ::k]
    for r in range(coarse.shape[0]):
        for c in range(coarse.shape[1]):
            code = int(coarse[r, c])
            if code == FREE:
                continue
            x, y = pt(c * cell_m, r * cell_m + cell_m)
            parts.append(f'<rect x="{x:.1f}" y="{y:.1f}" '
                         f'width="{cell_m * scale:.1f}" height="{cell_m * scale:.1f}" '
                         f'fill="{_COLORS[code]}"/>')
    parts.insert(1, f'<rect width="{W:.0f}" height="{H:.0f}" fill="{_COLORS[FREE]}"/>')
    for poly in world.trails:
        pts = " ".join("%.1f,%.1f" % pt(x, y) for x, y in np.asarray(poly))
        parts.append(f'<polyline points="{pts}" fill="none" '
                     'stroke="#7d5a34" stroke-width="2" stroke-dasharray="6,4"/>')
    if graph is not None:
        for a, b, _w in graph.edges():
            xa, ya = pt(*graph.nodes[a].gps)
            xb, yb = pt(*graph.nodes[b].gps)
            parts.append(f'<line x1="{xa:.1f}" y1="{ya:.1f}" x2="{xb:.1f}" '
                         f'y2="{yb:.1f}" stroke="#8da0c8" stroke-width="1"/>')
        for node in graph.nodes.values():
            x, y = pt(*node.gps)
            parts.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="3" '
                         'fill="#3b5bb5"/>')
    if trace is not None and trace.tick_count:
        poses = trace.poses()
        pts = " ".join("%.1f,%.1f" % pt(x, y) for x, y in poses[:, :2])
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#c03030" '
                     'stroke-width="1.5"/>')
        sx, sy = pt(*trace.start_pose().xy)
        parts.append(f'<circle cx="{sx:.1f}" cy="{sy:.1f}" r="5" fill="#2a8f2a"/>')
    if goal_xy is not None:
        gx, gy = pt(goal_xy[0], goal_xy[1])
        parts.append(f'<circle cx="{gx:.1f}" cy="{gy:.1f}" r="6" fill="none" '
                     'stroke="#c0a020" stroke-width="3"/>')
    parts.append("</svg>")
    return "\n".join(parts)


def f_timeline_rows(trace) -> list[tuple]:
    """(expansion index, tick, open-set size, f_min, f_max, popped f)."""
    rows = []
    snaps = trace.of_type("openset")
    pops = trace.of_type("pop")
    for k, (snap, pop) in enumerate(zip(snaps, pops)):
        finite = [e[2] for e in snap["entries"] if np.isfinite(e[2])]
        rows.append((k, snap["tick"], len(snap["entries"]),
                     min(finite) if finite else float("inf"),
                     max(finite) if finite else float("inf"),
                     pop["f"]))
    return rows


def render_timeline_svg(rows, width=640.0, height=240.0) -> str:
    parts = [_svg_header(width, height)]
    parts.append(f'<rect width="{width:.0f}" height="{height:.0f}" fill="#ffffff"/>')
    finite = [r for r in rows if np.isfinite(r[5])]
    if finite:
        fmax = max(r[5] for r in finite) or 1.0
        n = len(rows)
        pts = " ".join(
            "%.1f,%.1f" % (10 + k * (width - 20) / max(n - 1, 1),
                           height - 10 - (r[5] / fmax) * (height - 20))
            for k, r in enumerate(rows) if np.isfinite(r[5]))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#c03030" '
                     'stroke-width="1.5"/>')
    parts.append("</svg>")
    return "\n".join(parts)


def emit_plots(trace, world, graph, out_dir, heuristic_model=None,
               goal_xy=None) -> list[Path]:
    """Overhead path plot, f-value timeline, optional heuristic heatmap."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    svg = render_overhead_svg(world, trace, graph, goal_xy)
    p = out_dir / "overhead_path.svg"
    p.write_text(svg)
    written.append(p)

    rows = f_timeline_rows(trace)
    p = out_dir / "f_timeline.csv"
    with p.open("w") as f:
        f.write("expansion,tick,open_set,f_min,f_max,f_popped\n")
        for r in rows:
            f.write(",".join(repr(v) if isinstance(v, float) else str(v)
                             for v in r) + "\n")
    written.append(p)
    p = out_dir / "f_timeline.svg"
    p.write_text(render_timeline_svg(rows))
    written.append(p)

    if heuristic_model is not None and goal_xy is not None and trace.tick_count:
        from ..models import export_cost_heatmap
        start = trace.start_pose()
        p = out_dir / "heuristic_heatmap.csv"
        export_cost_heatmap(heuristic_model, world, None,
                            np.array([start.x, start.y]), goal_xy, p)
        written.append(p)
    return written

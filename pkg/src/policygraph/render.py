"""Standalone SVG policy maps.

One glyph per valid state: a flow arrow toward its successor, a wall-hit arrow
when the greedy move was blocked, a loop when the state is a fixed point with
no recorded action, and a star at the goal. Non-goal attractor states get an
orange marker underneath their glyph.
"""
from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

from .env import ACTIONS, GridSpec, State
from .metrics import GoalRecord
from .policy_graph import AttractorKind, GraphDecomposition, SuccessorMap

CELL = 40.0
MARGIN = 12.0
CAPTION_H = 28.0

FLOW = "#1f77b4"
WALL_HIT = "#8c564b"
GOAL = "#d62728"
ATTRACTOR = "#ff7f0e"
WALL = "#4d4d4d"
GRIDLINE = "#cccccc"


def _f(v: float) -> str:
    return f"{v:.9f}"


def _center(s: State) -> tuple[float, float]:
    return MARGIN + (s[0] + 0.5) * CELL, MARGIN + (s[1] + 0.5) * CELL


def _arrow(x0: float, y0: float, x1: float, y1: float, color: str, cls: str, state: State) -> str:
    ang = math.atan2(y1 - y0, x1 - x0)
    head = 0.18 * CELL
    spread = math.radians(28)
    hx1, hy1 = x1 - head * math.cos(ang - spread), y1 - head * math.sin(ang - spread)
    hx2, hy2 = x1 - head * math.cos(ang + spread), y1 - head * math.sin(ang + spread)
    d = (
        f"M {_f(x0)} {_f(y0)} L {_f(x1)} {_f(y1)} "
        f"M {_f(hx1)} {_f(hy1)} L {_f(x1)} {_f(y1)} L {_f(hx2)} {_f(hy2)}"
    )
    return (
        f'<path class="{cls}" data-state="{state[0]},{state[1]}" d="{d}" '
        f'stroke="{color}" stroke-width="2" fill="none" stroke-linecap="round"/>'
    )


def _loop(s: State) -> str:
    cx, cy = _center(s)
    r = 0.22 * CELL
    # open circle with a small arrowhead at the gap
    x0, y0 = cx + r * math.cos(math.radians(-60)), cy + r * math.sin(math.radians(-60))
    x1, y1 = cx + r * math.cos(math.radians(240)), cy + r * math.sin(math.radians(240))
    d = f"M {_f(x0)} {_f(y0)} A {_f(r)} {_f(r)} 0 1 1 {_f(x1)} {_f(y1)} l {_f(0.12 * CELL)} {_f(-0.02 * CELL)}"
    return (
        f'<path class="selfloop" data-state="{s[0]},{s[1]}" d="{d}" '
        f'stroke="{FLOW}" stroke-width="2" fill="none"/>'
    )


def _star(s: State) -> str:
    cx, cy = _center(s)
    outer, inner = 0.40 * CELL, 0.17 * CELL
    pts = []
    for k in range(10):
        r = outer if k % 2 == 0 else inner
        a = math.radians(-90 + 36 * k)
        pts.append(f"{_f(cx + r * math.cos(a))},{_f(cy + r * math.sin(a))}")
    return f'<polygon class="goal" data-state="{s[0]},{s[1]}" points="{" ".join(pts)}" fill="{GOAL}"/>'


def render_policy_map(
    m: SuccessorMap, d: GraphDecomposition, r: GoalRecord, grid: GridSpec, title: str | None = None
) -> str:
    width = 2 * MARGIN + grid.width * CELL
    height = 2 * MARGIN + grid.height * CELL + CAPTION_H
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" height="{_f(height)}" '
        f'viewBox="0 0 {_f(width)} {_f(height)}">',
    ]
    if title:
        out.append(f"<title>{escape(title)}</title>")
    out.append(f'<rect x="0" y="0" width="{_f(width)}" height="{_f(height)}" fill="white"/>')

    for y in range(grid.height):
        for x in range(grid.width):
            fill = WALL if State(x, y) in grid.walls else "none"
            cls = "wall" if fill == WALL else "cell"
            out.append(
                f'<rect class="{cls}" x="{_f(MARGIN + x * CELL)}" y="{_f(MARGIN + y * CELL)}" '
                f'width="{_f(CELL)}" height="{_f(CELL)}" fill="{fill}" stroke="{GRIDLINE}"/>'
            )

    for att in d.attractors:
        if att.kind is AttractorKind.GOAL:
            continue
        for s in att.states:
            cx, cy = _center(s)
            out.append(
                f'<circle class="attractor" cx="{_f(cx)}" cy="{_f(cy)}" r="{_f(0.32 * CELL)}" '
                f'fill="{ATTRACTOR}" fill-opacity="0.55"/>'
            )

    gi = m.goal_index
    for i, s in enumerate(m.states):
        j = m.succ[i]
        if i == gi:
            out.append(_star(s))
            continue
        if j != i:
            x0, y0 = _center(s)
            x1, y1 = _center(m.states[j])
            # stop short of the neighbouring centre
            out.append(_arrow(x0, y0, x0 + 0.7 * (x1 - x0), y0 + 0.7 * (y1 - y0), FLOW, "flow", s))
            continue
        a = None if m.actions is None else m.actions[i]
        if a is None or a < 0:
            out.append(_loop(s))
            continue
        dx, dy = ACTIONS[a].delta
        x0, y0 = _center(s)
        out.append(_arrow(x0, y0, x0 + 0.45 * CELL * dx, y0 + 0.45 * CELL * dy, WALL_HIT, "wallhit", s))

    caption = f"S={r.succ_H:.3f} Sup={r.lgs_count} C={r.comp_basin:.3f} F={r.fragmentation:.3f}"
    out.append(
        f'<text class="caption" x="{_f(width / 2)}" y="{_f(height - CAPTION_H / 2 + 4)}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="13">{escape(caption)}</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def map_filename(condition: str, seed: int, goal: State) -> str:
    return f"{condition}_s{seed}_g{goal[0]}_{goal[1]}.svg"


def write_policy_map(path: str | Path, svg: str) -> None:
    Path(path).write_text(svg, encoding="utf-8")

"""Deterministic SVG output for generator trees and their scaffolds.

Every drawn element is a ``<path>``: branches as solid polylines, scaffold
chords dashed, branchpoint markers as filled circles written with arc commands.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compiler import Scaffold
from .integrate import realize
from .profiles import eval_profile
from .tree import GeneratorTree, decimate_indices

MARGIN = 0.05
MIN_STROKE_FRACTION = 0.05


@dataclass(frozen=True)
class RenderOptions:
    width: int = 800
    height: int = 800
    stroke_width: float = 2.0
    max_points: int = 64
    precision: int = 3
    markers: bool = False
    marker_radius: float = 2.5
    branch_color: str = "#2f4f2f"
    scaffold_color: str = "#b03030"
    marker_color: str = "#000000"


def _fmt(v: float, precision: int) -> str:
    s = f"{v:.{precision}f}"
    return s[1:] if s.startswith("-") and float(s) == 0.0 else s


class _Viewport:
    """Maps plane coordinates into the SVG box, uniform scale, y pointing up."""

    def __init__(self, points: np.ndarray, width: int, height: int):
        lo, hi = points.min(axis=0), points.max(axis=0)
        ext = np.maximum(hi - lo, 1e-12)
        inner_w, inner_h = width * (1 - 2 * MARGIN), height * (1 - 2 * MARGIN)
        self.scale = float(min(inner_w / ext[0], inner_h / ext[1]))
        mid = 0.5 * (lo + hi)
        self.cx, self.cy = 0.5 * width, 0.5 * height
        self.mx, self.my = float(mid[0]), float(mid[1])

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        x = self.cx + (pts[:, 0] - self.mx) * self.scale
        y = self.cy - (pts[:, 1] - self.my) * self.scale
        return np.column_stack([x, y])


def _polyline(pts: np.ndarray, prec: int) -> str:
    head = f"M{_fmt(pts[0, 0], prec)} {_fmt(pts[0, 1], prec)}"
    return head + "".join(f" L{_fmt(x, prec)} {_fmt(y, prec)}" for x, y in pts[1:])


def _circle(c, r: float, prec: int) -> str:
    x, y = c
    rs = _fmt(r, prec)
    return (f"M{_fmt(x - r, prec)} {_fmt(y, prec)} a{rs} {rs} 0 1 0 {_fmt(2 * r, prec)} 0 "
            f"a{rs} {rs} 0 1 0 {_fmt(-2 * r, prec)} 0 Z")


def _start_speed(b) -> float:
    off = b.field.phase_offset(b.init, b.span[0])
    return float(eval_profile(b.field.rho, b.span[0] + off))


def branch_polylines(gtree: GeneratorTree, max_points: int = 64) -> list[np.ndarray]:
    out = []
    for b in gtree.branches:
        pts = realize(b.trajectory)
        out.append(pts[decimate_indices(len(pts), max_points)])
    return out


def branchpoints(gtree: GeneratorTree) -> np.ndarray:
    """End positions of every branch that spawns children."""
    pts = [b.end.position for b in gtree.branches if gtree.children(b.id)]
    return np.array(pts, dtype=float).reshape(-1, 2)


def render_svg(gtree: GeneratorTree, scaffold: Scaffold | None = None,
               options: RenderOptions | None = None) -> str:
    """SVG document; identical inputs give identical bytes."""
    opt = options or RenderOptions()
    prec = opt.precision
    lines = branch_polylines(gtree, opt.max_points)
    marks = branchpoints(gtree) if opt.markers else np.zeros((0, 2))
    allpts = [np.vstack(lines), marks]
    if scaffold is not None:
        allpts.append(scaffold.positions)
    view = _Viewport(np.vstack(allpts), opt.width, opt.height)

    root_speed = _start_speed(gtree.root)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{opt.width}" height="{opt.height}" '
        f'viewBox="0 0 {opt.width} {opt.height}">',
        f'<g fill="none" stroke="{opt.branch_color}" stroke-linecap="round" stroke-linejoin="round">',
    ]
    for b, pts in zip(gtree.branches, lines):
        rel = _start_speed(b) / root_speed if root_speed > 0 else 1.0
        w = opt.stroke_width * max(rel, MIN_STROKE_FRACTION)
        out.append(f'<path d="{_polyline(view(pts), prec)}" stroke-width="{_fmt(w, prec)}"/>')
    out.append("</g>")
    if scaffold is not None:
        out.append(f'<g fill="none" stroke="{opt.scaffold_color}" stroke-width="1" stroke-dasharray="4 3">')
        for p, v in scaffold.edges:
            seg = view(scaffold.positions[[p, v]])
            out.append(f'<path d="{_polyline(seg, prec)}"/>')
        out.append("</g>")
    if len(marks):
        out.append(f'<g fill="{opt.marker_color}" stroke="none">')
        for c in view(marks):
            out.append(f'<path d="{_circle(c, opt.marker_radius, prec)}"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"

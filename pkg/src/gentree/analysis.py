"""Endpoint sets, Hausdorff distances and parameter recovery from scaffolds."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .compiler import Scaffold
from .errors import DegenerateEdge, DepthUnavailable, EmptySet
from .frontend import SimilarityMap, attractor_points
from .geometry import PointSet, line_intersection, signed_angle
from .tree import GeneratorTree

__all__ = [
    "PointSet", "endpoint_set", "hausdorff", "CanopyReport", "canopy_equivalence_report",
    "extract_scaffold_tangent", "RecoveryRow", "RecoveryReport", "recover_parameters",
]

_CHUNK = 1 << 22    # pairwise distances evaluated per block


def endpoint_set(gtree: GeneratorTree, k: int, dedup: bool = True) -> PointSet:
    """Endpoints of all depth-``k`` branches."""
    if not 0 <= k <= gtree.depth:
        raise DepthUnavailable(f"depth {k} not present (tree depth {gtree.depth})")
    pts = [b.end.position for b in gtree.at_depth(k)]
    return PointSet(pts, label=f"E_{k}", dedup=dedup)


def _as_points(p) -> np.ndarray:
    pts = p.points if isinstance(p, PointSet) else np.asarray(p, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise EmptySet("Hausdorff distance needs non-empty sets")
    return pts


def _nearest(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Distance from each row of ``p`` to its nearest row of ``q``."""
    out = np.empty(len(p))
    rows = max(1, _CHUNK // len(q))
    for i in range(0, len(p), rows):
        blk = p[i:i + rows]
        dx = blk[:, None, 0] - q[None, :, 0]
        dy = blk[:, None, 1] - q[None, :, 1]
        out[i:i + rows] = np.sqrt(dx * dx + dy * dy).min(axis=1)
    return out


def _nearest_grid(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Same values as :func:`_nearest`, searching ``q`` bucketed on a uniform grid.

    Rings of cells are visited outward until the best candidate is closer than
    any unvisited cell could be; distances use the same arithmetic as the
    pairwise path so the minima agree bit for bit.
    """
    lo = q.min(axis=0)
    extent = float(np.max(q.max(axis=0) - lo))
    cell = extent / math.sqrt(len(q)) if extent > 0 else 1.0
    keys = np.floor((q - lo) / cell).astype(np.int64)
    buckets: dict[tuple[int, int], list[int]] = {}
    for idx, (a, b) in enumerate(keys.tolist()):
        buckets.setdefault((a, b), []).append(idx)
    grid = {k: q[v] for k, v in buckets.items()}
    kmax = keys.max(axis=0)
    out = np.empty(len(p))
    for j, pt in enumerate(p):
        ci, cj = (int(v) for v in np.floor((pt - lo) / cell))
        if not (-2 <= ci <= kmax[0] + 2 and -2 <= cj <= kmax[1] + 2):
            # far from the grid: rings would mostly be empty
            dx = pt[0] - q[:, 0]
            dy = pt[1] - q[:, 1]
            out[j] = np.sqrt(dx * dx + dy * dy).min()
            continue
        best = math.inf
        r = 0
        while True:
            for a in range(ci - r, ci + r + 1):
                for b in range(cj - r, cj + r + 1):
                    if max(abs(a - ci), abs(b - cj)) != r:
                        continue
                    blk = grid.get((a, b))
                    if blk is None:
                        continue
                    dx = pt[0] - blk[:, 0]
                    dy = pt[1] - blk[:, 1]
                    best = min(best, float(np.sqrt(dx * dx + dy * dy).min()))
            # every point outside the visited square is at least r*cell away
            if best <= r * cell:
                break
            if ci - r <= 0 and cj - r <= 0 and ci + r >= kmax[0] and cj + r >= kmax[1]:
                break
            r += 1
        out[j] = best
    return out


def hausdorff(p, q, accelerate: bool = False) -> float:
    """Symmetric Hausdorff distance between two finite planar sets."""
    a, b = _as_points(p), _as_points(q)
    near = _nearest_grid if accelerate else _nearest
    return float(max(near(a, b).max(), near(b, a).max()))


# -- canopy / attractor ------------------------------------------------------------

@dataclass(frozen=True)
class CanopyReport:
    rows: tuple[tuple[int, float], ...]
    fitted_ratio: float
    k_ref: int

    @property
    def distances(self) -> list[float]:
        return [d for _, d in self.rows]

    def monotone(self) -> bool:
        d = self.distances
        return all(b < a for a, b in zip(d, d[1:]))

    def to_dict(self) -> dict:
        return {"k_ref": self.k_ref, "fitted_ratio": self.fitted_ratio,
                "rows": [{"k": k, "hausdorff": d} for k, d in self.rows]}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "hausdorff", "fitted_ratio"])
        for k, d in self.rows:
            w.writerow([k, repr(d), repr(self.fitted_ratio)])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def fitted_decay_ratio(ks: Sequence[int], ds: Sequence[float]) -> float:
    """``exp`` of the least-squares slope of ``log d`` against ``k``; NaN if under-determined."""
    pairs = [(k, d) for k, d in zip(ks, ds) if d > 0]
    if len({k for k, _ in pairs}) < 2:
        return math.nan
    k, d = np.array(pairs).T
    slope = np.polyfit(k, np.log(d), 1)[0]
    return float(math.exp(slope))


def canopy_equivalence_report(gtree: GeneratorTree, maps: Sequence[SimilarityMap],
                              k_range: Sequence[int], k_ref: int = 12,
                              root: tuple[float, float] | None = None,
                              accelerate: bool = True) -> CanopyReport:
    """Distances ``d_H(E_k, A_{k_ref})`` for each ``k`` and their fitted decay ratio.

    ``root`` defaults to the endpoint of the trunk, which a compiled IFS tree
    places on the discrete root.
    """
    ks = [int(k) for k in k_range]
    if not ks:
        raise ValueError("k_range is empty")
    if len(ks) > 1 and k_ref < max(ks) + 4:
        raise ValueError("reference depth must exceed the largest k by at least 4")
    if root is None:
        root = gtree.root.end.position
    ref = attractor_points(maps, k_ref, root)
    rows = tuple((k, hausdorff(endpoint_set(gtree, k), ref, accelerate)) for k in ks)
    return CanopyReport(rows, fitted_decay_ratio(ks, [d for _, d in rows]), k_ref)


# -- parameter recovery ------------------------------------------------------------

def extract_scaffold_tangent(gtree: GeneratorTree) -> Scaffold:
    """Scaffold whose nodes are the corners of each branch's tangent polygon.

    The corner of a branch is where its start tangent line meets its end tangent
    line (the endpoint when they are parallel). For self-similar generator trees
    these corners form a discrete similarity tree.
    """
    root = gtree.root.trajectory.start
    positions = [(root.x, root.y)]
    parents: list[int | None] = [None]
    depths = [0]
    for b in gtree.branches:
        s, e = b.trajectory.start, b.end
        c = line_intersection((s.x, s.y), (math.cos(s.theta), math.sin(s.theta)),
                              (e.x, e.y), (math.cos(e.theta), math.sin(e.theta)))
        positions.append(c if c is not None else (e.x, e.y))
        parents.append(0 if b.parent_id is None else b.parent_id + 1)
        depths.append(b.depth + 1)
    return Scaffold(positions, parents, depths, [None] + [b.id for b in gtree.branches],
                    [None] + [b.rule for b in gtree.branches])


@dataclass(frozen=True)
class RecoveryRow:
    g: int
    lambda_hat_mean: float
    theta_hat_abs_mean: float
    theta_hat_mean: float
    sample_count: int
    max_deviation: float


@dataclass(frozen=True)
class RecoveryReport:
    rows: tuple[RecoveryRow, ...]

    def row(self, g: int) -> RecoveryRow:
        for r in self.rows:
            if r.g == g:
                return r
        raise KeyError(g)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["g", "lambda_hat_mean", "theta_hat_abs_mean", "max_dev"])
        for r in self.rows:
            w.writerow([r.g, repr(r.lambda_hat_mean), repr(r.theta_hat_abs_mean), repr(r.max_deviation)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"rows": [{"g": r.g, "lambda_hat_mean": r.lambda_hat_mean,
                          "theta_hat_abs_mean": r.theta_hat_abs_mean, "theta_hat_mean": r.theta_hat_mean,
                          "sample_count": r.sample_count, "max_dev": r.max_deviation} for r in self.rows]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def recover_parameters(scaffold: Scaffold) -> RecoveryReport:
    """Per-generation chord ratios and turning angles between parent and child edges.

    Generation ``g`` is the depth of the edge's branch (trunk is 0); rows cover
    every ``g >= 2`` present in the scaffold.
    """
    by_gen: dict[int, list[tuple[float, float]]] = {}
    for v in range(1, len(scaffold)):
        g = scaffold.depths[v] - 1
        if g < 2:
            continue
        u = scaffold.parents[v]
        e, e_par = scaffold.edge_vector(v), scaffold.edge_vector(u)
        le, lp = math.hypot(*e), math.hypot(*e_par)
        if le == 0.0 or lp == 0.0:
            raise DegenerateEdge(f"zero-length scaffold edge at node {v if le == 0.0 else u}")
        by_gen.setdefault(g, []).append((le / lp, signed_angle(e_par, e)))
    if not by_gen:
        raise DepthUnavailable("recovery needs edges of generation 2 or deeper")
    rows = []
    for g in sorted(by_gen):
        lam = np.array([a for a, _ in by_gen[g]])
        th = np.array([b for _, b in by_gen[g]])
        lam_mean, abs_mean = float(lam.mean()), float(np.abs(th).mean())
        dev = float(max(np.abs(lam - lam_mean).max(), np.abs(np.abs(th) - abs_mean).max()))
        rows.append(RecoveryRow(g, lam_mean, abs_mean, float(th.mean()), len(lam), dev))
    return RecoveryReport(tuple(rows))

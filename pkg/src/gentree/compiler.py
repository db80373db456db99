"""Compile embedded discrete trees into generator trees and certify the result.

Every discrete edge ``u -> v`` becomes one branch. The branch starts from the
state its parent branch ended in and is integrated in closed form so that it
lands on ``p(v)``. The induced scaffold (branch start points plus endpoints,
joined by chords) is then compared to the discrete tree node by node.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DegenerateEdge, IrregularCurve, NoSolution, NotIsomorphic, UnsupportedFamily
from .frontend import DiscreteTree, EdgeLabel
from .integrate import (
    GeneratorField, GeneratorState, PhaseMode, STRAIGHT_KAPPA, integrate_closed_form,
)
from .profiles import AnalyticProfile, Constant, Exponential, Scaled
from .tree import Branch, GeneratorTree, InheritanceRule

ENDPOINT_TOL = 1e-9
BISECT_TOL = 1e-12
BISECT_MAX_ITER = 200
TURN_MARGIN = 1e-9
DEGENERATE_TOL = 1e-12
DEFAULT_COMPILE_STEP = 1.0 / 32


# -- analytic curve families ------------------------------------------------------

@dataclass(frozen=True)
class LineSegment:
    """``origin + velocity * s``."""

    origin: tuple[float, float]
    velocity: tuple[float, float]

    def point(self, s: float) -> tuple[float, float]:
        return (self.origin[0] + self.velocity[0] * s, self.origin[1] + self.velocity[1] * s)


@dataclass(frozen=True)
class CircularArc:
    """``center + radius * (cos(phase0 + rate s), sin(phase0 + rate s))``."""

    center: tuple[float, float]
    radius: float
    phase0: float
    rate: float

    def point(self, s: float) -> tuple[float, float]:
        a = self.phase0 + self.rate * s
        return (self.center[0] + self.radius * math.cos(a), self.center[1] + self.radius * math.sin(a))


@dataclass(frozen=True)
class LogSpiral:
    """``center + coeff * exp((growth + i rate) s)`` in complex notation."""

    center: tuple[float, float]
    coeff: tuple[float, float]
    growth: float
    rate: float

    def point(self, s: float) -> tuple[float, float]:
        z = complex(*self.coeff) * np.exp(complex(self.growth, self.rate) * s)
        return (self.center[0] + z.real, self.center[1] + z.imag)


PlanarCurve = Union[LineSegment, CircularArc, LogSpiral]


def curve_to_generator(curve: PlanarCurve, span: tuple[float, float]) -> tuple[AnalyticProfile, AnalyticProfile, float]:
    """Speed, turning rate and initial heading reproducing ``curve`` on ``span``.

    Speed is ``|curve'(s)|``, heading is ``arg curve'(s)`` and turning rate is the
    derivative of the heading. Profiles are evaluated at the local parameter ``s``.
    """
    s0 = float(span[0])
    if isinstance(curve, LineSegment):
        speed = math.hypot(*curve.velocity)
        if speed == 0.0:
            raise IrregularCurve("line segment with zero velocity")
        return Constant(speed), Constant(0.0), math.atan2(curve.velocity[1], curve.velocity[0])
    if isinstance(curve, CircularArc):
        if not curve.radius > 0 or curve.rate == 0.0:
            raise IrregularCurve("circular arc with zero radius or zero angular rate")
        a = curve.phase0 + curve.rate * s0
        # derivative is radius * rate * (-sin a, cos a)
        theta0 = math.atan2(curve.rate * math.cos(a), -curve.rate * math.sin(a))
        return Constant(curve.radius * abs(curve.rate)), Constant(curve.rate), theta0
    if isinstance(curve, LogSpiral):
        k = complex(*curve.coeff)
        w = complex(curve.growth, curve.rate)
        if k == 0 or w == 0:
            raise IrregularCurve("spiral with vanishing derivative")
        d0 = k * w * np.exp(w * s0)
        rho = Constant(abs(k) * abs(w)) if curve.growth == 0.0 else Scaled(abs(k) * abs(w), Exponential(math.exp(curve.growth)))
        return rho, Constant(curve.rate), math.atan2(d0.imag, d0.real)
    raise UnsupportedFamily(f"no generator extraction for {type(curve).__name__}")


# -- edge policies --------------------------------------------------------------------

@dataclass(frozen=True)
class StraightChord:
    """Straight edge; the inherited heading is replaced by the chord direction."""

    name = "chord"


@dataclass(frozen=True)
class ConstantCurvatureArc:
    """Arc turning ``total_turn`` along the edge; start heading is set so the chord is hit."""

    total_turn: float = 0.5
    name = "arc"


@dataclass(frozen=True)
class MatchedHeadingArc:
    """Arc leaving with the inherited heading, curvature solved to land on the target."""

    name = "matched"


EdgeCurvePolicy = Union[StraightChord, ConstantCurvatureArc, MatchedHeadingArc]


def policy_from_name(name: str, total_turn: float = 0.5) -> EdgeCurvePolicy:
    if name == "chord":
        return StraightChord()
    if name == "arc":
        return ConstantCurvatureArc(total_turn)
    if name == "matched":
        return MatchedHeadingArc()
    raise ValueError(f"unknown policy {name!r}")


def _sinc(x: float) -> float:
    return 1.0 if x == 0.0 else math.sin(x) / x


def _chord_angle(turn: float, span: float) -> float:
    """Angle of the chord of a unit-speed constant-curvature arc, relative to its start heading."""
    kappa = turn / span
    if abs(kappa) < STRAIGHT_KAPPA:
        return 0.0
    half = 0.5 * turn
    chord = span * _sinc(half)
    return math.atan2(chord * math.sin(half), chord * math.cos(half))


def solve_turn(alpha: float, span: float = 1.0) -> float:
    """Total turn of the constant-curvature arc whose chord leaves at angle ``alpha``.

    Bisection over ``(-2 pi, 2 pi)`` shrunk by ``TURN_MARGIN``.
    """
    lo, hi = -2.0 * math.pi + TURN_MARGIN, 2.0 * math.pi - TURN_MARGIN
    f_lo, f_hi = _chord_angle(lo, span) - alpha, _chord_angle(hi, span) - alpha
    if f_lo > 0 or f_hi < 0:
        raise NoSolution(f"target at {alpha:.6g} rad from the inherited heading is out of reach "
                         "of a single constant-curvature arc")
    for _ in range(BISECT_MAX_ITER):
        if hi - lo <= BISECT_TOL:
            break
        mid = 0.5 * (lo + hi)
        if _chord_angle(mid, span) - alpha < 0:
            lo = mid
        else:
            hi = mid
    turn = 0.5 * (lo + hi)
    # below the bisection resolution the arc is indistinguishable from a line
    return 0.0 if abs(turn) <= 2 * BISECT_TOL else turn


def arc_curve(start: tuple[float, float], heading: float, speed: float, kappa: float) -> PlanarCurve:
    """Curve leaving ``start`` along ``heading`` at constant ``speed`` and turning rate ``kappa``."""
    if abs(kappa) < STRAIGHT_KAPPA:
        return LineSegment(start, (speed * math.cos(heading), speed * math.sin(heading)))
    r = speed / kappa
    center = (start[0] - r * math.sin(heading), start[1] + r * math.cos(heading))
    phase0 = heading - math.copysign(math.pi / 2, kappa)
    return CircularArc(center, abs(r), phase0, kappa)


def _edge_curve(policy: EdgeCurvePolicy, start: GeneratorState, target: tuple[float, float],
                span: float) -> tuple[PlanarCurve, float]:
    """Curve for one edge and the heading the branch starts with."""
    dx, dy = target[0] - start.x, target[1] - start.y
    dist = math.hypot(dx, dy)
    if dist <= DEGENERATE_TOL:
        raise DegenerateEdge(f"edge endpoints coincide at {target}")
    chord_dir = math.atan2(dy, dx)
    if isinstance(policy, StraightChord):
        heading, turn = chord_dir, 0.0
    elif isinstance(policy, ConstantCurvatureArc):
        turn = policy.total_turn
        if not abs(turn) < 2.0 * math.pi:
            raise NoSolution("total turn must lie strictly inside (-2 pi, 2 pi)")
        heading = chord_dir - 0.5 * turn
    elif isinstance(policy, MatchedHeadingArc):
        heading = start.theta
        alpha = math.atan2(dy * math.cos(heading) - dx * math.sin(heading),
                           dx * math.cos(heading) + dy * math.sin(heading))
        turn = solve_turn(alpha, span)
    else:
        raise TypeError(f"unknown edge policy {policy!r}")
    speed = dist / (span * _sinc(0.5 * turn))
    return arc_curve((start.x, start.y), heading, speed, turn / span), heading


def compile_tree(dtree: DiscreteTree, policy: EdgeCurvePolicy | None = None, span: float = 1.0,
                 step: float | None = DEFAULT_COMPILE_STEP, keep: str = "all") -> GeneratorTree:
    """Realize every discrete edge as a closed-form generator branch.

    The first branch is the trunk: from ``dtree.base`` into the root node when a
    base is given, otherwise the single edge leaving the root node.
    """
    policy = policy if policy is not None else MatchedHeadingArc()
    if dtree.base is not None:
        offset = 0
        edges = [(None, 0, dtree.base, dtree.trunk_label)]
    else:
        if dtree.children(0) != (1,):
            raise ValueError("discrete tree without a base needs exactly one edge leaving the root")
        offset = 1
        edges = []
    for n in dtree.nodes[1:]:
        edges.append((n.parent_id, n.id, None, n.label or EdgeLabel(1.0, 1, "")))

    branches: list[Branch] = []
    overrides = 0
    for parent_node, node, base, label in edges:
        target = dtree.nodes[node].position
        origin = base if parent_node is None else dtree.nodes[parent_node].position
        if origin == target:
            raise DegenerateEdge(f"edge into node {node} has coincident endpoints {target}")
        if parent_node is None or parent_node - offset < 0:
            start_pt = base if base is not None else dtree.nodes[0].position
            start = GeneratorState(start_pt[0], start_pt[1], dtree.heading, 0.0)
            parent_branch, depth = None, 0
        else:
            parent_branch = parent_node - offset
            start = branches[parent_branch].end
            depth = branches[parent_branch].depth + 1
        curve, heading = _edge_curve(policy, start, target, span)
        rho, kappa, _ = curve_to_generator(curve, (0.0, span))
        if heading != start.theta:
            overrides += parent_branch is not None
            start = GeneratorState(start.x, start.y, heading, start.tau)
        fld = GeneratorField(rho, kappa, PhaseMode.LOCAL)
        traj = integrate_closed_form(fld, start, (0.0, span), step if keep == "all" else None)
        miss = math.hypot(traj.end.x - target[0], traj.end.y - target[1])
        if not miss <= ENDPOINT_TOL:
            raise NoSolution(f"edge into node {node} misses its target by {miss:.3g}")
        rule = InheritanceRule(min(label.lam, 1.0), label.sigma, 1.0, label.rule)
        branches.append(Branch(node - offset, parent_branch, depth, fld, start, (0.0, span), traj, rule))

    meta = {"source": "compile", "policy": policy.name, "span": span, "integrator": "closed",
            "step": step, "keep": keep, "heading_overrides": overrides, "no_offset": overrides == 0,
            "discrete_kind": dtree.kind}
    return GeneratorTree(branches, None, meta)


# -- scaffolds ----------------------------------------------------------------------

class Scaffold:
    """Rooted tree of planar nodes joined by straight chords.

    ``branch_ids[v]`` is the generator branch realized by the edge into ``v``
    (``None`` for the root); ``labels[v]`` is that branch's inheritance rule.
    """

    def __init__(self, positions, parents, depths, branch_ids=None, labels=None):
        self.positions = np.asarray(positions, dtype=float).reshape(-1, 2)
        self.positions.flags.writeable = False
        self.parents = tuple(parents)
        self.depths = tuple(depths)
        n = len(self.parents)
        self.branch_ids = tuple(branch_ids) if branch_ids is not None else (None,) * n
        self.labels = tuple(labels) if labels is not None else (None,) * n
        if not (len(self.positions) == len(self.depths) == n):
            raise ValueError("scaffold arrays differ in length")
        children: list[list[int]] = [[] for _ in range(n)]
        for v, p in enumerate(self.parents):
            if v == 0:
                if p is not None:
                    raise ValueError("node 0 must be the scaffold root")
            elif p is None or not (0 <= p < v):
                raise ValueError(f"scaffold node {v} has invalid parent {p}")
            else:
                children[p].append(v)
        self._children = tuple(tuple(c) for c in children)

    def __len__(self) -> int:
        return len(self.parents)

    def children(self, v: int) -> tuple[int, ...]:
        return self._children[v]

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(p, v) for v, p in enumerate(self.parents) if p is not None]

    def edge_vector(self, v: int) -> np.ndarray:
        return self.positions[v] - self.positions[self.parents[v]]

    def chord_length(self, v: int) -> float:
        d = self.edge_vector(v)
        return math.hypot(d[0], d[1])

    def chord_direction(self, v: int) -> float:
        d = self.edge_vector(v)
        return math.atan2(d[1], d[0])

    @property
    def depth(self) -> int:
        return max(self.depths)


def scaffold_of(gtree: GeneratorTree) -> Scaffold:
    """Branch start point of the root plus every branch endpoint; one chord per branch."""
    root = gtree.root.trajectory.start
    positions = [(root.x, root.y)]
    parents: list[int | None] = [None]
    depths = [0]
    bids: list[int | None] = [None]
    labels = [None]
    for b in gtree.branches:
        e = b.end
        positions.append((e.x, e.y))
        parents.append(0 if b.parent_id is None else b.parent_id + 1)
        depths.append(b.depth + 1)
        bids.append(b.id)
        labels.append(b.rule)
    return Scaffold(positions, parents, depths, bids, labels)


# -- isomorphism --------------------------------------------------------------------

@dataclass(frozen=True)
class IsomorphismCertificate:
    """Pairs are ``(scaffold node, discrete node)``; discrete id ``-1`` is the trunk base."""

    node_pairing: tuple[tuple[int, int], ...]
    max_position_gap: float
    depth_checked: int

    def to_dict(self) -> dict:
        return {"isomorphic": True, "depth": self.depth_checked, "max_gap": self.max_position_gap,
                "nodes": len(self.node_pairing)}


def check_isomorphism(scaffold: Scaffold, dtree: DiscreteTree) -> IsomorphismCertificate:
    """Pair nodes by simultaneous breadth-first traversal in child order."""
    if dtree.base is not None:
        def d_children(v):
            return (0,) if v == -1 else dtree.children(v)

        def d_pos(v):
            return dtree.base if v == -1 else dtree.nodes[v].position
        d_root = -1
        d_count = len(dtree) + 1
    else:
        d_children = dtree.children

        def d_pos(v):
            return dtree.nodes[v].position
        d_root = 0
        d_count = len(dtree)

    pairing = []
    gap = 0.0
    queue = [(0, d_root)]
    head = 0
    while head < len(queue):
        s, d = queue[head]
        head += 1
        pairing.append((s, d))
        ps, pd = scaffold.positions[s], d_pos(d)
        gap = max(gap, math.hypot(ps[0] - pd[0], ps[1] - pd[1]))
        sc, dc = scaffold.children(s), d_children(d)
        if len(sc) != len(dc):
            raise NotIsomorphic(f"scaffold node {s} has {len(sc)} children, discrete node {d} has {len(dc)}",
                                s, d)
        queue.extend(zip(sc, dc))
    if len(pairing) != len(scaffold) or len(pairing) != d_count:
        raise NotIsomorphic(f"node counts differ: scaffold {len(scaffold)}, discrete {d_count}")
    return IsomorphismCertificate(tuple(pairing), gap, dtree.depth)

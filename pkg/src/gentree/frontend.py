"""Discrete tree-fractal frontends: IFS similarity families and bracketed D0L-systems.

Both kinds of input are JSON documents (schema version ``"v": 1``) and expand
into a :class:`DiscreteTree`, a rooted tree with embedded node positions and
per-edge labels.

IFS trees: the node for word ``i1 i2 ... ik`` sits at
``F_ik(... F_i2(F_i1(root)))``. Each child applies one more map to its parent's
position, so ``p(w + [i]) = F_i(p(w))``. The root node is entered by a straight
trunk from ``base = root - trunk_length * (cos heading, sin heading)``.

L-system trees: the axiom is rewritten ``depth`` times and then read by a turtle.
``F`` draws a segment of length ``scale_per_depth ** bracket_depth``; ``+`` and
``-`` turn by the configured angle; ``[`` and ``]`` push and pop. Every ``F``
creates one new node, which becomes a child of the turtle's current node.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence, Union

import numpy as np

from .errors import BranchBudgetExceeded, ContractivityError, ParseError, UnbalancedBrackets
from .geometry import PointSet
from .tree import DEFAULT_MAX_BRANCHES

SCHEMA_VERSION = 1
DEFAULT_HEADING = math.pi / 2
TURTLE_SYMBOLS = "F+-[]"


@dataclass(frozen=True)
class SimilarityMap:
    """``x -> lam * R(theta) x + t``."""

    lam: float
    theta: float
    t: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "t", (float(self.t[0]), float(self.t[1])))
        if not (0.0 < self.lam < 1.0):
            raise ContractivityError(f"contraction ratio must lie in (0, 1), got {self.lam}")

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        c, s = math.cos(self.theta), math.sin(self.theta)
        x, y = pts[..., 0], pts[..., 1]
        return np.stack([self.lam * (c * x - s * y) + self.t[0],
                         self.lam * (s * x + c * y) + self.t[1]], axis=-1)

    @property
    def sigma(self) -> int:
        return 1 if self.theta >= 0 else -1


@dataclass(frozen=True)
class IFSSpec:
    maps: tuple[SimilarityMap, ...]
    root: tuple[float, float] = (0.0, 0.0)
    heading: float = DEFAULT_HEADING
    trunk_length: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        object.__setattr__(self, "root", (float(self.root[0]), float(self.root[1])))


@dataclass(frozen=True)
class LSystemSpec:
    axiom: str
    rules: dict = dc_field(default_factory=dict)
    angle: float = math.pi / 6
    max_iterations: int = 12
    scale_per_depth: float = 1.0
    root: tuple[float, float] = (0.0, 0.0)
    heading: float = DEFAULT_HEADING

    def __post_init__(self):
        object.__setattr__(self, "axiom", _normalize(self.axiom))
        object.__setattr__(self, "rules", {k: _normalize(v) for k, v in self.rules.items()})
        object.__setattr__(self, "root", (float(self.root[0]), float(self.root[1])))
        _check_brackets(self.axiom, "axiom")
        for k, v in self.rules.items():
            if len(k) != 1:
                raise ParseError(f"rule predecessor must be a single symbol, got {k!r}", path=f"rules.{k}")
            _check_brackets(v, f"rules.{k}")
        if not (0.0 < self.scale_per_depth <= 1.0):
            raise ValueError("scale_per_depth must lie in (0, 1]")


def _normalize(text: str) -> str:
    return text.replace("−", "-")


def _check_brackets(text: str, path: str) -> None:
    level = 0
    for i, ch in enumerate(text):
        if ch == "[":
            level += 1
        elif ch == "]":
            level -= 1
            if level < 0:
                raise UnbalancedBrackets(f"unmatched ']' in {text!r}", col=i + 1, path=path)
    if level:
        raise UnbalancedBrackets(f"{level} unclosed '[' in {text!r}", path=path)


# -- discrete trees ---------------------------------------------------------------

@dataclass(frozen=True)
class EdgeLabel:
    lam: float
    sigma: int
    rule: str


@dataclass(frozen=True)
class DiscreteNode:
    id: int
    parent_id: int | None
    position: tuple[float, float]
    depth: int
    label: EdgeLabel | None = None
    word: tuple[int, ...] = ()


class DiscreteTree:
    """Ordered rooted tree with node embedding.

    ``base`` (optional) is the start of a trunk edge entering the root node;
    ``trunk_label`` labels that edge. ``heading`` is the initial direction at the
    start of the first drawn edge.
    """

    def __init__(self, nodes: Sequence[DiscreteNode], heading: float = DEFAULT_HEADING,
                 base: tuple[float, float] | None = None, trunk_label: EdgeLabel | None = None,
                 kind: str = ""):
        self.nodes = tuple(nodes)
        self.heading = float(heading)
        self.base = None if base is None else (float(base[0]), float(base[1]))
        self.trunk_label = trunk_label if trunk_label is not None else EdgeLabel(1.0, 1, "trunk")
        self.kind = kind
        children: list[list[int]] = [[] for _ in self.nodes]
        for i, n in enumerate(self.nodes):
            if n.id != i:
                raise ValueError(f"node at index {i} has id {n.id}")
            if not all(math.isfinite(c) for c in n.position):
                raise ValueError(f"node {i} has a non-finite position")
            if i == 0:
                if n.parent_id is not None:
                    raise ValueError("node 0 must be the root")
            elif n.parent_id is None or not (0 <= n.parent_id < i):
                raise ValueError(f"node {i} has invalid parent {n.parent_id}")
            else:
                children[n.parent_id].append(i)
        self._children = tuple(tuple(c) for c in children)

    def __len__(self) -> int:
        return len(self.nodes)

    def children(self, i: int) -> tuple[int, ...]:
        return self._children[i]

    @property
    def positions(self) -> np.ndarray:
        return np.array([n.position for n in self.nodes], dtype=float)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(n.parent_id, n.id) for n in self.nodes[1:]]

    @property
    def depth(self) -> int:
        return max(n.depth for n in self.nodes)


# -- documents ----------------------------------------------------------------------

def _no_duplicates(pairs):
    d = {}
    for k, v in pairs:
        if k in d:
            raise ParseError(f"duplicate key {k!r}")
        d[k] = v
    return d


def load_json(text: str) -> dict:
    try:
        doc = json.loads(text, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, line=e.lineno, col=e.colno) from None
    if not isinstance(doc, dict):
        raise ParseError("document must be a JSON object", line=1, col=1)
    if doc.get("v") != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema version {doc.get('v')!r}", path="v")
    return doc


def _num(doc: dict, key: str, path: str, default=None) -> float:
    if key not in doc:
        if default is None:
            raise ParseError(f"missing field {key!r}", path=path)
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ParseError(f"{key!r} must be a finite number", path=f"{path}.{key}" if path else key)
    return float(v)


def _point(doc: dict, key: str, path: str, default=None) -> tuple[float, float]:
    if key not in doc:
        if default is None:
            raise ParseError(f"missing field {key!r}", path=path)
        return default
    v = doc[key]
    if (not isinstance(v, list) or len(v) != 2
            or not all(isinstance(c, (int, float)) and not isinstance(c, bool) and math.isfinite(c) for c in v)):
        raise ParseError(f"{key!r} must be a pair of finite numbers", path=f"{path}.{key}" if path else key)
    return (float(v[0]), float(v[1]))


def _check_kind(doc: dict, kind: str) -> None:
    if doc.get("kind") != kind:
        raise ParseError(f"expected kind {kind!r}, got {doc.get('kind')!r}", path="kind")


def ifs_from_dict(doc: dict) -> IFSSpec:
    _check_kind(doc, "ifs")
    raw = doc.get("maps")
    if not isinstance(raw, list) or not raw:
        raise ParseError("at least one map required", path="maps")
    maps = []
    for i, m in enumerate(raw):
        path = f"maps[{i}]"
        if not isinstance(m, dict):
            raise ParseError("map must be an object", path=path)
        lam = _num(m, "lambda", path)
        if not (0.0 < lam < 1.0):
            raise ContractivityError(f"map {i} has contraction ratio {lam}, need 0 < lambda < 1",
                                     path=f"{path}.lambda")
        maps.append(SimilarityMap(lam, _num(m, "theta", path), _point(m, "t", path)))
    trunk = _num(doc, "trunk_length", "", 1.0)
    if trunk <= 0:
        raise ParseError("trunk_length must be positive", path="trunk_length")
    return IFSSpec(tuple(maps), _point(doc, "root", "", (0.0, 0.0)),
                   _num(doc, "heading", "", DEFAULT_HEADING), trunk)


def parse_ifs_document(text: str) -> IFSSpec:
    return ifs_from_dict(load_json(text))


def parse_ifs(text: str) -> list[SimilarityMap]:
    """Maps of an IFS document, in declaration order."""
    return list(parse_ifs_document(text).maps)


def ifs_to_dict(spec: IFSSpec | Sequence[SimilarityMap]) -> dict:
    if not isinstance(spec, IFSSpec):
        spec = IFSSpec(tuple(spec))
    return {
        "v": SCHEMA_VERSION,
        "kind": "ifs",
        "maps": [{"lambda": m.lam, "theta": m.theta, "t": list(m.t)} for m in spec.maps],
        "root": list(spec.root),
        "heading": spec.heading,
        "trunk_length": spec.trunk_length,
    }


def serialize_ifs(spec: IFSSpec | Sequence[SimilarityMap]) -> str:
    return json.dumps(ifs_to_dict(spec), indent=2) + "\n"


def lsystem_from_dict(doc: dict) -> LSystemSpec:
    _check_kind(doc, "lsystem")
    axiom = doc.get("axiom")
    if not isinstance(axiom, str) or not axiom:
        raise ParseError("axiom must be a non-empty string", path="axiom")
    rules = doc.get("rules", {})
    if not isinstance(rules, dict) or not all(isinstance(v, str) for v in rules.values()):
        raise ParseError("rules must map symbols to strings", path="rules")
    iters = doc.get("max_iterations", 12)
    if isinstance(iters, bool) or not isinstance(iters, int) or iters < 0:
        raise ParseError("max_iterations must be a non-negative integer", path="max_iterations")
    scale = _num(doc, "scale_per_depth", "", 1.0)
    if not (0.0 < scale <= 1.0):
        raise ParseError("scale_per_depth must lie in (0, 1]", path="scale_per_depth")
    return LSystemSpec(axiom, dict(rules), _num(doc, "angle", ""), iters, scale,
                       _point(doc, "root", "", (0.0, 0.0)), _num(doc, "heading", "", DEFAULT_HEADING))


def parse_lsystem(text: str) -> LSystemSpec:
    return lsystem_from_dict(load_json(text))


def lsystem_to_dict(spec: LSystemSpec) -> dict:
    return {
        "v": SCHEMA_VERSION,
        "kind": "lsystem",
        "axiom": spec.axiom,
        "rules": dict(spec.rules),
        "angle": spec.angle,
        "max_iterations": spec.max_iterations,
        "scale_per_depth": spec.scale_per_depth,
        "root": list(spec.root),
        "heading": spec.heading,
    }


def serialize_lsystem(spec: LSystemSpec) -> str:
    return json.dumps(lsystem_to_dict(spec), indent=2) + "\n"


# -- expansion ---------------------------------------------------------------------

def rewrite(spec: LSystemSpec, iterations: int, max_segments: int = DEFAULT_MAX_BRANCHES) -> str:
    """Apply the rules ``iterations`` times; symbols without a rule are copied."""
    s = spec.axiom
    for _ in range(iterations):
        # budget check on the segment count before building the next string
        n_f = sum(s.count(k) * spec.rules[k].count("F") for k in spec.rules)
        n_f += s.count("F") if "F" not in spec.rules else 0
        if n_f > max_segments:
            raise BranchBudgetExceeded(f"{n_f} segments exceed the cap of {max_segments}")
        s = "".join(spec.rules.get(ch, ch) for ch in s)
    return s


def _expand_ifs(spec: IFSSpec, depth: int, max_nodes: int) -> DiscreteTree:
    m = len(spec.maps)
    total = sum(m ** k for k in range(depth + 1))
    if total > max_nodes:
        raise BranchBudgetExceeded(f"{total} nodes exceed the cap of {max_nodes}")
    nodes = [DiscreteNode(0, None, spec.root, 0, None, ())]
    level_ids = [0]
    level_pts = np.array([spec.root], dtype=float)
    for d in range(1, depth + 1):
        images = np.stack([f(level_pts) for f in spec.maps], axis=1)
        next_ids = []
        for j, pid in enumerate(level_ids):
            parent_word = nodes[pid].word
            for i, f in enumerate(spec.maps):
                nid = len(nodes)
                p = images[j, i]
                nodes.append(DiscreteNode(nid, pid, (float(p[0]), float(p[1])), d,
                                          EdgeLabel(f.lam, f.sigma, f"F{i}"), parent_word + (i,)))
                next_ids.append(nid)
        level_ids = next_ids
        level_pts = images.reshape(-1, 2)
    h = spec.heading
    base = (spec.root[0] - spec.trunk_length * math.cos(h), spec.root[1] - spec.trunk_length * math.sin(h))
    return DiscreteTree(nodes, h, base, EdgeLabel(1.0, 1, "trunk"), kind="ifs")


def _expand_lsystem(spec: LSystemSpec, depth: int, scale: float, root, heading: float,
                    max_nodes: int) -> DiscreteTree:
    if depth > spec.max_iterations:
        raise ValueError(f"depth {depth} exceeds the iteration cap {spec.max_iterations}")
    program = rewrite(spec, depth, max_nodes)
    x, y = float(root[0]), float(root[1])
    h = heading
    node, bd, turn = 0, 0, 0.0
    nodes = [DiscreteNode(0, None, (x, y), 0)]
    incoming = [0.0]    # length of the edge entering each node (0 for the root)
    stack = []
    for ch in program:
        if ch == "F":
            if len(nodes) > max_nodes:
                raise BranchBudgetExceeded(f"more than {max_nodes} nodes")
            length = scale ** bd
            x, y = x + length * math.cos(h), y + length * math.sin(h)
            lam = length / incoming[node] if incoming[node] > 0 else 1.0
            label = EdgeLabel(lam, 1 if turn >= 0 else -1, "F")
            nid = len(nodes)
            nodes.append(DiscreteNode(nid, node, (x, y), nodes[node].depth + 1, label))
            incoming.append(length)
            node, turn = nid, 0.0
        elif ch == "+":
            h += spec.angle
            turn += spec.angle
        elif ch == "-":
            h -= spec.angle
            turn -= spec.angle
        elif ch == "[":
            stack.append((x, y, h, node, bd, turn))
            bd += 1
        elif ch == "]":
            x, y, h, node, bd, turn = stack.pop()
    return DiscreteTree(nodes, heading, None, kind="lsystem")


def expand_discrete(spec: Union[IFSSpec, Sequence[SimilarityMap], LSystemSpec], depth: int,
                    root: tuple[float, float] | None = None, scale_per_depth: float | None = None,
                    heading: float | None = None,
                    max_nodes: int = DEFAULT_MAX_BRANCHES) -> DiscreteTree:
    """Expand an IFS (maps or :class:`IFSSpec`) or an L-system to ``depth``.

    ``root``, ``scale_per_depth`` and ``heading`` override the document values.
    ``scale_per_depth`` only affects L-systems.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    if isinstance(spec, LSystemSpec):
        return _expand_lsystem(spec, depth,
                               spec.scale_per_depth if scale_per_depth is None else scale_per_depth,
                               spec.root if root is None else root,
                               spec.heading if heading is None else heading, max_nodes)
    if not isinstance(spec, IFSSpec):
        spec = IFSSpec(tuple(spec))
    if root is not None or heading is not None:
        spec = IFSSpec(spec.maps, spec.root if root is None else root,
                       spec.heading if heading is None else heading, spec.trunk_length)
    return _expand_ifs(spec, depth, max_nodes)


def attractor_points(maps: Sequence[SimilarityMap], depth: int, root=(0.0, 0.0),
                     dedup: bool = True, max_points: int = DEFAULT_MAX_BRANCHES) -> PointSet:
    """Images of ``root`` under all length-``depth`` compositions, in word order."""
    maps = list(maps.maps if isinstance(maps, IFSSpec) else maps)
    if not maps:
        raise ValueError("at least one map required")
    if len(maps) ** depth > max_points:
        raise BranchBudgetExceeded(f"{len(maps)}**{depth} points exceed the cap of {max_points}")
    pts = np.array([root], dtype=float)
    for _ in range(depth):
        pts = np.stack([f(pts) for f in maps], axis=1).reshape(-1, 2)
    return PointSet(pts, label=f"A_{depth}", dedup=dedup)

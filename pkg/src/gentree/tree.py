"""Generator trees grown by recursive branch events with exact state inheritance."""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace
from typing import Sequence

import numpy as np

from .errors import BranchBudgetExceeded
from .integrate import (
    DEFAULT_STEP, GeneratorField, GeneratorState, PhaseMode, Trajectory, integrate,
)
from .profiles import profile_from_dict, profile_to_dict, scale

DEFAULT_MAX_BRANCHES = 2 ** 22


@dataclass(frozen=True)
class InheritanceRule:
    lam: float = 1.0
    sigma: int = 1
    kappa_scale: float = 1.0
    label: str = ""

    def __post_init__(self):
        if not (0.0 < self.lam <= 1.0):
            raise ValueError(f"lambda must lie in (0, 1], got {self.lam}")
        if self.sigma not in (1, -1):
            raise ValueError(f"sigma must be +1 or -1, got {self.sigma}")
        if not math.isfinite(self.kappa_scale):
            raise ValueError("kappa_scale must be finite")

    def to_dict(self) -> dict:
        d = {"lambda": self.lam, "sigma": self.sigma, "kappa_scale": self.kappa_scale}
        if self.label:
            d["label"] = self.label
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "InheritanceRule":
        return cls(float(d.get("lambda", 1.0)), int(d.get("sigma", 1)),
                   float(d.get("kappa_scale", 1.0)), str(d.get("label", "")))


@dataclass(frozen=True)
class BranchEvent:
    """Spawn ``len(rules)`` children at ``s_b`` (``None`` means the end of the parent span)."""

    rules: tuple[InheritanceRule, ...]
    s_b: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        if not self.rules:
            raise ValueError("a branch event needs at least one rule")

    @property
    def multiplicity(self) -> int:
        return len(self.rules)


def binary_event(lam: float = 1.0, kappa_scale: float = 1.0) -> BranchEvent:
    """Two children turning in opposite senses."""
    return BranchEvent((InheritanceRule(lam, 1, kappa_scale), InheritanceRule(lam, -1, kappa_scale)))


@dataclass(frozen=True)
class Branch:
    id: int
    parent_id: int | None
    depth: int
    field: GeneratorField
    init: GeneratorState
    span: tuple[float, float]
    trajectory: Trajectory = dc_field(repr=False)
    rule: InheritanceRule | None = None

    @property
    def end(self) -> GeneratorState:
        return self.trajectory.end


class GeneratorTree:
    """Immutable rooted tree of branch realizations; every parent precedes its children."""

    def __init__(self, branches: Sequence[Branch], schedule: Sequence[BranchEvent] | None = None,
                 metadata: dict | None = None):
        self.branches = tuple(branches)
        self.schedule = tuple(schedule) if schedule is not None else None
        self.metadata = dict(metadata or {})
        if not self.branches:
            raise ValueError("a generator tree has at least a root branch")
        children: list[list[int]] = [[] for _ in self.branches]
        for i, b in enumerate(self.branches):
            if b.id != i:
                raise ValueError(f"branch at index {i} has id {b.id}")
            if i == 0:
                if b.parent_id is not None:
                    raise ValueError("branch 0 must be the root")
                continue
            if b.parent_id is None or not (0 <= b.parent_id < i):
                raise ValueError(f"branch {i} has invalid parent {b.parent_id}")
            children[b.parent_id].append(i)
        self._children = tuple(tuple(c) for c in children)

    def __len__(self) -> int:
        return len(self.branches)

    def __getitem__(self, i: int) -> Branch:
        return self.branches[i]

    @property
    def root(self) -> Branch:
        return self.branches[0]

    def children(self, i: int) -> tuple[int, ...]:
        return self._children[i]

    @property
    def depth(self) -> int:
        return max(b.depth for b in self.branches)

    def at_depth(self, k: int) -> list[Branch]:
        return [b for b in self.branches if b.depth == k]

    def leaves(self) -> list[Branch]:
        return [b for b in self.branches if not self._children[b.id]]

    def path_to_root(self, i: int) -> list[int]:
        path = [i]
        while self.branches[path[-1]].parent_id is not None:
            path.append(self.branches[path[-1]].parent_id)
        return path[::-1]


def spawn_children(parent_state: GeneratorState, parent_field: GeneratorField,
                   event: BranchEvent) -> list[tuple[GeneratorState, GeneratorField]]:
    """Children start from an exact copy of ``parent_state``; only the field changes."""
    out = []
    for rule in event.rules:
        child_field = GeneratorField(
            rho=scale(parent_field.rho, rule.lam),
            kappa=scale(parent_field.kappa, rule.sigma * rule.kappa_scale),
            phase_mode=parent_field.phase_mode,
        )
        out.append((parent_state, child_field))
    return out


def _event_for(schedule: Sequence[BranchEvent], depth: int) -> BranchEvent:
    return schedule[min(depth, len(schedule) - 1)]


def branch_count(schedule: Sequence[BranchEvent], depth: int) -> int:
    """Total branches of a uniform schedule: sum over levels of the multiplicity products."""
    total, level = 1, 1
    for k in range(depth):
        level *= _event_for(schedule, k).multiplicity
        total += level
    return total


def _as_schedule(schedule) -> tuple[BranchEvent, ...]:
    if isinstance(schedule, BranchEvent):
        return (schedule,)
    schedule = tuple(schedule)
    if not schedule:
        raise ValueError("empty branch schedule")
    return schedule


def grow_tree(root_field: GeneratorField, root_init: GeneratorState, span_per_branch: float,
              schedule: BranchEvent | Sequence[BranchEvent], depth: int, *,
              integrator: str = "auto", step: float = DEFAULT_STEP, keep: str = "all",
              max_branches: int = DEFAULT_MAX_BRANCHES) -> GeneratorTree:
    """Grow breadth-first to ``depth`` branch generations below the root.

    Each branch runs over the local span ``(0, span_per_branch)``, or ``(0, s_b)``
    when its event fires in the interior. ``schedule[k]`` is applied to branches
    at depth ``k``; a short schedule repeats its last entry.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    if not span_per_branch > 0:
        raise ValueError("span_per_branch must be positive")
    schedule = _as_schedule(schedule)
    for ev in schedule:
        if ev.s_b is not None and not (0.0 < ev.s_b <= span_per_branch):
            raise ValueError(f"branch parameter {ev.s_b} outside (0, {span_per_branch}]")
    n = branch_count(schedule, depth)
    if n > max_branches:
        raise BranchBudgetExceeded(f"{n} branches requested, cap is {max_branches}")

    def span_for(d: int) -> tuple[float, float]:
        if d < depth:
            s_b = _event_for(schedule, d).s_b
            if s_b is not None:
                return (0.0, float(s_b))
        return (0.0, float(span_per_branch))

    branches: list[Branch] = []
    # (parent id, init, field, rule) queued per level
    level = [(None, root_init, root_field, None)]
    for d in range(depth + 1):
        span = span_for(d)
        next_level = []
        for parent_id, init, fld, rule in level:
            traj = integrate(fld, init, span, integrator=integrator, step=step, keep=keep)
            b = Branch(len(branches), parent_id, d, fld, init, span, traj, rule)
            branches.append(b)
            if d < depth:
                ev = _event_for(schedule, d)
                for (state, child_field), r in zip(spawn_children(traj.end, fld, ev), ev.rules):
                    next_level.append((b.id, state, child_field, r))
        level = next_level
    meta = {"source": "grow", "integrator": integrator, "step": step, "keep": keep,
            "span_per_branch": span_per_branch}
    return GeneratorTree(branches, schedule, meta)


def regrow(tree: GeneratorTree, branch_id: int, new_field: GeneratorField) -> GeneratorTree:
    """Replace one branch's field and re-integrate it and every descendant.

    Descendants keep their own fields and receive freshly inherited initial states.
    """
    integrator = tree.metadata.get("integrator", "auto")
    step = tree.metadata.get("step", DEFAULT_STEP)
    keep = tree.metadata.get("keep", "all")
    branches = list(tree.branches)
    dirty = {branch_id}
    for b in tree.branches[branch_id:]:
        if b.id != branch_id and b.parent_id not in dirty:
            continue
        dirty.add(b.id)
        fld = new_field if b.id == branch_id else b.field
        init = b.init if b.parent_id is None else branches[b.parent_id].end
        traj = integrate(fld, init, b.span, integrator=integrator, step=step, keep=keep)
        branches[b.id] = replace(b, field=fld, init=init, trajectory=traj)
    return GeneratorTree(branches, tree.schedule, tree.metadata)


# -- continuity ----------------------------------------------------------------

@dataclass(frozen=True)
class ContinuityEntry:
    branch_id: int
    parent_id: int
    position_gap: float
    heading_gap: float
    tau_gap: float

    @property
    def exact(self) -> bool:
        return self.position_gap == 0.0 and self.heading_gap == 0.0 and self.tau_gap == 0.0


@dataclass(frozen=True)
class ContinuityReport:
    entries: tuple[ContinuityEntry, ...]

    @property
    def violations(self) -> list[ContinuityEntry]:
        return [e for e in self.entries if not e.exact]

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def max_position_gap(self) -> float:
        return max((e.position_gap for e in self.entries), default=0.0)

    @property
    def max_heading_gap(self) -> float:
        return max((e.heading_gap for e in self.entries), default=0.0)


def check_branch_continuity(tree: GeneratorTree) -> ContinuityReport:
    """Gap between every child's initial state and its parent's state at the branch event."""
    entries = []
    for b in tree.branches[1:]:
        p = tree[b.parent_id].end
        c = b.init
        entries.append(ContinuityEntry(
            b.id, b.parent_id,
            math.hypot(c.x - p.x, c.y - p.y),
            abs(c.theta - p.theta),
            abs(c.tau - p.tau),
        ))
    return ContinuityReport(tuple(entries))


# -- JSON ------------------------------------------------------------------------

def decimate_indices(n: int, max_points: int | None) -> np.ndarray:
    """Evenly spread sample indices, always keeping the first and last."""
    if max_points is None or n <= max_points:
        return np.arange(n)
    return np.unique(np.round(np.linspace(0, n - 1, max(max_points, 2))).astype(int))


def field_to_dict(f: GeneratorField) -> dict:
    return {"rho": profile_to_dict(f.rho), "kappa": profile_to_dict(f.kappa),
            "phase_mode": f.phase_mode.value}


def field_from_dict(d: dict) -> GeneratorField:
    return GeneratorField(profile_from_dict(d["rho"]), profile_from_dict(d["kappa"]),
                          PhaseMode(d.get("phase_mode", "local")))


def tree_to_dict(tree: GeneratorTree, samples: bool = True, max_points: int | None = 64) -> dict:
    out = []
    for b in tree.branches:
        rec = {
            "id": b.id,
            "parent_id": b.parent_id,
            "depth": b.depth,
            "rule": b.rule.to_dict() if b.rule is not None else None,
            "field": field_to_dict(b.field),
            "span": list(b.span),
            "init": list(b.init.as_tuple()),
            "end": list(b.end.as_tuple()),
        }
        if samples:
            idx = decimate_indices(len(b.trajectory), max_points)
            rows = np.column_stack([b.trajectory.s[idx], b.trajectory.states[idx]])
            rec["samples"] = rows.tolist()
        out.append(rec)
    meta = {k: v for k, v in tree.metadata.items() if isinstance(v, (str, int, float, bool, list, type(None)))}
    return {"v": 1, "kind": "tree", "metadata": meta, "branches": out}


def tree_from_dict(d: dict) -> GeneratorTree:
    if d.get("kind") != "tree":
        raise ValueError("not a tree document")
    branches = []
    for rec in d["branches"]:
        fld = field_from_dict(rec["field"])
        init = GeneratorState(*rec["init"])
        end = GeneratorState(*rec["end"])
        span = (float(rec["span"][0]), float(rec["span"][1]))
        if rec.get("samples"):
            rows = np.array(rec["samples"], dtype=float)
            traj = Trajectory(rows[:, 0], rows[:, 1:], fld)
        elif span[1] > span[0]:
            traj = Trajectory(np.array(span), np.array([init.as_tuple(), end.as_tuple()]), fld)
        else:
            traj = Trajectory(np.array(span[:1]), np.array([init.as_tuple()]), fld)
        rule = InheritanceRule.from_dict(rec["rule"]) if rec.get("rule") else None
        branches.append(Branch(int(rec["id"]), rec["parent_id"], int(rec["depth"]), fld,
                               init, span, traj, rule))
    return GeneratorTree(branches, None, d.get("metadata", {}))

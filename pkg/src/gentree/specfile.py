"""Spec-file ingestion shared by every CLI command.

One JSON schema (``"v": 1``) with ``"kind"`` one of ``ifs``, ``lsystem``,
``generator`` or ``tree``. Any kind may carry an optional integer ``"depth"``
used when the command line does not give one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Union

from .errors import ParseError
from .frontend import IFSSpec, LSystemSpec, ifs_from_dict, load_json, lsystem_from_dict
from .integrate import GeneratorField, GeneratorState, PhaseMode
from .profiles import profile_from_dict, profile_to_dict
from .tree import BranchEvent, GeneratorTree, InheritanceRule, binary_event, tree_from_dict


@dataclass(frozen=True)
class GrowSpec:
    field: GeneratorField
    init: GeneratorState
    span: float = 1.0
    schedule: tuple[BranchEvent, ...] = (binary_event(),)
    depth: int = 8


def _profile(doc: dict, key: str):
    try:
        return profile_from_dict(doc[key])
    except KeyError:
        raise ParseError(f"missing field {key!r}", path=key) from None
    except (ValueError, TypeError) as e:
        raise ParseError(str(e), path=key) from None


def _event_from_dict(d: Any, path: str) -> BranchEvent:
    if not isinstance(d, dict) or not isinstance(d.get("rules"), list) or not d["rules"]:
        raise ParseError("branch event needs a non-empty 'rules' list", path=path)
    try:
        rules = tuple(InheritanceRule.from_dict(r) for r in d["rules"])
        return BranchEvent(rules, d.get("s_b"))
    except (ValueError, TypeError, KeyError) as e:
        raise ParseError(f"invalid branch event: {e}", path=path) from None


def generator_from_dict(doc: dict) -> GrowSpec:
    try:
        mode = PhaseMode(doc.get("phase_mode", "local"))
    except ValueError:
        raise ParseError("phase_mode must be 'local' or 'global'", path="phase_mode") from None
    fld = GeneratorField(_profile(doc, "rho"), _profile(doc, "kappa"), mode)
    init = doc.get("init", [0.0, 0.0, math.pi / 2])
    if (not isinstance(init, list) or len(init) not in (3, 4)
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in init)):
        raise ParseError("init must be [x, y, theta] or [x, y, theta, tau]", path="init")
    span = doc.get("span", 1.0)
    if isinstance(span, bool) or not isinstance(span, (int, float)) or not span > 0:
        raise ParseError("span must be a positive number", path="span")
    raw = doc.get("schedule")
    schedule = (binary_event(),) if raw is None else tuple(
        _event_from_dict(e, f"schedule[{i}]") for i, e in enumerate(raw if isinstance(raw, list) else [raw]))
    if not schedule:
        raise ParseError("schedule must not be empty", path="schedule")
    return GrowSpec(fld, GeneratorState(*(float(v) for v in init)), float(span), schedule,
                    _depth(doc, 8))


def generator_to_dict(spec: GrowSpec) -> dict:
    return {
        "v": 1,
        "kind": "generator",
        "rho": profile_to_dict(spec.field.rho),
        "kappa": profile_to_dict(spec.field.kappa),
        "phase_mode": spec.field.phase_mode.value,
        "span": spec.span,
        "init": list(spec.init.as_tuple()),
        "depth": spec.depth,
        "schedule": [{"s_b": e.s_b, "rules": [r.to_dict() for r in e.rules]} for e in spec.schedule],
    }


def _depth(doc: dict, default: int | None) -> int | None:
    d = doc.get("depth", default)
    if d is None:
        return None
    if isinstance(d, bool) or not isinstance(d, int) or d < 0:
        raise ParseError("depth must be a non-negative integer", path="depth")
    return d


Spec = Union[IFSSpec, LSystemSpec, GrowSpec, GeneratorTree]


def load_spec(text: str) -> tuple[Spec, int | None]:
    """Parse any supported document; returns the object and its declared depth."""
    doc = load_json(text)
    kind = doc.get("kind")
    if kind == "ifs":
        return ifs_from_dict(doc), _depth(doc, None)
    if kind == "lsystem":
        return lsystem_from_dict(doc), _depth(doc, None)
    if kind == "generator":
        g = generator_from_dict(doc)
        return g, g.depth
    if kind == "tree":
        try:
            return tree_from_dict(doc), None
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"invalid tree document: {e}") from None
    raise ParseError(f"unknown document kind {kind!r}", path="kind")

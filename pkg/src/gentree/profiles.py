"""Closed family of analytic scalar profiles used as speed and turning-rate carriers.

Five variants are supported. Keeping the family closed means scaling and sign
flips of a profile stay symbolic, and closed-form integration remains a simple
case analysis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np


@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class Exponential:
    """``base ** s``."""

    base: float

    def __post_init__(self):
        if not (self.base > 0 and math.isfinite(self.base)):
            raise ValueError(f"exponential base must be positive and finite, got {self.base!r}")


@dataclass(frozen=True)
class Affine:
    a: float
    b: float


@dataclass(frozen=True)
class Sinusoid:
    """``k0 + eps * sin(omega * s)``."""

    k0: float
    eps: float
    omega: float


@dataclass(frozen=True)
class Scaled:
    factor: float
    inner: "AnalyticProfile"


AnalyticProfile = Union[Constant, Exponential, Affine, Sinusoid, Scaled]


def eval_profile(p: AnalyticProfile, s):
    """Evaluate ``p`` at ``s``. Accepts a float or a numpy array."""
    if isinstance(p, Constant):
        if isinstance(s, np.ndarray):
            return np.full(s.shape, float(p.value))
        return float(p.value)
    if isinstance(p, Exponential):
        if isinstance(s, np.ndarray):
            return np.power(p.base, s)
        return p.base ** s
    if isinstance(p, Affine):
        return p.a + p.b * s
    if isinstance(p, Sinusoid):
        sin = np.sin if isinstance(s, np.ndarray) else math.sin
        return p.k0 + p.eps * sin(p.omega * s)
    if isinstance(p, Scaled):
        return p.factor * eval_profile(p.inner, s)
    raise TypeError(f"not an analytic profile: {p!r}")


def integral(p: AnalyticProfile, a: float, b: float) -> float:
    """Exact definite integral of ``p`` over ``[a, b]``."""
    if isinstance(p, Constant):
        return p.value * (b - a)
    if isinstance(p, Exponential):
        log_base = math.log(p.base)
        if log_base == 0.0:
            return b - a
        return (p.base ** b - p.base ** a) / log_base
    if isinstance(p, Affine):
        return p.a * (b - a) + 0.5 * p.b * (b * b - a * a)
    if isinstance(p, Sinusoid):
        # eps * (cos(wa) - cos(wb)) / w in product form, stable as w -> 0
        half = 0.5 * p.omega * (b - a)
        sinc = float(np.sinc(half / math.pi))
        return p.k0 * (b - a) + p.eps * (b - a) * math.sin(0.5 * p.omega * (a + b)) * sinc
    if isinstance(p, Scaled):
        return p.factor * integral(p.inner, a, b)
    raise TypeError(f"not an analytic profile: {p!r}")


def scale(p: AnalyticProfile, factor: float) -> AnalyticProfile:
    """Return ``factor * p``, merging nested ``Scaled`` wrappers."""
    if isinstance(p, Scaled):
        return Scaled(factor * p.factor, p.inner)
    return Scaled(factor, p)


def unscale(p: AnalyticProfile) -> tuple[float, AnalyticProfile]:
    """Split ``p`` into ``(factor, base)`` with ``base`` not a ``Scaled``."""
    factor = 1.0
    while isinstance(p, Scaled):
        factor *= p.factor
        p = p.inner
    return factor, p


# -- serialization ---------------------------------------------------------

def profile_to_dict(p: AnalyticProfile) -> dict:
    if isinstance(p, Constant):
        return {"kind": "constant", "value": p.value}
    if isinstance(p, Exponential):
        return {"kind": "exponential", "base": p.base}
    if isinstance(p, Affine):
        return {"kind": "affine", "a": p.a, "b": p.b}
    if isinstance(p, Sinusoid):
        return {"kind": "sinusoid", "k0": p.k0, "eps": p.eps, "omega": p.omega}
    if isinstance(p, Scaled):
        return {"kind": "scaled", "factor": p.factor, "inner": profile_to_dict(p.inner)}
    raise TypeError(f"not an analytic profile: {p!r}")


_FIELDS = {
    "constant": (Constant, ("value",)),
    "exponential": (Exponential, ("base",)),
    "affine": (Affine, ("a", "b")),
    "sinusoid": (Sinusoid, ("k0", "eps", "omega")),
}


def profile_from_dict(d: dict) -> AnalyticProfile:
    """Inverse of :func:`profile_to_dict`; raises ``ValueError`` or ``KeyError`` on bad input."""
    if not isinstance(d, dict):
        raise ValueError(f"profile must be an object, got {type(d).__name__}")
    kind = d.get("kind")
    if kind == "scaled":
        return Scaled(_real(d["factor"], "factor"), profile_from_dict(d["inner"]))
    if kind not in _FIELDS:
        raise ValueError(f"unknown profile kind {kind!r}")
    cls, names = _FIELDS[kind]
    extra = set(d) - set(names) - {"kind"}
    if extra:
        raise ValueError(f"unexpected profile fields {sorted(extra)}")
    return cls(*(_real(d[n], n) for n in names))


def _real(v, name: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"{name} must be a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"{name} must be finite")
    return v

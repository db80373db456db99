"""Planar generator ODE and its integrators.

State is ``(x, y, theta)`` plus a global phase ``tau`` advancing at unit rate::

    dx/ds = rho(u) cos(theta),  dy/ds = rho(u) sin(theta),  dtheta/ds = kappa(u)

where ``u`` is the local parameter ``s`` or the global phase ``tau`` depending on
the field's phase mode.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field as dc_field
from typing import Iterator

import numpy as np

from .errors import InvalidField, NonFiniteState, Unsupported
from .profiles import AnalyticProfile, Constant, Exponential, eval_profile, unscale

DEFAULT_STEP = 1e-3
STRAIGHT_KAPPA = 1e-12
POSITIVITY_SAMPLES = 256


class PhaseMode(str, enum.Enum):
    LOCAL = "local"
    GLOBAL = "global"


@dataclass(frozen=True)
class GeneratorState:
    x: float
    y: float
    theta: float
    tau: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.theta, self.tau)):
            raise NonFiniteState(f"non-finite generator state {self}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.theta, self.tau)

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class GeneratorField:
    rho: AnalyticProfile
    kappa: AnalyticProfile
    phase_mode: PhaseMode = PhaseMode.LOCAL

    def __post_init__(self):
        object.__setattr__(self, "phase_mode", PhaseMode(self.phase_mode))

    def phase_offset(self, init: GeneratorState, s_start: float) -> float:
        """Offset ``c`` such that profiles are evaluated at ``s + c``."""
        if self.phase_mode is PhaseMode.GLOBAL:
            return init.tau - s_start
        return 0.0

    def check_speed(self, init: GeneratorState, span: tuple[float, float]) -> None:
        off = self.phase_offset(init, span[0])
        u = np.linspace(span[0], span[1], POSITIVITY_SAMPLES + 1) + off
        with np.errstate(all="ignore"):
            rho = np.asarray(eval_profile(self.rho, u), dtype=float)
        if not np.all(rho > 0):
            raise InvalidField(f"speed profile {self.rho!r} is not positive on phase "
                               f"[{u[0]}, {u[-1]}]")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Integrated samples; ``states`` has columns ``x, y, theta, tau``."""

    s: np.ndarray
    states: np.ndarray
    field_used: GeneratorField = dc_field(repr=False)

    def __post_init__(self):
        s = np.array(self.s, dtype=float)
        states = np.array(self.states, dtype=float).reshape(-1, 4)
        if len(s) == 0 or len(s) != len(states):
            raise ValueError("trajectory needs one state per sample and at least one sample")
        if len(s) > 1 and not np.all(np.diff(s) > 0):
            raise ValueError("sample parameters must be strictly increasing")
        s.flags.writeable = False
        states.flags.writeable = False
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "states", states)

    def __len__(self) -> int:
        return len(self.s)

    @property
    def span(self) -> tuple[float, float]:
        return (float(self.s[0]), float(self.s[-1]))

    def state(self, i: int) -> GeneratorState:
        return GeneratorState(*(float(v) for v in self.states[i]))

    @property
    def start(self) -> GeneratorState:
        return self.state(0)

    @property
    def end(self) -> GeneratorState:
        return self.state(-1)

    @property
    def samples(self) -> Iterator[tuple[float, GeneratorState]]:
        for i in range(len(self.s)):
            yield float(self.s[i]), self.state(i)

    def endpoints_only(self) -> "Trajectory":
        idx = [0] if len(self.s) == 1 else [0, len(self.s) - 1]
        return Trajectory(self.s[idx], self.states[idx], self.field_used)


def realize(traj: Trajectory) -> np.ndarray:
    """Project every sample onto the plane; returns an ``(N, 2)`` array."""
    return np.array(traj.states[:, :2])


def arc_length(points: np.ndarray) -> float:
    d = np.diff(np.asarray(points, dtype=float), axis=0)
    return float(np.sum(np.hypot(d[:, 0], d[:, 1])))


def sample_grid(s_start: float, s_end: float, step: float | None) -> np.ndarray:
    """Uniform grid from ``s_start`` with a shortened last step landing on ``s_end``.

    ``step=None`` gives the two endpoints only.
    """
    if not (math.isfinite(s_start) and math.isfinite(s_end)) or s_end < s_start:
        raise ValueError(f"invalid span ({s_start}, {s_end})")
    if s_end == s_start:
        return np.array([s_start])
    if step is None:
        return np.array([s_start, s_end])
    if not step > 0:
        raise ValueError("step must be positive")
    n = int(math.floor((s_end - s_start) / step))
    grid = s_start + step * np.arange(n + 1)
    grid = grid[grid < s_end - 1e-9 * step]
    return np.append(grid, s_end)


# -- closed form -------------------------------------------------------------

def _closed_form_terms(field: GeneratorField, init: GeneratorState, s_start: float):
    """Reduce the field to ``(speed at s_start, log growth, turning rate)`` or raise."""
    rho_factor, rho_base = unscale(field.rho)
    kappa_factor, kappa_base = unscale(field.kappa)
    if not isinstance(kappa_base, Constant):
        raise Unsupported(f"no closed form for turning rate {field.kappa!r}")
    omega = kappa_factor * kappa_base.value
    if isinstance(rho_base, Constant):
        return rho_factor * rho_base.value, 0.0, omega
    if isinstance(rho_base, Exponential):
        u0 = s_start + field.phase_offset(init, s_start)
        return rho_factor * rho_base.base ** u0, math.log(rho_base.base), omega
    raise Unsupported(f"no closed form for speed {field.rho!r}")


def planar_displacement(speed0: float, growth: float, omega: float,
                        theta0: float, sigma):
    """Displacement after running for ``sigma`` with speed ``speed0 * exp(growth * s)``
    and constant turning rate ``omega``, starting at heading ``theta0``.

    This is ``speed0 * exp(i theta0) * (exp(w sigma) - 1) / w`` with
    ``w = growth + i omega``, evaluated without cancellation for small ``|w| sigma``.
    Works on floats or arrays; returns ``(dx, dy)``.
    """
    sigma = np.asarray(sigma, dtype=float)
    if growth == 0.0:
        # circular arc: chord = speed * sigma * sinc(omega sigma / 2) at mid-heading
        if abs(omega) < STRAIGHT_KAPPA:
            dx = speed0 * sigma * math.cos(theta0)
            dy = speed0 * sigma * math.sin(theta0)
            return dx, dy
        half = 0.5 * omega * sigma
        chord = speed0 * sigma * np.sinc(half / math.pi)
        mid = theta0 + half
        return chord * np.cos(mid), chord * np.sin(mid)
    w = complex(growth, omega)
    if abs(w) < STRAIGHT_KAPPA:
        return speed0 * sigma * math.cos(theta0), speed0 * sigma * math.sin(theta0)
    ea = np.exp(growth * sigma)
    # exp(w sigma) - 1 split so both parts stay accurate near zero
    re = np.expm1(growth * sigma) - 2.0 * ea * np.sin(0.5 * omega * sigma) ** 2
    im = ea * np.sin(omega * sigma)
    z = speed0 * complex(math.cos(theta0), math.sin(theta0)) * (re + 1j * im) / w
    return z.real, z.imag


def integrate_closed_form(field: GeneratorField, init: GeneratorState,
                          span: tuple[float, float], step: float | None = DEFAULT_STEP) -> Trajectory:
    """Exact trajectory for constant or exponential speed with constant turning rate.

    Raises :class:`Unsupported` for any other profile combination.
    """
    s0, s1 = float(span[0]), float(span[1])
    speed0, growth, omega = _closed_form_terms(field, init, s0)
    field.check_speed(init, (s0, s1))
    grid = sample_grid(s0, s1, step)
    sigma = grid - s0
    dx, dy = planar_displacement(speed0, growth, omega, init.theta, sigma)
    states = np.empty((len(grid), 4))
    states[:, 0] = init.x + dx
    states[:, 1] = init.y + dy
    states[:, 2] = init.theta + omega * sigma
    states[:, 3] = init.tau + sigma
    states[0] = init.as_tuple()
    if not np.all(np.isfinite(states)):
        raise NonFiniteState("closed-form evaluation produced non-finite values")
    return Trajectory(grid, states, field)


# -- RK4 ---------------------------------------------------------------------

def integrate_rk4(field: GeneratorField, init: GeneratorState,
                  span: tuple[float, float], step: float = DEFAULT_STEP) -> Trajectory:
    """Classical fixed-step fourth-order Runge-Kutta.

    The turning rate does not depend on the state, so each step's stage values
    are known in advance and the recurrence reduces to running sums. Arithmetic
    is the same as the textbook stage-by-stage loop.
    """
    s0, s1 = float(span[0]), float(span[1])
    if not step > 0:
        raise ValueError("step must be positive")
    if s1 == s0:
        return Trajectory(np.array([s0]), np.array([init.as_tuple()]), field)
    field.check_speed(init, (s0, s1))
    grid = sample_grid(s0, s1, step)
    h = np.diff(grid)
    u = grid[:-1] + field.phase_offset(init, s0)
    with np.errstate(all="ignore"):
        r1 = np.asarray(eval_profile(field.rho, u), dtype=float)
        r2 = np.asarray(eval_profile(field.rho, u + 0.5 * h), dtype=float)
        r4 = np.asarray(eval_profile(field.rho, u + h), dtype=float)
        k1 = np.asarray(eval_profile(field.kappa, u), dtype=float)
        k2 = np.asarray(eval_profile(field.kappa, u + 0.5 * h), dtype=float)
        k4 = np.asarray(eval_profile(field.kappa, u + h), dtype=float)

        dtheta = h / 6.0 * (k1 + 4.0 * k2 + k4)
        theta = np.cumsum(np.concatenate(([init.theta], dtheta)))
        th = theta[:-1]
        a1, a2, a3, a4 = th, th + 0.5 * h * k1, th + 0.5 * h * k2, th + h * k2
        dx = h / 6.0 * (r1 * np.cos(a1) + 2.0 * r2 * np.cos(a2) + 2.0 * r2 * np.cos(a3) + r4 * np.cos(a4))
        dy = h / 6.0 * (r1 * np.sin(a1) + 2.0 * r2 * np.sin(a2) + 2.0 * r2 * np.sin(a3) + r4 * np.sin(a4))

    states = np.empty((len(grid), 4))
    states[:, 0] = np.cumsum(np.concatenate(([init.x], dx)))
    states[:, 1] = np.cumsum(np.concatenate(([init.y], dy)))
    states[:, 2] = theta
    states[:, 3] = init.tau + (grid - s0)
    states[0] = init.as_tuple()
    if not np.all(np.isfinite(states)):
        bad = int(np.argmin(np.all(np.isfinite(states), axis=1)))
        raise NonFiniteState(f"RK4 produced a non-finite state at s={grid[bad]}")
    return Trajectory(grid, states, field)


def integrate(field: GeneratorField, init: GeneratorState, span: tuple[float, float],
              integrator: str = "auto", step: float = DEFAULT_STEP,
              keep: str = "all") -> Trajectory:
    """Dispatch to the closed form or RK4.

    ``integrator`` is ``"auto"`` (closed form when available), ``"closed"`` or
    ``"rk4"``. ``keep="ends"`` retains only the first and last samples.
    """
    if keep not in ("all", "ends"):
        raise ValueError(f"keep must be 'all' or 'ends', got {keep!r}")
    if integrator == "rk4":
        traj = integrate_rk4(field, init, span, step)
    elif integrator in ("auto", "closed"):
        try:
            traj = integrate_closed_form(field, init, span, step if keep == "all" else None)
        except Unsupported:
            if integrator == "closed":
                raise
            traj = integrate_rk4(field, init, span, step)
    else:
        raise ValueError(f"unknown integrator {integrator!r}")
    return traj.endpoints_only() if keep == "ends" else traj

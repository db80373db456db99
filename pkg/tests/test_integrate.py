import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gentree.errors import InvalidField, NonFiniteState, Unsupported
from gentree.integrate import (
    GeneratorField, GeneratorState, PhaseMode, Trajectory, arc_length, integrate,
    integrate_closed_form, integrate_rk4, realize, sample_grid,
)
from gentree.profiles import Affine, Constant, Exponential, Scaled, Sinusoid, integral

ORIGIN = GeneratorState(0.0, 0.0, 0.0, 0.0)
QUARTER = GeneratorField(Constant(1.0), Constant(math.pi / 2))
SPIRAL = GeneratorField(Exponential(0.88), Constant(math.pi / 10))

# mpmath quadrature of 0.88**s * exp(i pi s / 10) over [0, 1] (30 digits),
# cross-checked against scipy DOP853 at rtol 1e-13
SPIRAL_END = (0.92384471317316214594, 0.1431505805578226981)


def end_xyz(traj):
    e = traj.end
    return np.array([e.x, e.y, e.theta])


def test_straight_segment_closed_form():
    traj = integrate_closed_form(GeneratorField(Constant(1.0), Constant(0.0)), ORIGIN, (0.0, 1.0))
    assert np.array_equal(end_xyz(traj), [1.0, 0.0, 0.0])


def test_quarter_arc_closed_form():
    traj = integrate_closed_form(QUARTER, ORIGIN, (0.0, 1.0))
    assert np.allclose(end_xyz(traj), [2 / math.pi, 2 / math.pi, math.pi / 2], atol=1e-15)


def test_spiral_closed_form_matches_quadrature():
    traj = integrate_closed_form(SPIRAL, ORIGIN, (0.0, 1.0))
    assert np.allclose(end_xyz(traj)[:2], SPIRAL_END, atol=1e-14)
    assert traj.end.theta == pytest.approx(math.pi / 10, abs=1e-15)


def test_rk4_exact_on_straight_line():
    traj = integrate_rk4(GeneratorField(Constant(1.0), Constant(0.0)), ORIGIN, (0.0, 1.0))
    assert np.allclose(end_xyz(traj), [1.0, 0.0, 0.0], atol=1e-12)


def test_rk4_quarter_arc():
    traj = integrate_rk4(QUARTER, ORIGIN, (0.0, 1.0), step=1e-3)
    assert np.allclose(end_xyz(traj), [2 / math.pi, 2 / math.pi, math.pi / 2], atol=1e-8)


def test_rk4_spiral():
    traj = integrate_rk4(SPIRAL, ORIGIN, (0.0, 1.0), step=1e-3)
    assert np.allclose(end_xyz(traj)[:2], SPIRAL_END, atol=1e-8)


def test_rk4_zero_span():
    init = GeneratorState(1.0, 2.0, 0.3, 4.0)
    traj = integrate_rk4(QUARTER, init, (0.0, 0.0))
    assert len(traj) == 1 and traj.start == init


def test_rk4_fourth_order_convergence():
    errs = []
    exact = end_xyz(integrate_closed_form(SPIRAL, ORIGIN, (0.0, 1.0)))
    for h in (0.1, 0.05):
        errs.append(np.abs(end_xyz(integrate_rk4(SPIRAL, ORIGIN, (0.0, 1.0), h)) - exact).max())
    assert 12 < errs[0] / errs[1] < 20


def test_sample_grid_lands_on_end():
    g = sample_grid(0.0, 1.0, 0.3)
    assert g[0] == 0.0 and g[-1] == 1.0
    assert np.allclose(np.diff(g), [0.3, 0.3, 0.3, 0.1])
    assert len(sample_grid(0.0, 1.0, 1e-3)) == 1001
    assert list(sample_grid(2.0, 5.0, None)) == [2.0, 5.0]


def test_global_phase_evaluates_profiles_at_tau():
    init = GeneratorState(0.0, 0.0, 0.0, 3.0)
    glob = integrate_closed_form(GeneratorField(Exponential(0.88), Constant(0.0), PhaseMode.GLOBAL),
                                 init, (0.0, 1.0), None)
    local = integrate_closed_form(GeneratorField(Exponential(0.88), Constant(0.0)), init, (0.0, 1.0), None)
    assert glob.end.x == pytest.approx(0.88 ** 3 * local.end.x, rel=1e-14)
    assert glob.end.tau == 4.0


def test_global_phase_rk4_agrees_with_closed_form():
    f = GeneratorField(Exponential(0.7), Scaled(-1.0, Constant(0.4)), PhaseMode.GLOBAL)
    init = GeneratorState(1.0, -2.0, 0.5, 2.5)
    a = integrate_closed_form(f, init, (0.0, 1.0))
    b = integrate_rk4(f, init, (0.0, 1.0))
    assert np.abs(a.states - b.states).max() < 1e-10


@pytest.mark.parametrize("field", [
    GeneratorField(Affine(1.0, 0.5), Constant(0.2)),
    GeneratorField(Constant(1.0), Sinusoid(2.0, 0.5, math.pi)),
])
def test_unsupported_families(field):
    with pytest.raises(Unsupported):
        integrate_closed_form(field, ORIGIN, (0.0, 1.0))
    with pytest.raises(Unsupported):
        integrate(field, ORIGIN, (0.0, 1.0), integrator="closed")
    # auto falls back to RK4
    traj = integrate(field, ORIGIN, (0.0, 1.0), integrator="auto")
    assert len(traj) == 1001


def test_non_positive_speed_rejected():
    with pytest.raises(InvalidField):
        integrate_rk4(GeneratorField(Affine(0.5, -1.0), Constant(0.0)), ORIGIN, (0.0, 1.0))


def test_non_finite_state():
    with pytest.raises(NonFiniteState):
        GeneratorState(float("nan"), 0.0, 0.0)
    with pytest.raises(NonFiniteState):
        integrate_rk4(GeneratorField(Exponential(1e300), Constant(0.0)), ORIGIN, (0.0, 3.0), 0.5)


def test_realize():
    single = Trajectory(np.array([0.0]), np.array([[3.0, 4.0, 1.0, 0.0]]), QUARTER)
    assert realize(single).tolist() == [[3.0, 4.0]]
    seg = integrate_closed_form(GeneratorField(Constant(1.0), Constant(0.0)), ORIGIN, (0.0, 1.0))
    pts = realize(seg)
    assert pts.shape == (1001, 2)
    assert pts[0].tolist() == [0.0, 0.0] and pts[-1].tolist() == [1.0, 0.0]
    arc = realize(integrate_closed_form(QUARTER, ORIGIN, (0.0, 1.0)))
    assert np.allclose(arc[-1], [2 / math.pi, 2 / math.pi], atol=1e-15)


def test_trajectory_is_immutable():
    traj = integrate_closed_form(QUARTER, ORIGIN, (0.0, 1.0))
    with pytest.raises(ValueError):
        traj.states[0, 0] = 5.0


def test_endpoints_only():
    traj = integrate(SPIRAL, ORIGIN, (0.0, 1.0), keep="ends")
    assert len(traj) == 2 and traj.span == (0.0, 1.0)


# -- properties --------------------------------------------------------------

speeds = st.one_of(
    st.builds(Constant, st.floats(0.1, 3)),
    st.builds(Exponential, st.floats(0.2, 3)),
    st.builds(lambda f, b: Scaled(f, Exponential(b)), st.floats(0.1, 2), st.floats(0.3, 2)),
)
turns = st.one_of(
    st.builds(Constant, st.floats(-3, 3)),
    st.builds(lambda f, c: Scaled(f, Constant(c)), st.sampled_from([-1.0, 1.0, 0.5]), st.floats(-3, 3)),
)
states = st.builds(GeneratorState, st.floats(-5, 5), st.floats(-5, 5), st.floats(-7, 7), st.floats(0, 5))


@settings(max_examples=60, deadline=None)
@given(speeds, turns, states, st.sampled_from(list(PhaseMode)), st.floats(0.2, 2))
def test_closed_form_and_rk4_agree(rho, kappa, init, mode, length):
    f = GeneratorField(rho, kappa, mode)
    a = integrate_closed_form(f, init, (0.0, length))
    b = integrate_rk4(f, init, (0.0, length), 1e-3)
    assert np.abs(a.states - b.states).max() < 1e-8


any_kappa = st.one_of(
    turns,
    st.builds(Sinusoid, st.floats(-2, 2), st.floats(-2, 2), st.floats(-6, 6)),
    st.builds(Affine, st.floats(-2, 2), st.floats(-2, 2)),
    st.builds(Exponential, st.floats(0.3, 3)),
)


@settings(max_examples=60, deadline=None)
@given(any_kappa, st.floats(-1, 1), st.floats(0.1, 2))
def test_heading_additivity(kappa, s0, length):
    f = GeneratorField(Constant(1.0), kappa)
    traj = integrate(f, ORIGIN, (s0, s0 + length))
    assert traj.end.theta - traj.start.theta == pytest.approx(integral(kappa, s0, s0 + length), abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(speeds, any_kappa, st.floats(0.1, 2))
def test_arc_length_positive(rho, kappa, length):
    traj = integrate(GeneratorField(rho, kappa), ORIGIN, (0.0, length), step=0.01)
    assert arc_length(realize(traj)) > 0


def _reflect(p, S):
    """Profile q with q(r) = p(S - r)."""
    if isinstance(p, Constant):
        return p
    if isinstance(p, Exponential):
        return Scaled(p.base ** S, Exponential(1.0 / p.base))
    if isinstance(p, Affine):
        return Affine(p.a + p.b * S, -p.b)
    if isinstance(p, Scaled):
        return Scaled(p.factor, _reflect(p.inner, S))
    raise NotImplementedError


@settings(max_examples=40, deadline=None)
@given(st.one_of(speeds, st.builds(Affine, st.floats(2, 3), st.floats(-1, 1))),
       st.one_of(turns, st.builds(Affine, st.floats(-2, 2), st.floats(-2, 2))),
       states, st.floats(0.2, 2))
def test_rk4_time_reversal(rho, kappa, init, S):
    fwd = integrate_rk4(GeneratorField(rho, kappa), init, (0.0, S), 1e-3)
    end = fwd.end
    # running backwards: negated velocity is the same speed along heading + pi
    back_field = GeneratorField(_reflect(rho, S), Scaled(-1.0, _reflect(kappa, S)))
    back = integrate_rk4(back_field, GeneratorState(end.x, end.y, end.theta + math.pi, 0.0), (0.0, S), 1e-3)
    b = back.end
    assert np.allclose([b.x, b.y, b.theta - math.pi], [init.x, init.y, init.theta], atol=1e-8)

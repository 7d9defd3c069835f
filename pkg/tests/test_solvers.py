import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abench.errors import DegenerateStepsError, LinearSolveFailure, MethodParseError, NonFiniteError
from abench.linalg import norm2
from abench.problems import Problem, get_problem
from abench.solvers import (
    ACCELERATED,
    ANDERSON,
    NEWTON,
    MethodSpec,
    accelerated_newton_step,
    advance,
    anderson_gamma1,
    gamma_psi_consistency,
    initial_state,
    newton_step,
    psi_alpha,
    psi_extremum,
)


def _affine(A, b):
    A, b = np.asarray(A, float), np.asarray(b, float)
    return Problem("AFF", "affine", len(b), lambda x: A @ x - b, lambda x: A, np.zeros(len(b)))


def _square():
    return Problem("SQ", "square", 1, lambda x: x ** 2, lambda x: np.array([[2 * x[0]]]), np.ones(1))


def _run(problem, text, steps, beta=None):
    spec = MethodSpec.parse(text, beta=beta)
    state = initial_state(problem)
    for _ in range(steps):
        state = advance(problem, state, spec)
    return state


# -- method strings ------------------------------------------------------------

def test_parse_grammar():
    assert MethodSpec.parse("newton").kind == NEWTON
    na4 = MethodSpec.parse("na4")
    assert (na4.kind, na4.m, na4.safeguard) == (ANDERSON, 4, False)
    assert MethodSpec.parse("na1s").safeguard
    ks = MethodSpec.parse("ks:1.0:0.9")
    assert (ks.kind, ks.C, ks.alpha) == (ACCELERATED, 1.0, 0.9)
    assert ks.solves_per_iteration == 2 and na4.solves_per_iteration == 1


@pytest.mark.parametrize("bad", ["", "Newton", "na", "na-1", "na2s", "ks:1.0", "ks:a:b",
                                 "ks:0:0.5", "ks:1.0:1.0", "ks:1.0:0"])
def test_parse_rejects(bad):
    with pytest.raises(MethodParseError):
        MethodSpec.parse(bad)


def test_beta_validation_and_label():
    with pytest.raises(MethodParseError):
        MethodSpec.parse("newton", beta=0.0)
    with pytest.raises(MethodParseError):
        MethodSpec.parse("newton", beta=1.5)
    assert MethodSpec.parse("na1", beta=0.8).label == "na1 beta=0.8"
    assert MethodSpec.parse("na1", beta=1.0).label == "na1"


# -- Newton --------------------------------------------------------------------

def test_newton_exact_on_affine_map():
    A = [[4.0, 1.0], [2.0, 3.0]]
    b = [1.0, 2.0]
    p = _affine(A, b)
    x1, _ = newton_step(p, np.array([5.0, -7.0]))
    np.testing.assert_allclose(x1, np.linalg.solve(A, b), rtol=1e-14)


def test_newton_halves_on_double_root():
    x1, w = newton_step(_square(), np.array([1.0]))
    assert x1[0] == 0.5 and w[0] == -0.5


def test_newton_damping():
    x1, w = newton_step(_square(), np.array([1.0]), beta=0.5)
    assert x1[0] == 0.75 and w[0] == -0.5


def test_newton_b3_sixteen_steps():
    s = _run(get_problem("B3"), "newton", 16)
    assert norm2(s.fx) == pytest.approx(2.954e-9, rel=1e-3)


def test_newton_singular_jacobian():
    p = _square()
    with pytest.raises(LinearSolveFailure):
        newton_step(p, np.array([0.0]))


def test_newton_nonfinite_residual():
    p = Problem("NF", "nf", 1, lambda x: np.array([np.inf]), lambda x: np.eye(1), np.ones(1))
    with pytest.raises(NonFiniteError):
        initial_state(p)


# -- depth-one coefficient and psi ----------------------------------------------

def test_gamma1_examples():
    assert anderson_gamma1([0.0, 1.0], [1.0, 0.0]) == 0.5
    assert anderson_gamma1([2.0, 6.0], [1.0, 3.0]) == 2.0
    assert anderson_gamma1([-1.0, 2.0], [1.0, -2.0]) == 0.5


def test_gamma1_degenerate():
    with pytest.raises(DegenerateStepsError):
        anderson_gamma1([1.0, 2.0], [1.0, 2.0])


def test_psi_examples():
    for a in (-1.0, -0.3, 0.0, 0.5, 0.942, 0.99):
        assert psi_alpha(1.0, a) == 0.5
    assert psi_alpha(2.0, 0.0) == pytest.approx(0.8, rel=1e-15)
    assert psi_alpha(1 / 3, 0.6) == pytest.approx(-0.125, rel=1e-12)
    assert psi_alpha(2.0, 1.0) == pytest.approx(2.0)


def test_psi_extremum_at_point_six():
    r, v = psi_extremum(0.6, -1)
    assert r == pytest.approx(1 / 3, rel=1e-14)
    assert v == pytest.approx(-0.125, rel=1e-12)
    grid = np.linspace(1e-4, 1 - 1e-4, 200001)
    vals = (grid - 0.6) / (grid + 1 / grid - 1.2)
    assert grid[np.argmin(vals)] == pytest.approx(1 / 3, abs=1e-4)


def test_psi_extremes_at_safeguard_cosine():
    _, lo = psi_extremum(0.942, -1)
    _, hi = psi_extremum(0.942, +1)
    assert lo == pytest.approx(-0.9898, abs=1e-4)
    assert hi == pytest.approx(1.9898, abs=1e-4)


def test_psi_domain_errors():
    with pytest.raises(ValueError):
        psi_alpha(0.0, 0.5)
    with pytest.raises(ZeroDivisionError):
        psi_alpha(1.0, 1.0)


def test_gamma_psi_worked_example():
    g, p = gamma_psi_consistency([3.0, 4.0], [1.0, 0.0])
    assert g == pytest.approx(1.1, rel=1e-14) and p == pytest.approx(1.1, rel=1e-14)


vec = st.lists(st.floats(-100, 100, allow_nan=False), min_size=3, max_size=3)


@settings(max_examples=300)
@given(vec, vec)
def test_gamma_equals_psi(a, b):
    a, b = np.array(a), np.array(b)
    if min(norm2(a), norm2(b)) < 1e-3 or norm2(a - b) < 1e-3 * max(norm2(a), norm2(b)):
        return
    g, p = gamma_psi_consistency(a, b)
    assert g == pytest.approx(p, rel=1e-9, abs=1e-12)


@settings(max_examples=300)
@given(vec, vec)
def test_gamma_bounded_under_cosine_filter(a, b):
    a, b = np.array(a), np.array(b)
    if min(norm2(a), norm2(b)) < 1e-6 or norm2(a - b) < 1e-9:
        return
    if np.dot(a, b) / (norm2(a) * norm2(b)) <= 0.942:
        assert abs(anderson_gamma1(a, b)) < 2.0


@settings(max_examples=200)
@given(st.floats(1e-3, 1e3), st.floats(-1.0, 0.0))
def test_psi_bounded_by_one_for_nonpositive_cosine(r, a):
    assert abs(psi_alpha(r, a)) <= 1.0


# -- Anderson ------------------------------------------------------------------

@pytest.mark.parametrize("pid", ["B2", "B3", "D1", "D3", "P2D"])
def test_depth_zero_is_newton(pid):
    p = get_problem(pid)
    a = _run(p, "newton", 8)
    b = _run(p, "na0", 8)
    np.testing.assert_array_equal(a.x, b.x)


def test_first_anderson_step_is_newton():
    p = get_problem("D1")
    a = _run(p, "newton", 1)
    b = _run(p, "na3", 1)
    np.testing.assert_array_equal(a.x, b.x)
    assert b.last_gamma is None


def test_depth_one_convex_form():
    p = get_problem("D1")
    spec = MethodSpec.parse("na1")
    s0 = initial_state(p)
    s1 = advance(p, s0, spec)
    s2 = advance(p, s1, spec)
    g = float(s2.last_gamma[0])
    w1, w2 = s1.last_w, s2.last_w
    expected = (1 - g) * (s1.x + w2) + g * (s0.x + w1)
    np.testing.assert_allclose(s2.x, expected, rtol=1e-13, atol=1e-15)
    assert g == pytest.approx(anderson_gamma1(w2, w1), rel=1e-12)


def test_window_sizes():
    s = _run(get_problem("D3"), "na2", 5)
    assert len(s.history_x) == 3 and len(s.history_w) == 3


def test_b3_depth_one_three_steps():
    s = _run(get_problem("B3"), "na1", 3)
    assert norm2(s.fx) < 1e-16


def test_d3_depth_four_five_steps():
    s = _run(get_problem("D3"), "na4", 5)
    assert norm2(s.fx) < 1e-8


def test_zero_difference_matrix_falls_back_to_newton():
    # a constant residual with identity "Jacobian" repeats the same step, so F is zero
    p = Problem("CST", "constant", 2, lambda x: np.array([1.0, 1.0]), lambda x: np.eye(2),
                np.zeros(2))
    s = _run(p, "na1", 2)
    assert s.last_gamma is None
    np.testing.assert_array_equal(s.x, [-2.0, -2.0])


def test_safeguard_tracks_newton_on_b1():
    p = get_problem("B1")
    spec = MethodSpec.parse("na1s")
    s = initial_state(p)
    fired = 0
    for _ in range(12):
        prev = s
        s = advance(p, s, spec)
        if s.k > 1 and s.last_gamma is None:
            fired += 1
            xn, _ = newton_step(p, prev.x, 1.0, prev.fx)
            np.testing.assert_array_equal(s.x, xn)
    assert fired > 0


# -- accelerated Newton --------------------------------------------------------

def test_accelerated_step_by_hand():
    # f = x^2 from x = 1: predictor y = 1/2, corrector w = -1/4,
    # x_next = y + (2 - C |w|^alpha) w
    spec = MethodSpec.parse("ks:1.0:0.5")
    x1, w = accelerated_newton_step(_square(), np.array([1.0]), spec)
    assert w[0] == -0.25
    assert x1[0] == pytest.approx(0.5 + (2 - math.sqrt(0.25)) * -0.25, rel=1e-15)


def test_accelerated_counts_two_solves():
    s = _run(get_problem("D1"), "ks:1.0:0.9", 2)
    assert s.k == 2 and s.solve_count == 4


def test_accelerated_b3():
    s = _run(get_problem("B3"), "ks:1.0:0.9", 3)
    assert norm2(s.fx) == pytest.approx(5.964e-10, rel=1e-3)


def test_accelerated_uses_problem_damping():
    p = get_problem("B6", 20)
    spec = MethodSpec.parse("ks:0.35:0.1")
    s = advance(p, initial_state(p), spec)
    x1, _ = accelerated_newton_step(p, p.x0, spec, beta=0.8)
    np.testing.assert_array_equal(s.x, x1)

"""Newton, Newton-Anderson(m) and two-parameter accelerated Newton iterations.

Each step is a pure function of the problem, the current :class:`SolverState`
and the :class:`MethodSpec`; the driver loop lives in :mod:`abench.harness`.

Method strings
--------------
``newton``          plain (damped) Newton
``na<m>``           Newton-Anderson with depth ``m`` (``na0`` is Newton)
``na1s``            Newton-Anderson(1) with the direction-cosine safeguard
``ks:<C>:<alpha>``  accelerated Newton predictor-corrector, e.g. ``ks:1.0:0.9``
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DegenerateInputError,
    DegenerateStepsError,
    EvaluationError,
    LinearSolveFailure,
    MethodParseError,
    NonFiniteError,
    SingularMatrixError,
)
from .linalg import direction_cosine, dot, lu_solve, norm2, qr_least_squares

NEWTON = "newton"
ANDERSON = "anderson"
ACCELERATED = "accelerated"

SAFEGUARD_COSINE = 0.942
_GAMMA_GUARD = 1e-30


@dataclass(frozen=True)
class MethodSpec:
    kind: str = NEWTON
    m: int = 0
    C: float | None = None
    alpha: float | None = None
    beta: float | None = None  # None: use the problem's default damping
    safeguard: bool = False
    safeguard_threshold: float = SAFEGUARD_COSINE
    text: str | None = None

    def __post_init__(self):
        if self.kind not in (NEWTON, ANDERSON, ACCELERATED):
            raise MethodParseError(f"unknown method kind {self.kind!r}")
        if self.kind == ANDERSON and self.m < 0:
            raise MethodParseError("Anderson depth must be >= 0")
        if self.kind == ACCELERATED:
            if self.C is None or not self.C > 0:
                raise MethodParseError("accelerated Newton requires C > 0")
            if self.alpha is None or not 0 < self.alpha < 1:
                raise MethodParseError("accelerated Newton requires 0 < alpha < 1")
        if self.beta is not None and not 0 < self.beta <= 1:
            raise MethodParseError("damping beta must lie in (0, 1]")
        if self.safeguard and not (self.kind == ANDERSON and self.m == 1):
            raise MethodParseError("the safeguard is defined only for Newton-Anderson(1)")

    @classmethod
    def parse(cls, text: str, beta: float | None = None) -> "MethodSpec":
        """Parse a method string (see module docstring)."""
        if text == "newton":
            return cls(NEWTON, beta=beta, text=text)
        mt = re.fullmatch(r"na(\d+)(s?)", text)
        if mt:
            return cls(ANDERSON, m=int(mt.group(1)), beta=beta,
                       safeguard=bool(mt.group(2)), text=text)
        mt = re.fullmatch(r"ks:([^:]+):([^:]+)", text)
        if mt:
            try:
                C, alpha = float(mt.group(1)), float(mt.group(2))
            except ValueError:
                raise MethodParseError(f"bad numbers in method string {text!r}") from None
            return cls(ACCELERATED, C=C, alpha=alpha, beta=beta, text=text)
        raise MethodParseError(f"unrecognized method string {text!r}")

    @property
    def label(self) -> str:
        if self.text is not None:
            base = self.text
        elif self.kind == NEWTON:
            base = "newton"
        elif self.kind == ANDERSON:
            base = f"na{self.m}" + ("s" if self.safeguard else "")
        else:
            base = f"ks:{self.C!r}:{self.alpha!r}"
        if self.beta is not None and self.beta != 1.0:
            base += f" beta={self.beta!r}"
        return base

    @property
    def solves_per_iteration(self) -> int:
        return 2 if self.kind == ACCELERATED else 1


@dataclass(frozen=True)
class SolverState:
    """Iterate plus the sliding windows Anderson mixing needs.

    ``history_x`` and ``history_w`` hold at most ``m + 1`` entries, oldest
    first; ``fx`` caches the residual at ``x``.
    """

    x: np.ndarray
    fx: np.ndarray
    k: int = 0
    history_x: tuple = ()
    history_w: tuple = ()
    last_gamma: np.ndarray | None = None
    last_w: np.ndarray | None = None
    solve_count: int = 0


def resolve_beta(spec: MethodSpec, problem) -> float:
    return problem.default_beta if spec.beta is None else spec.beta


def evaluate_residual(problem, x) -> np.ndarray:
    """Residual at ``x``; any non-finite value raises :class:`NonFiniteError`."""
    if not np.all(np.isfinite(x)):
        raise NonFiniteError("non-finite iterate")
    try:
        # overflow is detected below and reported as a status, not a warning
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            fx = np.asarray(problem.residual(x), dtype=float)
    except (EvaluationError, OverflowError, ZeroDivisionError, ValueError) as exc:
        raise NonFiniteError(str(exc)) from exc
    if not np.all(np.isfinite(fx)):
        raise NonFiniteError("non-finite residual")
    return fx


def initial_state(problem, x0=None) -> SolverState:
    x = np.array(problem.x0 if x0 is None else x0, dtype=float)
    return SolverState(x=x, fx=evaluate_residual(problem, x))


def newton_direction(problem, x, fx=None) -> np.ndarray:
    """``w = -f'(x)^{-1} f(x)``."""
    if fx is None:
        fx = evaluate_residual(problem, x)
    try:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            J = np.asarray(problem.jacobian(x), dtype=float)
    except (EvaluationError, OverflowError, ZeroDivisionError) as exc:
        raise NonFiniteError(str(exc)) from exc
    if not np.all(np.isfinite(J)):
        raise NonFiniteError("non-finite Jacobian")
    try:
        w = lu_solve(J, -fx)
    except SingularMatrixError as exc:
        raise LinearSolveFailure(str(exc)) from exc
    if not np.all(np.isfinite(w)):
        raise NonFiniteError("non-finite Newton step")
    return w


def newton_step(problem, x, beta: float = 1.0, fx=None):
    """One damped Newton step. Returns ``(x_next, w)``."""
    w = newton_direction(problem, x, fx)
    return x + beta * w, w


def anderson_gamma1(w_next, w_prev) -> float:
    """Closed-form depth-one coefficient ``(w', w' - w) / ||w' - w||^2``."""
    d = np.asarray(w_next, dtype=float) - np.asarray(w_prev, dtype=float)
    dd = dot(d, d)
    if not dd > _GAMMA_GUARD:
        raise DegenerateStepsError("consecutive update steps coincide")
    return dot(w_next, d) / dd


def psi_alpha(r: float, alpha: float) -> float:
    """``(r - alpha) / (r + 1/r - 2 alpha)``: the depth-one coefficient written
    in terms of the step-norm ratio ``r`` and direction cosine ``alpha``."""
    if not r > 0:
        raise ValueError("psi_alpha requires r > 0")
    if r == 1.0 and alpha == 1.0:
        raise ZeroDivisionError("psi_alpha is singular at r = 1, alpha = 1")
    return (r - alpha) / (r + 1.0 / r - 2.0 * alpha)


def psi_extremum(alpha: float, branch: int = -1) -> tuple[float, float]:
    """Stationary point ``(r, psi)`` of ``psi_alpha`` for ``0 < alpha < 1``.

    ``branch=-1`` gives the minimum at ``r < 1``, ``branch=+1`` the maximum
    at ``r > 1``.
    """
    s = math.sqrt(1.0 - alpha * alpha)
    r = (1.0 + branch * s) / alpha
    a2 = 1.0 / (alpha * alpha)
    psi = ((2.0 * a2 - 1.0) * (1.0 + branch * s) - 1.0) / (2.0 * (a2 - 1.0) * (1.0 + branch * s))
    return r, psi


def gamma_psi_consistency(w_next, w_prev) -> tuple[float, float]:
    """The depth-one coefficient computed directly and through ``psi_alpha``."""
    gamma = anderson_gamma1(w_next, w_prev)
    r = norm2(w_next) / norm2(w_prev)
    psi = psi_alpha(r, direction_cosine(w_next, w_prev))
    return gamma, psi


def _push(window: tuple, item, size: int) -> tuple:
    return (window + (item,))[-size:]


def anderson_step(problem, state: SolverState, spec: MethodSpec) -> SolverState:
    """Advance a Newton-Anderson(m) iteration by one iterate.

    The first step (``state.k == 0``) is a plain damped Newton step. When the
    least-squares matrix is zero, or the safeguard fires, the step falls back
    to damped Newton and ``last_gamma`` is ``None``.
    """
    beta = resolve_beta(spec, problem)
    m = spec.m
    x = state.x
    w = newton_direction(problem, x, state.fx)
    x_next = x + beta * w
    gamma = None

    mk = min(state.k, m, len(state.history_w), len(state.history_x) - 1)
    if mk >= 1:
        use_newton = False
        if spec.safeguard:
            w_prev = state.history_w[-1]
            if norm2(w) > 0 and norm2(w_prev) > 0:
                use_newton = direction_cosine(w, w_prev) > spec.safeguard_threshold
        if not use_newton:
            ws = state.history_w + (w,)
            xs = state.history_x
            # newest difference first
            F = np.column_stack([ws[-1 - j] - ws[-2 - j] for j in range(mk)])
            E = np.column_stack([xs[-1 - j] - xs[-2 - j] for j in range(mk)])
            try:
                gamma = qr_least_squares(F, w)
            except DegenerateInputError:
                gamma = None
            if gamma is not None:
                x_next = x + beta * w - (E + beta * F) @ gamma

    size = m + 1
    return SolverState(
        x=x_next,
        fx=evaluate_residual(problem, x_next),
        k=state.k + 1,
        history_x=_push(state.history_x if state.history_x else (x,), x_next, size),
        history_w=_push(state.history_w, w, size),
        last_gamma=gamma,
        last_w=w,
        solve_count=state.solve_count + 1,
    )


def accelerated_newton_step(problem, x, spec: MethodSpec, fx=None, beta: float | None = None):
    """Predictor-corrector step; returns ``(x_next, w)`` with ``w`` the corrector.

    ``y = x + beta * w_hat`` with ``w_hat`` the Newton step at ``x``; ``w`` is
    the Newton step at ``y`` and ``x_next = y + (2 - C ||w||^alpha) w``, an
    over-relaxed corrector (a double step when ``C ||w||^alpha`` is small).
    """
    if beta is None:
        beta = 1.0 if spec.beta is None else spec.beta
    w_hat = newton_direction(problem, x, fx)
    y = x + beta * w_hat
    w = newton_direction(problem, y, evaluate_residual(problem, y))
    wn = norm2(w)
    factor = 2.0 - spec.C * math.exp(spec.alpha * math.log(wn)) if wn > 0 else 2.0
    return y + factor * w, w


def advance(problem, state: SolverState, spec: MethodSpec) -> SolverState:
    """One iteration of whichever scheme ``spec`` selects."""
    if spec.kind == ANDERSON:
        return anderson_step(problem, state, spec)
    beta = resolve_beta(spec, problem)
    if spec.kind == NEWTON:
        x_next, w = newton_step(problem, state.x, beta, state.fx)
        solves = 1
    else:
        x_next, w = accelerated_newton_step(problem, state.x, spec, state.fx, beta)
        solves = 2
    return replace(state, x=x_next, fx=evaluate_residual(problem, x_next), k=state.k + 1,
                   last_w=w, last_gamma=None, solve_count=state.solve_count + solves)

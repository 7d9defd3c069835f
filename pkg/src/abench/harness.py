"""Solve driver, per-iteration metrics, timing and benchmark tables."""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import LinearSolveFailure, NonFiniteError
from .linalg import norm2
from .solvers import MethodSpec, SolverState, advance, initial_state

RESIDUAL = "residual"
ERROR = "error"


class Status(str, Enum):
    CONVERGED = "Converged"
    MAX_ITER = "MaxIterExceeded"
    LINEAR_SOLVE_FAILURE = "LinearSolveFailure"
    NON_FINITE = "NonFinite"


@dataclass(frozen=True)
class Termination:
    """Stopping rule: ``||f(x_k)|| < tol`` or ``||x_k - target_root|| < tol``."""

    mode: str = RESIDUAL
    tol: float = 1e-8
    max_iter: int = 1000
    target_root: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in (RESIDUAL, ERROR):
            raise ValueError(f"unknown termination mode {self.mode!r}")
        if self.mode == ERROR and self.target_root is None:
            raise ValueError("error-based termination needs a target root")
        if not self.tol > 0 or self.max_iter < 0:
            raise ValueError("tol must be positive and max_iter nonnegative")

    def satisfied(self, x, residual_norm) -> bool:
        if self.mode == RESIDUAL:
            return residual_norm < self.tol
        return norm2(x - self.target_root) < self.tol


@dataclass(frozen=True)
class IterationRecord:
    k: int
    residual_norm: float
    step_norm: float
    q_k: float | None = None
    gamma_inf_norm: float | None = None


@dataclass
class SolveReport:
    status: Status
    iterations: int
    history: list = field(default_factory=list)
    final_x: np.ndarray | None = None
    mean_time_seconds: float = 0.0
    repeats: int = 1
    solve_count: int = 0
    initial_residual: float = math.nan

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED

    @property
    def last(self) -> IterationRecord | None:
        return self.history[-1] if self.history else None


def approx_order(residual_norms) -> list[float | None]:
    """Approximate convergence order ``log r_k / log r_{k-1}`` for each entry.

    The first entry, and any entry where either residual is outside (0, 1),
    has no order and yields ``None``.
    """
    out: list[float | None] = [None]
    for prev, cur in zip(residual_norms[:-1], residual_norms[1:]):
        if 0 < prev < 1 and 0 < cur < 1:
            out.append(math.log(cur) / math.log(prev))
        else:
            out.append(None)
    return out[:len(residual_norms)]


def solve(problem, spec: MethodSpec, term: Termination | None = None, x0=None) -> SolveReport:
    """Iterate until ``term`` is met, the budget runs out or a step fails.

    Failures are reported through ``status``; nothing is raised.
    """
    term = term or Termination()
    if term.target_root is not None and np.shape(term.target_root) != (problem.dim,):
        raise ValueError("target root length does not match the problem dimension")
    start = np.array(problem.x0 if x0 is None else x0, dtype=float)
    try:
        state: SolverState = initial_state(problem, start)
    except NonFiniteError:
        return SolveReport(Status.NON_FINITE, 0, [], start)
    r0 = norm2(state.fx)
    if term.max_iter == 0:
        return SolveReport(Status.MAX_ITER, 0, [], state.x, initial_residual=r0)
    if term.satisfied(state.x, r0):
        return SolveReport(Status.CONVERGED, 0, [], state.x, initial_residual=r0)

    raw = []
    status = Status.MAX_ITER
    for _ in range(term.max_iter):
        try:
            state = advance(problem, state, spec)
        except LinearSolveFailure:
            status = Status.LINEAR_SOLVE_FAILURE
            break
        except NonFiniteError:
            status = Status.NON_FINITE
            break
        rn = norm2(state.fx)
        g = None if state.last_gamma is None else float(np.max(np.abs(state.last_gamma)))
        raw.append((state.k, rn, norm2(state.last_w), g))
        if term.satisfied(state.x, rn):
            status = Status.CONVERGED
            break

    orders = approx_order([r0] + [r[1] for r in raw])[1:]
    history = [IterationRecord(k, rn, wn, q, g) for (k, rn, wn, g), q in zip(raw, orders)]
    return SolveReport(status, len(history), history, state.x,
                       solve_count=state.solve_count, initial_residual=r0)


def timed_solve(problem, spec: MethodSpec, term: Termination | None = None,
                repeats: int = 100) -> SolveReport:
    """Run :func:`solve` ``repeats`` times; report the mean wall time.

    Every repeat must reproduce the first run's history exactly.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    times = []
    first = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        rep = solve(problem, spec, term)
        times.append(time.perf_counter() - t0)
        if first is None:
            first = rep
        elif rep.history != first.history or rep.status is not first.status:
            raise RuntimeError("non-deterministic solve: histories differ between repeats")
    first.mean_time_seconds = sum(times) / len(times)
    first.repeats = repeats
    return first


@dataclass(frozen=True)
class BenchRow:
    problem: str
    method: str
    report: SolveReport

    def cells(self, timing: bool = True) -> dict:
        rep = self.report
        row = {"problem": self.problem, "method": self.method}
        if rep.converged and rep.history:
            last = rep.last
            row.update(iterations=str(rep.iterations), residual=_fmt(last.residual_norm),
                       step_norm=_fmt(last.step_norm), q_k=_fmt(last.q_k))
            if timing:
                row["time_sec"] = _fmt(rep.mean_time_seconds)
        else:
            row.update(iterations="F", residual="", step_norm="", q_k="")
            if timing:
                row["time_sec"] = ""
        return row


COLUMNS = ["problem", "method", "iterations", "residual", "step_norm", "q_k", "time_sec"]


def _fmt(v) -> str:
    # repr is the shortest string that round-trips
    return "" if v is None else repr(float(v))


def benchmark_matrix(rows, repeats: int = 100) -> list[BenchRow]:
    """Solve every ``(problem, spec, term)`` row; timing rows run serially."""
    rows = list(rows)
    if not rows:
        raise ValueError("benchmark needs at least one row")
    out = []
    for problem, spec, term in rows:
        rep = timed_solve(problem, spec, term, repeats)
        out.append(BenchRow(problem.label, spec.label, rep))
    return out


def render_csv(table, timing: bool = True) -> str:
    cols = COLUMNS if timing else COLUMNS[:-1]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for row in table:
        w.writerow(row.cells(timing))
    return buf.getvalue()


def render_markdown(table, timing: bool = True) -> str:
    cols = COLUMNS if timing else COLUMNS[:-1]
    body = [[row.cells(timing)[c] or "--" for c in cols] for row in table]
    widths = [max(len(c), *(len(r[i]) for r in body)) for i, c in enumerate(cols)]
    lines = ["| " + " | ".join(c.ljust(wd) for c, wd in zip(cols, widths)) + " |",
             "|" + "|".join("-" * (wd + 2) for wd in widths) + "|"]
    for r in body:
        lines.append("| " + " | ".join(v.ljust(wd) for v, wd in zip(r, widths)) + " |")
    return "\n".join(lines) + "\n"


def history_csv(report: SolveReport) -> str:
    """Per-iteration ``k,residual,step_norm,q_k`` lines for plotting."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "residual", "step_norm", "q_k"])
    for rec in report.history:
        w.writerow([rec.k, _fmt(rec.residual_norm), _fmt(rec.step_norm), _fmt(rec.q_k)])
    return buf.getvalue()

"""Property suites behind ``abench check``.

Each suite returns a :class:`SuiteResult`; the CLI prints one line per suite.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LinearSolveFailure, NonFiniteError
from .linalg import fd_jacobian, norm2
from .problems import get_problem, list_problems
from .solvers import (
    SAFEGUARD_COSINE,
    MethodSpec,
    advance,
    anderson_gamma1,
    initial_state,
    newton_step,
    psi_alpha,
    psi_extremum,
)

SEED = 20190917


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def all_problems():
    """Every registered problem at every registered size."""
    for pid, _, sizes in list_problems():
        for n in sizes:
            yield get_problem(pid, n)


def _iterate(problem, spec, steps, x0=None):
    """Yield successive ``(before, after)`` states until a failure or ``steps``."""
    state = initial_state(problem, x0)
    for _ in range(steps):
        try:
            nxt = advance(problem, state, spec)
        except (LinearSolveFailure, NonFiniteError):
            return
        yield state, nxt
        if norm2(nxt.fx) < 1e-8:
            return
        state = nxt


# -- Jacobians ----------------------------------------------------------------

def jacobian_error(problem, x) -> float:
    """Max entrywise ``|J - J_fd| / max(1, |J|)``."""
    J = problem.jacobian(x)
    Jfd = fd_jacobian(problem.residual, x)
    return float(np.max(np.abs(J - Jfd) / np.maximum(1.0, np.abs(J))))


def check_jacobians(points: int = 10, tol: float = 1e-5) -> SuiteResult:
    rng = np.random.default_rng(SEED)
    worst, where = 0.0, ""
    count = 0
    for p in all_problems():
        xs = [p.x0] + [p.x0 + 0.1 * rng.standard_normal(p.dim) * np.maximum(1.0, np.abs(p.x0))
                       for _ in range(points)]
        for x in xs:
            e = jacobian_error(p, x)
            count += 1
            if e > worst:
                worst, where = e, p.label
    ok = worst < tol
    return SuiteResult("jacobians", ok, f"{count} points, worst relative error {worst:.2e} ({where})")


# -- depth-one coefficient ----------------------------------------------------

BENCH_NA1 = [("B1", None), ("B2", None), ("B3", None), ("B4", None), ("B5", 100),
             ("B5", 1000), ("B6", 5), ("B6", 20), ("B7", None), ("B8", None),
             ("D1", None), ("D2", None), ("D3", None)]


def na1_pairs(max_steps: int = 1000):
    """``(w_next, w_prev, gamma_from_least_squares)`` for every Anderson step
    of the NA(1) benchmark runs."""
    spec = MethodSpec.parse("na1")
    for pid, n in BENCH_NA1:
        p = get_problem(pid, n)
        for _, after in _iterate(p, spec, max_steps):
            if after.last_gamma is not None:
                yield p.label, after.history_w[-1], after.history_w[-2], float(after.last_gamma[0])


def check_gamma(tol: float = 1e-10) -> SuiteResult:
    worst = 0.0
    n = 0
    for _, w1, w0, g_ls in na1_pairs():
        g = anderson_gamma1(w1, w0)
        worst = max(worst, abs(g - g_ls) / max(1.0, abs(g)))
        n += 1
    return SuiteResult("gamma", worst < tol and n > 0,
                       f"{n} Anderson steps, worst |closed form - least squares| {worst:.2e}")


def random_gamma_pairs(count: int, seed: int = SEED):
    """Vectorized depth-one coefficients and cosines for random step pairs."""
    rng = np.random.default_rng(seed)
    dim = rng.integers(2, 9)
    w0 = rng.standard_normal((count, dim))
    # correlate half the pairs so cosines near 1 are well sampled
    w1 = rng.standard_normal((count, dim))
    mix = rng.uniform(0, 1, count)[:, None]
    w1 = mix * w0 + (1 - mix) * w1
    w1 *= 10.0 ** rng.uniform(-3, 3, count)[:, None]
    d = w1 - w0
    gamma = np.einsum("ij,ij->i", w1, d) / np.einsum("ij,ij->i", d, d)
    n0 = np.linalg.norm(w0, axis=1)
    n1 = np.linalg.norm(w1, axis=1)
    cos = np.clip(np.einsum("ij,ij->i", w1, w0) / (n0 * n1), -1.0, 1.0)
    return gamma, cos, n1 / n0


def check_gamma_bound(count: int = 1_000_000) -> SuiteResult:
    gamma, cos, r = random_gamma_pairs(count)
    keep = cos <= SAFEGUARD_COSINE
    worst = float(np.max(np.abs(gamma[keep])))
    # the same coefficients through psi
    psi = (r - cos) / (r + 1.0 / r - 2.0 * cos)
    consistent = float(np.max(np.abs(gamma - psi) / np.maximum(1.0, np.abs(gamma))))
    bench_worst, nb = 0.0, 0
    for _, w1, w0, g in na1_pairs():
        c = float(np.dot(w1, w0) / (norm2(w1) * norm2(w0)))
        if c <= SAFEGUARD_COSINE:
            bench_worst = max(bench_worst, abs(g))
            nb += 1
    ok = worst < 2.0 and bench_worst < 2.0 and consistent < 1e-10
    return SuiteResult(
        "gamma_bound", ok,
        f"{int(keep.sum())} random pairs with cos <= {SAFEGUARD_COSINE}: max |gamma| {worst:.4f}; "
        f"{nb} benchmark steps: max |gamma| {bench_worst:.4f}; gamma vs psi {consistent:.1e}")


# -- psi ----------------------------------------------------------------------

def check_psi() -> SuiteResult:
    r = np.logspace(-3, 3, 2001)
    problems = []
    for a in np.linspace(-1.0, 0.999, 400):
        if abs(psi_alpha(1.0, a) - 0.5) > 1e-15:
            problems.append(f"psi({a:.3f})(1) != 1/2")
    low = 0.0
    for a in np.linspace(-1.0, 0.0, 201):
        low = max(low, float(np.max(np.abs([psi_alpha(x, a) for x in r]))))
    if low > 1.0:
        problems.append(f"|psi| = {low} > 1 for alpha <= 0")
    high = 0.0
    for a in np.linspace(-1.0, SAFEGUARD_COSINE, 400):
        high = max(high, float(np.max(np.abs((r - a) / (r + 1 / r - 2 * a)))))
    if not high < 2.0:
        problems.append(f"|psi| = {high} >= 2 for alpha <= {SAFEGUARD_COSINE}")
    # closed-form extrema against a fine grid search
    rr = np.logspace(-4, 4, 400001)
    for a in (0.3, 0.6, 0.9, SAFEGUARD_COSINE):
        vals = (rr - a) / (rr + 1 / rr - 2 * a)
        _, lo = psi_extremum(a, -1)
        _, hi = psi_extremum(a, +1)
        if abs(vals.min() - lo) > 1e-6 or abs(vals.max() - hi) > 1e-6:
            problems.append(f"extremum mismatch at alpha={a}")
    _, lo = psi_extremum(SAFEGUARD_COSINE, -1)
    _, hi = psi_extremum(SAFEGUARD_COSINE, +1)
    if not (lo > -0.990 and hi < 1.99):
        problems.append("extrema at alpha=0.942 outside (-0.990, 1.99)")
    detail = (f"max |psi| {low:.4f} for alpha <= 0, {high:.4f} for alpha <= {SAFEGUARD_COSINE}; "
              f"extrema at {SAFEGUARD_COSINE}: {lo:.4f}, {hi:.4f}")
    return SuiteResult("psi", not problems, "; ".join(problems) or detail)


# -- reductions and identities ------------------------------------------------

def check_reduction(steps: int = 10) -> SuiteResult:
    newton, na0 = MethodSpec.parse("newton"), MethodSpec.parse("na0")
    bad = []
    for p in all_problems():
        a = [s.x for _, s in _iterate(p, newton, steps)]
        b = [s.x for _, s in _iterate(p, na0, steps)]
        if len(a) != len(b) or any(not np.array_equal(u, v) for u, v in zip(a, b)):
            bad.append(p.label)
    return SuiteResult("reduction", not bad,
                       "NA(0) iterates bitwise equal to Newton on every problem"
                       if not bad else f"mismatch on {bad}")


def check_convex(tol: float = 1e-12) -> SuiteResult:
    """Depth-one, undamped iterate equals (1-g)(x_k + w_{k+1}) + g(x_{k-1} + w_k)."""
    spec = MethodSpec.parse("na1", beta=1.0)
    worst, n = 0.0, 0
    for pid, size in BENCH_NA1:
        p = get_problem(pid, size)
        for before, after in _iterate(p, spec, 1000):
            if after.last_gamma is None:
                continue
            g = float(after.last_gamma[0])
            a = before.x + after.history_w[-1]
            b = before.history_x[-2] + before.history_w[-1]
            rhs = (1.0 - g) * a + g * b
            # rounding error scales with the terms actually summed by the update
            # x + w - (E + F) g, which can dwarf both sides of the identity
            xk, xk1 = norm2(before.x), norm2(before.history_x[-2])
            wk1, wk = norm2(after.history_w[-1]), norm2(before.history_w[-1])
            scale = max(1.0, xk + wk1 + abs(g) * (xk + xk1 + wk1 + wk))
            worst = max(worst, norm2(after.x - rhs) / scale)
            n += 1
    return SuiteResult("convex", worst < tol and n > 0,
                       f"{n} steps, worst relative deviation {worst:.2e}")


def check_safeguard() -> SuiteResult:
    spec = MethodSpec.parse("na1s")
    fired, bad = 0, 0
    for pid, size in BENCH_NA1:
        p = get_problem(pid, size)
        beta = p.default_beta
        for before, after in _iterate(p, spec, 1000):
            if before.k == 0 or after.last_gamma is not None:
                continue
            w1, w0 = after.history_w[-1], before.history_w[-1]
            if np.dot(w1, w0) / (norm2(w1) * norm2(w0)) > spec.safeguard_threshold:
                fired += 1
                x_newton, _ = newton_step(p, before.x, beta, before.fx)
                bad += not np.array_equal(x_newton, after.x)
    return SuiteResult("safeguard", bad == 0 and fired > 0,
                       f"safeguard fired {fired} times; {bad} iterates differ from damped Newton")


def check_solve_count() -> SuiteResult:
    bad = []
    p = get_problem("D1")
    for text, per in (("newton", 1), ("na1", 1), ("na3", 1), ("ks:1.0:0.9", 2)):
        for _, after in _iterate(p, MethodSpec.parse(text), 10):
            if after.solve_count != per * after.k:
                bad.append(text)
                break
    return SuiteResult("solve_count", not bad,
                       "1 solve per Newton/Anderson iteration, 2 per accelerated iteration"
                       if not bad else f"wrong counts for {bad}")


SUITES = {
    "jacobians": check_jacobians,
    "gamma": check_gamma,
    "gamma_bound": check_gamma_bound,
    "psi": check_psi,
    "reduction": check_reduction,
    "convex": check_convex,
    "safeguard": check_safeguard,
    "solve_count": check_solve_count,
}


def run_suites(names=None) -> list[SuiteResult]:
    names = list(SUITES) if not names or names == ["all"] else names
    return [SUITES[n]() for n in names]

"""Acceptance criteria, one test per criterion.

Each criterion prints a single ``[PASS]``/``[FAIL]`` line (also collected for
the pytest terminal summary). Run standalone with ``python3 tests/test_acceptance.py``.
"""
import time

import numpy as np
import pytest

from abench.checks import run_suites
from abench.dofc import DofcSpec, cell_count, sweep
from abench.harness import Status, solve, timed_solve
from abench.problems import get_problem, p2d_roots
from abench.solvers import MethodSpec

RESULTS = []


def report(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def _solve(pid, method, size=None):
    return solve(get_problem(pid, size), MethodSpec.parse(method))


# -- 1 ---------------------------------------------------------------------

TABLE_ROWS = [
    ("B3", None, "newton", 16), ("B3", None, "na1", 3), ("B3", None, "ks:1.0:0.9", 3),
    ("B5", 100, "newton", 10), ("B5", 100, "na1", 8),
    ("B7", None, "newton", 4), ("B7", None, "na1", 6),
    ("D1", None, "newton", 14), ("D1", None, "na1", 5),
    ("D3", None, "newton", 46), ("D3", None, "na1", 17), ("D3", None, "na4", 5),
]


def criterion_1():
    t0 = time.perf_counter()
    bad, cells = [], []
    for pid, size, method, expected in TABLE_ROWS:
        rep = _solve(pid, method, size)
        ok = rep.converged and abs(rep.iterations - expected) <= 2 and rep.last.residual_norm < 1e-8
        cells.append(f"{pid}{':' + str(size) if size else ''}/{method}={rep.iterations}")
        if not ok:
            bad.append(f"{pid} {method}: {rep.status.value} {rep.iterations} (paper {expected})")
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 30
    detail = ", ".join(cells) + f"; {elapsed:.1f}s" + (f"; mismatches: {bad}" if bad else "")
    return report(1, "table iteration counts within +-2, ||f|| < 1e-8", ok, detail)


# -- 2 ---------------------------------------------------------------------

def criterion_2():
    b1_na1 = _solve("B1", "na1")
    b1_na2 = _solve("B1", "na2")
    ks_bad = _solve("B6", "ks:1.0:0.9", 5)
    ks_good = _solve("B6", "ks:0.35:0.1", 5)
    ok = (not b1_na1.converged
          and b1_na2.converged and abs(b1_na2.iterations - 12) <= 2
          and not ks_bad.converged
          and ks_good.converged and abs(ks_good.iterations - 9) <= 2)
    detail = (f"B1 na1 fails ({b1_na1.status.value} at iteration {b1_na1.iterations}); "
              f"B1 na2 {b1_na2.iterations}; B6:5 ks:1.0:0.9 {ks_bad.status.value}; "
              f"B6:5 ks:0.35:0.1 {ks_good.iterations}")
    return report(2, "failure reproduction", ok, detail)


# -- 3 ---------------------------------------------------------------------

def criterion_3():
    guarded = _solve("B1", "na1s")
    newton = _solve("B1", "newton")
    ok = guarded.converged and abs(guarded.iterations - 12) <= 2
    detail = f"na1s {guarded.iterations} iterations, newton {newton.iterations}"
    return report(3, "safeguarded NA(1) on B1 within 2 of Newton's 12", ok, detail)


# -- 4 ---------------------------------------------------------------------

# accelerated rows of the degenerate-problem tables; only converging runs count
ORDER_ROWS = {
    "B3": ["na1", "ks:1.0:0.9"],
    "D1": ["na1", "ks:1.0:0.9"],
    "D2": ["na1", "na2", "ks:1.0:0.9", "ks:0.35:0.1"],
    "D3": ["na1", "na2", "na3", "na4", "ks:1.0:0.9", "ks:0.35:0.1", "ks:0.7:0.3"],
}


def criterion_4():
    bad, cells = [], []
    for pid, methods in ORDER_ROWS.items():
        q = _solve(pid, "newton").last.q_k
        cells.append(f"{pid} newton q={q:.3f}")
        if not (q is not None and q < 1.15):
            bad.append(f"{pid} newton q={q}")
        for m in methods:
            rep = _solve(pid, m)
            if not rep.converged:
                cells.append(f"{pid} {m} F")
                continue
            q = rep.last.q_k
            cells.append(f"{pid} {m} q={q:.3f}")
            if not (q is not None and q > 1.3):
                bad.append(f"{pid} {m} q={q}")
    return report(4, "terminal q_k bands (Newton < 1.15, accelerated > 1.3)", not bad,
                  "; ".join(cells) + (f"; violations: {bad}" if bad else ""))


# -- 5 ---------------------------------------------------------------------

def criterion_5(repeats=5):
    p = get_problem("D2")
    na1 = timed_solve(p, MethodSpec.parse("na1"), repeats=repeats)
    ks = timed_solve(p, MethodSpec.parse("ks:0.35:0.1"), repeats=repeats)
    ok = (na1.converged and ks.converged and na1.solve_count < ks.solve_count
          and na1.mean_time_seconds < ks.mean_time_seconds)
    detail = (f"D2 na1 {na1.solve_count} solves / {na1.mean_time_seconds:.4f}s, "
              f"ks:0.35:0.1 {ks.solve_count} solves / {ks.mean_time_seconds:.4f}s "
              f"(mean of {repeats})")
    return report(5, "work ratio on D2 (solves and wall time)", ok, detail)


# -- 6 ---------------------------------------------------------------------

def criterion_6():
    t0 = time.perf_counter()
    results = run_suites()
    elapsed = time.perf_counter() - t0
    ok = all(r.passed for r in results) and elapsed < 60
    detail = "; ".join(f"{r.name} {'ok' if r.passed else 'FAILED'}" for r in results)
    return report(6, "property suites", ok, f"{detail}; {elapsed:.1f}s")


# -- 7 ---------------------------------------------------------------------

P2D_METHODS = ["newton", "na1", "ks:0.5:0.35"]


def _p2d_spec(method, eps, grid):
    p = get_problem("P2D", params={"epsilon": eps})
    return DofcSpec(p, p2d_roots(eps)[0], MethodSpec.parse(method), grid=grid)


def _near_root_failures(spec, radius=0.05):
    xs, ys = spec.xs(), spec.ys()
    near = [(a, b) for b in ys for a in xs if np.hypot(a - 1.0, b - 3.0) <= radius]
    return len(near), sum(cell_count(spec, a, b) >= spec.max_iter for a, b in near)


def criterion_7(grid=50):
    t0 = time.perf_counter()
    notes, ok = [], True

    # (a) P2D, eps = 0: every start within 0.05 of (1, 3) converges
    for m in P2D_METHODS:
        r = sweep(_p2d_spec(m, 0.0, grid))
        X, Y = np.meshgrid(r.xs, r.ys)
        near = np.hypot(X - 1.0, Y - 3.0) <= 0.05
        fails50 = int(np.count_nonzero(near & ~r.converged_mask()))
        n200, fails200 = _near_root_failures(_p2d_spec(m, 0.0, 200))
        ok &= fails50 == 0 and fails200 == 0
        notes.append(f"{m}: {int(near.sum())} grid-{grid} cells near root, {fails50} fail; "
                     f"{n200} grid-200 cells, {fails200} fail")

    # (b) D1: KS(1.0,0.9) converges from fewer cells than KS(0.1,0.35)
    d1 = get_problem("D1")
    counts = {}
    for m in ("ks:1.0:0.9", "ks:0.1:0.35"):
        s = DofcSpec(d1, np.zeros(3), MethodSpec.parse(m), x_range=(-2.0, 2.0),
                     y_range=(-2.0, 2.0), grid=grid, embed_tail=(1e-3,))
        counts[m] = sweep(s).converged_cells()
    ok &= counts["ks:1.0:0.9"] < counts["ks:0.1:0.35"]
    notes.append(f"D1 converged cells ks:1.0:0.9 {counts['ks:1.0:0.9']} < "
                 f"ks:0.1:0.35 {counts['ks:0.1:0.35']}")

    # (c) P2D, eps = 1e-6: NA(1) and Newton x_plus rasters differ in >= 1% of cells
    newton = sweep(_p2d_spec("newton", 1e-6, grid))
    na1 = sweep(_p2d_spec("na1", 1e-6, grid))
    cls = float(np.mean(newton.converged_mask() != na1.converged_mask()))
    vals = float(np.mean(newton.counts != na1.counts))
    ok &= cls >= 0.01
    notes.append(f"eps=1e-6 x_plus: classification differs in {100 * cls:.1f}% of cells, "
                 f"counts differ in {100 * vals:.1f}%")

    elapsed = time.perf_counter() - t0
    ok &= elapsed < 120
    return report(7, f"dofc sanity at grid {grid}", bool(ok), "; ".join(notes) + f"; {elapsed:.1f}s")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7]


@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda f: f.__name__)
def test_acceptance(criterion):
    assert criterion()


if __name__ == "__main__":
    import sys
    passed = [c() for c in CRITERIA]
    print(f"{sum(passed)}/{len(passed)} criteria passed")
    sys.exit(0 if all(passed) else 1)

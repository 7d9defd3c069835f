"""Domain-of-convergence sweeps over a 2-D grid of starting points.

Each grid cell records how many iterations a method needs to come within
``tol`` of a designated root; ``max_iter`` marks cells that never get there
(including cells that converge to a different root).
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .harness import ERROR, Termination, solve
from .linalg import norm2
from .solvers import MethodSpec


@dataclass(frozen=True)
class DofcSpec:
    problem: object
    target_root: np.ndarray
    method: MethodSpec
    x_range: tuple[float, float] = (-1.0, 3.0)
    y_range: tuple[float, float] = (1.0, 5.0)
    grid: int = 200
    max_iter: int = 100
    tol: float = 1e-8
    # start vector is (a, b, *embed_tail); D1 uses (1e-3,)
    embed_tail: tuple[float, ...] = ()

    def __post_init__(self):
        if self.grid < 2:
            raise ValueError("grid must have at least 2 points per axis")
        if not (self.x_range[1] > self.x_range[0] and self.y_range[1] > self.y_range[0]):
            raise ValueError("ranges must be nondegenerate")
        if 2 + len(self.embed_tail) != self.problem.dim:
            raise ValueError("embedding does not match the problem dimension")

    def xs(self) -> np.ndarray:
        return np.linspace(self.x_range[0], self.x_range[1], self.grid)

    def ys(self) -> np.ndarray:
        """Grid y values, top row first (descending)."""
        return np.linspace(self.y_range[0], self.y_range[1], self.grid)[::-1]

    def start(self, a: float, b: float) -> np.ndarray:
        return np.array((a, b) + tuple(self.embed_tail), dtype=float)


@dataclass
class DofcRaster:
    width: int
    height: int
    counts: np.ndarray  # shape (height, width); row 0 is the largest y
    max_iter: int
    xs: np.ndarray
    ys: np.ndarray
    meta: dict = field(default_factory=dict)

    def converged_mask(self) -> np.ndarray:
        return self.counts < self.max_iter

    def converged_cells(self) -> int:
        return int(np.count_nonzero(self.converged_mask()))


def cell_count(spec: DofcSpec, a: float, b: float) -> int:
    """Iterations from start ``(a, b, ...)`` to the target, or ``max_iter``."""
    term = Termination(ERROR, spec.tol, spec.max_iter, spec.target_root)
    rep = solve(spec.problem, spec.method, term, x0=spec.start(a, b))
    return rep.iterations if rep.converged else spec.max_iter


def _sweep_rows(spec: DofcSpec, rows) -> list[list[int]]:
    xs, ys = spec.xs(), spec.ys()
    return [[cell_count(spec, a, ys[i]) for a in xs] for i in rows]


def default_workers() -> int:
    """Worker count from ``ABENCH_THREADS`` (unset or 0 means all cores)."""
    raw = os.environ.get("ABENCH_THREADS", "0").strip() or "0"
    n = int(raw)
    return n if n > 0 else (os.cpu_count() or 1)


def sweep(spec: DofcSpec, workers: int | None = None) -> DofcRaster:
    """Classify every grid start. Result is independent of ``workers``."""
    fx = np.asarray(spec.problem.residual(spec.target_root), dtype=float)
    if not norm2(fx) < 1e-8:
        raise ValueError(f"target root is not a root: ||f|| = {norm2(fx):.3e}")
    if workers is None:
        workers = default_workers()
    n = spec.grid
    if workers <= 1:
        counts = _sweep_rows(spec, range(n))
    else:
        chunks = [list(range(i, n, workers)) for i in range(workers)]
        counts = [None] * n
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for rows, part in zip(chunks, pool.map(_sweep_rows, [spec] * workers, chunks)):
                for i, row in zip(rows, part):
                    counts[i] = row
    meta = {
        "problem": spec.problem.id,
        "method": spec.method.label,
        "x_range": tuple(spec.x_range),
        "y_range": tuple(spec.y_range),
        "grid": n,
        "max_iter": spec.max_iter,
        "tol": spec.tol,
        "target_root": tuple(float(v) for v in spec.target_root),
    }
    return DofcRaster(n, n, np.array(counts, dtype=int), spec.max_iter,
                      spec.xs(), spec.ys(), meta)


def write_pgm(raster: DofcRaster, path) -> None:
    """Plain-text ``P2`` greymap, top row = largest y."""
    if raster.max_iter > 255:
        raise ValueError("plain PGM output needs max_iter <= 255")
    with open(path, "w", newline="\n") as fh:
        fh.write(pgm_text(raster))


def pgm_text(raster: DofcRaster) -> str:
    lines = ["P2", f"{raster.width} {raster.height}", str(raster.max_iter)]
    lines += [" ".join(str(int(c)) for c in row) for row in raster.counts]
    return "\n".join(lines) + "\n"


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Parse a file written by :func:`write_pgm`; returns ``(counts, maxval)``."""
    with open(path) as fh:
        tokens = fh.read().split()
    if tokens[0] != "P2":
        raise ValueError("not a plain PGM file")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    data = np.array([int(t) for t in tokens[4:4 + w * h]], dtype=int)
    return data.reshape(h, w), maxval


def write_csv(raster: DofcRaster, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(csv_text(raster))


def csv_text(raster: DofcRaster) -> str:
    lines = ["x0,y0,iters"]
    for i, y in enumerate(raster.ys):
        for j, x in enumerate(raster.xs):
            lines.append(f"{float(x)!r},{float(y)!r},{int(raster.counts[i, j])}")
    return "\n".join(lines) + "\n"

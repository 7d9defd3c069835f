"""Benchmark problems: residuals, analytic Jacobians, starts and known roots.

Problem ids
-----------
B1..B8   systems from the More-Garbow-Hillstrom collection
D1..D3   degenerate systems (3-D polynomial, H-equation, designed power system)
P2D      2-D near-degenerate polynomial system with parameter ``epsilon``

Every evaluator is a module-level function bound with ``functools.partial``
so problems pickle cleanly into worker processes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np

from .errors import EvaluationError, ProblemLookupError


@dataclass(frozen=True)
class Problem:
    id: str
    name: str
    dim: int
    residual: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    x0: np.ndarray
    known_roots: tuple = ()
    default_beta: float = 1.0
    params: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        """Id with the size suffix for sized families, e.g. ``B5:1000``."""
        if len(_SIZES.get(self.id, ())) > 1:
            return f"{self.id}:{self.dim}"
        return self.id


# -- B1 Powell badly scaled -------------------------------------------------

def _powell_badly_scaled(x):
    return np.array([1e4 * x[0] * x[1] - 1.0,
                     math.exp(-x[0]) + math.exp(-x[1]) - 1.0001])


def _powell_badly_scaled_jac(x):
    return np.array([[1e4 * x[1], 1e4 * x[0]],
                     [-math.exp(-x[0]), -math.exp(-x[1])]])


# -- B2 helical valley ------------------------------------------------------

def _theta(x1, x2):
    # four-quadrant angle / 2pi on the MGH branch (-1/4, 3/4]: the cut lies on
    # the negative x2 axis, so theta is continuous around the start (-1, 0, 0)
    if x1 == 0.0 and x2 == 0.0:
        raise EvaluationError("helical valley angle undefined at x1 = x2 = 0")
    t = math.atan2(x2, x1) / (2.0 * math.pi)
    if t <= -0.25:
        t += 1.0
    return t


def _helical_valley(x):
    r = math.hypot(x[0], x[1])
    return np.array([10.0 * (x[2] - 10.0 * _theta(x[0], x[1])),
                     10.0 * (r - 1.0),
                     x[2]])


def _helical_valley_jac(x):
    r2 = x[0] ** 2 + x[1] ** 2
    if r2 == 0.0:
        raise EvaluationError("helical valley Jacobian undefined at x1 = x2 = 0")
    r = math.sqrt(r2)
    c = 100.0 / (2.0 * math.pi * r2)
    return np.array([[c * x[1], -c * x[0], 10.0],
                     [10.0 * x[0] / r, 10.0 * x[1] / r, 0.0],
                     [0.0, 0.0, 1.0]])


# -- B3 Powell singular -----------------------------------------------------

_SQRT5 = math.sqrt(5.0)
_SQRT10 = math.sqrt(10.0)


def _powell_singular(x):
    return np.array([x[0] + 10.0 * x[1],
                     _SQRT5 * (x[2] - x[3]),
                     (x[1] - 2.0 * x[2]) ** 2,
                     _SQRT10 * (x[0] - x[3]) ** 2])


def _powell_singular_jac(x):
    a = 2.0 * (x[1] - 2.0 * x[2])
    b = 2.0 * _SQRT10 * (x[0] - x[3])
    return np.array([[1.0, 10.0, 0.0, 0.0],
                     [0.0, 0.0, _SQRT5, -_SQRT5],
                     [0.0, a, -2.0 * a, 0.0],
                     [b, 0.0, 0.0, -b]])


# -- B4 Watson --------------------------------------------------------------

_WATSON_T = np.arange(1, 30) / 29.0


def _watson_parts(x):
    n = x.size
    # powers[i, j] = t_i ** j
    powers = _WATSON_T[:, None] ** np.arange(n)[None, :]
    s1 = powers[:, :n - 1] @ (np.arange(1, n) * x[1:])
    s2 = powers @ x
    return powers, s1, s2


def _watson(x):
    _, s1, s2 = _watson_parts(x)
    f = np.empty(31)
    f[:29] = s1 - s2 ** 2 - 1.0
    f[29] = x[0]
    f[30] = x[1] - x[0] ** 2 - 1.0
    return f


def _watson_jac(x):
    n = x.size
    powers, _, s2 = _watson_parts(x)
    J = np.zeros((31, n))
    J[:29, 1:] = np.arange(1, n) * powers[:, :n - 1]
    J[:29, :] -= 2.0 * s2[:, None] * powers
    J[29, 0] = 1.0
    J[30, 0] = -2.0 * x[0]
    J[30, 1] = 1.0
    return J


# -- B5 trigonometric -------------------------------------------------------

def _trigonometric(x):
    n = x.size
    c = np.cos(x)
    i = np.arange(1, n + 1)
    return n - c.sum() + i * (1.0 - c) - np.sin(x)


def _trigonometric_jac(x):
    n = x.size
    s = np.sin(x)
    J = np.tile(s, (n, 1))
    J[np.diag_indices(n)] += np.arange(1, n + 1) * s - np.cos(x)
    return J


# -- B6 Brown almost-linear -------------------------------------------------

def _brown(x):
    n = x.size
    f = np.empty(n)
    f[:-1] = x[:-1] + x.sum() - (n + 1)
    f[-1] = np.prod(x) - 1.0
    return f


def _brown_jac(x):
    n = x.size
    J = np.ones((n, n)) + np.eye(n)
    # products leaving out one factor, without dividing (x may contain zeros)
    left = np.concatenate(([1.0], np.cumprod(x[:-1])))
    right = np.concatenate((np.cumprod(x[::-1][:-1])[::-1], [1.0]))
    J[-1, :] = left * right
    return J


# -- B7 Broyden tridiagonal -------------------------------------------------

def _broyden_tridiagonal(x):
    xm = np.concatenate(([0.0], x[:-1]))
    xp = np.concatenate((x[1:], [0.0]))
    return (3.0 - 2.0 * x) * x - xm - 2.0 * xp + 1.0


def _broyden_tridiagonal_jac(x):
    n = x.size
    J = np.diag(3.0 - 4.0 * x)
    J += np.diag(np.full(n - 1, -1.0), -1)
    J += np.diag(np.full(n - 1, -2.0), 1)
    return J


# -- B8 Broyden banded ------------------------------------------------------

def _banded_mask(n):
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    return (j >= i - 5) & (j <= i + 1) & (j != i)


def _broyden_banded(x):
    n = x.size
    g = x * (1.0 + x)
    # sum over the band via cumulative sums; band is j in [i-5, i+1], j != i
    c = np.concatenate(([0.0], np.cumsum(g)))
    i = np.arange(n)
    lo = np.maximum(0, i - 5)
    hi = np.minimum(n - 1, i + 1)
    band = c[hi + 1] - c[lo] - g
    return x * (2.0 + 5.0 * x ** 2) + 1.0 - band


def _broyden_banded_jac(x):
    n = x.size
    J = np.where(_banded_mask(n), -(1.0 + 2.0 * x)[None, :], 0.0)
    J[np.diag_indices(n)] = 2.0 + 15.0 * x ** 2
    return J


# -- D1 3-D polynomial ------------------------------------------------------

def _poly3(x):
    return np.array([x[0] + x[0] * x[1] + x[1] ** 2,
                     x[0] ** 2 - 2.0 * x[0] + x[1] ** 2,
                     x[0] + x[2] ** 2])


def _poly3_jac(x):
    return np.array([[1.0 + x[1], x[0] + 2.0 * x[1], 0.0],
                     [2.0 * x[0] - 2.0, 2.0 * x[1], 0.0],
                     [1.0, 0.0, 2.0 * x[2]]])


# -- D2 Chandrasekhar H-equation --------------------------------------------

def _h_kernel(n, omega, mode):
    i = np.arange(1, n + 1, dtype=float)[:, None]
    j = np.arange(1, n + 1, dtype=float)[None, :]
    if mode == "midpoint":
        # mu_i / (mu_i + mu_j) with mu_i = (i - 1/2) / n
        return omega / (2.0 * n) * (i - 0.5) / (i + j - 1.0)
    return omega / (2.0 * n) * i / (i + j - 1.0)


def _h_equation(x, kernel):
    return x - 1.0 / (1.0 - kernel @ x)


def _h_equation_jac(x, kernel):
    d = 1.0 - kernel @ x
    return np.eye(x.size) - kernel / (d ** 2)[:, None]


# -- D3 designed degenerate system ------------------------------------------

_D3_B = np.array([-11.0, -7.0, -5.0, -3.0, -2.0, 2.0, 3.0, 5.0, 7.0, 11.0])
_D3_P = np.array([2, 4, 4, 2, 2, 8, 8, 2, 12, 12])


def _tridiag(n):
    return 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)


_D3_A = _tridiag(10)


def _power_system(x):
    return (_D3_A @ x - _D3_B) ** _D3_P


def _power_system_jac(x):
    r = _D3_A @ x - _D3_B
    return (_D3_P * r ** (_D3_P - 1))[:, None] * _D3_A


# -- P2D near-degenerate 2-D system -----------------------------------------

def _poly2(x, epsilon):
    # written in the shifted variables, as stated, to stay accurate near (1, 3)
    u = x[0] - 1.0
    v = x[1] - 3.0
    return np.array([u + v ** 2,
                     epsilon * v + 1.5 * u * v + v ** 2 + v ** 3])


def _poly2_jac(x, epsilon):
    u = x[0] - 1.0
    v = x[1] - 3.0
    return np.array([[1.0, 2.0 * v],
                     [1.5 * v, epsilon + 1.5 * u + 2.0 * v + 3.0 * v ** 2]])


def p2d_roots(epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """Roots ``(x_plus, x_minus)`` of the P2D system.

    ``x_minus = (1 - eta**2, 3 + eta)`` with ``eta = 1 - sqrt(1 + 2 eps)``,
    evaluated as ``-2 eps / (1 + sqrt(1 + 2 eps))`` to avoid cancellation.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    eta = -2.0 * epsilon / (1.0 + math.sqrt(1.0 + 2.0 * epsilon))
    return np.array([1.0, 3.0]), np.array([1.0 - eta * eta, 3.0 + eta])


# -- registry ---------------------------------------------------------------

_NAMES = {
    "B1": "Powell badly scaled",
    "B2": "Helical valley",
    "B3": "Powell singular",
    "B4": "Watson",
    "B5": "Trigonometric",
    "B6": "Brown almost-linear",
    "B7": "Broyden tridiagonal",
    "B8": "Broyden banded",
    "D1": "3-D degenerate polynomial",
    "D2": "Chandrasekhar H-equation",
    "D3": "Designed degenerate power system",
    "P2D": "2-D near-degenerate polynomial",
}

# first entry is the default size
_SIZES = {
    "B1": (2,), "B2": (3,), "B3": (4,), "B4": (31,),
    "B5": (100, 1000), "B6": (5, 20), "B7": (1000,), "B8": (1000,),
    "D1": (3,), "D2": (1000,), "D3": (10,), "P2D": (2,),
}

_PARAM_DEFAULTS = {
    "P2D": {"epsilon": 0.0},
    "D2": {"omega": 1.0, "discretization": "midpoint"},
}


def list_problems() -> list[tuple[str, str, tuple[int, ...]]]:
    """``(id, name, sizes)`` for every registered problem, in registry order."""
    return [(pid, _NAMES[pid], _SIZES[pid]) for pid in _NAMES]


def get_problem(pid: str, size: int | None = None, params: dict | None = None) -> Problem:
    """Build a fully populated :class:`Problem`.

    Parameters
    ----------
    pid : str
        One of ``B1..B8``, ``D1..D3``, ``P2D``.
    size : int, optional
        Dimension for sized families (B5, B6, B7, B8, D2). Defaults to the
        first registered size.
    params : dict, optional
        ``epsilon`` for P2D; ``omega`` and ``discretization`` (``"index"`` or
        ``"midpoint"``) for D2.
    """
    if pid not in _NAMES:
        raise ProblemLookupError(f"unknown problem id {pid!r}")
    sizes = _SIZES[pid]
    n = sizes[0] if size is None else int(size)
    if n not in sizes:
        raise ProblemLookupError(f"problem {pid} does not support size {n}; choose from {sizes}")
    merged = dict(_PARAM_DEFAULTS.get(pid, {}))
    unknown = set(params or {}) - set(merged)
    if unknown:
        raise ProblemLookupError(f"problem {pid} takes no parameter(s) {sorted(unknown)}")
    merged.update(params or {})

    beta = 1.0
    roots: tuple = ()
    if pid == "B1":
        res, jac, x0 = _powell_badly_scaled, _powell_badly_scaled_jac, [0.0, 1.0]
    elif pid == "B2":
        res, jac, x0 = _helical_valley, _helical_valley_jac, [-1.0, 0.0, 0.0]
        roots = (np.array([1.0, 0.0, 0.0]),)
    elif pid == "B3":
        res, jac, x0 = _powell_singular, _powell_singular_jac, [3.0, -1.0, 0.0, 1.0]
        roots = (np.zeros(4),)
    elif pid == "B4":
        res, jac, x0 = _watson, _watson_jac, np.zeros(n)
    elif pid == "B5":
        res, jac, x0 = _trigonometric, _trigonometric_jac, np.full(n, 1.0 / n)
    elif pid == "B6":
        res, jac, x0 = _brown, _brown_jac, np.full(n, 0.5)
        roots = (np.ones(n),)
        if n == 20:
            beta = 0.8
    elif pid == "B7":
        res, jac, x0 = _broyden_tridiagonal, _broyden_tridiagonal_jac, np.full(n, -1.0)
    elif pid == "B8":
        res, jac, x0 = _broyden_banded, _broyden_banded_jac, np.full(n, -1.0)
    elif pid == "D1":
        res, jac, x0 = _poly3, _poly3_jac, [0.1, 0.5, 1.0]
        roots = (np.zeros(3),)
    elif pid == "D2":
        if merged["discretization"] not in ("index", "midpoint"):
            raise ProblemLookupError(f"unknown D2 discretization {merged['discretization']!r}")
        kernel = _h_kernel(n, float(merged["omega"]), merged["discretization"])
        res, jac = partial(_h_equation, kernel=kernel), partial(_h_equation_jac, kernel=kernel)
        x0 = np.ones(n)
    elif pid == "D3":
        res, jac, x0 = _power_system, _power_system_jac, np.zeros(n)
        roots = (np.linalg.solve(_D3_A, _D3_B),)
    else:  # P2D
        eps = float(merged["epsilon"])
        if eps < 0:
            raise ProblemLookupError("P2D requires epsilon >= 0")
        res, jac = partial(_poly2, epsilon=eps), partial(_poly2_jac, epsilon=eps)
        x0 = [1.5, 3.5]
        plus, minus = p2d_roots(eps)
        roots = (plus,) if eps == 0 else (plus, minus)

    return Problem(id=pid, name=_NAMES[pid], dim=n, residual=res, jacobian=jac,
                   x0=np.asarray(x0, dtype=float), known_roots=roots,
                   default_beta=beta, params=merged)


def parse_problem_ref(text: str) -> tuple[str, int | None]:
    """Split ``"B5:1000"`` into ``("B5", 1000)``; a bare id gets ``None``."""
    pid, sep, size = text.partition(":")
    if not sep:
        return pid, None
    try:
        return pid, int(size)
    except ValueError:
        raise ProblemLookupError(f"bad problem size in {text!r}") from None

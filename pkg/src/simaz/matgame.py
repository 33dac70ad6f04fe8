"""Two-player zero-sum matrix games.

Payoff matrices are dense ``(n, m)`` float arrays holding the row player's
utility; the column player receives the negation. Mixed strategies are plain
1-d probability arrays.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numba
import numpy as np

PROB_TOL = 1e-9


class LPSolverError(RuntimeError):
    """The simplex routine failed to reach an optimal tableau."""


@dataclass
class GameSolution:
    row_strategy: np.ndarray
    col_strategy: np.ndarray
    value: float


def as_payoff_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"payoff matrix must be 2-d and non-empty, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("payoff matrix has non-finite entries")
    return A


def check_distribution(p, size: int | None = None, tol: float = PROB_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or (size is not None and p.shape[0] != size):
        raise ValueError(f"expected a length-{size} probability vector, got shape {p.shape}")
    if np.any(p < -tol) or abs(p.sum() - 1.0) > tol:
        raise ValueError("not a probability vector")
    return p


def uniform(k: int) -> np.ndarray:
    return np.full(k, 1.0 / k)


def _clean(p: np.ndarray) -> np.ndarray:
    p = np.clip(p, 0.0, None)
    return p / p.sum()


# ---------------------------------------------------------------------------
# Exact solution by linear programming
# ---------------------------------------------------------------------------

def solve_lp(A, tol: float = 1e-12, max_pivots: int = 10_000) -> GameSolution:
    """Solve the matrix game exactly with a dense tableau simplex.

    The matrix is shifted so every entry is at least 1, which makes the game
    value positive. With ``P = A + c`` the column player's problem becomes

        maximize 1'w  subject to  P w <= 1,  w >= 0

    whose slack basis is feasible from the start. At the optimum ``1/sum(w)``
    is the shifted value, ``w`` rescales to the column strategy, and the
    slack reduced costs rescale to the row strategy. Pivoting uses Bland's
    rule so degenerate games terminate.
    """
    A = as_payoff_matrix(A)
    n, m = A.shape
    shift = 1.0 - A.min()
    P = A + shift

    T = np.zeros((n + 1, m + n + 1))
    T[:n, :m] = P
    T[:n, m:m + n] = np.eye(n)
    T[:n, -1] = 1.0
    T[n, :m] = -1.0
    basis = list(range(m, m + n))

    for _ in range(max_pivots):
        neg = np.nonzero(T[n, :-1] < -tol)[0]
        if neg.size == 0:
            break
        j = int(neg[0])
        col = T[:n, j]
        rows = np.nonzero(col > tol)[0]
        if rows.size == 0:
            raise LPSolverError("simplex reported an unbounded direction")
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        i = int(min(ties, key=lambda r: basis[r]))
        T[i] /= T[i, j]
        factors = T[:, j].copy()
        factors[i] = 0.0
        T -= np.outer(factors, T[i])
        basis[i] = j
    else:
        raise LPSolverError(f"simplex did not converge in {max_pivots} pivots")

    total = T[n, -1]
    if not np.isfinite(total) or total <= 0:
        raise LPSolverError(f"degenerate optimum (objective {total!r})")
    w = np.zeros(m + n)
    for r, b in enumerate(basis):
        w[b] = T[r, -1]
    y = _clean(w[:m] / total)
    x = _clean(T[n, m:m + n] / total)
    return GameSolution(x, y, float(1.0 / total - shift))


# ---------------------------------------------------------------------------
# Regret matching
# ---------------------------------------------------------------------------

def regret_matching_strategy(cumulative_regret: np.ndarray) -> np.ndarray:
    """Play proportionally to positive regret, uniform when none is positive."""
    pos = np.maximum(cumulative_regret, 0.0)
    s = pos.sum()
    if s > 0:
        return pos / s
    return np.full(cumulative_regret.shape[0], 1.0 / cumulative_regret.shape[0])


@numba.njit(cache=True)
def _rm_run(A, regret_row, regret_col, sum_row, sum_col, x, y, iterations):
    # In-place simultaneous regret matching; returns the next iterate.
    n, m = A.shape
    for _ in range(iterations):
        Ay = A @ y
        xA = x @ A
        realized = x @ Ay
        regret_row += Ay - realized
        regret_col += realized - xA
        sum_row += x
        sum_col += y
        pos = np.maximum(regret_row, 0.0)
        s = pos.sum()
        x = pos / s if s > 0 else np.full(n, 1.0 / n)
        pos = np.maximum(regret_col, 0.0)
        s = pos.sum()
        y = pos / s if s > 0 else np.full(m, 1.0 / m)
    return x, y


@dataclass
class RegretState:
    cumulative_regret_row: np.ndarray
    cumulative_regret_col: np.ndarray
    strategy_sum_row: np.ndarray
    strategy_sum_col: np.ndarray
    iterations: int = 0

    @classmethod
    def zeros(cls, n: int, m: int) -> "RegretState":
        return cls(np.zeros(n), np.zeros(m), np.zeros(n), np.zeros(m), 0)

    def current(self) -> tuple[np.ndarray, np.ndarray]:
        return (regret_matching_strategy(self.cumulative_regret_row),
                regret_matching_strategy(self.cumulative_regret_col))

    def run(self, A: np.ndarray, iterations: int, x=None, y=None) -> None:
        """Advance ``iterations`` simultaneous rounds.

        Each round both players score regret against the same iterate. The
        round starts from ``(x, y)`` when given, else from current regrets.
        """
        if x is None or y is None:
            cx, cy = self.current()
            x = cx if x is None else x
            y = cy if y is None else y
        _rm_run(A, self.cumulative_regret_row, self.cumulative_regret_col,
                self.strategy_sum_row, self.strategy_sum_col,
                np.ascontiguousarray(x, dtype=np.float64),
                np.ascontiguousarray(y, dtype=np.float64), iterations)
        self.iterations += iterations

    def average(self) -> tuple[np.ndarray, np.ndarray]:
        if self.iterations == 0:
            return uniform(self.strategy_sum_row.shape[0]), uniform(self.strategy_sum_col.shape[0])
        return (self.strategy_sum_row / self.iterations,
                self.strategy_sum_col / self.iterations)


def regret_matching_solve(A, iterations: int, x0=None, y0=None) -> GameSolution:
    """Approximate equilibrium from ``iterations`` rounds of regret matching.

    Returns the average strategies and their value ``x'Ay``. The first round
    plays ``x0``/``y0`` when given (uniform otherwise); later rounds follow
    positive cumulative regret.
    """
    A = np.ascontiguousarray(as_payoff_matrix(A))
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    n, m = A.shape
    state = RegretState.zeros(n, m)
    x = uniform(n) if x0 is None else check_distribution(x0, n)
    y = uniform(m) if y0 is None else check_distribution(y0, m)
    state.run(A, iterations, x, y)
    xbar, ybar = state.average()
    return GameSolution(xbar, ybar, float(xbar @ A @ ybar))


# ---------------------------------------------------------------------------
# Metrics and oracles
# ---------------------------------------------------------------------------

def exploitability_matrix(A, x, y) -> float:
    """Joint exploitability ``max_i (Ay)_i - min_j (x'A)_j`` of a strategy pair."""
    A = as_payoff_matrix(A)
    n, m = A.shape
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != (n,) or y.shape != (m,):
        raise ValueError(f"strategy shapes {x.shape}, {y.shape} do not match matrix {A.shape}")
    return float(np.max(A @ y) - np.min(x @ A))


def simplex_grid(k: int, resolution: float) -> np.ndarray:
    """All points of the (k-1)-simplex whose coordinates are multiples of ``1/steps``."""
    steps = int(round(1.0 / resolution))
    if k == 1:
        return np.ones((1, 1))
    pts = [c for c in itertools.product(range(steps + 1), repeat=k - 1) if sum(c) <= steps]
    pts = np.array(pts, dtype=np.float64)
    last = steps - pts.sum(axis=1, keepdims=True)
    return np.hstack([pts, last]) / steps


def _local_grid(center: np.ndarray, step: float, radius: int) -> np.ndarray:
    k = center.shape[0]
    offsets = np.array(list(itertools.product(range(-radius, radius + 1), repeat=k - 1)), dtype=np.float64)
    head = center[:-1] + step * offsets
    last = 1.0 - head.sum(axis=1, keepdims=True)
    pts = np.hstack([head, last])
    return pts[np.all(pts >= -1e-12, axis=1)].clip(0.0, None)


def _maximin_search(A: np.ndarray, resolution: float) -> tuple[np.ndarray, float]:
    """Best guaranteed row payoff found by grid search, zooming on the incumbent.

    ``x -> min_j (x'A)_j`` is concave, so refining around the incumbent cannot
    get trapped away from the optimum.
    """
    n = A.shape[0]
    if n == 1:
        return np.ones(1), float(A.min())
    step = max(resolution, {2: 1e-3, 3: 5e-3}.get(n, 2e-2))
    X = simplex_grid(n, step)
    while True:
        scores = (X @ A).min(axis=1)
        i = int(np.argmax(scores))
        best, score = X[i], float(scores[i])
        if step <= resolution * (1 + 1e-9):
            return best, score
        step = max(step / 5.0, resolution)
        X = _local_grid(best, step, 10)


def brute_force_bracket(A, resolution: float = 1e-2) -> tuple[float, float, np.ndarray, np.ndarray]:
    """Grid-search both players and return ``(lower, upper, x, y)``.

    ``x`` guarantees the row player at least ``lower`` and ``y`` concedes at
    most ``upper``, so the game value lies in ``[lower, upper]``.
    """
    A = as_payoff_matrix(A)
    n, m = A.shape
    if n > 4 or m > 4:
        raise ValueError(f"brute force is capped at 4x4, got {n}x{m}")
    if not 0 < resolution <= 0.1:
        raise ValueError("resolution must lie in (0, 0.1]")
    x, lower = _maximin_search(A, resolution)
    y, neg_upper = _maximin_search(-A.T, resolution)
    return lower, -neg_upper, x, y


def brute_force_solve(A, resolution: float = 1e-2) -> GameSolution:
    """Grid-search oracle for :func:`solve_lp`; the value is the bracket midpoint."""
    lower, upper, x, y = brute_force_bracket(A, resolution)
    return GameSolution(x, y, 0.5 * (lower + upper))

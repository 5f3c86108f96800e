"""Self-contained numeric kernels: dense two-phase simplex and a
safeguarded Newton root finder.

Both are deterministic: identical inputs produce identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_PIVOT_TOL = 1e-10
_BLAND_AFTER = 50  # consecutive degenerate pivots before switching rules


class NoRootError(ValueError):
    """The supplied bracket does not enclose a sign change."""


class IterationLimitError(RuntimeError):
    """Iteration cap reached without meeting the tolerance."""


@dataclass(frozen=True, eq=False)
class LpProblem:
    """maximize c @ x  subject to  A @ x <= b,  lo <= x <= hi.

    Lower bounds must be nonnegative and finite; upper bounds may be
    ``np.inf``.  Intended for desk-scale problems (tens of variables).
    """

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))
        object.__setattr__(self, "A", np.asarray(self.A, dtype=float).reshape(-1, self.c.size))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float))
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))
        for name in ("c", "A", "b", "lo"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"non-finite entries in {name}")
        if np.any(np.isnan(self.hi)):
            raise ValueError("NaN entries in hi")
        if self.A.shape != (self.b.size, self.c.size):
            raise ValueError("inconsistent LP dimensions")
        if self.lo.size != self.c.size or self.hi.size != self.c.size:
            raise ValueError("bounds must match the variable count")
        if np.any(self.lo < 0):
            raise ValueError("lower bounds must be nonnegative")
        if np.any(self.hi < self.lo):
            raise ValueError("upper bounds must dominate lower bounds")


@dataclass(frozen=True, eq=False)
class LpSolution:
    x: np.ndarray
    objective: float
    status: str  # optimal | infeasible | unbounded


def _pivot(tableau, basis, row, col):
    tableau[row] /= tableau[row, col]
    col_vals = tableau[:, col].copy()
    col_vals[row] = 0.0
    tableau -= np.outer(col_vals, tableau[row])
    tableau[:, col] = 0.0
    tableau[row, col] = 1.0
    basis[row] = col


def _run_simplex(tableau, basis, n_cols, max_pivots=50000):
    """Pivot until optimal/unbounded. Dantzig rule with deterministic tie
    breaking; falls back to Bland's rule after a run of degenerate pivots."""
    degenerate_run = 0
    bland = False
    for _ in range(max_pivots):
        rc = tableau[-1, :n_cols]
        if bland:
            eligible = np.nonzero(rc < -_PIVOT_TOL)[0]
            if eligible.size == 0:
                return "optimal"
            col = int(eligible[0])
        else:
            col = int(np.argmin(rc))
            if rc[col] >= -_PIVOT_TOL:
                return "optimal"
        col_vals = tableau[:-1, col]
        positive = col_vals > _PIVOT_TOL
        if not positive.any():
            return "unbounded"
        ratios = np.full(col_vals.size, np.inf)
        ratios[positive] = tableau[:-1, -1][positive] / col_vals[positive]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + _PIVOT_TOL * (1.0 + abs(best)))[0]
        row = int(ties[np.argmin([basis[t] for t in ties])])
        if best <= _PIVOT_TOL:
            degenerate_run += 1
            if degenerate_run >= _BLAND_AFTER:
                bland = True
        else:
            degenerate_run = 0
        _pivot(tableau, basis, row, col)
    raise IterationLimitError("simplex pivot limit exceeded")


def solve_lp(problem: LpProblem) -> LpSolution:
    """Two-phase dense simplex returning an optimal vertex.

    Returns
    -------
    LpSolution with status ``optimal``, ``infeasible`` or ``unbounded``.
    Infeasibility and unboundedness are reported via the status field,
    never raised.
    """
    n = problem.c.size
    # shift to y = x - lo >= 0 and append finite upper bounds as rows
    rows = [problem.A]
    rhs = [problem.b - problem.A @ problem.lo]
    finite_hi = np.nonzero(np.isfinite(problem.hi))[0]
    if finite_hi.size:
        bound_rows = np.zeros((finite_hi.size, n))
        bound_rows[np.arange(finite_hi.size), finite_hi] = 1.0
        rows.append(bound_rows)
        rhs.append(problem.hi[finite_hi] - problem.lo[finite_hi])
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    m = b.size

    if m == 0:
        if np.any(problem.c > 0):
            return LpSolution(problem.lo.copy(), float(problem.c @ problem.lo), "unbounded")
        return LpSolution(problem.lo.copy(), float(problem.c @ problem.lo), "optimal")

    # equilibrate columns then rows; vertices are preserved under the
    # substitution z = col_scale * y
    col_scale = np.abs(A).max(axis=0)
    col_scale[col_scale == 0.0] = 1.0
    A = A / col_scale
    c = problem.c / col_scale
    row_scale = np.abs(A).max(axis=1)
    row_scale[row_scale == 0.0] = 1.0
    A = A / row_scale[:, None]
    b = b / row_scale

    neg = b < 0
    n_slack = m
    n_art = int(neg.sum())
    total = n + n_slack + n_art
    tableau = np.zeros((m + 1, total + 1))
    tableau[:m, :n] = A
    tableau[:m, n:n + n_slack] = np.eye(m)
    tableau[:m, -1] = b
    basis = [n + i for i in range(m)]

    if n_art:
        art_col = n + n_slack
        for i in np.nonzero(neg)[0]:
            tableau[i, :] *= -1.0
            tableau[i, art_col] = 1.0
            basis[i] = art_col
            art_col += 1
        # phase 1: maximize minus the artificial sum
        tableau[-1, n + n_slack:total] = 1.0
        for i in np.nonzero(neg)[0]:
            tableau[-1] -= tableau[i]
        status = _run_simplex(tableau, basis, total)
        if status != "optimal":
            raise IterationLimitError("phase-1 simplex failed to terminate")
        if tableau[-1, -1] < -1e-8:
            return LpSolution(np.full(n, np.nan), np.nan, "infeasible")
        # drive leftover artificial basics out, drop redundant rows
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] >= n + n_slack:
                entry = np.nonzero(np.abs(tableau[i, :n + n_slack]) > _PIVOT_TOL)[0]
                if entry.size:
                    _pivot(tableau, basis, i, int(entry[0]))
                else:
                    keep[i] = False
        rows_keep = np.concatenate([np.nonzero(keep)[0], [m]])
        cols_keep = np.concatenate([np.arange(n + n_slack), [total]])
        tableau = tableau[rows_keep][:, cols_keep]
        basis = [basis[i] for i in range(m) if keep[i]]
        m = len(basis)

    # phase 2 objective row
    tableau[-1, :] = 0.0
    tableau[-1, :n] = -c
    for r, col in enumerate(basis):
        if col < n and c[col] != 0.0:
            tableau[-1] += c[col] * tableau[r]
    status = _run_simplex(tableau, basis, n + n_slack)
    if status == "unbounded":
        return LpSolution(np.full(n, np.nan), np.nan, "unbounded")

    y = np.zeros(n + n_slack)
    for r, col in enumerate(basis):
        y[col] = tableau[r, -1]
    z = np.maximum(y[:n], 0.0)
    x = problem.lo + z / col_scale
    x = np.minimum(np.maximum(x, problem.lo), problem.hi)
    return LpSolution(x, float(problem.c @ x), "optimal")


def newton_root(f, df, x0: float, tol: float, bracket, max_iter: int = 100) -> float:
    """Safeguarded Newton iteration on a bracketed scalar root.

    Newton steps leaving the current bracket fall back to bisection, and
    the bracket is maintained from the sign of each evaluation, so the
    result is insensitive to the starting point for monotone functions.

    Parameters
    ----------
    f, df : callables
        Function and its derivative.
    x0 : float
        Starting point; clipped into the bracket.
    tol : float
        Convergence test ``abs(f(x)) <= tol``.
    bracket : (lo, hi)
        Interval with ``f(lo) * f(hi) <= 0``.

    Raises
    ------
    NoRootError
        If the bracket does not enclose a sign change.
    IterationLimitError
        If ``max_iter`` evaluations do not meet the tolerance.
    """
    lo, hi = (float(bracket[0]), float(bracket[1]))
    if lo > hi:
        lo, hi = hi, lo
    flo, fhi = f(lo), f(hi)
    if abs(flo) <= tol:
        return lo
    if abs(fhi) <= tol:
        return hi
    if flo * fhi > 0:
        raise NoRootError("no root bracketed")

    x = min(max(float(x0), lo), hi)
    for _ in range(max_iter):
        fx = f(x)
        if abs(fx) <= tol:
            return x
        if (fx < 0) == (flo < 0):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        dfx = df(x)
        if dfx != 0.0:
            candidate = x - fx / dfx
            inside = lo < candidate < hi
        else:
            inside = False
        x = candidate if inside else 0.5 * (lo + hi)
        if hi - lo <= 4.0 * np.finfo(float).eps * max(abs(lo), abs(hi), 1e-300):
            if abs(f(x)) <= tol:
                return x
            raise IterationLimitError("no convergence: bracket collapsed above tolerance")
    raise IterationLimitError("no convergence")

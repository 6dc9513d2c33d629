"""Dense linear algebra and linear programming used by the solvers.

The LP solver is a two-phase dense simplex with Bland's rule, so identical
inputs always take identical pivot sequences and produce bit-identical
solutions.  Tolerances: feasibility 1e-8, pivot threshold 1e-12, both
adjustable per call.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IterationLimitError, SingularMatrixError, SolverError

PIVOT_TOL = 1e-12
FEAS_TOL = 1e-8
MAX_PIVOTS = 1_000_000


@dataclass
class LinearSystem:
    matrix: np.ndarray
    rhs: np.ndarray


def lu_factor(a: np.ndarray, pivot_tol: float = PIVOT_TOL):
    """LU decomposition with partial pivoting; rejects pivots below the threshold."""
    a = np.array(a, dtype=float)
    n, m = a.shape
    if n != m:
        raise SolverError("lu_factor: matrix must be square")
    perm = np.arange(n)
    for col in range(n):
        pivot_row = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[pivot_row, col]) < pivot_tol:
            raise SingularMatrixError(f"pivot {a[pivot_row, col]!r} below {pivot_tol} in column {col}")
        if pivot_row != col:
            a[[col, pivot_row]] = a[[pivot_row, col]]
            perm[[col, pivot_row]] = perm[[pivot_row, col]]
        factors = a[col + 1:, col] / a[col, col]
        a[col + 1:, col] = factors
        a[col + 1:, col + 1:] -= np.outer(factors, a[col, col + 1:])
    return a, perm


def lu_solve(lu: np.ndarray, perm: np.ndarray, b: np.ndarray) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    x = b[perm].astype(float).copy()
    n = lu.shape[0]
    for i in range(1, n):  # forward substitution, unit lower triangle
        x[i] -= lu[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):  # back substitution
        x[i] = (x[i] - lu[i, i + 1:] @ x[i + 1:]) / lu[i, i]
    return x


def solve_linear(system: LinearSystem, pivot_tol: float = PIVOT_TOL) -> np.ndarray:
    """Solve a square system by partial-pivot LU; raises SingularMatrixError."""
    a = np.asarray(system.matrix, dtype=float)
    b = np.asarray(system.rhs, dtype=float)
    lu, perm = lu_factor(a, pivot_tol)
    x = lu_solve(lu, perm, b)
    residual = np.max(np.abs(a @ x - b)) if len(b) else 0.0
    scale = 1.0 + (np.max(np.abs(b)) if len(b) else 0.0)
    if residual > FEAS_TOL * scale:
        raise SolverError(f"solve_linear: residual {residual} exceeds tolerance")
    return x


# ---------------------------------------------------------------------------
# Linear programming


@dataclass
class LinearProgram:
    """Maximize objective . x subject to rows (a, relation, b) and variable bounds.

    Relations are "<=", "=" or ">=".  Default bounds are [0, +inf); use None
    for an absent upper bound and -inf (float("-inf")) for a free lower bound.
    """

    objective: np.ndarray
    rows: list[tuple[np.ndarray, str, float]] = field(default_factory=list)
    bounds: list[tuple[float, float | None]] | None = None

    def add_row(self, coeffs, relation: str, rhs: float) -> None:
        if relation not in ("<=", "=", ">="):
            raise SolverError(f"unknown relation {relation!r}")
        self.rows.append((np.asarray(coeffs, dtype=float), relation, float(rhs)))


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None = None
    value: float | None = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _bland_simplex(tab: np.ndarray, basis: list[int], cost: np.ndarray,
                   limit: int, pivot_tol: float) -> tuple[str, int]:
    """Run simplex on equality-form tableau [A | b] maximizing cost . x.

    The tableau must already have unit columns for the basis.  Returns the
    termination status and the number of pivots performed.
    """
    m, ncols = tab.shape
    n = ncols - 1
    # reduced costs: cbar = cost - cost_B . tab (per column)
    z = cost.astype(float).copy()
    for i, bi in enumerate(basis):
        if cost[bi] != 0.0:
            z -= cost[bi] * tab[i, :n]
    pivots = 0
    while True:
        entering = -1
        for j in range(n):  # Bland: lowest improving index
            if z[j] > 1e-9:
                entering = j
                break
        if entering < 0:
            return "optimal", pivots
        col = tab[:, entering]
        best_ratio = None
        leaving = -1
        for i in range(m):
            if col[i] > pivot_tol:
                ratio = tab[i, n] / col[i]
                if best_ratio is None or ratio < best_ratio - 1e-12 or (
                        abs(ratio - best_ratio) <= 1e-12 and basis[i] < basis[leaving]):
                    best_ratio = ratio
                    leaving = i
        if leaving < 0:
            return "unbounded", pivots
        pivots += 1
        if pivots > limit:
            raise IterationLimitError(f"simplex exceeded {limit} pivots")
        pivot = tab[leaving, entering]
        tab[leaving] /= pivot
        factors = tab[:, entering].copy()
        factors[leaving] = 0.0
        tab -= np.outer(factors, tab[leaving])
        z -= z[entering] * tab[leaving, :n]
        basis[leaving] = entering


def solve_lp(lp: LinearProgram, pivot_tol: float = PIVOT_TOL,
             feas_tol: float = FEAS_TOL, max_pivots: int = MAX_PIVOTS) -> LpSolution:
    """Deterministic two-phase simplex; returns Optimal/Infeasible/Unbounded."""
    c_orig = np.asarray(lp.objective, dtype=float)
    n_orig = len(c_orig)
    bounds = lp.bounds if lp.bounds is not None else [(0.0, None)] * n_orig
    if len(bounds) != n_orig:
        raise SolverError("solve_lp: bounds length mismatch")

    # Recompose x_orig = pos_part - neg_part + shift over internal columns.
    col_of: list[tuple[int, int | None, float]] = []  # (pos column, neg column, shift)
    ncols = 0
    extra_rows: list[tuple[np.ndarray, str, float]] = []
    for j, (lo, hi) in enumerate(bounds):
        if lo == float("-inf"):
            col_of.append((ncols, ncols + 1, 0.0))
            ncols += 2
        else:
            col_of.append((ncols, None, float(lo)))
            ncols += 1
        if hi is not None:
            row = np.zeros(n_orig)
            row[j] = 1.0
            extra_rows.append((row, "<=", float(hi)))

    all_rows = list(lp.rows) + extra_rows

    def expand(coeffs: np.ndarray) -> np.ndarray:
        out = np.zeros(ncols)
        for j in range(n_orig):
            pos, neg, _ = col_of[j]
            out[pos] = coeffs[j]
            if neg is not None:
                out[neg] = -coeffs[j]
        return out

    shift = np.array([s for (_, _, s) in col_of])
    orig_coeff_matrix = np.array([r[0] for r in all_rows]) if all_rows else np.zeros((0, n_orig))

    m = len(all_rows)
    n_slack = sum(1 for (_, rel, _) in all_rows if rel != "=")
    width = ncols + n_slack
    tab = np.zeros((m, width + 1))
    slack_idx = 0
    slack_col_of_row = [-1] * m
    for i, (coeffs, rel, rhs) in enumerate(all_rows):
        coeffs = np.asarray(coeffs, dtype=float)
        if len(coeffs) != n_orig:
            raise SolverError("solve_lp: row length mismatch")
        tab[i, :ncols] = expand(coeffs)
        tab[i, width] = rhs - coeffs @ shift
        if rel != "=":
            col = ncols + slack_idx
            tab[i, col] = 1.0 if rel == "<=" else -1.0
            slack_col_of_row[i] = col
            slack_idx += 1

    for i in range(m):  # make rhs non-negative
        if tab[i, width] < 0.0:
            tab[i] = -tab[i]

    # Phase 1: start from slack columns where they are unit, artificials elsewhere.
    basis: list[int] = []
    artificial_cols: list[int] = []
    art_blocks: list[np.ndarray] = []
    for i in range(m):
        col = slack_col_of_row[i]
        if col >= 0 and tab[i, col] == 1.0:
            basis.append(col)
        else:
            art = np.zeros((m, 1))
            art[i, 0] = 1.0
            art_blocks.append(art)
            basis.append(width + len(artificial_cols))
            artificial_cols.append(width + len(artificial_cols))

    if artificial_cols:
        tab1 = np.hstack([tab[:, :width], np.hstack(art_blocks), tab[:, width:]])
        cost1 = np.zeros(tab1.shape[1] - 1)
        for j in artificial_cols:
            cost1[j] = -1.0
        status, _ = _bland_simplex(tab1, basis, cost1, max_pivots, pivot_tol)
        if status != "optimal":
            raise SolverError("phase-1 simplex terminated abnormally")
        art_value = sum(tab1[i, -1] for i, bi in enumerate(basis) if bi in set(artificial_cols))
        if art_value > feas_tol:
            return LpSolution(status="infeasible")
        # pivot leftover artificials out of the basis where possible
        art_set = set(artificial_cols)
        keep_rows = []
        for i in range(m):
            if basis[i] in art_set:
                entering = -1
                for j in range(width):
                    if abs(tab1[i, j]) > 1e-9:
                        entering = j
                        break
                if entering < 0:
                    continue  # redundant row
                pivot = tab1[i, entering]
                tab1[i] /= pivot
                factors = tab1[:, entering].copy()
                factors[i] = 0.0
                tab1 -= np.outer(factors, tab1[i])
                basis[i] = entering
                keep_rows.append(i)
            else:
                keep_rows.append(i)
        tab = np.hstack([tab1[:, :width], tab1[:, -1:]])[keep_rows]
        basis = [basis[i] for i in keep_rows]

    cost2 = np.zeros(width)
    for j in range(n_orig):
        pos, neg, _ = col_of[j]
        cost2[pos] = c_orig[j]
        if neg is not None:
            cost2[neg] = -c_orig[j]

    status, _ = _bland_simplex(tab, basis, cost2, max_pivots, pivot_tol)
    if status == "unbounded":
        return LpSolution(status="unbounded")

    full = np.zeros(width)
    for i, bi in enumerate(basis):
        if bi < width:
            full[bi] = tab[i, -1]
    x = np.empty(n_orig)
    for j in range(n_orig):
        pos, neg, s = col_of[j]
        x[j] = full[pos] - (full[neg] if neg is not None else 0.0) + s

    if m:
        scale = 1.0 + max(abs(r[2]) for r in all_rows)
        lhs = orig_coeff_matrix @ x
        for i, (_, rel, rhs) in enumerate(all_rows):
            err = lhs[i] - rhs
            ok = (abs(err) <= feas_tol * scale if rel == "=" else
                  err <= feas_tol * scale if rel == "<=" else
                  err >= -feas_tol * scale)
            if not ok:
                raise SolverError(f"solve_lp: solution violates row {i} by {err}")
    return LpSolution(status="optimal", x=x, value=float(c_orig @ x))

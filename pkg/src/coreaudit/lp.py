"""Linear programs with primal and dual optima.

The reference solver is a dense two-phase primal simplex on a full tableau,
with Dantzig pricing that falls back to Bland's rule once degenerate pivots
pile up, so it cannot cycle. ``exact=True`` runs the same tableau over
``fractions.Fraction``. Problems too large for a dense tableau go to HiGHS
(through scipy) when ``method="auto"``.

Dual values follow one convention for every backend: ``duals[r]`` is the
derivative of the optimal objective with respect to ``rhs[r]``. So for a
minimization, ``>=`` rows have non-negative duals and ``<=`` rows
non-positive ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

from .errors import SolverStall

LE, GE, EQ = "<=", ">=", "=="
RELATIONS = (LE, GE, EQ)

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-8
#: Dense tableau cells above which ``method="auto"`` hands the problem to HiGHS.
DENSE_LIMIT = 600_000


@dataclass(frozen=True, eq=False)
class LpProblem:
    sense: str
    c: np.ndarray
    A: sparse.csr_matrix
    relations: tuple[str, ...]
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    var_labels: tuple[Hashable, ...] = ()
    con_labels: tuple[Hashable, ...] = ()

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', not {self.sense!r}")
        nrows, nvars = self.A.shape
        if self.c.shape != (nvars,) or self.lb.shape != (nvars,) or self.ub.shape != (nvars,):
            raise ValueError("objective/bound length does not match the variable count")
        if self.rhs.shape != (nrows,) or len(self.relations) != nrows:
            raise ValueError("rhs/relations length does not match the row count")
        if any(r not in RELATIONS for r in self.relations):
            raise ValueError(f"relations must be among {RELATIONS}")
        if np.any(self.lb > self.ub):
            raise ValueError("lower bound exceeds upper bound")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.A.data)) and np.all(np.isfinite(self.rhs))):
            raise ValueError("coefficients must be finite")
        if self.var_labels and len(self.var_labels) != nvars:
            raise ValueError("one label per variable")
        if self.con_labels and len(self.con_labels) != nrows:
            raise ValueError("one label per constraint")

    @property
    def num_vars(self) -> int:
        return self.A.shape[1]

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    def permuted(self, order: Sequence[int]) -> "LpProblem":
        """Same problem with rows reordered."""
        order = list(order)
        return LpProblem(
            self.sense, self.c, self.A[order].tocsr(), tuple(self.relations[r] for r in order),
            self.rhs[order], self.lb, self.ub, self.var_labels,
            tuple(self.con_labels[r] for r in order) if self.con_labels else (),
        )


class LpBuilder:
    """Incremental construction of an :class:`LpProblem` by labelled variables and rows."""

    def __init__(self, sense: str = "min"):
        self.sense = sense
        self._c: list[float] = []
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._vlabels: list[Hashable] = []
        self._vindex: dict[Hashable, int] = {}
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self._rel: list[str] = []
        self._rhs: list[float] = []
        self._clabels: list[Hashable] = []

    def add_var(self, label: Hashable = None, lb: float = 0.0, ub: float = math.inf, cost: float = 0.0) -> int:
        j = len(self._c)
        if label is None:
            label = j
        if label in self._vindex:
            raise ValueError(f"duplicate variable label {label!r}")
        self._vindex[label] = j
        self._vlabels.append(label)
        self._c.append(float(cost))
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        return j

    def var(self, label: Hashable) -> int:
        return self._vindex[label]

    def add_row(self, coeffs: Mapping[int, float] | Iterable[tuple[int, float]], rel: str, rhs: float,
                label: Hashable = None) -> int:
        if rel not in RELATIONS:
            raise ValueError(f"relation must be among {RELATIONS}")
        r = len(self._rhs)
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        for j, a in items:
            if a != 0:
                self._rows.append(r)
                self._cols.append(j)
                self._vals.append(float(a))
        self._rel.append(rel)
        self._rhs.append(float(rhs))
        self._clabels.append(r if label is None else label)
        return r

    @property
    def num_vars(self) -> int:
        return len(self._c)

    @property
    def num_rows(self) -> int:
        return len(self._rhs)

    def build(self) -> LpProblem:
        A = sparse.csr_matrix(
            (self._vals, (self._rows, self._cols)), shape=(len(self._rhs), len(self._c)), dtype=float
        )
        A.sum_duplicates()
        return LpProblem(
            self.sense, np.array(self._c, dtype=float), A, tuple(self._rel), np.array(self._rhs, dtype=float),
            np.array(self._lb, dtype=float), np.array(self._ub, dtype=float), tuple(self._vlabels),
            tuple(self._clabels),
        )


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    objective: float | None = None
    iterations: int = 0
    method: str = ""
    problem: LpProblem | None = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def reduced_costs(self) -> np.ndarray:
        p = self.problem
        return p.c - p.A.T @ np.asarray(self.duals, dtype=float)

    def dual_objective(self) -> float:
        """``rhs . duals`` plus the bound terms carried by the reduced costs."""
        p = self.problem
        d = self.reduced_costs()
        total = float(p.rhs @ np.asarray(self.duals, dtype=float))
        x = np.asarray(self.x, dtype=float)
        for j in np.flatnonzero(np.abs(d) > 1e-12):
            # a variable with non-zero reduced cost sits on one of its bounds
            at_lb = math.isfinite(p.lb[j]) and abs(x[j] - p.lb[j]) <= abs(x[j] - p.ub[j])
            total += d[j] * (p.lb[j] if at_lb else p.ub[j])
        return total

    def value(self, label: Hashable) -> float:
        return float(self.x[self.problem.var_labels.index(label)])


def solve_lp(problem: LpProblem, *, method: str = "auto", exact: bool = False,
             max_iter: int | None = None, pricing: str = "dantzig") -> LpSolution:
    """Solve ``problem`` to optimality, or report it infeasible/unbounded.

    ``method`` is ``"simplex"``, ``"highs"`` or ``"auto"``. ``exact`` forces the
    simplex over rationals. Raises :class:`SolverStall` if the iteration cap is hit
    or the float tableau loses feasibility.
    """
    if exact:
        method = "simplex"
    if method == "auto":
        nub = int(np.sum(np.isfinite(problem.ub) & np.isfinite(problem.lb)))
        rows = problem.num_rows + nub
        cells = (rows + 1) * (problem.num_vars + 2 * rows + 1)
        if cells > DENSE_LIMIT:
            method = "highs"
        else:
            try:
                return _Simplex(problem, exact=False, max_iter=max_iter, pricing=pricing).solve()
            except SolverStall:
                method = "highs"
    if method == "simplex":
        return _Simplex(problem, exact=exact, max_iter=max_iter, pricing=pricing).solve()
    if method == "highs":
        return _solve_highs(problem)
    raise ValueError(f"unknown LP method {method!r}")


# ---------------------------------------------------------------------------
# dense two-phase simplex

class _Simplex:
    def __init__(self, problem: LpProblem, exact: bool, max_iter: int | None, pricing: str):
        if pricing not in ("dantzig", "bland"):
            raise ValueError("pricing must be 'dantzig' or 'bland'")
        self.p = problem
        self.exact = exact
        self.tol = 0 if exact else PIVOT_TOL
        self.bland = pricing == "bland"
        self.iterations = 0
        self._to_standard_form()
        self.max_iter = max_iter if max_iter is not None else 50 * (self.T.shape[0] + self.T.shape[1]) + 1000

    def _num(self, v):
        return Fraction(v) if self.exact else float(v)

    def _to_standard_form(self):
        p = self.p
        A = p.A.toarray()
        nrows, nvars = A.shape
        sign = 1.0 if p.sense == "min" else -1.0
        cols: list[np.ndarray] = []
        cost: list[float] = []
        self.recover: list[tuple[str, int, float]] = []  # (kind, std column, offset) per original var
        offset = np.zeros(nvars)
        extra_rows: list[tuple[int, float]] = []  # (std column, bound) rows x' <= ub - lb
        for j in range(nvars):
            lo, hi = p.lb[j], p.ub[j]
            if math.isfinite(lo):
                offset[j] = lo
                self.recover.append(("shift", len(cols), lo))
                if math.isfinite(hi):
                    extra_rows.append((len(cols), hi - lo))
                cols.append(A[:, j])
                cost.append(sign * p.c[j])
            elif math.isfinite(hi):
                offset[j] = hi
                self.recover.append(("mirror", len(cols), hi))
                cols.append(-A[:, j])
                cost.append(-sign * p.c[j])
            else:
                self.recover.append(("free", len(cols), 0.0))
                cols.append(A[:, j])
                cost.append(sign * p.c[j])
                cols.append(-A[:, j])
                cost.append(-sign * p.c[j])
        nstruct = len(cols)
        M = np.column_stack(cols) if cols else np.zeros((nrows, 0))
        b = p.rhs - A @ offset
        rel = list(p.relations)
        if extra_rows:
            E = np.zeros((len(extra_rows), nstruct))
            for r, (col, bound) in enumerate(extra_rows):
                E[r, col] = 1.0
            M = np.vstack([M, E])
            b = np.concatenate([b, [bound for _, bound in extra_rows]])
            rel += [LE] * len(extra_rows)
        self.obj_offset = float(p.c @ offset)
        total_rows = M.shape[0]
        self.row_sign = np.ones(total_rows)
        for r in range(total_rows):
            if b[r] < 0:
                M[r] = -M[r]
                b[r] = -b[r]
                self.row_sign[r] = -1.0
                rel[r] = {LE: GE, GE: LE, EQ: EQ}[rel[r]]
        n_slack = sum(1 for r in rel if r != EQ)
        n_art = sum(1 for r in rel if r != LE)
        ncols = nstruct + n_slack + n_art
        dtype = object if self.exact else float
        T = np.zeros((total_rows + 1, ncols + 1), dtype=dtype)
        if self.exact:
            T[:] = Fraction(0)
            T[:total_rows, :nstruct] = [[Fraction(v) for v in row] for row in M]
            T[:total_rows, -1] = [Fraction(v) for v in b]
        else:
            T[:total_rows, :nstruct] = M
            T[:total_rows, -1] = b
        basis = np.zeros(total_rows, dtype=int)
        self.identity_col = np.zeros(total_rows, dtype=int)
        s = nstruct
        a = nstruct + n_slack
        one = self._num(1)
        for r in range(total_rows):
            if rel[r] == LE:
                T[r, s] = one
                basis[r] = s
                self.identity_col[r] = s
                s += 1
            else:
                if rel[r] == GE:
                    T[r, s] = -one
                    s += 1
                T[r, a] = one
                basis[r] = a
                self.identity_col[r] = a
                a += 1
        self.T = T
        self.basis = basis
        self.nstruct = nstruct
        self.art_start = nstruct + n_slack
        self.nrows_orig = nrows
        self.cost = np.array([self._num(v) for v in cost] + [self._num(0)] * (ncols - nstruct), dtype=dtype)

    def _pivot(self, r: int, c: int):
        T = self.T
        T[r] = T[r] / T[r, c]
        col = T[:, c].copy()
        col[r] = 0
        T -= np.outer(col, T[r])
        if not self.exact:
            T[:, c] = 0.0
            T[r, c] = 1.0
        self.basis[r] = c
        self.iterations += 1

    def _run(self, allowed: np.ndarray) -> str:
        T = self.T
        tol = self.tol
        nrows = T.shape[0] - 1
        degenerate = 0
        bland = self.bland
        while True:
            if self.iterations >= self.max_iter:
                raise SolverStall(f"simplex hit the iteration cap ({self.max_iter})")
            d = T[-1, :-1]
            if self.exact:
                neg = [j for j in np.flatnonzero(allowed) if d[j] < 0]
                if not neg:
                    return "optimal"
                c = neg[0] if bland else min(neg, key=lambda j: (d[j], j))
            else:
                cand = np.flatnonzero(allowed & (d < -tol))
                if cand.size == 0:
                    return "optimal"
                c = int(cand[0]) if bland else int(cand[np.argmin(d[cand])])
            col = T[:nrows, c]
            rows = [r for r in range(nrows) if col[r] > tol] if self.exact else np.flatnonzero(col > tol)
            if len(rows) == 0:
                return "unbounded"
            if self.exact:
                ratios = {r: T[r, -1] / col[r] for r in rows}
                best = min(ratios.values())
                ties = [r for r in rows if ratios[r] == best]
            else:
                ratios = T[rows, -1] / col[rows]
                best = ratios.min()
                ties = rows[ratios <= best + tol]
            r = min(ties, key=lambda r: self.basis[r])
            if best == 0 or (not self.exact and best <= tol):
                degenerate += 1
                if degenerate > 50 and not bland:
                    bland = True
            else:
                degenerate = 0
            self._pivot(int(r), int(c))

    def _set_cost_row(self, cost):
        T = self.T
        nrows = T.shape[0] - 1
        row = np.array(list(cost) + [self._num(0)], dtype=T.dtype)
        cb = cost[self.basis]
        T[-1] = row - cb @ T[:nrows]

    def solve(self) -> LpSolution:
        T = self.T
        nrows = T.shape[0] - 1
        ncols = T.shape[1] - 1
        art = np.zeros(ncols, dtype=bool)
        art[self.art_start:] = True
        if art.any():
            phase1 = np.array([self._num(1) if a else self._num(0) for a in art], dtype=T.dtype)
            self._set_cost_row(phase1)
            self._run(np.ones(ncols, dtype=bool))
            infeas = -T[-1, -1]
            scale = 1.0 if self.exact else max(1.0, float(np.abs(T[:nrows, -1]).max(initial=0.0)))
            if infeas > (0 if self.exact else FEAS_TOL * scale):
                return LpSolution("infeasible", iterations=self.iterations, method=self._method(), problem=self.p)
            for r in range(nrows):
                if art[self.basis[r]]:
                    row = T[r, :ncols]
                    nz = [j for j in range(self.art_start) if (row[j] != 0 if self.exact else abs(row[j]) > self.tol)]
                    if nz:
                        self._pivot(r, nz[0])
        self._set_cost_row(self.cost)
        status = self._run(~art)
        if status == "unbounded":
            return LpSolution("unbounded", iterations=self.iterations, method=self._method(), problem=self.p)
        return self._extract()

    def _method(self) -> str:
        return "simplex-exact" if self.exact else "simplex"

    def _extract(self) -> LpSolution:
        T = self.T
        xs = np.array([self._num(0)] * (T.shape[1] - 1), dtype=T.dtype)
        for r, col in enumerate(self.basis):
            xs[col] = T[r, -1]
        x = []
        for kind, col, off in self.recover:
            if kind == "shift":
                x.append(xs[col] + self._num(off))
            elif kind == "mirror":
                x.append(self._num(off) - xs[col])
            else:
                x.append(xs[col] - xs[col + 1])
        y_std = -T[-1, self.identity_col]
        sense = 1 if self.p.sense == "min" else -1
        duals = [y_std[r] * (1 if self.row_sign[r] > 0 else -1) * sense for r in range(self.nrows_orig)]
        if self.exact:
            x = np.array(x, dtype=object)
            duals = np.array(duals, dtype=object)
            objective = sum((Fraction(c) * v for c, v in zip(self.p.c, x)), Fraction(0))
        else:
            x = np.array(x, dtype=float)
            duals = np.array(duals, dtype=float)
            objective = float(self.p.c @ x)
            self._check_feasible(x)
        return LpSolution("optimal", x, duals, objective, self.iterations, self._method(), self.p)

    def _check_feasible(self, x: np.ndarray):
        p = self.p
        ax = p.A @ x
        scale = 1.0 + np.abs(p.rhs) + abs(p.A) @ np.abs(x)
        viol = np.zeros(p.num_rows)
        for r, rel in enumerate(p.relations):
            if rel == LE:
                viol[r] = ax[r] - p.rhs[r]
            elif rel == GE:
                viol[r] = p.rhs[r] - ax[r]
            else:
                viol[r] = abs(ax[r] - p.rhs[r])
        if np.any(viol > 1e-7 * scale) or np.any(x < p.lb - 1e-7) or np.any(x > p.ub + 1e-7):
            raise SolverStall("simplex lost primal feasibility (numerical failure)")


# ---------------------------------------------------------------------------
# HiGHS backend

def _solve_highs(problem: LpProblem) -> LpSolution:
    from scipy.optimize import linprog

    p = problem
    sign = 1.0 if p.sense == "min" else -1.0
    rel = np.array(p.relations)
    le = np.flatnonzero(rel == LE)
    ge = np.flatnonzero(rel == GE)
    eq = np.flatnonzero(rel == EQ)
    ub_rows = np.concatenate([le, ge])
    flip = np.concatenate([np.ones(len(le)), -np.ones(len(ge))])
    A_ub = sparse.diags(flip) @ p.A[ub_rows] if len(ub_rows) else None
    b_ub = flip * p.rhs[ub_rows] if len(ub_rows) else None
    A_eq = p.A[eq] if len(eq) else None
    b_eq = p.rhs[eq] if len(eq) else None
    bounds = [(None if not math.isfinite(lo) else lo, None if not math.isfinite(hi) else hi)
              for lo, hi in zip(p.lb, p.ub)]
    res = linprog(sign * p.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    iters = int(getattr(res, "nit", 0) or 0)
    if res.status == 2:
        return LpSolution("infeasible", iterations=iters, method="highs", problem=p)
    if res.status == 3:
        return LpSolution("unbounded", iterations=iters, method="highs", problem=p)
    if res.status != 0:
        raise SolverStall(f"HiGHS failed: {res.message}")
    duals = np.zeros(p.num_rows)
    if len(ub_rows):
        duals[ub_rows] = sign * flip * res.ineqlin.marginals
    if len(eq):
        duals[eq] = sign * res.eqlin.marginals
    x = np.asarray(res.x, dtype=float)
    return LpSolution("optimal", x, duals, float(p.c @ x), iters, "highs", p)

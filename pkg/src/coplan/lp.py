"""Dense bounded-variable LP and MILP solver.

Primal simplex (two-phase, revised with explicit basis inverse) over
problems of the form

    min/max  c'x
    s.t.     a_i'x  {<=, =, >=}  b_i      for every row i
             lo <= x <= up                componentwise, +-inf allowed

plus a best-first branch-and-bound layer for integer-masked columns with
a solution pool.  Everything is deterministic: Dantzig pricing with a
lowest-index tie break, a Bland fallback against cycling, and best-bound
node selection with insertion-order tie breaks.

Conventions (minimization): duals of >= rows are nonnegative, duals of
<= rows are nonpositive, equality duals are sign-free.  For maximization
the returned duals/reduced costs are negated so that <= rows carry
nonnegative duals.  Unbounded solves return an improving ray; infeasible
solves report the violating rows found by phase 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"
NODE_LIMIT = "node_limit"

_AT_LOWER = 0
_AT_UPPER = 1
_FREE_ZERO = 2
_BASIC = 3


class LpError(Exception):
    """Malformed problem or numerical breakdown."""


@dataclass
class LpProblem:
    """Sparse row-wise LP/MILP description.

    Rows are (column-index array, coefficient array) pairs; senses are
    'L' (<=), 'E' (=), 'G' (>=).  `integer` marks columns that must be
    integral for `solve_milp`; `solve_lp` ignores the mask.
    """

    name: str = "lp"
    maximize: bool = False
    col_names: list = field(default_factory=list)
    col_lower: list = field(default_factory=list)
    col_upper: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    integer: list = field(default_factory=list)
    row_names: list = field(default_factory=list)
    row_cols: list = field(default_factory=list)
    row_coefs: list = field(default_factory=list)
    row_senses: list = field(default_factory=list)
    row_rhs: list = field(default_factory=list)

    def add_col(self, name, lower=0.0, upper=np.inf, obj=0.0, is_integer=False):
        j = len(self.col_names)
        self.col_names.append(name)
        self.col_lower.append(float(lower))
        self.col_upper.append(float(upper))
        self.objective.append(float(obj))
        self.integer.append(bool(is_integer))
        return j

    def add_row(self, name, cols, coefs, sense, rhs):
        if sense not in ("L", "E", "G"):
            raise LpError(f"unknown row sense {sense!r}")
        if len(cols) != len(coefs):
            raise LpError("cols/coefs length mismatch")
        self.row_names.append(name)
        self.row_cols.append(np.asarray(cols, dtype=np.int64))
        self.row_coefs.append(np.asarray(coefs, dtype=np.float64))
        self.row_senses.append(sense)
        self.row_rhs.append(float(rhs))
        return len(self.row_names) - 1

    @property
    def ncols(self):
        return len(self.col_names)

    @property
    def nrows(self):
        return len(self.row_names)

    def dense_matrix(self):
        a = np.zeros((self.nrows, self.ncols))
        for i, (cols, coefs) in enumerate(zip(self.row_cols, self.row_coefs)):
            np.add.at(a[i], cols, coefs)
        return a

    def validate(self):
        for arr in (self.col_lower, self.col_upper, self.objective, self.row_rhs):
            if not np.all(np.isfinite(np.nan_to_num(np.asarray(arr, dtype=float), posinf=0, neginf=0))):
                raise LpError("non-finite data")
        lo = np.asarray(self.col_lower)
        up = np.asarray(self.col_upper)
        if np.any(lo > up + 1e-12):
            raise LpError("crossed bounds")
        if len(set(self.col_names)) != self.ncols:
            raise LpError("duplicate column names")
        if len(set(self.row_names)) != self.nrows:
            raise LpError("duplicate row names")


@dataclass
class LpSolution:
    status: str
    objective: float = np.nan
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    ray: np.ndarray | None = None
    infeasible_rows: list = field(default_factory=list)
    iterations: int = 0
    message: str = ""
    basis: tuple | None = None  # (basis cols, column statuses) for warm starts


@dataclass
class MilpSolution:
    status: str
    pool: list = field(default_factory=list)  # [(objective, x array)] best first
    best_bound: float = np.nan
    nodes: int = 0

    @property
    def objective(self):
        return self.pool[0][0] if self.pool else np.nan

    @property
    def x(self):
        return self.pool[0][1] if self.pool else None


class _Simplex:
    """Two-phase bounded-variable primal simplex on the standard form
    A x + s = b with slack bounds encoding row senses."""

    def __init__(self, prob: LpProblem, tol=1e-7):
        prob.validate()
        self.tol = tol
        self.n_struct = prob.ncols
        self.m = prob.nrows
        m, n = self.m, self.n_struct
        a_struct = prob.dense_matrix()
        self.sense_sign = 1.0 if not prob.maximize else -1.0

        # columns: structural | slack | artificial (added lazily in init_basis)
        self.A = np.hstack([a_struct, np.eye(m)]) if m else a_struct.reshape(0, n)
        self.lo = np.concatenate([np.asarray(prob.col_lower, dtype=float), np.zeros(m)])
        self.up = np.concatenate([np.asarray(prob.col_upper, dtype=float), np.zeros(m)])
        for i, s in enumerate(prob.row_senses):
            if s == "L":
                self.lo[n + i], self.up[n + i] = 0.0, np.inf
            elif s == "G":
                self.lo[n + i], self.up[n + i] = -np.inf, 0.0
            else:
                self.lo[n + i], self.up[n + i] = 0.0, 0.0
        self.b = np.asarray(prob.row_rhs, dtype=float)
        self.c = np.concatenate([self.sense_sign * np.asarray(prob.objective, dtype=float), np.zeros(m)])
        self.row_names = prob.row_names
        self.prob = prob

    # ---- basis bootstrap -------------------------------------------------

    def _initial_point(self):
        n_all = self.A.shape[1]
        status = np.empty(n_all, dtype=np.int8)
        x = np.zeros(n_all)
        for j in range(n_all):
            lo, up = self.lo[j], self.up[j]
            if np.isfinite(lo) and np.isfinite(up):
                if abs(lo) <= abs(up):
                    status[j], x[j] = _AT_LOWER, lo
                else:
                    status[j], x[j] = _AT_UPPER, up
            elif np.isfinite(lo):
                status[j], x[j] = _AT_LOWER, lo
            elif np.isfinite(up):
                status[j], x[j] = _AT_UPPER, up
            else:
                status[j], x[j] = _FREE_ZERO, 0.0
        return status, x

    def _setup(self):
        """Initial basis: the row's slack wherever its implied value is
        feasible, an artificial column otherwise."""
        m, n = self.m, self.n_struct
        self.status, self.x = self._initial_point()
        x_struct = self.x[:n]
        resid = (self.b - self.A[:, :n] @ x_struct) if m else np.zeros(0)
        basis = np.empty(m, dtype=np.int64)
        diag = np.ones(m)
        art_rows = []
        for i in range(m):
            s = n + i
            if self.lo[s] - 1e-12 <= resid[i] <= self.up[s] + 1e-12:
                basis[i] = s
                self.status[s] = _BASIC
                self.x[s] = resid[i]
            else:
                art_rows.append(i)
        self.art_cols = []
        self.art_rows = []
        if art_rows:
            n_all = self.A.shape[1]
            extra = np.zeros((m, len(art_rows)))
            lo_a = np.zeros(len(art_rows))
            up_a = np.full(len(art_rows), np.inf)
            vals = np.empty(len(art_rows))
            for k, i in enumerate(art_rows):
                # slack stays nonbasic at the bound nearest the residual
                s = n + i
                slack_val = self.up[s] if resid[i] > self.up[s] else self.lo[s]
                if np.isinf(slack_val):
                    slack_val = 0.0
                self.x[s] = slack_val
                self.status[s] = _AT_UPPER if slack_val == self.up[s] else _AT_LOWER
                gap = resid[i] - slack_val
                sign = 1.0 if gap >= 0 else -1.0
                extra[i, k] = sign
                diag[i] = sign
                vals[k] = abs(gap)
                j = n_all + k
                self.art_cols.append(j)
                self.art_rows.append(i)
                basis[i] = j
            self.A = np.hstack([self.A, extra])
            self.lo = np.concatenate([self.lo, lo_a])
            self.up = np.concatenate([self.up, up_a])
            self.c = np.concatenate([self.c, np.zeros(len(art_rows))])
            self.status = np.concatenate([self.status,
                                          np.full(len(art_rows), _BASIC, dtype=np.int8)])
            self.x = np.concatenate([self.x, vals])
        self.basis = basis
        self.binv = np.diag(diag) if m else np.zeros((0, 0))
        self.in_basis = np.zeros(self.A.shape[1], dtype=bool)
        self.in_basis[basis] = True

    # ---- core iteration --------------------------------------------------

    def _refactorize(self):
        if self.m == 0:
            return
        bmat = self.A[:, self.basis]
        try:
            self.binv = np.linalg.inv(bmat)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
            raise LpError("singular basis during refactorization") from exc
        xb = self.binv @ (self.b - self.A @ self.x + self.A[:, self.basis] @ self.x[self.basis])
        self.x[self.basis] = xb

    def _recompute_basics(self):
        if self.m == 0:
            return
        nb = ~self.in_basis
        rhs = self.b - self.A[:, nb] @ self.x[nb]
        self.x[self.basis] = self.binv @ rhs

    def _run(self, cost, max_iter, bland_after=400):
        """Minimize `cost' x` from the current basis.  Returns
        ('optimal'|'unbounded'|'iteration_limit', ray_or_None, iters)."""
        m = self.m
        if m == 0:
            # only bounds: put every column at its cost-minimizing bound
            ray = np.zeros(self.A.shape[1])
            for j in range(self.A.shape[1]):
                if cost[j] < -self.tol:
                    if np.isinf(self.up[j]):
                        ray[j] = 1.0
                        return UNBOUNDED, ray, 0
                    self.x[j], self.status[j] = self.up[j], _AT_UPPER
                elif cost[j] > self.tol:
                    if np.isinf(self.lo[j]):
                        ray[j] = -1.0
                        return UNBOUNDED, ray, 0
                    self.x[j], self.status[j] = self.lo[j], _AT_LOWER
            return OPTIMAL, None, 0
        tol = self.tol
        degen_run = 0
        bland = False
        iters = 0
        while iters < max_iter:
            iters += 1
            if iters % 128 == 0:
                self._refactorize()
            y = cost[self.basis] @ self.binv
            d = cost - y @ self.A
            # entering candidates among nonbasic columns
            nb_mask = ~self.in_basis
            movable = nb_mask & (self.lo != self.up)
            cand_dir = np.zeros(self.A.shape[1])
            at_lo = movable & (self.status == _AT_LOWER) & (d < -tol)
            at_up = movable & (self.status == _AT_UPPER) & (d > tol)
            fr_up = movable & (self.status == _FREE_ZERO) & (d < -tol)
            fr_dn = movable & (self.status == _FREE_ZERO) & (d > tol)
            cand_dir[at_lo | fr_up] = 1.0
            cand_dir[at_up | fr_dn] = -1.0
            cand = np.nonzero(cand_dir != 0.0)[0]
            if cand.size == 0:
                return OPTIMAL, None, iters
            if bland:
                q = int(cand[0])
            else:
                scores = np.abs(d[cand])
                q = int(cand[int(np.argmax(scores))])
                # argmax already returns the first (lowest index) maximum
            direction = cand_dir[q]
            w = self.binv @ self.A[:, q]
            step_basic = direction * w  # basic change = -step_basic * t
            limit = np.inf
            leave_row = -1
            leave_to = _AT_LOWER
            xb = self.x[self.basis]
            lo_b = self.lo[self.basis]
            up_b = self.up[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                dec = step_basic > 1e-11
                inc = step_basic < -1e-11
                ratios = np.full(m, np.inf)
                ratios[dec] = (xb[dec] - lo_b[dec]) / step_basic[dec]
                ratios[inc] = (xb[inc] - up_b[inc]) / step_basic[inc]
            ratios = np.maximum(ratios, 0.0)
            if np.any(np.isfinite(ratios)):
                min_ratio = np.min(ratios)
                # near-ties: pick the largest pivot magnitude for stability
                window = min_ratio + 1e-9 * (1.0 + min_ratio)
                ties = np.nonzero(ratios <= window)[0]
                if bland:
                    leave_row = int(ties[int(np.argmin(self.basis[ties]))])
                else:
                    pivots = np.abs(step_basic[ties])
                    best = ties[pivots >= pivots.max() * (1.0 - 1e-9)]
                    leave_row = int(best[int(np.argmin(self.basis[best]))])
                limit = float(ratios[leave_row])
                leave_to = _AT_LOWER if step_basic[leave_row] > 0 else _AT_UPPER
            own_span = self.up[q] - self.lo[q]
            if np.isfinite(own_span) and own_span < limit - 1e-12:
                # bound flip, no basis change
                t = own_span
                self.x[self.basis] = xb - step_basic * t
                self.x[q] = self.x[q] + direction * t
                self.status[q] = _AT_UPPER if direction > 0 else _AT_LOWER
                degen_run = 0
                continue
            if leave_row < 0:
                ray = np.zeros(self.A.shape[1])
                ray[q] = direction
                ray[self.basis] = -step_basic
                return UNBOUNDED, ray, iters
            t = limit
            if t <= 1e-10:
                degen_run += 1
                if degen_run >= bland_after:
                    bland = True
            else:
                degen_run = 0
            p = self.basis[leave_row]
            self.x[self.basis] = xb - step_basic * t
            self.x[q] = self.x[q] + direction * t
            self.x[p] = self.lo[p] if leave_to == _AT_LOWER else self.up[p]
            self.status[p] = leave_to
            self.status[q] = _BASIC
            self.in_basis[p] = False
            self.in_basis[q] = True
            self.basis[leave_row] = q
            # basis inverse update
            wr = w[leave_row]
            if abs(wr) < 1e-12:
                self._refactorize()
                continue
            row = self.binv[leave_row, :] / wr
            self.binv -= np.outer(w, row)
            self.binv[leave_row, :] = row
        return ITERATION_LIMIT, None, iters

    # ---- public ----------------------------------------------------------

    def _try_warm(self, warm):
        """Install a previous (basis, status) pair; only valid when it is
        primal feasible here (true whenever just the objective changed)."""
        basis, status = warm
        if len(basis) != self.m or len(status) != self.A.shape[1]:
            return False
        basis = np.array(basis, dtype=np.int64)      # owned copy: pivots must
        status = np.array(status, dtype=np.int8)     # never touch the bundle
        x = np.zeros(self.A.shape[1])
        nb_mask = np.ones(self.A.shape[1], dtype=bool)
        nb_mask[basis] = False
        if np.any((status == _BASIC) != ~nb_mask):
            return False
        lo, up = self.lo, self.up
        at_lo = nb_mask & (status == _AT_LOWER)
        at_up = nb_mask & (status == _AT_UPPER)
        fr = nb_mask & (status == _FREE_ZERO)
        if np.any(np.isinf(lo[at_lo])) or np.any(np.isinf(up[at_up])):
            return False
        x[at_lo] = lo[at_lo]
        x[at_up] = up[at_up]
        x[fr] = 0.0
        try:
            binv = np.linalg.inv(self.A[:, basis])
        except np.linalg.LinAlgError:
            return False
        rhs = self.b - self.A[:, nb_mask] @ x[nb_mask]
        xb = binv @ rhs
        if np.any(xb < lo[basis] - 1e-9) or np.any(xb > up[basis] + 1e-9):
            return False
        resid = self.A[:, basis] @ xb - rhs
        if np.max(np.abs(resid), initial=0.0) > 1e-6 * (1.0 + np.abs(rhs).max(initial=0.0)):
            return False
        x[basis] = xb
        self.basis = basis
        self.binv = binv
        self.status = status
        self.status[basis] = _BASIC
        self.x = x
        self.in_basis = ~nb_mask
        self.art_cols = []
        self.art_rows = []
        return True

    def solve(self, max_iter=50000, warm=None):
        warmed = False
        if warm is not None:
            warmed = self._try_warm(warm)
        if not warmed:
            self._setup()
        n, m = self.n_struct, self.m
        iters_total = 0
        if self.art_cols:
            c1 = np.zeros(self.A.shape[1])
            c1[self.art_cols] = 1.0
            st, _, it1 = self._run(c1, max_iter)
            iters_total += it1
            if st == ITERATION_LIMIT:
                return LpSolution(ITERATION_LIMIT, iterations=iters_total,
                                  message="phase 1 iteration limit")
            self._refactorize()
            art_val = float(np.sum(self.x[self.art_cols]))
            if art_val > self.tol * (1.0 + np.abs(self.b).max(initial=0.0)):
                bad = [self.row_names[r] for r, j in zip(self.art_rows, self.art_cols)
                       if self.x[j] > self.tol]
                y = c1[self.basis] @ self.binv
                sol = LpSolution(INFEASIBLE, iterations=iters_total,
                                 infeasible_rows=bad, message="phase 1 positive")
                sol.duals = self.sense_sign * np.asarray(y)
                return sol
            # freeze artificials at zero
            self.up[self.art_cols] = 0.0
            self.lo[self.art_cols] = 0.0
            self.x[self.art_cols] = np.where(self.in_basis[self.art_cols], self.x[self.art_cols], 0.0)
        for attempt in range(6):
            st, ray, it2 = self._run(self.c, max_iter)
            iters_total += it2
            if st == ITERATION_LIMIT:
                return LpSolution(ITERATION_LIMIT, iterations=iters_total,
                                  message="phase 2 iteration limit")
            if st == UNBOUNDED:
                sol = LpSolution(UNBOUNDED, iterations=iters_total)
                sol.ray = ray[:n]
                return sol
            # verify the claimed optimum against a fresh factorization;
            # resume pivoting if stale pricing hid an improving column
            self._refactorize()
            self._recompute_basics()
            if not self._optimal_verified():
                continue
            y = self.c[self.basis] @ self.binv if m else np.zeros(0)
            d = self.c[:n] - (y @ self.A[:, :n] if m else 0.0)
            x = self.x[:n].copy()
            obj = float(self.c[:n] @ x) * self.sense_sign
            sol = LpSolution(OPTIMAL, objective=obj, x=x,
                             duals=self.sense_sign * np.asarray(y),
                             reduced_costs=self.sense_sign * np.asarray(d),
                             iterations=iters_total)
            n_plain = self.n_struct + self.m
            if np.all(self.basis < n_plain):
                sol.basis = (self.basis.copy(), self.status[:n_plain].copy())
            return sol
        return LpSolution(ITERATION_LIMIT, iterations=iters_total,
                          message="optimality could not be certified")

    def _optimal_verified(self):
        if self.m == 0:
            return True
        lo_b, up_b = self.lo[self.basis], self.up[self.basis]
        xb = self.x[self.basis]
        scale = 1.0 + np.abs(xb).max(initial=0.0)
        if np.any(xb < lo_b - 1e-6 * scale) or np.any(xb > up_b + 1e-6 * scale):
            return False
        y = self.c[self.basis] @ self.binv
        d = self.c - y @ self.A
        nb = ~self.in_basis
        movable = nb & (self.lo != self.up)
        tol = 10.0 * self.tol * (1.0 + np.abs(self.c).max(initial=0.0))
        bad = ((movable & (self.status == _AT_LOWER) & (d < -tol))
               | (movable & (self.status == _AT_UPPER) & (d > tol))
               | (movable & (self.status == _FREE_ZERO) & (np.abs(d) > tol)))
        return not np.any(bad)


def solve_lp(prob: LpProblem, tol=1e-7, max_iter=50000, warm=None) -> LpSolution:
    """Solve an LP; statuses are `optimal`, `infeasible`, `unbounded` or
    `iteration_limit` (never a silently wrong optimum).  `warm` takes a
    previous solution's `basis`; it is used only if still primal feasible
    (always true when just the objective changed)."""
    return _Simplex(prob, tol=tol).solve(max_iter=max_iter, warm=warm)


def _clone_with_bounds(prob: LpProblem, lo, up):
    q = LpProblem(name=prob.name, maximize=prob.maximize,
                  col_names=prob.col_names, col_lower=list(lo), col_upper=list(up),
                  objective=prob.objective, integer=prob.integer,
                  row_names=prob.row_names, row_cols=prob.row_cols,
                  row_coefs=prob.row_coefs, row_senses=prob.row_senses,
                  row_rhs=prob.row_rhs)
    return q


def solve_milp(prob: LpProblem, pool_size=1, rel_gap=1e-6, node_limit=50000,
               int_tol=1e-6, tol=1e-7, branch_priority=None,
               rounding_heuristic=True) -> MilpSolution:
    """Branch and bound over the integer-masked columns.

    Best-bound node selection with an initial depth-first plunge (and a
    round-up heuristic at the root) to find an incumbent early.  Branching
    picks the highest `branch_priority` fractional column, then the most
    fractional.  Keeps up to `pool_size` distinct integral solutions
    encountered, best first.
    """
    int_cols = np.nonzero(np.asarray(prob.integer, dtype=bool))[0]
    for j in int_cols:
        if not (np.isfinite(prob.col_lower[j]) and np.isfinite(prob.col_upper[j])):
            raise LpError(f"integer column {prob.col_names[j]} must be bounded")
    better = (lambda a, b: a > b) if prob.maximize else (lambda a, b: a < b)
    worse_inf = -np.inf if prob.maximize else np.inf
    prio = np.zeros(prob.ncols) if branch_priority is None \
        else np.asarray(branch_priority, dtype=float)

    import heapq

    root_lo = np.asarray(prob.col_lower, dtype=float)
    root_up = np.asarray(prob.col_upper, dtype=float)
    root = solve_lp(_clone_with_bounds(prob, root_lo, root_up), tol=tol)
    nodes = 1
    if root.status in (INFEASIBLE, UNBOUNDED):
        return MilpSolution(root.status, best_bound=worse_inf, nodes=nodes)
    if root.status != OPTIMAL:
        return MilpSolution(root.status, nodes=nodes)

    obj_vec = np.asarray(prob.objective)
    pool = {}  # integer assignment -> (obj, x)

    def pool_sorted():
        items = sorted(pool.values(), key=lambda t: (t[0] if not prob.maximize else -t[0],
                                                     t[1].tobytes()))
        return items[:pool_size]

    def try_incumbent(x):
        xi = x.copy()
        if int_cols.size:
            xi[int_cols] = np.round(xi[int_cols])
        key = tuple(int(v) for v in xi[int_cols])
        obj = float(obj_vec @ xi)
        if key not in pool or better(obj, pool[key][0]):
            pool[key] = (obj, xi)

    def best_incumbent():
        if not pool:
            return worse_inf
        return pool_sorted()[0][0]

    def frac_col(sol):
        if int_cols.size == 0:
            return -1, 0.0
        vals = sol.x[int_cols]
        fr = np.abs(vals - np.round(vals))
        mask = fr > int_tol
        if not np.any(mask):
            return -1, 0.0
        cand = np.nonzero(mask)[0]
        scores = np.column_stack([prio[int_cols[cand]], fr[cand]])
        k = cand[int(np.lexsort((cand, -scores[:, 1], -scores[:, 0]))[0])]
        return int(int_cols[k]), float(fr[k])

    def cutoff():
        inc = best_incumbent()
        if not np.isfinite(inc):
            return inc
        slack = max(rel_gap * abs(inc), 1e-12)
        return inc - slack if not prob.maximize else inc + slack

    def prune(bound):
        co = cutoff()
        if not np.isfinite(co):
            return False
        return not better(bound, co)

    # root heuristic: fix rounded-up integers, solve the continuous rest
    if rounding_heuristic and int_cols.size and root.x is not None \
            and frac_col(root)[0] >= 0:
        guess = root.x[int_cols]
        for rounded in (np.where(guess > int_tol, np.ceil(guess - int_tol),
                                 0.0),
                        np.round(guess)):
            lo2, up2 = root_lo.copy(), root_up.copy()
            lo2[int_cols] = np.maximum(root_lo[int_cols], rounded)
            up2[int_cols] = np.minimum(root_up[int_cols], rounded)
            if np.any(lo2 > up2 + 1e-12):
                continue
            trial = solve_lp(_clone_with_bounds(prob, lo2, up2), tol=tol)
            nodes += 1
            if trial.status == OPTIMAL:
                try_incumbent(trial.x)
                break

    heap = []
    seq = 0

    def push(sol_, lo_, up_, depth):
        nonlocal seq
        kb = sol_.objective if not prob.maximize else -sol_.objective
        heapq.heappush(heap, (kb, seq, lo_, up_, sol_, depth))
        seq += 1

    j0, _ = frac_col(root)
    if j0 < 0:
        try_incumbent(root.x)
        if pool_size <= 1 or int_cols.size == 0:
            return MilpSolution(OPTIMAL, pool=pool_sorted(), best_bound=root.objective,
                                nodes=nodes)
    push(root, root_lo, root_up, 0)
    best_bound = root.objective

    def branch(sol_, lo_, up_, depth, dive):
        """Solve both children; push the worse, return the better for diving."""
        nonlocal nodes
        j, _ = frac_col(sol_)
        floor_v = np.floor(sol_.x[j] + int_tol)
        children = []
        for lo_j, up_j in ((lo_[j], floor_v), (floor_v + 1.0, up_[j])):
            if lo_j > up_j + 1e-9:
                continue
            lo2, up2 = lo_.copy(), up_.copy()
            lo2[j], up2[j] = lo_j, up_j
            child = solve_lp(_clone_with_bounds(prob, lo2, up2), tol=tol)
            nodes += 1
            if child.status != OPTIMAL or prune(child.objective):
                continue
            if frac_col(child)[0] < 0:
                try_incumbent(child.x)
                continue
            children.append((child, lo2, up2))
        if not children:
            return None
        children.sort(key=lambda c: c[0].objective if not prob.maximize else -c[0].objective)
        if dive and len(children) == 2:
            push(children[1][0], children[1][1], children[1][2], depth + 1)
            return children[0]
        for c in children:
            push(c[0], c[1], c[2], depth + 1)
        return None

    dive_budget = 4 * max(1, int_cols.size)
    while heap:
        if nodes >= node_limit:
            items = pool_sorted()
            return MilpSolution(NODE_LIMIT if items else ITERATION_LIMIT,
                                pool=items, best_bound=best_bound, nodes=nodes)
        kb, _, lo, up, sol, depth = heapq.heappop(heap)
        best_bound = kb if not prob.maximize else -kb
        if prune(best_bound):
            break
        # plunge while no incumbent exists (or still cheap)
        node = (sol, lo, up)
        d = depth
        while node is not None:
            want_dive = (not pool) and d - depth < dive_budget
            node = branch(node[0], node[1], node[2], d, dive=want_dive)
            if not want_dive:
                break
            d += 1

    items = pool_sorted()
    if not items:
        return MilpSolution(INFEASIBLE, best_bound=best_bound, nodes=nodes)
    best = items[0][0]
    slack = max(rel_gap * abs(best), 1e-9)
    items = [it for it in items if abs(it[0] - best) <= slack]
    return MilpSolution(OPTIMAL, pool=items, best_bound=best, nodes=nodes)


def write_lp_text(prob: LpProblem, path):
    """Dump the model in CPLEX LP text format, keeping row names."""
    lines = ["\\ " + prob.name, "Maximize" if prob.maximize else "Minimize"]
    terms = [f"{c:+.12g} {prob.col_names[j]}" for j, c in enumerate(prob.objective) if c != 0.0]
    lines.append(" obj: " + (" ".join(terms) if terms else "0 " + prob.col_names[0]))
    lines.append("Subject To")
    op = {"L": "<=", "G": ">=", "E": "="}
    for i in range(prob.nrows):
        t = " ".join(f"{c:+.12g} {prob.col_names[j]}"
                     for j, c in zip(prob.row_cols[i], prob.row_coefs[i]))
        lines.append(f" {prob.row_names[i]}: {t} {op[prob.row_senses[i]]} {prob.row_rhs[i]:.12g}")
    lines.append("Bounds")
    for j in range(prob.ncols):
        lo, up = prob.col_lower[j], prob.col_upper[j]
        lo_s = "-inf" if np.isneginf(lo) else f"{lo:.12g}"
        up_s = "+inf" if np.isposinf(up) else f"{up:.12g}"
        lines.append(f" {lo_s} <= {prob.col_names[j]} <= {up_s}")
    ints = [prob.col_names[j] for j in range(prob.ncols) if prob.integer[j]]
    if ints:
        lines.append("General")
        lines.append(" " + " ".join(ints))
    lines.append("End")
    text = "\n".join(lines) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
    return text

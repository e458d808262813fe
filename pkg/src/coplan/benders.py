"""Accelerated Benders dual decomposition.

The master holds every binary decision (builds, bundlings, commitment,
charge states) plus the value variable bounded below by the binary-only
cost; sub-problems are solved in dual form, so optimality and feasibility
cuts read directly off the dual solution:

    master:   min Z  s.t.  Z >= invest'Y,  precedence,  cuts
    dual sub: max  F'sigma + M'lambda + N'mu + Ybar'pi   s.t. (transposed
              blocks per primal family; mu >= 0)

A bounded dual gives an optimality cut tight at its generator; an
unbounded one is turned into a feasibility cut through the homogeneous
modified sub-problem (box sigma <= 1, pi <= 1).  Acceleration: a solution
pool of near-optimal master assignments (multi-cut), and Pareto-optimal
cuts from a core-point re-solve restricted to the dual optimal face.

Contingency scenarios act as feasibility screens: their bounded duals
carry no information about the intact-network cost, so only the intact
scenario generates optimality cuts and the upper bound (a bounded outage
scenario simply certifies the candidate plan survives it).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .contingency import ContingencyScenario, eligible_outages, plan_from_binaries, screen
from .lp import LpError, LpProblem, solve_lp, solve_milp
from .milp_core import (
    BRANCH_PRIORITY,
    CompactForm,
    ModelOptions,
    PlanDecision,
    PlanSolution,
    build_model,
    compact_form,
    cost_breakdown,
)


class BendersError(Exception):
    pass


@dataclass
class Cut:
    kind: str                 # "optimality" | "feasibility"
    coef: np.ndarray          # copy-dual coefficients over master binaries
    const: float              # rhs'duals constant part
    scenario: tuple
    iteration: int
    member: int

    def rhs_at(self, ybin, invest):
        """Optimality: lower bound on total cost at `ybin`; feasibility:
        the expression that must be <= 0."""
        if self.kind == "optimality":
            return float(invest @ ybin + self.const + self.coef @ ybin)
        return float(self.const + self.coef @ ybin)


@dataclass
class DspSolve:
    status: str               # "bounded" | "unbounded"
    value: float = np.nan
    balance_duals: np.ndarray | None = None     # sigma
    link_duals: np.ndarray | None = None        # lambda
    ineq_duals: np.ndarray | None = None        # mu
    copy_duals: np.ndarray | None = None        # pi
    ray: dict | None = None
    primal_value: float = np.nan                # audit companion

    def cut_constant(self, cf: CompactForm):
        return float(cf.rhs["balance"] @ self.balance_duals
                     + cf.rhs["linking"] @ self.link_duals
                     + cf.rhs["inequality"] @ self.ineq_duals)


class DualSubproblem:
    """Explicit dual LP of one scenario's operation sub-problem."""

    def __init__(self, cf: CompactForm):
        self.cf = cf
        model = cf.model
        prob = model.problem
        nb = len(cf.blocks["balance"])
        nl = len(cf.blocks["linking"])
        ni = len(cf.blocks["inequality"])
        ybin = model.vindex.binary_cols()
        self.ybin = ybin
        npi = len(ybin)
        self.sizes = (nb, nl, ni, npi)
        self.off_sigma, self.off_lam = 0, nb
        self.off_mu, self.off_pi = nb + nl, nb + nl + ni

        dsp = LpProblem(name=f"dsp-{model.problem.name}", maximize=True)
        for k in range(nb):
            dsp.add_col(f"sigma{k}", -np.inf, np.inf, obj=float(cf.rhs["balance"][k]))
        for k in range(nl):
            dsp.add_col(f"lam{k}", -np.inf, np.inf, obj=float(cf.rhs["linking"][k]))
        for k in range(ni):
            dsp.add_col(f"mu{k}", 0.0, np.inf, obj=float(cf.rhs["inequality"][k]))
        for k in range(npi):
            dsp.add_col(f"pi{k}", -np.inf, np.inf, obj=0.0)

        # transpose the three blocks into per-primal-column rows
        percol = [[] for _ in range(prob.ncols)]
        for off, block in ((self.off_sigma, "balance"), (self.off_lam, "linking"),
                           (self.off_mu, "inequality")):
            for k, i in enumerate(cf.blocks[block]):
                dv = off + k
                for j, a in zip(prob.row_cols[i], prob.row_coefs[i]):
                    percol[int(j)].append((dv, float(a)))
        ypos = {int(c): k for k, c in enumerate(ybin)}
        obj = np.asarray(prob.objective, dtype=float)
        for j in range(prob.ncols):
            group = cf.col_group[j]
            cols = [dv for dv, _ in percol[j]]
            coefs = [a for _, a in percol[j]]
            name = f"d_{model.vindex.name_of(j)}"
            if group == "Y":
                cols = cols + [self.off_pi + ypos[j]]
                coefs = coefs + [1.0]
                dsp.add_row(name, cols, coefs, "L", 0.0)
            elif group == "Q":
                dsp.add_row(name, cols, coefs, "E", 0.0)
            else:
                dsp.add_row(name, cols, coefs, "L", float(obj[j]))
        self.problem = dsp
        self._mdsp = None
        self._warm = None
        self._warm_mdsp = None

    def _split(self, x):
        nb, nl, ni, npi = self.sizes
        return (x[:nb], x[nb:nb + nl], x[nb + nl:nb + nl + ni], x[nb + nl + ni:])

    @staticmethod
    def _robust_solve(prob, warm):
        """Warm-started solve; anything but a clean optimum is re-solved
        cold (unboundedness certificates always come from a cold start)."""
        if warm is not None:
            try:
                sol = solve_lp(prob, warm=warm)
                if sol.status == "optimal":
                    return sol
            except LpError:
                pass
        return solve_lp(prob)

    def solve(self, ybin_values) -> DspSolve:
        nb, nl, ni, npi = self.sizes
        for k in range(npi):
            self.problem.objective[self.off_pi + k] = float(ybin_values[k])
        sol = self._robust_solve(self.problem, self._warm)
        if sol.basis is not None:
            self._warm = sol.basis
        if sol.status == "unbounded":
            s, l, m, p = self._split(sol.ray)
            return DspSolve(status="unbounded",
                            ray={"balance": s, "linking": l, "inequality": m, "copy": p})
        if sol.status != "optimal":
            raise BendersError(f"dual sub-problem solve failed: {sol.status} ({sol.message})")
        s, l, m, p = self._split(sol.x)
        return DspSolve(status="bounded", value=float(sol.objective),
                        balance_duals=s, link_duals=l, ineq_duals=m, copy_duals=p)

    # -- modified (homogeneous) variant for feasibility cuts ---------------

    def solve_modified(self, ybin_values) -> DspSolve:
        """Homogeneous dual with the normalization box sigma <= 1, pi <= 1;
        its positive-value solution is the feasibility-cut generator."""
        if self._mdsp is None:
            p = self.problem
            m = LpProblem(name=p.name + "-modified", maximize=True,
                          col_names=list(p.col_names), col_lower=list(p.col_lower),
                          col_upper=list(p.col_upper), objective=list(p.objective),
                          integer=list(p.integer), row_names=list(p.row_names),
                          row_cols=p.row_cols, row_coefs=p.row_coefs,
                          row_senses=list(p.row_senses),
                          row_rhs=[0.0] * p.nrows)
            nb, nl, ni, npi = self.sizes
            for k in range(nb):
                m.col_upper[self.off_sigma + k] = 1.0
            for k in range(npi):
                m.col_upper[self.off_pi + k] = 1.0
            self._mdsp = m
        nb, nl, ni, npi = self.sizes
        for k in range(npi):
            self._mdsp.objective[self.off_pi + k] = float(ybin_values[k])
        sol = solve_lp(self._mdsp)
        if sol.status == "unbounded":
            # the improving ray lives in the same cone; use it directly
            s, l, m, p = self._split(sol.ray)
            return DspSolve(status="bounded", value=np.inf, balance_duals=s,
                            link_duals=l, ineq_duals=m, copy_duals=p)
        if sol.status != "optimal":
            raise BendersError(f"modified dual solve failed: {sol.status}")
        s, l, m, p = self._split(sol.x)
        return DspSolve(status="bounded", value=float(sol.objective),
                        balance_duals=s, link_duals=l, ineq_duals=m, copy_duals=p)

    # -- Pareto-optimal cut (core-point re-solve) ---------------------------

    def solve_core(self, ybin_values, core_point, dsp_value) -> DspSolve:
        """Maximize the core-point objective over the dual optimal face at
        `ybin_values` (the face pinned by the generator's objective value)."""
        p = self.problem
        nb, nl, ni, npi = self.sizes
        face_cols = list(range(nb + nl + ni + npi))
        face_coefs = ([float(v) for v in self.cf.rhs["balance"]]
                      + [float(v) for v in self.cf.rhs["linking"]]
                      + [float(v) for v in self.cf.rhs["inequality"]]
                      + [float(v) for v in ybin_values])
        for band in (None, 1e-6 * (1.0 + abs(dsp_value))):
            nd = LpProblem(name=p.name + "-core", maximize=True,
                           col_names=list(p.col_names), col_lower=list(p.col_lower),
                           col_upper=list(p.col_upper), objective=list(p.objective),
                           integer=list(p.integer), row_names=list(p.row_names),
                           row_cols=list(p.row_cols), row_coefs=list(p.row_coefs),
                           row_senses=list(p.row_senses), row_rhs=list(p.row_rhs))
            for k in range(npi):
                nd.objective[self.off_pi + k] = float(core_point[k])
            if band is None:
                nd.add_row("optimal_face", face_cols, face_coefs, "E", dsp_value)
            else:
                nd.add_row("optimal_face_lo", face_cols, face_coefs, "G", dsp_value - band)
                nd.add_row("optimal_face_hi", face_cols, face_coefs, "L", dsp_value + band)
            sol = solve_lp(nd)
            if sol.status == "optimal":
                s, l, m, pi = self._split(sol.x[:nb + nl + ni + npi])
                return DspSolve(status="bounded", value=float(sol.objective),
                                balance_duals=s, link_duals=l, ineq_duals=m,
                                copy_duals=pi)
            if sol.status == "unbounded":
                return None  # degenerate optimal face: caller keeps the plain cut
        raise BendersError("core-point re-solve infeasible even with relaxed face")


def solve_primal_subproblem(cf: CompactForm, ybin_values):
    """Primal operation LP at fixed binaries (strong-duality companion and
    final-plan recovery)."""
    model = cf.model
    p = model.problem
    ybin = model.vindex.binary_cols()
    obj = list(p.objective)
    lo = list(p.col_lower)
    up = list(p.col_upper)
    for k, j in enumerate(ybin):
        obj[j] = 0.0
        lo[j] = float(ybin_values[k])
        up[j] = float(ybin_values[k])
    keep = np.concatenate([cf.blocks["balance"], cf.blocks["linking"],
                           cf.blocks["inequality"]])
    sp = LpProblem(name=p.name + "-sp", maximize=False, col_names=list(p.col_names),
                   col_lower=lo, col_upper=up, objective=obj,
                   integer=[False] * p.ncols,
                   row_names=[p.row_names[i] for i in keep],
                   row_cols=[p.row_cols[i] for i in keep],
                   row_coefs=[p.row_coefs[i] for i in keep],
                   row_senses=[p.row_senses[i] for i in keep],
                   row_rhs=[p.row_rhs[i] for i in keep])
    return solve_lp(sp)


class MasterProblem:
    """Binary investment/commitment master with accumulated cuts."""

    def __init__(self, cf: CompactForm):
        model = cf.model
        self.vindex = model.vindex
        self.ybin = model.vindex.binary_cols()
        obj = np.asarray(model.problem.objective, dtype=float)
        self.invest = obj[self.ybin]          # binary-only cost vector
        self.cuts: list[Cut] = []
        p = model.problem
        self._precedence = [(p.row_names[i], p.row_cols[i], p.row_coefs[i],
                             p.row_rhs[i]) for i in cf.blocks["precedence"]]
        self._ypos = {int(c): k for k, c in enumerate(self.ybin)}
        self._prio = np.array([0.0] + [BRANCH_PRIORITY.get(model.vindex.col_family[j], 0.0)
                                       for j in self.ybin])

    def add_cut(self, cut: Cut):
        self.cuts.append(cut)

    def _build(self, exclusions):
        mp = LpProblem(name="master")
        mp.add_col("total_cost", -np.inf, np.inf, obj=1.0)
        for k, j in enumerate(self.ybin):
            mp.add_col(f"y{k}", 0.0, 1.0, obj=0.0, is_integer=True)
        mp.add_row("invest_floor", [0] + [1 + k for k in range(len(self.ybin))],
                   [1.0] + list(-self.invest), "G", 0.0)
        for name, cols, coefs, rhs in self._precedence:
            mp.add_row(name, [1 + self._ypos[int(j)] for j in cols], coefs, "G", rhs)
        for k, cut in enumerate(self.cuts):
            if cut.kind == "optimality":
                cols = [0] + [1 + i for i in range(len(self.ybin))]
                coefs = [1.0] + list(-(self.invest + cut.coef))
                mp.add_row(f"cut_opt{k}", cols, coefs, "G", cut.const)
            else:
                cols = [1 + i for i in range(len(self.ybin))]
                mp.add_row(f"cut_feas{k}", cols, list(-cut.coef), "G", cut.const)
        for e, yvec in enumerate(exclusions):
            cols = [1 + i for i in range(len(self.ybin))]
            coefs = [(-1.0 if v > 0.5 else 1.0) for v in yvec]
            rhs = 1.0 - float(np.sum(yvec > 0.5))
            mp.add_row(f"exclude{e}", cols, coefs, "G", rhs)
        return mp

    def solve(self, pool_size=1, rel_gap=1e-9, node_limit=100000):
        """Optimal assignment plus up to pool_size-1 next-best distinct
        assignments found by re-solving under no-good exclusions."""
        members = []
        exclusions = []
        for _ in range(max(1, pool_size)):
            mp = self._build(exclusions)
            sol = solve_milp(mp, pool_size=1, rel_gap=rel_gap, node_limit=node_limit,
                             branch_priority=self._prio)
            if sol.status != "optimal":
                if not members:
                    raise BendersError(f"master problem {sol.status}: cut audit "
                                       f"({len(self.cuts)} cuts)")
                break
            y = np.round(sol.x[1:]).astype(float)
            members.append((y, float(sol.objective)))
            exclusions.append(y)
        return members[0][1], members


def solve_master(master: MasterProblem, pool_size=1):
    """(lower bound, solution pool); the bound is the first member's value."""
    lb, members = master.solve(pool_size=pool_size)
    return lb, members


@dataclass
class IterationRecord:
    iteration: int
    lower_bound: float
    upper_bound: float
    gap: float
    cuts_optimality: int
    cuts_feasibility: int
    seconds: float


@dataclass
class DualityAudit:
    scenario: tuple
    dual_value: float
    primal_value: float

    @property
    def error(self):
        return abs(self.dual_value - self.primal_value) / (1.0 + abs(self.primal_value))


@dataclass
class BddOptions:
    tolerance: float = 1e-4
    pool_size: int = 5
    use_pareto_cuts: bool = True
    n1_enabled: bool = False
    screening_enabled: bool = True
    screening_threshold: float = 0.2
    rescreen_every_iteration: bool = True
    max_iterations: int = 200
    audit_duality: bool = True
    model: ModelOptions = field(default_factory=ModelOptions)


@dataclass
class BddResult:
    status: str                       # "converged" | "iteration_limit"
    objective: float
    lower_bound: float
    upper_bound: float
    gap: float
    plan: PlanSolution | None
    trace: list
    cuts: list
    iterations: int
    audits: list
    scenarios_final: list

    def best_gap(self):
        return self.gap


def _gap(ub, lb):
    if not np.isfinite(ub):
        return np.inf
    if ub == lb:
        return 0.0
    return (ub - lb) / max(abs(ub), 1e-12)


class _ScenarioPool:
    """Scenario models, compact forms and dual sub-problems, built lazily."""

    def __init__(self, sys, reps, options: ModelOptions):
        self.sys, self.reps, self.options = sys, reps, options
        self._store = {}

    def get(self, scenario: ContingencyScenario):
        key = scenario.key
        if key not in self._store:
            model = build_model(self.sys, self.reps, scenario, self.options)
            cf = compact_form(model)
            self._store[key] = (cf, DualSubproblem(cf))
        return self._store[key]


def run_bdd(sys, reps, options: BddOptions | None = None) -> BddResult:
    """Full decomposition loop: screen, dual solves, cuts, master, repeat
    until (UB - LB)/UB falls below the tolerance."""
    opt = options or BddOptions()
    pool_builder = _ScenarioPool(sys, reps, opt.model)
    cf0, _ = pool_builder.get(ContingencyScenario.none())
    master = MasterProblem(cf0)
    invest = master.invest
    nbin = len(master.ybin)
    core = np.full(nbin, 0.5)
    trace = []
    audits = []
    dsp_cache = {}
    cut_done = set()   # (scenario key, assignment bytes) already in the master
    cuts_opt = cuts_feas = 0
    ub = np.inf
    best_y = None
    scenarios = [ContingencyScenario.none()]
    frozen_scenarios = None

    lb, pool = master.solve(pool_size=opt.pool_size)
    status = "iteration_limit"
    it = 0
    for it in range(1, opt.max_iterations + 1):
        t0 = time.time()
        core = 0.5 * core + 0.5 * pool[0][0]
        if opt.n1_enabled:
            plan0 = plan_from_binaries(cf0.model.vindex, pool[0][0])
            if opt.screening_enabled:
                if frozen_scenarios is not None and not opt.rescreen_every_iteration:
                    scenarios = frozen_scenarios
                else:
                    result = screen(sys, reps, plan0, opt.screening_threshold, opt.model)
                    scenarios = result.scenarios()
                    frozen_scenarios = scenarios
            else:
                scenarios = [ContingencyScenario.none()] + eligible_outages(sys, plan0)
        for member, (y, _zlow) in enumerate(pool):
            unbounded_seen = False
            base_value = None
            ykey = y.tobytes()
            for scen in scenarios:
                cf, dsp = pool_builder.get(scen)
                ck = (scen.key, ykey)
                if ck in dsp_cache:
                    res = dsp_cache[ck]
                else:
                    res = dsp.solve(y)
                    if res.status == "bounded" and opt.audit_duality:
                        psol = solve_primal_subproblem(cf, y)
                        res.primal_value = (float(psol.objective)
                                            if psol.status == "optimal" else np.nan)
                        audits.append(DualityAudit(scen.key, res.value, res.primal_value))
                    dsp_cache[ck] = res
                if res.status == "unbounded":
                    unbounded_seen = True
                    if ck not in cut_done:
                        cut_done.add(ck)
                        fres = dsp.solve_modified(y)
                        if np.isfinite(fres.value) and fres.value <= 1e-9:
                            raise BendersError(
                                "modified dual returned a non-positive value for an "
                                "unbounded scenario: inconsistent certificates")
                        cut = Cut(kind="feasibility", coef=fres.copy_duals.copy(),
                                  const=fres.cut_constant(cf), scenario=scen.key,
                                  iteration=it, member=member)
                        master.add_cut(cut)
                        cuts_feas += 1
                elif scen.kind == "none":
                    base_value = res
            if unbounded_seen or base_value is None:
                continue
            cand = float(invest @ y) + base_value.value
            if cand < ub - 1e-12:
                ub = cand
                best_y = y.copy()
            ck0 = (("none", None, None, "cut"), ykey)
            if ck0 in cut_done:
                continue
            cut_done.add(ck0)
            cf, dsp = pool_builder.get(ContingencyScenario.none())
            gen = base_value
            if opt.use_pareto_cuts:
                poc = dsp.solve_core(y, core, base_value.value)
                if poc is not None:
                    gen = poc
            cut = Cut(kind="optimality", coef=gen.copy_duals.copy(),
                      const=gen.cut_constant(cf), scenario=("none", None, None),
                      iteration=it, member=member)
            master.add_cut(cut)
            cuts_opt += 1
        lb, pool = master.solve(pool_size=opt.pool_size)
        gap = _gap(ub, lb)
        trace.append(IterationRecord(it, lb, ub, gap, cuts_opt, cuts_feas,
                                     time.time() - t0))
        if gap <= opt.tolerance:
            status = "converged"
            break

    plan_solution = None
    if best_y is not None:
        psol = solve_primal_subproblem(cf0, best_y)
        if psol.status == "optimal":
            model0 = cf0.model
            x = psol.x.copy()
            tic, toc = cost_breakdown(model0, x)
            plan_solution = PlanSolution(
                status="optimal",
                objective=float(invest @ best_y) + float(psol.objective),
                tic=tic, toc=toc,
                plan=PlanDecision.from_solution(model0.vindex, x), x=x, model=model0)
    final_gap = _gap(ub, lb)
    return BddResult(status=status, objective=ub, lower_bound=lb, upper_bound=ub,
                     gap=final_gap, plan=plan_solution, trace=trace, cuts=master.cuts,
                     iterations=it, audits=audits, scenarios_final=scenarios)


def write_trace_csv(path, trace):
    """`iter,LB,UB,gap,cuts_opt,cuts_feas,seconds` per iteration."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "LB", "UB", "gap", "cuts_opt", "cuts_feas", "seconds"])
        for r in trace:
            w.writerow([r.iteration, f"{r.lower_bound:.9g}", f"{r.upper_bound:.9g}",
                        f"{r.gap:.6g}", r.cuts_optimality, r.cuts_feasibility,
                        f"{r.seconds:.3f}"])

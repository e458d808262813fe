"""The co-planning MILP: objective, constraints, compact partition and
fixed-plan evaluation.

The model decides, per two-year stage: which candidate circuits to build
(binary, with corridor ordering), which existing lines to bundle and with
how many conductors per phase (binary, at most one option per line),
thermal commitment and storage charge state (binary), and the continuous
storage power/energy, wind capacity and hourly dispatch.  Cost is
discounted investment (annualized through the capital recovery factor,
charged each stage an asset is in service) plus representative-hour
weighted operation cost (piecewise-linear generation, flexible-ramp
reserve priced at the first segment cost, storage degradation, load-shed
and wind-curtailment penalties).

Every constraint row carries a tag naming its family, so the compact
partition used by the decomposition (precedence block over binaries,
nodal balance equalities, linking equalities, and the remaining
inequalities) can be re-derived and audited row-for-row.

All inequality rows are emitted in `>=` form and all costs are in M$.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lp import LpProblem, solve_lp, solve_milp, write_lp_text
from .system_data import SystemData, incidence_matrices

# fraction of expected wind output / of system load that must be covered
# by hourly flexible ramp reserve
RESERVE_WIND_SHARE = 0.05
RESERVE_LOAD_SHARE = 0.03

BINARY_FAMILIES = ("line_build", "bundle_build", "unit_on", "charge_state")
STORAGE_CAP_FAMILIES = ("storage_energy_cap", "storage_power_cap")
WIND_CAP_FAMILIES = ("wind_cap",)
OPERATION_FAMILIES = ("gen_power", "gen_segment", "reserve", "discharge",
                      "charge", "storage_energy", "wind_spill", "load_shed")
FREE_FAMILIES = ("bus_angle", "candidate_flow", "existing_flow")

PRECEDENCE_TAGS = ("candidate_monotone", "candidate_order",
                   "bundling_monotone", "bundle_option_exclusive")
BALANCE_TAGS = ("power_balance",)
LINKING_TAGS = ("gen_cost_link", "storage_energy_balance")


class ModelError(Exception):
    pass


def crf(rate, lifetime_years):
    """Capital recovery factor: annual payment equivalent to one unit of
    present investment over the asset lifetime."""
    if rate <= 0:
        raise ValueError("interest rate must be positive (zero-rate limit is 1/LT)")
    if lifetime_years < 1:
        raise ValueError("lifetime must be at least one year")
    g = (1.0 + rate) ** lifetime_years
    return rate * g / (g - 1.0)


def stage_discount(stage, rate, kind, stage_years=2):
    """Present-value factor of one stage of payments: investment streams
    are valued at the stage start, operation streams at the stage end."""
    if kind not in ("investment", "operation"):
        raise ValueError(f"unknown discount kind {kind!r}")
    offset = 1 if kind == "investment" else 0
    return stage_years / (1.0 + rate) ** (stage_years * stage - offset)


@dataclass
class ModelOptions:
    bundling_enabled: bool = True
    storage_enabled: bool = True
    shed_hourly_fraction: float | None = None   # override of the policy value
    shed_annual_fraction: float | None = None
    shed_unlimited: bool = False                # screening mode: no shed caps
    theta_max_rad: float = 0.6
    literal_annual_factor: bool = False


class VariableIndex:
    """Bijection between (family, key) decision coordinates and dense
    column ids, in a canonical order independent of input declaration."""

    def __init__(self):
        self.families = {}          # family -> {key: col}
        self.col_family = []        # per col
        self.col_key = []
        self.lower = []
        self.upper = []
        self.is_binary = []

    def add(self, family, key, lower=0.0, upper=np.inf, binary=False):
        col = len(self.col_family)
        self.families.setdefault(family, {})[key] = col
        self.col_family.append(family)
        self.col_key.append(key)
        self.lower.append(lower)
        self.upper.append(upper)
        self.is_binary.append(binary)
        return col

    def col(self, family, key):
        return self.families[family][key]

    def cols(self, family):
        return self.families.get(family, {})

    def family_count(self, family):
        return len(self.families.get(family, {}))

    @property
    def ncols(self):
        return len(self.col_family)

    def name_of(self, col):
        key = self.col_key[col]
        ks = ",".join(str(k) for k in key) if isinstance(key, tuple) else str(key)
        return f"{self.col_family[col]}({ks})"

    def binary_cols(self):
        return np.nonzero(np.asarray(self.is_binary, dtype=bool))[0]


@dataclass
class MilpModel:
    problem: LpProblem
    vindex: VariableIndex
    row_tags: list
    sys: SystemData
    scenario: object
    options: ModelOptions
    report_terms: dict = field(default_factory=dict)  # term -> (cols, coefs)

    def tag_rows(self, tag):
        return [i for i, t in enumerate(self.row_tags) if t == tag]

    def dump_lp(self, path):
        return write_lp_text(self.problem, path)


def _scenario_kind(scenario):
    return getattr(scenario, "kind", "none") if scenario is not None else "none"


def _growth(policy, t):
    return (1.0 + policy.load_growth) ** (policy.stage_years * t)


class _Builder:
    def __init__(self, sys: SystemData, reps, options: ModelOptions):
        self.sys = sys
        self.reps = reps
        self.opt = options
        self.pol = sys.policy
        self.T = sys.policy.stages
        self.H = reps.count
        self.lf = np.asarray(reps.load_factors, dtype=float)
        self.wf = np.asarray(reps.wind_factors, dtype=float)
        if options.literal_annual_factor:
            total = float(np.sum(reps.weights))
            self.wgt = 8760.0 * np.asarray(reps.weights, dtype=float) / total
        else:
            self.wgt = np.asarray(reps.weights, dtype=float)
        self.A, self.K, self.Ab = incidence_matrices(sys)
        self.vi = VariableIndex()
        self.prob = LpProblem(name=sys.name)
        self.tags = []
        self.terms = {}
        # bundling candidates that target each existing line (row indices)
        self.targets_of = {}
        if options.bundling_enabled:
            for bi, b in enumerate(sys.bundling_candidates):
                li = sys.existing_index[b.target_existing_line]
                self.targets_of.setdefault(li, []).append(bi)

    # -- columns ------------------------------------------------------------

    def _add_var(self, family, key, lower=0.0, upper=np.inf, binary=False, obj=0.0):
        col = self.vi.add(family, key, lower, upper, binary)
        j = self.prob.add_col(self.vi.name_of(col), lower, upper, obj=obj,
                              is_integer=binary)
        assert j == col
        return col

    def _term(self, name, col, coef):
        cols, coefs = self.terms.setdefault(name, ([], []))
        cols.append(col)
        coefs.append(coef)

    def make_columns(self, scenario):
        sys, pol, opt = self.sys, self.pol, self.opt
        T, H = self.T, self.H
        r = pol.interest_rate
        crf_line = crf(r, pol.lifetimes_years["line"])
        crf_es = crf(r, pol.lifetimes_years["storage"])
        crf_w = crf(r, pol.lifetimes_years["wind"])
        d_inv = [stage_discount(t, r, "investment", pol.stage_years) for t in range(1, T + 1)]
        d_op = [stage_discount(t, r, "operation", pol.stage_years) for t in range(1, T + 1)]
        kind = _scenario_kind(scenario)
        out_existing = sys.existing_index[scenario.line_id] if kind == "existing" else None
        out_candidate = ((sys.candidate_index[scenario.line_id], scenario.corridor)
                         if kind == "candidate" else None)

        for t in range(1, T + 1):
            for li, l in enumerate(sys.candidate_lines):
                per_km = l.invest_cost_musd_per_km + l.row_cost_musd_per_km
                for c in range(l.max_parallel):
                    coef = d_inv[t - 1] * crf_line * per_km * l.length_km
                    if l.is_new_corridor and c == 0:
                        coef += d_inv[t - 1] * crf_line * l.substation_cost_musd
                    col = self._add_var("line_build", (t, li, c), 0.0, 1.0, True, obj=coef)
                    self._term("tic_new_lines", col, coef)
            if opt.bundling_enabled:
                for bi, b in enumerate(sys.bundling_candidates):
                    for n in b.option_names():
                        coef = d_inv[t - 1] * crf_line * b.options[n].cost_musd_per_km * b.length_km
                        col = self._add_var("bundle_build", (t, bi, n), 0.0, 1.0, True, obj=coef)
                        self._term("tic_bundling", col, coef)
            for gi, u in enumerate(sys.thermal_units):
                cg1 = u.segment_costs_musd_per_mwh[0]
                for h in range(H):
                    coef = d_op[t - 1] * self.wgt[h] * cg1 * u.p_min_mw
                    col = self._add_var("unit_on", (t, gi, h), 0.0, 1.0, True, obj=coef)
                    self._term("toc_thermal", col, coef)
            if opt.storage_enabled:
                for si in range(len(sys.storage_candidates)):
                    for h in range(H):
                        self._add_var("charge_state", (t, si, h), 0.0, 1.0, True)
        for t in range(1, T + 1):
            for si, s in enumerate(sys.storage_candidates):
                coef = d_inv[t - 1] * crf_es * s.energy_cost_musd_per_mwh
                if opt.storage_enabled:
                    col = self._add_var("storage_energy_cap", (t, si), obj=coef)
                    self._term("tic_storage", col, coef)
                    coef = d_inv[t - 1] * crf_es * s.power_cost_usd_per_mw * 1e-6
                    col = self._add_var("storage_power_cap", (t, si), obj=coef)
                    self._term("tic_storage", col, coef)
            for wi, w in enumerate(sys.wind_candidates):
                coef = d_inv[t - 1] * crf_w * w.invest_cost_musd_per_mw
                col = self._add_var("wind_cap", (t, wi), obj=coef)
                self._term("tic_wind", col, coef)
        for t in range(1, T + 1):
            for gi, u in enumerate(sys.thermal_units):
                cg = u.segment_costs_musd_per_mwh
                for h in range(H):
                    self._add_var("gen_power", (t, gi, h))
                    for p in range(pol.cost_segments):
                        coef = d_op[t - 1] * self.wgt[h] * cg[p]
                        col = self._add_var("gen_segment", (t, gi, h, p), obj=coef)
                        self._term("toc_thermal", col, coef)
                    coef = d_op[t - 1] * self.wgt[h] * pol.reserve_cost_factor * cg[0]
                    col = self._add_var("reserve", (t, gi, h), obj=coef)
                    self._term("toc_reserve", col, coef)
            if opt.storage_enabled:
                for si, s in enumerate(sys.storage_candidates):
                    dc = s.degradation_cost_usd_per_mwh * 1e-6
                    for h in range(H):
                        coef = d_op[t - 1] * self.wgt[h] * dc
                        col = self._add_var("discharge", (t, si, h), obj=coef)
                        self._term("toc_degradation", col, coef)
                        self._add_var("charge", (t, si, h))
                        self._add_var("storage_energy", (t, si, h))
            for wi, w in enumerate(sys.wind_candidates):
                for h in range(H):
                    coef = d_op[t - 1] * self.wgt[h] * w.curtail_cost_musd_per_mwh
                    col = self._add_var("wind_spill", (t, wi, h), obj=coef)
                    self._term("toc_curtail", col, coef)
            cls = pol.shed_penalty_usd_per_mwh * 1e-6
            for ii in range(len(sys.buses)):
                for h in range(H):
                    coef = d_op[t - 1] * self.wgt[h] * cls
                    col = self._add_var("load_shed", (t, ii, h), obj=coef)
                    self._term("toc_shed", col, coef)
            for ii in range(len(sys.buses)):
                for h in range(H):
                    self._add_var("bus_angle", (t, ii, h), -np.inf, np.inf)
            for li, l in enumerate(sys.candidate_lines):
                for c in range(l.max_parallel):
                    if out_candidate == (li, c):
                        continue
                    for h in range(H):
                        self._add_var("candidate_flow", (t, li, c, h), -np.inf, np.inf)
            for li in range(len(sys.existing_lines)):
                if out_existing == li:
                    continue
                for h in range(H):
                    self._add_var("existing_flow", (t, li, h), -np.inf, np.inf)
        self.out_existing = out_existing
        self.out_candidate = out_candidate

    # -- rows ---------------------------------------------------------------

    def _row(self, tag, key, cols, coefs, sense, rhs):
        ks = ",".join(str(k) for k in key)
        self.prob.add_row(f"{tag}[{ks}]", cols, coefs, sense, rhs)
        self.tags.append(tag)

    def make_rows(self):
        sys, pol, opt, vi = self.sys, self.pol, self.opt, self.vi
        T, H = self.T, self.H
        psi = pol.base_mva
        gamma = pol.max_hourly_shed_fraction if opt.shed_hourly_fraction is None \
            else opt.shed_hourly_fraction
        phi = pol.max_annual_shed_fraction if opt.shed_annual_fraction is None \
            else opt.shed_annual_fraction
        nseg = pol.cost_segments
        total_peak = sys.total_peak_load_mw()

        for t in range(1, T + 1):
            g = _growth(pol, t)
            for gi, u in enumerate(sys.thermal_units):
                for h in range(H):
                    p = vi.col("gen_power", (t, gi, h))
                    i = vi.col("unit_on", (t, gi, h))
                    r = vi.col("reserve", (t, gi, h))
                    self._row("gen_output_min", (t, gi, h), [p, i], [1.0, -u.p_min_mw], "G", 0.0)
                    self._row("gen_output_max", (t, gi, h), [p, i], [-1.0, u.p_max_mw], "G", 0.0)
                    segs = [vi.col("gen_segment", (t, gi, h, k)) for k in range(nseg)]
                    self._row("gen_cost_link", (t, gi, h),
                              [p, i] + segs, [1.0, -u.p_min_mw] + [-1.0] * nseg, "E", 0.0)
                    step = (u.p_max_mw - u.p_min_mw) / nseg
                    for k, sc in enumerate(segs):
                        self._row("gen_segment_cap", (t, gi, h, k), [sc, i], [-1.0, step], "G", 0.0)
                    if h >= 1:
                        pm = vi.col("gen_power", (t, gi, h - 1))
                        self._row("gen_ramp_up", (t, gi, h), [pm, p], [1.0, -1.0], "G", -u.ramp_up_mw)
                        self._row("gen_ramp_down", (t, gi, h), [p, pm], [1.0, -1.0], "G", -u.ramp_down_mw)
                    self._row("reserve_per_unit_cap", (t, gi, h), [p, r], [1.0, -1.0], "G", 0.0)
                    self._row("reserve_headroom", (t, gi, h), [r, p], [-1.0, -1.0], "G", -u.p_max_mw)
            for wi, w in enumerate(sys.wind_candidates):
                pw = vi.col("wind_cap", (t, wi))
                self._row("wind_cap_max", (t, wi), [pw], [-1.0], "G", -w.max_capacity_mw)
                if t >= 2:
                    self._row("wind_monotone", (t, wi),
                              [pw, vi.col("wind_cap", (t - 1, wi))], [1.0, -1.0], "G", 0.0)
                for h in range(H):
                    pc = vi.col("wind_spill", (t, wi, h))
                    self._row("wind_curtail_hourly", (t, wi, h), [pw, pc],
                              [self.wf[h], -1.0], "G", 0.0)
            if sys.wind_candidates:
                pw_cols = [vi.col("wind_cap", (t, wi)) for wi in range(len(sys.wind_candidates))]
                self._row("wind_rps_floor", (t,), pw_cols, [1.0] * len(pw_cols), "G",
                          pol.rps_share * (t / T) * g * total_peak)
                cols, coefs = [], []
                for wi in range(len(sys.wind_candidates)):
                    pw = vi.col("wind_cap", (t, wi))
                    cols.append(pw)
                    coefs.append(pol.max_curtail_fraction * float(np.sum(self.wf)))
                    for h in range(H):
                        cols.append(vi.col("wind_spill", (t, wi, h)))
                        coefs.append(-1.0)
                self._row("wind_curtail_annual", (t,), cols, coefs, "G", 0.0)
            if not opt.shed_unlimited:
                for ii, b in enumerate(sys.buses):
                    for h in range(H):
                        ls = vi.col("load_shed", (t, ii, h))
                        self._row("shed_hourly_cap", (t, ii, h), [ls], [-1.0], "G",
                                  -gamma * g * self.lf[h] * b.peak_load_mw)
                ls_cols = [vi.col("load_shed", (t, ii, h))
                           for ii in range(len(sys.buses)) for h in range(H)]
                annual_cap = phi * g * float(np.sum(self.lf)) * total_peak
                self._row("shed_annual_cap", (t,), ls_cols, [-1.0] * len(ls_cols), "G",
                          -annual_cap)
            for h in range(H):
                cols = [vi.col("reserve", (t, gi, h)) for gi in range(len(sys.thermal_units))]
                coefs = [1.0] * len(cols)
                for wi in range(len(sys.wind_candidates)):
                    cols.append(vi.col("wind_cap", (t, wi)))
                    coefs.append(-RESERVE_WIND_SHARE * self.wf[h])
                self._row("reserve_floor", (t, h), cols, coefs, "G",
                          RESERVE_LOAD_SHARE * g * self.lf[h] * total_peak)
            if opt.storage_enabled:
                for si, s in enumerate(sys.storage_candidates):
                    sc = vi.col("storage_energy_cap", (t, si))
                    cc = vi.col("storage_power_cap", (t, si))
                    for h in range(H):
                        pd = vi.col("discharge", (t, si, h))
                        pc = vi.col("charge", (t, si, h))
                        e = vi.col("storage_energy", (t, si, h))
                        u = vi.col("charge_state", (t, si, h))
                        self._row("storage_charge_cap", (t, si, h), [cc, pc],
                                  [1.0, -s.charge_efficiency], "G", 0.0)
                        self._row("storage_discharge_cap", (t, si, h), [cc, pd],
                                  [1.0, -1.0 / s.discharge_efficiency], "G", 0.0)
                        self._row("storage_charge_state", (t, si, h), [u, pc],
                                  [s.max_power_mw, -s.charge_efficiency], "G", 0.0)
                        self._row("storage_discharge_state", (t, si, h), [u, pd],
                                  [-s.max_power_mw, -1.0 / s.discharge_efficiency], "G",
                                  -s.max_power_mw)
                        cols = [e, pc, pd]
                        coefs = [1.0, -self.wgt[h] * s.charge_efficiency,
                                 self.wgt[h] / s.discharge_efficiency]
                        if h >= 1:
                            cols.append(vi.col("storage_energy", (t, si, h - 1)))
                            coefs.append(-1.0)
                        self._row("storage_energy_balance", (t, si, h), cols, coefs, "E", 0.0)
                        self._row("storage_energy_headroom", (t, si, h), [sc, e],
                                  [1.0, -1.0], "G", 0.0)
                    self._row("storage_power_energy_ratio", (t, si), [sc, cc],
                              [1.0, -s.energy_power_ratio_h], "G", 0.0)
                    self._row("storage_power_limit", (t, si), [cc], [-1.0], "G", -s.max_power_mw)
                    self._row("storage_energy_limit", (t, si), [sc], [-1.0], "G", -s.max_energy_mwh)
                    if t >= 2:
                        self._row("storage_energy_monotone", (t, si),
                                  [sc, vi.col("storage_energy_cap", (t - 1, si))],
                                  [1.0, -1.0], "G", 0.0)
                        self._row("storage_power_monotone", (t, si),
                                  [cc, vi.col("storage_power_cap", (t - 1, si))],
                                  [1.0, -1.0], "G", 0.0)
            # network: existing lines
            for li, l in enumerate(sys.existing_lines):
                if li == self.out_existing:
                    continue
                big_m = psi * l.susceptance_pu * 2.0 * opt.theta_max_rad
                fi = sys.bus_index[l.from_bus]
                ti = sys.bus_index[l.to_bus]
                bundle_cols = []
                uprates = []
                for bi in self.targets_of.get(li, []):
                    b = sys.bundling_candidates[bi]
                    for n in b.option_names():
                        bundle_cols.append(vi.col("bundle_build", (t, bi, n)))
                        uprates.append(b.options[n].uprate_fraction)
                for h in range(H):
                    pe = vi.col("existing_flow", (t, li, h))
                    th_f = vi.col("bus_angle", (t, fi, h))
                    th_t = vi.col("bus_angle", (t, ti, h))
                    flow_coef = psi * l.susceptance_pu
                    slack = [big_m] * len(bundle_cols)
                    self._row("existing_flow_def_hi", (t, li, h),
                              [pe, th_f, th_t] + bundle_cols,
                              [-1.0, flow_coef, -flow_coef] + slack, "G", 0.0)
                    self._row("existing_flow_def_lo", (t, li, h),
                              [pe, th_f, th_t] + bundle_cols,
                              [1.0, -flow_coef, flow_coef] + slack, "G", 0.0)
                    cap = [l.capacity_mw * a for a in uprates]
                    self._row("existing_flow_cap_hi", (t, li, h),
                              [pe] + bundle_cols, [-1.0] + cap, "G", -l.capacity_mw)
                    self._row("existing_flow_cap_lo", (t, li, h),
                              [pe] + bundle_cols, [1.0] + cap, "G", -l.capacity_mw)
            if opt.bundling_enabled:
                for bi, b in enumerate(sys.bundling_candidates):
                    li = sys.existing_index[b.target_existing_line]
                    if li == self.out_existing:
                        continue
                    l = sys.existing_lines[li]
                    big_m = psi * l.susceptance_pu * 2.0 * opt.theta_max_rad
                    fi = sys.bus_index[l.from_bus]
                    ti = sys.bus_index[l.to_bus]
                    for n in b.option_names():
                        up = 1.0 + b.options[n].uprate_fraction
                        yb = vi.col("bundle_build", (t, bi, n))
                        for h in range(H):
                            pe = vi.col("existing_flow", (t, li, h))
                            th_f = vi.col("bus_angle", (t, fi, h))
                            th_t = vi.col("bus_angle", (t, ti, h))
                            fc = up * psi * l.susceptance_pu
                            self._row("bundled_flow_def_hi", (t, bi, n, h),
                                      [pe, th_f, th_t, yb],
                                      [-1.0, fc, -fc, -big_m], "G", -big_m)
                            self._row("bundled_flow_def_lo", (t, bi, n, h),
                                      [pe, th_f, th_t, yb],
                                      [1.0, -fc, fc, -big_m], "G", -big_m)
                    if t >= 2:
                        for n in b.option_names():
                            self._row("bundling_monotone", (t, bi, n),
                                      [vi.col("bundle_build", (t, bi, n)),
                                       vi.col("bundle_build", (t - 1, bi, n))],
                                      [1.0, -1.0], "G", 0.0)
                    opt_cols = [vi.col("bundle_build", (t, bi, n)) for n in b.option_names()]
                    self._row("bundle_option_exclusive", (t, bi), opt_cols,
                              [-1.0] * len(opt_cols), "G", -1.0)
            # network: candidate lines
            for li, l in enumerate(sys.candidate_lines):
                big_m = psi * l.susceptance_pu * 2.0 * opt.theta_max_rad
                fi = sys.bus_index[l.from_bus]
                ti = sys.bus_index[l.to_bus]
                for c in range(l.max_parallel):
                    y = vi.col("line_build", (t, li, c))
                    if (li, c) != self.out_candidate:
                        for h in range(H):
                            pl = vi.col("candidate_flow", (t, li, c, h))
                            th_f = vi.col("bus_angle", (t, fi, h))
                            th_t = vi.col("bus_angle", (t, ti, h))
                            fc = psi * l.susceptance_pu
                            self._row("candidate_flow_def_hi", (t, li, c, h),
                                      [pl, th_f, th_t, y], [-1.0, fc, -fc, -big_m], "G", -big_m)
                            self._row("candidate_flow_def_lo", (t, li, c, h),
                                      [pl, th_f, th_t, y], [1.0, -fc, fc, -big_m], "G", -big_m)
                            self._row("candidate_flow_cap_hi", (t, li, c, h),
                                      [pl, y], [-1.0, l.capacity_mw], "G", 0.0)
                            self._row("candidate_flow_cap_lo", (t, li, c, h),
                                      [pl, y], [1.0, l.capacity_mw], "G", 0.0)
                    if t >= 2:
                        self._row("candidate_monotone", (t, li, c),
                                  [y, vi.col("line_build", (t - 1, li, c))], [1.0, -1.0], "G", 0.0)
                    if c >= 1:
                        self._row("candidate_order", (t, li, c),
                                  [vi.col("line_build", (t, li, c - 1)), y], [1.0, -1.0], "G", 0.0)
            # angle box keeps each big-M finite and valid
            for ii in range(len(sys.buses)):
                for h in range(H):
                    th = vi.col("bus_angle", (t, ii, h))
                    self._row("theta_box_hi", (t, ii, h), [th], [-1.0], "G", -opt.theta_max_rad)
                    self._row("theta_box_lo", (t, ii, h), [th], [1.0], "G", -opt.theta_max_rad)
            # nodal balance
            for ii, b in enumerate(sys.buses):
                for h in range(H):
                    cols, coefs = [], []
                    for gi, u in enumerate(sys.thermal_units):
                        if sys.bus_index[u.bus] == ii:
                            cols.append(vi.col("gen_power", (t, gi, h)))
                            coefs.append(1.0)
                    for wi, w in enumerate(sys.wind_candidates):
                        if sys.bus_index[w.bus] == ii:
                            cols.append(vi.col("wind_cap", (t, wi)))
                            coefs.append(self.wf[h])
                            cols.append(vi.col("wind_spill", (t, wi, h)))
                            coefs.append(-1.0)
                    if opt.storage_enabled:
                        for si, s in enumerate(sys.storage_candidates):
                            if sys.bus_index[s.bus] == ii:
                                cols.append(vi.col("discharge", (t, si, h)))
                                coefs.append(1.0)
                                cols.append(vi.col("charge", (t, si, h)))
                                coefs.append(-1.0)
                    for li in range(len(sys.existing_lines)):
                        if li == self.out_existing or self.A[li, ii] == 0.0:
                            continue
                        cols.append(vi.col("existing_flow", (t, li, h)))
                        coefs.append(-self.A[li, ii])
                    for li, l in enumerate(sys.candidate_lines):
                        if self.K[li, ii] == 0.0:
                            continue
                        for c in range(l.max_parallel):
                            if (li, c) == self.out_candidate:
                                continue
                            cols.append(vi.col("candidate_flow", (t, li, c, h)))
                            coefs.append(-self.K[li, ii])
                    cols.append(vi.col("load_shed", (t, ii, h)))
                    coefs.append(1.0)
                    rhs = _growth(pol, t) * self.lf[h] * b.peak_load_mw
                    self._row("power_balance", (t, ii, h), cols, coefs, "E", rhs)


def build_model(sys: SystemData, reps, scenario=None, options: ModelOptions | None = None) -> MilpModel:
    """Assemble the full MILP for one contingency scenario (None = intact
    network).  The outaged element's flow columns and flow-definition rows
    are omitted entirely."""
    options = options or ModelOptions()
    kind = _scenario_kind(scenario)
    if kind == "existing" and scenario.line_id not in sys.existing_index:
        raise ModelError(f"scenario references unknown existing line {scenario.line_id}")
    if kind == "candidate":
        if scenario.line_id not in sys.candidate_index:
            raise ModelError(f"scenario references unknown candidate line {scenario.line_id}")
        l = sys.candidate_lines[sys.candidate_index[scenario.line_id]]
        if not (0 <= scenario.corridor < l.max_parallel):
            raise ModelError(f"scenario corridor {scenario.corridor} out of range")
    b = _Builder(sys, reps, options)
    b.make_columns(scenario)
    b.make_rows()
    return MilpModel(problem=b.prob, vindex=b.vi, row_tags=b.tags, sys=sys,
                     scenario=scenario, options=options, report_terms=b.terms)


def build_objective(sys, reps, options=None):
    """Objective vector and per-term breakdown of the intact-network model."""
    m = build_model(sys, reps, None, options)
    return np.asarray(m.problem.objective, dtype=float), m.report_terms


def build_constraints(sys, reps, scenario=None, options=None):
    """Constraint rows only (same model as `build_model`)."""
    return build_model(sys, reps, scenario, options)


# ---------------------------------------------------------------------------
# compact partition


@dataclass
class CompactForm:
    """Row/column partition of a built model.

    Column groups: Y (binaries), S (storage capacities), W (wind
    capacities), P (nonnegative operation), Q (free flow/angle).  Row
    blocks: precedence (binary-only ordering rows), balance (nodal
    equalities), linking (the two remaining equality families) and
    inequality (everything else, all in >= form).
    """

    model: MilpModel
    group_cols: dict
    col_group: list
    cost: dict
    blocks: dict
    rhs: dict

    def block_rows(self, name):
        return self.blocks[name]


_GROUP_OF = {}
for fam in BINARY_FAMILIES:
    _GROUP_OF[fam] = "Y"
for fam in STORAGE_CAP_FAMILIES:
    _GROUP_OF[fam] = "S"
for fam in WIND_CAP_FAMILIES:
    _GROUP_OF[fam] = "W"
for fam in OPERATION_FAMILIES:
    _GROUP_OF[fam] = "P"
for fam in FREE_FAMILIES:
    _GROUP_OF[fam] = "Q"


def compact_form(model: MilpModel) -> CompactForm:
    vi = model.vindex
    prob = model.problem
    col_group = [_GROUP_OF[f] for f in vi.col_family]
    group_cols = {g: [] for g in "YSWPQ"}
    for j, g in enumerate(col_group):
        group_cols[g].append(j)
    group_cols = {g: np.asarray(cs, dtype=int) for g, cs in group_cols.items()}
    obj = np.asarray(prob.objective, dtype=float)
    if np.any(obj[group_cols["Q"]] != 0.0):
        raise ModelError("free flow/angle columns must carry no cost")
    cost = {g: obj[group_cols[g]] for g in "YSWP"}
    blocks = {"precedence": [], "balance": [], "linking": [], "inequality": []}
    for i, tag in enumerate(model.row_tags):
        if tag in PRECEDENCE_TAGS:
            blocks["precedence"].append(i)
        elif tag in BALANCE_TAGS:
            blocks["balance"].append(i)
        elif tag in LINKING_TAGS:
            blocks["linking"].append(i)
        else:
            blocks["inequality"].append(i)
    for i in blocks["precedence"]:
        if any(col_group[j] != "Y" for j in prob.row_cols[i]):
            raise ModelError(f"precedence row {prob.row_names[i]} touches non-binary columns")
        if prob.row_senses[i] != "G":
            raise ModelError("precedence rows must be >=")
    for name, sense in (("balance", "E"), ("linking", "E"), ("inequality", "G")):
        for i in blocks[name]:
            if prob.row_senses[i] != sense:
                raise ModelError(f"row {prob.row_names[i]}: expected sense {sense}")
    rhs_all = np.asarray(prob.row_rhs, dtype=float)
    rhs = {name: rhs_all[idx] for name, idx in
           ((n, np.asarray(v, dtype=int)) for n, v in blocks.items())}
    return CompactForm(model=model, group_cols=group_cols, col_group=col_group,
                       cost=cost, blocks={k: np.asarray(v, dtype=int) for k, v in blocks.items()},
                       rhs=rhs)


# ---------------------------------------------------------------------------
# fixed-plan evaluation


@dataclass
class PlanDecision:
    """Binary build/commitment states plus continuous capacities."""

    line_build: dict = field(default_factory=dict)      # (t, line, corridor) -> 0/1
    bundle_build: dict = field(default_factory=dict)    # (t, cand, option) -> 0/1
    unit_on: dict = field(default_factory=dict)         # (t, unit, hour) -> 0/1
    charge_state: dict = field(default_factory=dict)    # (t, storage, hour) -> 0/1
    storage_energy_cap: dict = field(default_factory=dict)  # (t, storage) -> MWh
    storage_power_cap: dict = field(default_factory=dict)   # (t, storage) -> MW
    wind_cap: dict = field(default_factory=dict)             # (t, wind) -> MW

    @classmethod
    def from_solution(cls, vindex: VariableIndex, x):
        plan = cls()
        fams = {"line_build": plan.line_build, "bundle_build": plan.bundle_build,
                "unit_on": plan.unit_on, "charge_state": plan.charge_state,
                "storage_energy_cap": plan.storage_energy_cap,
                "storage_power_cap": plan.storage_power_cap, "wind_cap": plan.wind_cap}
        for fam, target in fams.items():
            for key, col in vindex.cols(fam).items():
                v = float(x[col])
                target[key] = int(round(v)) if fam in BINARY_FAMILIES else v
        return plan

    def binary_vector(self, vindex: VariableIndex):
        y = np.zeros(vindex.ncols)
        for fam in BINARY_FAMILIES:
            src = getattr(self, fam)
            for key, col in vindex.cols(fam).items():
                y[col] = src.get(key, 0)
        return y[vindex.binary_cols()]


@dataclass
class PlanSolution:
    status: str
    objective: float = np.nan
    tic: dict = field(default_factory=dict)
    toc: dict = field(default_factory=dict)
    plan: PlanDecision | None = None
    x: np.ndarray | None = None
    model: MilpModel | None = None
    infeasible_tags: list = field(default_factory=list)

    @property
    def total_tic(self):
        return float(sum(self.tic.values()))

    @property
    def total_toc(self):
        return float(sum(self.toc.values()))


def cost_breakdown(model: MilpModel, x):
    tic, toc = {}, {}
    for term, (cols, coefs) in model.report_terms.items():
        val = float(np.asarray(coefs) @ x[np.asarray(cols, dtype=int)]) if cols else 0.0
        (tic if term.startswith("tic_") else toc)[term] = val
    for name in ("tic_new_lines", "tic_bundling", "tic_storage", "tic_wind"):
        tic.setdefault(name, 0.0)
    for name in ("toc_thermal", "toc_reserve", "toc_degradation", "toc_shed", "toc_curtail"):
        toc.setdefault(name, 0.0)
    return tic, toc


BRANCH_PRIORITY = {"line_build": 3.0, "bundle_build": 3.0, "charge_state": 2.0,
                   "unit_on": 1.0}


def branch_priorities(vindex: VariableIndex):
    """Investment decisions branch before storage states, then commitment."""
    return np.array([BRANCH_PRIORITY.get(f, 0.0) for f in vindex.col_family])


def solve_monolithic(sys, reps, options=None, scenario=None, rel_gap=1e-9,
                     pool_size=1, node_limit=200000) -> PlanSolution:
    """Solve the full MILP directly (the oracle path for desk-scale runs)."""
    model = build_model(sys, reps, scenario, options)
    sol = solve_milp(model.problem, pool_size=pool_size, rel_gap=rel_gap,
                     node_limit=node_limit,
                     branch_priority=branch_priorities(model.vindex))
    if sol.status != "optimal":
        return PlanSolution(status=sol.status, model=model)
    x = sol.x
    tic, toc = cost_breakdown(model, x)
    return PlanSolution(status="optimal", objective=float(sol.objective), tic=tic,
                        toc=toc, plan=PlanDecision.from_solution(model.vindex, x),
                        x=x, model=model)


def evaluate_plan(sys, reps, plan: PlanDecision, options=None, scenario=None) -> PlanSolution:
    """Operation LP with every investment and commitment decision fixed.

    Infeasibility is reported with the tags of the violated constraint
    families instead of raising."""
    model = build_model(sys, reps, scenario, options)
    prob = model.problem
    vi = model.vindex
    fixed = {"line_build": plan.line_build, "bundle_build": plan.bundle_build,
             "unit_on": plan.unit_on, "charge_state": plan.charge_state,
             "storage_energy_cap": plan.storage_energy_cap,
             "storage_power_cap": plan.storage_power_cap, "wind_cap": plan.wind_cap}
    for fam, src in fixed.items():
        for key, col in vi.cols(fam).items():
            v = float(src.get(key, 0.0))
            if fam in BINARY_FAMILIES and v not in (0.0, 1.0):
                raise ModelError(f"plan value for {vi.name_of(col)} not binary: {v}")
            prob.col_lower[col] = v
            prob.col_upper[col] = v
    sol = solve_lp(prob)
    if sol.status == "infeasible":
        tags = sorted({name.split("[", 1)[0] for name in sol.infeasible_rows})
        return PlanSolution(status="infeasible", model=model, infeasible_tags=tags)
    if sol.status != "optimal":
        return PlanSolution(status=sol.status, model=model)
    tic, toc = cost_breakdown(model, sol.x)
    return PlanSolution(status="optimal", objective=float(sol.objective), tic=tic,
                        toc=toc, plan=plan, x=sol.x, model=model)

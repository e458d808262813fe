"""Single-line outage ranking and scenario selection.

Outages are ranked by a composite severity score: 20% mean-squared line
loading after the outage plus 80% normalized unserved energy, both taken
from a shed-unlimited operation solve of the post-outage network at the
current plan.  Outages scoring at least `threshold_frac` of the maximum
are kept; the intact-network scenario is always first.

Existing lines are only eligible for outage while they are neither
bundled nor backed by a built parallel candidate; candidate lines only
once built.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lp import solve_lp
from .milp_core import BINARY_FAMILIES, ModelOptions, build_model

LI_WEIGHT = 0.2
SHED_WEIGHT = 0.8


@dataclass(frozen=True)
class ContingencyScenario:
    """At most one outaged element; kind 'none' is the intact network."""

    kind: str = "none"              # "none" | "existing" | "candidate"
    line_id: int | None = None
    corridor: int | None = None
    first_stage: int | None = None  # candidate outages apply once built

    @classmethod
    def none(cls):
        return cls()

    @classmethod
    def existing_outage(cls, line_id):
        return cls(kind="existing", line_id=line_id)

    @classmethod
    def candidate_outage(cls, line_id, corridor, first_stage=None):
        return cls(kind="candidate", line_id=line_id, corridor=corridor,
                   first_stage=first_stage)

    @property
    def key(self):
        return (self.kind, self.line_id, self.corridor)

    @property
    def label(self):
        if self.kind == "none":
            return "none"
        if self.kind == "existing":
            return f"existing:{self.line_id}"
        return f"candidate:{self.line_id}/{self.corridor}"


@dataclass
class OutageRecord:
    scenario: ContingencyScenario
    loading_index: float
    shed_energy: float
    shed_norm: float
    score: float
    selected: bool
    screened: bool = True


@dataclass
class ScreeningResult:
    records: list
    threshold_frac: float
    threshold_value: float

    def scenarios(self):
        """Selected scenarios, intact network first, then by line id."""
        picked = [r.scenario for r in self.records if r.selected]
        return [ContingencyScenario.none()] + picked

    def selected_records(self):
        return [r for r in self.records if r.selected]


def _final_stage_bundles(sys, plan):
    """uprate factor per existing line index under the plan's bundlings."""
    psi = np.ones(len(sys.existing_lines))
    T = sys.policy.stages
    for (t, bi, n), v in plan.bundle_build.items():
        if v and t == T:
            b = sys.bundling_candidates[bi]
            li = sys.existing_index[b.target_existing_line]
            psi[li] += b.options[n].uprate_fraction
    return psi


def _built_candidates(sys, plan):
    """{(line index, corridor): first built stage} under the plan."""
    built = {}
    for (t, li, c), v in sorted(plan.line_build.items()):
        if v and (li, c) not in built:
            built[(li, c)] = t
    return built


def _bundled_lines(sys, plan):
    out = set()
    for (t, bi, n), v in plan.bundle_build.items():
        if v:
            out.add(sys.existing_index[sys.bundling_candidates[bi].target_existing_line])
    return out


def eligible_outages(sys, plan):
    """Outage candidates given the current plan, sorted by line id."""
    bundled = _bundled_lines(sys, plan)
    built = _built_candidates(sys, plan)
    built_corridors = set()
    for (li, c) in built:
        l = sys.candidate_lines[li]
        built_corridors.add(frozenset((l.from_bus, l.to_bus)))
    out = []
    for li, l in enumerate(sys.existing_lines):
        if li in bundled:
            continue
        if frozenset((l.from_bus, l.to_bus)) in built_corridors:
            continue
        out.append(ContingencyScenario.existing_outage(l.id))
    for (li, c), t0 in sorted(built.items()):
        out.append(ContingencyScenario.candidate_outage(sys.candidate_lines[li].id, c,
                                                        first_stage=t0))
    return out


def loading_index(sys, flows_existing, flows_candidate, plan, outage: ContingencyScenario):
    """Mean squared loading of surviving lines after `outage`.

    `flows_existing`: {existing line index: max |flow| over stages/hours};
    `flows_candidate`: {(candidate line index, corridor): max |flow|}.
    Bundled existing capacity is scaled by its uprate factor.  Zero-count
    denominators contribute zero."""
    psi = _final_stage_bundles(sys, plan)
    built = _built_candidates(sys, plan)
    n_existing = len(sys.existing_lines)
    out_li = sys.existing_index[outage.line_id] if outage.kind == "existing" else None

    acc = 0.0
    for li, l in enumerate(sys.existing_lines):
        if li == out_li:
            continue
        flow = flows_existing.get(li, 0.0)
        acc += (flow / (psi[li] * l.capacity_mw)) ** 2
    denom = n_existing - 1 if outage.kind == "existing" else n_existing
    existing_term = acc / denom if denom > 0 else 0.0

    out_cand = ((sys.candidate_index[outage.line_id], outage.corridor)
                if outage.kind == "candidate" else None)
    acc = 0.0
    count = 0
    for (li, c) in built:
        if (li, c) == out_cand:
            continue
        flow = flows_candidate.get((li, c), 0.0)
        acc += (flow / sys.candidate_lines[li].capacity_mw) ** 2
        count += 1
    denom_new = count if outage.kind != "candidate" else len(built) - 1
    new_term = acc / denom_new if denom_new > 0 else 0.0
    return existing_term + new_term


def cs_index(loading, shed_norm):
    """Composite severity: 20% loading index + 80% normalized shed."""
    return LI_WEIGHT * np.asarray(loading) + SHED_WEIGHT * np.asarray(shed_norm)


def shed_unlimited_solve(sys, reps, plan, scenario, options=None):
    """Post-outage operation with unlimited (still penalized) shedding and
    the plan's binaries fixed; returns (status, flows, flows_cand, shed)."""
    opt = options or ModelOptions()
    opt_kwargs = {k: getattr(opt, k) for k in
                  ("bundling_enabled", "storage_enabled", "theta_max_rad",
                   "literal_annual_factor")}
    model = build_model(sys, reps, scenario, ModelOptions(shed_unlimited=True, **opt_kwargs))
    prob = model.problem
    vi = model.vindex
    fixed = {"line_build": plan.line_build, "bundle_build": plan.bundle_build,
             "unit_on": plan.unit_on, "charge_state": plan.charge_state}
    for fam, src in fixed.items():
        for key, col in vi.cols(fam).items():
            v = float(src.get(key, 0.0))
            prob.col_lower[col] = v
            prob.col_upper[col] = v
    sol = solve_lp(prob)
    if sol.status != "optimal":
        return sol.status, {}, {}, np.nan
    flows_existing = {}
    for (t, li, h), col in vi.cols("existing_flow").items():
        flows_existing[li] = max(flows_existing.get(li, 0.0), abs(float(sol.x[col])))
    flows_candidate = {}
    for (t, li, c, h), col in vi.cols("candidate_flow").items():
        k = (li, c)
        flows_candidate[k] = max(flows_candidate.get(k, 0.0), abs(float(sol.x[col])))
    shed = float(sum(sol.x[col] for col in vi.cols("load_shed").values()))
    return sol.status, flows_existing, flows_candidate, shed


def screen(sys, reps, plan, threshold_frac=0.2, options=None) -> ScreeningResult:
    """Rank every eligible outage and keep the high-risk set."""
    outages = eligible_outages(sys, plan)
    rows = []
    for scen in outages:
        status, fe, fc, shed = shed_unlimited_solve(sys, reps, plan, scen, options)
        if status != "optimal":
            rows.append([scen, np.nan, np.nan, False])
            continue
        li = loading_index(sys, fe, fc, plan, scen)
        rows.append([scen, li, shed, True])
    sheds = np.array([r[2] if r[3] else 0.0 for r in rows], dtype=float)
    max_shed = float(np.nanmax(sheds)) if len(sheds) else 0.0
    records = []
    scores = []
    for (scen, li, shed, screened), sn in zip(
            rows, (sheds / max_shed if max_shed > 0 else np.zeros_like(sheds))):
        if not screened:
            records.append(OutageRecord(scen, np.nan, np.nan, np.nan, np.nan,
                                        selected=True, screened=False))
            scores.append(-np.inf)
            continue
        score = float(cs_index(li, sn))
        records.append(OutageRecord(scen, li, shed, float(sn), score, selected=False))
        scores.append(score)
    finite = [s for s in scores if np.isfinite(s)]
    max_score = max(finite) if finite else 0.0
    cutoff = threshold_frac * max_score
    for rec, s in zip(records, scores):
        if rec.screened:
            rec.selected = s >= cutoff
    return ScreeningResult(records=records, threshold_frac=threshold_frac,
                           threshold_value=cutoff)


def plan_from_binaries(vindex, ybin):
    """PlanDecision carrying only the binary families, from a vector over
    the master's binary columns."""
    from .milp_core import PlanDecision

    plan = PlanDecision()
    fams = {"line_build": plan.line_build, "bundle_build": plan.bundle_build,
            "unit_on": plan.unit_on, "charge_state": plan.charge_state}
    bcols = vindex.binary_cols()
    for pos, col in enumerate(bcols):
        fam = vindex.col_family[col]
        fams[fam][vindex.col_key[col]] = int(round(float(ybin[pos])))
    return plan


def screening_report_rows(result: ScreeningResult):
    """Rows for the `outage,LI,LSI,LSI_norm,CS,selected` report."""
    out = []
    for r in result.records:
        out.append({
            "outage": r.scenario.label,
            "LI": "" if not r.screened else f"{r.loading_index:.6f}",
            "LSI": "" if not r.screened else f"{r.shed_energy:.6f}",
            "LSI_norm": "" if not r.screened else f"{r.shed_norm:.6f}",
            "CS": "" if not r.screened else f"{r.score:.6f}",
            "selected": int(r.selected),
        })
    return out

"""Model assembly: economics factors, constraint coefficients evaluated by
hand from the formulas, compact partition structure, fixed-plan evaluation
against the monolithic optimum."""

import numpy as np
import pytest

import toysystems as toys
from coplan.milp_core import (
    ModelOptions,
    PlanDecision,
    build_model,
    compact_form,
    cost_breakdown,
    crf,
    evaluate_plan,
    solve_monolithic,
    stage_discount,
)
from coplan.system_data import Bus, CandidateLine, SystemData, ThermalUnit, WindCandidate


def test_crf_values():
    assert crf(0.05, 50) == pytest.approx(0.054777, abs=1e-6)
    assert crf(0.05, 10) == pytest.approx(0.129505, abs=1e-6)


def test_crf_zero_rate_limit():
    # r -> 0+ approaches 1/LT; r <= 0 itself is the caller's domain error
    assert crf(1e-9, 10) == pytest.approx(0.1, abs=1e-6)
    with pytest.raises(ValueError):
        crf(0.0, 10)
    with pytest.raises(ValueError):
        crf(-0.1, 10)


def test_stage_discount_values():
    assert stage_discount(1, 0.05, "investment") == pytest.approx(1.904762, abs=1e-6)
    assert stage_discount(1, 0.0, "operation") == pytest.approx(2.0, abs=1e-12)
    for t in range(1, 6):
        assert stage_discount(t, 0.05, "investment") > stage_discount(t, 0.05, "operation")


def test_stage_discount_rejects_unknown_kind():
    with pytest.raises(ValueError):
        stage_discount(1, 0.05, "maintenance")


def _line_cost_system(stages=1, max_parallel=1, new_corridor=False):
    return SystemData(
        name="cost-probe",
        buses=[Bus(1), Bus(2, peak_load_mw=10.0)],
        existing_lines=[],
        candidate_lines=[CandidateLine(
            1, 1, 2, length_km=100.0, invest_cost_musd_per_km=1.0,
            row_cost_musd_per_km=0.034, susceptance_pu=5.0, capacity_mw=100.0,
            max_parallel=max_parallel, is_new_corridor=new_corridor,
            substation_cost_musd=3.358 if new_corridor else None)],
        bundling_candidates=[],
        thermal_units=[ThermalUnit(1, 2, 0.0, 100.0, list(toys.SEGS_CHEAP), 100.0, 100.0)],
        wind_candidates=[], storage_candidates=[],
        policy=toys._policy(stages=stages, alpha=0.0))


def test_line_invest_coefficient_hand_value():
    sys = _line_cost_system()
    model = build_model(sys, toys.reps4())
    col = model.vindex.col("line_build", (1, 0, 0))
    expected = 1.904762 * 0.054777 * (1.0 + 0.034) * 100.0
    assert model.problem.objective[col] == pytest.approx(expected, rel=1e-5)


def test_substation_cost_first_corridor_only():
    sys = _line_cost_system(max_parallel=2, new_corridor=True)
    model = build_model(sys, toys.reps4())
    c0 = model.problem.objective[model.vindex.col("line_build", (1, 0, 0))]
    c1 = model.problem.objective[model.vindex.col("line_build", (1, 0, 1))]
    d = stage_discount(1, 0.05, "investment") * crf(0.05, 50)
    assert c0 - c1 == pytest.approx(d * 3.358, rel=1e-9)


def test_empty_system_zero_objective():
    sys = SystemData(name="empty", buses=[Bus(1)], existing_lines=[],
                     candidate_lines=[], bundling_candidates=[],
                     thermal_units=[ThermalUnit(1, 1, 0.0, 10.0,
                                                list(toys.SEGS_CHEAP), 10.0, 10.0)],
                     wind_candidates=[], storage_candidates=[],
                     policy=toys._policy(stages=1, alpha=0.0))
    sol = solve_monolithic(sys, toys.reps4())
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(0.0, abs=1e-9)
    assert sol.total_tic == pytest.approx(0.0, abs=1e-12)


def test_segment_cap_coefficient():
    sys = toys.toy_single_bus()
    sys.thermal_units[0] = ThermalUnit(1, 1, 10.0, 100.0, list(toys.SEGS_CHEAP), 100.0, 100.0)
    model = build_model(sys, toys.reps4())
    rows = model.tag_rows("gen_segment_cap")
    i = model.vindex.col("unit_on", (1, 0, 0))
    r0 = rows[0]
    coef = dict(zip(model.problem.row_cols[r0].tolist(), model.problem.row_coefs[r0]))
    assert coef[i] == pytest.approx((100.0 - 10.0) / 3.0)


def test_rps_floor_rhs():
    sys = toys.toy_wind_basic()
    sys.policy.stages = 3
    # one wind site; scale loads so total peak is 1000 MW
    for b in sys.buses:
        b.peak_load_mw = 1000.0 if b.id == 2 else 0.0
    sys.thermal_units[0] = ThermalUnit(1, 1, 0.0, 2000.0, list(toys.SEGS_CHEAP), 2000.0, 2000.0)
    model = build_model(sys, toys.reps4())
    rows = [i for i, t in enumerate(model.row_tags) if t == "wind_rps_floor"]
    rhs_t3 = model.problem.row_rhs[rows[-1]]
    assert rhs_t3 == pytest.approx(0.15 * 1.05 ** 6 * 1000.0, abs=0.1)
    assert rhs_t3 == pytest.approx(201.0, abs=0.1)


def test_reserve_floor_row():
    sys = toys.toy_wind_basic()
    for b in sys.buses:
        b.peak_load_mw = 1000.0 if b.id == 2 else 0.0
    model = build_model(sys, toys.reps4())
    # hour 2 of stage 1 has lf = 0.8, wf = 0.5 in reps4
    rows = model.tag_rows("reserve_floor")
    r = rows[2]
    assert model.problem.row_rhs[r] == pytest.approx(0.03 * 1.05 ** 2 * 0.8 * 1000.0, rel=1e-9)
    coef = dict(zip(model.problem.row_cols[r].tolist(), model.problem.row_coefs[r]))
    pw = model.vindex.col("wind_cap", (1, 0))
    assert coef[pw] == pytest.approx(-0.05 * 0.5)
    # with 200 MW of wind the implied requirement is 26.46 + 5 = 31.46 MW
    assert model.problem.row_rhs[r] + 0.05 * 0.5 * 200.0 == pytest.approx(31.46, abs=0.01)


def test_bundled_capacity_bounds():
    sys = toys.toy_bundle()
    model = build_model(sys, toys.reps4())
    vi = model.vindex
    rows = model.tag_rows("existing_flow_cap_hi")
    target_li = sys.existing_index[sys.bundling_candidates[0].target_existing_line]
    for r_local, i in enumerate(rows):
        name = model.problem.row_names[i]
        cols = model.problem.row_cols[i].tolist()
        coefs = model.problem.row_coefs[i]
        lookup = dict(zip(cols, coefs))
        y2 = vi.col("bundle_build", (1, 0, "two_per_phase"))
        y4 = vi.col("bundle_build", (1, 0, "four_per_phase"))
        if f"[1,{target_li}," in name:
            cap = sys.existing_lines[target_li].capacity_mw
            assert lookup[y2] == pytest.approx(cap * 0.43)
            assert lookup[y4] == pytest.approx(cap * 0.85)


def test_compact_partition_structure():
    sys = toys.toy_sixbus()
    model = build_model(sys, toys.reps4())
    cf = compact_form(model)
    nb, T, H = len(sys.buses), sys.policy.stages, 4
    assert len(cf.blocks["balance"]) == nb * T * H
    # precedence rows touch only binary columns (checked internally too)
    for i in cf.blocks["precedence"]:
        for j in model.problem.row_cols[i]:
            assert cf.col_group[j] == "Y"
    # partition covers every row exactly once
    total = sum(len(v) for v in cf.blocks.values())
    assert total == model.problem.nrows
    all_rows = np.concatenate([cf.blocks[k] for k in cf.blocks])
    assert len(np.unique(all_rows)) == total


def test_compact_reassembly_row_for_row():
    sys = toys.toy_storage()
    model = build_model(sys, toys.reps4())
    cf = compact_form(model)

    def canon(rows):
        out = []
        for i in rows:
            cols = model.problem.row_cols[i]
            coefs = model.problem.row_coefs[i]
            order = np.argsort(cols)
            out.append((model.problem.row_senses[i], float(model.problem.row_rhs[i]),
                        tuple(cols[order].tolist()),
                        tuple(np.round(coefs[order], 12).tolist())))
        return sorted(out)

    monolithic = canon(range(model.problem.nrows))
    reassembled = canon(np.concatenate([cf.blocks[k] for k in
                                        ("precedence", "balance", "linking", "inequality")]))
    assert monolithic == reassembled


def test_evaluate_plan_single_bus():
    sys = toys.toy_single_bus()
    reps = toys.reps4()
    plan = PlanDecision(unit_on={(1, 0, h): 1 for h in range(4)})
    sol = evaluate_plan(sys, reps, plan)
    assert sol.status == "optimal"
    shed = sum(v for k, v in sol.toc.items() if k == "toc_shed")
    assert shed == pytest.approx(0.0, abs=1e-9)
    assert sol.total_tic == pytest.approx(0.0, abs=1e-12)
    assert sol.objective == pytest.approx(sol.total_tic + sol.total_toc, rel=1e-9)


def test_evaluate_plan_infeasible_cites_rows():
    sys = toys.toy_single_bus()
    sys.buses[0] = Bus(1, peak_load_mw=200.0)  # unit max is 120, no shedding
    plan = PlanDecision(unit_on={(1, 0, h): 1 for h in range(4)})
    sol = evaluate_plan(sys, toys.reps4(), plan)
    assert sol.status == "infeasible"
    assert sol.infeasible_tags
    assert "power_balance" in sol.infeasible_tags


def test_evaluate_plan_matches_monolithic():
    sys = toys.toy_wind_basic()
    reps = toys.reps4()
    mono = solve_monolithic(sys, reps, rel_gap=1e-9)
    assert mono.status == "optimal"
    replay = evaluate_plan(sys, reps, mono.plan)
    assert replay.status == "optimal"
    assert replay.objective == pytest.approx(mono.objective, rel=1e-7)
    assert mono.objective == pytest.approx(mono.total_tic + mono.total_toc, rel=1e-6)


def test_outage_scenario_drops_flow_columns():
    from coplan.contingency import ContingencyScenario

    sys = toys.toy_wind_basic()
    scen = ContingencyScenario.existing_outage(1)
    model = build_model(sys, toys.reps4(), scenario=scen)
    li = sys.existing_index[1]
    assert all(key[1] != li for key in model.vindex.cols("existing_flow"))
    base = build_model(sys, toys.reps4())
    dropped = base.vindex.family_count("existing_flow") - model.vindex.family_count("existing_flow")
    assert dropped == sys.policy.stages * 4


def test_scheme_toggles_remove_families():
    sys = toys.toy_sixbus()
    reps = toys.reps4()
    full = build_model(sys, reps)
    no_storage = build_model(sys, reps, options=ModelOptions(storage_enabled=False))
    for fam in ("storage_energy_cap", "storage_power_cap", "storage_energy",
                "discharge", "charge", "charge_state"):
        assert full.vindex.family_count(fam) > 0
        assert no_storage.vindex.family_count(fam) == 0
    no_bundle = build_model(sys, reps, options=ModelOptions(bundling_enabled=False))
    assert no_bundle.vindex.family_count("bundle_build") == 0
    assert not no_bundle.tag_rows("bundled_flow_def_hi")


def test_balance_sum_identity():
    # summing nodal balance rows cancels every flow column
    sys = toys.toy_sixbus()
    model = build_model(sys, toys.reps4())
    cf = compact_form(model)
    n = model.problem.ncols
    for t in (1, 2):
        for h in range(4):
            acc = np.zeros(n)
            for i in cf.blocks["balance"]:
                if f"[{t}," in model.problem.row_names[i] and model.problem.row_names[i].endswith(f",{h}]"):
                    np.add.at(acc, model.problem.row_cols[i], model.problem.row_coefs[i])
            for fam in ("existing_flow", "candidate_flow", "bus_angle"):
                for key, col in model.vindex.cols(fam).items():
                    assert acc[col] == pytest.approx(0.0, abs=1e-12)

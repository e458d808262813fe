import json

import numpy as np
import pytest

import toysystems as toys
from coplan.system_data import (
    GridDomainError,
    GridParseError,
    GridReferenceError,
    StorageCandidate,
    incidence_matrices,
    load_system,
    loads,
    read_series_csv,
    save_system,
    serialize,
    synthetic_year_series,
    validate,
    write_series_csv,
)


def test_minimal_single_bus(tmp_path):
    sys = toys.toy_single_bus()
    path = tmp_path / "single.json"
    save_system(sys, path)
    loaded = load_system(path)
    assert len(loaded.buses) == 1
    assert len(loaded.existing_lines) == 0
    assert len(loaded.thermal_units) == 1


def test_fixture_counts(tmp_path):
    sys = toys.ieee24_like()
    path = tmp_path / "ieee24.json"
    save_system(sys, path)
    loaded = load_system(path)
    singles = [l for l in loaded.existing_lines if l.circuits == 1]
    doubles = [l for l in loaded.existing_lines if l.circuits == 2]
    assert len(singles) == 30
    assert len(doubles) == 4
    assert len(loaded.candidate_lines) == 15
    assert len(loaded.bundling_candidates) == 4
    assert len(loaded.wind_candidates) == 5
    assert len(loaded.storage_candidates) == 5
    assert len(loaded.buses) == 26


def test_dangling_bus_reference(tmp_path):
    doc = serialize(toys.toy_radial())
    doc["existing_lines"][0]["to_bus"] = 99
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(GridReferenceError):
        load_system(path)


def test_unknown_keys_rejected(tmp_path):
    doc = serialize(toys.toy_radial())
    doc["buses"][0]["voltage_kv"] = 230
    path = tmp_path / "extra.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(GridParseError):
        load_system(path)


def test_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{ not json")
    with pytest.raises(GridParseError):
        load_system(path)


def test_domain_error_on_load(tmp_path):
    doc = serialize(toys.toy_radial())
    doc["existing_lines"][0]["capacity_mw"] = -5.0
    path = tmp_path / "neg.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(GridDomainError):
        load_system(path)


def test_roundtrip_equality(tmp_path):
    sys = toys.toy_sixbus()
    path = tmp_path / "six.json"
    save_system(sys, path)
    assert load_system(path) == sys


def test_validate_clean_fixture():
    assert validate(toys.ieee24_like()).is_valid()
    assert validate(toys.ieee24_like()).violations == []


def test_validate_bad_efficiency():
    sys = toys.toy_storage()
    sys.storage_candidates[0] = StorageCandidate(3, 50.0, 250.0, 500000.0, 0.05,
                                                 5.0, 1.3, 0.9, 3.0)
    rep = validate(sys)
    assert not rep.is_valid()
    assert any("efficiency" in v.message for v in rep.errors())


def test_validate_isolated_new_bus():
    from coplan.system_data import Bus

    sys = toys.toy_radial()
    doc = serialize(sys)
    doc["buses"].append({"id": 7, "peak_load_mw": 0.0, "is_new": True})
    sys2 = loads(doc)
    rep = validate(sys2)
    assert rep.is_valid()  # warning only
    assert any(v.code == "connectivity" for v in rep.warnings())


def test_validate_nonconvex_segments():
    sys = toys.toy_radial()
    sys.thermal_units[0].segment_costs_musd_per_mwh = [3e-5, 2e-5, 1e-5]
    rep = validate(sys)
    assert any("nondecreasing" in v.message for v in rep.errors())


def test_incidence_shapes_and_signs():
    sys = toys.toy_radial()
    a, k, ab = incidence_matrices(sys)
    assert a.shape == (1, 2) and k.shape == (1, 2)
    assert a[0, 0] == 1.0 and a[0, 1] == -1.0
    assert np.allclose(a.sum(axis=1), 0.0)
    assert np.allclose(k.sum(axis=1), 0.0)


def test_incidence_fixture_properties():
    sys = toys.ieee24_like()
    a, k, ab = incidence_matrices(sys)
    assert np.allclose(a.sum(axis=1), 0.0)
    assert np.allclose(k.sum(axis=1), 0.0)
    assert np.allclose(ab.sum(axis=1), 1.0)  # one target per bundling row


def test_incidence_declaration_order_invariance():
    sys = toys.toy_sixbus()
    doc = serialize(sys)
    doc["existing_lines"] = list(reversed(doc["existing_lines"]))
    doc["buses"] = list(reversed(doc["buses"]))
    sys2 = loads(doc)
    a1, k1, ab1 = incidence_matrices(sys)
    a2, k2, ab2 = incidence_matrices(sys2)
    assert np.array_equal(a1, a2)
    assert np.array_equal(k1, k2)
    assert np.array_equal(ab1, ab2)


def test_series_roundtrip(tmp_path):
    series = synthetic_year_series(seed=3, hours=200)
    path = tmp_path / "series.csv"
    write_series_csv(path, series)
    back = read_series_csv(path)
    assert back.shape == (200, 2)
    assert np.allclose(back, series, atol=1e-9)
    assert back.min() >= 0.0 and back.max() <= 1.0


def test_series_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("h,load,wind\n1,0.5,0.5\n")
    with pytest.raises(GridParseError):
        read_series_csv(path)


def test_series_out_of_range(tmp_path):
    path = tmp_path / "oor.csv"
    path.write_text("hour,load_factor,wind_factor\n1,1.5,0.5\n")
    with pytest.raises(GridDomainError):
        read_series_csv(path)

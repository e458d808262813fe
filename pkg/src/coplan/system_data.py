"""Grid description: typed records, strict JSON loading, validation and
incidence matrices.

The grid file is a single JSON document with one section per record type
and explicit units in key names (`capacity_mw`, `invest_cost_musd_per_km`,
...).  Loading is strict: unknown keys, missing keys, dangling bus/line
references and malformed values are rejected.  Value-range checks and
graph-connectivity checks are reported by `validate`.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

FORMAT_VERSION = 1

DEFAULT_UPRATES = {"two_per_phase": 0.43, "four_per_phase": 0.85}


class GridParseError(Exception):
    """Malformed grid file (JSON syntax, unknown/missing keys, bad types)."""


class GridReferenceError(Exception):
    """A record references an undeclared bus or line id."""


class GridDomainError(Exception):
    """A value violates its domain (negative capacity, fraction out of range)."""


@dataclass
class Bus:
    id: int
    peak_load_mw: float = 0.0
    is_new: bool = False


@dataclass
class ExistingLine:
    id: int
    from_bus: int
    to_bus: int
    susceptance_pu: float
    capacity_mw: float
    circuits: int = 1


@dataclass
class CandidateLine:
    id: int
    from_bus: int
    to_bus: int
    length_km: float
    invest_cost_musd_per_km: float
    row_cost_musd_per_km: float
    susceptance_pu: float
    capacity_mw: float
    circuits: int = 1
    max_parallel: int = 1
    is_new_corridor: bool = False
    substation_cost_musd: float | None = None


@dataclass
class BundlingOption:
    cost_musd_per_km: float
    uprate_fraction: float


@dataclass
class BundlingCandidate:
    id: int
    target_existing_line: int
    length_km: float
    options: dict = field(default_factory=dict)  # name -> BundlingOption

    def option_names(self):
        return sorted(self.options)


@dataclass
class ThermalUnit:
    id: int
    bus: int
    p_min_mw: float
    p_max_mw: float
    segment_costs_musd_per_mwh: list
    ramp_up_mw: float
    ramp_down_mw: float


@dataclass
class WindCandidate:
    bus: int
    max_capacity_mw: float
    invest_cost_musd_per_mw: float
    curtail_cost_musd_per_mwh: float


@dataclass
class StorageCandidate:
    bus: int
    max_power_mw: float
    max_energy_mwh: float
    power_cost_usd_per_mw: float
    energy_cost_musd_per_mwh: float
    degradation_cost_usd_per_mwh: float
    charge_efficiency: float
    discharge_efficiency: float
    energy_power_ratio_h: float


@dataclass
class PolicyEconomics:
    stages: int
    stage_years: int = 2
    interest_rate: float = 0.05
    lifetimes_years: dict = field(default_factory=lambda: {"line": 50, "storage": 10, "wind": 20})
    rps_share: float = 0.15
    max_curtail_fraction: float = 0.5
    max_hourly_shed_fraction: float = 0.0
    max_annual_shed_fraction: float = 0.0
    reserve_cost_factor: float = 0.1
    load_growth: float = 0.05
    base_mva: float = 100.0
    shed_penalty_usd_per_mwh: float = 1000.0
    cost_segments: int = 3


@dataclass
class SystemData:
    name: str
    buses: list
    existing_lines: list
    candidate_lines: list
    bundling_candidates: list
    thermal_units: list
    wind_candidates: list
    storage_candidates: list
    policy: PolicyEconomics
    description: str = ""

    def __post_init__(self):
        self.buses.sort(key=lambda b: b.id)
        self.existing_lines.sort(key=lambda l: l.id)
        self.candidate_lines.sort(key=lambda l: l.id)
        self.bundling_candidates.sort(key=lambda b: b.id)
        self.thermal_units.sort(key=lambda u: u.id)
        self.wind_candidates.sort(key=lambda w: w.bus)
        self.storage_candidates.sort(key=lambda s: s.bus)
        self.bus_index = {b.id: k for k, b in enumerate(self.buses)}
        self.existing_index = {l.id: k for k, l in enumerate(self.existing_lines)}
        self.candidate_index = {l.id: k for k, l in enumerate(self.candidate_lines)}
        self.bundling_index = {b.id: k for k, b in enumerate(self.bundling_candidates)}

    def total_peak_load_mw(self):
        return sum(b.peak_load_mw for b in self.buses)

    def __eq__(self, other):
        if not isinstance(other, SystemData):
            return NotImplemented
        return serialize(self) == serialize(other)


@dataclass
class Violation:
    severity: str  # "error" | "warning"
    code: str
    message: str


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    def errors(self):
        return [v for v in self.violations if v.severity == "error"]

    def warnings(self):
        return [v for v in self.violations if v.severity == "warning"]

    def is_valid(self):
        return not self.errors()


# ---------------------------------------------------------------------------
# strict parsing helpers

def _take(d, section, key, kind, required=True, default=None):
    if key not in d:
        if required:
            raise GridParseError(f"{section}: missing key '{key}'")
        return default
    v = d.pop(key)
    try:
        if kind is float:
            if isinstance(v, bool):
                raise TypeError
            return float(v)
        if kind is int:
            if isinstance(v, bool) or int(v) != v:
                raise TypeError
            return int(v)
        if kind is bool:
            if not isinstance(v, bool):
                raise TypeError
            return v
        if kind is str:
            if not isinstance(v, str):
                raise TypeError
            return v
        if kind is list:
            if not isinstance(v, list):
                raise TypeError
            return v
        if kind is dict:
            if not isinstance(v, dict):
                raise TypeError
            return v
    except (TypeError, ValueError):
        raise GridParseError(f"{section}: key '{key}' has invalid value {v!r}") from None
    raise GridParseError(f"{section}: unhandled kind for '{key}'")


def _done(d, section):
    if d:
        raise GridParseError(f"{section}: unknown keys {sorted(d)}")


def loads(doc: dict) -> SystemData:
    """Build a SystemData from an already-parsed JSON document (strict)."""
    doc = dict(doc)
    ver = _take(doc, "root", "format_version", int)
    if ver != FORMAT_VERSION:
        raise GridParseError(f"unsupported format_version {ver}")
    name = _take(doc, "root", "name", str)
    description = _take(doc, "root", "description", str, required=False, default="")

    buses = []
    for raw in _take(doc, "root", "buses", list):
        d = dict(raw)
        buses.append(Bus(
            id=_take(d, "bus", "id", int),
            peak_load_mw=_take(d, "bus", "peak_load_mw", float, required=False, default=0.0),
            is_new=_take(d, "bus", "is_new", bool, required=False, default=False),
        ))
        _done(d, "bus")

    existing = []
    for raw in _take(doc, "root", "existing_lines", list):
        d = dict(raw)
        existing.append(ExistingLine(
            id=_take(d, "existing_line", "id", int),
            from_bus=_take(d, "existing_line", "from_bus", int),
            to_bus=_take(d, "existing_line", "to_bus", int),
            susceptance_pu=_take(d, "existing_line", "susceptance_pu", float),
            capacity_mw=_take(d, "existing_line", "capacity_mw", float),
            circuits=_take(d, "existing_line", "circuits", int, required=False, default=1),
        ))
        _done(d, "existing_line")

    candidates = []
    for raw in _take(doc, "root", "candidate_lines", list):
        d = dict(raw)
        candidates.append(CandidateLine(
            id=_take(d, "candidate_line", "id", int),
            from_bus=_take(d, "candidate_line", "from_bus", int),
            to_bus=_take(d, "candidate_line", "to_bus", int),
            length_km=_take(d, "candidate_line", "length_km", float),
            invest_cost_musd_per_km=_take(d, "candidate_line", "invest_cost_musd_per_km", float),
            row_cost_musd_per_km=_take(d, "candidate_line", "row_cost_musd_per_km", float),
            susceptance_pu=_take(d, "candidate_line", "susceptance_pu", float),
            capacity_mw=_take(d, "candidate_line", "capacity_mw", float),
            circuits=_take(d, "candidate_line", "circuits", int, required=False, default=1),
            max_parallel=_take(d, "candidate_line", "max_parallel", int, required=False, default=1),
            is_new_corridor=_take(d, "candidate_line", "is_new_corridor", bool, required=False, default=False),
            substation_cost_musd=_take(d, "candidate_line", "substation_cost_musd", float, required=False),
        ))
        _done(d, "candidate_line")

    bundlings = []
    for raw in _take(doc, "root", "bundling_candidates", list):
        d = dict(raw)
        bid = _take(d, "bundling_candidate", "id", int)
        target = _take(d, "bundling_candidate", "target_existing_line", int)
        length = _take(d, "bundling_candidate", "length_km", float)
        opts_raw = _take(d, "bundling_candidate", "options", dict)
        _done(d, "bundling_candidate")
        options = {}
        for oname, od in opts_raw.items():
            if oname not in DEFAULT_UPRATES:
                raise GridParseError(f"bundling_candidate {bid}: unknown option '{oname}'")
            od = dict(od)
            options[oname] = BundlingOption(
                cost_musd_per_km=_take(od, f"option {oname}", "cost_musd_per_km", float),
                uprate_fraction=_take(od, f"option {oname}", "uprate_fraction", float,
                                      required=False, default=DEFAULT_UPRATES[oname]),
            )
            _done(od, f"option {oname}")
        bundlings.append(BundlingCandidate(id=bid, target_existing_line=target,
                                           length_km=length, options=options))

    units = []
    for raw in _take(doc, "root", "thermal_units", list):
        d = dict(raw)
        units.append(ThermalUnit(
            id=_take(d, "thermal_unit", "id", int),
            bus=_take(d, "thermal_unit", "bus", int),
            p_min_mw=_take(d, "thermal_unit", "p_min_mw", float),
            p_max_mw=_take(d, "thermal_unit", "p_max_mw", float),
            segment_costs_musd_per_mwh=[float(v) for v in _take(d, "thermal_unit", "segment_costs_musd_per_mwh", list)],
            ramp_up_mw=_take(d, "thermal_unit", "ramp_up_mw", float),
            ramp_down_mw=_take(d, "thermal_unit", "ramp_down_mw", float),
        ))
        _done(d, "thermal_unit")

    winds = []
    for raw in _take(doc, "root", "wind_candidates", list):
        d = dict(raw)
        winds.append(WindCandidate(
            bus=_take(d, "wind_candidate", "bus", int),
            max_capacity_mw=_take(d, "wind_candidate", "max_capacity_mw", float),
            invest_cost_musd_per_mw=_take(d, "wind_candidate", "invest_cost_musd_per_mw", float),
            curtail_cost_musd_per_mwh=_take(d, "wind_candidate", "curtail_cost_musd_per_mwh", float),
        ))
        _done(d, "wind_candidate")

    storages = []
    for raw in _take(doc, "root", "storage_candidates", list):
        d = dict(raw)
        storages.append(StorageCandidate(
            bus=_take(d, "storage_candidate", "bus", int),
            max_power_mw=_take(d, "storage_candidate", "max_power_mw", float),
            max_energy_mwh=_take(d, "storage_candidate", "max_energy_mwh", float),
            power_cost_usd_per_mw=_take(d, "storage_candidate", "power_cost_usd_per_mw", float),
            energy_cost_musd_per_mwh=_take(d, "storage_candidate", "energy_cost_musd_per_mwh", float),
            degradation_cost_usd_per_mwh=_take(d, "storage_candidate", "degradation_cost_usd_per_mwh", float),
            charge_efficiency=_take(d, "storage_candidate", "charge_efficiency", float),
            discharge_efficiency=_take(d, "storage_candidate", "discharge_efficiency", float),
            energy_power_ratio_h=_take(d, "storage_candidate", "energy_power_ratio_h", float),
        ))
        _done(d, "storage_candidate")

    praw = dict(_take(doc, "root", "policy", dict))
    lifetimes = dict(_take(praw, "policy", "lifetimes_years", dict, required=False,
                           default={"line": 50, "storage": 10, "wind": 20}))
    for k in lifetimes:
        if k not in ("line", "storage", "wind"):
            raise GridParseError(f"policy: unknown lifetime class '{k}'")
    policy = PolicyEconomics(
        stages=_take(praw, "policy", "stages", int),
        stage_years=_take(praw, "policy", "stage_years", int, required=False, default=2),
        interest_rate=_take(praw, "policy", "interest_rate", float, required=False, default=0.05),
        lifetimes_years=lifetimes,
        rps_share=_take(praw, "policy", "rps_share", float, required=False, default=0.15),
        max_curtail_fraction=_take(praw, "policy", "max_curtail_fraction", float, required=False, default=0.5),
        max_hourly_shed_fraction=_take(praw, "policy", "max_hourly_shed_fraction", float, required=False, default=0.0),
        max_annual_shed_fraction=_take(praw, "policy", "max_annual_shed_fraction", float, required=False, default=0.0),
        reserve_cost_factor=_take(praw, "policy", "reserve_cost_factor", float, required=False, default=0.1),
        load_growth=_take(praw, "policy", "load_growth", float, required=False, default=0.05),
        base_mva=_take(praw, "policy", "base_mva", float, required=False, default=100.0),
        shed_penalty_usd_per_mwh=_take(praw, "policy", "shed_penalty_usd_per_mwh", float, required=False, default=1000.0),
        cost_segments=_take(praw, "policy", "cost_segments", int, required=False, default=3),
    )
    _done(praw, "policy")
    _done(doc, "root")

    sys = SystemData(name=name, description=description, buses=buses,
                     existing_lines=existing, candidate_lines=candidates,
                     bundling_candidates=bundlings, thermal_units=units,
                     wind_candidates=winds, storage_candidates=storages, policy=policy)
    _check_references(sys)
    return sys


def _check_references(sys: SystemData):
    def need_bus(b, where):
        if b not in sys.bus_index:
            raise GridReferenceError(f"{where}: unknown bus {b}")

    ids = [b.id for b in sys.buses]
    if len(set(ids)) != len(ids):
        raise GridReferenceError("duplicate bus ids")
    for coll, name in ((sys.existing_lines, "existing line"),
                       (sys.candidate_lines, "candidate line")):
        seen = set()
        for l in coll:
            if l.id in seen:
                raise GridReferenceError(f"duplicate {name} id {l.id}")
            seen.add(l.id)
            need_bus(l.from_bus, f"{name} {l.id}")
            need_bus(l.to_bus, f"{name} {l.id}")
    for b in sys.bundling_candidates:
        if b.target_existing_line not in sys.existing_index:
            raise GridReferenceError(f"bundling candidate {b.id}: unknown existing line "
                                     f"{b.target_existing_line}")
    for u in sys.thermal_units:
        need_bus(u.bus, f"thermal unit {u.id}")
    for w in sys.wind_candidates:
        need_bus(w.bus, f"wind candidate at bus {w.bus}")
    for s in sys.storage_candidates:
        need_bus(s.bus, f"storage candidate at bus {s.bus}")


def load_system(path) -> SystemData:
    """Load, reference-check and domain-check a grid file."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GridParseError(f"{path}: {exc}") from exc
    sys = loads(doc)
    report = validate(sys)
    if not report.is_valid():
        msgs = "; ".join(v.message for v in report.errors())
        raise GridDomainError(f"{path}: {msgs}")
    return sys


def serialize(sys: SystemData) -> dict:
    """Inverse of `loads`: a JSON-ready dict that round-trips."""
    return {
        "format_version": FORMAT_VERSION,
        "name": sys.name,
        "description": sys.description,
        "buses": [asdict(b) for b in sys.buses],
        "existing_lines": [asdict(l) for l in sys.existing_lines],
        "candidate_lines": [
            {k: v for k, v in asdict(l).items() if not (k == "substation_cost_musd" and v is None)}
            for l in sys.candidate_lines
        ],
        "bundling_candidates": [
            {"id": b.id, "target_existing_line": b.target_existing_line,
             "length_km": b.length_km,
             "options": {k: asdict(v) for k, v in sorted(b.options.items())}}
            for b in sys.bundling_candidates
        ],
        "thermal_units": [asdict(u) for u in sys.thermal_units],
        "wind_candidates": [asdict(w) for w in sys.wind_candidates],
        "storage_candidates": [asdict(s) for s in sys.storage_candidates],
        "policy": asdict(sys.policy),
    }


def save_system(sys: SystemData, path):
    with open(path, "w") as fh:
        json.dump(serialize(sys), fh, indent=1, sort_keys=True)


# ---------------------------------------------------------------------------
# validation

def _frac(report, value, what, lo=0.0, hi=1.0):
    if not (lo <= value <= hi):
        report.violations.append(Violation("error", "domain",
                                           f"{what} = {value} outside [{lo}, {hi}]"))


def validate(sys: SystemData) -> ValidationReport:
    """Report-only checks: value domains, convexity of cost segments,
    bundling uniqueness and network connectivity."""
    rep = ValidationReport()
    err = lambda code, msg: rep.violations.append(Violation("error", code, msg))
    warn = lambda code, msg: rep.violations.append(Violation("warning", code, msg))

    for b in sys.buses:
        if b.peak_load_mw < 0:
            err("domain", f"bus {b.id}: negative peak load")
    for l in sys.existing_lines:
        if l.capacity_mw <= 0:
            err("domain", f"existing line {l.id}: capacity must be positive")
        if l.susceptance_pu <= 0:
            err("domain", f"existing line {l.id}: susceptance must be positive")
        if l.from_bus == l.to_bus:
            err("domain", f"existing line {l.id}: from == to")
        if l.circuits not in (1, 2):
            err("domain", f"existing line {l.id}: circuits must be 1 or 2")
    for l in sys.candidate_lines:
        if l.capacity_mw <= 0 or l.susceptance_pu <= 0:
            err("domain", f"candidate line {l.id}: capacity/susceptance must be positive")
        if l.from_bus == l.to_bus:
            err("domain", f"candidate line {l.id}: from == to")
        if l.max_parallel < 1:
            err("domain", f"candidate line {l.id}: max_parallel must be >= 1")
        if min(l.length_km, l.invest_cost_musd_per_km, l.row_cost_musd_per_km) < 0:
            err("domain", f"candidate line {l.id}: negative cost or length")
        if l.is_new_corridor and l.substation_cost_musd is None:
            err("domain", f"candidate line {l.id}: new corridor requires substation_cost_musd")
        if not l.is_new_corridor and l.substation_cost_musd is not None:
            err("domain", f"candidate line {l.id}: substation cost only valid in new corridors")
    targets = {}
    for b in sys.bundling_candidates:
        targets.setdefault(b.target_existing_line, []).append(b.id)
        if not b.options:
            err("domain", f"bundling candidate {b.id}: no options")
        for name, o in b.options.items():
            if o.cost_musd_per_km < 0:
                err("domain", f"bundling candidate {b.id}/{name}: negative cost")
            _frac(rep, o.uprate_fraction, f"bundling candidate {b.id}/{name} uprate")
        if b.length_km < 0:
            err("domain", f"bundling candidate {b.id}: negative length")
    for tgt, ids in targets.items():
        if len(ids) > 1:
            err("domain", f"existing line {tgt} has multiple bundling candidates {ids}")
    for u in sys.thermal_units:
        if not (0 <= u.p_min_mw <= u.p_max_mw):
            err("domain", f"thermal unit {u.id}: requires 0 <= p_min <= p_max")
        segs = u.segment_costs_musd_per_mwh
        if len(segs) != sys.policy.cost_segments:
            err("domain", f"thermal unit {u.id}: expected {sys.policy.cost_segments} "
                          f"segment costs, got {len(segs)}")
        if any(b < a for a, b in zip(segs, segs[1:])):
            err("domain", f"thermal unit {u.id}: segment costs must be nondecreasing")
        if u.ramp_up_mw < 0 or u.ramp_down_mw < 0:
            err("domain", f"thermal unit {u.id}: negative ramp limit")
    for w in sys.wind_candidates:
        if w.max_capacity_mw < 0 or w.invest_cost_musd_per_mw < 0 or w.curtail_cost_musd_per_mwh < 0:
            err("domain", f"wind candidate at bus {w.bus}: negative value")
    for s in sys.storage_candidates:
        for eff, nm in ((s.charge_efficiency, "charge"), (s.discharge_efficiency, "discharge")):
            if not (0.0 < eff <= 1.0):
                err("domain", f"storage at bus {s.bus}: {nm} efficiency {eff} outside (0, 1]")
        if s.max_power_mw < 0 or s.max_energy_mwh < 0:
            err("domain", f"storage at bus {s.bus}: negative capacity limit")
        if s.energy_power_ratio_h * s.max_power_mw > s.max_energy_mwh + 1e-9:
            warn("storage_ratio", f"storage at bus {s.bus}: energy/power ratio "
                                  f"{s.energy_power_ratio_h}h cannot be met at max power")
    p = sys.policy
    if p.stages < 1:
        err("domain", "policy: stages must be >= 1")
    if p.interest_rate <= 0:
        err("domain", "policy: interest rate must be positive")
    for v, nm in ((p.rps_share, "rps_share"), (p.max_curtail_fraction, "max_curtail_fraction"),
                  (p.max_hourly_shed_fraction, "max_hourly_shed_fraction"),
                  (p.max_annual_shed_fraction, "max_annual_shed_fraction")):
        _frac(rep, v, f"policy {nm}")
    for cls in ("line", "storage", "wind"):
        if cls not in p.lifetimes_years:
            err("domain", f"policy: missing lifetime for '{cls}'")

    # connectivity over existing + candidate edges
    parent = {b.id: b.id for b in sys.buses}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for l in list(sys.existing_lines) + list(sys.candidate_lines):
        union(l.from_bus, l.to_bus)
    comps = {}
    for b in sys.buses:
        comps.setdefault(find(b.id), []).append(b.id)
    if len(comps) > 1:
        main = max(comps.values(), key=lambda ids: (sum(sys.buses[sys.bus_index[i]].peak_load_mw
                                                        for i in ids), len(ids)))
        for ids in comps.values():
            if ids is not main:
                warn("connectivity", f"buses {ids} unreachable from the main grid "
                                     "even with all candidates built")
    return rep


# ---------------------------------------------------------------------------
# incidence matrices

def incidence_matrices(sys: SystemData):
    """(A, K, Ab): signed existing-line/bus and candidate-line/bus incidence
    (+1 at from, -1 at to) and the bundling-target selector."""
    nb = len(sys.buses)
    a = np.zeros((len(sys.existing_lines), nb))
    for r, l in enumerate(sys.existing_lines):
        a[r, sys.bus_index[l.from_bus]] = 1.0
        a[r, sys.bus_index[l.to_bus]] = -1.0
    k = np.zeros((len(sys.candidate_lines), nb))
    for r, l in enumerate(sys.candidate_lines):
        k[r, sys.bus_index[l.from_bus]] = 1.0
        k[r, sys.bus_index[l.to_bus]] = -1.0
    ab = np.zeros((len(sys.bundling_candidates), len(sys.existing_lines)))
    for r, b in enumerate(sys.bundling_candidates):
        ab[r, sys.existing_index[b.target_existing_line]] = 1.0
    return a, k, ab


# ---------------------------------------------------------------------------
# hourly series

SERIES_HEADER = ["hour", "load_factor", "wind_factor"]


def read_series_csv(path) -> np.ndarray:
    """Read an hourly factor series `hour,load_factor,wind_factor`;
    returns an (n, 2) array of [load_factor, wind_factor] in [0, 1]."""
    import csv

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != SERIES_HEADER:
            raise GridParseError(f"{path}: expected header {','.join(SERIES_HEADER)}")
        rows = []
        for k, row in enumerate(reader):
            if len(row) != 3:
                raise GridParseError(f"{path}: row {k + 2}: expected 3 columns")
            try:
                hour, lf, wf = int(row[0]), float(row[1]), float(row[2])
            except ValueError:
                raise GridParseError(f"{path}: row {k + 2}: malformed values") from None
            if hour != k + 1:
                raise GridParseError(f"{path}: row {k + 2}: hours must run 1..n")
            rows.append((lf, wf))
    arr = np.asarray(rows, dtype=float)
    if arr.size == 0:
        raise GridParseError(f"{path}: empty series")
    if np.any(~np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
        raise GridDomainError(f"{path}: factors must be finite and in [0, 1]")
    return arr


def write_series_csv(path, series):
    import csv

    series = np.asarray(series, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SERIES_HEADER)
        for k, (lf, wf) in enumerate(series):
            w.writerow([k + 1, f"{lf:.10g}", f"{wf:.10g}"])


def synthetic_year_series(seed=0, hours=8760) -> np.ndarray:
    """Deterministic stand-in for a measured year: seasonal + diurnal load
    shape and an autocorrelated wind shape, both clipped to [0, 1]."""
    rng = np.random.default_rng(seed)
    t = np.arange(hours)
    day = t / 24.0
    load = (0.62
            + 0.14 * np.cos(2 * np.pi * (day - 15.0) / 365.0)
            + 0.16 * np.sin(2 * np.pi * (t % 24) / 24.0 - 0.8)
            + 0.04 * rng.standard_normal(hours))
    wind_base = 0.45 + 0.20 * np.sin(2 * np.pi * (day + 60.0) / 365.0)
    noise = rng.standard_normal(hours)
    ar = np.empty(hours)
    acc = 0.0
    for i in range(hours):
        acc = 0.96 * acc + 0.28 * noise[i]
        ar[i] = acc
    wind = wind_base + ar * 0.35
    return np.column_stack([np.clip(load, 0.0, 1.0), np.clip(wind, 0.0, 1.0)])

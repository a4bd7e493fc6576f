"""Bottom-up restoration of a collapsed grid.

After a total blackout, grid-forming units restart their switch-delimited
areas as islands (microgrids), grid-supporting and grid-feeding units
reconnect behind them, and neighboring islands are energized or merged
step by step. Every coordination step is gated by the communication
system: comm nodes run only while their bus is powered or an emergency
battery lasts, and their radio range is a disk of the cell radius.

A merge of two live islands additionally passes a synchronization check:
equal frequency and a phase shift below the policy threshold. Phase
alignment is abstracted as a seeded draw whose window halves on every
retry, so a comm-feasible merge always succeeds after a few rounds.

Monte Carlo studies sample battery placement with common random numbers
across parameter cells, which makes the restored-load trend monotone in
battery availability and cell radius run by run.
"""

import math
import random
import statistics
from dataclasses import dataclass, field, replace
from enum import Enum

from .errors import GridResError, InvalidInputError

FORMATION_DELAY_S = 60.0       # collapse to first island
FOLLOWER_DELAY_S = 30.0        # island formation to follower reconnection
ROUND_DELAY_S = 30.0           # between agent coordination rounds
NOMINAL_FREQUENCY_HZ = 50.0
_EQ_TOL = 1e-9


class SyncRejectedError(GridResError):
    """Synchronization condition violated; carries the measured deltas."""

    def __init__(self, freq_delta_hz: float, phase_delta_rad: float):
        self.freq_delta_hz = freq_delta_hz
        self.phase_delta_rad = phase_delta_rad
        super().__init__(
            f"sync rejected: |df|={freq_delta_hz:.4f} Hz, "
            f"|dphase|={phase_delta_rad:.4f} rad")


class DerCapability(str, Enum):
    GRID_FORMING = "grid_forming"
    GRID_SUPPORTING = "grid_supporting"
    GRID_FEEDING = "grid_feeding"


class ServiceClass(str, Enum):
    UNACCEPTABLE = "unacceptable"
    IMPAIRED = "impaired"
    ACCEPTABLE = "acceptable"


# Stage progression: S2 collapse, S3 island formation, S4 follower
# reconnection, then interleaved expansion into dead areas (S4') and
# island merges (S5), closed by the maximum-extent marker S5'.
STAGE_RANK = {"S1": 0, "S2": 1, "S3": 2, "S4": 3, "S4'": 4, "S5": 4, "S5'": 5}


@dataclass(frozen=True)
class BusPoint:
    id: str
    x_km: float
    y_km: float
    area: str


@dataclass(frozen=True)
class LoadAsset:
    bus: str
    demand_mw: float
    critical: bool = False


@dataclass(frozen=True)
class DerAsset:
    id: str
    bus: str
    capability: DerCapability
    capacity_mw: float
    aux_power_mw: float = 0.0   # start-up power drawn before self-supply


@dataclass(frozen=True)
class AreaSwitch:
    id: str
    area_a: str
    area_b: str


@dataclass(frozen=True)
class CommNode:
    bus: str
    has_battery: bool
    battery_kwh: float = 0.0
    drain_kw: float = 0.5
    cell_radius_km: float = 2.0


@dataclass(frozen=True)
class SyncPolicy:
    max_phase_shift_rad: float = 0.2
    max_freq_diff_hz: float = 0.01


@dataclass(frozen=True)
class RestorationScenario:
    """Buses with positions, loads, DER fleet, switch topology and comm."""

    buses: tuple[BusPoint, ...]
    loads: tuple[LoadAsset, ...]
    ders: tuple[DerAsset, ...]
    switches: tuple[AreaSwitch, ...]
    comm: tuple[CommNode, ...]
    sync_policy: SyncPolicy = field(default_factory=SyncPolicy)

    def __post_init__(self):
        violations = check_restoration_scenario(self)
        if violations:
            raise InvalidInputError("; ".join(violations))

    @property
    def areas(self) -> list[str]:
        return sorted({b.area for b in self.buses})

    def buses_of_area(self, area: str) -> list[BusPoint]:
        return [b for b in self.buses if b.area == area]

    def total_load_mw(self) -> float:
        return sum(l.demand_mw for l in self.loads)

    def total_critical_mw(self) -> float:
        return sum(l.demand_mw for l in self.loads if l.critical)


def check_restoration_scenario(sc: "RestorationScenario") -> list[str]:
    out = []
    bus_ids = set()
    for b in sc.buses:
        if b.id in bus_ids:
            out.append(f"buses[{b.id}]: duplicate id")
        bus_ids.add(b.id)
        if not (math.isfinite(b.x_km) and math.isfinite(b.y_km)):
            out.append(f"buses[{b.id}]: position must be finite")
    areas = {b.area for b in sc.buses}
    for i, load in enumerate(sc.loads):
        if load.bus not in bus_ids:
            out.append(f"loads[{i}].bus: unknown bus {load.bus!r}")
        if not (math.isfinite(load.demand_mw) and load.demand_mw >= 0):
            out.append(f"loads[{i}].demand_mw: must be >= 0")
    for d in sc.ders:
        if d.bus not in bus_ids:
            out.append(f"ders[{d.id}].bus: unknown bus {d.bus!r}")
        if not (math.isfinite(d.capacity_mw) and d.capacity_mw >= 0):
            out.append(f"ders[{d.id}].capacity_mw: must be >= 0")
        if not (math.isfinite(d.aux_power_mw) and d.aux_power_mw >= 0):
            out.append(f"ders[{d.id}].aux_power_mw: must be >= 0")
        if not isinstance(d.capability, DerCapability):
            out.append(f"ders[{d.id}].capability: invalid capability")
    for s in sc.switches:
        if s.area_a not in areas or s.area_b not in areas:
            out.append(f"switches[{s.id}]: unknown area")
        elif s.area_a == s.area_b:
            out.append(f"switches[{s.id}]: must connect two distinct areas")
    comm_buses = set()
    for c in sc.comm:
        if c.bus not in bus_ids:
            out.append(f"comm[{c.bus}].bus: unknown bus {c.bus!r}")
        if c.bus in comm_buses:
            out.append(f"comm[{c.bus}]: duplicate comm node on bus")
        comm_buses.add(c.bus)
        if not (math.isfinite(c.cell_radius_km) and c.cell_radius_km > 0):
            out.append(f"comm[{c.bus}].cell_radius_km: must be > 0")
        if not (math.isfinite(c.battery_kwh) and c.battery_kwh >= 0):
            out.append(f"comm[{c.bus}].battery_kwh: must be >= 0")
        if not (math.isfinite(c.drain_kw) and c.drain_kw >= 0):
            out.append(f"comm[{c.bus}].drain_kw: must be >= 0")
    pol = sc.sync_policy
    if not (math.isfinite(pol.max_phase_shift_rad) and pol.max_phase_shift_rad > 0):
        out.append("sync_policy.max_phase_shift_rad: must be > 0")
    if not (math.isfinite(pol.max_freq_diff_hz) and pol.max_freq_diff_hz >= 0):
        out.append("sync_policy.max_freq_diff_hz: must be >= 0")
    return out


@dataclass(frozen=True)
class Microgrid:
    """An independently supplied island of one or more areas."""

    id: str
    areas: frozenset[str]
    buses: frozenset[str]
    forming_units: tuple[str, ...]
    started_units: tuple[str, ...]
    generation_mw: float
    served_total_mw: float
    served_critical_mw: float
    frequency_hz: float = NOMINAL_FREQUENCY_HZ
    phase_rad: float = 0.0

    @property
    def margin_mw(self) -> float:
        return self.generation_mw - self.served_total_mw


@dataclass(frozen=True)
class TimelineEvent:
    t_s: float
    stage: str
    served_total_mw: float
    served_critical_mw: float
    service_class: ServiceClass


@dataclass(frozen=True)
class MergeAttempt:
    t_s: float
    grid_a: str
    grid_b: str
    freq_delta_hz: float
    phase_delta_rad: float
    accepted: bool


@dataclass(frozen=True)
class RestorationTimeline:
    events: tuple[TimelineEvent, ...]
    merge_attempts: tuple[MergeAttempt, ...]
    total_load_mw: float
    total_critical_mw: float

    @property
    def final_served_total_mw(self) -> float:
        return self.events[-1].served_total_mw if self.events else 0.0

    @property
    def restored_fraction(self) -> float:
        if self.total_load_mw <= 0:
            return 1.0
        return self.final_served_total_mw / self.total_load_mw


@dataclass(frozen=True)
class CommGraph:
    """Operational comm nodes and their disk-graph adjacency."""

    operational: frozenset[str]            # bus ids with a working node
    neighbors: dict[str, frozenset[str]]
    component_of: dict[str, int]

    def connected(self, bus_a: str, bus_b: str) -> bool:
        ca = self.component_of.get(bus_a)
        return ca is not None and ca == self.component_of.get(bus_b)


def classify_service(served_critical: float, total_critical: float,
                     served_total: float, total_load: float) -> ServiceClass:
    """Service class from served and required load quantities.

    Acceptable when everything is served, impaired when all critical but
    not all other load is served, unacceptable otherwise.
    """
    for name, served, total in (("critical", served_critical, total_critical),
                                ("total", served_total, total_load)):
        if not (0 <= served <= total + _EQ_TOL):
            raise InvalidInputError(
                f"served_{name}: must satisfy 0 <= served <= total")
    if served_total >= total_load - _EQ_TOL:
        return ServiceClass.ACCEPTABLE
    if served_critical >= total_critical - _EQ_TOL:
        return ServiceClass.IMPAIRED
    return ServiceClass.UNACCEPTABLE


def comm_reachable(scenario: RestorationScenario, powered_buses,
                   battery_charge_kwh: dict[str, float] | None = None) -> CommGraph:
    """Disk-graph of operational comm nodes.

    A node works when its bus is powered or its battery still holds
    charge; an edge exists when both endpoints work and their distance
    is within both cell radii.
    """
    powered = set(powered_buses)
    charge = battery_charge_kwh or {}
    nodes = {}
    for c in scenario.comm:
        remaining = charge.get(c.bus, c.battery_kwh if c.has_battery else 0.0)
        if c.bus in powered or (c.has_battery and remaining > 0):
            nodes[c.bus] = c
    pos = {b.id: (b.x_km, b.y_km) for b in scenario.buses}
    ids = sorted(nodes)
    neighbors: dict[str, set[str]] = {i: set() for i in ids}
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            d = math.dist(pos[a], pos[b])
            if d <= min(nodes[a].cell_radius_km, nodes[b].cell_radius_km):
                neighbors[a].add(b)
                neighbors[b].add(a)
    component_of: dict[str, int] = {}
    comp = 0
    for start in ids:
        if start in component_of:
            continue
        stack = [start]
        component_of[start] = comp
        while stack:
            n = stack.pop()
            for m in neighbors[n]:
                if m not in component_of:
                    component_of[m] = comp
                    stack.append(m)
        comp += 1
    return CommGraph(operational=frozenset(ids),
                     neighbors={k: frozenset(v) for k, v in neighbors.items()},
                     component_of=component_of)


def _dispatch(scenario: RestorationScenario, buses: frozenset[str],
              generation_mw: float) -> tuple[float, float]:
    """Critical-first load dispatch inside one island. Loads are divisible."""
    crit = sum(l.demand_mw for l in scenario.loads if l.bus in buses and l.critical)
    rest = sum(l.demand_mw for l in scenario.loads if l.bus in buses and not l.critical)
    served_crit = min(crit, generation_mw)
    served_rest = min(rest, generation_mw - served_crit)
    return served_crit + served_rest, served_crit


def form_microgrids(scenario: RestorationScenario) -> list[Microgrid]:
    """One island per switch-delimited area holding grid-forming units.

    Only the formers run at this stage; they serve local load up to
    their combined capacity, critical loads first.
    """
    by_area: dict[str, list[DerAsset]] = {}
    for d in scenario.ders:
        if d.capability is DerCapability.GRID_FORMING:
            by_area.setdefault(_area_of_bus(scenario, d.bus), []).append(d)
    grids = []
    for area in sorted(by_area):
        formers = sorted(by_area[area], key=lambda d: (d.bus, d.id))
        buses = frozenset(b.id for b in scenario.buses_of_area(area))
        generation = sum(d.capacity_mw for d in formers)
        served, served_crit = _dispatch(scenario, buses, generation)
        grids.append(Microgrid(
            id=area, areas=frozenset([area]), buses=buses,
            forming_units=tuple(d.id for d in formers),
            started_units=tuple(d.id for d in formers),
            generation_mw=generation, served_total_mw=served,
            served_critical_mw=served_crit))
    return grids


def _area_of_bus(scenario: RestorationScenario, bus_id: str) -> str:
    for b in scenario.buses:
        if b.id == bus_id:
            return b.area
    raise InvalidInputError(f"unknown bus: {bus_id}")


def reconnect_followers(mg: Microgrid, scenario: RestorationScenario) -> Microgrid:
    """Start grid-supporting then grid-feeding units inside the island.

    A unit that needs auxiliary start-up power connects only while the
    island can crank it: non-critical load may be held back briefly, so
    the crank margin is generation minus the served critical load. A
    unit whose auxiliary demand exceeds that margin is deferred and may
    start in a later round once other units have raised the margin.
    """
    if not mg.forming_units:
        raise InvalidInputError("microgrid has no forming unit")
    started = set(mg.started_units)
    generation = mg.generation_mw
    served, served_crit = mg.served_total_mw, mg.served_critical_mw
    rank = {DerCapability.GRID_SUPPORTING: 0, DerCapability.GRID_FEEDING: 1}
    candidates = sorted(
        (d for d in scenario.ders
         if d.bus in mg.buses and d.id not in started
         and d.capability is not DerCapability.GRID_FORMING),
        key=lambda d: (rank[d.capability], d.bus, d.id))
    for _ in range(len(candidates) + 1):
        progressed = False
        for d in candidates:
            if d.id in started:
                continue
            if d.aux_power_mw > (generation - served_crit) + _EQ_TOL:
                continue  # deferred until the crank margin grows
            started.add(d.id)
            generation += d.capacity_mw
            served, served_crit = _dispatch(scenario, mg.buses, generation)
            progressed = True
        if not progressed:
            break
    return replace(mg, started_units=tuple(sorted(started)),
                   generation_mw=generation, served_total_mw=served,
                   served_critical_mw=served_crit)


def _wrapped_phase_distance(a_rad: float, b_rad: float) -> float:
    d = abs(a_rad - b_rad) % (2 * math.pi)
    return 2 * math.pi - d if d > math.pi else d


def synchronize_and_merge(a: Microgrid, b: Microgrid,
                          policy: SyncPolicy,
                          scenario: RestorationScenario) -> Microgrid:
    """Merge two live islands after the synchronization gate.

    Requires matching frequency within policy and a wrapped phase shift
    strictly below the policy threshold; pools generation and load and
    re-dispatches critical-first over the union.
    """
    if a is b or a.id == b.id:
        raise InvalidInputError("cannot merge a microgrid with itself")
    freq_delta = abs(a.frequency_hz - b.frequency_hz)
    phase_delta = _wrapped_phase_distance(a.phase_rad, b.phase_rad)
    if freq_delta > policy.max_freq_diff_hz or not phase_delta < policy.max_phase_shift_rad:
        raise SyncRejectedError(freq_delta, phase_delta)
    # Larger generation keeps its reference; ties go to the lower id.
    leader = a if (a.generation_mw, b.id) >= (b.generation_mw, a.id) else b
    buses = a.buses | b.buses
    generation = a.generation_mw + b.generation_mw
    served, served_crit = _dispatch(scenario, buses, generation)
    return Microgrid(
        id=min(a.id, b.id), areas=a.areas | b.areas, buses=buses,
        forming_units=tuple(sorted(set(a.forming_units) | set(b.forming_units))),
        started_units=tuple(sorted(set(a.started_units) | set(b.started_units))),
        generation_mw=generation, served_total_mw=served,
        served_critical_mw=served_crit,
        frequency_hz=leader.frequency_hz, phase_rad=leader.phase_rad)


class RestorationState:
    """Mutable working state of one restoration run."""

    def __init__(self, scenario: RestorationScenario, seed=0):
        self.scenario = scenario
        self.rng = random.Random(f"gridres-blackstart:{seed}")
        self.t_s = 0.0
        self.grids: dict[str, Microgrid] = {}
        self.events: list[TimelineEvent] = []
        self.merge_attempts: list[MergeAttempt] = []
        self.pair_attempts: dict[tuple[str, str], int] = {}
        self.drained_kwh: dict[str, float] = {c.bus: 0.0 for c in scenario.comm}
        self._positions = {b.id: (b.x_km, b.y_km) for b in scenario.buses}
        self._area_buses = {a: frozenset(b.id for b in scenario.buses_of_area(a))
                            for a in scenario.areas}

    # -- bookkeeping ----------------------------------------------------

    def powered_buses(self) -> set[str]:
        out: set[str] = set()
        for g in self.grids.values():
            out |= g.buses
        return out

    def battery_charge(self) -> dict[str, float]:
        out = {}
        for c in self.scenario.comm:
            if c.has_battery:
                out[c.bus] = max(0.0, c.battery_kwh - self.drained_kwh[c.bus])
            else:
                out[c.bus] = 0.0
        return out

    def advance_time(self, dt_s: float):
        powered = self.powered_buses()
        for c in self.scenario.comm:
            if c.bus not in powered:
                self.drained_kwh[c.bus] += c.drain_kw * dt_s / 3600.0
        self.t_s += dt_s

    def comm_graph(self) -> CommGraph:
        return comm_reachable(self.scenario, self.powered_buses(),
                              self.battery_charge())

    def served_totals(self) -> tuple[float, float]:
        total = sum(g.served_total_mw for g in self.grids.values())
        crit = sum(g.served_critical_mw for g in self.grids.values())
        return total, crit

    def record(self, stage: str):
        served, crit = self.served_totals()
        self.events.append(TimelineEvent(
            t_s=self.t_s, stage=stage, served_total_mw=served,
            served_critical_mw=crit,
            service_class=classify_service(
                crit, self.scenario.total_critical_mw(),
                served, self.scenario.total_load_mw())))

    # -- agent coordination ---------------------------------------------

    def _agent_component(self, grid: Microgrid, comm: CommGraph) -> set[int]:
        comps = {comm.component_of[bus] for bus in grid.buses
                 if bus in comm.operational}
        return comps

    def _dead_area_reachable(self, grid: Microgrid, area: str,
                             comm: CommGraph, grid_comps: set[int]) -> bool:
        """Gate for energizing a dead neighbor area.

        The island's agents coordinate the re-connection either through
        a battery-backed comm node inside the dead area (the local agent
        answers), or by covering every bus of the dead area with the
        island's own comm cells, which lets it monitor the area remotely
        while energizing it. Small cells therefore need battery relays
        to advance; large cells can sweep across dead areas without
        them.
        """
        if not grid_comps:
            return False
        for bus in self._area_buses[area]:
            if bus in comm.operational and comm.component_of[bus] in grid_comps:
                return True
        reachable_nodes = [
            c for c in self.scenario.comm
            if c.bus in comm.operational
            and comm.component_of[c.bus] in grid_comps]
        for bus in self._area_buses[area]:
            target = self._positions[bus]
            if not any(math.dist(self._positions[c.bus], target) <= c.cell_radius_km
                       for c in reachable_nodes):
                return False
        return True

    def _switch_neighbors(self, areas: frozenset[str]) -> list[str]:
        out = set()
        for s in self.scenario.switches:
            if s.area_a in areas and s.area_b not in areas:
                out.add(s.area_b)
            if s.area_b in areas and s.area_a not in areas:
                out.add(s.area_a)
        return sorted(out)

    def _expand_into(self, grid_id: str, area: str):
        grid = self.grids[grid_id]
        buses = grid.buses | self._area_buses[area]
        served, crit = _dispatch(self.scenario, buses, grid.generation_mw)
        grown = replace(grid, areas=grid.areas | {area}, buses=buses,
                        served_total_mw=served, served_critical_mw=crit)
        self.grids[grid_id] = reconnect_followers(grown, self.scenario)

    def _attempt_merge(self, ga: str, gb: str) -> bool:
        a, b = self.grids[ga], self.grids[gb]
        key = (min(ga, gb), max(ga, gb))
        attempt = self.pair_attempts.get(key, 0)
        # Alignment controller: each retry halves the residual phase window.
        window = math.pi / (2 ** attempt)
        draw = self.rng.uniform(0.0, window)
        self.pair_attempts[key] = attempt + 1
        b_aligned = replace(b, frequency_hz=a.frequency_hz,
                            phase_rad=a.phase_rad + draw)
        try:
            merged = synchronize_and_merge(a, b_aligned,
                                           self.scenario.sync_policy,
                                           self.scenario)
        except SyncRejectedError as err:
            self.merge_attempts.append(MergeAttempt(
                t_s=self.t_s, grid_a=ga, grid_b=gb,
                freq_delta_hz=err.freq_delta_hz,
                phase_delta_rad=err.phase_delta_rad, accepted=False))
            return False
        self.merge_attempts.append(MergeAttempt(
            t_s=self.t_s, grid_a=ga, grid_b=gb,
            freq_delta_hz=abs(a.frequency_hz - b_aligned.frequency_hz),
            phase_delta_rad=_wrapped_phase_distance(a.phase_rad, b_aligned.phase_rad),
            accepted=True))
        del self.grids[ga], self.grids[gb]
        self.grids[merged.id] = reconnect_followers(merged, self.scenario)
        return True


def agent_round(state: RestorationState, comm: CommGraph) -> bool:
    """One coordination round among the area agents.

    Agents of comm-connected areas exchange load and generation
    information, derive the round's target (which dead neighbor areas to
    energize, which islands to merge) and apply it greedily. Agents
    without an operational comm path simply do not participate. Returns
    whether the round changed or progressed anything; repeated to a
    fixpoint by the caller.
    """
    changed = False
    # Energize dead neighbor areas (S4' path).
    occupied = set()
    for g in state.grids.values():
        occupied |= g.areas
    for gid in sorted(state.grids):
        grid = state.grids[gid]
        comps = state._agent_component(grid, comm)
        for area in state._switch_neighbors(grid.areas):
            if area in occupied:
                continue
            if state._dead_area_reachable(grid, area, comm, comps):
                state._expand_into(gid, area)
                occupied.add(area)
                state.record("S4'")
                changed = True

    # Merge live islands connected by a switch and a comm path (S5).
    merge_candidates = []
    for ga in sorted(state.grids):
        for gb in sorted(state.grids):
            if gb <= ga:
                continue
            a, b = state.grids[ga], state.grids[gb]
            if not _areas_switch_adjacent(state.scenario, a.areas, b.areas):
                continue
            ca = state._agent_component(a, comm)
            cb = state._agent_component(b, comm)
            if ca & cb:
                merge_candidates.append((ga, gb))
    for ga, gb in merge_candidates:
        if ga not in state.grids or gb not in state.grids:
            continue  # consumed by an earlier merge this round
        if state._attempt_merge(ga, gb):
            state.record("S5")
        changed = True
    return changed


def _areas_switch_adjacent(scenario, areas_a, areas_b) -> bool:
    for s in scenario.switches:
        if (s.area_a in areas_a and s.area_b in areas_b) or \
           (s.area_b in areas_a and s.area_a in areas_b):
            return True
    return False


def run_restoration(scenario: RestorationScenario, seed=0) -> RestorationTimeline:
    """Full staged restoration run; deterministic for a given seed.

    Timeline starts at the collapsed state (S2), forms islands (S3),
    reconnects followers (S4), then iterates agent rounds that energize
    dead areas (S4') and merge islands (S5) until nothing more is
    communication- and switch-reachable, closed by the maximum-extent
    event (S5'). Battery-backed comm nodes drain while their bus is
    unpowered and revive when it is re-energized.
    """
    state = RestorationState(scenario, seed)
    state.record("S2")

    formed = form_microgrids(scenario)
    if not formed:
        return RestorationTimeline(
            events=tuple(state.events), merge_attempts=(),
            total_load_mw=scenario.total_load_mw(),
            total_critical_mw=scenario.total_critical_mw())

    state.advance_time(FORMATION_DELAY_S)
    for mg in formed:
        state.grids[mg.id] = mg
        state.record("S3")

    state.advance_time(FOLLOWER_DELAY_S)
    for gid in sorted(state.grids):
        before = state.grids[gid]
        after = reconnect_followers(before, scenario)
        state.grids[gid] = after
        if set(after.started_units) != set(before.started_units):
            state.record("S4")

    max_rounds = max(4 * (len(scenario.areas) + len(scenario.switches) + 4) ** 2, 64)
    for _ in range(max_rounds):
        state.advance_time(ROUND_DELAY_S)
        if not agent_round(state, state.comm_graph()):
            break

    state.record("S5'")
    return RestorationTimeline(
        events=tuple(state.events),
        merge_attempts=tuple(state.merge_attempts),
        total_load_mw=scenario.total_load_mw(),
        total_critical_mw=scenario.total_critical_mw())


@dataclass(frozen=True)
class MonteCarloResult:
    restored_fractions: tuple[float, ...]
    mean: float
    median: float
    p_battery: float
    cell_radius_km: float
    seed: int


def monte_carlo(scenario: RestorationScenario, p_battery: float,
                cell_radius_km: float, runs: int, seed: int = 0) -> MonteCarloResult:
    """Restoration study over random battery placement at a cell radius.

    Each run samples battery presence per comm node with probability
    p_battery and sets every cell radius to cell_radius_km. Sampling
    uses common random numbers keyed by (seed, run, bus): raising
    p_battery can only add batteries to a given run, never remove them,
    so the restored-load trend is monotone run by run.
    """
    if not (0.0 <= p_battery <= 1.0):
        raise InvalidInputError("p_battery: must be in [0, 1]")
    if not (math.isfinite(cell_radius_km) and cell_radius_km > 0):
        raise InvalidInputError("cell_radius_km: must be > 0")
    if runs < 1:
        raise InvalidInputError("runs: must be >= 1")
    fractions = []
    comm_sorted = sorted(scenario.comm, key=lambda c: c.bus)
    for k in range(runs):
        draw_rng = random.Random(f"gridres-mc:{seed}:{k}")
        new_comm = []
        for c in comm_sorted:
            u = draw_rng.random()
            new_comm.append(replace(c, has_battery=u < p_battery,
                                    cell_radius_km=cell_radius_km))
        run_scenario = replace(scenario, comm=tuple(new_comm))
        timeline = run_restoration(run_scenario, seed=f"{seed}:{k}")
        fractions.append(timeline.restored_fraction)
    return MonteCarloResult(
        restored_fractions=tuple(fractions),
        mean=statistics.fmean(fractions),
        median=statistics.median(fractions),
        p_battery=p_battery, cell_radius_km=cell_radius_km, seed=seed)

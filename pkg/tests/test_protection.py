"""Protection tests: fault solver vs dense nodal oracle, misoperations."""

import math
import random

import numpy as np
import pytest

from gridres import benchmarks as bm
from gridres.errors import InvalidInputError
from gridres.protection import (AmbiguousLocationError, Breaker, DerSource,
                                ExternalSource, FaultScenario, IsolationError,
                                Line, LoadPoint, NoFaultDetectedError,
                                RadialNetwork, SettingGroupTable, TopologyKey,
                                UnconfiguredError, UnreachableFaultError,
                                apply_setting_group, build_fault_signature_map,
                                centralized_locate_fault, detect_energized,
                                simulate_protection, solve_fault_currents,
                                source_fault_path_lines)

# ---------------------------------------------------------------------------
# Independent oracle: dense nodal conductance solve. Voltage source as a
# Norton equivalent, DER as current injections, bolted faults eliminated
# as zero-voltage nodes. Completely separate code path from the tree
# solver under test.
# ---------------------------------------------------------------------------

FAULT_NODE = "__fault__"


def dense_nodal_solve(network, fault):
    nodes = list(network.buses)
    edges = []
    split = (fault is not None and math.isfinite(fault.impedance_pu)
             and fault.element_kind == "line" and 1e-9 < fault.position < 1 - 1e-9)
    for line in network.lines:
        if split and line.id == fault.element_id:
            nodes_mid = FAULT_NODE
            edges.append((line.id, line.from_bus, nodes_mid,
                          line.impedance_pu * fault.position))
            edges.append((line.id + "#far", nodes_mid, line.to_bus,
                          line.impedance_pu * (1 - fault.position)))
        else:
            edges.append((line.id, line.from_bus, line.to_bus, line.impedance_pu))
    if split:
        nodes.append(FAULT_NODE)

    if fault is None or not math.isfinite(fault.impedance_pu):
        fault_node = None
    elif fault.element_kind == "bus":
        fault_node = fault.element_id
    elif fault.position <= 1e-9:
        fault_node = network.line_by_id(fault.element_id).from_bus
    elif fault.position >= 1 - 1e-9:
        fault_node = network.line_by_id(fault.element_id).to_bus
    else:
        fault_node = FAULT_NODE

    index = {n: i for i, n in enumerate(nodes)}
    n = len(nodes)
    g_matrix = np.zeros((n, n))
    j_vector = np.zeros(n)
    for _eid, a, b, z in edges:
        g = 1.0 / z
        ia, ib = index[a], index[b]
        g_matrix[ia, ia] += g
        g_matrix[ib, ib] += g
        g_matrix[ia, ib] -= g
        g_matrix[ib, ia] -= g
    src = network.source
    i_src = index[src.bus]
    if src.available:
        g_matrix[i_src, i_src] += 1.0 / src.impedance_pu
        j_vector[i_src] += src.voltage_pu / src.impedance_pu
    if fault_node is not None:
        for der in network.ders:
            if der.injecting and der.i_max_pu > 0:
                j_vector[index[der.bus]] += der.i_max_pu
    else:
        for der in network.ders:
            if der.injecting and der.i_max_pu > 0:
                j_vector[index[der.bus]] += der.i_max_pu
        for load in network.loads:
            j_vector[index[load.bus]] -= load.current_pu

    v = np.zeros(n)
    if fault_node is not None and fault.impedance_pu <= 1e-12:
        i_f = index[fault_node]
        keep = [i for i in range(n) if i != i_f]
        v_keep = np.linalg.solve(g_matrix[np.ix_(keep, keep)], j_vector[keep])
        v[keep] = v_keep
        i_fault = j_vector[i_f] - g_matrix[i_f, keep] @ v_keep
    elif fault_node is not None:
        i_f = index[fault_node]
        g_matrix[i_f, i_f] += 1.0 / fault.impedance_pu
        v = np.linalg.solve(g_matrix, j_vector)
        i_fault = v[i_f] / fault.impedance_pu
    else:
        v = np.linalg.solve(g_matrix, j_vector)
        i_fault = 0.0

    branch = {}
    for eid, a, b, z in edges:
        branch[eid] = (v[index[a]] - v[index[b]]) / z
    i_grid = (src.voltage_pu - v[i_src]) / src.impedance_pu if src.available else 0.0
    return branch, float(i_fault), float(i_grid)


def random_radial_network(rng, n_buses, with_loads=False):
    buses = [f"b{i}" for i in range(n_buses)]
    lines = []
    for i in range(1, n_buses):
        parent = rng.randrange(i)
        lines.append(Line(id=f"l{i}", from_bus=f"b{parent}", to_bus=f"b{i}",
                          impedance_pu=rng.uniform(0.05, 0.5)))
    ders = []
    for i in range(n_buses):
        if rng.random() < 0.5:
            ders.append(DerSource(id=f"d{i}", bus=f"b{i}",
                                  i_max_pu=rng.uniform(0.1, 2.0),
                                  injecting=rng.random() < 0.8))
    loads = []
    if with_loads:
        for i in range(n_buses):
            if rng.random() < 0.4:
                loads.append(LoadPoint(bus=f"b{i}",
                                       current_pu=rng.uniform(0.05, 0.3)))
    return RadialNetwork(
        buses=tuple(buses), lines=tuple(lines),
        source=ExternalSource(bus="b0", voltage_pu=rng.uniform(0.9, 1.1),
                              impedance_pu=rng.uniform(0.02, 0.2)),
        ders=tuple(ders), loads=tuple(loads))


def random_fault(rng, network):
    if rng.random() < 0.4 or not network.lines:
        element = ("bus", network.buses[rng.randrange(len(network.buses))])
        position = 0.5
    else:
        line = network.lines[rng.randrange(len(network.lines))]
        element = ("line", line.id)
        position = rng.choice([0.0, 0.3, 0.5, 0.8, 1.0])
    impedance = 0.0 if rng.random() < 0.5 else rng.uniform(0.02, 0.5)
    return FaultScenario(element_kind=element[0], element_id=element[1],
                         impedance_pu=impedance, position=position)


def assert_matches_oracle(network, fault, tol=1e-9):
    sol = solve_fault_currents(network, fault, allow_dead_fault=True)
    branch, i_fault, i_grid = dense_nodal_solve(network, fault)
    for eid, expected in branch.items():
        got = sol.branch_currents.get(eid, 0.0)
        assert abs(got - expected) <= tol * max(1.0, abs(expected)), \
            f"{eid}: {got} vs oracle {expected}"
    assert abs(sol.i_fault_pu - i_fault) <= tol * max(1.0, abs(i_fault))
    assert abs(sol.i_grid_pu - i_grid) <= tol * max(1.0, abs(i_grid))


class TestFaultSolver:
    def test_hand_computed_single_line(self):
        # 1.0 pu behind 0.1 source impedance into a 0.1 line, bolted at
        # the far end: 1.0 / 0.2 = 5.0 pu.
        net = RadialNetwork(
            buses=("S", "A"), lines=(Line("L1", "S", "A", 0.1),),
            source=ExternalSource(bus="S", voltage_pu=1.0, impedance_pu=0.1))
        sol = solve_fault_currents(net, FaultScenario("bus", "A", 0.0))
        assert sol.i_fault_pu == pytest.approx(5.0)
        assert sol.i_grid_pu == pytest.approx(5.0)
        assert sol.branch_currents["L1"] == pytest.approx(5.0)

    def test_healthy_network_carries_load_currents_only(self):
        net = RadialNetwork(
            buses=("S", "A", "B"),
            lines=(Line("L1", "S", "A", 0.1), Line("L2", "A", "B", 0.1)),
            source=ExternalSource(bus="S"),
            loads=(LoadPoint("B", 0.3), LoadPoint("A", 0.2)))
        sol = solve_fault_currents(
            net, FaultScenario("bus", "B", math.inf))
        assert sol.branch_currents["L1"] == pytest.approx(0.5)
        assert sol.branch_currents["L2"] == pytest.approx(0.3)
        assert sol.i_fault_pu == 0.0

    def test_der_at_fault_bus_reduces_grid_share(self):
        net = RadialNetwork(
            buses=("S", "A"), lines=(Line("L1", "S", "A", 0.1),),
            source=ExternalSource(bus="S", voltage_pu=1.0, impedance_pu=0.1),
            ders=(DerSource("D1", "A", 1.0, injecting=True),))
        sol = solve_fault_currents(net, FaultScenario("bus", "A", 0.0))
        assert sol.i_grid_pu < sol.i_fault_pu
        assert sol.i_grid_pu + sum(sol.der_contributions_pu.values()) == \
            pytest.approx(sol.i_fault_pu, abs=1e-12)

    def test_kirchhoff_balance(self):
        rng = random.Random(5)
        for _ in range(20):
            net = random_radial_network(rng, rng.randint(2, 6))
            fault = random_fault(rng, net)
            sol = solve_fault_currents(net, fault, allow_dead_fault=True)
            residuals = sol.kirchhoff_residuals(net, fault)
            assert max(abs(r) for r in residuals.values()) < 1e-9

    def test_matches_dense_oracle_on_random_networks(self):
        rng = random.Random(11)
        for _ in range(60):
            net = random_radial_network(rng, rng.randint(2, 6))
            fault = random_fault(rng, net)
            assert_matches_oracle(net, fault)

    def test_matches_oracle_on_healthy_solves_with_loads(self):
        rng = random.Random(13)
        for _ in range(20):
            net = random_radial_network(rng, rng.randint(2, 6), with_loads=True)
            assert_matches_oracle(net, FaultScenario("bus", "b0", math.inf))

    def test_adding_der_never_increases_grid_current(self):
        rng = random.Random(17)
        for _ in range(30):
            net = random_radial_network(rng, rng.randint(3, 6))
            fault = random_fault(rng, net)
            quiet = {d.id: False for d in net.ders}
            base = solve_fault_currents(net, fault, der_injecting=quiet,
                                        allow_dead_fault=True)
            full = solve_fault_currents(net, fault, allow_dead_fault=True)
            assert full.i_grid_pu <= base.i_grid_pu + 1e-12

    def test_unreachable_fault_raises(self):
        net = RadialNetwork(
            buses=("S", "A", "B"),
            lines=(Line("L1", "S", "A", 0.1), Line("L2", "A", "B", 0.1)),
            source=ExternalSource(bus="S"))
        with pytest.raises(UnreachableFaultError):
            solve_fault_currents(net, FaultScenario("bus", "B", 0.0),
                                 open_lines={"L1"})

    def test_fault_island_fed_by_der_only(self):
        net = RadialNetwork(
            buses=("S", "A", "B"),
            lines=(Line("L1", "S", "A", 0.1), Line("L2", "A", "B", 0.1)),
            source=ExternalSource(bus="S"),
            ders=(DerSource("D1", "B", 1.5, injecting=True),))
        sol = solve_fault_currents(net, FaultScenario("bus", "A", 0.0),
                                   open_lines={"L1"})
        assert sol.i_fault_pu == pytest.approx(1.5)
        assert sol.i_grid_pu == 0.0
        assert sol.der_fault_arrivals_pu["D1"] == pytest.approx(1.5)


class TestNetworkValidation:
    def test_cycle_rejected(self):
        with pytest.raises(InvalidInputError, match="radial"):
            RadialNetwork(
                buses=("S", "A", "B"),
                lines=(Line("L1", "S", "A", 0.1), Line("L2", "A", "B", 0.1),
                       Line("L3", "B", "S", 0.1)),
                source=ExternalSource(bus="S"))

    def test_unknown_endpoint_rejected(self):
        with pytest.raises(InvalidInputError):
            RadialNetwork(buses=("S",),
                          lines=(Line("L1", "S", "X", 0.1),),
                          source=ExternalSource(bus="S"))

    def test_nonpositive_impedance_rejected(self):
        with pytest.raises(InvalidInputError):
            RadialNetwork(buses=("S", "A"),
                          lines=(Line("L1", "S", "A", 0.0),),
                          source=ExternalSource(bus="S"))


class TestTwoFeederBenchmark:
    """The two-feeder study: hand-computed currents, then the detectors."""

    def test_clean_fault_trips_exactly_breaker_a(self):
        net = bm.two_feeder_network()
        report = simulate_protection(net, bm.two_feeder_fault(),
                                     bm.TWO_FEEDER_SETTINGS)
        assert [ev.breaker_id for ev in report.trips] == ["A"]
        assert report.issues == ()

    def test_grid_current_hand_value(self):
        # Path impedance 0.05 + 0.05 + 0.10 + 0.05 = 0.25, so 4.0 pu.
        net = bm.two_feeder_network()
        sol = solve_fault_currents(net, bm.two_feeder_fault())
        assert sol.source_feeds_fault
        assert sol.i_grid_pu == pytest.approx(4.0)
        assert sol.branch_currents["L1"] == pytest.approx(4.0)
        assert sol.branch_currents["L3"] == pytest.approx(0.0, abs=1e-12)

    def test_blinding_configuration(self):
        # DER at F1A: source side 0.20, fault side 0.05, so 0.2 / 0.25 of
        # the 2.0 pu injection flows back toward the source and breaker A
        # sees 4.0 - 0.4 = 3.6 pu < 3.8 pu while the fault sees 5.6 pu.
        net = bm.two_feeder_network(der_a_injection_pu=2.0)
        sol = solve_fault_currents(net, bm.two_feeder_fault())
        assert sol.branch_currents["L1"] == pytest.approx(3.6)
        assert sol.i_fault_pu == pytest.approx(5.6)
        report = simulate_protection(net, bm.two_feeder_fault(),
                                     bm.TWO_FEEDER_SETTINGS)
        assert report.trips == ()
        blinding = report.issues_of("Blinding")
        assert len(blinding) == 1
        assert "A" in blinding[0].elements

    def test_blinding_soundness_without_der(self):
        net = bm.two_feeder_network(der_a_injection_pu=2.0)
        quiet = {d.id: False for d in net.ders}
        sol = solve_fault_currents(net, bm.two_feeder_fault(),
                                   der_injecting=quiet)
        assert sol.branch_currents["L1"] == pytest.approx(4.0)
        assert 4.0 > bm.TWO_FEEDER_SETTINGS["A"]

    def test_sympathetic_trip_configuration(self):
        # Dead upstream grid; the healthy feeder's DER feeds the fault
        # through both breakers, which share a setting and trip together.
        net = bm.two_feeder_network(der_b_injection_pu=4.5,
                                    source_available=False)
        report = simulate_protection(net, bm.two_feeder_fault(),
                                     bm.TWO_FEEDER_SETTINGS)
        tripped = {ev.breaker_id for ev in report.trips}
        assert tripped == {"A", "B"}
        kinds = {i.kind for i in report.issues}
        assert "SympatheticTrip" in kinds
        sympathetic = report.issues_of("SympatheticTrip")
        assert all("B" in issue.elements[0] for issue in sympathetic)
        path = source_fault_path_lines(net, bm.two_feeder_fault())
        assert "L3" not in path and "L1" in path

    def test_energized_after_trip(self):
        # Breaker A clears but the DER behind it keeps injecting.
        net = bm.two_feeder_network(der_a_injection_pu=0.5)
        sol = solve_fault_currents(net, bm.two_feeder_fault())
        assert sol.branch_currents["L1"] == pytest.approx(3.9)
        report = simulate_protection(net, bm.two_feeder_fault(),
                                     bm.TWO_FEEDER_SETTINGS)
        assert [ev.breaker_id for ev in report.trips] == ["A"]
        energized = report.issues_of("EnergizedAfterTrip")
        assert len(energized) == 1
        assert "DER_A" in energized[0].elements
        assert "F1A" in energized[0].elements

    def test_no_issue_when_der_stops(self):
        net = bm.two_feeder_network(der_a_injection_pu=0.5)
        issues = detect_energized(net, open_lines={"L1"},
                                  der_injecting={"DER_A": False})
        assert issues == []

    def test_no_open_breakers_no_energized_issue(self):
        net = bm.two_feeder_network(der_a_injection_pu=0.5)
        assert detect_energized(net, open_lines=set()) == []

    def test_termination_is_bounded_by_breaker_count(self):
        net = bm.two_feeder_network(der_b_injection_pu=4.5,
                                    source_available=False)
        report = simulate_protection(net, bm.two_feeder_fault(),
                                     bm.TWO_FEEDER_SETTINGS)
        assert len(report.trips) <= len(net.breakers)

    def test_settings_must_cover_all_breakers(self):
        net = bm.two_feeder_network()
        with pytest.raises(InvalidInputError, match="C"):
            simulate_protection(net, bm.two_feeder_fault(), {"A": 3.8, "B": 3.8})

    def test_cascade_arms_second_breaker_after_first_trip(self):
        # Weak source: i_src = 1 / (0.2 + 0.3 + 0.25) = 1.333 pu. The DER
        # at J splits 2/3 toward the fault and 1/3 back to the source, so
        # B1 carries |1.333 - 1.5| = 0.167 pu (reverse flow) and B2
        # carries 1.333 + 3.0 = 4.333 pu. Opening B1 islands {J, F} and
        # reroutes the full 4.5 pu through B2, only then above its
        # 4.4 pu setting.
        net = RadialNetwork(
            buses=("S", "J", "F"),
            lines=(Line("L1", "S", "J", 0.3), Line("L2", "J", "F", 0.25)),
            source=ExternalSource(bus="S", voltage_pu=1.0, impedance_pu=0.2),
            ders=(DerSource("D", "J", 4.5, injecting=True),),
            breakers=(Breaker("B1", "L1", 0.1, delay_s=0.1),
                      Breaker("B2", "L2", 4.4, delay_s=0.1)))
        fault = FaultScenario("bus", "F", 0.0)
        pre = solve_fault_currents(net, fault)
        assert abs(pre.branch_currents["L1"]) == pytest.approx(1.0 / 6.0)
        assert pre.branch_currents["L2"] == pytest.approx(13.0 / 3.0)
        report = simulate_protection(net, fault, {"B1": 0.1, "B2": 4.4})
        assert [(ev.breaker_id, ev.time_s) for ev in report.trips] == \
            [("B1", pytest.approx(0.1)), ("B2", pytest.approx(0.2))]
        assert len(report.issues_of("EnergizedAfterTrip")) == 1


class TestSettingGroups:
    def groups(self):
        key_grid = TopologyKey.of(False, {"DER_A", "DER_B"})
        key_island = TopologyKey.of(True, {"DER_A"})
        return SettingGroupTable({
            key_grid: {"A": 3.8, "B": 3.8, "C": 8.0},
            key_island: {"A": 1.2, "B": 1.2, "C": 2.0},
        }, breaker_ids=("A", "B", "C")), key_grid, key_island

    def test_exact_match(self):
        table, key_grid, _ = self.groups()
        result = apply_setting_group(table, key_grid)
        assert result.settings["A"] == 3.8
        assert not result.held

    def test_hold_on_missing_key(self):
        table, key_grid, _ = self.groups()
        apply_setting_group(table, key_grid)
        missing = TopologyKey.of(True, {"DER_A", "DER_B"})
        result = apply_setting_group(table, missing)
        assert result.held
        assert result.settings == {"A": 3.8, "B": 3.8, "C": 8.0}

    def test_unconfigured_error_without_prior(self):
        table, _, _ = self.groups()
        with pytest.raises(UnconfiguredError):
            apply_setting_group(table, TopologyKey.of(True, set()))

    def test_empty_table_rejected(self):
        with pytest.raises(InvalidInputError):
            SettingGroupTable({})

    def test_incomplete_group_rejected(self):
        with pytest.raises(InvalidInputError):
            SettingGroupTable({TopologyKey.of(False, set()): {"A": 1.0}},
                              breaker_ids=("A", "B"))

    def test_island_group_drives_simulation(self):
        # In islanded operation only the healthy feeder's DER feeds the
        # fault (2.0 pu through A and B). The grid-connected setting of
        # 3.8 pu would never clear it; the island group does.
        table, key_grid, key_island = self.groups()
        net = bm.two_feeder_network(der_b_injection_pu=2.0,
                                    source_available=False)
        grid_settings = apply_setting_group(table, key_grid).settings
        report = simulate_protection(net, bm.two_feeder_fault(), grid_settings)
        assert report.trips == ()
        island_settings = apply_setting_group(table, key_island).settings
        report = simulate_protection(net, bm.two_feeder_fault(), island_settings)
        assert any(ev.breaker_id == "A" for ev in report.trips)


class TestCentralizedScheme:
    def network(self):
        return bm.two_feeder_network(der_a_injection_pu=2.0,
                                     der_b_injection_pu=4.5)

    def test_exact_signature_lookup(self):
        net = self.network()
        fmap = build_fault_signature_map(net)
        sol = solve_fault_currents(net, bm.two_feeder_fault())
        result = centralized_locate_fault(sol.der_fault_arrivals_pu, fmap,
                                          tolerance=0.1)
        assert result.location == ("line", "L2")
        assert result.breakers_to_open == ("A",)
        assert not result.escalated
        assert result.cleared_from_source
        # DER_A sits inside the isolated region and keeps feeding the fault.
        assert result.residual_fault_current_pu == pytest.approx(2.0)

    def test_bus_fault_between_two_breakers(self):
        net = self.network()
        fmap = build_fault_signature_map(
            net, candidates=[("bus", "MAIN"), ("line", "L2"), ("line", "L4")])
        sol = solve_fault_currents(net, FaultScenario("bus", "MAIN", 0.0))
        result = centralized_locate_fault(sol.der_fault_arrivals_pu, fmap,
                                          tolerance=0.1)
        assert result.location == ("bus", "MAIN")
        assert set(result.breakers_to_open) == {"A", "B", "C"}

    def test_zero_measurement_means_no_fault(self):
        fmap = build_fault_signature_map(self.network())
        with pytest.raises(NoFaultDetectedError):
            centralized_locate_fault({"DER_A": 0.0, "DER_B": 0.0}, fmap,
                                     tolerance=0.1)

    def test_distant_measurement_means_no_fault(self):
        fmap = build_fault_signature_map(self.network())
        with pytest.raises(NoFaultDetectedError):
            centralized_locate_fault({"DER_A": 40.0, "DER_B": 40.0}, fmap,
                                     tolerance=0.1)

    def test_ambiguous_on_electrically_equivalent_candidates(self):
        # A fault at the very end of a line and one at its terminal bus
        # are the same electrical point, so their signatures coincide.
        net = self.network()
        fmap = build_fault_signature_map(
            net, candidates=[("line", "L2"), ("bus", "F1B")], position=1.0)
        sol = solve_fault_currents(net, FaultScenario("bus", "F1B", 0.0))
        with pytest.raises(AmbiguousLocationError):
            centralized_locate_fault(sol.der_fault_arrivals_pu, fmap,
                                     tolerance=0.05)

    def test_escalation_past_failed_breaker(self):
        net = self.network()
        fmap = build_fault_signature_map(net)
        sol = solve_fault_currents(net, bm.two_feeder_fault())
        result = centralized_locate_fault(sol.der_fault_arrivals_pu, fmap,
                                          tolerance=0.1,
                                          failed_breakers={"A"})
        assert result.escalated
        assert "C" in result.breakers_to_open
        assert "B" in result.breakers_to_open
        assert result.cleared_from_source
        assert result.residual_fault_current_pu == pytest.approx(2.0)

    def test_unisolatable_when_everything_failed(self):
        net = self.network()
        fmap = build_fault_signature_map(net)
        sol = solve_fault_currents(net, bm.two_feeder_fault())
        with pytest.raises(IsolationError):
            centralized_locate_fault(sol.der_fault_arrivals_pu, fmap,
                                     tolerance=0.1,
                                     failed_breakers={"A", "B", "C"})

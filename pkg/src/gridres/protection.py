"""Quasi-static fault currents and breaker behavior on radial feeders.

The network model is magnitude-only per-unit phasor: real impedances,
an external voltage source behind a source impedance, distributed
generation as ideal current sources with a fault-injection cap, and
definite-time breakers. Fault currents are solved by series/parallel
reduction on the feeder tree with superposition of the current sources,
which is exact on radial networks.

During faulted solves load currents are neglected (fault currents
dominate); the healthy solve includes them. That convention makes the
current balance I_fault = I_grid + sum of injections hold exactly.

The module also provides the two adaptive-protection schemes: local
setting groups selected by topology (with a hold rule on communication
failure) and a centralized locator that matches measured per-DER
injections against precomputed fault signatures.
"""

import math
from collections import deque
from dataclasses import dataclass, field

from .errors import GridResError, InvalidInputError, SimulationError

_FAULT_NODE = "__fault__"
_FAR_SUFFIX = "#far"


class UnreachableFaultError(GridResError):
    """The faulted element has no connected source to feed it."""


class SingularNetworkError(SimulationError):
    """Degenerate impedances made the solve ill-posed."""


class UnconfiguredError(GridResError):
    """No setting group matches and no previous settings are held."""


class NoFaultDetectedError(GridResError):
    """No stored fault signature lies within tolerance of the measurement."""


class AmbiguousLocationError(GridResError):
    """Two candidate locations match the measurement too closely."""


class IsolationError(GridResError):
    """No set of working breakers can separate the fault from its sources."""


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: str
    to_bus: str
    impedance_pu: float


@dataclass(frozen=True)
class ExternalSource:
    bus: str
    voltage_pu: float = 1.0
    impedance_pu: float = 0.05
    available: bool = True


@dataclass(frozen=True)
class DerSource:
    """Current-source model of a DER: fixed injection when active."""

    id: str
    bus: str
    i_max_pu: float
    injecting: bool = True


@dataclass(frozen=True)
class Breaker:
    id: str
    line: str
    i_trip_pu: float
    delay_s: float = 0.1


@dataclass(frozen=True)
class LoadPoint:
    bus: str
    current_pu: float


@dataclass(frozen=True)
class RadialNetwork:
    """Radial feeder network rooted at the external-source bus."""

    buses: tuple[str, ...]
    lines: tuple[Line, ...]
    source: ExternalSource
    ders: tuple[DerSource, ...] = ()
    breakers: tuple[Breaker, ...] = ()
    loads: tuple[LoadPoint, ...] = ()

    def __post_init__(self):
        violations = check_radial_network(self)
        if violations:
            raise InvalidInputError("; ".join(violations))

    def line_by_id(self, line_id: str) -> Line:
        for ln in self.lines:
            if ln.id == line_id:
                return ln
        raise InvalidInputError(f"unknown line: {line_id}")

    def breakers_on(self, line_id: str) -> list[Breaker]:
        return [b for b in self.breakers if b.line == line_id]


def check_radial_network(net: "RadialNetwork") -> list[str]:
    """All invariant violations of a network description (empty if valid)."""
    out = []
    bus_set = set(net.buses)
    if len(bus_set) != len(net.buses):
        out.append("buses: duplicate bus ids")
    if net.source.bus not in bus_set:
        out.append(f"source.bus: unknown bus {net.source.bus!r}")
    if not (math.isfinite(net.source.impedance_pu) and net.source.impedance_pu > 0):
        out.append("source.impedance_pu: must be > 0")
    if not math.isfinite(net.source.voltage_pu):
        out.append("source.voltage_pu: must be finite")
    seen_lines = set()
    parent = {b: b for b in bus_set}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for ln in net.lines:
        tag = f"lines[{ln.id}]"
        if ln.id in seen_lines:
            out.append(f"{tag}: duplicate line id")
        seen_lines.add(ln.id)
        if ln.from_bus not in bus_set or ln.to_bus not in bus_set:
            out.append(f"{tag}: endpoint not in buses")
            continue
        if not (math.isfinite(ln.impedance_pu) and ln.impedance_pu > 0):
            out.append(f"{tag}.impedance_pu: must be > 0")
        ra, rb = find(ln.from_bus), find(ln.to_bus)
        if ra == rb:
            out.append(f"{tag}: creates a cycle, network must be radial")
        else:
            parent[ra] = rb
    for d in net.ders:
        if d.bus not in bus_set:
            out.append(f"ders[{d.id}].bus: unknown bus {d.bus!r}")
        if not (math.isfinite(d.i_max_pu) and d.i_max_pu >= 0):
            out.append(f"ders[{d.id}].i_max_pu: must be >= 0")
    for b in net.breakers:
        if b.line not in seen_lines:
            out.append(f"breakers[{b.id}].line: unknown line {b.line!r}")
        if not (math.isfinite(b.i_trip_pu) and b.i_trip_pu > 0):
            out.append(f"breakers[{b.id}].i_trip_pu: must be > 0")
        if not (math.isfinite(b.delay_s) and b.delay_s >= 0):
            out.append(f"breakers[{b.id}].delay_s: must be >= 0")
    for i, load in enumerate(net.loads):
        if load.bus not in bus_set:
            out.append(f"loads[{i}].bus: unknown bus {load.bus!r}")
        if not (math.isfinite(load.current_pu) and load.current_pu >= 0):
            out.append(f"loads[{i}].current_pu: must be >= 0")
    return out


@dataclass(frozen=True)
class FaultScenario:
    """A short circuit on a line (at a position fraction) or at a bus.

    impedance_pu = 0 is a bolted fault; math.inf is the no-fault
    sentinel and yields the healthy load-flow solution.
    """

    element_kind: str            # "line" or "bus"
    element_id: str
    impedance_pu: float = 0.0
    position: float = 0.5        # along the line from from_bus, line faults only

    def __post_init__(self):
        if self.element_kind not in ("line", "bus"):
            raise InvalidInputError("fault.element_kind: must be 'line' or 'bus'")
        if math.isnan(self.impedance_pu) or self.impedance_pu < 0:
            raise InvalidInputError("fault.impedance_pu: must be >= 0 (inf for none)")
        if not (0.0 <= self.position <= 1.0):
            raise InvalidInputError("fault.position: must be in [0, 1]")

    @property
    def is_fault(self) -> bool:
        return math.isfinite(self.impedance_pu)


@dataclass
class FaultSolution:
    """Signed branch currents plus the fault-current bookkeeping.

    branch_currents is keyed by line id (positive from from_bus toward
    to_bus); a mid-line fault adds a '<line>#far' entry for the far-side
    segment. i_grid_pu is the net current the external grid feeds into
    the network; der_contributions_pu are the full injections of
    connected, injecting units; der_fault_arrivals_pu is the share of
    each injection that arrives at the fault, which is what makes a
    measurement characteristic for the fault location.
    """

    branch_currents: dict[str, float]
    i_fault_pu: float
    i_grid_pu: float
    der_contributions_pu: dict[str, float]
    der_fault_arrivals_pu: dict[str, float]
    source_feeds_fault: bool = False
    bus_injections: dict[str, float] = field(default_factory=dict, repr=False)

    def branch_magnitude(self, line_id: str) -> float:
        return abs(self.branch_currents.get(line_id, 0.0))

    def kirchhoff_residuals(self, network: RadialNetwork,
                            fault: FaultScenario | None = None) -> dict[str, float]:
        """Net current imbalance at every node; all zero when consistent."""
        nodes = {b: 0.0 for b in network.buses}
        for bus, inj in self.bus_injections.items():
            nodes[bus] = nodes.get(bus, 0.0) + inj
        edges = _edges_for(network, fault)
        for eid, a, b, _z, _line in edges:
            flow = self.branch_currents.get(eid, 0.0)
            nodes[a] = nodes.get(a, 0.0) - flow
            nodes[b] = nodes.get(b, 0.0) + flow
        return nodes


@dataclass(frozen=True)
class TripEvent:
    breaker_id: str
    time_s: float


@dataclass(frozen=True)
class ProtectionIssue:
    kind: str                 # Blinding | SympatheticTrip | EnergizedAfterTrip
    elements: tuple[str, ...]
    explanation: str


@dataclass(frozen=True)
class ProtectionReport:
    trips: tuple[TripEvent, ...]
    issues: tuple[ProtectionIssue, ...]
    open_lines: tuple[str, ...]

    def issues_of(self, kind: str) -> list[ProtectionIssue]:
        return [i for i in self.issues if i.kind == kind]


def _edges_for(network: RadialNetwork, fault: FaultScenario | None):
    """Edge list (id, a, b, z, line_id), splitting a faulted line in two.

    The near-side segment keeps the line id (and the breaker current is
    read from it, breakers sit at the from end); the far side gets the
    '#far' suffix.
    """
    edges = []
    split_line = None
    if fault is not None and fault.is_fault and fault.element_kind == "line":
        split_line = fault.element_id
    for ln in network.lines:
        if ln.id != split_line:
            edges.append((ln.id, ln.from_bus, ln.to_bus, ln.impedance_pu, ln.id))
            continue
        pos = min(max(fault.position, 0.0), 1.0)
        if pos <= 1e-9 or pos >= 1.0 - 1e-9:
            # Fault effectively at a terminal: no split needed.
            edges.append((ln.id, ln.from_bus, ln.to_bus, ln.impedance_pu, ln.id))
            continue
        edges.append((ln.id, ln.from_bus, _FAULT_NODE, ln.impedance_pu * pos, ln.id))
        edges.append((ln.id + _FAR_SUFFIX, _FAULT_NODE, ln.to_bus,
                      ln.impedance_pu * (1.0 - pos), ln.id))
    return edges


def _fault_node_for(network: RadialNetwork, fault: FaultScenario) -> str:
    if fault.element_kind == "bus":
        if fault.element_id not in network.buses:
            raise InvalidInputError(f"fault.element_id: unknown bus {fault.element_id!r}")
        return fault.element_id
    ln = network.line_by_id(fault.element_id)
    if fault.position <= 1e-9:
        return ln.from_bus
    if fault.position >= 1.0 - 1e-9:
        return ln.to_bus
    return _FAULT_NODE


class _Tree:
    """Rooted spanning structure of one connected component."""

    def __init__(self, adjacency, root):
        self.root = root
        self.parent = {root: None}
        self.parent_edge = {root: None}
        self.z_from_root = {root: 0.0}
        order = deque([root])
        while order:
            node = order.popleft()
            for eid, other, z, direction in adjacency.get(node, ()):
                if other in self.parent:
                    continue
                self.parent[other] = node
                self.parent_edge[other] = (eid, direction)
                self.z_from_root[other] = self.z_from_root[node] + z
                order.append(other)

    def contains(self, node) -> bool:
        return node in self.parent

    def path_edges(self, node):
        """Edges from node up to the root as (edge_id, sign_toward_root)."""
        out = []
        while self.parent[node] is not None:
            eid, direction = self.parent_edge[node]
            # direction +1 means the stored edge points parent -> node
            out.append((eid, -direction))
            node = self.parent[node]
        return out


def _build_adjacency(edges, open_lines):
    adjacency: dict[str, list] = {}
    for eid, a, b, z, line_id in edges:
        if line_id in open_lines and not eid.endswith(_FAR_SUFFIX):
            continue
        adjacency.setdefault(a, []).append((eid, b, z, +1))
        adjacency.setdefault(b, []).append((eid, a, z, -1))
    return adjacency


def solve_fault_currents(network: RadialNetwork, fault: FaultScenario | None,
                         open_lines=frozenset(), der_injecting=None,
                         allow_dead_fault: bool = False) -> FaultSolution:
    """Solve branch currents for a fault (or the healthy network).

    Superposition on the feeder tree: the source drives current through
    the series path to the fault; each injecting DER splits between the
    source path and the fault path inversely to their impedances.
    der_injecting optionally overrides the per-unit injecting flags.
    open_lines removes tripped lines (the far side of a split faulted
    line stays connected, the breaker sits on the near side).
    """
    open_lines = frozenset(open_lines)
    injecting = {d.id: d.injecting for d in network.ders}
    if der_injecting:
        injecting.update(der_injecting)

    no_fault = fault is None or not fault.is_fault
    edges = _edges_for(network, None if no_fault else fault)
    adjacency = _build_adjacency(edges, open_lines)
    currents = {eid: 0.0 for eid, *_ in edges}
    inj: dict[str, float] = {}

    src = network.source
    src_works = src.available

    if no_fault:
        i_grid = _solve_healthy(network, adjacency, currents, inj) if src_works else 0.0
        return FaultSolution(branch_currents=currents, i_fault_pu=0.0,
                             i_grid_pu=i_grid, der_contributions_pu={},
                             der_fault_arrivals_pu={},
                             source_feeds_fault=False, bus_injections=inj)

    fault_node = _fault_node_for(network, fault)
    if fault_node not in adjacency and fault_node != src.bus:
        adjacency.setdefault(fault_node, [])

    # Component membership around the fault.
    tree_root = src.bus if src_works else fault_node
    tree = _Tree(adjacency, tree_root)
    if src_works and not tree.contains(fault_node):
        # Source cannot reach the fault; treat the fault component alone.
        tree = _Tree(adjacency, fault_node)
        src_feeds = False
    else:
        src_feeds = src_works

    z_f = fault.impedance_pu
    i_fault = 0.0
    i_grid = 0.0
    contributions: dict[str, float] = {}
    arrivals: dict[str, float] = {}

    if src_feeds:
        z_path = tree.z_from_root[fault_node]
        z_total = src.impedance_pu + z_path + z_f
        if z_total <= 0:
            raise SingularNetworkError(
                f"zero total impedance on the source-fault path "
                f"(Zs={src.impedance_pu:g}, path={z_path:g}, Zf={z_f:g})")
        i_src = src.voltage_pu / z_total
        for eid, sign_toward_root in _path_down(tree, fault_node):
            currents[eid] += -sign_toward_root * i_src
        i_fault += i_src
        i_grid += i_src
        on_path = _nodes_on_root_path(tree, fault_node)
        for der in network.ders:
            if not injecting.get(der.id) or der.i_max_pu <= 0:
                continue
            if not tree.contains(der.bus):
                continue
            junction = _junction_on_path(tree, der.bus, on_path)
            z_left = src.impedance_pu + tree.z_from_root[junction]
            z_right = (tree.z_from_root[fault_node] - tree.z_from_root[junction]) + z_f
            denom = z_left + z_right
            if denom <= 0:
                raise SingularNetworkError("zero impedance divider at a DER junction")
            frac_fault = z_left / denom
            _add_flow(tree, currents, der.bus, junction, der.i_max_pu)
            _add_flow(tree, currents, junction, fault_node, der.i_max_pu * frac_fault)
            _add_flow(tree, currents, junction, tree.root, der.i_max_pu * (1 - frac_fault))
            i_fault += der.i_max_pu * frac_fault
            i_grid -= der.i_max_pu * (1 - frac_fault)
            contributions[der.id] = der.i_max_pu
            arrivals[der.id] = der.i_max_pu * frac_fault
            inj[der.bus] = inj.get(der.bus, 0.0) + der.i_max_pu
        inj[src.bus] = inj.get(src.bus, 0.0) + i_grid
    else:
        # Fault fed only by DER in its island; every injection arrives fully.
        for der in network.ders:
            if not injecting.get(der.id) or der.i_max_pu <= 0:
                continue
            if not tree.contains(der.bus):
                continue
            _add_flow(tree, currents, der.bus, fault_node, der.i_max_pu)
            i_fault += der.i_max_pu
            contributions[der.id] = der.i_max_pu
            arrivals[der.id] = der.i_max_pu
            inj[der.bus] = inj.get(der.bus, 0.0) + der.i_max_pu
        if i_fault == 0.0 and not allow_dead_fault:
            raise UnreachableFaultError(
                "fault is disconnected from the external source and from any "
                "injecting DER")

    inj[fault_node] = inj.get(fault_node, 0.0) - i_fault

    # Healthy load flow in the source component when the fault is elsewhere.
    if src_works and not src_feeds:
        i_grid = _solve_healthy(network, adjacency, currents, inj)

    return FaultSolution(branch_currents=currents, i_fault_pu=i_fault,
                         i_grid_pu=i_grid, der_contributions_pu=contributions,
                         der_fault_arrivals_pu=arrivals,
                         source_feeds_fault=src_feeds, bus_injections=inj)


def _path_down(tree: _Tree, node):
    return tree.path_edges(node)


def _nodes_on_root_path(tree: _Tree, node):
    path = set()
    while node is not None:
        path.add(node)
        node = tree.parent[node]
    return path


def _junction_on_path(tree: _Tree, node, on_path):
    while node not in on_path:
        node = tree.parent[node]
    return node


def _add_flow(tree: _Tree, currents, from_node, to_node, amount):
    """Add a flow along the unique tree path from from_node to to_node."""
    if amount == 0.0 or from_node == to_node:
        return
    up_from = {}
    n = from_node
    depth = 0
    while n is not None:
        up_from[n] = depth
        n = tree.parent[n]
        depth += 1
    # Climb from to_node to the meeting point, collecting reversed edges.
    rev = []
    n = to_node
    while n not in up_from:
        eid, sign = tree.parent_edge[n]
        rev.append((eid, sign))
        n = tree.parent[n]
    meet = n
    n = from_node
    while n != meet:
        eid, sign = tree.parent_edge[n]
        # Edge stored parent->n with given sign; flow goes n->parent here.
        currents[eid] += -sign * amount
        n = tree.parent[n]
    for eid, sign in reversed(rev):
        currents[eid] += sign * amount


def _solve_healthy(network: RadialNetwork, adjacency, currents, inj) -> float:
    """Load flow in the source component: net injections stream to the root."""
    src = network.source
    tree = _Tree(adjacency, src.bus)
    net_at: dict[str, float] = {}
    for der in network.ders:
        if der.injecting and tree.contains(der.bus):
            net_at[der.bus] = net_at.get(der.bus, 0.0) + der.i_max_pu
            inj[der.bus] = inj.get(der.bus, 0.0) + der.i_max_pu
    for load in network.loads:
        if tree.contains(load.bus):
            net_at[load.bus] = net_at.get(load.bus, 0.0) - load.current_pu
            inj[load.bus] = inj.get(load.bus, 0.0) - load.current_pu
    total = 0.0
    for bus, amount in sorted(net_at.items()):
        _add_flow(tree, currents, bus, src.bus, amount)
        total += amount
    i_grid = -total  # grid supplies the net draw
    inj[src.bus] = inj.get(src.bus, 0.0) + i_grid
    return i_grid


def source_fault_path_lines(network: RadialNetwork, fault: FaultScenario) -> set[str]:
    """Line ids on the topological path from the source bus to the fault."""
    edges = _edges_for(network, fault)
    adjacency = _build_adjacency(edges, frozenset())
    tree = _Tree(adjacency, network.source.bus)
    fault_node = _fault_node_for(network, fault)
    if not tree.contains(fault_node):
        return set()
    lines = set()
    node = fault_node
    while tree.parent[node] is not None:
        eid, _sign = tree.parent_edge[node]
        lines.add(eid[:-len(_FAR_SUFFIX)] if eid.endswith(_FAR_SUFFIX) else eid)
        node = tree.parent[node]
    return lines


def simulate_protection(network: RadialNetwork, fault: FaultScenario,
                        settings: dict[str, float]) -> ProtectionReport:
    """Run the breaker reaction to a fault to its fixpoint and screen it.

    Iteratively solves the fault currents, arms every closed breaker
    whose current exceeds its trip setting, trips the earliest deadline
    (simultaneous deadlines trip together), re-solves on the post-trip
    topology, and repeats until quiescent. Afterwards the three
    DER-induced misoperations are detected and attached.
    """
    missing = [b.id for b in network.breakers if b.id not in settings]
    if missing:
        raise InvalidInputError(f"settings: missing breakers: {', '.join(missing)}")

    initial = solve_fault_currents(network, fault, allow_dead_fault=True)
    path_lines = source_fault_path_lines(network, fault)

    open_lines: set[str] = set()
    tripped: list[TripEvent] = []
    armed: dict[str, float] = {}
    t_now = 0.0
    solution = initial
    for _ in range(len(network.breakers) + 1):
        over = set()
        for b in network.breakers:
            if b.line in open_lines:
                continue
            if solution.branch_magnitude(b.line) > settings[b.id]:
                over.add(b.id)
                if b.id not in armed:
                    armed[b.id] = t_now + b.delay_s
        for bid in list(armed):
            if bid not in over:
                del armed[bid]  # current receded before the delay elapsed
        if not armed:
            break
        t_next = min(armed.values())
        now_tripping = sorted(bid for bid, deadline in armed.items()
                              if deadline <= t_next + 1e-12)
        t_now = t_next
        for bid in now_tripping:
            breaker = next(b for b in network.breakers if b.id == bid)
            open_lines.add(breaker.line)
            tripped.append(TripEvent(breaker_id=bid, time_s=t_now))
            del armed[bid]
        solution = solve_fault_currents(network, fault, open_lines=open_lines,
                                        allow_dead_fault=True)

    issues: list[ProtectionIssue] = []

    # Blinding: a path breaker that stayed closed although the grid alone
    # would have tripped it.
    no_der = solve_fault_currents(
        network, fault, der_injecting={d.id: False for d in network.ders},
        allow_dead_fault=True)
    tripped_ids = {ev.breaker_id for ev in tripped}
    for b in network.breakers:
        if b.id in tripped_ids or b.line not in path_lines:
            continue
        i_with = initial.branch_magnitude(b.line)
        i_without = no_der.branch_magnitude(b.line)
        if i_with <= settings[b.id] < i_without:
            issues.append(ProtectionIssue(
                kind="Blinding", elements=(b.id, b.line),
                explanation=(
                    f"breaker {b.id} sees {i_with:.3f} pu with DER in-feed, "
                    f"below its {settings[b.id]:.3f} pu setting, but would see "
                    f"{i_without:.3f} pu from the grid alone")))

    for ev in tripped:
        breaker = next(b for b in network.breakers if b.id == ev.breaker_id)
        if breaker.line not in path_lines:
            issues.append(ProtectionIssue(
                kind="SympatheticTrip", elements=(breaker.id, breaker.line),
                explanation=(
                    f"breaker {breaker.id} is not on the source-fault path; "
                    f"it tripped on DER current feeding the fault from a "
                    f"healthy feeder")))

    issues.extend(detect_energized(network, open_lines))

    return ProtectionReport(trips=tuple(tripped), issues=tuple(issues),
                            open_lines=tuple(sorted(open_lines)))


def detect_energized(network: RadialNetwork, open_lines,
                     der_injecting=None) -> list[ProtectionIssue]:
    """Flag islanded segments kept energized by injecting DER.

    A segment is any maximal group of buses connected through closed
    lines that has no live path to an available external source.
    """
    open_lines = frozenset(open_lines)
    injecting = {d.id: d.injecting for d in network.ders}
    if der_injecting:
        injecting.update(der_injecting)
    adjacency: dict[str, set[str]] = {b: set() for b in network.buses}
    for ln in network.lines:
        if ln.id in open_lines:
            continue
        adjacency[ln.from_bus].add(ln.to_bus)
        adjacency[ln.to_bus].add(ln.from_bus)
    seen: set[str] = set()
    issues: list[ProtectionIssue] = []
    for start in network.buses:
        if start in seen:
            continue
        component = {start}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            for other in adjacency[node]:
                if other not in component:
                    component.add(other)
                    queue.append(other)
        seen |= component
        grid_connected = network.source.available and network.source.bus in component
        if grid_connected:
            continue
        live_ders = sorted(d.id for d in network.ders
                           if d.bus in component and injecting.get(d.id)
                           and d.i_max_pu > 0)
        if live_ders:
            issues.append(ProtectionIssue(
                kind="EnergizedAfterTrip",
                elements=tuple(sorted(component)) + tuple(live_ders),
                explanation=(
                    f"segment {{{', '.join(sorted(component))}}} is isolated "
                    f"from the external source but DER "
                    f"{', '.join(live_ders)} keep injecting")))
    return issues


@dataclass(frozen=True)
class TopologyKey:
    """Grid configuration a setting group is tied to."""

    islanded: bool
    connected_ders: frozenset[str]

    @classmethod
    def of(cls, islanded: bool, connected_ders) -> "TopologyKey":
        return cls(islanded=islanded, connected_ders=frozenset(connected_ders))


@dataclass(frozen=True)
class SettingGroupResult:
    settings: dict[str, float]
    held: bool                 # True when stale settings were kept


class SettingGroupTable:
    """Pre-configured relay settings per grid configuration.

    Lookup is exact-match on the topology key. On a miss the previously
    applied settings are kept (communication-failure hold rule); with no
    prior application a miss is an error.
    """

    def __init__(self, groups: dict[TopologyKey, dict[str, float]],
                 breaker_ids=None):
        if not groups:
            raise InvalidInputError("setting groups: table must be non-empty")
        if breaker_ids is not None:
            expected = set(breaker_ids)
            for key, settings in groups.items():
                missing = expected - set(settings)
                if missing:
                    raise InvalidInputError(
                        f"setting group {key}: missing breakers "
                        f"{', '.join(sorted(missing))}")
        self.groups = dict(groups)
        self._last: dict[str, float] | None = None

    @property
    def last_applied(self) -> dict[str, float] | None:
        return None if self._last is None else dict(self._last)


def apply_setting_group(table: SettingGroupTable, key: TopologyKey) -> SettingGroupResult:
    """Settings for a topology key, holding the previous ones on a miss."""
    group = table.groups.get(key)
    if group is not None:
        table._last = dict(group)
        return SettingGroupResult(settings=dict(group), held=False)
    if table._last is not None:
        return SettingGroupResult(settings=dict(table._last), held=True)
    raise UnconfiguredError(
        f"no setting group for {key} and no previously applied settings to hold")


@dataclass(frozen=True)
class FaultSignatureMap:
    """Expected per-DER fault arrivals per candidate location.

    Built offline by solving each candidate fault on the intact network
    with every DER injecting; the arrival shares differ by location
    because the impedance split toward the fault does.
    """

    network: RadialNetwork
    der_ids: tuple[str, ...]
    entries: dict[tuple[str, str], tuple[float, ...]]
    fault_impedance_pu: float
    position: float


def build_fault_signature_map(network: RadialNetwork, candidates=None,
                              fault_impedance_pu: float = 0.0,
                              position: float = 0.5) -> FaultSignatureMap:
    """Characterize every protectable element by its DER arrival vector."""
    if candidates is None:
        candidates = [("line", ln.id) for ln in network.lines]
    der_ids = tuple(sorted(d.id for d in network.ders))
    force_on = {d.id: True for d in network.ders}
    entries = {}
    for kind, element_id in candidates:
        fault = FaultScenario(element_kind=kind, element_id=element_id,
                              impedance_pu=fault_impedance_pu, position=position)
        sol = solve_fault_currents(network, fault, der_injecting=force_on,
                                   allow_dead_fault=True)
        entries[(kind, element_id)] = tuple(
            sol.der_fault_arrivals_pu.get(d, 0.0) for d in der_ids)
    return FaultSignatureMap(network=network, der_ids=der_ids, entries=entries,
                             fault_impedance_pu=fault_impedance_pu,
                             position=position)


@dataclass(frozen=True)
class LocateResult:
    """Located fault plus the trip plan and its verified effect.

    residual_fault_current_pu is the current still feeding the fault
    after the plan executes (failed breakers stay closed): nonzero means
    in-plan-region DER keep the fault alive, the signal the scheme keeps
    watching to decide on further escalation.
    """

    location: tuple[str, str]
    breakers_to_open: tuple[str, ...]
    escalated: bool
    cleared_from_source: bool
    residual_fault_current_pu: float


def centralized_locate_fault(measured: dict[str, float], fmap: FaultSignatureMap,
                             tolerance: float,
                             failed_breakers=frozenset()) -> LocateResult:
    """Match a measured per-DER injection vector to a fault location.

    The nearest stored signature wins if it lies within tolerance and
    beats the second-best by at least the tolerance. The result carries
    the closest isolating breakers; breakers reported failed are bypassed
    by escalating outward to the next one, and the plan is re-solved to
    report whether the fault persists.
    """
    if tolerance <= 0:
        raise InvalidInputError("tolerance: must be > 0")
    vec = tuple(measured.get(d, 0.0) for d in fmap.der_ids)
    if all(abs(v) <= 1e-12 for v in vec):
        raise NoFaultDetectedError("measurement vector is zero; grid looks healthy")
    ranked = sorted(
        ((math.dist(vec, sig), loc) for loc, sig in fmap.entries.items()),
        key=lambda pair: (pair[0], pair[1]))
    best_d, best_loc = ranked[0]
    if best_d > tolerance:
        raise NoFaultDetectedError(
            f"nearest signature ({best_loc[0]} {best_loc[1]}) is {best_d:.4f} pu "
            f"away, beyond tolerance {tolerance:g}")
    if len(ranked) > 1 and ranked[1][0] - best_d < tolerance:
        raise AmbiguousLocationError(
            f"{best_loc[0]} {best_loc[1]} and {ranked[1][1][0]} {ranked[1][1][1]} "
            f"both match within tolerance")
    breakers, escalated = _isolating_breakers(fmap.network, best_loc,
                                              set(failed_breakers),
                                              fmap.position)

    # Re-solve with the plan executed (failed breakers stay closed) to
    # check what still feeds the fault.
    kind, element_id = best_loc
    fault = FaultScenario(element_kind=kind, element_id=element_id,
                          impedance_pu=fmap.fault_impedance_pu,
                          position=fmap.position)
    plan_lines = {b.line for b in fmap.network.breakers if b.id in breakers}
    after = solve_fault_currents(fmap.network, fault, open_lines=plan_lines,
                                 allow_dead_fault=True)
    return LocateResult(location=best_loc,
                        breakers_to_open=tuple(sorted(breakers)),
                        escalated=escalated,
                        cleared_from_source=not after.source_feeds_fault,
                        residual_fault_current_pu=after.i_fault_pu)


def _isolating_breakers(network: RadialNetwork, location, failed: set[str],
                        position: float):
    """Smallest working-breaker cut around a fault location.

    Grows the de-energized region outward from the fault through lines
    without a working breaker; working breakers on the boundary form the
    plan. Escalation happens implicitly: a failed breaker is transparent,
    so the region grows past it to the next one out.
    """
    kind, element_id = location
    fault = FaultScenario(element_kind=kind, element_id=element_id,
                          impedance_pu=0.0, position=position)
    edges = _edges_for(network, fault)
    start = _fault_node_for(network, fault)
    by_node: dict[str, list] = {}
    for eid, a, b, z, line_id in edges:
        by_node.setdefault(a, []).append((eid, b, line_id))
        by_node.setdefault(b, []).append((eid, a, line_id))

    region = {start}
    plan: set[str] = set()
    escalated = False
    queue = deque([start])
    while queue:
        node = queue.popleft()
        for eid, other, line_id in by_node.get(node, ()):
            if other in region:
                continue
            working = [b for b in network.breakers_on(line_id)
                       if b.id not in failed]
            crossed_failed = [b for b in network.breakers_on(line_id)
                              if b.id in failed]
            # The far half of a split line carries no breaker.
            if eid.endswith(_FAR_SUFFIX):
                working = []
                crossed_failed = []
            if working:
                plan.update(b.id for b in working)
                continue
            if crossed_failed:
                escalated = True
            region.add(other)
            queue.append(other)
    src = network.source
    if src.available and src.bus in region:
        raise IsolationError(
            "no working breaker separates the fault from the external source")
    return plan, escalated

"""Network data model: instances, validation, DIMACS and JSON ingestion,
degree-1 preprocessing, residual graphs, cycle diagnostics, iteration
bounds, and the node-capacity splitting reduction.

Conventions.  Flow on an arc is bounded by ``0 <= x_e <= u_e`` with
``u_e = None`` meaning unbounded.  Node demands follow the net-supply
convention: ``sum over incident arcs of delta(v, e) * x_e = f_v`` where
``delta`` is +1 for out-arcs and -1 for in-arcs, so a positive ``f_v`` is a
source.  Arc costs are piecewise-linear convex functions defined on exactly
``[0, u_e]``; a plain linear cost is the single-piece special case.
Parallel arcs are permitted and are distinguished by arc id everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

from .errors import (
    BadCostDomainError,
    DemandImbalanceError,
    DimacsInconsistentError,
    DimacsSyntaxError,
    ForcedInfeasibleError,
    InfeasibleFlowError,
    NegativeCapacityError,
    NonZeroLowerBoundError,
    SelfLoopError,
)
from .pwl import POS_INF, PwlConvex

#: Sentinel for an uncapacitated arc (a real value, never a large number).
UNBOUNDED = None

Capacity = Union[int, None]


@dataclass(frozen=True)
class Arc:
    """A directed arc with integer capacity bounds and a convex cost."""

    id: int
    tail: int
    head: int
    capacity: Capacity
    cost: PwlConvex

    def delta(self, node: int) -> int:
        """+1 if this arc leaves ``node``, -1 if it enters it."""
        if node == self.tail:
            return 1
        if node == self.head:
            return -1
        raise ValueError(f"arc {self.id} is not incident to node {node}")


def linear_cost(slope: int, capacity: Capacity) -> PwlConvex:
    """The cost ``slope * z`` on ``[0, capacity]`` (``None`` = unbounded)."""
    hi = POS_INF if capacity is None else capacity
    if hi == 0:
        return PwlConvex.point(0, 0)
    return PwlConvex.linear(slope, 0, hi)


class FlowNetwork:
    """A validated min-cost-flow instance.

    Construction checks every structural invariant (no self-loops, balanced
    demands, costs defined on exactly the capacity interval, non-negative
    integral capacities) and caches the maximum absolute cost slope and the
    node adjacency.  Instances are immutable; derive modified copies via the
    module's transformation helpers.
    """

    __slots__ = ("demands", "arcs", "arc_by_id", "incident", "c_max")

    def __init__(self, demands: Mapping[int, int], arcs: Iterable[Arc]):
        arcs = tuple(arcs)
        demands = dict(demands)
        for v, f in demands.items():
            if not isinstance(v, int) or isinstance(f, bool) or not isinstance(f, int):
                raise ValueError(f"node ids and demands must be integers: {v}: {f}")
        if sum(demands.values()) != 0:
            raise DemandImbalanceError(f"demands sum to {sum(demands.values())}, not 0")
        by_id: dict[int, Arc] = {}
        for a in arcs:
            if a.tail == a.head:
                raise SelfLoopError(f"arc {a.id} is a self-loop at node {a.tail}")
            if a.tail not in demands or a.head not in demands:
                raise ValueError(f"arc {a.id} touches an undeclared node")
            if a.id in by_id:
                raise ValueError(f"duplicate arc id {a.id}")
            if a.capacity is not None and (not isinstance(a.capacity, int) or a.capacity < 0):
                raise NegativeCapacityError(f"arc {a.id} capacity {a.capacity!r}")
            hi = POS_INF if a.capacity is None else a.capacity
            if a.cost.domain != (0, hi):
                raise BadCostDomainError(
                    f"arc {a.id} cost domain {a.cost.domain} != [0, {hi}]"
                )
            by_id[a.id] = a
        self.demands = demands
        self.arcs = arcs
        self.arc_by_id = by_id
        inc: dict[int, list[tuple[Arc, int]]] = {v: [] for v in demands}
        for a in arcs:
            inc[a.tail].append((a, 1))
            inc[a.head].append((a, -1))
        self.incident = {v: tuple(l) for v, l in inc.items()}
        self.c_max = max(
            (max(abs(s) for s in a.cost.slopes) if a.cost.slopes else 0 for a in arcs),
            default=0,
        )

    # -- convenience construction -------------------------------------------

    @classmethod
    def from_data(
        cls,
        demands: Mapping[int, int],
        arc_specs: Iterable[tuple],
    ) -> "FlowNetwork":
        """Build from ``(id, tail, head, capacity, cost)`` tuples.

        ``cost`` may be a plain integer slope (shorthand for a linear cost
        on ``[0, capacity]``) or a ready :class:`PwlConvex`.
        """
        arcs = []
        for aid, tail, head, cap, cost in arc_specs:
            if isinstance(cost, int):
                cost = linear_cost(cost, cap)
            arcs.append(Arc(aid, tail, head, cap, cost))
        return cls(demands, arcs)

    # -- basic queries -------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.demands)

    @property
    def m(self) -> int:
        return len(self.arcs)

    def degree(self, v: int) -> int:
        return len(self.incident[v])

    def is_linear(self) -> bool:
        """True when every arc cost is a single linear piece."""
        return all(a.cost.piece_count <= 1 for a in self.arcs)

    def linear_slope(self, arc: Arc) -> int:
        if arc.cost.piece_count > 1:
            raise ValueError(f"arc {arc.id} has a multi-piece cost")
        return arc.cost.slopes[0] if arc.cost.slopes else 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, FlowNetwork):
            return NotImplemented
        return self.demands == other.demands and self.arcs == other.arcs

    def __hash__(self):
        return hash((tuple(sorted(self.demands.items())), self.arcs))

    def __repr__(self) -> str:
        return f"FlowNetwork(n={self.n}, m={self.m}, c_max={self.c_max})"


@dataclass
class FlowAssignment:
    """An arc-id -> flow map with its objective value.

    ``feasible`` records whether the assignment satisfied all bounds and
    conservation constraints when it was produced; mid-run estimates from
    the message-passing solver may legitimately carry ``feasible=False``.
    ``ties`` lists arcs whose belief was flat at the minimum when the
    assignment came out of the solver (potentially non-unique optimum).
    """

    flows: dict[int, int]
    objective: int
    feasible: bool = True
    ties: tuple[int, ...] = ()

    def value(self, arc_id: int) -> int:
        return self.flows[arc_id]


def objective_value(network: FlowNetwork, flows: Mapping[int, int]):
    """Total cost of ``flows`` under the network's own cost functions."""
    total = 0
    for a in network.arcs:
        v = a.cost.evaluate(flows.get(a.id, 0))
        if v == POS_INF:
            return POS_INF
        total += v
    return total


def check_feasible(network: FlowNetwork, flows: Mapping[int, int]) -> bool:
    """Exact bounds-and-conservation check."""
    for a in network.arcs:
        x = flows.get(a.id, 0)
        if x < 0:
            return False
        if a.capacity is not None and x > a.capacity:
            return False
    for v, f in network.demands.items():
        bal = sum(delta * flows.get(a.id, 0) for a, delta in network.incident[v])
        if bal != f:
            return False
    return True


def make_assignment(network: FlowNetwork, flows: Mapping[int, int]) -> FlowAssignment:
    """Package flows with a recomputed objective and feasibility flag."""
    obj = objective_value(network, flows)
    feas = obj != POS_INF and check_feasible(network, flows)
    return FlowAssignment(dict(flows), obj, feas)


# ---------------------------------------------------------------------------
# DIMACS and JSON formats


def parse_dimacs(text: str) -> FlowNetwork:
    """Parse the DIMACS minimum-cost-flow format.

    Recognized lines: ``c`` comments, one ``p min <n> <m>`` header,
    ``n <id> <flow>`` node lines (positive flow = supply; absent nodes get
    zero), and ``a <src> <dst> <low> <cap> <cost>`` arc lines.  Lower bounds
    must be zero.  Arcs receive ids 1..m in file order.
    """
    header = None
    node_lines: list[tuple[int, int]] = []
    arc_lines: list[tuple[int, int, int, int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        try:
            if parts[0] == "p":
                if header is not None:
                    raise DimacsSyntaxError(f"line {lineno}: duplicate problem line")
                if len(parts) != 4 or parts[1] != "min":
                    raise DimacsSyntaxError(f"line {lineno}: expected 'p min <n> <m>'")
                header = (int(parts[2]), int(parts[3]))
            elif parts[0] == "n":
                if len(parts) != 3:
                    raise DimacsSyntaxError(f"line {lineno}: expected 'n <id> <flow>'")
                node_lines.append((int(parts[1]), int(parts[2])))
            elif parts[0] == "a":
                if len(parts) != 6:
                    raise DimacsSyntaxError(
                        f"line {lineno}: expected 'a <src> <dst> <low> <cap> <cost>'"
                    )
                arc_lines.append(tuple(int(p) for p in parts[1:]))
            else:
                raise DimacsSyntaxError(f"line {lineno}: unknown descriptor {parts[0]!r}")
        except ValueError as exc:
            raise DimacsSyntaxError(f"line {lineno}: {exc}") from exc
    if header is None:
        raise DimacsSyntaxError("missing 'p min' problem line")
    n, m = header
    if len(arc_lines) != m:
        raise DimacsInconsistentError(f"header declares {m} arcs, found {len(arc_lines)}")
    demands = {v: 0 for v in range(1, n + 1)}
    for v, f in node_lines:
        if v not in demands:
            raise DimacsInconsistentError(f"node id {v} outside 1..{n}")
        demands[v] += f
    specs = []
    for i, (src, dst, low, cap, cost) in enumerate(arc_lines, start=1):
        if src not in demands or dst not in demands:
            raise DimacsInconsistentError(f"arc {i} endpoint outside 1..{n}")
        if low != 0:
            raise NonZeroLowerBoundError(f"arc {i} has lower bound {low}; only 0 is supported")
        specs.append((i, src, dst, cap, cost))
    return FlowNetwork.from_data(demands, specs)


def emit_dimacs(network: FlowNetwork) -> str:
    """Write the DIMACS form of a linear-cost, finite-capacity instance.

    Node ids must already be 1..n.  Arcs are emitted in id order, so
    ``parse_dimacs(emit_dimacs(net)) == net`` for canonical instances.
    """
    if sorted(network.demands) != list(range(1, network.n + 1)):
        raise ValueError("DIMACS output requires node ids 1..n")
    lines = [f"p min {network.n} {network.m}"]
    for v in sorted(network.demands):
        if network.demands[v] != 0:
            lines.append(f"n {v} {network.demands[v]}")
    for a in sorted(network.arcs, key=lambda a: a.id):
        if a.capacity is None:
            raise ValueError("DIMACS output requires finite capacities")
        lines.append(f"a {a.tail} {a.head} 0 {a.capacity} {network.linear_slope(a)}")
    return "\n".join(lines) + "\n"


INSTANCE_SCHEMA = "flowbp-instance-1"


def network_to_json_dict(network: FlowNetwork) -> dict:
    """Canonical JSON form; covers unbounded capacities and PWL costs."""
    arcs = []
    for a in sorted(network.arcs, key=lambda a: a.id):
        cost = (
            network.linear_slope(a)
            if a.cost.piece_count <= 1 and a.cost.evaluate(0) == 0
            else a.cost.to_json_dict()
        )
        arcs.append(
            {
                "id": a.id,
                "tail": a.tail,
                "head": a.head,
                "capacity": a.capacity,
                "cost": cost,
            }
        )
    return {
        "schema": INSTANCE_SCHEMA,
        "nodes": [
            {"id": v, "demand": network.demands[v]} for v in sorted(network.demands)
        ],
        "arcs": arcs,
    }


def network_from_json_dict(d: dict) -> FlowNetwork:
    demands = {nd["id"]: nd["demand"] for nd in d["nodes"]}
    specs = []
    for ad in d["arcs"]:
        cost = ad["cost"]
        if isinstance(cost, dict):
            cost = PwlConvex.from_json_dict(cost)
        specs.append((ad["id"], ad["tail"], ad["head"], ad["capacity"], cost))
    return FlowNetwork.from_data(demands, specs)


# ---------------------------------------------------------------------------
# Degree-1 preprocessing


def preprocess_degree(network: FlowNetwork) -> tuple[FlowNetwork, dict[int, int]]:
    """Eliminate forced structure until every node has degree >= 2.

    Isolated nodes are dropped (their demand must be zero) and the single
    arc at a degree-1 node carries a forced flow determined by the node's
    demand; the opposite endpoint's demand is adjusted and the arc removed.
    Returns the reduced network and the map of forced arc flows.  Raises
    :class:`ForcedInfeasibleError` when a forced flow violates its bounds
    or an isolated node keeps nonzero demand.
    """
    demands = dict(network.demands)
    alive: dict[int, Arc] = dict(network.arc_by_id)
    incident: dict[int, set[int]] = {v: set() for v in demands}
    for a in network.arcs:
        incident[a.tail].add(a.id)
        incident[a.head].add(a.id)
    fixed: dict[int, int] = {}
    queue = [v for v, ids in incident.items() if len(ids) <= 1]
    while queue:
        v = queue.pop()
        if v not in incident or len(incident[v]) > 1:
            continue
        if not incident[v]:
            if demands[v] != 0:
                raise ForcedInfeasibleError(
                    f"isolated node {v} has nonzero demand {demands[v]}"
                )
            del incident[v]
            del demands[v]
            continue
        (aid,) = incident[v]
        arc = alive.pop(aid)
        x = arc.delta(v) * demands[v]
        hi = POS_INF if arc.capacity is None else arc.capacity
        if not (0 <= x <= hi):
            raise ForcedInfeasibleError(
                f"degree-1 node {v} forces flow {x} on arc {aid} outside [0, {hi}]"
            )
        fixed[aid] = x
        w = arc.head if v == arc.tail else arc.tail
        demands[w] -= arc.delta(w) * x
        del incident[v]
        del demands[v]
        incident[w].discard(aid)
        if len(incident[w]) <= 1:
            queue.append(w)
    reduced = FlowNetwork(demands, [alive[aid] for aid in sorted(alive)])
    return reduced, fixed


# ---------------------------------------------------------------------------
# Residual graphs and cycle diagnostics


@dataclass(frozen=True)
class ResidualArc:
    arc_id: int
    forward: bool
    tail: int
    head: int
    cost: int


@dataclass(frozen=True)
class ResidualGraph:
    nodes: tuple[int, ...]
    arcs: tuple[ResidualArc, ...]


def residual_graph(network: FlowNetwork, flows: Mapping[int, int]) -> ResidualGraph:
    """Residual arcs around a feasible flow.

    A forward arc exists where flow can still increase, priced at the cost's
    right derivative; a backward arc where it can decrease, priced at minus
    the left derivative.  For linear costs these are ``c_e`` and ``-c_e``.
    """
    if not check_feasible(network, flows):
        raise InfeasibleFlowError("flow violates bounds or conservation")
    rarcs = []
    for a in network.arcs:
        x = flows.get(a.id, 0)
        hi = POS_INF if a.capacity is None else a.capacity
        if x < hi:
            rarcs.append(ResidualArc(a.id, True, a.tail, a.head, a.cost.right_derivative(x)))
        if x > 0:
            rarcs.append(ResidualArc(a.id, False, a.head, a.tail, -a.cost.left_derivative(x)))
    return ResidualGraph(tuple(sorted(network.demands)), tuple(rarcs))


class _Sentinel:
    __slots__ = ("_name",)

    def __init__(self, name: str):
        self._name = name

    def __repr__(self) -> str:
        return self._name


#: min_cycle_cost outcome when the residual graph has no directed cycle.
NO_CYCLE = _Sentinel("NO_CYCLE")
#: min_cycle_cost outcome when some directed cycle has negative cost.
NEGATIVE_CYCLE = _Sentinel("NEGATIVE_CYCLE")


def _bellman_ford(nodes, arcs, src):
    dist = {v: POS_INF for v in nodes}
    dist[src] = 0
    for _ in range(len(nodes) - 1):
        changed = False
        for ra in arcs:
            d = dist[ra.tail]
            if d != POS_INF and d + ra.cost < dist[ra.head]:
                dist[ra.head] = d + ra.cost
                changed = True
        if not changed:
            break
    return dist


def min_cycle_cost(residual: ResidualGraph):
    """Minimum cost of a genuine directed cycle in the residual graph.

    The two residual copies of one arc traverse the same flow change in
    opposite directions, so a "cycle" made of exactly that pair moves no
    flow; such pairs are excluded.  Returns :data:`NEGATIVE_CYCLE` when any
    genuine cycle is negative, :data:`NO_CYCLE` when the graph is acyclic,
    and the exact minimum cycle cost otherwise (shortest-path based: for
    each residual arc, the cheapest return path that avoids the arc's own
    reverse copy).
    """
    nodes, arcs = residual.nodes, residual.arcs
    # Negative closed walks always contain a genuine negative cycle because
    # same-arc pairs never have negative total cost (convexity), so plain
    # relaxation from an implicit super-source detects exactly them.
    dist = {v: 0 for v in nodes}
    for _ in range(len(nodes)):
        changed = False
        for ra in arcs:
            if dist[ra.tail] + ra.cost < dist[ra.head]:
                dist[ra.head] = dist[ra.tail] + ra.cost
                changed = True
        if not changed:
            break
    else:
        if any(dist[ra.tail] + ra.cost < dist[ra.head] for ra in arcs):
            return NEGATIVE_CYCLE
    best = POS_INF
    for ra in arcs:
        rest = [
            other
            for other in arcs
            if not (other.arc_id == ra.arc_id and other.forward != ra.forward)
        ]
        dist = _bellman_ford(residual.nodes, rest, ra.head)
        back = dist[ra.tail]
        if back != POS_INF:
            best = min(best, back + ra.cost)
    return NO_CYCLE if best == POS_INF else best


# ---------------------------------------------------------------------------
# Iteration bounds


def iteration_bound(network: FlowNetwork, mode: str) -> int:
    """Round budget for the message-passing solver on integral data.

    ``uniqueness`` is the budget under which the final-belief gap test is a
    complete uniqueness detector: ``n^2 * c_max + n``.  ``convergence`` is
    the budget guaranteeing the estimate equals a unique optimum:
    ``(floor(L/2) + 1) * n`` with the path-cost surrogate
    ``L = (n - 1) * c_max`` and the integral-data cycle gap lower bound 1.
    """
    n, c = network.n, network.c_max
    if mode == "uniqueness":
        return n * n * c + n
    if mode == "convergence":
        return ((n - 1) * c // 2 + 1) * n
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# Node-capacity splitting


@dataclass(frozen=True)
class SplitResult:
    """Outcome of the node-capacity splitting reduction.

    ``network`` is the ordinary min-cost-flow instance; original arc ids
    are preserved (so an optimal flow projects back by simply restricting
    to them), ``node_map`` sends each original node to its (in, out) pair,
    and ``bridge_arcs`` maps each original node to its bridge arc id.
    """

    network: FlowNetwork
    node_map: dict[int, tuple[int, int]]
    bridge_arcs: dict[int, int]


def split_node_capacities(
    network: FlowNetwork, inflow_caps: Mapping[int, Capacity]
) -> SplitResult:
    """Reduce per-node inflow caps to plain arc capacities.

    Every node ``v`` becomes ``v_in`` (demand 0, receiving all in-arcs) and
    ``v_out`` (demand ``f_v``, emitting all out-arcs), joined by a zero-cost
    bridge arc of capacity ``inflow_caps[v]``.  Solving the result and
    restricting to original arc ids solves the node-capacitated problem.
    """
    node_map: dict[int, tuple[int, int]] = {}
    demands: dict[int, int] = {}
    nxt = 1
    for v in sorted(network.demands):
        node_map[v] = (nxt, nxt + 1)
        demands[nxt] = 0
        demands[nxt + 1] = network.demands[v]
        nxt += 2
    arcs = []
    for a in network.arcs:
        arcs.append(Arc(a.id, node_map[a.tail][1], node_map[a.head][0], a.capacity, a.cost))
    bridge_ids: dict[int, int] = {}
    next_id = max((a.id for a in network.arcs), default=0) + 1
    for v in sorted(network.demands):
        cap = inflow_caps.get(v, UNBOUNDED)
        vin, vout = node_map[v]
        arcs.append(Arc(next_id, vin, vout, cap, linear_cost(0, cap)))
        bridge_ids[v] = next_id
        next_id += 1
    return SplitResult(FlowNetwork(demands, arcs), node_map, bridge_ids)

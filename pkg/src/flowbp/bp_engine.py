"""Round-synchronous min-sum message passing for min-cost flow.

Each arc keeps one cost-to-go function per endpoint.  The message an arc
sends toward one endpoint summarizes the cheapest way the rest of the
network behind its *other* endpoint can absorb each candidate flow value:
the neighbor messages at that endpoint are combined under the conservation
constraint (a signed infimal convolution), re-parametrized to the arc's own
flow, and the arc's own cost is added.  All messages are exact
piecewise-linear convex functions, so rounds are pure integer algebra.

The per-arc belief combines the two directed messages and subtracts the arc
cost once (each directed message already includes it); its minimizer is the
flow estimate.  On integral instances with a unique optimum the estimate is
exactly optimal once the round count reaches the convergence bound, and a
strict gap in the final beliefs detects uniqueness itself.

A fixed point of the message *shapes* (messages modulo one additive
constant each) is a fixed point of everything the estimate and the gap test
depend on, because one round shifts each new message by a constant when its
inputs are shifted by constants.  The periodicity-aware runner below
exploits that to answer "state at round N" without executing all N rounds;
results are provably identical, and it is used where N is astronomically
conservative.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

from .errors import InfeasibleFlowError
from .flowmodel import (
    FlowAssignment,
    FlowNetwork,
    check_feasible,
    iteration_bound,
    make_assignment,
    objective_value,
    preprocess_degree,
)
from .pwl import POS_INF, PwlConvex, pointwise_diff, scaled_interpolation

MessageKey = tuple[int, int]  # (arc id, endpoint the message points to)


@dataclass
class MessageState:
    """Message table at one round: exactly two entries per arc."""

    round: int
    messages: dict[MessageKey, PwlConvex]

    def message(self, arc_id: int, endpoint: int) -> PwlConvex:
        return self.messages[(arc_id, endpoint)]


@dataclass(frozen=True)
class _Recipe:
    key: MessageKey
    phi: PwlConvex
    scale: int  # -delta(w, e) where w is the far endpoint
    shift: int  # demand at the far endpoint
    sources: tuple[MessageKey, ...]
    signs: tuple[int, ...]


@lru_cache(maxsize=128)
def _recipes(network: FlowNetwork) -> tuple[_Recipe, ...]:
    out = []
    for a in network.arcs:
        for to_end, far_end in ((a.tail, a.head), (a.head, a.tail)):
            far_delta = a.delta(far_end)
            sources = []
            signs = []
            for other, delta in network.incident[far_end]:
                if other.id == a.id:
                    continue
                sources.append((other.id, far_end))
                signs.append(delta)
            out.append(
                _Recipe(
                    key=(a.id, to_end),
                    phi=a.cost,
                    scale=-far_delta,
                    shift=network.demands[far_end],
                    sources=tuple(sources),
                    signs=tuple(signs),
                )
            )
    return tuple(out)


def init_messages(network: FlowNetwork) -> MessageState:
    """Round-0 table: every message is the all-zero function on R."""
    zero = PwlConvex.constant(0)
    table = {r.key: zero for r in _recipes(network)}
    return MessageState(0, table)


def _apply_recipe(recipe: _Recipe, prev: dict[MessageKey, PwlConvex]) -> PwlConvex:
    combined = scaled_interpolation(
        [prev[k] for k in recipe.sources], list(recipe.signs)
    )
    return recipe.phi.add(combined.compose_affine(recipe.scale, recipe.shift))


def update_round(
    network: FlowNetwork, state: MessageState, threads: int = 1, normalize: bool = False
) -> MessageState:
    """One synchronous round: every message recomputed from the previous
    table only.  The 2m computations are independent; with ``threads > 1``
    they run on a pool and are merged in fixed order, so the result does
    not depend on scheduling.

    ``normalize`` re-anchors each new message at its minimum.  Estimates
    and belief differences are unchanged, but absolute belief heights are
    not preserved, so it is off by default and meant for memory
    experiments (absolute message heights otherwise grow with the round
    count)."""
    recipes = _recipes(network)
    prev = state.messages
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(lambda r: _apply_recipe(r, prev), recipes))
    else:
        values = [_apply_recipe(r, prev) for r in recipes]
    if normalize:
        values = [
            PwlConvex(v.breakpoints, v.slopes, (v.anchor[0], v.anchor[1] - v.min_value()))
            for v in values
        ]
    return MessageState(state.round + 1, {r.key: v for r, v in zip(recipes, values)})


def belief(network: FlowNetwork, state: MessageState, arc_id: int) -> PwlConvex:
    """Per-arc cost-to-go at the current round.

    Both directed messages of the arc include the arc's own cost, so the
    belief is their sum minus that cost, on the arc's flow domain.
    """
    a = network.arc_by_id[arc_id]
    m_to_tail = state.messages[(arc_id, a.tail)]
    m_to_head = state.messages[(arc_id, a.head)]
    return pointwise_diff(m_to_tail.add(m_to_head), a.cost)


def estimate(network: FlowNetwork, state: MessageState) -> FlowAssignment:
    """Smallest belief minimizer per arc, with recomputed objective.

    Mid-run estimates need not be feasible; the flag says whether this one
    is.  Arcs whose belief is flat at the minimum (a tie, so the instance
    cannot have a unique optimum if this persists) are recorded in
    ``ties``.
    """
    flows = {}
    ties = []
    for a in network.arcs:
        b = belief(network, state, a.id)
        z = b.argmin()
        flows[a.id] = z
        if b.evaluate(z + 1) == b.evaluate(z):
            ties.append(a.id)
    out = make_assignment(network, flows)
    out.ties = tuple(ties)
    return out


def check_message_invariants(network: FlowNetwork, state: MessageState) -> None:
    """Assert the structural bounds every round must satisfy on integral
    instances: integer breakpoints, integer slopes, |slope| <= round * c_max."""
    bound = state.round * network.c_max
    for (aid, v), m in state.messages.items():
        for b in m.breakpoints:
            if b not in (POS_INF, float("-inf")) and not isinstance(b, int):
                raise AssertionError(f"non-integral breakpoint {b!r} in message {(aid, v)}")
        for s in m.slopes:
            if not isinstance(s, int):
                raise AssertionError(f"non-integral slope {s!r} in message {(aid, v)}")
            if abs(s) > bound:
                raise AssertionError(
                    f"slope {s} exceeds bound {bound} at round {state.round} in {(aid, v)}"
                )


@dataclass
class RunResult:
    assignment: FlowAssignment
    state: Optional[MessageState]
    rounds_used: int
    executed_rounds: int
    fixed_flows: dict[int, int]
    piece_totals: list[int] = field(default_factory=list)


def _merged_assignment(
    network: FlowNetwork,
    reduced: FlowNetwork,
    fixed: dict[int, int],
    reduced_estimate: Optional[FlowAssignment],
) -> FlowAssignment:
    flows = dict(fixed)
    ties: tuple[int, ...] = ()
    if reduced_estimate is not None:
        flows.update(reduced_estimate.flows)
        ties = reduced_estimate.ties
    out = make_assignment(network, flows)
    out.ties = ties
    return out


def run(
    network: FlowNetwork,
    rounds: Optional[int] = None,
    patience: Optional[int] = None,
    threads: int = 1,
    normalize: bool = False,
    on_round: Optional[Callable[[FlowNetwork, MessageState], None]] = None,
    dump_sink: Optional[Callable[[dict], None]] = None,
) -> RunResult:
    """Full solve: preprocess, run message rounds, read off the estimate.

    ``rounds=None`` uses the convergence bound of the reduced instance,
    under which the estimate equals the optimum whenever the optimum is
    unique.  ``patience`` enables an early exit once the estimate has been
    unchanged that many consecutive rounds; it is a heuristic (off by
    default) and forfeits the guarantee.  ``normalize`` re-anchors messages
    at zero each round (see :func:`update_round`).  Degree-1-forced flows
    are merged back into the returned assignment.
    """
    reduced, fixed = preprocess_degree(network)
    if reduced.m == 0:
        assignment = _merged_assignment(network, reduced, fixed, None)
        if not assignment.feasible:
            raise InfeasibleFlowError("forced flows are not feasible")
        return RunResult(assignment, None, 0, 0, fixed)
    total = iteration_bound(reduced, "convergence") if rounds is None else rounds
    state = init_messages(reduced)
    piece_totals = []
    last_flows = None
    streak = 0
    executed = 0
    for _ in range(total):
        state = update_round(reduced, state, threads=threads, normalize=normalize)
        executed += 1
        piece_totals.append(sum(m.piece_count for m in state.messages.values()))
        if on_round is not None:
            on_round(reduced, state)
        if dump_sink is not None:
            dump_sink(dump_round(state))
        if patience is not None:
            flows = {a.id: belief(reduced, state, a.id).argmin() for a in reduced.arcs}
            if flows == last_flows:
                streak += 1
                if streak >= patience:
                    break
            else:
                last_flows, streak = flows, 0
    assignment = _merged_assignment(network, reduced, fixed, estimate(reduced, state))
    return RunResult(assignment, state, total, executed, fixed, piece_totals)


def dump_round(state: MessageState) -> dict:
    """JSON-ready snapshot of one round's message table."""
    return {
        "round": state.round,
        "messages": [
            {"arc": aid, "to": node, "fn": m.to_json_dict()}
            for (aid, node), m in state.messages.items()
        ],
    }


# ---------------------------------------------------------------------------
# Periodicity-aware execution and the uniqueness gap test


def _drift_signature(state: MessageState):
    """Table identity modulo one additive constant and one slope tilt per
    message: breakpoints plus slope increments.  Two rounds with equal
    signatures differ exactly by ``alpha_k * z + beta_k`` per message."""
    return tuple(
        (m.breakpoints, tuple(s - m.slopes[0] for s in m.slopes))
        for m in state.messages.values()
    )


def _tilt_vector(state: MessageState):
    """First slope per message (None for point indicators)."""
    return tuple(m.slopes[0] if m.slopes else None for m in state.messages.values())


def _invariant_tilt(recipes, old_tilts, new_tilts) -> Optional[dict[MessageKey, int]]:
    """Check that one round maps the observed affine offset to itself.

    ``alpha_k`` is each message's slope shift between the two matched
    rounds.  A round preserves the offsets exactly when, for every message
    recipe, the source shifts factor through the conservation constraint
    (``alpha = c * sign`` for one constant ``c`` per recipe, point
    indicators free) and the implied output shift ``c * scale`` equals the
    observed one.  Returns the shift per message key, or None when the
    pattern is not invariant.
    """
    alpha: dict[MessageKey, Optional[int]] = {}
    for r, old, new in zip(recipes, old_tilts, new_tilts):
        if (old is None) != (new is None):
            return None
        alpha[r.key] = None if old is None else new - old
    for r in recipes:
        c = None
        for k, sign in zip(r.sources, r.signs):
            a = alpha[k]
            if a is None:
                continue
            cand = a * sign
            if c is None:
                c = cand
            elif c != cand:
                return None
        out = alpha[r.key]
        if out is None:
            continue
        if c is None:
            # every source is a point indicator, so the output must be one
            # too; a sloped output cannot match
            return None
        if out != c * r.scale:
            return None
    return {k: (0 if a is None else a) for k, a in alpha.items()}


@dataclass
class _Advanced:
    """Executed state plus the affine correction that turns its beliefs
    into round-``target`` beliefs (up to per-arc additive constants)."""

    state: MessageState
    executed: int
    periods: int
    alpha: Optional[dict[MessageKey, int]]  # per-period slope shift


def _advance(
    reduced: FlowNetwork,
    target: int,
    threads: int = 1,
    max_distinct: Optional[int] = None,
) -> _Advanced:
    """Execute rounds until an affine-periodic orbit is verified, then
    reduce the remaining rounds modulo the period.

    On loopy graphs the message table eventually repeats up to an affine
    offset per message (slopes keep drifting by the accumulated cycle
    cost).  Once two rounds match and :func:`_invariant_tilt` certifies
    the offset is reproduced by the update, round ``target``'s table equals
    the executed table plus ``periods`` copies of the offset, exactly.
    Falls back to literal execution when no orbit is found.
    """
    state = init_messages(reduced)
    recipes = _recipes(reduced)
    seen: dict[tuple, list[tuple[int, tuple]]] = {}
    executed = 0
    t = 0
    while t < target:
        if max_distinct is None or len(seen) < max_distinct:
            sig = _drift_signature(state)
            tilts = _tilt_vector(state)
            for prev_t, prev_tilts in seen.get(sig, ()):
                period = t - prev_t
                per_period = _invariant_tilt(recipes, prev_tilts, tilts)
                if per_period is None:
                    continue
                remainder = (target - t) % period
                for _ in range(remainder):
                    state = update_round(reduced, state, threads=threads)
                    executed += 1
                exec_round = t + remainder
                periods = (target - exec_round) // period
                assert exec_round + periods * period == target
                return _Advanced(
                    MessageState(target, state.messages), executed, periods, per_period
                )
            bucket = seen.setdefault(sig, [])
            bucket.append((t, tilts))
            if len(bucket) > 64:  # matches use short periods; bound the scans
                del bucket[0]
        state = update_round(reduced, state, threads=threads)
        executed += 1
        t += 1
    return _Advanced(MessageState(target, state.messages), executed, 0, None)


def beliefs_at_round(
    reduced: FlowNetwork, target: int, threads: int = 1
) -> tuple[dict[int, PwlConvex], int]:
    """Round-``target`` beliefs, each exact up to an additive constant.

    Uses the periodic-orbit shortcut when available: the two directed
    offsets of an arc add up inside its belief, so the executed belief
    plус ``periods * (alpha_tail + alpha_head)`` extra slope is the
    round-``target`` belief up to a constant.  Everything downstream
    (minimizers, gap comparisons) only reads belief differences.
    """
    adv = _advance(reduced, target, threads=threads)
    out = {}
    for a in reduced.arcs:
        b = belief(reduced, adv.state, a.id)
        if adv.alpha is not None and adv.periods:
            b = b.tilt(
                adv.periods * (adv.alpha[(a.id, a.tail)] + adv.alpha[(a.id, a.head)])
            )
        out[a.id] = b
    return out, adv.executed


def advance_to_round(
    reduced: FlowNetwork, target: int, threads: int = 1
) -> tuple[MessageState, int]:
    """Backward-compatible wrapper returning the executed state only."""
    adv = _advance(reduced, target, threads=threads)
    return adv.state, adv.executed


def gap_test(
    reduced: FlowNetwork, beliefs: dict[int, PwlConvex], threshold: int
) -> tuple[bool, FlowAssignment]:
    """The strict final-belief gap test and the accompanying estimate.

    Uniqueness holds iff for every arc the belief one unit away from its
    smallest minimizer exceeds the minimizer's belief by strictly more than
    ``threshold`` (out-of-domain neighbors are infinitely worse and pass
    vacuously).  Only belief differences are read, so beliefs known up to
    additive constants are fine.
    """
    unique = True
    flows = {}
    ties = []
    for a in reduced.arcs:
        b = beliefs[a.id]
        z = b.argmin()
        flows[a.id] = z
        here = b.evaluate(z)
        if min(b.evaluate(z - 1), b.evaluate(z + 1)) <= threshold + here:
            unique = False
        if b.evaluate(z + 1) == here:
            ties.append(a.id)
    out = make_assignment(reduced, flows)
    out.ties = tuple(ties)
    return unique, out


@dataclass
class UniquenessResult:
    unique: bool
    assignment: Optional[FlowAssignment]
    rounds_used: int
    executed_rounds: int


def detect_uniqueness(
    network: FlowNetwork, threads: int = 1, fast: bool = True
) -> UniquenessResult:
    """Decide whether the instance has a unique optimal flow.

    Runs the message recursion for the uniqueness round budget of the
    reduced instance and applies the belief gap test with threshold
    ``n * c_max``.  When unique, the accompanying estimate is the exact
    optimum and is returned merged with any degree-1-forced flows.
    ``fast=False`` forces literal execution of every round.
    """
    reduced, fixed = preprocess_degree(network)
    if reduced.m == 0:
        assignment = _merged_assignment(network, reduced, fixed, None)
        return UniquenessResult(True, assignment, 0, 0)
    total = iteration_bound(reduced, "uniqueness")
    if fast:
        beliefs, executed = beliefs_at_round(reduced, total, threads=threads)
    else:
        state = init_messages(reduced)
        for _ in range(total):
            state = update_round(reduced, state, threads=threads)
        executed = total
        beliefs = {a.id: belief(reduced, state, a.id) for a in reduced.arcs}
    unique, reduced_assignment = gap_test(
        reduced, beliefs, reduced.n * reduced.c_max
    )
    assignment = None
    if unique:
        assignment = _merged_assignment(network, reduced, fixed, reduced_assignment)
    return UniquenessResult(unique, assignment, total, executed)

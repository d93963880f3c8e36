"""flowbp: min-cost network flow by exact min-sum belief propagation.

The library solves capacitated min-cost flow with a round-synchronous
message-passing engine whose messages are exact piecewise-linear convex
functions, detects uniqueness of the optimum from the final beliefs, and
wraps the solver in a randomized perturb-and-decimate scheme that yields a
(1+eps)-approximation on arbitrary integral instances.

Typical use::

    from flowbp import FlowNetwork, run, detect_uniqueness, approx_scheme

    net = FlowNetwork.from_data(
        {1: 1, 2: 0, 3: -1},
        [(1, 1, 2, 2, 1), (2, 2, 3, 2, 1), (3, 1, 3, 2, 3)],
    )
    print(run(net).assignment.flows)
    print(detect_uniqueness(net).unique)
    print(approx_scheme(net, "1/2", seed=7).assignment.objective)
"""

from .bp_engine import (
    MessageState,
    RunResult,
    UniquenessResult,
    belief,
    detect_uniqueness,
    estimate,
    init_messages,
    run,
    update_round,
)
from .errors import FlowBpError
from .flowmodel import (
    Arc,
    FlowAssignment,
    FlowNetwork,
    ResidualGraph,
    UNBOUNDED,
    emit_dimacs,
    iteration_bound,
    linear_cost,
    min_cycle_cost,
    network_from_json_dict,
    network_to_json_dict,
    parse_dimacs,
    preprocess_degree,
    residual_graph,
    split_node_capacities,
)
from .fpras import approx_scheme, aprxmt, fix_arc, perturb_costs
from .gen import hard_instance, random_network
from .oracles import (
    ComputationTree,
    build_tree,
    enumerate_integral_flows,
    exact_solve,
    is_unique_optimum,
    tree_solve,
    tree_solve_free,
)
from .pwl import PwlConvex, inf_convolve2, scaled_interpolation

__all__ = [
    "Arc",
    "ComputationTree",
    "FlowAssignment",
    "FlowBpError",
    "FlowNetwork",
    "MessageState",
    "PwlConvex",
    "ResidualGraph",
    "RunResult",
    "UNBOUNDED",
    "UniquenessResult",
    "approx_scheme",
    "aprxmt",
    "belief",
    "build_tree",
    "detect_uniqueness",
    "emit_dimacs",
    "enumerate_integral_flows",
    "estimate",
    "exact_solve",
    "fix_arc",
    "hard_instance",
    "inf_convolve2",
    "init_messages",
    "is_unique_optimum",
    "iteration_bound",
    "linear_cost",
    "min_cycle_cost",
    "network_from_json_dict",
    "network_to_json_dict",
    "parse_dimacs",
    "perturb_costs",
    "preprocess_degree",
    "random_network",
    "residual_graph",
    "run",
    "scaled_interpolation",
    "split_node_capacities",
    "tree_solve",
    "tree_solve_free",
    "update_round",
]

__version__ = "0.1.0"

from .planner import (
    HEURISTIC_KINDS,
    OUTCOMES,
    GpsL2Heuristic,
    LearnedHeuristic,
    NoHeuristic,
    OpenSetEntry,
    PhysicalSearch,
    RobotSim,
    SearchConfig,
    SearchResult,
    contains,
    make_heuristic,
    multi_goal_run,
    physical_astar,
    select_next,
    update_open_set_costs,
)
from .topograph import (
    TopoGraph,
    TopoNode,
    dijkstra,
    graph_add_node,
    shortest_path,
    shortest_path_cost,
)
from .trace import SearchTrace

__all__ = [
    "SearchConfig", "OpenSetEntry", "SearchResult", "PhysicalSearch",
    "RobotSim", "physical_astar", "multi_goal_run",
    "contains", "update_open_set_costs", "select_next", "make_heuristic",
    "NoHeuristic", "GpsL2Heuristic", "LearnedHeuristic",
    "HEURISTIC_KINDS", "OUTCOMES",
    "TopoGraph", "TopoNode", "graph_add_node", "dijkstra",
    "shortest_path", "shortest_path_cost",
    "SearchTrace",
]

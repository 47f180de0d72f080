"""Physical search: drive to the cheapest open-set candidate, grow the graph,
sample new latent waypoints, repeat until the goal observation is close."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..models import METERS_TO_TICKS, WaypointPrediction
from ..sim import (
    DT,
    GPS_SIGMA,
    V_MAX,
    ActionCommand,
    CorruptionSpec,
    GpsReading,
    Pose,
    WorldSpec,
    is_traversable,
    observe,
    overhead_crop,
    sense_gps,
    step_dynamics,
)
from .topograph import TopoGraph, dijkstra, graph_add_node, shortest_path
from .trace import SearchTrace

HEURISTIC_KINDS = ("learned", "gps_l2", "none")
OUTCOMES = ("success", "failure", "budget_exhausted")


@dataclass
class SearchConfig:
    k_samples: int = 16
    epsilon_ticks: float = 10.0
    novelty_scale: float = 20.0
    heuristic: str = "learned"
    tick_budget: int = 1200
    dedup_radius: float = 2.0
    # Edges only where the model is confidently short: aliased observation
    # pairs predict near the mean training gap, so the cutoff sits below it.
    edge_connect_threshold: float = 7.0
    leg_cap_scale: float = 3.0
    leg_cap_base: float = 20.0
    leg_failure_penalty: float = 200.0
    max_open_set: int = 512
    gps_success_gate: bool = True
    gps_gate_m: float | None = None   # default 2 * epsilon * v_max * dt
    gps_sigma: float = GPS_SIGMA

    def __post_init__(self):
        if self.heuristic not in HEURISTIC_KINDS:
            raise ValueError(f"heuristic must be one of {HEURISTIC_KINDS}")
        for name in ("k_samples", "epsilon_ticks", "tick_budget", "dedup_radius",
                     "edge_connect_threshold", "leg_cap_scale", "max_open_set"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def gate_m(self) -> float:
        if self.gps_gate_m is not None:
            return self.gps_gate_m
        return 2.0 * self.epsilon_ticks * V_MAX * DT


@dataclass
class OpenSetEntry:
    waypoint: WaypointPrediction
    parent: int
    d_parent: float
    entry_id: int
    g: float = math.inf
    h: float = 0.0
    v: float = 0.0
    penalty: float = 0.0
    f: float = math.inf


# ---- heuristic adapters ----

class NoHeuristic:
    kind = "none"

    def costs(self, candidates_xy, current_xy, goal_xy, crop):
        return np.zeros(len(np.atleast_2d(candidates_xy)))


class GpsL2Heuristic:
    kind = "gps_l2"

    def __init__(self, scale: float = METERS_TO_TICKS):
        self.scale = scale

    def costs(self, candidates_xy, current_xy, goal_xy, crop):
        cand = np.atleast_2d(candidates_xy)
        d = cand - np.asarray(goal_xy)[None, :]
        return self.scale * np.hypot(d[:, 0], d[:, 1])


class LearnedHeuristic:
    kind = "learned"

    def __init__(self, model):
        self.model = model

    def costs(self, candidates_xy, current_xy, goal_xy, crop):
        return self.model.costs(crop, current_xy, goal_xy,
                                np.atleast_2d(candidates_xy))


def make_heuristic(config: SearchConfig, heuristic_model=None):
    if config.heuristic == "none":
        return NoHeuristic()
    if config.heuristic == "gps_l2":
        return GpsL2Heuristic()
    if heuristic_model is None:
        raise ValueError("learned heuristic requested but no model given")
    return LearnedHeuristic(heuristic_model)


# ---- pure open-set machinery ----

def contains(items, waypoint_xy, radius: float) -> bool:
    """True iff some member position lies strictly within the radius.

    `items` is an open set (entries with predicted positions), a TopoGraph
    (node GPS positions), or a plain (N, 2) array.
    """
    waypoint_xy = np.asarray(waypoint_xy, dtype=np.float64)
    if isinstance(items, TopoGraph):
        positions = [n.gps for n in items.nodes.values()]
    elif isinstance(items, np.ndarray):
        positions = list(np.atleast_2d(items)) if items.size else []
    else:
        positions = [e.waypoint.predicted_xy for e in items]
    return any(float(np.hypot(*(waypoint_xy - p))) < radius for p in positions)


def update_open_set_costs(open_set: list[OpenSetEntry], graph: TopoGraph,
                          current: int, heuristic, config: SearchConfig,
                          crop, current_xy, goal_xy) -> None:
    """Recompute every entry's f = g + d + h + C*N(parent) (+ penalty).

    Entries whose parent is unreachable from the current node get f = inf
    and sort after every finite entry.
    """
    if not open_set:
        return
    dist, _ = dijkstra(graph, current)
    cand = np.stack([e.waypoint.predicted_xy for e in open_set])
    hvals = heuristic.costs(cand, current_xy, goal_xy, crop)
    for e, h in zip(open_set, hvals):
        e.g = dist.get(e.parent, math.inf)
        e.h = float(h)
        e.v = config.novelty_scale * graph.nodes[e.parent].visits
        e.f = e.g + e.d_parent + e.h + e.v + e.penalty


def select_next(open_set: list[OpenSetEntry]) -> OpenSetEntry:
    """Minimum-f entry; ties break by insertion order."""
    return min(open_set, key=lambda e: (e.f, e.entry_id))


# ---- the robot in the loop ----

class BudgetExhausted(Exception):
    pass


class RobotSim:
    """One simulated platform; every applied action costs one tick."""

    def __init__(self, world: WorldSpec, pose: Pose, rng: np.random.Generator,
                 config: SearchConfig, observe_fn=None):
        if not is_traversable(world, pose):
            raise ValueError("start pose is not traversable")
        self.world = world
        self.pose = pose
        self.rng = rng
        self.config = config
        self.observe_fn = observe_fn
        self.trace: SearchTrace | None = None
        self.ticks = 0

    def observe(self) -> np.ndarray:
        if self.observe_fn is not None:
            return self.observe_fn(self.world, self.pose)
        return observe(self.world, self.pose).features

    def gps(self) -> np.ndarray:
        return sense_gps(self.world, self.pose, self.rng,
                         self.config.gps_sigma).xy

    def apply(self, action: ActionCommand) -> None:
        if self.ticks >= self.config.tick_budget:
            raise BudgetExhausted
        nxt = step_dynamics(self.pose, action)
        executed = action
        if not is_traversable(self.world, nxt):
            # Zero the blocked linear component but keep turning: a disk
            # footprint can always rotate in place, and a fully frozen pose
            # would re-decode the same colliding action forever.
            executed = ActionCommand(0.0, action.angular_velocity)
            self.pose = step_dynamics(self.pose, executed)
        else:
            self.pose = nxt
        self.ticks += 1
        if self.trace is not None:
            self.trace.add("tick", tick=self.ticks,
                           action=[executed.linear_velocity,
                                   executed.angular_velocity],
                           pose=[self.pose.x, self.pose.y, self.pose.heading])


# ---- the search itself ----

@dataclass
class SearchResult:
    outcome: str
    trace: SearchTrace
    graph: TopoGraph
    expansions: int
    ticks: int
    meters: float
    final_gps: np.ndarray
    final_pose: Pose


class PhysicalSearch:
    """Search loop bound to one world, one robot, and one growing graph."""

    def __init__(self, world: WorldSpec, corruption: CorruptionSpec | None,
                 latent_model, heuristic_model, config: SearchConfig,
                 start_pose: Pose, rng: np.random.Generator, observe_fn=None):
        self.world = world
        self.corruption = corruption
        self.model = latent_model
        self.config = config
        self.heuristic = make_heuristic(config, heuristic_model)
        self.rng = rng
        self.robot = RobotSim(world, start_pose, rng, config, observe_fn)
        self.graph = TopoGraph()
        self._entry_counter = 0
        self._last_node: int | None = None

    # -- helpers --

    def _trace(self) -> SearchTrace:
        return self.robot.trace

    def _add_node(self, obs: np.ndarray, gps: np.ndarray) -> int:
        nid, created, edges = graph_add_node(
            self.graph, obs, gps, self.model,
            self.config.edge_connect_threshold, self.config.epsilon_ticks)
        if created and self._last_node is not None and self._last_node != nid:
            # The robot physically drove here from the last node, so the
            # traversed link always enters the graph (keeps it connected).
            w = float(self.model.predict_transit(
                self.graph.nodes[self._last_node].obs, obs).temporal_distance)
            self.graph.add_edge(self._last_node, nid, w)
            edges = edges + [(self._last_node, w)]
        self._trace().add("node", id=nid, created=created,
                          gps=list(map(float, gps)),
                          visits=self.graph.nodes[nid].visits,
                          tick=self.robot.ticks)
        if created:
            for other, w in edges:
                self._trace().add("edge", a=nid, b=other, w=w)
        else:
            self._trace().add("visit", node=nid,
                              visits=self.graph.nodes[nid].visits,
                              tick=self.robot.ticks)
        self._last_node = nid
        return nid

    def _visit(self, nid: int) -> None:
        self.graph.increment_visits(nid)
        self._trace().add("visit", node=nid, visits=self.graph.nodes[nid].visits,
                          tick=self.robot.ticks)

    def _success_check(self, obs, gps, goal_obs, goal_xy) -> bool:
        model_close = self.model.is_close(obs, goal_obs, self.config.epsilon_ticks)
        gate = True
        if self.config.gps_success_gate:
            gate = float(np.hypot(*(np.asarray(gps) - np.asarray(goal_xy)))) \
                < self.config.gate_m
        self._trace().add("success_check", model_close=bool(model_close),
                          gps_gate=bool(gate), tick=self.robot.ticks)
        return bool(model_close and gate)

    def _sample_into(self, open_set: list[OpenSetEntry], parent: int,
                     obs, gps) -> None:
        waypoints = self.model.sample_waypoints(
            obs, gps, self.robot.pose.heading, self.config.k_samples, self.rng)
        for wp in waypoints:
            if contains(open_set, wp.predicted_xy, self.config.dedup_radius):
                continue
            entry = OpenSetEntry(waypoint=wp, parent=parent,
                                 d_parent=float(wp.temporal_distance),
                                 entry_id=self._entry_counter)
            self._entry_counter += 1
            open_set.append(entry)
            self._trace().add("insert", entry=entry.entry_id, parent=parent,
                              xy=list(map(float, wp.predicted_xy)),
                              d=entry.d_parent, tick=self.robot.ticks)

    # -- driving --

    def _drive_leg_to_node(self, target: int) -> bool:
        target_obs = self.graph.nodes[target].obs
        obs = self.robot.observe()
        est = self.model.predict_transit(obs, target_obs).temporal_distance
        cap = self.config.leg_cap_scale * max(est, 1.0) + self.config.leg_cap_base
        steps = 0
        while True:
            if self.model.is_close(obs, target_obs, self.config.epsilon_ticks):
                return True
            if steps >= cap:
                return False
            pred = self.model.predict_transit(obs, target_obs)
            self.robot.apply(pred.action)
            obs = self.robot.observe()
            steps += 1

    def _drive_leg_to_waypoint(self, wp: WaypointPrediction) -> bool:
        # Drive out the predicted transit time, re-decoding the action each
        # tick; stop early only on a decisive close reading. A plain
        # distance-under-epsilon exit would end legs instantly wherever
        # observations alias (the decoded distance starts near its mean).
        target_ticks = max(1, int(round(wp.temporal_distance)))
        early = min(self.config.epsilon_ticks, 0.5 * wp.temporal_distance)
        steps = 0
        while True:
            obs = self.robot.observe()
            pred = self.model.decode(obs, wp.z)
            if steps >= target_ticks:
                return True
            if steps >= 1 and pred.temporal_distance < early:
                return True
            self.robot.apply(pred.action)
            steps += 1

    def drive_to_node(self, target: int) -> bool:
        """Walk the graph to a node, replanning each arrival; increments counts."""
        if self._last_node == target:
            self._visit(target)
            return True
        current = self._last_node
        while current != target:
            path = shortest_path(self.graph, current, target)
            if path is None:
                return False
            nxt = path[1]
            if not self._drive_leg_to_node(nxt):
                return False
            self._visit(nxt)
            current = nxt
            self._last_node = nxt
        return True

    def _drive_to_entry(self, entry: OpenSetEntry) -> bool:
        if entry.parent != self._last_node:
            current = self._last_node
            while current != entry.parent:
                path = shortest_path(self.graph, current, entry.parent)
                if path is None:
                    return False
                nxt = path[1]
                if not self._drive_leg_to_node(nxt):
                    return False
                self._visit(nxt)
                current = nxt
                self._last_node = nxt
        return self._drive_leg_to_waypoint(entry.waypoint)

    # -- main loop --

    def run_goal(self, goal_obs, goal_xy, trace: SearchTrace | None = None
                 ) -> SearchResult:
        cfg = self.config
        trace = trace if trace is not None else SearchTrace()
        self.robot.trace = trace
        self.robot.ticks = 0
        goal_xy = np.asarray(goal_xy, dtype=np.float64)
        trace.add("start",
                  pose=[self.robot.pose.x, self.robot.pose.y,
                        self.robot.pose.heading],
                  goal=list(map(float, goal_xy)),
                  heuristic=self.heuristic.kind)
        expansions = 0
        outcome = "failure"

        obs = self.robot.observe()
        gps = self.robot.gps()
        current = self._add_node(obs, gps)
        if self._success_check(obs, gps, goal_obs, goal_xy):
            outcome = "success"
        else:
            open_set: list[OpenSetEntry] = []
            self._sample_into(open_set, current, obs, gps)
            try:
                while open_set:
                    if self.robot.ticks >= cfg.tick_budget:
                        raise BudgetExhausted
                    # A failed leg can leave the robot at an intermediate
                    # node; the cost anchor is wherever it actually stands.
                    current = self._last_node
                    crop = overhead_crop(
                        self.world, self.corruption,
                        GpsReading(*self.graph.nodes[current].gps))
                    update_open_set_costs(open_set, self.graph, current,
                                          self.heuristic, cfg, crop,
                                          self.graph.nodes[current].gps, goal_xy)
                    open_set.sort(key=lambda e: (e.f, e.entry_id))
                    if len(open_set) > cfg.max_open_set:
                        del open_set[cfg.max_open_set:]
                    trace.add("openset", tick=self.robot.ticks,
                              entries=[[e.entry_id, e.parent, e.f, e.g,
                                        e.d_parent, e.h, e.v, e.penalty]
                                       for e in open_set])
                    entry = open_set[0]
                    if math.isinf(entry.f):
                        break  # nothing reachable remains
                    trace.add("pop", entry=entry.entry_id, parent=entry.parent,
                              f=entry.f, g=entry.g, d=entry.d_parent,
                              h=entry.h, v=entry.v, penalty=entry.penalty,
                              parent_visits=self.graph.nodes[entry.parent].visits,
                              tick=self.robot.ticks)
                    if not self._drive_to_entry(entry):
                        entry.penalty += cfg.leg_failure_penalty
                        trace.add("leg_failure", entry=entry.entry_id,
                                  tick=self.robot.ticks)
                        continue
                    obs = self.robot.observe()
                    gps = self.robot.gps()
                    current = self._add_node(obs, gps)
                    expansions += 1
                    if self._success_check(obs, gps, goal_obs, goal_xy):
                        outcome = "success"
                        break
                    open_set.remove(entry)
                    self._sample_into(open_set, current, obs, gps)
            except BudgetExhausted:
                outcome = "budget_exhausted"

        final_gps = self.robot.gps()
        result = SearchResult(
            outcome=outcome,
            trace=trace,
            graph=self.graph,
            expansions=expansions,
            ticks=self.robot.ticks,
            meters=trace.path_meters(),
            final_gps=final_gps,
            final_pose=self.robot.pose,
        )
        trace.add("outcome", outcome=outcome, ticks=self.robot.ticks,
                  meters=result.meters, expansions=expansions,
                  nodes=len(self.graph),
                  final_gps=list(map(float, final_gps)))
        return result


def physical_astar(world: WorldSpec, corruption, latent_model, heuristic_model,
                   start_pose: Pose, goal_obs, goal_xy,
                   config: SearchConfig | None = None,
                   rng: np.random.Generator | None = None,
                   observe_fn=None) -> SearchResult:
    """One-shot search in a fresh graph."""
    config = config or SearchConfig()
    rng = rng if rng is not None else np.random.default_rng(0)
    search = PhysicalSearch(world, corruption, latent_model, heuristic_model,
                            config, start_pose, rng, observe_fn)
    return search.run_goal(goal_obs, goal_xy)


def multi_goal_run(world: WorldSpec, corruption, latent_model, heuristic_model,
                   start_pose: Pose, goals, config: SearchConfig | None = None,
                   rng: np.random.Generator | None = None,
                   observe_fn=None) -> list[SearchResult]:
    """Visit goals in order, reusing the graph and visit counts throughout."""
    if not goals:
        raise ValueError("need at least one goal")
    config = config or SearchConfig()
    rng = rng if rng is not None else np.random.default_rng(0)
    search = PhysicalSearch(world, corruption, latent_model, heuristic_model,
                            config, start_pose, rng, observe_fn)
    return [search.run_goal(goal_obs, goal_xy) for goal_obs, goal_xy in goals]

"""Scenario data model and ingestion.

A :class:`Scenario` is the unit of training and evaluation: per-frame
(x, y) positions and a category label for each agent over ``t_pred``
frames, the first ``t_obs`` of which are observed. Scenarios come from
CSV recordings or from the synthetic generator below, and are turned into
a spatio-temporal-category graph before any modeling.

CSV format: ``frame_id,agent_id,category_id,x,y`` with optional ``#``
comment lines; a ``# categories: name0,name1,...`` line declares the
category table.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, ContractError, DatasetError, ParseError, ShapeError

DEFAULT_MOTIFS = ("avoidance", "turning", "parallel", "group")

# Avoidance dynamics: steering force of magnitude min(CAP, GAIN/d) applied
# laterally to approaching pairs closer than ACTIVE_RADIUS.
_REPULSION_GAIN = 1.0
_REPULSION_CAP = 2.0
_ACTIVE_RADIUS = 2.5
_GOAL_DISTANCE = 1000.0


@dataclass
class AgentTrack:
    """One agent's trajectory: category, per-frame position, presence."""

    agent_id: int
    category: int
    positions: np.ndarray  # (t_pred, 2) meters
    present: np.ndarray  # (t_pred,) bool

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        self.present = np.asarray(self.present, dtype=bool)
        if self.positions.ndim != 2 or self.positions.shape[1] != 2:
            raise ShapeError(f"track {self.agent_id}: positions must be (T, 2), got {self.positions.shape}")
        if self.present.shape != (self.positions.shape[0],):
            raise ShapeError(
                f"track {self.agent_id}: present mask length {self.present.shape} does not match "
                f"{self.positions.shape[0]} frames"
            )


@dataclass
class Scenario:
    """A fixed-length window of co-observed agents."""

    tracks: list[AgentTrack]
    t_obs: int
    t_pred: int
    frame_dt: float
    category_count: int
    category_names: tuple[str, ...] | None = None

    def __post_init__(self):
        self.tracks = sorted(self.tracks, key=lambda tr: tr.agent_id)
        self.validate()

    def validate(self) -> None:
        if not (0 < self.t_obs < self.t_pred):
            raise ContractError(f"need 0 < t_obs < t_pred, got {self.t_obs}/{self.t_pred}")
        if self.frame_dt <= 0:
            raise ContractError(f"frame_dt must be positive, got {self.frame_dt}")
        if self.category_count < 1:
            raise ContractError("category_count must be at least 1")
        for tr in self.tracks:
            if tr.positions.shape[0] != self.t_pred:
                raise ContractError(f"track {tr.agent_id} has {tr.positions.shape[0]} frames, expected {self.t_pred}")
            if not (0 <= tr.category < self.category_count):
                raise ContractError(f"track {tr.agent_id} category {tr.category} outside [0, {self.category_count})")
        for t in range(self.t_obs):
            if not any(tr.present[t] for tr in self.tracks):
                raise ContractError(f"no agent present at observed frame {t}")

    @property
    def n_agents(self) -> int:
        return len(self.tracks)

    @property
    def future_steps(self) -> int:
        return self.t_pred - self.t_obs

    def present_indices(self, t: int) -> list[int]:
        return [i for i, tr in enumerate(self.tracks) if tr.present[t]]

    def positions_at(self, t: int) -> np.ndarray:
        return np.array([tr.positions[t] for tr in self.tracks if tr.present[t]])

    def categories(self) -> np.ndarray:
        return np.array([tr.category for tr in self.tracks], dtype=int)

    def fully_observed(self) -> bool:
        return all(bool(tr.present[: self.t_obs].all()) for tr in self.tracks)


# ---------------------------------------------------------------------------
# CSV ingestion


def _parse_rows(path: str) -> tuple[list[tuple[int, int, int, float, float]], tuple[str, ...] | None]:
    rows = []
    names: tuple[str, ...] | None = None
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.lower().startswith("categories:"):
                    names = tuple(n.strip() for n in body.split(":", 1)[1].split(",") if n.strip())
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 5:
                raise ParseError(f"{path}: line {lineno}: expected 5 fields, got {len(parts)}")
            try:
                frame = int(parts[0])
                agent = int(parts[1])
                category = int(parts[2])
                x = float(parts[3])
                y = float(parts[4])
            except ValueError as err:
                raise ParseError(f"{path}: line {lineno}: {err}") from err
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ParseError(f"{path}: line {lineno}: non-finite coordinate")
            rows.append((frame, agent, category, x, y))
    return rows, names


def load_csv(
    path: str,
    t_obs: int,
    t_pred: int,
    frame_dt: float,
    stride: int | None = None,
) -> list[Scenario]:
    """Extract scenarios from a trajectory CSV.

    Frames are windowed into chunks of ``t_pred`` consecutive frames
    (non-overlapping by default; pass ``stride`` for overlap). Agents not
    present throughout a window's observation span are dropped from that
    window; agents that leave during the prediction span are kept and
    masked.
    """
    rows, names = _parse_rows(path)
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    if stride is None:
        stride = t_pred
    if stride < 1:
        raise ConfigError(f"stride must be positive, got {stride}")

    frames = sorted({r[0] for r in rows})
    frame_index = {f: i for i, f in enumerate(frames)}
    category_count = max(r[2] for r in rows) + 1
    if names is not None:
        category_count = max(category_count, len(names))

    # by_agent[agent_id][frame_pos] = (x, y)
    by_agent: dict[int, dict[int, tuple[float, float]]] = {}
    for frame, agent, category, x, y in rows:
        by_agent.setdefault(agent, {})[frame_index[frame]] = (x, y)
    agent_category = {r[1]: r[2] for r in rows}

    scenarios: list[Scenario] = []
    start = 0
    while start + t_pred <= len(frames):
        tracks = []
        for agent_id in sorted(by_agent):
            span = by_agent[agent_id]
            observed = sum(1 for t in range(start, start + t_obs) if t in span)
            if observed < t_obs:
                continue
            positions = np.zeros((t_pred, 2))
            present = np.zeros(t_pred, dtype=bool)
            for t in range(t_pred):
                if start + t in span:
                    positions[t] = span[start + t]
                    present[t] = True
            tracks.append(AgentTrack(agent_id, agent_category[agent_id], positions, present))
        if tracks:
            scenarios.append(
                Scenario(tracks, t_obs, t_pred, frame_dt, category_count, names)
            )
        start += stride
    if not scenarios:
        raise DatasetError(f"{path}: no scenario of {t_pred} frames could be extracted")
    return scenarios


def load_dataset(directory: str, t_obs: int, t_pred: int, frame_dt: float) -> list[Scenario]:
    """Load every ``*.csv`` under a directory, sorted by file name."""
    files = sorted(
        os.path.join(directory, f) for f in os.listdir(directory) if f.endswith(".csv")
    )
    if not files:
        raise DatasetError(f"{directory}: no CSV files found")
    scenarios: list[Scenario] = []
    for f in files:
        scenarios.extend(load_csv(f, t_obs, t_pred, frame_dt))
    return scenarios


def write_csv(path: str, scenario: Scenario) -> None:
    lines = []
    if scenario.category_names:
        lines.append("# categories: " + ",".join(scenario.category_names))
    for t in range(scenario.t_pred):
        for tr in scenario.tracks:
            if tr.present[t]:
                x, y = float(tr.positions[t, 0]), float(tr.positions[t, 1])
                lines.append(f"{t},{tr.agent_id},{tr.category},{x!r},{y!r}")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def scenario_to_json(scenario: Scenario) -> dict:
    names = scenario.category_names or tuple(f"cat{i}" for i in range(scenario.category_count))
    return {
        "t_obs": scenario.t_obs,
        "t_pred": scenario.t_pred,
        "frame_dt": scenario.frame_dt,
        "categories": list(names),
        "tracks": [
            {
                "agent_id": tr.agent_id,
                "category": tr.category,
                "positions": [[float(x), float(y)] for x, y in tr.positions],
                "present": [bool(p) for p in tr.present],
            }
            for tr in scenario.tracks
        ],
    }


def scenario_from_json(blob: dict) -> Scenario:
    tracks = [
        AgentTrack(
            int(tr["agent_id"]),
            int(tr["category"]),
            np.array(tr["positions"], dtype=np.float64),
            np.array(tr["present"], dtype=bool),
        )
        for tr in blob["tracks"]
    ]
    names = tuple(blob["categories"]) if blob.get("categories") else None
    count = len(names) if names else max(tr.category for tr in tracks) + 1
    return Scenario(
        tracks,
        int(blob["t_obs"]),
        int(blob["t_pred"]),
        float(blob["frame_dt"]),
        count,
        names,
    )


def load_scenario_file(path: str, t_obs: int, t_pred: int, frame_dt: float) -> Scenario:
    if path.endswith(".json"):
        with open(path, "r", encoding="utf-8") as handle:
            return scenario_from_json(json.load(handle))
    return load_csv(path, t_obs, t_pred, frame_dt)[0]


# ---------------------------------------------------------------------------
# Synthetic generation


@dataclass(frozen=True)
class GeneratorConfig:
    """Desk-scale heterogeneous scenario generator settings.

    ``agents_per_category[c]`` agents of category ``c`` are simulated with
    constant speed drawn from ``speed_ranges[c]``; motifs cycle per
    scenario and arrange the first agents into an interaction pattern.
    """

    num_scenarios: int
    agents_per_category: tuple[int, ...] = (2, 2)
    speed_ranges: tuple[tuple[float, float], ...] = ((0.8, 1.4), (1.6, 3.0))
    motifs: tuple[str, ...] = DEFAULT_MOTIFS
    t_obs: int = 4
    t_pred: int = 10
    frame_dt: float = 0.5
    seed: int = 0

    def validate(self) -> None:
        if self.num_scenarios < 1:
            raise ConfigError(f"num_scenarios must be at least 1, got {self.num_scenarios}")
        if len(self.agents_per_category) < 2:
            raise ConfigError("at least 2 categories must be configured")
        if len(self.speed_ranges) != len(self.agents_per_category):
            raise ConfigError("speed_ranges must match agents_per_category in length")
        if any(n < 0 for n in self.agents_per_category):
            raise ConfigError("agent counts cannot be negative")
        if sum(self.agents_per_category) < 2:
            raise ConfigError("need at least 2 agents in total")
        for lo, hi in self.speed_ranges:
            if not (0.0 < lo <= hi):
                raise ConfigError(f"speed range ({lo}, {hi}) must be positive and ordered")
        if not self.motifs:
            raise ConfigError("at least one motif required")
        for m in self.motifs:
            if m not in DEFAULT_MOTIFS:
                raise ConfigError(f"unknown motif {m!r}; choose from {DEFAULT_MOTIFS}")
        if not (0 < self.t_obs < self.t_pred):
            raise ConfigError(f"need 0 < t_obs < t_pred, got {self.t_obs}/{self.t_pred}")
        if self.frame_dt <= 0:
            raise ConfigError("frame_dt must be positive")


def _unit(theta: float) -> np.ndarray:
    return np.array([math.cos(theta), math.sin(theta)])


def _normal(theta: float) -> np.ndarray:
    return np.array([-math.sin(theta), math.cos(theta)])


@dataclass
class _AgentSpec:
    category: int
    speed: float
    start: np.ndarray
    heading: float
    omega: float = 0.0  # turn rate, rad/s; 0 means goal-seeking straight


def _draw_speed(rng: np.random.Generator, speed_range: tuple[float, float]) -> float:
    lo, hi = speed_range
    return float(rng.uniform(lo, hi))


def _background_spec(rng, category, speed_range, center, occupied) -> _AgentSpec:
    # Spawn on a ring around the motif, re-drawing until 1.5 m clear.
    for _ in range(64):
        theta = float(rng.uniform(0, 2 * math.pi))
        radius = float(rng.uniform(4.0, 7.0))
        start = center + radius * _unit(theta)
        if all(np.linalg.norm(start - p) > 1.5 for p in occupied):
            break
    heading = float(rng.uniform(0, 2 * math.pi))
    return _AgentSpec(category, _draw_speed(rng, speed_range), start, heading)


def _motif_specs(motif: str, categories: list[int], config: GeneratorConfig, rng) -> list[_AgentSpec]:
    """Arrange agents for one scenario; the first agents play motif roles."""
    horizon = config.t_pred * config.frame_dt
    center = rng.uniform(-2.0, 2.0, size=2)
    theta = float(rng.uniform(0, 2 * math.pi))
    speeds = [_draw_speed(rng, config.speed_ranges[c]) for c in categories]
    specs: list[_AgentSpec] = []

    if motif == "group" and len(categories) < 3:
        motif = "avoidance"  # a 2-agent group degenerates to a plain encounter

    if motif == "avoidance":
        # Two agents head-on with a small lateral offset; they meet mid-window.
        off = 0.2
        reach0 = speeds[0] * horizon * 0.5
        reach1 = speeds[1] * horizon * 0.5
        specs.append(_AgentSpec(categories[0], speeds[0], center - reach0 * _unit(theta), theta))
        specs.append(
            _AgentSpec(
                categories[1],
                speeds[1],
                center + reach1 * _unit(theta) + off * _normal(theta),
                theta + math.pi,
            )
        )
    elif motif == "turning":
        # Agent 0 turns steadily; agent 1 is aimed across agent 0's
        # straight-line extrapolation, timed to coincide mid-window.
        omega = float(rng.uniform(0.35, 0.7))
        t_star = horizon * 0.5
        cross = center + speeds[0] * t_star * _unit(theta)
        phi = theta + float(rng.uniform(math.radians(60), math.radians(120)))
        # Turn clockwise: away from the side where the crosser ends up.
        omega = -omega
        specs.append(_AgentSpec(categories[0], speeds[0], center.copy(), theta, omega=omega))
        start1 = cross - speeds[1] * t_star * _unit(phi) + 0.15 * _normal(phi)
        specs.append(_AgentSpec(categories[1], speeds[1], start1, phi))
    elif motif == "parallel":
        # Side-by-side, identical headings; close enough that their
        # extrapolations pass within the interaction margin.
        gap = 0.4
        pair_cat = categories[0]
        specs.append(_AgentSpec(pair_cat, speeds[0], center - 0.5 * gap * _normal(theta), theta))
        second_cat = categories[1] if len(categories) > 1 else pair_cat
        specs.append(_AgentSpec(second_cat, speeds[1], center + 0.5 * gap * _normal(theta), theta))
    elif motif == "group":
        # A small platoon sharing heading and speed, plus one crossing agent.
        n_members = min(3, max(2, len(categories) - 1))
        base_speed = speeds[0]
        offsets = [(-0.35, 0.0), (0.35, 0.0), (0.0, -0.6)]
        for m in range(n_members):
            lateral, back = offsets[m]
            start = center + lateral * _normal(theta) + back * _unit(theta)
            specs.append(_AgentSpec(categories[m], base_speed, start, theta))
        if len(categories) > n_members:
            # One agent is aimed across the lead member's extrapolated path.
            t_star = horizon * 0.5
            cross = specs[0].start + base_speed * t_star * _unit(theta)
            phi = theta + float(rng.uniform(math.radians(70), math.radians(110)))
            sp = speeds[n_members]
            start = cross - sp * t_star * _unit(phi) + 0.1 * _normal(phi)
            specs.append(_AgentSpec(categories[n_members], sp, start, phi))
    else:  # pragma: no cover - validated earlier
        raise ConfigError(f"unknown motif {motif!r}")

    occupied = [s.start for s in specs]
    for c in categories[len(specs):]:
        spec = _background_spec(rng, c, config.speed_ranges[c], center, occupied)
        occupied.append(spec.start)
        specs.append(spec)
    return specs


def _steering_force(positions: np.ndarray, velocities: np.ndarray, headings: np.ndarray) -> np.ndarray:
    """Lateral repulsion between approaching close pairs.

    Magnitude min(cap, gain/d); only the component perpendicular to the
    agent's heading is kept (a pure backward push would be cancelled by
    the constant-speed normalization). Dead head-on pairs break the tie by
    steering right.
    """
    n = positions.shape[0]
    force = np.zeros((n, 2))
    for i in range(n):
        head = _unit(headings[i])
        right = -_normal(headings[i])
        for j in range(n):
            if i == j:
                continue
            rel = positions[i] - positions[j]
            dist = float(np.linalg.norm(rel))
            if dist < 1e-9 or dist > _ACTIVE_RADIUS:
                continue
            closing = -float(np.dot(rel, velocities[i] - velocities[j])) / dist
            if closing < 0.05:
                continue
            magnitude = min(_REPULSION_CAP, _REPULSION_GAIN / dist)
            lateral = rel - float(np.dot(rel, head)) * head
            lat_norm = float(np.linalg.norm(lateral))
            direction = lateral / lat_norm if lat_norm > 1e-6 else right
            force[i] += magnitude * direction
    return force


def _simulate(specs: list[_AgentSpec], config: GeneratorConfig) -> list[AgentTrack]:
    n = len(specs)
    t_total = config.t_pred
    dt = config.frame_dt
    positions = np.zeros((t_total, n, 2))
    positions[0] = np.array([s.start for s in specs])
    goals = np.array([s.start + _GOAL_DISTANCE * _unit(s.heading) for s in specs])
    velocities = np.array([s.speed * _unit(s.heading) for s in specs])

    for t in range(1, t_total):
        now = positions[t - 1]
        headings = np.array([math.atan2(v[1], v[0]) for v in velocities])
        force = _steering_force(now, velocities, headings)
        new_v = np.zeros_like(velocities)
        for i, s in enumerate(specs):
            if s.omega != 0.0:
                desired = _unit(s.heading + s.omega * (t - 1) * dt)
            else:
                to_goal = goals[i] - now[i]
                desired = to_goal / np.linalg.norm(to_goal)
            raw = s.speed * desired + force[i] * dt
            raw_norm = float(np.linalg.norm(raw))
            direction = raw / raw_norm if raw_norm > 1e-9 else desired
            new_v[i] = s.speed * direction
        velocities = new_v
        positions[t] = now + velocities * dt

    present = np.ones(t_total, dtype=bool)
    return [
        AgentTrack(i, specs[i].category, positions[:, i].copy(), present.copy())
        for i in range(n)
    ]


def generate_synthetic(config: GeneratorConfig) -> list[Scenario]:
    """Generate deterministic heterogeneous scenarios.

    Every scenario contains at least one pair of agents whose straight-line
    extrapolations pass within 0.5 m. Each scenario draws from its own
    random stream (seed, index), so generation order and thread scheduling
    cannot change the output.
    """
    config.validate()
    categories: list[int] = []
    for c, count in enumerate(config.agents_per_category):
        categories.extend([c] * count)
    names = tuple(f"cat{i}" for i in range(len(config.agents_per_category)))

    scenarios = []
    for idx in range(config.num_scenarios):
        rng = np.random.default_rng([config.seed, idx])
        motif = config.motifs[idx % len(config.motifs)]
        specs = _motif_specs(motif, categories, config, rng)
        tracks = _simulate(specs, config)
        scenarios.append(
            Scenario(
                tracks,
                config.t_obs,
                config.t_pred,
                config.frame_dt,
                len(config.agents_per_category),
                names,
            )
        )
    return scenarios


def scenario_motif(config: GeneratorConfig, index: int) -> str:
    """Motif assigned to the index-th generated scenario."""
    return config.motifs[index % len(config.motifs)]


def extrapolation_min_distance(scenario: Scenario, subdivisions: int = 8) -> float:
    """Smallest straight-line pass distance over all agent pairs.

    Extrapolates each agent from its first-frame position and first-step
    velocity across the whole window (sampled finer than the frame grid so
    a crossing between frames is not missed); used to verify the
    generator's interaction guarantee.
    """
    n = scenario.n_agents
    if n < 2:
        return math.inf
    starts = np.array([tr.positions[0] for tr in scenario.tracks])
    vels = np.array([tr.positions[1] - tr.positions[0] for tr in scenario.tracks])
    best = math.inf
    for t in np.linspace(0.0, scenario.t_pred - 1, (scenario.t_pred - 1) * subdivisions + 1):
        points = starts + t * vels
        for i in range(n):
            for j in range(i + 1, n):
                best = min(best, float(np.linalg.norm(points[i] - points[j])))
    return best


# ---------------------------------------------------------------------------
# Splitting and padding


def split_dataset(
    scenarios: Sequence,
    ratios: tuple[float, float, float],
    seed: int,
) -> tuple[list, list, list]:
    """Deterministic shuffle and floor-allocated partition.

    Sizes are floor(n * ratio) per split with the remainder assigned to
    the training split.
    """
    if not scenarios:
        raise DatasetError("cannot split an empty dataset")
    if len(ratios) != 3:
        raise ConfigError(f"expected 3 ratios, got {len(ratios)}")
    if any(r < 0 for r in ratios):
        raise ConfigError(f"ratios must be non-negative: {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"ratios must sum to 1, got {sum(ratios)}")
    positive = sum(1 for r in ratios if r > 0)
    n = len(scenarios)
    if n < positive:
        raise DatasetError(f"{n} scenarios cannot fill {positive} non-empty splits")

    order = np.random.default_rng(seed).permutation(n)
    shuffled = [scenarios[i] for i in order]
    n_train = int(math.floor(n * ratios[0]))
    n_val = int(math.floor(n * ratios[1]))
    n_test = int(math.floor(n * ratios[2]))
    n_train += n - (n_train + n_val + n_test)
    train = shuffled[:n_train]
    val = shuffled[n_train : n_train + n_val]
    test = shuffled[n_train + n_val :]
    return train, val, test


def pad_to(count: int, features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Zero-pad feature rows up to ``count``; returns (padded, row mask)."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ShapeError(f"pad_to expects a 2-D feature block, got {features.shape}")
    rows = features.shape[0]
    if count < rows:
        raise ShapeError(f"cannot pad {rows} rows down to {count}")
    padded = np.zeros((count, features.shape[1]))
    padded[:rows] = features
    mask = np.zeros(count, dtype=bool)
    mask[:rows] = True
    return padded, mask


# ---------------------------------------------------------------------------
# Spatio-temporal-category graph


@dataclass(frozen=True)
class AgentNode:
    track_index: int
    agent_id: int
    category: int
    position: tuple[float, float]


@dataclass(frozen=True)
class STCGraph:
    """Agent nodes per time step plus per-category super-nodes.

    Spatial and category edges are ordered (directed) pairs; every
    co-present category pair, including self-pairs, gets an edge.
    """

    agent_nodes: tuple[tuple[AgentNode, ...], ...]
    temporal_edges: tuple[tuple[int, int], ...]  # (track_index, t): t -> t+1
    spatial_edges: tuple[tuple[tuple[int, int], ...], ...]  # per t, ordered pairs
    category_nodes: tuple[dict, ...]  # per t: {category: (member track indices)}
    category_edges: tuple[tuple[tuple[int, int], ...], ...]  # per t, ordered pairs
    category_agent_edges: tuple[tuple[tuple[int, int], ...], ...]  # per t, (cat, track)

    def members_at(self, t: int) -> dict:
        return self.category_nodes[t]


def build_stc_graph(scenario: Scenario) -> STCGraph:
    """Construct the interaction graph for every frame of a scenario."""
    agent_nodes = []
    spatial_edges = []
    category_nodes = []
    category_edges = []
    category_agent_edges = []
    temporal_edges = []

    for t in range(scenario.t_pred):
        nodes = tuple(
            AgentNode(i, tr.agent_id, tr.category, (float(tr.positions[t, 0]), float(tr.positions[t, 1])))
            for i, tr in enumerate(scenario.tracks)
            if tr.present[t]
        )
        agent_nodes.append(nodes)
        idxs = [n.track_index for n in nodes]
        spatial_edges.append(tuple((i, j) for i in idxs for j in idxs if i != j))

        members: dict[int, tuple[int, ...]] = {}
        for node in nodes:  # nodes already ascend by agent_id via track order
            members.setdefault(node.category, ())
            members[node.category] = members[node.category] + (node.track_index,)
        members = {c: members[c] for c in sorted(members)}
        category_nodes.append(members)
        cats = list(members)
        category_edges.append(tuple((c1, c2) for c1 in cats for c2 in cats))
        category_agent_edges.append(tuple((c, i) for c in cats for i in members[c]))

        if t + 1 < scenario.t_pred:
            for i, tr in enumerate(scenario.tracks):
                if tr.present[t] and tr.present[t + 1]:
                    temporal_edges.append((i, t))

    return STCGraph(
        tuple(agent_nodes),
        tuple(temporal_edges),
        tuple(spatial_edges),
        tuple(category_nodes),
        tuple(category_edges),
        tuple(category_agent_edges),
    )

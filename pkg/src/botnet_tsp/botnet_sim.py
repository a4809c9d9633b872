"""Deterministic discrete-event simulation of a centralized botnet.

A botmaster issues a command to the C&C vertex, which dispatches a courier
along a planned TSP tour. At each host the carried bot tries to execute;
failures trigger version-bumped updates pushed from the C&C. Infected hosts
then beacon back to the C&C at a fixed interval. Benign background flows
between ordinary hosts are interleaved as a seeded Poisson process.

Every random draw comes from ``numpy`` PCG64 streams derived from the
scenario seed, so a config maps to exactly one event log.
"""
from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .graph import WeightMatrix, format_graph_text, read_graph_file
from .tsp import BRUTE_FORCE_CAP, DegenerateInstanceError, Tour, exact_tour_bruteforce, mst_double_tour, nn_tour, tour_cost

__all__ = [
    "BOTMASTER",
    "TAIL_BEACONS",
    "AT_CNC",
    "RNG_ALGORITHM",
    "ConfigError",
    "InfectionStateError",
    "HostState",
    "Outcome",
    "Strategy",
    "EventKind",
    "PayloadTag",
    "Host",
    "Bot",
    "AttackPlan",
    "SimEvent",
    "ScenarioConfig",
    "EventLog",
    "plan_traversal",
    "infect_attempt",
    "push_update",
    "expected_compromise",
    "run_simulation",
    "simulate_background_traffic",
    "load_scenario",
    "save_scenario",
    "write_event_log",
    "read_event_log",
    "format_event_log",
]

BOTMASTER = "botmaster"
AT_CNC = "cnc"
RNG_ALGORITHM = "numpy.PCG64/SeedSequence"
# beacon intervals observed after the courier's closing report
TAIL_BEACONS = 4


class ConfigError(ValueError):
    pass


class InfectionStateError(RuntimeError):
    """An infection was attempted on a host that is already infected."""


class HostState(str, enum.Enum):
    CLEAN = "Clean"
    INFECTED = "Infected"
    RESISTED = "Resisted"


class Outcome(str, enum.Enum):
    SUCCESS = "Success"
    FAIL = "Fail"


class Strategy(str, enum.Enum):
    NEAREST_NEIGHBOR = "nn"
    EXACT = "exact"
    MST_DOUBLE = "mst2"
    RANDOM = "random"

    @classmethod
    def parse(cls, value: "Strategy | str") -> "Strategy":
        if isinstance(value, Strategy):
            return value
        aliases = {"nearestneighbor": "nn", "nearest_neighbor": "nn", "mstdouble": "mst2", "mst_double": "mst2"}
        key = str(value).lower()
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ConfigError(f"unknown strategy {value!r}") from None


class EventKind(str, enum.Enum):
    DISPATCH = "Dispatch"
    INFECT_ATTEMPT = "InfectAttempt"
    INFECT_SUCCESS = "InfectSuccess"
    INFECT_FAIL = "InfectFail"
    UPDATE_PUSH = "UpdatePush"
    REPORT = "Report"
    C2_COMMAND = "C2Command"
    NOISE_FLOW = "NoiseFlow"


class PayloadTag(str, enum.Enum):
    GENERIC = "generic"
    PHISHING = "phishing"
    CLICK_FRAUD = "click_fraud"
    DDOS = "ddos"
    PORT_SCAN = "port_scan"


def _check_unit(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"{name} must be in [0, 1], got {value}")
    return value


@dataclass
class Host:
    id: int
    p_attack: float
    defense: float = 0.0
    state: HostState = HostState.CLEAN

    def __post_init__(self) -> None:
        self.p_attack = _check_unit("p_attack", self.p_attack)
        self.defense = _check_unit("defense", self.defense)

    @property
    def p_effective(self) -> float:
        return self.p_attack * (1.0 - self.defense)


@dataclass
class Bot:
    id: int
    version: int = 1
    location: int | str = AT_CNC
    deterministic_mode: bool = False


@dataclass(frozen=True)
class AttackPlan:
    tour: Tour
    strategy: Strategy
    cnc_vertex: int
    x: tuple[int, ...]

    @property
    def targets(self) -> tuple[int, ...]:
        return self.tour.order[1:]


@dataclass(frozen=True)
class SimEvent:
    tick: int
    kind: EventKind
    src: int | str
    dst: int | str
    bot_id: int | None = None
    payload_tag: PayloadTag = PayloadTag.GENERIC
    # cumulative tour distance, Dispatch events only
    distance: float | None = None

    def to_dict(self) -> dict:
        d = {
            "tick": self.tick,
            "kind": self.kind.value,
            "src": self.src,
            "dst": self.dst,
            "bot_id": self.bot_id,
            "payload_tag": self.payload_tag.value,
        }
        if self.distance is not None:
            d["distance"] = self.distance
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimEvent":
        return cls(
            tick=int(d["tick"]),
            kind=EventKind(d["kind"]),
            src=d["src"],
            dst=d["dst"],
            bot_id=d.get("bot_id"),
            payload_tag=PayloadTag(d.get("payload_tag", "generic")),
            distance=d.get("distance"),
        )


@dataclass(frozen=True)
class ScenarioConfig:
    graph: WeightMatrix
    cnc_vertex: int
    p_attack: tuple[float, ...]
    defense: tuple[float, ...]
    strategy: Strategy = Strategy.NEAREST_NEIGHBOR
    seed: int = 0
    max_update_retries: int = 3
    noise_rate: float = 0.0
    ticks_per_hop: float = 1.0
    beacon_interval: int = 5
    payload_tag: PayloadTag = PayloadTag.GENERIC

    def __post_init__(self) -> None:
        n = self.graph.n
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("p_attack", tuple(_check_unit("p_attack", p) for p in self.p_attack))
        set_("defense", tuple(_check_unit("defense", d) for d in self.defense))
        set_("strategy", Strategy.parse(self.strategy))
        set_("payload_tag", PayloadTag(self.payload_tag))
        if len(self.p_attack) != n or len(self.defense) != n:
            raise ConfigError(
                f"p_attack/defense lengths ({len(self.p_attack)}, {len(self.defense)}) must equal n={n}"
            )
        if not 0 <= self.cnc_vertex < n:
            raise ConfigError(f"cnc_vertex {self.cnc_vertex} outside 0..{n - 1}")
        if self.max_update_retries < 0:
            raise ConfigError("max_update_retries must be >= 0")
        if not (self.noise_rate >= 0 and math.isfinite(self.noise_rate)):
            raise ConfigError(f"noise_rate must be finite and >= 0, got {self.noise_rate}")
        if not (self.ticks_per_hop >= 0 and math.isfinite(self.ticks_per_hop)):
            raise ConfigError(f"ticks_per_hop must be finite and >= 0, got {self.ticks_per_hop}")
        if self.beacon_interval < 1:
            raise ConfigError("beacon_interval must be >= 1")
        if self.strategy is Strategy.EXACT and n > BRUTE_FORCE_CAP:
            raise ConfigError(f"exact strategy is capped at n={BRUTE_FORCE_CAP}, got n={n}")

    @classmethod
    def uniform(cls, graph: WeightMatrix, p_attack: float = 0.8, defense: float = 0.0, **kw) -> "ScenarioConfig":
        return cls(graph=graph, p_attack=(p_attack,) * graph.n, defense=(defense,) * graph.n, **kw)

    def to_dict(self) -> dict:
        return {
            "cnc_vertex": self.cnc_vertex,
            "p_attack": list(self.p_attack),
            "defense": list(self.defense),
            "strategy": self.strategy.value,
            "seed": self.seed,
            "max_update_retries": self.max_update_retries,
            "noise_rate": self.noise_rate,
            "ticks_per_hop": self.ticks_per_hop,
            "beacon_interval": self.beacon_interval,
            "payload_tag": self.payload_tag.value,
        }

    def digest(self) -> str:
        blob = json.dumps(
            {"graph": format_graph_text(self.graph), "rng": RNG_ALGORITHM, **self.to_dict()},
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True)
class EventLog:
    config_digest: str
    events: tuple[SimEvent, ...]
    infected: frozenset[int]
    cnc_vertex: int | None
    n: int
    tour: tuple[int, ...] = ()
    tour_cost: float = 0.0

    @property
    def ground_truth(self) -> frozenset[int]:
        """Vertices that are part of the botnet: infected hosts plus the C&C."""
        if self.cnc_vertex is None:
            return self.infected
        return self.infected | {self.cnc_vertex}

    def summary(self) -> dict:
        return {
            "kind": "Summary",
            "config_digest": self.config_digest,
            "rng": RNG_ALGORITHM,
            "n": self.n,
            "cnc_vertex": self.cnc_vertex,
            "tour": list(self.tour),
            "tour_cost": self.tour_cost,
            "infected": sorted(self.infected),
        }


# -- planning -----------------------------------------------------------------


def _rotate_to(order: Sequence[int], start: int) -> tuple[int, ...]:
    k = list(order).index(start)
    return tuple(order[k:]) + tuple(order[:k])


def plan_traversal(
    g: WeightMatrix,
    strategy: Strategy | str,
    cnc_vertex: int,
    seed: int = 0,
    cap: int = BRUTE_FORCE_CAP,
) -> AttackPlan:
    """Tour of every host starting at the C&C, built by the chosen solver."""
    strategy = Strategy.parse(strategy)
    n = g.n
    if n < 2:
        raise DegenerateInstanceError("a traversal needs at least one host besides the C&C")
    if not 0 <= cnc_vertex < n:
        raise ValueError(f"cnc_vertex {cnc_vertex} outside 0..{n - 1}")
    if strategy is Strategy.NEAREST_NEIGHBOR:
        order = nn_tour(g, cnc_vertex).order
    elif strategy is Strategy.EXACT:
        order = _rotate_to(exact_tour_bruteforce(g, cap)[0].order, cnc_vertex)
    elif strategy is Strategy.MST_DOUBLE:
        order = _rotate_to(mst_double_tour(g).order, cnc_vertex)
    else:
        rng = np.random.default_rng(seed)
        others = [v for v in range(n) if v != cnc_vertex]
        rng.shuffle(others)
        order = (cnc_vertex, *others)
    x = tuple(0 if v == cnc_vertex else 1 for v in range(n))
    return AttackPlan(Tour(order), strategy, cnc_vertex, x)


# -- infection rules ------------------------------------------------------------


def infect_attempt(host: Host, bot: Bot, rng: np.random.Generator) -> Outcome:
    """One execution attempt of ``bot`` on ``host``.

    Succeeds with probability ``p_attack * (1 - defense)``. A success puts the
    bot into deterministic mode for the rest of the run.
    """
    if host.state is HostState.INFECTED:
        raise InfectionStateError(f"host {host.id} is already infected")
    u = rng.random()
    bot.location = host.id
    if u < host.p_effective:
        host.state = HostState.INFECTED
        bot.deterministic_mode = True
        return Outcome.SUCCESS
    host.state = HostState.RESISTED
    return Outcome.FAIL


def push_update(
    bot: Bot,
    host: Host,
    retries_left: int,
    rng: np.random.Generator,
    emit: Callable[[EventKind], None] | None = None,
) -> Outcome:
    """Push newer bot versions to a resisting host until one executes.

    Each retry bumps ``bot.version`` and emits ``UpdatePush``, ``InfectAttempt``
    and the attempt's result through ``emit``. With ``retries_left == 0``
    nothing happens and the host stays resisted.
    """
    if host.state is not HostState.RESISTED:
        raise InfectionStateError(f"updates are only pushed to resisting hosts, host {host.id} is {host.state.value}")
    if retries_left < 0:
        raise ValueError("retries_left must be >= 0")
    emit = emit or (lambda kind: None)
    for _ in range(retries_left):
        bot.version += 1
        emit(EventKind.UPDATE_PUSH)
        emit(EventKind.INFECT_ATTEMPT)
        outcome = infect_attempt(host, bot, rng)
        emit(EventKind.INFECT_SUCCESS if outcome is Outcome.SUCCESS else EventKind.INFECT_FAIL)
        if outcome is Outcome.SUCCESS:
            return outcome
    return Outcome.FAIL


def expected_compromise(p_attack: Sequence[float], defense: Sequence[float], x: Sequence[int]) -> float:
    """Expected number of compromised hosts, ``sum p_i (1 - d_i) x_i``."""
    if not len(p_attack) == len(defense) == len(x):
        raise ValueError(f"length mismatch: {len(p_attack)}, {len(defense)}, {len(x)}")
    total = 0.0
    for p, d, xi in zip(p_attack, defense, x):
        p = _check_unit("p_attack", p)
        d = _check_unit("defense", d)
        if xi not in (0, 1):
            raise ValueError(f"x entries must be 0 or 1, got {xi}")
        total += p * (1.0 - d) * xi
    return total


# -- simulation -----------------------------------------------------------------


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    infect_ss, noise_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.Generator(np.random.PCG64(infect_ss)), np.random.Generator(np.random.PCG64(noise_ss))


def _noise_events(rng: np.random.Generator, hosts: Sequence[int], rate: float, horizon: int) -> list[SimEvent]:
    if rate <= 0 or len(hosts) < 2:
        return []
    pool = np.asarray(hosts)
    counts = rng.poisson(rate, size=horizon + 1)
    events = []
    for tick, k in enumerate(counts):
        for _ in range(int(k)):
            src, dst = rng.choice(pool, size=2, replace=False)
            events.append(SimEvent(tick, EventKind.NOISE_FLOW, int(src), int(dst)))
    return events


def run_simulation(config: ScenarioConfig) -> EventLog:
    """Run one scenario and return its complete, time-ordered event log."""
    g = config.graph
    cnc = config.cnc_vertex
    tag = config.payload_tag
    infect_rng, noise_rng = _streams(config.seed)

    if g.n >= 2:
        plan = plan_traversal(g, config.strategy, cnc, config.seed)
        order = plan.tour.order
    else:
        order = (cnc,)
    hosts = [Host(v, config.p_attack[v], config.defense[v]) for v in range(g.n)]

    traversal: list[SimEvent] = [SimEvent(0, EventKind.C2_COMMAND, BOTMASTER, cnc, payload_tag=tag)]
    clock = 0
    travelled = 0.0
    infected_at: dict[int, tuple[int, int]] = {}
    prev = cnc
    for bot_id, h in enumerate(order[1:], start=1):
        bot = Bot(bot_id)
        travelled += g[prev, h]
        traversal.append(SimEvent(clock, EventKind.DISPATCH, prev, h, bot_id, tag, distance=travelled))
        clock += math.ceil(config.ticks_per_hop * g[prev, h])
        host = hosts[h]

        traversal.append(SimEvent(clock, EventKind.INFECT_ATTEMPT, prev, h, bot_id, tag))
        outcome = infect_attempt(host, bot, infect_rng)
        kind = EventKind.INFECT_SUCCESS if outcome is Outcome.SUCCESS else EventKind.INFECT_FAIL
        traversal.append(SimEvent(clock, kind, prev, h, bot_id, tag))

        if outcome is Outcome.FAIL:
            def emit(kind: EventKind, h=h, bot_id=bot_id) -> None:
                nonlocal clock
                if kind is EventKind.UPDATE_PUSH:
                    clock += 1
                traversal.append(SimEvent(clock, kind, cnc, h, bot_id, tag))

            outcome = push_update(bot, host, config.max_update_retries, infect_rng, emit)
        if outcome is Outcome.SUCCESS:
            infected_at[h] = (clock, bot_id)
        prev = h

    # closing chain: last host -> C&C -> botmaster
    if prev != cnc:
        clock += math.ceil(config.ticks_per_hop * g[prev, cnc])
        traversal.append(SimEvent(clock, EventKind.REPORT, prev, cnc, None, tag))
    traversal.append(SimEvent(clock, EventKind.REPORT, cnc, BOTMASTER, None, tag))

    # every bot beacons at least TAIL_BEACONS times after the closing report
    horizon = clock + TAIL_BEACONS * config.beacon_interval
    beacons = []
    for h, (t0, bot_id) in infected_at.items():
        for t in range(t0 + config.beacon_interval, horizon + 1, config.beacon_interval):
            beacons.append(SimEvent(t, EventKind.REPORT, h, cnc, bot_id, tag))
    beacons.sort(key=lambda e: (e.tick, e.src))

    ordinary = [v for v in range(g.n) if v != cnc]
    noise = _noise_events(noise_rng, ordinary, config.noise_rate, horizon)

    events = sorted(traversal + beacons + noise, key=lambda e: e.tick)
    full_tour_cost = tour_cost(g, order) if g.n >= 2 else 0.0
    return EventLog(
        config_digest=config.digest(),
        events=tuple(events),
        infected=frozenset(infected_at),
        cnc_vertex=cnc,
        n=g.n,
        tour=tuple(order),
        tour_cost=full_tour_cost,
    )


def simulate_background_traffic(g: WeightMatrix, noise_rate: float, duration: int, seed: int) -> EventLog:
    """Botnet-free log: only benign flows between uniformly random host pairs."""
    if duration < 0:
        raise ConfigError("duration must be >= 0")
    _, noise_rng = _streams(seed)
    events = _noise_events(noise_rng, list(range(g.n)), noise_rate, duration)
    blob = json.dumps(
        {"graph": format_graph_text(g), "rng": RNG_ALGORITHM, "noise_rate": noise_rate, "duration": duration, "seed": seed},
        sort_keys=True,
    )
    return EventLog(
        config_digest=hashlib.sha256(blob.encode()).hexdigest(),
        events=tuple(events),
        infected=frozenset(),
        cnc_vertex=None,
        n=g.n,
    )


# -- file formats ---------------------------------------------------------------

_SCENARIO_FIELDS = (
    "graph_file",
    "cnc_vertex",
    "p_attack",
    "defense",
    "strategy",
    "seed",
    "max_update_retries",
    "noise_rate",
    "ticks_per_hop",
    "beacon_interval",
)


def save_scenario(config: ScenarioConfig, path: str | Path, graph_file: str) -> None:
    data = {"graph_file": graph_file, **config.to_dict()}
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Parse a scenario JSON file; ``graph_file`` is relative to the scenario."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    missing = [k for k in ("graph_file", "cnc_vertex", "p_attack", "defense") if k not in data]
    if missing:
        raise ConfigError(f"{path}: missing fields {missing}")
    unknown = set(data) - set(_SCENARIO_FIELDS) - {"payload_tag"}
    if unknown:
        raise ConfigError(f"{path}: unknown fields {sorted(unknown)}")
    graph = read_graph_file(path.parent / data["graph_file"])
    kwargs = {k: data[k] for k in _SCENARIO_FIELDS[1:] + ("payload_tag",) if k in data}
    try:
        return ScenarioConfig(graph=graph, **kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def format_event_log(log: EventLog) -> str:
    lines = [json.dumps(e.to_dict()) for e in log.events]
    lines.append(json.dumps(log.summary()))
    return "\n".join(lines) + "\n"


def write_event_log(log: EventLog, path: str | Path) -> None:
    Path(path).write_text(format_event_log(log))


def _parse_lines(lines: Iterable[str]) -> EventLog:
    records = [json.loads(ln) for ln in lines if ln.strip()]
    if not records or records[-1].get("kind") != "Summary":
        raise ValueError("event log must end with a Summary record")
    summary = records.pop()
    return EventLog(
        config_digest=summary["config_digest"],
        events=tuple(SimEvent.from_dict(r) for r in records),
        infected=frozenset(summary["infected"]),
        cnc_vertex=summary["cnc_vertex"],
        n=summary["n"],
        tour=tuple(summary.get("tour", ())),
        tour_cost=summary.get("tour_cost", 0.0),
    )


def read_event_log(path: str | Path) -> EventLog:
    return _parse_lines(Path(path).read_text().splitlines())

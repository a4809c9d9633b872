"""Traversal-pattern botnet detection over ground-truth-free flow logs.

The detector sees only directed flows ``(tick, src, dst, payload_tag)``. It

1. picks the C&C candidate as the vertex receiving repeated flows from the
   most distinct sources (the beaconing fan-in signature),
2. follows the chain of first contacts outward from that candidate to
   recover the infection traversal, and
3. compares the cost of that traversal with a nearest-neighbour tour over
   the same vertices. Bots move along cost-optimised tours, so their ratio
   sits at or below 1; uncoordinated traffic scores well above.

A botnet is only reported when at least one host on the traversal also
reports to the candidate at a fixed interval; chains stitched together from
random benign flows occasionally look cost-optimised but do not beacon.
"""
from __future__ import annotations

import enum
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Collection, Iterable, Mapping, Sequence

from .botnet_sim import EventKind, EventLog
from .graph import WeightMatrix
from .tsp import nn_tour, tour_cost

__all__ = [
    "DEFAULT_TAU",
    "DEFAULT_MIN_VISITS",
    "DEFAULT_MIN_BEACONS",
    "NotScorableError",
    "Verdict",
    "FlowRecord",
    "Metrics",
    "DetectionReport",
    "strip_ground_truth",
    "candidate_cnc",
    "reconstruct_traversal",
    "beaconing_sources",
    "traversal_score",
    "classify_hosts",
    "evaluate",
    "write_flows",
    "read_flows",
]

DEFAULT_TAU = 1.05
DEFAULT_MIN_VISITS = 4
DEFAULT_MIN_BEACONS = 4


class NotScorableError(ValueError):
    """Too few visited hosts to say anything about traversal cost."""


class Verdict(str, enum.Enum):
    BOT = "Bot"
    BENIGN = "Benign"


@dataclass(frozen=True)
class FlowRecord:
    tick: int
    src: int | str
    dst: int | str
    payload_tag: str = "generic"

    def to_dict(self) -> dict:
        return {"tick": self.tick, "src": self.src, "dst": self.dst, "payload_tag": self.payload_tag}


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    false_positive_rate: float
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def csv(self) -> str:
        return "accuracy,precision,recall,fpr\n" + (
            f"{self.accuracy!r},{self.precision!r},{self.recall!r},{self.false_positive_rate!r}\n"
        )


@dataclass(frozen=True)
class DetectionReport:
    cnc_candidate: int | None
    fan_in_score: int
    traversal_score: float | None
    visited_sequence: tuple[int, ...]
    verdicts: Mapping[int, Verdict]
    tau: float
    min_visits: int
    beaconing: tuple[int, ...] = ()
    metrics: Metrics | None = None

    @property
    def bots(self) -> frozenset[int]:
        return frozenset(v for v, verdict in self.verdicts.items() if verdict is Verdict.BOT)

    def with_metrics(self, truth: Collection[int]) -> "DetectionReport":
        return DetectionReport(
            self.cnc_candidate,
            self.fan_in_score,
            self.traversal_score,
            self.visited_sequence,
            self.verdicts,
            self.tau,
            self.min_visits,
            self.beaconing,
            evaluate(self.verdicts, truth),
        )

    def to_dict(self) -> dict:
        score = self.traversal_score
        return {
            "cnc_candidate": self.cnc_candidate,
            "fan_in_score": self.fan_in_score,
            "traversal_score": score if score is None or math.isfinite(score) else "inf",
            "visited_sequence": list(self.visited_sequence),
            "verdicts": {str(v): self.verdicts[v].value for v in sorted(self.verdicts)},
            "tau": self.tau,
            "min_visits": self.min_visits,
            "beaconing": list(self.beaconing),
            "metrics": None
            if self.metrics is None
            else {
                "accuracy": self.metrics.accuracy,
                "precision": self.metrics.precision,
                "recall": self.metrics.recall,
                "false_positive_rate": self.metrics.false_positive_rate,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "DetectionReport":
        score = d["traversal_score"]
        m = d.get("metrics")
        return cls(
            cnc_candidate=d["cnc_candidate"],
            fan_in_score=d["fan_in_score"],
            traversal_score=math.inf if score == "inf" else score,
            visited_sequence=tuple(d["visited_sequence"]),
            verdicts={int(k): Verdict(v) for k, v in d["verdicts"].items()},
            tau=d["tau"],
            min_visits=d["min_visits"],
            beaconing=tuple(d.get("beaconing", ())),
            metrics=None if m is None else Metrics(m["accuracy"], m["precision"], m["recall"], m["false_positive_rate"]),
        )


def strip_ground_truth(log: EventLog | Iterable) -> list[FlowRecord]:
    """Project simulator events onto what a network sensor would see.

    An infection attempt and its outcome are one connection on the wire, so a
    Success/Fail event directly after the matching attempt adds no flow.
    """
    events = log.events if isinstance(log, EventLog) else log
    flows: list[FlowRecord] = []
    prev = None
    for e in events:
        folded = (
            e.kind in (EventKind.INFECT_SUCCESS, EventKind.INFECT_FAIL)
            and prev is not None
            and prev.kind is EventKind.INFECT_ATTEMPT
            and (prev.tick, prev.src, prev.dst) == (e.tick, e.src, e.dst)
        )
        if not folded:
            flows.append(FlowRecord(e.tick, e.src, e.dst, e.payload_tag.value))
        prev = e
    return flows


def _vertex(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def candidate_cnc(flows: Sequence[FlowRecord]) -> tuple[int, int]:
    """Vertex with the most distinct sources sending it two or more flows.

    Returns ``(vertex, fan_in_score)``; ties go to the smallest vertex id.
    """
    if not flows:
        raise ValueError("cannot locate a C&C in an empty flow sequence")
    pair_counts = Counter((f.src, f.dst) for f in flows if _vertex(f.src) and _vertex(f.dst))
    fan_in: dict[int, int] = defaultdict(int)
    for (src, dst), count in pair_counts.items():
        if count >= 2 and src != dst:
            fan_in[dst] += 1
    seen = {v for f in flows for v in (f.src, f.dst) if _vertex(v)}
    if not seen:
        raise ValueError("flow sequence contains no host vertices")
    best = min(seen, key=lambda v: (-fan_in.get(v, 0), v))
    return best, fan_in.get(best, 0)


def reconstruct_traversal(flows: Sequence[FlowRecord], cnc: int) -> list[int]:
    """Chain of first contacts starting at ``cnc``.

    From the current chain end, the next element is the destination of the
    earliest later flow it sends to a host not yet on the chain. The C&C
    itself is never part of the returned sequence.
    """
    sequence: list[int] = []
    on_chain = {cnc}
    current = cnc
    pos = 0
    while True:
        for i in range(pos, len(flows)):
            f = flows[i]
            if f.src == current and _vertex(f.dst) and f.dst not in on_chain:
                sequence.append(f.dst)
                on_chain.add(f.dst)
                current = f.dst
                pos = i + 1
                break
        else:
            return sequence


def beaconing_sources(flows: Sequence[FlowRecord], cnc: int, min_beacons: int = DEFAULT_MIN_BEACONS) -> set[int]:
    """Hosts whose last ``min_beacons`` contacts with ``cnc`` are evenly spaced."""
    ticks: dict[int, list[int]] = defaultdict(list)
    for f in flows:
        if f.dst == cnc and _vertex(f.src) and f.src != cnc:
            ticks[f.src].append(f.tick)
    found = set()
    for src, ts in ticks.items():
        last = sorted(set(ts))[-min_beacons:]
        if len(last) == min_beacons and len({b - a for a, b in zip(last, last[1:])}) == 1:
            found.add(src)
    return found


def traversal_score(g: WeightMatrix, sequence: Sequence[int], cnc: int) -> float:
    """Observed cycle cost over the NN-tour cost on the same vertex set.

    The NN reference starts at ``cnc`` and breaks ties by smallest original
    vertex id.
    """
    if len(sequence) < 2:
        raise NotScorableError(f"need at least 2 visited hosts, got {len(sequence)}")
    cycle = [cnc, *sequence]
    if len(set(cycle)) != len(cycle):
        raise ValueError("sequence repeats a vertex or contains the C&C")
    # sorted vertex list keeps the NN tie-break on original ids
    vertices = sorted(cycle)
    local = {v: i for i, v in enumerate(vertices)}
    sub = g.subgraph(vertices)
    observed = tour_cost(sub, [local[v] for v in cycle])
    reference = tour_cost(sub, nn_tour(sub, local[cnc]))
    if reference == 0:
        return 1.0 if observed == 0 else math.inf
    return observed / reference


def classify_hosts(
    flows: Sequence[FlowRecord],
    g: WeightMatrix,
    tau: float = DEFAULT_TAU,
    min_visits: int = DEFAULT_MIN_VISITS,
    min_beacons: int = DEFAULT_MIN_BEACONS,
) -> DetectionReport:
    """Label the C&C candidate and its traversal as bots if the tour is cost-optimised.

    All of the following must hold for a Bot verdict: the traversal score is
    at most ``tau``, at least ``min_visits`` hosts were visited, and at least
    one visited host beacons to the candidate (``min_beacons`` evenly spaced
    reports). Otherwise every host is Benign.
    """
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    if min_visits < 2:
        raise ValueError(f"min_visits must be >= 2, got {min_visits}")
    if min_beacons < 3:
        raise ValueError(f"min_beacons must be >= 3, got {min_beacons}")
    verdicts = {v: Verdict.BENIGN for v in range(g.n)}
    if not flows:
        return DetectionReport(None, 0, None, (), verdicts, tau, min_visits)
    for f in flows:
        for v in (f.src, f.dst):
            if _vertex(v) and not 0 <= v < g.n:
                raise ValueError(f"flow references vertex {v}, graph has n={g.n}")

    cnc, fan_in = candidate_cnc(flows)
    sequence = tuple(reconstruct_traversal(flows, cnc))
    try:
        score = traversal_score(g, sequence, cnc)
    except NotScorableError:
        score = None
    beaconing = tuple(sorted(beaconing_sources(flows, cnc, min_beacons) & set(sequence)))
    if score is not None and score <= tau and len(sequence) >= min_visits and beaconing:
        for v in (cnc, *sequence):
            verdicts[v] = Verdict.BOT
    return DetectionReport(cnc, fan_in, score, sequence, verdicts, tau, min_visits, beaconing)


def _ratio(num: int, den: int, empty: float) -> float:
    return num / den if den else empty


def evaluate(verdicts: Mapping[int, Verdict], truth: Collection[int]) -> Metrics:
    """Confusion-matrix metrics of ``verdicts`` against the true bot set."""
    truth = set(truth)
    if not truth <= set(verdicts):
        raise ValueError(f"truth mentions hosts without a verdict: {sorted(truth - set(verdicts))}")
    tp = fp = tn = fn = 0
    for host, verdict in verdicts.items():
        positive = Verdict(verdict) is Verdict.BOT
        if host in truth:
            tp += positive
            fn += not positive
        else:
            fp += positive
            tn += not positive
    n = tp + fp + tn + fn
    return Metrics(
        accuracy=_ratio(tp + tn, n, 1.0),
        precision=_ratio(tp, tp + fp, 1.0),
        recall=_ratio(tp, tp + fn, 1.0),
        false_positive_rate=_ratio(fp, fp + tn, 0.0),
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
    )


def write_flows(flows: Iterable[FlowRecord], path: str | Path) -> None:
    Path(path).write_text("".join(json.dumps(f.to_dict()) + "\n" for f in flows))


def read_flows(path: str | Path) -> list[FlowRecord]:
    """Read a flow file, or strip an event log on the fly."""
    flows = []
    prev = None
    outcomes = (EventKind.INFECT_SUCCESS.value, EventKind.INFECT_FAIL.value)
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        r = json.loads(line)
        if r.get("kind") == "Summary":
            continue
        folded = (
            r.get("kind") in outcomes
            and prev is not None
            and prev.get("kind") == EventKind.INFECT_ATTEMPT.value
            and (prev["tick"], prev["src"], prev["dst"]) == (r["tick"], r["src"], r["dst"])
        )
        if not folded:
            flows.append(FlowRecord(int(r["tick"]), r["src"], r["dst"], r.get("payload_tag", "generic")))
        prev = r
    return flows

"""Random environment: graph schedules, arc sampling and Bernoulli attention."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .graph import (
    NEG,
    POS,
    Arc,
    PositiveClusterPartition,
    SignConflict,
    SignedDigraph,
    connectivity,
    induced,
    positive_cluster_partition,
    union_graph,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GraphSchedule:
    """Static graph or periodic list of graphs, with per-arc sampling probabilities.

    Arcs absent from ``q`` are sampled with ``q_all``.
    """

    graphs: tuple[SignedDigraph, ...]
    periodic: bool = False
    q_all: float = 1.0
    q: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        graphs = tuple(self.graphs)
        if not graphs:
            raise ValueError("schedule needs at least one graph")
        if not self.periodic and len(graphs) != 1:
            raise ValueError("a static schedule holds exactly one graph")
        if len({g.n for g in graphs}) != 1:
            raise ValueError("all graphs in a schedule must share n")
        object.__setattr__(self, "graphs", graphs)
        q = {(int(k[0]), int(k[1])): float(v) for k, v in dict(self.q).items()}
        object.__setattr__(self, "q", q)
        for p in [self.q_all, *q.values()]:
            if not 0.0 < p <= 1.0:
                raise ValueError(f"sampling probability {p} outside (0, 1]")

    @classmethod
    def static(cls, g: SignedDigraph, q_all: float = 1.0, q=None) -> "GraphSchedule":
        return cls((g,), False, q_all, q or {})

    @classmethod
    def cycle(cls, gs, q_all: float = 1.0, q=None) -> "GraphSchedule":
        return cls(tuple(gs), True, q_all, q or {})

    @property
    def n(self) -> int:
        return self.graphs[0].n

    @property
    def period(self) -> int:
        return len(self.graphs)

    def prob(self, tail: int, head: int) -> float:
        return self.q.get((tail, head), self.q_all)

    def arc_probs(self) -> list[float]:
        return [self.prob(a.tail, a.head) for g in self.graphs for a in g.arcs]

    @property
    def p_lower(self) -> float:
        """Smallest arc probability (the A1 constant)."""
        ps = self.arc_probs()
        return min(ps) if ps else self.q_all

    @property
    def p_upper(self) -> float:
        ps = self.arc_probs()
        return max(ps) if ps else self.q_all


def schedule_graph(sched: GraphSchedule, t: int) -> SignedDigraph:
    if t < 0:
        raise ValueError("time must be non-negative")
    if not sched.periodic:
        return sched.graphs[0]
    return sched.graphs[t % sched.period]


@dataclass(frozen=True)
class InteractionGraph:
    t: int
    n: int
    arcs: frozenset

    def __post_init__(self):
        nbrs = {POS: {}, NEG: {}}
        for a in sorted(self.arcs, key=lambda a: (a.tail, a.head)):
            nbrs[a.sign].setdefault(a.head, []).append(a.tail)
        object.__setattr__(self, "_nbrs", nbrs)

    def neighbors(self, i: int, sign: str) -> list[int]:
        """Tails of realized arcs of the given sign pointing into ``i``."""
        return self._nbrs[sign].get(i, [])

    def pos_neighbors(self, i: int) -> list[int]:
        return self.neighbors(i, POS)

    def neg_neighbors(self, i: int) -> list[int]:
        return self.neighbors(i, NEG)

    def __len__(self):
        return len(self.arcs)


def sample_interaction_graph(sched: GraphSchedule, t: int, rng: np.random.Generator) -> InteractionGraph:
    """Keep each arc of the slot graph independently with its probability.

    Consumes exactly one uniform per arc, in (tail, head) order.
    """
    g = schedule_graph(sched, t)
    arcs = g.sorted_arcs()
    u = rng.random(len(arcs))
    kept = frozenset(a for a, x in zip(arcs, u) if x < sched.prob(a.tail, a.head))
    return InteractionGraph(t, g.n, kept)


ATTENTION_KINDS = ("constant", "power", "list")
_clamp_warned: set = set()


@dataclass(frozen=True)
class AttentionSchedule:
    """Mean sequence of a Bernoulli attention process.

    ``constant``: c.  ``power``: c / (t+1)**gamma.  ``list``: explicit values
    then ``c`` forever after.
    """

    kind: str = "constant"
    c: float = 0.0
    gamma: float = 0.0
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ATTENTION_KINDS:
            raise ValueError(f"unknown attention kind {self.kind!r}")
        if self.c < 0 or self.gamma < 0:
            raise ValueError("attention parameters must be non-negative")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if any(v < 0 for v in self.values):
            raise ValueError("attention values must be non-negative")

    @classmethod
    def constant(cls, c: float) -> "AttentionSchedule":
        return cls("constant", c)

    @classmethod
    def power(cls, c: float, gamma: float) -> "AttentionSchedule":
        return cls("power", c, gamma)

    def _raw(self, t: np.ndarray) -> np.ndarray:
        if self.kind == "constant":
            return np.full(t.shape, self.c, dtype=float)
        if self.kind == "power":
            return self.c / (t + 1.0) ** self.gamma
        vals = np.array(self.values, dtype=float)
        out = np.full(t.shape, self.c, dtype=float)
        head = t < len(vals)
        out[head] = vals[t[head]]
        return out

    def evaluate(self, t0: int, t1: int | None = None):
        """Clamped mean at slot ``t0``, or an array over ``t0..t1-1``."""
        ts = np.arange(t0, t0 + 1 if t1 is None else t1)
        raw = self._raw(ts)
        if np.any(raw > 1.0) and self not in _clamp_warned:
            _clamp_warned.add(self)
            log.warning("attention %s exceeds 1 on some slots; clamped to 1", self)
        out = np.clip(raw, 0.0, 1.0)
        return float(out[0]) if t1 is None else out

    def summable(self) -> bool:
        """Whether the series of means converges."""
        if self.kind == "constant":
            return self.c == 0.0
        if self.kind == "power":
            return self.c == 0.0 or self.gamma > 1.0
        return self.c == 0.0

    def partial_sum(self, horizon: int) -> float:
        return math.fsum(self.evaluate(0, horizon))

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "c": self.c}
        if self.kind == "power":
            d["gamma"] = self.gamma
        if self.kind == "list":
            d["values"] = list(self.values)
        return d


def sample_attention(a: AttentionSchedule, t: int, rng: np.random.Generator) -> int:
    """One Bernoulli draw with mean ``a.evaluate(t)``; consumes one uniform."""
    return int(rng.random() < a.evaluate(t))


@dataclass
class AssumptionReport:
    K: int
    windows: int
    p_lower: float
    p_upper: float
    A1: bool
    A2: bool
    A3: bool
    A4: bool
    A5: bool
    A6: bool
    A7: bool
    A8: bool
    A9: bool
    total_graph: SignedDigraph | None = None
    partition: PositiveClusterPartition | None = None
    conflict: tuple[int, int] | None = None

    def holds(self, names) -> bool:
        return all(getattr(self, a) for a in names)

    def to_dict(self) -> dict:
        d = {f"A{k}": getattr(self, f"A{k}") for k in range(1, 10)}
        d.update(K=self.K, windows=self.windows, p_lower=self.p_lower, p_upper=self.p_upper)
        d["conflict"] = list(self.conflict) if self.conflict else None
        d["partition"] = self.partition.as_lists() if self.partition else None
        d["Tp"] = self.partition.Tp if self.partition else None
        return d


def _window(sched: GraphSchedule, t: int, K: int, sign: str | None) -> SignedDigraph:
    arcs = {}
    for tau in range(t, t + K):
        for a in schedule_graph(sched, tau).arcs:
            if sign is None or a.sign == sign:
                # connectivity only; sign is irrelevant when sign is None
                arcs[(a.tail, a.head)] = Arc(a.tail, a.head, a.sign if sign else POS)
    return SignedDigraph(sched.n, frozenset(arcs.values()))


def check_assumptions(sched: GraphSchedule, horizon: int, K: int) -> AssumptionReport:
    """Evaluate the connectivity and sampling assumptions over every K-window.

    A window starting at t covers slots t..t+K-1. For periodic schedules the
    window starts 0..period-1 cover every distinct window.
    """
    if K < 1 or horizon < K:
        raise ValueError("need K >= 1 and horizon >= K")
    starts = range(min(horizon - K + 1, sched.period))

    total = None
    conflict = None
    try:
        total = union_graph(list(sched.graphs))
    except SignConflict as exc:
        conflict = (exc.tail, exc.head)

    a2 = a4 = a5 = a7 = a8 = True
    a9 = total is not None
    partition = positive_cluster_partition(total) if total is not None else None
    for t in starts:
        every = connectivity(_window(sched, t, K, None))
        pos_w = _window(sched, t, K, POS)
        pos = connectivity(pos_w)
        neg = connectivity(_window(sched, t, K, NEG))
        a2 &= every.strong
        a4 &= pos.strong
        a5 &= neg.strong
        a7 &= pos.center is not None
        a8 &= neg.weak
        if a9:
            for block in partition.blocks:
                if connectivity(induced(pos_w, block)).center is None:
                    a9 = False
                    break

    p_lo, p_hi = sched.p_lower, sched.p_upper
    return AssumptionReport(
        K=K,
        windows=len(starts),
        p_lower=p_lo,
        p_upper=p_hi,
        A1=p_lo > 0.0,
        A2=a2,
        A3=total is not None,
        A4=a4,
        A5=a5,
        # independence holds by construction; the bound needs p_upper < 1
        A6=p_hi < 1.0,
        A7=a7,
        A8=a8,
        A9=a9,
        total_graph=total,
        partition=partition,
        conflict=conflict,
    )

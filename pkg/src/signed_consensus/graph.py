"""Signed directed graphs, reachability predicates and positive-cluster partitions.

Node ids are 1-based throughout, matching the graph file format.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

POS = "+"
NEG = "-"


class SignConflict(ValueError):
    """Raised when the same arc is given both signs."""

    def __init__(self, tail: int, head: int):
        super().__init__(f"arc ({tail},{head}) appears with both signs")
        self.tail = tail
        self.head = head


class GraphFormatError(ValueError):
    pass


class Arc(NamedTuple):
    tail: int
    head: int
    sign: str


@dataclass(frozen=True)
class SignedDigraph:
    n: int
    arcs: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"node count must be positive, got {self.n}")
        arcs = frozenset(Arc(int(a[0]), int(a[1]), a[2]) for a in self.arcs)
        seen = {}
        for a in arcs:
            if a.sign not in (POS, NEG):
                raise ValueError(f"bad sign {a.sign!r} on arc ({a.tail},{a.head})")
            if a.tail == a.head:
                raise ValueError(f"self-loop at node {a.tail}")
            for v in (a.tail, a.head):
                if not 1 <= v <= self.n:
                    raise ValueError(f"node id {v} outside [1, {self.n}]")
            if (a.tail, a.head) in seen:
                raise SignConflict(a.tail, a.head)
            seen[(a.tail, a.head)] = a.sign
        object.__setattr__(self, "arcs", arcs)

    @classmethod
    def from_arcs(cls, n: int, arcs: Iterable) -> "SignedDigraph":
        return cls(n, frozenset(Arc(int(t), int(h), s) for t, h, s in arcs))

    def sorted_arcs(self) -> list[Arc]:
        """Arcs ordered by (tail, head); this is the sampling order."""
        return sorted(self.arcs, key=lambda a: (a.tail, a.head))

    def sign_of(self, tail: int, head: int) -> str | None:
        for a in self.arcs:
            if a.tail == tail and a.head == head:
                return a.sign
        return None

    def successors(self) -> dict[int, set[int]]:
        out = {v: set() for v in range(1, self.n + 1)}
        for a in self.arcs:
            out[a.tail].add(a.head)
        return out

    def __len__(self):
        return len(self.arcs)


@dataclass(frozen=True)
class PositiveClusterPartition:
    blocks: tuple[frozenset[int], ...]

    @property
    def Tp(self) -> int:
        return len(self.blocks)

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    def block_of(self) -> dict[int, int]:
        """Map node id -> 0-based block index."""
        return {v: k for k, b in enumerate(self.blocks) for v in b}

    def as_lists(self) -> list[list[int]]:
        return [sorted(b) for b in self.blocks]


class Connectivity(NamedTuple):
    strong: bool
    weak: bool
    center: int | None


def subgraph_by_sign(g: SignedDigraph, sign: str) -> SignedDigraph:
    return SignedDigraph(g.n, frozenset(a for a in g.arcs if a.sign == sign))


class _DisjointSet:
    def __init__(self, items):
        self.parent = {v: v for v in items}

    def find(self, v):
        root = v
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[v] != root:
            self.parent[v], v = root, self.parent[v]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # smaller id becomes the root, keeps component labels canonical
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def weak_components(g: SignedDigraph) -> list[frozenset[int]]:
    """Weakly connected components ordered by smallest member."""
    ds = _DisjointSet(range(1, g.n + 1))
    for a in g.arcs:
        ds.union(a.tail, a.head)
    groups: dict[int, set[int]] = {}
    for v in range(1, g.n + 1):
        groups.setdefault(ds.find(v), set()).add(v)
    return [frozenset(groups[r]) for r in sorted(groups, key=lambda r: min(groups[r]))]


def positive_cluster_partition(g: SignedDigraph) -> PositiveClusterPartition:
    """Partition the nodes into weak components of the positive subgraph.

    Negative arcs are ignored, including those inside a block.
    """
    return PositiveClusterPartition(tuple(weak_components(subgraph_by_sign(g, POS))))


def reachable_from(g: SignedDigraph, source: int) -> set[int]:
    succ = g.successors()
    seen = {source}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in succ[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def connectivity(g: SignedDigraph) -> Connectivity:
    nodes = set(range(1, g.n + 1))
    center = None
    strong = True
    for v in sorted(nodes):
        reach = reachable_from(g, v)
        if reach == nodes:
            if center is None:
                center = v
        else:
            strong = False
    weak = len(weak_components(g)) == 1
    return Connectivity(strong=strong, weak=weak, center=center)


def has_spanning_tree(g: SignedDigraph) -> bool:
    return connectivity(g).center is not None


def induced(g: SignedDigraph, nodes: Iterable[int]) -> SignedDigraph:
    """Induced subgraph relabelled to 1..len(nodes) in ascending id order."""
    order = sorted(nodes)
    relabel = {v: k + 1 for k, v in enumerate(order)}
    arcs = [
        Arc(relabel[a.tail], relabel[a.head], a.sign)
        for a in g.arcs
        if a.tail in relabel and a.head in relabel
    ]
    return SignedDigraph(len(order), frozenset(arcs))


def union_graph(gs: list[SignedDigraph]) -> SignedDigraph:
    if not gs:
        raise ValueError("union of an empty list of graphs")
    n = gs[0].n
    signs: dict[tuple[int, int], str] = {}
    for g in gs:
        if g.n != n:
            raise ValueError(f"node counts differ: {n} vs {g.n}")
        for a in g.arcs:
            prev = signs.setdefault((a.tail, a.head), a.sign)
            if prev != a.sign:
                raise SignConflict(a.tail, a.head)
    return SignedDigraph(n, frozenset(Arc(t, h, s) for (t, h), s in signs.items()))


def parse_graph(text: str) -> SignedDigraph:
    """Parse the plain-text format: first line n, then ``tail head sign`` lines."""
    n = None
    arcs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if n is None:
                if len(parts) != 1:
                    raise ValueError
                n = int(parts[0])
                continue
            if len(parts) != 3 or parts[2] not in (POS, NEG):
                raise ValueError
            arcs.append(Arc(int(parts[0]), int(parts[1]), parts[2]))
        except ValueError:
            want = "node count" if n is None else "'tail head sign'"
            raise GraphFormatError(f"line {lineno}: expected {want}, got {raw!r}") from None
    if n is None:
        raise GraphFormatError("missing node count")
    try:
        return SignedDigraph(n, frozenset(arcs))
    except SignConflict:
        raise
    except ValueError as exc:
        raise GraphFormatError(str(exc)) from exc


def format_graph(g: SignedDigraph) -> str:
    lines = [str(g.n)]
    lines += [f"{a.tail} {a.head} {a.sign}" for a in g.sorted_arcs()]
    return "\n".join(lines) + "\n"


def read_graph(path) -> SignedDigraph:
    return parse_graph(Path(path).read_text())


def complete_graph(n: int, sign: str = POS) -> SignedDigraph:
    return SignedDigraph(n, frozenset(Arc(i, j, sign) for i in range(1, n + 1)
                                      for j in range(1, n + 1) if i != j))

"""Node state updates under positive/negative recommendations.

Two code paths share one arithmetic order:

* ``step`` and the recommendation functions are the per-node reference,
  written as plain loops over realized neighbours;
* ``CompiledGraph.advance`` updates a batch of independent trials at once.
  Per-node sums accumulate incoming arcs in (tail, head) order starting from
  0.0, so both paths produce bit-identical states.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import InteractionGraph
from .graph import NEG, POS, SignedDigraph

MODELS = ("relative", "flip")
NUMERIC_LIMIT = 1e12


class NonFiniteState(ArithmeticError):
    def __init__(self, t: int):
        super().__init__(f"state became non-finite at slot {t}")
        self.t = t


@dataclass(frozen=True)
class DynamicsParams:
    alpha: float
    beta: float
    model: str = "relative"

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")


@dataclass(frozen=True)
class StateVector:
    s: np.ndarray
    t: int = 0

    def __post_init__(self):
        arr = np.array(self.s, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "s", arr)

    @property
    def n(self) -> int:
        return len(self.s)

    def __getitem__(self, i: int) -> float:
        """1-based node access."""
        return float(self.s[i - 1])


def positive_recommendation(i: int, s: StateVector, e: InteractionGraph) -> float:
    si = s[i]
    acc = 0.0
    for j in e.pos_neighbors(i):
        acc += si - s[j]
    return -acc


def negative_recommendation(i: int, s: StateVector, e: InteractionGraph, model: str = "relative") -> float:
    si = s[i]
    acc = 0.0
    if model == "relative":
        for j in e.neg_neighbors(i):
            acc += si - s[j]
        return acc
    if model == "flip":
        for j in e.neg_neighbors(i):
            acc += si + s[j]
        return -acc
    raise ValueError(f"unknown model {model!r}")


def step(s: StateVector, e: InteractionGraph, B: int, D: int, p: DynamicsParams) -> StateVector:
    """Synchronous update of every node from the slot-t state."""
    out = np.empty(s.n)
    for i in range(1, s.n + 1):
        hp = positive_recommendation(i, s, e)
        hm = negative_recommendation(i, s, e, p.model)
        out[i - 1] = s[i] + p.alpha * B * hp + p.beta * D * hm
    if not np.all(np.isfinite(out)):
        raise NonFiniteState(s.t + 1)
    return StateVector(out, s.t + 1)


def _padded_incoming(n: int, heads: np.ndarray, mask: np.ndarray, pad: int) -> np.ndarray:
    """Row i lists arc indices with head i+1 (ascending), padded with ``pad``."""
    lists = [np.flatnonzero(mask & (heads == i + 1)) for i in range(n)]
    width = max((len(x) for x in lists), default=0)
    out = np.full((n, width), pad, dtype=np.intp)
    for i, x in enumerate(lists):
        out[i, : len(x)] = x
    return out


class CompiledGraph:
    """Index arrays for one slot graph, ready for batched updates."""

    def __init__(self, g: SignedDigraph, probs):
        arcs = g.sorted_arcs()
        self.n = g.n
        self.m = len(arcs)
        self.tails = np.array([a.tail - 1 for a in arcs], dtype=np.intp)
        self.heads = np.array([a.head - 1 for a in arcs], dtype=np.intp)
        self.pos = np.array([a.sign == POS for a in arcs], dtype=bool)
        self.neg = np.array([a.sign == NEG for a in arcs], dtype=bool)
        self.q = np.array([probs(a.tail, a.head) for a in arcs], dtype=np.float64)
        self.in_pos = _padded_incoming(self.n, self.heads + 1, self.pos, self.m)
        self.in_neg = _padded_incoming(self.n, self.heads + 1, self.neg, self.m)

    @staticmethod
    def _gather_sum(contrib: np.ndarray, idx: np.ndarray) -> np.ndarray:
        acc = np.zeros((contrib.shape[0], idx.shape[0]))
        for k in range(idx.shape[1]):
            acc = acc + contrib[:, idx[:, k]]
        return acc

    def advance(self, s: np.ndarray, u_arcs: np.ndarray, B: np.ndarray, D: np.ndarray,
                alpha: float, beta: float, model: str) -> tuple[np.ndarray, np.ndarray]:
        """One step for every row of ``s``.

        ``u_arcs`` holds the arc uniforms (rows x m); returns the new states
        and the number of realized arcs per row.
        """
        rows = s.shape[0]
        active = u_arcs < self.q
        st = s[:, self.tails]
        sh = s[:, self.heads]
        diff = sh - st

        cp = np.zeros((rows, self.m + 1))
        cp[:, : self.m] = np.where(active & self.pos, diff, 0.0)
        hp = -self._gather_sum(cp, self.in_pos)

        cn = np.zeros((rows, self.m + 1))
        if model == "relative":
            cn[:, : self.m] = np.where(active & self.neg, diff, 0.0)
            hm = self._gather_sum(cn, self.in_neg)
        else:
            cn[:, : self.m] = np.where(active & self.neg, sh + st, 0.0)
            hm = -self._gather_sum(cn, self.in_neg)

        new = s + alpha * B[:, None] * hp + beta * D[:, None] * hm
        return new, active.sum(axis=1)

"""Brute-force reference implementations, kept independent of the package."""
import itertools
import random

import numpy as np

from signed_consensus.graph import NEG, POS, Arc, SignedDigraph


def random_signed_digraph(rng: random.Random, n: int, density: float | None = None) -> SignedDigraph:
    p = rng.random() if density is None else density
    arcs = []
    for i, j in itertools.permutations(range(1, n + 1), 2):
        if rng.random() < p:
            arcs.append(Arc(i, j, POS if rng.random() < 0.5 else NEG))
    return SignedDigraph(n, frozenset(arcs))


def reach_matrix(n, pairs):
    """Transitive-reflexive closure by Floyd-Warshall over boolean adjacency."""
    R = [[i == j for j in range(n)] for i in range(n)]
    for t, h in pairs:
        R[t - 1][h - 1] = True
    for k in range(n):
        for i in range(n):
            if R[i][k]:
                for j in range(n):
                    if R[k][j]:
                        R[i][j] = True
    return R


def weak_blocks(n, pairs):
    """Weak components via closure of the symmetrised arc set."""
    sym = set(pairs) | {(h, t) for t, h in pairs}
    R = reach_matrix(n, sym)
    blocks = {frozenset(j + 1 for j in range(n) if R[i][j]) for i in range(n)}
    return sorted(blocks, key=min)


def connectivity_oracle(g: SignedDigraph):
    pairs = [(a.tail, a.head) for a in g.arcs]
    R = reach_matrix(g.n, pairs)
    strong = all(all(row) for row in R)
    centers = [i + 1 for i in range(g.n) if all(R[i])]
    weak = len(weak_blocks(g.n, pairs)) == 1
    return strong, weak, centers


def naive_step(s, arcs, B, D, alpha, beta, model):
    """Double loop over node pairs; arcs is a set of (tail, head, sign)."""
    n = len(s)
    sign = {(t, h): sg for t, h, sg in arcs}
    out = np.array(s, dtype=float)
    for i in range(1, n + 1):
        hp = 0.0
        hm = 0.0
        for j in range(1, n + 1):
            sg = sign.get((j, i))
            if sg == POS:
                hp += s[j - 1] - s[i - 1]
            elif sg == NEG:
                if model == "relative":
                    hm += s[i - 1] - s[j - 1]
                else:
                    hm -= s[i - 1] + s[j - 1]
        out[i - 1] = s[i - 1] + alpha * B * hp + beta * D * hm
    return out

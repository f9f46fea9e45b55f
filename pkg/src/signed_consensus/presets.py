"""Experiment presets, one per convergence or divergence regime, plus a model contrast."""
from __future__ import annotations

import logging
from dataclasses import replace

from .analysis import ClassificationCriteria, theorem_constants
from .dynamics import DynamicsParams
from .env import AttentionSchedule, GraphSchedule
from .graph import NEG, POS, Arc, SignedDigraph
from .harness import ConfigError, ExperimentConfig, InitialSpec, run_trials

log = logging.getLogger(__name__)

PRESETS = ("thm1a", "thm1b", "thm2", "thm3", "thm4", "flip-compare")

# Located with locate_threshold(preset("thm3"), iters=8): bisection over b
# with 100-trial batches (seed 104, T = 10**4); diverged frequency was 0.97
# at b = 0.6992 and 0.91 at b = 0.7031. The preset runs at half that value.
THM3_B_STAR = 0.699
THM3_B = 0.35

# Share of the largest admissible d (X_m - Y_m >= 0) used by thm2.
THM2_D_FRACTION = 0.5


def _g(n, pos=(), neg=()):
    arcs = [Arc(t, h, POS) for t, h in pos] + [Arc(t, h, NEG) for t, h in neg]
    return SignedDigraph(n, frozenset(arcs))


def _clique(nodes):
    return [(i, j) for i in nodes for j in nodes if i != j]


def _bipartite(a, b):
    return [(i, j) for i in a for j in b] + [(j, i) for i in a for j in b]


def two_clique_graph() -> SignedDigraph:
    """Positive 3-cliques {1,2,3}, {4,5,6}; every cross pair negative both ways."""
    return _g(6, pos=_clique([1, 2, 3]) + _clique([4, 5, 6]),
              neg=_bipartite([1, 2, 3], [4, 5, 6]))


def _thm1a() -> ExperimentConfig:
    # each positive cluster has a spanning tree (roots 1 and 4) but is not
    # strongly connected; 3->1 is a negative arc inside cluster one
    g = _g(6, pos=[(1, 2), (2, 3), (3, 2), (4, 5), (4, 6), (6, 5)],
           neg=[(3, 1), (3, 4), (5, 1), (2, 6)])
    return ExperimentConfig(
        schedule=GraphSchedule.static(g, q_all=0.8),
        b=AttentionSchedule.constant(0.5),
        d=AttentionSchedule.power(0.5, 2.0),
        params=DynamicsParams(0.15, 0.5),
        T=10_000, trials=200, seed=101,
        initial=InitialSpec("uniform", 0.0, 1.0),
        K=1, name="thm1a", assumptions=("A1",),
    )


def _thm1b() -> ExperimentConfig:
    return ExperimentConfig(
        schedule=GraphSchedule.static(two_clique_graph(), q_all=0.8),
        b=AttentionSchedule.constant(0.5),
        d=AttentionSchedule.constant(0.3),
        params=DynamicsParams(0.15, 0.5),
        T=10_000, trials=200, seed=102,
        initial=InitialSpec("two-block", C0=1.0),
        criteria=ClassificationCriteria(divergence_threshold=1e6),
        K=1, name="thm1b", assumptions=("A1",),
    )


def thm2_graph() -> SignedDigraph:
    # positive out-tree rooted at 1 (spanning tree, not strongly connected)
    return _g(5, pos=[(1, 2), (2, 3), (2, 4), (4, 5), (3, 5)],
              neg=[(5, 1), (3, 4), (5, 2)])


def max_admissible_d(n, K, alpha, beta, p_star, b, tol=1e-22) -> float:
    """Largest constant d with X_m - Y_m >= 0 for constant attention."""
    def gap(d):
        tc = theorem_constants(n, K, alpha, beta, p_star, AttentionSchedule.constant(b),
                               AttentionSchedule.constant(d), 1)
        return tc.X[0] - tc.Y[0]

    lo, hi = 0.0, 1.0
    while hi - lo > tol and hi > lo:
        mid = 0.5 * (lo + hi)
        if gap(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return lo


def _thm2() -> ExperimentConfig:
    n, K, alpha, beta, q, b = 5, 1, 0.2, 0.05, 0.9, 0.9
    d = THM2_D_FRACTION * max_admissible_d(n, K, alpha, beta, q, b)
    return ExperimentConfig(
        schedule=GraphSchedule.static(thm2_graph(), q_all=q),
        b=AttentionSchedule.constant(b),
        d=AttentionSchedule.constant(d),
        params=DynamicsParams(alpha, beta),
        T=100_000, trials=200, seed=103,
        initial=InitialSpec("uniform", 0.0, 1.0),
        K=K, name="thm2", assumptions=("A1", "A7"),
    )


def thm3_graph() -> SignedDigraph:
    ring = [(i, i % 6 + 1) for i in range(1, 7)]
    return _g(6, pos=ring, neg=[(1, 3), (3, 5), (5, 2), (2, 4), (4, 6)])


def _thm3() -> ExperimentConfig:
    return ExperimentConfig(
        schedule=GraphSchedule.static(thm3_graph(), q_all=0.7),
        b=AttentionSchedule.constant(THM3_B),
        d=AttentionSchedule.constant(0.5),
        params=DynamicsParams(0.095, 0.05),
        T=10_000, trials=200, seed=104,
        initial=InitialSpec("uniform", 0.0, 1.0),
        K=1, name="thm3", assumptions=("A1", "A6", "A8"),
    )


def thm4_graph() -> SignedDigraph:
    return _g(6, pos=[(1, 2), (2, 3), (3, 1), (4, 5), (5, 6), (5, 4)],
              neg=[(1, 4), (4, 1), (3, 6), (6, 2), (2, 1)])


def _thm4() -> ExperimentConfig:
    return ExperimentConfig(
        schedule=GraphSchedule.static(thm4_graph(), q_all=0.8),
        b=AttentionSchedule.constant(0.6),
        d=AttentionSchedule.power(0.5, 2.0),
        params=DynamicsParams(0.15, 0.5),
        T=10_000, trials=200, seed=105,
        initial=InitialSpec("uniform", 0.0, 1.0),
        K=1, name="thm4", assumptions=("A1", "A3", "A9"),
    )


def _flip_compare() -> ExperimentConfig:
    return replace(_thm1b(), name="flip-compare", seed=106, compare_models=True)


_BUILDERS = {
    "thm1a": _thm1a,
    "thm1b": _thm1b,
    "thm2": _thm2,
    "thm3": _thm3,
    "thm4": _thm4,
    "flip-compare": _flip_compare,
}


def preset(name: str) -> ExperimentConfig:
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


def _alpha_ok(cfg, bound=None):
    n = cfg.n
    return 0 < cfg.params.alpha < (bound if bound is not None else 1 / (n - 1))


def hypotheses(cfg: ExperimentConfig, name: str | None = None) -> dict:
    """Preset-specific hypotheses beyond the A-assumptions, evaluated on ``cfg``."""
    from .env import check_assumptions
    from .harness import constants_report

    name = name or cfg.name
    rep = check_assumptions(cfg.schedule, max(cfg.T, cfg.K), cfg.K)
    part = rep.partition
    static = not cfg.schedule.periodic
    out: dict = {}
    if name == "thm1a":
        out["static_graph"] = static
        out["alpha_range"] = _alpha_ok(cfg)
        out["clusters_have_spanning_trees"] = static and rep.A9
        out["d_summable"] = cfg.d.summable()
    elif name in ("thm1b", "flip-compare"):
        g = cfg.schedule.graphs[0]
        block = part.block_of() if part else {}
        signs = {(a.tail, a.head): a.sign for a in g.arcs}
        cross = [(i, j) for i in block for j in block if block[i] < block[j]]
        out["static_graph"] = static
        out["alpha_range"] = _alpha_ok(cfg)
        out["two_clusters"] = part is not None and part.Tp == 2
        out["no_negative_inside_clusters"] = all(
            block[a.tail] != block[a.head] for a in g.arcs if a.sign == NEG)
        out["negative_arc_between_clusters"] = all(
            signs.get((i, j)) == NEG or signs.get((j, i)) == NEG for i, j in cross)
        out["d_not_summable"] = not cfg.d.summable()
        out["two_block_initial"] = cfg.initial.kind == "two-block" and cfg.initial.C0 > 0
    elif name == "thm2":
        h = constants_report(cfg)["hypotheses"]
        out["alpha_range"] = _alpha_ok(cfg)
        out["x_minus_y_in_unit_interval"] = h["x_minus_y_in_unit_interval"]
        out["x_minus_y_sum_diverges"] = h["x_minus_y_sum_diverges"]
    elif name == "thm3":
        b, d = cfg.b, cfg.d
        out["alpha_range"] = _alpha_ok(cfg, 1 / (2 * (cfg.n - 1)))
        out["constant_attention"] = b.kind == "constant" and d.kind == "constant" and 0 < b.c < 1 and 0 < d.c < 1
        out["b_below_calibrated_b_star"] = b.c < THM3_B_STAR
    elif name == "thm4":
        h = constants_report(cfg)["hypotheses"]
        out["alpha_range"] = _alpha_ok(cfg)
        out["J_sum_diverges"] = h["J_sum_diverges"]
        out["d_summable"] = cfg.d.summable()
        out["W_over_J_to_zero"] = h["W_over_J_to_zero"]
    return out


def locate_threshold(cfg: ExperimentConfig, target: str = "diverged", freq: float = 0.95,
                     lo: float = 0.0, hi: float = 1.0, iters: int = 7,
                     batch: int = 100, workers: int = 1) -> float:
    """Bisect the constant positive attention b for the largest value whose
    ``target`` verdict frequency over ``batch`` trials is still >= ``freq``.
    """
    def ok(b):
        trial_cfg = replace(cfg, b=AttentionSchedule.constant(b), trials=batch)
        res = run_trials(trial_cfg, workers=workers)
        f = sum(r.verdict == target for r in res) / len(res)
        log.info("b=%.4f %s frequency %.3f", b, target, f)
        return f >= freq

    if ok(hi):
        return hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo

"""Spread metrics, theorem constants and finite-horizon verdicts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .env import AttentionSchedule
from .graph import PositiveClusterPartition

VERDICTS = ("converged", "deviation-consensus", "clustered", "diverged", "undecided")


class InvalidAlpha(ValueError):
    pass


@dataclass(frozen=True)
class SpreadMetrics:
    h: float
    H: float
    spread: float
    cluster_spreads: tuple[float, ...]


def spread_metrics(s, part: PositiveClusterPartition) -> SpreadMetrics:
    s = np.asarray(getattr(s, "s", s), dtype=float)
    if part.n != len(s):
        raise ValueError(f"partition covers {part.n} nodes, state has {len(s)}")
    h, H = float(s.min()), float(s.max())
    thetas = []
    for block in part.blocks:
        vals = s[[v - 1 for v in block]]
        thetas.append(float(vals.max() - vals.min()))
    return SpreadMetrics(h, H, H - h, tuple(thetas))


def block_extrema(states: np.ndarray, part: PositiveClusterPartition) -> tuple[np.ndarray, np.ndarray]:
    """Per-block (min, max) columns for a (slots x n) state array."""
    idx = [np.array(sorted(b)) - 1 for b in part.blocks]
    lo = np.stack([states[:, k].min(axis=1) for k in idx], axis=1)
    hi = np.stack([states[:, k].max(axis=1) for k in idx], axis=1)
    return lo, hi


def _finite(x) -> float | None:
    return float(x) if np.isfinite(x) else None


@dataclass
class TheoremConstants:
    n: int
    K: int
    alpha: float
    beta: float
    p_star: float
    K0: int
    rho_star: float
    lambda_star: float
    X: list[float]
    Y: list[float]
    J: list[float]
    W: list[float]

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    def hypotheses(self) -> dict:
        """Numerical status of the sequence conditions over the computed blocks."""
        gap = np.array(self.X) - np.array(self.Y)
        J = np.array(self.J)
        W = np.array(self.W)
        half = len(gap) // 2
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(J > 0, W / J, np.inf)
        tail = ratio[half:]
        return {
            "x_minus_y_in_unit_interval": bool(np.all((gap >= 0) & (gap <= 1))),
            "x_minus_y_partial_sum": float(math.fsum(gap)),
            "x_minus_y_sum_diverges": bool(len(gap) > 0 and np.mean(gap[half:]) > 0),
            "J_partial_sum": float(math.fsum(J)),
            "J_sum_diverges": bool(len(J) > 0 and np.mean(J[half:]) > 0),
            "W_partial_sum": float(math.fsum(W)),
            "W_over_J_first": _finite(ratio[0]) if len(ratio) else None,
            "W_over_J_last": _finite(ratio[-1]) if len(ratio) else None,
            "W_over_J_to_zero": bool(
                len(ratio) > 1
                and np.isfinite(ratio[0])
                and ratio[-1] <= 1e-2 * ratio[0]
                and np.all(np.diff(tail) <= 0)
            ),
        }


def theorem_constants(n: int, K: int, alpha: float, beta: float, p_star: float,
                      b: AttentionSchedule, d: AttentionSchedule, M: int) -> TheoremConstants:
    if not 0 < alpha < 1 / (n - 1):
        raise InvalidAlpha(f"alpha={alpha} outside (0, 1/(n-1)) for n={n}")
    if M < 1:
        raise ValueError("need at least one block")
    K0 = (2 * n - 3) * K
    rho = min(alpha, 1 - (n - 1) * alpha)
    lam = 1 - alpha * (n - 1)
    grow = (1 + 2 * beta * (n - 1)) ** K0
    lead = p_star ** (n - 1) * rho ** K0 / 2
    X, Y, J, W = [], [], [], []
    for m in range(M):
        bt = b.evaluate(m * K0, (m + 1) * K0)
        dt = d.evaluate(m * K0, (m + 1) * K0)
        X.append(lead * math.prod((bt * (1 - dt)).tolist()))
        with np.errstate(divide="ignore"):
            # 1 - prod(1 - d) without cancellation for tiny d
            hit = -math.expm1(float(np.sum(np.log1p(-dt))))
        Y.append(grow * hit)
        J.append(math.prod(bt.tolist()))
        W.append(math.fsum(dt.tolist()))
    return TheoremConstants(n, K, alpha, beta, p_star, K0, rho, lam, X, Y, J, W)


@dataclass(frozen=True)
class ClassificationCriteria:
    """Finite-horizon stand-ins for the asymptotic statements.

    ``tail_window`` counts time slots; ``None`` means 10% of the run, at least
    1000 slots (or the whole run if shorter). ``sep`` defaults to ``10 * eps``.
    """

    eps: float = 1e-6
    tail_window: int | None = None
    divergence_threshold: float = 1e6
    sep: float | None = None

    @property
    def separation(self) -> float:
        return 10 * self.eps if self.sep is None else self.sep

    def window(self, last_t: int) -> int:
        if self.tail_window is not None:
            return min(self.tail_window, last_t)
        return min(max(math.ceil(0.1 * last_t), 1000), last_t)

    def to_dict(self) -> dict:
        return {"eps": self.eps, "tail_window": self.tail_window,
                "divergence_threshold": self.divergence_threshold, "sep": self.sep}


@dataclass
class Verdict:
    kind: str
    evidence: dict = field(default_factory=dict)

    @property
    def deviation_consensus(self) -> bool:
        return self.kind in ("converged", "deviation-consensus")


def classify_trajectory(traj, part: PositiveClusterPartition,
                        crit: ClassificationCriteria = ClassificationCriteria()) -> Verdict:
    states = traj.states
    t = traj.t
    spread = states.max(axis=1) - states.min(axis=1)
    ev = {"termination": traj.termination, "last_t": int(t[-1]),
          "max_spread": float(spread.max())}

    if traj.termination != "horizon" or ev["max_spread"] > crit.divergence_threshold:
        return Verdict("diverged", ev)

    w = crit.window(int(t[-1]))
    tail = t >= t[-1] - w
    tail_states = states[tail]
    osc = tail_states.max(axis=0) - tail_states.min(axis=0)
    ev.update(tail_slots=w, tail_rows=int(tail.sum()),
              tail_max_spread=float(spread[tail].max()),
              tail_max_oscillation=float(osc.max()))

    lo, hi = block_extrema(tail_states, part)
    theta = (hi - lo).max(axis=0)
    means = np.array([tail_states[:, np.array(sorted(b)) - 1].mean() for b in part.blocks])
    gaps = np.abs(means[:, None] - means[None, :])
    ev.update(tail_cluster_spreads=theta.tolist(),
              max_block_mean_gap=float(gaps.max()))

    if ev["tail_max_oscillation"] < crit.eps:
        return Verdict("converged", ev)
    if ev["tail_max_spread"] < crit.eps:
        return Verdict("deviation-consensus", ev)
    if part.Tp >= 2 and theta.max() < crit.eps and gaps.max() > crit.separation:
        return Verdict("clustered", ev)
    return Verdict("undecided", ev)

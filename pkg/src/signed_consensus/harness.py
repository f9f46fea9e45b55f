"""Seeded trial execution, Monte-Carlo aggregation and output files.

Each trial owns a PCG64 stream seeded with ``SeedSequence([seed, trial])``.
Within a slot the stream is consumed as: one uniform per arc of the slot
graph in (tail, head) order, then one for B, then one for D. Trials are
stepped together in batches, but every row only ever touches its own stream
and its own state, so results do not depend on batching or worker count.
"""
from __future__ import annotations

import copy
import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterator

import numpy as np

from .analysis import (
    VERDICTS,
    ClassificationCriteria,
    block_extrema,
    classify_trajectory,
    theorem_constants,
)
from .dynamics import NUMERIC_LIMIT, CompiledGraph, DynamicsParams
from .env import AttentionSchedule, GraphSchedule, check_assumptions
from .graph import (
    Arc,
    PositiveClusterPartition,
    SignConflict,
    SignedDigraph,
    positive_cluster_partition,
    read_graph,
    union_graph,
)

log = logging.getLogger(__name__)

CHUNK = 2048
BATCH_BYTES = 256 * 2**20


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InitialSpec:
    kind: str = "uniform"
    lo: float = 0.0
    hi: float = 1.0
    C0: float = 1.0
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("explicit", "uniform", "two-block"):
            raise ConfigError(f"unknown initial kind {self.kind!r}")

    def resolve(self, n: int, part: PositiveClusterPartition, rng: np.random.Generator) -> np.ndarray:
        """Initial state for one trial; ``uniform`` draws n values from ``rng``."""
        if self.kind == "explicit":
            if len(self.values) != n:
                raise ConfigError(f"explicit initial state has {len(self.values)} entries, need {n}")
            return np.array(self.values, dtype=float)
        if self.kind == "uniform":
            return rng.uniform(self.lo, self.hi, n)
        # block k of the positive-cluster partition starts at k * C0
        s = np.empty(n)
        for k, block in enumerate(part.blocks):
            s[[v - 1 for v in block]] = k * self.C0
        return s

    def to_dict(self) -> dict:
        if self.kind == "explicit":
            return {"kind": "explicit", "values": list(self.values)}
        if self.kind == "uniform":
            return {"kind": "uniform", "lo": self.lo, "hi": self.hi}
        return {"kind": "two-block", "C0": self.C0}


@dataclass(frozen=True)
class ExperimentConfig:
    schedule: GraphSchedule
    b: AttentionSchedule
    d: AttentionSchedule
    params: DynamicsParams
    T: int
    trials: int = 1
    seed: int = 0
    initial: InitialSpec = InitialSpec()
    stride: int = 1
    criteria: ClassificationCriteria = ClassificationCriteria()
    K: int = 1
    name: str = "custom"
    assumptions: tuple[str, ...] = ()
    compare_models: bool = False

    def __post_init__(self):
        if self.trials < 1 or self.T < 1 or self.stride < 1:
            raise ConfigError("trials, T and stride must all be >= 1")
        if self.K < 1:
            raise ConfigError("K must be >= 1")

    @property
    def n(self) -> int:
        return self.schedule.n

    def partition(self) -> PositiveClusterPartition:
        """Positive-cluster partition of the total graph."""
        try:
            total = union_graph(list(self.schedule.graphs))
        except SignConflict:
            # inconsistent schedules still get a partition from the first graph
            total = self.schedule.graphs[0]
        return positive_cluster_partition(total)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)


@dataclass
class Trajectory:
    """Recorded slots of one trial.

    ``B``, ``D`` and ``m_edges`` describe the slot that produced each recorded
    state (zero on the slot-0 row).
    """

    trial: int
    t: np.ndarray
    states: np.ndarray
    B: np.ndarray
    D: np.ndarray
    m_edges: np.ndarray
    termination: str = "horizon"

    @property
    def h(self) -> np.ndarray:
        return self.states.min(axis=1)

    @property
    def H(self) -> np.ndarray:
        return self.states.max(axis=1)

    @property
    def spread(self) -> np.ndarray:
        return self.H - self.h

    def cluster_spreads(self, part: PositiveClusterPartition) -> np.ndarray:
        lo, hi = block_extrema(self.states, part)
        return hi - lo

    def to_csv(self, part: PositiveClusterPartition) -> str:
        theta = self.cluster_spreads(part)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "h", "H", "spread"] + [f"theta_{k + 1}" for k in range(part.Tp)]
                   + ["B", "D", "m_edges"])
        h, H = self.h, self.H
        for r in range(len(self.t)):
            w.writerow([int(self.t[r]), repr(float(h[r])), repr(float(H[r])),
                        repr(float(H[r] - h[r]))]
                       + [repr(float(x)) for x in theta[r]]
                       + [int(self.B[r]), int(self.D[r]), int(self.m_edges[r])])
        return buf.getvalue()


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, trial])))


def _batch_size(cfg: ExperimentConfig) -> int:
    per_trial = (cfg.T // cfg.stride + 2) * (cfg.n + 4) * 8
    return int(max(1, min(64, BATCH_BYTES // per_trial)))


def simulate(cfg: ExperimentConfig, trial_ids, model: str | None = None) -> list[Trajectory]:
    """Run the given trials together; row r only ever uses trial_ids[r]'s stream."""
    trial_ids = list(trial_ids)
    model = model or cfg.params.model
    alpha, beta = cfg.params.alpha, cfg.params.beta
    sched = cfg.schedule
    n, T, stride = cfg.n, cfg.T, cfg.stride
    R = len(trial_ids)
    thr = cfg.criteria.divergence_threshold

    compiled = [CompiledGraph(g, sched.prob) for g in sched.graphs]
    part = cfg.partition()
    rngs = [trial_rng(cfg.seed, i) for i in trial_ids]
    s = np.stack([cfg.initial.resolve(n, part, rng) for rng in rngs])

    n_rec = T // stride + 2
    rec_s = np.empty((R, n_rec, n))
    rec_t = np.zeros((R, n_rec), dtype=np.int64)
    rec_ev = np.zeros((R, n_rec, 3), dtype=np.int64)
    count = np.ones(R, dtype=np.int64)
    rec_s[:, 0] = s
    alive = np.ones(R, dtype=bool)
    termination = ["horizon"] * R
    rows = np.arange(R)

    # non-finite initial states never start
    bad0 = ~np.all(np.isfinite(s), axis=1)
    for r in np.flatnonzero(bad0):
        alive[r] = False
        termination[r] = "numeric"

    for t0 in range(0, T, CHUNK):
        if not alive.any():
            break
        t1 = min(T, t0 + CHUNK)
        slots = [compiled[t % len(compiled)] if sched.periodic else compiled[0] for t in range(t0, t1)]
        widths = np.array([c.m + 2 for c in slots])
        offsets = np.concatenate([[0], np.cumsum(widths)])
        U = np.stack([rng.random(int(offsets[-1])) for rng in rngs])
        bvals = cfg.b.evaluate(t0, t1)
        dvals = cfg.d.evaluate(t0, t1)
        for k, cg in enumerate(slots):
            t = t0 + k
            o = offsets[k]
            B = (U[:, o + cg.m] < bvals[k]).astype(np.float64)
            D = (U[:, o + cg.m + 1] < dvals[k]).astype(np.float64)
            with np.errstate(over="ignore", invalid="ignore"):
                new, m_edges = cg.advance(s, U[:, o:o + cg.m], B, D, alpha, beta, model)
            finite = np.all(np.isfinite(new), axis=1)
            nonfinite = alive & ~finite
            s = np.where((alive & finite)[:, None], new, s)
            with np.errstate(invalid="ignore"):
                spread = s.max(axis=1) - s.min(axis=1)
                big = np.abs(s).max(axis=1) > NUMERIC_LIMIT
            stop_num = alive & finite & big
            stop_thr = alive & finite & ~big & (spread > thr)
            died = nonfinite | stop_num | stop_thr
            rec = alive & finite & (((t + 1) % stride == 0) | (t + 1 == T) | died)
            if rec.any():
                r = rows[rec]
                c = count[r]
                rec_s[r, c] = s[r]
                rec_t[r, c] = t + 1
                rec_ev[r, c, 0] = B[r]
                rec_ev[r, c, 1] = D[r]
                rec_ev[r, c, 2] = m_edges[r]
                count[r] += 1
            if died.any():
                for r in np.flatnonzero(died):
                    termination[r] = "threshold" if stop_thr[r] else "numeric"
                    if nonfinite[r] and rec_t[r, count[r] - 1] != t:
                        # keep the last finite state (slot t)
                        rec_s[r, count[r]] = s[r]
                        rec_t[r, count[r]] = t
                        count[r] += 1
                alive &= ~died

    out = []
    for r, i in enumerate(trial_ids):
        c = count[r]
        out.append(Trajectory(
            trial=i,
            t=rec_t[r, :c].copy(),
            states=rec_s[r, :c].copy(),
            B=rec_ev[r, :c, 0].copy(),
            D=rec_ev[r, :c, 1].copy(),
            m_edges=rec_ev[r, :c, 2].copy(),
            termination=termination[r],
        ))
    return out


def run_trial(cfg: ExperimentConfig, trial: int, model: str | None = None) -> Trajectory:
    return simulate(cfg, [trial], model)[0]


def iter_trajectories(cfg: ExperimentConfig, model: str | None = None,
                      trials=None) -> Iterator[Trajectory]:
    ids = list(range(cfg.trials)) if trials is None else list(trials)
    size = _batch_size(cfg)
    for k in range(0, len(ids), size):
        yield from simulate(cfg, ids[k:k + size], model)


@dataclass
class TrialResult:
    trial: int
    verdict: str
    termination: str
    last_t: int
    h: float
    H: float
    spread: float
    cluster_spreads: list[float]
    tail_cluster_spreads: list[float] | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _summarize_trial(traj: Trajectory, cfg: ExperimentConfig, part) -> TrialResult:
    v = classify_trajectory(traj, part, cfg.criteria)
    final = traj.states[-1]
    lo, hi = block_extrema(final[None, :], part)
    return TrialResult(
        trial=traj.trial,
        verdict=v.kind,
        termination=traj.termination,
        last_t=int(traj.t[-1]),
        h=float(final.min()),
        H=float(final.max()),
        spread=float(final.max() - final.min()),
        cluster_spreads=(hi - lo)[0].tolist(),
        tail_cluster_spreads=v.evidence.get("tail_cluster_spreads"),
    )


def _run_batch(args) -> list[TrialResult]:
    cfg, ids, model = args
    part = cfg.partition()
    return [_summarize_trial(tr, cfg, part) for tr in simulate(cfg, ids, model)]


def run_trials(cfg: ExperimentConfig, model: str | None = None, workers: int = 1) -> list[TrialResult]:
    ids = list(range(cfg.trials))
    size = _batch_size(cfg)
    if workers > 1:
        size = max(1, min(size, math.ceil(len(ids) / workers)))
    jobs = [(cfg, ids[k:k + size], model) for k in range(0, len(ids), size)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            batches = list(ex.map(_run_batch, jobs))
    else:
        batches = [_run_batch(j) for j in jobs]
    results = [r for b in batches for r in b]
    return sorted(results, key=lambda r: r.trial)


def _tally(results: list[TrialResult]) -> dict:
    N = len(results)
    counts = {k: 0 for k in VERDICTS}
    for r in results:
        counts[r.verdict] += 1
    freqs = {k: c / N for k, c in counts.items()}
    stderr = {k: math.sqrt(p * (1 - p) / N) for k, p in freqs.items()}
    return {"counts": counts, "frequencies": freqs, "stderr": stderr}


@dataclass
class ExperimentSummary:
    name: str
    seed: int
    trials: int
    counts: dict
    frequencies: dict
    stderr: dict
    results: list[TrialResult]
    assumptions: dict
    constants: dict | None
    config: dict
    contrast: dict | None = None
    extra: dict = field(default_factory=dict)

    def frequency(self, *kinds: str) -> float:
        return sum(self.frequencies[k] for k in kinds)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "trials": self.trials,
            "counts": self.counts,
            "frequencies": self.frequencies,
            "stderr": self.stderr,
            "assumptions": self.assumptions,
            "constants": self.constants,
            "config": self.config,
            "contrast": self.contrast,
            "results": [r.to_dict() for r in self.results],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"


def constants_report(cfg: ExperimentConfig, M: int | None = None) -> dict | None:
    """Theorem constants and sequence conditions over the configured horizon."""
    n = cfg.n
    if not 0 < cfg.params.alpha < 1 / (n - 1):
        return None
    K0 = (2 * n - 3) * cfg.K
    M = M or max(1, cfg.T // K0)
    tc = theorem_constants(n, cfg.K, cfg.params.alpha, cfg.params.beta,
                           cfg.schedule.p_lower, cfg.b, cfg.d, M)
    head = 5
    return {
        "K0": tc.K0,
        "rho_star": tc.rho_star,
        "lambda_star": tc.lambda_star,
        "blocks": M,
        "X_head": tc.X[:head],
        "Y_head": tc.Y[:head],
        "J_head": tc.J[:head],
        "W_head": tc.W[:head],
        "b_summable": cfg.b.summable(),
        "d_summable": cfg.d.summable(),
        "d_partial_sum": cfg.d.partial_sum(cfg.T),
        "hypotheses": tc.hypotheses(),
    }


def assumption_report(cfg: ExperimentConfig) -> dict:
    rep = check_assumptions(cfg.schedule, max(cfg.T, cfg.K), cfg.K).to_dict()
    rep["cited"] = list(cfg.assumptions)
    rep["cited_hold"] = all(rep[a] for a in cfg.assumptions)
    return rep


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentSummary:
    results = run_trials(cfg, workers=workers)
    tally = _tally(results)
    contrast = None
    if cfg.compare_models:
        other = "flip" if cfg.params.model == "relative" else "relative"
        alt = run_trials(cfg, model=other, workers=workers)
        contrast = {"model": other, **_tally(alt),
                    "verdicts": [r.verdict for r in alt]}
    return ExperimentSummary(
        name=cfg.name,
        seed=cfg.seed,
        trials=cfg.trials,
        results=results,
        assumptions=assumption_report(cfg),
        constants=constants_report(cfg),
        config=config_to_dict(cfg),
        contrast=contrast,
        **tally,
    )


# -- config files ---------------------------------------------------------

def _arcs_to_list(g: SignedDigraph) -> list:
    return [[a.tail, a.head, a.sign] for a in g.sorted_arcs()]


def config_to_dict(cfg: ExperimentConfig) -> dict:
    sched = cfg.schedule
    graph: dict[str, Any] = {"mode": "periodic" if sched.periodic else "static"}
    if sched.periodic:
        graph["graphs"] = [_arcs_to_list(g) for g in sched.graphs]
    else:
        graph["arcs"] = _arcs_to_list(sched.graphs[0])
    env: dict[str, Any] = {"n": cfg.n, "graph": graph, "q_all": sched.q_all,
                           "b": cfg.b.to_dict(), "d": cfg.d.to_dict()}
    if sched.q:
        env["q"] = [[t, h, p] for (t, h), p in sorted(sched.q.items())]
    return {
        "name": cfg.name,
        "env": env,
        "params": {"alpha": cfg.params.alpha, "beta": cfg.params.beta, "model": cfg.params.model},
        "T": cfg.T,
        "trials": cfg.trials,
        "seed": cfg.seed,
        "initial": cfg.initial.to_dict(),
        "stride": cfg.stride,
        "K": cfg.K,
        "criteria": cfg.criteria.to_dict(),
        "assumptions": list(cfg.assumptions),
        "compare_models": cfg.compare_models,
    }


def _attention(d: dict, key: str) -> AttentionSchedule:
    if not isinstance(d, dict):
        raise ConfigError(f"env.{key} must be a mapping")
    kind = d.get("kind", "constant")
    if kind == "power-decay":
        kind = "power"
    return AttentionSchedule(kind, float(d.get("c", 0.0)), float(d.get("gamma", 0.0)),
                             tuple(d.get("values", ())))


def _graph_from(spec, n: int) -> SignedDigraph:
    return SignedDigraph(n, frozenset(Arc(int(t), int(h), s) for t, h, s in spec))


def config_from_dict(data: dict, base_dir: Path | None = None) -> ExperimentConfig:
    try:
        env = data["env"]
        n = int(env["n"])
        gspec = env["graph"]
        mode = gspec.get("mode", "static")
        if "files" in gspec:
            paths = [Path(base_dir or ".") / p for p in gspec["files"]]
            graphs = [read_graph(p) for p in paths]
        elif "graphs" in gspec:
            graphs = [_graph_from(g, n) for g in gspec["graphs"]]
        elif "arcs" in gspec:
            graphs = [_graph_from(gspec["arcs"], n)]
        else:
            raise ConfigError("env.graph needs 'arcs', 'graphs' or 'files'")
        if any(g.n != n for g in graphs):
            raise ConfigError("graph node counts do not match env.n")
        if mode not in ("static", "periodic"):
            raise ConfigError(f"unknown graph mode {mode!r}")
        q = {(int(t), int(h)): float(p) for t, h, p in env.get("q", [])}
        sched = GraphSchedule(tuple(graphs), mode == "periodic", float(env.get("q_all", 1.0)), q)
        params = data["params"]
        crit = data.get("criteria", {})
        init = data.get("initial", {"kind": "uniform"})
        return ExperimentConfig(
            schedule=sched,
            b=_attention(env.get("b", {"kind": "constant", "c": 0.0}), "b"),
            d=_attention(env.get("d", {"kind": "constant", "c": 0.0}), "d"),
            params=DynamicsParams(float(params["alpha"]), float(params["beta"]),
                                  params.get("model", "relative")),
            T=int(data["T"]),
            trials=int(data.get("trials", 1)),
            seed=int(data.get("seed", 0)),
            initial=InitialSpec(init.get("kind", "uniform"), float(init.get("lo", 0.0)),
                                float(init.get("hi", 1.0)), float(init.get("C0", 1.0)),
                                tuple(float(v) for v in init.get("values", ()))),
            stride=int(data.get("stride", 1)),
            criteria=ClassificationCriteria(
                eps=float(crit.get("eps", 1e-6)),
                tail_window=None if crit.get("tail_window") is None else int(crit["tail_window"]),
                divergence_threshold=float(crit.get("divergence_threshold", 1e6)),
                sep=None if crit.get("sep") is None else float(crit["sep"]),
            ),
            K=int(data.get("K", 1)),
            name=str(data.get("name", "custom")),
            assumptions=tuple(data.get("assumptions", ())),
            compare_models=bool(data.get("compare_models", False)),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, OSError) as exc:
        raise ConfigError(f"invalid config: {exc!r}") from exc


def _coerce(value: str):
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``a.b.c=value`` overrides; values are parsed as JSON when possible."""
    data = copy.deepcopy(data)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not KEY=VALUE")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        node = data
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-mapping")
        node[parts[-1]] = _coerce(value)
    return data


def load_config_dict(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc


def write_outputs(summary: ExperimentSummary, cfg: ExperimentConfig, out_dir, csv_trials=None) -> list[Path]:
    """Write summary.json and one trajectory CSV per trial."""
    out = Path(out_dir)
    (out / "trajectories").mkdir(parents=True, exist_ok=True)
    written = [out / "summary.json"]
    written[0].write_text(summary.to_json())
    part = cfg.partition()
    ids = range(cfg.trials if csv_trials is None else min(csv_trials, cfg.trials))
    for traj in iter_trajectories(cfg, trials=ids):
        p = out / "trajectories" / f"trial_{traj.trial:04d}.csv"
        p.write_text(traj.to_csv(part))
        written.append(p)
    return written

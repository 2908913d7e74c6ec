"""Agent-based Monte Carlo of the networked game with incentives.

Each elementary event advances the clock by 1/N, so one sweep of N events
is one unit of time, the same time axis as the pair-approximation ODEs.
Randomness comes from numpy's PCG64; an ensemble spawns one independent
stream per run from the master seed via ``SeedSequence.spawn``, so results
never depend on how runs are scheduled across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numba import njit

from .game import FitnessError, GameParams, Incentive, IncentiveKind, Selection, payoff_matrix
from .graphs import Graph, GraphSpec, generate
from .meanfield import UpdateRule
from .optimal import Target

RULE_CODES = {UpdateRule.DB: 0, UpdateRule.BD: 1, UpdateRule.IM: 2, UpdateRule.PC: 3}
SHARE_CODES = {IncentiveKind.NONE: 0, IncentiveKind.REWARD: 1, IncentiveKind.PUNISH: 2}

_OK, _FITNESS_ERROR = 0, 1
_REACHED, _ABSORBED, _TIMEOUT, _FAILED = 0, 1, 2, 3


class Outcome(str, Enum):
    REACHED = "reached_target"
    ABSORBED = "absorbed_all_d"
    TIMEOUT = "timed_out"


# --- kernels ------------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _fit(i, s, indptr, indices, M, omega):
    pi = 0.0
    si = s[i]
    for a in range(indptr[i], indptr[i + 1]):
        pi += M[si, s[indices[a]]]
    return 1.0 - omega + omega * pi


@njit(cache=True, nogil=True)
def _step(rule, s, indptr, indices, M, omega, rng, buf):
    """Apply one update event in place. Returns (status, change in cooperator count)."""
    n = s.shape[0]
    if rule == 1:
        tot = 0.0
        for i in range(n):
            f = _fit(i, s, indptr, indices, M, omega)
            if f <= 0.0:
                return _FITNESS_ERROR, 0
            buf[i] = f
            tot += f
        r = rng.random() * tot
        parent = n - 1
        acc = 0.0
        for i in range(n):
            acc += buf[i]
            if r < acc:
                parent = i
                break
        d = indptr[parent + 1] - indptr[parent]
        child = indices[indptr[parent] + rng.integers(0, d)]
        old = s[child]
        s[child] = s[parent]
        return _OK, s[child] - old

    i = rng.integers(0, n)
    lo, hi = indptr[i], indptr[i + 1]
    d = hi - lo
    if rule == 3:
        j = indices[lo + rng.integers(0, d)]
        fi = _fit(i, s, indptr, indices, M, omega)
        fj = _fit(j, s, indptr, indices, M, omega)
        if fi <= 0.0 or fj <= 0.0:
            return _FITNESS_ERROR, 0
        if rng.random() < 1.0 / (1.0 + math.exp(-(fj - fi))):
            old = s[i]
            s[i] = s[j]
            return _OK, s[i] - old
        return _OK, 0

    tot = 0.0
    if rule == 2:
        f0 = _fit(i, s, indptr, indices, M, omega)
        if f0 <= 0.0:
            return _FITNESS_ERROR, 0
        tot = f0
    for a in range(d):
        f = _fit(indices[lo + a], s, indptr, indices, M, omega)
        if f <= 0.0:
            return _FITNESS_ERROR, 0
        buf[a] = f
        tot += f
    r = rng.random() * tot
    if rule == 2:
        if r < f0:
            return _OK, 0
        r -= f0
    w = d - 1
    acc = 0.0
    for a in range(d):
        acc += buf[a]
        if r < acc:
            w = a
            break
    old = s[i]
    s[i] = s[indices[lo + w]]
    return _OK, s[i] - old


@njit(cache=True, nogil=True)
def _steps(rule, s, indptr, indices, M, omega, rng, count):
    buf = np.empty(s.shape[0], dtype=np.float64)
    for _ in range(count):
        status, _d = _step(rule, s, indptr, indices, M, omega, rng, buf)
        if status != _OK:
            return status
    return _OK


@njit(cache=True, nogil=True)
def _run(rule, s, indptr, indices, M, omega, rng, target_count, max_steps, stride, outlay_scale, share):
    """Evolve until target / all-D / max_steps. Records every ``stride`` events."""
    n = s.shape[0]
    nc = 0
    for i in range(n):
        nc += s[i]
    cap = max_steps // stride + 2
    rec_step = np.empty(cap, dtype=np.int64)
    rec_count = np.empty(cap, dtype=np.int64)
    rec_cost = np.empty(cap, dtype=np.float64)
    buf = np.empty(n, dtype=np.float64)
    m = 0
    cost = 0.0
    step = 0
    code = _TIMEOUT
    while True:
        if step % stride == 0:
            rec_step[m] = step
            rec_count[m] = nc
            rec_cost[m] = cost
            m += 1
        if nc >= target_count:
            code = _REACHED
            break
        if nc == 0:
            code = _ABSORBED
            break
        if step >= max_steps:
            code = _TIMEOUT
            break
        if share == 1:
            x = outlay_scale * nc / n
            cost += 0.5 * x * x / n
        elif share == 2:
            x = outlay_scale * (n - nc) / n
            cost += 0.5 * x * x / n
        status, dc = _step(rule, s, indptr, indices, M, omega, rng, buf)
        if status != _OK:
            code = _FAILED
            break
        nc += dc
        step += 1
    if rec_step[m - 1] != step:
        rec_step[m] = step
        rec_count[m] = nc
        rec_cost[m] = cost
        m += 1
    return code, rec_step[:m], rec_count[:m], rec_cost[:m]


# --- python surface -------------------------------------------------------------------------


@dataclass
class PopulationState:
    strategies: np.ndarray
    coop_count: int = -1

    def __post_init__(self):
        self.strategies = np.asarray(self.strategies, dtype=np.int64)
        if self.coop_count < 0:
            self.coop_count = int(self.strategies.sum())

    @property
    def n(self) -> int:
        return self.strategies.shape[0]

    @property
    def p_c(self) -> float:
        return self.coop_count / self.n


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def init_state(n: int, p0: float, rng: np.random.Generator) -> PopulationState:
    """Place exactly round(p0*N) cooperators uniformly at random."""
    if not 0.0 < p0 < 1.0:
        raise ValueError(f"p0 must lie in (0, 1), got {p0}")
    n_c = int(round(p0 * n))
    if n_c in (0, n):
        raise ValueError(f"p0={p0} rounds to {n_c} of {n} cooperators: degenerate start")
    s = np.zeros(n, dtype=np.int64)
    s[rng.permutation(n)[:n_c]] = 1
    return PopulationState(s, n_c)


def elementary_step(rule: UpdateRule, state: PopulationState, g: Graph, game: GameParams,
                    inc: Incentive, sel: Selection, rng: np.random.Generator) -> PopulationState:
    """One replacement/imitation event, applied in place."""
    return advance(rule, state, g, game, inc, sel, rng, 1)


def advance(rule: UpdateRule, state: PopulationState, g: Graph, game: GameParams,
            inc: Incentive, sel: Selection, rng: np.random.Generator, events: int) -> PopulationState:
    indptr, indices = g.csr
    status = _steps(RULE_CODES[UpdateRule.parse(rule)], state.strategies, indptr, indices,
                    payoff_matrix(game, inc), sel.omega, rng, int(events))
    state.coop_count = int(state.strategies.sum())
    if status == _FITNESS_ERROR:
        raise FitnessError(f"non-positive fitness under {inc} with omega={sel.omega}")
    return state


@dataclass
class SimulationConfig:
    graph: GraphSpec | Graph = field(default_factory=GraphSpec)
    rule: UpdateRule = UpdateRule.DB
    game: GameParams = field(default_factory=GameParams)
    inc: Incentive = field(default_factory=Incentive)
    sel: Selection = field(default_factory=Selection)
    p0: float = 0.5
    delta: float = 0.01
    t_max: float = 5000.0
    seed: int = 0
    record_stride: float = 1.0

    def __post_init__(self):
        self.rule = UpdateRule.parse(self.rule)
        Target(self.p0, self.delta)
        if self.t_max <= 0:
            raise ValueError("t_max must be positive")
        if self.record_stride <= 0:
            raise ValueError("record_stride must be positive")

    def build_graph(self) -> Graph:
        return self.graph if isinstance(self.graph, Graph) else generate(self.graph)


@dataclass
class Trajectory:
    t: np.ndarray
    p_c: np.ndarray
    outlay_rate: np.ndarray
    cumulative_cost: np.ndarray
    outcome: Outcome
    t_end: float

    @property
    def reached(self) -> bool:
        return self.outcome is Outcome.REACHED

    def to_csv(self) -> str:
        rows = (
            f"{t:.15g},{p:.15g},{o:.15g},{c:.15g}"
            for t, p, o, c in zip(self.t, self.p_c, self.outlay_rate, self.cumulative_cost)
        )
        return "t,p_c,outlay_rate,cumulative_cost\n" + "\n".join(rows) + "\n"


def _outlay_scale(g: Graph, inc: Incentive) -> float:
    # k*N generalises to the total degree 2E on irregular graphs
    return float(g.degrees.sum()) * inc.mu


def run(config: SimulationConfig, graph: Graph | None = None,
        rng: np.random.Generator | None = None) -> Trajectory:
    """Single Monte Carlo run until the target, all-D absorption or ``t_max``."""
    g = graph if graph is not None else config.build_graph()
    rng = make_rng(config.seed) if rng is None else rng
    n = g.n
    state = init_state(n, config.p0, rng)
    indptr, indices = g.csr
    target_count = int(math.ceil((1.0 - config.delta) * n - 1e-9))
    stride = max(1, int(round(config.record_stride * n)))
    max_steps = int(round(config.t_max * n))
    scale = _outlay_scale(g, config.inc)
    share = SHARE_CODES[config.inc.kind]
    code, steps, counts, costs = _run(
        RULE_CODES[config.rule], state.strategies, indptr, indices,
        payoff_matrix(config.game, config.inc), config.sel.omega, rng,
        target_count, max_steps, stride, scale, share,
    )
    if code == _FAILED:
        raise FitnessError(f"non-positive fitness under {config.inc} with omega={config.sel.omega}")
    p = counts / n
    if share == 1:
        outlay = 0.5 * (scale * p) ** 2
    elif share == 2:
        outlay = 0.5 * (scale * (1 - p)) ** 2
    else:
        outlay = np.zeros_like(p)
    outcome = {_REACHED: Outcome.REACHED, _ABSORBED: Outcome.ABSORBED, _TIMEOUT: Outcome.TIMEOUT}[code]
    t = steps / n
    return Trajectory(t=t, p_c=p, outlay_rate=outlay, cumulative_cost=costs.copy(),
                      outcome=outcome, t_end=float(t[-1]))


# --- ensembles ------------------------------------------------------------------------------


@dataclass
class EnsembleSummary:
    runs: int
    success_rate: float
    n_absorbed: int
    n_timeout: int
    mean_tf: float
    sd_tf: float
    mean_cost: float
    sd_cost: float
    t: np.ndarray
    mean_p_c: np.ndarray
    sd_p_c: np.ndarray
    t_f: np.ndarray
    costs: np.ndarray
    reached: np.ndarray

    def as_dict(self) -> dict:
        return {
            "runs": self.runs,
            "success_rate": self.success_rate,
            "n_absorbed": self.n_absorbed,
            "n_timeout": self.n_timeout,
            "mean_tf": self.mean_tf,
            "sd_tf": self.sd_tf,
            "mean_cost": self.mean_cost,
            "sd_cost": self.sd_cost,
        }

    def summary_text(self) -> str:
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in self.as_dict().items())

    def binned_csv(self) -> str:
        rows = (f"{t:.15g},{m:.15g},{s:.15g}" for t, m, s in zip(self.t, self.mean_p_c, self.sd_p_c))
        return "t,mean_p_c,sd_p_c\n" + "\n".join(rows) + "\n"


def _fmt(v) -> str:
    return f"{v:.15g}" if isinstance(v, float) else str(v)


def run_seeds(master_seed: int, runs: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(master_seed).spawn(runs)


def _mean_sd(x: np.ndarray) -> tuple[float, float]:
    if x.size == 0:
        return math.nan, math.nan
    return float(x.mean()), float(x.std(ddof=1)) if x.size > 1 else 0.0


def _binned(trajs: list[Trajectory], stride: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    t_end = max(tr.t_end for tr in trajs)
    n_bins = int(math.floor(t_end / stride + 1e-9)) + 1
    grid = np.arange(n_bins) * stride
    values = np.empty((len(trajs), n_bins))
    for r, tr in enumerate(trajs):
        # last recorded value at or before each grid time; finished runs hold their final value
        idx = np.searchsorted(tr.t, grid + 1e-9, side="right") - 1
        values[r] = tr.p_c[idx]
    sd = values.std(axis=0, ddof=1) if len(trajs) > 1 else np.zeros(n_bins)
    return grid, values.mean(axis=0), sd


def ensemble(config: SimulationConfig, runs: int, parallelism: int = 1,
             graph: Graph | None = None) -> EnsembleSummary:
    """Run ``runs`` independent replicas; seeds are spawned from ``config.seed``."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    g = graph if graph is not None else config.build_graph()
    seeds = run_seeds(config.seed, runs)

    def one(seq):
        return run(config, g, make_rng(seq))

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            trajs = list(pool.map(one, seeds))
    else:
        trajs = [one(seq) for seq in seeds]

    reached = np.array([tr.reached for tr in trajs])
    t_f = np.array([tr.t_end for tr in trajs])
    costs = np.array([tr.cumulative_cost[-1] for tr in trajs])
    mean_tf, sd_tf = _mean_sd(t_f[reached])
    mean_cost, sd_cost = _mean_sd(costs[reached])
    grid, mean_p, sd_p = _binned(trajs, config.record_stride)
    return EnsembleSummary(
        runs=runs,
        success_rate=float(reached.mean()),
        n_absorbed=sum(tr.outcome is Outcome.ABSORBED for tr in trajs),
        n_timeout=sum(tr.outcome is Outcome.TIMEOUT for tr in trajs),
        mean_tf=mean_tf,
        sd_tf=sd_tf,
        mean_cost=mean_cost,
        sd_cost=sd_cost,
        t=grid,
        mean_p_c=mean_p,
        sd_p_c=sd_p,
        t_f=t_f,
        costs=costs,
        reached=reached,
    )

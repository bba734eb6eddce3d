"""Metropolis simulated annealing for :class:`~anneal_pde.ising.IsingModel`.

Each read starts from a uniformly random spin state and performs
``sweeps`` passes per temperature step; a pass proposes every spin once in
a freshly shuffled order.  A proposal raising the energy by ``dE > 0`` is
accepted with probability ``exp(-dE / T)`` (Boltzmann constant set to 1).
The lowest-energy state seen at the end of any pass is the read's result.

Reads use independent RNG streams derived from ``(seed, read_index)``, so
results do not depend on how reads are scheduled.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from numba import njit
from scipy.optimize import brentq
from scipy.sparse import csr_matrix

from .errors import ConfigError
from .ising import IsingModel, energy

GEOMETRIC = "geometric"
LOGARITHMIC = "logarithmic"
AUTO = "auto"


class CalibrationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Schedule:
    """Temperature schedule.

    ``geometric``: ``T0 * ratio**step``.
    ``logarithmic``: ``a * n_spins / log(alpha * step + 2)``.
    ``auto``: geometric from a calibrated ``T0`` (uphill acceptance
    ``target``) down to ``T0 * final_ratio`` (or ``t_final`` if given).
    """

    kind: str = AUTO
    steps: int = 200
    t0: float | None = None
    ratio: float | None = None
    a: float = 1.0
    alpha: float = 1.0
    target: float = 0.5
    final_ratio: float = 1e-3
    t_final: float | None = None

    def __post_init__(self):
        if self.kind not in (GEOMETRIC, LOGARITHMIC, AUTO):
            raise ConfigError(f"unknown schedule kind {self.kind!r}")
        if self.steps < 1:
            raise ConfigError("schedule needs at least one step")
        if self.kind == GEOMETRIC:
            if self.t0 is None or not self.t0 > 0:
                raise ConfigError("geometric schedule needs t0 > 0")
            if self.ratio is None or not 0.0 < self.ratio < 1.0:
                raise ConfigError("geometric ratio must lie in (0, 1)")
        elif self.kind == LOGARITHMIC:
            if not (self.a > 0 and self.alpha > 0):
                raise ConfigError("logarithmic schedule needs a > 0 and alpha > 0")
        else:
            if not 0.0 < self.target < 1.0:
                raise ConfigError("target acceptance must lie in (0, 1)")
            if not 0.0 < self.final_ratio < 1.0:
                raise ConfigError("final_ratio must lie in (0, 1)")
            if self.t_final is not None and not self.t_final > 0:
                raise ConfigError("t_final must be > 0")

    @classmethod
    def geometric(cls, t0: float, ratio: float, steps: int) -> "Schedule":
        return cls(GEOMETRIC, steps, t0=t0, ratio=ratio)

    @classmethod
    def logarithmic(cls, a: float, alpha: float, steps: int) -> "Schedule":
        return cls(LOGARITHMIC, steps, a=a, alpha=alpha)

    @classmethod
    def auto(cls, target: float = 0.5, final_ratio: float = 1e-3, steps: int = 200,
             t_final: float | None = None) -> "Schedule":
        return cls(AUTO, steps, target=target, final_ratio=final_ratio, t_final=t_final)

    @property
    def calibrated(self) -> bool:
        return self.kind != AUTO or self.t0 is not None

    def with_t0(self, t0: float) -> "Schedule":
        """Auto schedule with its start temperature fixed and end ratio solved."""
        t_end = self.t_final if self.t_final is not None else t0 * self.final_ratio
        ratio = (t_end / t0) ** (1.0 / (self.steps - 1)) if self.steps > 1 else 1.0
        return replace(self, t0=float(t0), ratio=ratio)


def temperature_at(schedule: Schedule, step: int, n_spins: int = 1) -> float:
    if schedule.kind == LOGARITHMIC:
        return schedule.a * n_spins / math.log(schedule.alpha * step + 2.0)
    if schedule.t0 is None:
        raise ConfigError("auto schedule must be calibrated before use")
    return schedule.t0 * schedule.ratio ** step


def temperatures(schedule: Schedule, n_spins: int = 1) -> np.ndarray:
    return np.array([temperature_at(schedule, t, n_spins) for t in range(schedule.steps)])


@dataclass(frozen=True)
class AnnealParams:
    schedule: Schedule = Schedule()
    reads: int = 100
    sweeps: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.reads < 1:
            raise ConfigError("reads must be >= 1")
        if self.sweeps < 1:
            raise ConfigError("sweeps must be >= 1")


@dataclass(frozen=True)
class AnnealResult:
    state: np.ndarray
    energy: float
    read_energies: np.ndarray
    read_states: np.ndarray
    tracked_energies: np.ndarray
    initial_energies: np.ndarray
    temperatures: np.ndarray
    trace: np.ndarray | None = None

    @property
    def best_read(self) -> int:
        return int(np.argmin(self.read_energies))


def read_seeds(seed: int, reads: int) -> np.ndarray:
    """One 32-bit seed per read, derived only from ``(seed, read_index)``."""
    return np.array([np.random.SeedSequence([seed, r]).generate_state(1)[0] for r in range(reads)],
                    dtype=np.int64)


@njit(cache=True, inline="always")
def _next(state):
    # xorshift64* on a one-element uint64 array
    x = state[0]
    x ^= x >> np.uint64(12)
    x ^= x << np.uint64(25)
    x ^= x >> np.uint64(27)
    state[0] = x
    return x * np.uint64(2685821657736338717)


@njit(cache=True, inline="always")
def _uniform(state):
    return (_next(state) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def _seed_state(seed):
    # splitmix64 scramble so that nearby seeds give unrelated streams
    z = np.uint64(seed) + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    if z == np.uint64(0):
        z = np.uint64(1)
    st = np.empty(1, dtype=np.uint64)
    st[0] = z
    return st


@njit(cache=True)
def _shuffle(order, state):
    for i in range(order.shape[0] - 1, 0, -1):
        j = int(_next(state) % np.uint64(i + 1))
        order[i], order[j] = order[j], order[i]


@njit(cache=True)
def _local_fields(indptr, indices, data, h, s):
    n = s.shape[0]
    L = h.copy()
    for k in range(n):
        acc = 0.0
        for p in range(indptr[k], indptr[k + 1]):
            acc += data[p] * s[indices[p]]
        L[k] += acc
    return L


@njit(cache=True)
def _raw_energy(indptr, indices, data, h, s):
    e = 0.0
    for k in range(s.shape[0]):
        e += h[k] * s[k]
        for p in range(indptr[k], indptr[k + 1]):
            if indices[p] > k:
                e += data[p] * s[k] * s[indices[p]]
    return e


@njit(cache=True, inline="always")
def _flip(k, s, L, indptr, indices, data):
    s[k] = -s[k]
    two = 2.0 * s[k]
    for p in range(indptr[k], indptr[k + 1]):
        L[indices[p]] += two * data[p]


@njit(cache=True, inline="always")
def _accept(dE, beta, state):
    if dE <= 0.0:
        return True
    x = dE * beta
    if x > 40.0:
        return False
    return _uniform(state) < math.exp(-x)


@njit(cache=True)
def _random_spins(n, state):
    s = np.empty(n)
    for k in range(n):
        s[k] = 1.0 if _uniform(state) < 0.5 else -1.0
    return s


@njit(cache=True)
def _anneal(indptr, indices, data, h, temps, sweeps, seeds):
    n = h.shape[0]
    reads = seeds.shape[0]
    steps = temps.shape[0]
    states = np.empty((reads, n), dtype=np.int8)
    finals = np.empty(reads)
    initial = np.empty(reads)
    trace = np.empty((reads, steps))
    order = np.arange(n)
    for r in range(reads):
        rng = _seed_state(seeds[r])
        s = _random_spins(n, rng)
        L = _local_fields(indptr, indices, data, h, s)
        E = _raw_energy(indptr, indices, data, h, s)
        initial[r] = E
        best = E
        best_s = s.copy()
        for t in range(steps):
            beta = 1.0 / temps[t]
            for _ in range(sweeps):
                _shuffle(order, rng)
                for q in range(n):
                    k = order[q]
                    dE = -2.0 * s[k] * L[k]
                    if _accept(dE, beta, rng):
                        _flip(k, s, L, indptr, indices, data)
                        E += dE
                if E < best:
                    best = E
                    best_s[:] = s
            trace[r, t] = E
        finals[r] = best
        for k in range(n):
            states[r, k] = np.int8(best_s[k])
    return states, finals, initial, trace


@njit(cache=True)
def _frozen(indptr, indices, data, h, T, sweeps, seed):
    n = h.shape[0]
    rng = _seed_state(seed)
    s = _random_spins(n, rng)
    L = _local_fields(indptr, indices, data, h, s)
    m = sweeps * n
    dEs = np.empty(m)
    acc = np.zeros(m, dtype=np.bool_)
    order = np.arange(n)
    beta = 1.0 / T
    c = 0
    for _ in range(sweeps):
        _shuffle(order, rng)
        for q in range(n):
            k = order[q]
            dE = -2.0 * s[k] * L[k]
            dEs[c] = dE
            if _accept(dE, beta, rng):
                _flip(k, s, L, indptr, indices, data)
                acc[c] = True
            c += 1
    return dEs, acc


def _csr(model: IsingModel):
    indptr, indices, data = model.adjacency
    return indptr, indices, data, np.ascontiguousarray(model.fields, dtype=float)


def auto_temperature(model: IsingModel, target: float = 0.5, seed: int = 0,
                     samples: int = 4096) -> float:
    """Temperature at which random uphill single flips are accepted with mean rate ``target``.

    Uphill energy changes are sampled at random states and random flip
    sites.  Without any uphill move, returns 1.0 and emits a
    :class:`CalibrationWarning`.
    """
    if not 0.0 < target < 1.0:
        raise ConfigError("target acceptance must lie in (0, 1)")
    n = model.n_spins
    if n == 0:
        warnings.warn("empty model; falling back to T = 1", CalibrationWarning, stacklevel=2)
        return 1.0
    rng = np.random.default_rng([seed, 0x5A])
    S = rng.choice(np.array([-1.0, 1.0]), size=(samples, n))
    k = rng.integers(0, n, size=samples)
    indptr, indices, data = model.adjacency
    M = csr_matrix((data, indices, indptr), shape=(n, n))
    rows = np.arange(samples)
    Lk = model.fields[k] + (M @ S.T)[k, rows]
    dE = -2.0 * S[rows, k] * Lk
    scale = np.max(np.abs(dE)) if dE.size else 0.0
    up = dE[dE > 1e-12 * max(scale, 1e-300)]
    if up.size == 0:
        warnings.warn("no uphill moves sampled; falling back to T = 1", CalibrationWarning, stacklevel=2)
        return 1.0
    if np.ptp(up) == 0.0:
        return float(up[0] / -math.log(target))

    def gap(logT):
        return np.mean(np.exp(-up / math.exp(logT))) - target

    lo, hi = math.log(up.min()) - 10.0, math.log(up.max()) + 10.0
    return float(math.exp(brentq(gap, lo, hi, xtol=1e-12)))


def resolve_schedule(schedule: Schedule, model: IsingModel, seed: int = 0) -> Schedule:
    if schedule.calibrated:
        return schedule
    return schedule.with_t0(auto_temperature(model, schedule.target, seed))


def anneal(model: IsingModel, params: AnnealParams = AnnealParams(), trace: bool = False) -> AnnealResult:
    """Best state over ``params.reads`` independent Metropolis chains.

    Ties between reads go to the lowest read index.
    """
    if model.n_spins == 0:
        raise ConfigError("cannot anneal an empty model")
    schedule = resolve_schedule(params.schedule, model, params.seed)
    temps = temperatures(schedule, model.n_spins)
    if not np.all(temps > 0) or not np.all(np.isfinite(temps)):
        raise ConfigError("schedule produced non-positive temperatures")
    indptr, indices, data, h = _csr(model)
    states, tracked, initial, traces = _anneal(indptr, indices, data, h, temps,
                                               params.sweeps, read_seeds(params.seed, params.reads))
    finals = np.array([energy(model, st) for st in states])
    best = int(np.argmin(finals))
    tr = None
    if trace:
        tr = np.column_stack([np.arange(len(temps)), temps, traces[best] + model.offset])
    return AnnealResult(states[best].copy(), float(finals[best]), finals, states,
                        tracked + model.offset, initial + model.offset, temps, tr)


def metropolis_statistics(model: IsingModel, T: float, sweeps: int, seed: int = 0):
    """Run ``sweeps`` passes at fixed ``T``; return proposed ``dE`` and acceptance flags."""
    indptr, indices, data, h = _csr(model)
    return _frozen(indptr, indices, data, h, float(T), int(sweeps), int(read_seeds(seed, 1)[0]))


def make_annealer(params: AnnealParams):
    """Annealer callback for :func:`anneal_pde.encoding.solve_iterative`.

    Epoch ``e`` anneals with seed ``(params.seed, e)`` folded into one integer.
    """
    def annealer(model: IsingModel, epoch: int) -> np.ndarray:
        sub = int(np.random.SeedSequence([params.seed, epoch]).generate_state(1)[0])
        return anneal(model, replace(params, seed=sub)).state

    return annealer


def write_trace_csv(result: AnnealResult, path) -> None:
    if result.trace is None:
        raise ValueError("result carries no trace; call anneal(..., trace=True)")
    with open(path, "w") as fh:
        fh.write("step,temperature,energy\n")
        for step, T, e in result.trace:
            fh.write(f"{int(step)},{T!r},{e!r}\n")

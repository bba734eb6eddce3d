"""Real-variable encodings onto spins and the zoom-in iteration.

A real unknown ``w`` is represented by ``n_spin`` spins as::

    w = c + s * sum_{a=0}^{n_spin-1} spin_a / 2**a

so one epoch can reach ``c +/- s * (2 - 2**(1 - n_spin))`` on a grid of
spacing ``s * 2**(2 - n_spin)`` (odd multiples of ``s * 2**(1 - n_spin)``
around ``c``).  After each epoch the centers move to the
incumbent solution and every scale shrinks by the zoom factor.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from . import pubo
from .errors import AnnealerError, ConfigError, DimensionError
from .ising import IsingModel, as_spins
from .pubo import SPIN, SpinPolynomial

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RealCost:
    """Polynomial cost ``w.J.w + h.w + constant + sum_T q_T prod w_T``.

    ``J`` is stored symmetric.  ``quartic`` maps sorted 4-tuples of variable
    indices (repeats allowed) to coefficients.
    """

    J: np.ndarray
    h: np.ndarray
    constant: float = 0.0
    quartic: Mapping[tuple[int, int, int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        J = np.array(self.J, dtype=float)
        h = np.array(self.h, dtype=float)
        n = h.shape[0]
        if J.shape != (n, n):
            raise DimensionError(f"J must be {n}x{n}, got {J.shape}")
        J = 0.5 * (J + J.T)
        quartic = {}
        for key, v in self.quartic.items():
            if len(key) != 4 or not all(0 <= k < n for k in key):
                raise DimensionError(f"bad quartic index {key}")
            k = tuple(sorted(int(i) for i in key))
            quartic[k] = quartic.get(k, 0.0) + float(v)
        quartic = {k: v for k, v in sorted(quartic.items()) if v != 0.0}
        vals = np.array(list(quartic.values()))
        if not (np.all(np.isfinite(J)) and np.all(np.isfinite(h)) and math.isfinite(self.constant)
                and np.all(np.isfinite(vals))):
            raise ValueError("all coefficients must be finite")
        J.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "quartic", quartic)

    @property
    def n_vars(self) -> int:
        return self.h.shape[0]

    @property
    def is_quartic(self) -> bool:
        return bool(self.quartic)

    def __call__(self, w) -> float:
        w = np.asarray(w, dtype=float)
        if w.shape != (self.n_vars,):
            raise DimensionError(f"expected {self.n_vars} values, got shape {w.shape}")
        val = w @ self.J @ w + self.h @ w + self.constant
        for (i, j, p, q), c in self.quartic.items():
            val += c * w[i] * w[j] * w[p] * w[q]
        return float(val)


@dataclass(frozen=True)
class VariableEncoding:
    center: float = 0.0
    scale: float = 1.0
    n_spin: int = 2

    def __post_init__(self):
        if not self.scale >= 0:
            raise ConfigError(f"scale must be >= 0, got {self.scale}")
        if self.n_spin < 1:
            raise ConfigError(f"n_spin must be >= 1, got {self.n_spin}")

    @property
    def weights(self) -> np.ndarray:
        return self.scale / 2.0 ** np.arange(self.n_spin)

    @property
    def half_range(self) -> float:
        return self.scale * (2.0 - 2.0 ** (1 - self.n_spin))


def decode(encoding: VariableEncoding, spins) -> float:
    s = as_spins(spins, encoding.n_spin)
    return float(encoding.center + encoding.weights @ s)


def decode_all(encodings: Sequence[VariableEncoding], spins) -> np.ndarray:
    """Decode a concatenated spin vector, variable-major."""
    total = sum(e.n_spin for e in encodings)
    s = np.asarray(spins)
    if s.shape[0] < total:
        raise DimensionError(f"need at least {total} spins, got {s.shape[0]}")
    out = np.empty(len(encodings))
    pos = 0
    for k, e in enumerate(encodings):
        out[k] = decode(e, s[pos:pos + e.n_spin])
        pos += e.n_spin
    return out


def encoding_matrix(encodings: Sequence[VariableEncoding]) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(B, c)`` with ``w = c + B @ spins``."""
    n = len(encodings)
    m = sum(e.n_spin for e in encodings)
    B = np.zeros((n, m))
    pos = 0
    for i, e in enumerate(encodings):
        B[i, pos:pos + e.n_spin] = e.weights
        pos += e.n_spin
    return B, np.array([e.center for e in encodings], dtype=float)


def substitute_encoding(cost: RealCost, encodings: Sequence[VariableEncoding]) -> SpinPolynomial:
    """Spin polynomial whose value at every spin state equals ``cost(decode(state))``."""
    if len(encodings) != cost.n_vars:
        raise DimensionError(f"{len(encodings)} encodings for {cost.n_vars} variables")
    B, c = encoding_matrix(encodings)
    m = B.shape[1]
    M = B.T @ cost.J @ B
    lin = 2.0 * B.T @ (cost.J @ c) + B.T @ cost.h
    const = float(c @ cost.J @ c + cost.h @ c + cost.constant + np.trace(M))
    terms: dict[tuple[int, ...], float] = {(): const}
    for a in range(m):
        if lin[a] != 0.0:
            terms[(a,)] = float(lin[a])
    rows, cols = np.nonzero(np.triu(M, k=1))
    for a, b in zip(rows, cols):
        terms[(int(a), int(b))] = float(2.0 * M[a, b])
    poly = SpinPolynomial(m, terms, SPIN)
    if cost.quartic:
        linear = []
        for i in range(cost.n_vars):
            lt = {(): float(c[i])}
            lt.update({(int(a),): float(B[i, a]) for a in np.flatnonzero(B[i])})
            linear.append(SpinPolynomial(m, lt, SPIN))
        acc: list[tuple[tuple[int, ...], float]] = []
        for (i, j, p, q), coef in cost.quartic.items():
            prod = linear[i] * linear[j] * linear[p] * linear[q]
            acc.extend((mono, coef * v) for mono, v in prod.terms.items())
        poly = poly + SpinPolynomial(m, acc, SPIN)
    return poly


@dataclass(frozen=True)
class EncodedProblem:
    """Ising model for one epoch plus the bookkeeping to decode its states."""

    model: IsingModel
    encodings: tuple[VariableEncoding, ...]
    n_logical: int
    n_aux: int = 0

    def decode(self, spins) -> np.ndarray:
        return decode_all(self.encodings, np.asarray(spins)[: self.n_logical])


def encode_cost(cost: RealCost, encodings: Sequence[VariableEncoding]) -> EncodedProblem:
    """Substitute encodings and, for quartic costs, quadratize with auxiliaries."""
    poly = substitute_encoding(cost, encodings)
    n_aux = 0
    if poly.degree > 2:
        red = pubo.reduce_to_quadratic(poly)
        n_aux = red.n_aux
        poly = pubo.convert_basis(red.quadratic, SPIN)
    return EncodedProblem(pubo.spin_poly_to_ising(poly), tuple(encodings), poly.n_vars - n_aux, n_aux)


@dataclass(frozen=True)
class ZoomState:
    epoch: int
    encodings: tuple[VariableEncoding, ...]
    zoom: float
    history: tuple[tuple[np.ndarray, float], ...] = ()

    def __post_init__(self):
        if not 0.0 < self.zoom <= 1.0:
            raise ConfigError(f"zoom factor must lie in (0, 1], got {self.zoom}")

    @classmethod
    def initial(cls, n_vars: int, zoom: float, n_spin: int, center=0.0, scale=1.0) -> "ZoomState":
        centers = np.broadcast_to(np.asarray(center, dtype=float), (n_vars,))
        scales = np.broadcast_to(np.asarray(scale, dtype=float), (n_vars,))
        encs = tuple(VariableEncoding(float(c), float(s), n_spin) for c, s in zip(centers, scales))
        return cls(0, encs, zoom)


def zoom_update(state: ZoomState, best_w, epoch_w=None, epoch_cost: float = math.nan) -> ZoomState:
    """Re-center every encoding on ``best_w`` and shrink its scale by the zoom factor.

    ``epoch_w``/``epoch_cost`` (the raw result of the epoch just finished) are
    appended to the history; they default to ``best_w``.
    """
    best_w = np.asarray(best_w, dtype=float)
    if best_w.shape != (len(state.encodings),):
        raise DimensionError(f"expected {len(state.encodings)} values, got shape {best_w.shape}")
    encs = tuple(replace(e, center=float(w), scale=e.scale * state.zoom)
                 for e, w in zip(state.encodings, best_w))
    rec = (np.array(best_w if epoch_w is None else epoch_w, dtype=float), float(epoch_cost))
    return ZoomState(state.epoch + 1, encs, state.zoom, state.history + (rec,))


@dataclass(frozen=True)
class ZoomParams:
    zoom: float = 0.8
    n_spin: int = 3
    epochs: int = 30
    center: float | Sequence[float] = 0.0
    scale: float | Sequence[float] = 1.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.n_spin < 1:
            raise ConfigError("n_spin must be >= 1")
        if not 0.0 < self.zoom <= 1.0:
            raise ConfigError(f"zoom factor must lie in (0, 1], got {self.zoom}")


@dataclass
class IterativeResult:
    epoch_w: list[np.ndarray]
    epoch_cost: list[float]
    best_cost: list[float]
    best_w: np.ndarray
    n_spins: list[int]

    @property
    def final_cost(self) -> float:
        return self.best_cost[-1]


Annealer = Callable[[IsingModel, int], np.ndarray]


def solve_iterative(cost: RealCost, params: ZoomParams, annealer: Annealer) -> IterativeResult:
    """Run ``params.epochs`` rounds of encode, anneal, decode and zoom.

    ``annealer(model, epoch)`` must return a spin vector for ``model``.
    Quality is always judged by the real cost, never by Ising energy.  The
    next epoch is centred on the best solution seen so far, so an epoch that
    lands on a worse point does not move the search window.
    """
    state = ZoomState.initial(cost.n_vars, params.zoom, params.n_spin, params.center, params.scale)
    epoch_w, epoch_cost, best_cost, n_spins = [], [], [], []
    best_w, best = None, math.inf
    for epoch in range(params.epochs):
        enc = encode_cost(cost, state.encodings)
        try:
            spins = annealer(enc.model, epoch)
        except Exception as exc:
            raise AnnealerError(epoch, exc) from exc
        w = enc.decode(spins)
        val = cost(w)
        if val < best:
            best, best_w = val, w
        epoch_w.append(w)
        epoch_cost.append(val)
        best_cost.append(best)
        n_spins.append(enc.model.n_spins)
        log.debug("epoch %d: cost %.6g best %.6g", epoch, val, best)
        state = zoom_update(state, best_w, w, val)
    return IterativeResult(epoch_w, epoch_cost, best_cost, best_w, n_spins)

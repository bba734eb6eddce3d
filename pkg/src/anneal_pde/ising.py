"""Ising models over +/-1 spins.

Sign convention used throughout the package (plus form)::

    H(s) = offset + sum_{i<j} J_ij s_i s_j + sum_i h_i s_i

A least-squares cost expands directly into this form, so no coefficient
flips are needed when building models from problems.  The textbook
``H = -sum J s s - sum h s`` form corresponds to negated coefficients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

from .errors import CapacityError, DimensionError

BRUTE_FORCE_CAP = 24


def as_spins(values, n_spins: int | None = None) -> np.ndarray:
    """Validate ``values`` as a spin vector and return it as an int8 array."""
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise DimensionError(f"spin vector must be 1-D, got shape {arr.shape}")
    if n_spins is not None and arr.shape[0] != n_spins:
        raise DimensionError(f"expected {n_spins} spins, got {arr.shape[0]}")
    if not np.all((arr == 1) | (arr == -1)):
        raise ValueError("spin values must be -1 or +1")
    return arr.astype(np.int8)


@dataclass(frozen=True, eq=False)
class IsingModel:
    """Quadratic spin Hamiltonian with sparse couplings.

    ``couplings`` maps canonical pairs ``(i, j)`` with ``i < j`` to a real
    coefficient; ``fields`` is a dense vector of length ``n_spins``.
    """

    n_spins: int
    couplings: Mapping[tuple[int, int], float] = field(default_factory=dict)
    fields: np.ndarray = None
    offset: float = 0.0

    def __post_init__(self):
        n = int(self.n_spins)
        if n < 0:
            raise DimensionError("n_spins must be non-negative")
        h = np.zeros(n) if self.fields is None else np.array(self.fields, dtype=float)
        if h.shape != (n,):
            raise DimensionError(f"fields must have length {n}, got shape {h.shape}")
        canon: dict[tuple[int, int], float] = {}
        for (i, j), v in self.couplings.items():
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-coupling ({i}, {i}) is not allowed")
            if not (0 <= i < n and 0 <= j < n):
                raise DimensionError(f"coupling ({i}, {j}) out of range for {n} spins")
            key = (i, j) if i < j else (j, i)
            canon[key] = canon.get(key, 0.0) + float(v)
        canon = {k: v for k, v in sorted(canon.items()) if v != 0.0}
        vals = np.fromiter(canon.values(), dtype=float, count=len(canon))
        if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(h)) and math.isfinite(self.offset)):
            raise ValueError("all coefficients must be finite")
        h.setflags(write=False)
        object.__setattr__(self, "n_spins", n)
        object.__setattr__(self, "couplings", canon)
        object.__setattr__(self, "fields", h)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_dense(cls, J, h=None, offset: float = 0.0) -> "IsingModel":
        """Build a model from a (not necessarily symmetric) matrix.

        ``J[i, j]`` and ``J[j, i]`` are summed into the single pair
        coefficient; diagonal entries multiply ``s_i**2 = 1`` and are folded
        into the offset.
        """
        J = np.asarray(J, dtype=float)
        n = J.shape[0]
        sym = J + J.T
        rows, cols = np.nonzero(np.triu(sym, k=1))
        couplings = {(int(i), int(j)): float(sym[i, j]) for i, j in zip(rows, cols)}
        return cls(n, couplings, None if h is None else np.asarray(h, float),
                   offset + float(np.trace(J)))

    @cached_property
    def coupling_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(rows, cols, values)`` of the canonical couplings."""
        m = len(self.couplings)
        keys = np.array(list(self.couplings), dtype=np.int64).reshape(m, 2)
        vals = np.fromiter(self.couplings.values(), dtype=float, count=m)
        return keys[:, 0].copy(), keys[:, 1].copy(), vals

    @cached_property
    def adjacency(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Symmetric CSR adjacency ``(indptr, indices, data)``."""
        rows, cols, vals = self.coupling_arrays
        r = np.concatenate([rows, cols])
        c = np.concatenate([cols, rows])
        d = np.concatenate([vals, vals])
        order = np.lexsort((c, r))
        r, c, d = r[order], c[order], d[order]
        indptr = np.zeros(self.n_spins + 1, dtype=np.int64)
        np.add.at(indptr, r + 1, 1)
        return np.cumsum(indptr), c.astype(np.int64), d

    def dense_couplings(self) -> np.ndarray:
        """Symmetric matrix ``M`` with ``sum_{i<j} J_ij s_i s_j = s.M.s / 2``."""
        M = np.zeros((self.n_spins, self.n_spins))
        rows, cols, vals = self.coupling_arrays
        M[rows, cols] = vals
        M[cols, rows] = vals
        return M

    def max_abs_coefficient(self) -> float:
        c = [abs(v) for v in self.couplings.values()]
        c.extend(np.abs(self.fields).tolist())
        return max(c, default=0.0)

    def __repr__(self):
        return (f"IsingModel(n_spins={self.n_spins}, n_couplings={len(self.couplings)}, "
                f"offset={self.offset!r})")


def energy(model: IsingModel, spins) -> float:
    s = as_spins(spins, model.n_spins).astype(float)
    rows, cols, vals = model.coupling_arrays
    return float(model.offset + model.fields @ s + np.sum(vals * s[rows] * s[cols]))


def local_field(model: IsingModel, spins, k: int) -> float:
    indptr, indices, data = model.adjacency
    lo, hi = indptr[k], indptr[k + 1]
    return float(model.fields[k] + data[lo:hi] @ np.asarray(spins, float)[indices[lo:hi]])


def delta_energy(model: IsingModel, spins, flip_index: int) -> float:
    """Energy change from negating spin ``flip_index``, in O(degree)."""
    s = as_spins(spins, model.n_spins)
    if not 0 <= flip_index < model.n_spins:
        raise DimensionError(f"flip index {flip_index} out of range for {model.n_spins} spins")
    return -2.0 * float(s[flip_index]) * local_field(model, s, flip_index)


def enumerate_states(n: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Spin states with indices ``start..stop-1`` in lexicographic order (-1 < +1).

    Spin 0 is the most significant position, so index 0 is all -1.
    """
    stop = 1 << n if stop is None else stop
    idx = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    bits = (idx[:, None] >> shifts[None, :]) & 1
    return (2 * bits - 1).astype(np.int8)


def all_energies(model: IsingModel, chunk: int = 1 << 16):
    """Yield ``(start_index, energies)`` blocks over all ``2**n`` states."""
    n = model.n_spins
    half = model.dense_couplings() / 2.0
    total = 1 << n
    for start in range(0, total, chunk):
        S = enumerate_states(n, start, min(total, start + chunk)).astype(float)
        yield start, model.offset + S @ model.fields + np.einsum("ki,ki->k", S @ half, S)


def brute_force_ground_state(model: IsingModel, cap: int = BRUTE_FORCE_CAP):
    """Exhaustive minimum over all spin states.

    Returns ``(state, energy)``.  Ties (within floating round-off) go to the
    lexicographically smallest state with -1 ordered before +1.
    """
    n = model.n_spins
    if n > cap:
        raise CapacityError(f"{n} spins exceeds the brute-force cap of {cap}")
    scale = 1.0 + abs(model.offset) + model.max_abs_coefficient() * max(1, n) ** 2
    tol = 1e-12 * scale
    best_e, best_i = math.inf, -1
    for start, E in all_energies(model):
        k = int(np.argmin(E))
        if E[k] < best_e - tol:
            best_e = float(E[k])
            best_i = start + int(np.flatnonzero(E <= best_e + tol)[0])
    state = enumerate_states(n, best_i, best_i + 1)[0]
    return state, energy(model, state)


def dumps(model: IsingModel) -> str:
    """Term-per-line text form: header ``n_spins offset``, then ``i j coeff``.

    A line with ``i == j`` holds the field ``h_i``.
    """
    lines = [f"{model.n_spins} {model.offset!r}"]
    for i, h in enumerate(model.fields):
        if h != 0.0:
            lines.append(f"{i} {i} {float(h)!r}")
    for (i, j), v in model.couplings.items():
        lines.append(f"{i} {j} {v!r}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> IsingModel:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    n, offset = int(rows[0][0]), float(rows[0][1])
    h = np.zeros(n)
    couplings: dict[tuple[int, int], float] = {}
    for i, j, v in rows[1:]:
        i, j = int(i), int(j)
        if i == j:
            h[i] += float(v)
        else:
            key = (min(i, j), max(i, j))
            couplings[key] = couplings.get(key, 0.0) + float(v)
    return IsingModel(n, couplings, h, offset)


def toy_model() -> IsingModel:
    """Two-spin demo ``s0 s1 + s0 - s1`` with ground state (-1, +1) at -3."""
    return IsingModel(2, {(0, 1): 1.0}, np.array([1.0, -1.0]))


def gadget_model() -> IsingModel:
    """Five-spin demo whose spin 2 has degree four."""
    return IsingModel(5, {(0, 1): 1.0, (1, 2): 2.0, (0, 2): -3.0,
                          (2, 3): 4.0, (3, 4): -5.0, (2, 4): -6.0})

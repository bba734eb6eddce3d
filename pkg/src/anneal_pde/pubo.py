"""Multilinear polynomials over spin or binary variables, up to degree four.

Monomials are stored as strictly increasing index tuples.  Squares are
folded away on construction (``s**2 = 1`` for spins, ``x**2 = x`` for
binaries), so two polynomials with equal term maps are equal functions.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import DimensionError, DomainError, UnsupportedDegreeError
from .ising import IsingModel

SPIN = "spin"
BINARY = "binary"
MAX_DEGREE = 4


def canonical_monomial(indices: Iterable[int], basis: str) -> tuple[int, ...]:
    if basis == SPIN:
        counts = Counter(int(i) for i in indices)
        return tuple(sorted(i for i, c in counts.items() if c % 2))
    if basis == BINARY:
        return tuple(sorted(set(int(i) for i in indices)))
    raise ValueError(f"unknown basis {basis!r}")


def _canonicalize(terms, basis: str) -> dict[tuple[int, ...], float]:
    out: dict[tuple[int, ...], float] = {}
    for mono, c in terms:
        key = canonical_monomial(mono, basis)
        out[key] = out.get(key, 0.0) + float(c)
    return {k: v for k, v in sorted(out.items(), key=lambda kv: (len(kv[0]), kv[0])) if v != 0.0}


@dataclass(frozen=True, eq=False)
class SpinPolynomial:
    """Polynomial ``sum_T c_T prod_{i in T} z_i`` with ``z`` in the given basis."""

    n_vars: int
    terms: Mapping[tuple[int, ...], float] = field(default_factory=dict)
    basis: str = SPIN

    def __post_init__(self):
        if self.basis not in (SPIN, BINARY):
            raise ValueError(f"unknown basis {self.basis!r}")
        raw = self.terms.items() if isinstance(self.terms, Mapping) else self.terms
        canon = _canonicalize(raw, self.basis)
        for mono in canon:
            if mono and not (0 <= mono[0] and mono[-1] < self.n_vars):
                raise DimensionError(f"monomial {mono} out of range for {self.n_vars} variables")
        if not all(np.isfinite(v) for v in canon.values()):
            raise ValueError("all coefficients must be finite")
        object.__setattr__(self, "terms", canon)

    @property
    def degree(self) -> int:
        return max((len(m) for m in self.terms), default=0)

    @property
    def constant(self) -> float:
        return self.terms.get((), 0.0)

    def __eq__(self, other):
        if not isinstance(other, SpinPolynomial):
            return NotImplemented
        return (self.basis, self.n_vars, self.terms) == (other.basis, other.n_vars, other.terms)

    def __add__(self, other: "SpinPolynomial") -> "SpinPolynomial":
        if other.basis != self.basis:
            raise ValueError("cannot add polynomials in different bases")
        terms = list(self.terms.items()) + list(other.terms.items())
        return SpinPolynomial(max(self.n_vars, other.n_vars), terms, self.basis)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return SpinPolynomial(self.n_vars, {k: v * other for k, v in self.terms.items()}, self.basis)
        if other.basis != self.basis:
            raise ValueError("cannot multiply polynomials in different bases")
        prod = [(a + b, ca * cb) for a, ca in self.terms.items() for b, cb in other.terms.items()]
        return SpinPolynomial(max(self.n_vars, other.n_vars), prod, self.basis)

    __rmul__ = __mul__

    def __repr__(self):
        return f"SpinPolynomial(n_vars={self.n_vars}, basis={self.basis!r}, n_terms={len(self.terms)}, degree={self.degree})"


def evaluate(poly: SpinPolynomial, assignment) -> float:
    a = np.asarray(assignment)
    if a.shape != (poly.n_vars,):
        raise DimensionError(f"expected {poly.n_vars} values, got shape {a.shape}")
    allowed = (-1, 1) if poly.basis == SPIN else (0, 1)
    if not np.all(np.isin(a, allowed)):
        raise DomainError(f"assignment values must lie in {allowed} for the {poly.basis} basis")
    a = a.astype(float)
    return float(sum(c * np.prod(a[list(m)]) for m, c in poly.terms.items()))


def evaluate_many(poly: SpinPolynomial, assignments: np.ndarray) -> np.ndarray:
    """Vectorized evaluation over the rows of ``assignments`` (no domain check)."""
    A = np.asarray(assignments, dtype=float)
    out = np.zeros(A.shape[0])
    for m, c in poly.terms.items():
        out += c * (np.prod(A[:, list(m)], axis=1) if m else 1.0)
    return out


def convert_basis(poly: SpinPolynomial, target: str) -> SpinPolynomial:
    """Rewrite ``poly`` in ``target`` basis via ``s = 2x - 1``.

    Cancellation residue below round-off of the contributing terms is pruned
    so that a spin -> binary -> spin round trip reproduces the term set.
    """
    if target == poly.basis:
        return poly
    acc: dict[tuple[int, ...], float] = {}
    mag: dict[tuple[int, ...], float] = {}
    for mono, c in poly.terms.items():
        k = len(mono)
        for r in range(k + 1):
            for sub in itertools.combinations(mono, r):
                if target == BINARY:
                    # prod (2x - 1) = sum_U 2^|U| (-1)^(k-|U|) x_U
                    v = c * (2.0 ** r) * (-1.0) ** (k - r)
                else:
                    # prod (s + 1)/2 = 2^-k sum_U s_U
                    v = c * 2.0 ** (-k)
                acc[sub] = acc.get(sub, 0.0) + v
                mag[sub] = mag.get(sub, 0.0) + abs(v)
    terms = {m: v for m, v in acc.items() if abs(v) > 1e-13 * mag[m]}
    return SpinPolynomial(poly.n_vars, terms, target)


@dataclass(frozen=True)
class ReductionResult:
    """Quadratic rewrite of a higher-order binary polynomial.

    ``aux_map`` lists ``(aux_index, monomial)`` pairs in creation order;
    auxiliaries occupy indices ``n_original .. n_original + n_aux - 1``.
    """

    quadratic: SpinPolynomial
    aux_map: tuple[tuple[int, tuple[int, ...]], ...]
    n_original: int

    @property
    def n_aux(self) -> int:
        return len(self.aux_map)


def reduce_to_quadratic(poly: SpinPolynomial) -> ReductionResult:
    """Exact quadratization of a degree <= 4 polynomial in the 0/1 basis.

    A monomial ``a x_1..x_d`` with ``a < 0`` becomes ``a w (sum x - (d-1))``.
    With ``a > 0`` Ishikawa's construction is used::

        a x_1..x_d = a * min_w [ sum_{i=1}^{n_d} w_i (c_{i,d} (2i - S1) - 1) + S2 ]

    where ``S1 = sum x``, ``S2 = sum_{j<k} x_j x_k``, ``n_d = (d - 1) // 2``
    and ``c_{i,d}`` is 1 for the last auxiliary of odd ``d``, 2 otherwise.
    Both identities hold for every assignment of the ``x`` after minimizing
    over the auxiliaries.  Spin-basis input is converted first.
    """
    if poly.degree > MAX_DEGREE:
        raise UnsupportedDegreeError(f"degree {poly.degree} exceeds the supported maximum {MAX_DEGREE}")
    if poly.degree <= 2:
        return ReductionResult(poly, (), poly.n_vars)
    b = convert_basis(poly, BINARY)
    n0 = b.n_vars
    nxt = n0
    out: list[tuple[tuple[int, ...], float]] = []
    aux_map: list[tuple[int, tuple[int, ...]]] = []
    for mono, a in b.terms.items():
        d = len(mono)
        if d <= 2:
            out.append((mono, a))
            continue
        if a < 0:
            w = nxt
            nxt += 1
            aux_map.append((w, mono))
            out.extend(((i, w), a) for i in mono)
            out.append(((w,), -a * (d - 1)))
            continue
        n_d = (d - 1) // 2
        for i in range(1, n_d + 1):
            w = nxt
            nxt += 1
            aux_map.append((w, mono))
            c = 1 if (d % 2 == 1 and i == n_d) else 2
            out.extend(((j, w), -a * c) for j in mono)
            out.append(((w,), a * (2 * c * i - 1)))
        out.extend(((j, k), a) for j, k in itertools.combinations(mono, 2))
    quad = SpinPolynomial(nxt, out, BINARY)
    return ReductionResult(quad, tuple(aux_map), n0)


def spin_poly_to_ising(poly: SpinPolynomial) -> IsingModel:
    if poly.basis != SPIN:
        poly = convert_basis(poly, SPIN)
    if poly.degree > 2:
        raise UnsupportedDegreeError("only degree <= 2 polynomials map to Ising models")
    h = np.zeros(poly.n_vars)
    couplings = {}
    offset = 0.0
    for m, c in poly.terms.items():
        if len(m) == 0:
            offset = c
        elif len(m) == 1:
            h[m[0]] = c
        else:
            couplings[m] = c
    return IsingModel(poly.n_vars, couplings, h, offset)


def ising_to_spin_poly(model: IsingModel) -> SpinPolynomial:
    terms: dict[tuple[int, ...], float] = {(): model.offset}
    terms.update({(i,): float(v) for i, v in enumerate(model.fields)})
    terms.update(model.couplings)
    return SpinPolynomial(model.n_spins, terms, SPIN)


def dumps(poly: SpinPolynomial) -> str:
    """Term-per-line text: header ``n_vars basis``, then ``i j ... coeff``."""
    lines = [f"{poly.n_vars} {poly.basis}"]
    for m, c in poly.terms.items():
        lines.append(" ".join([*map(str, m), repr(c)]))
    return "\n".join(lines) + "\n"


def loads(text: str) -> SpinPolynomial:
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    n, basis = int(rows[0][0]), rows[0][1]
    terms = [(tuple(int(t) for t in r[:-1]), float(r[-1])) for r in rows[1:]]
    return SpinPolynomial(n, terms, basis)

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anneal_pde import pubo
from anneal_pde.errors import DomainError, UnsupportedDegreeError
from anneal_pde.ising import brute_force_ground_state, energy
from anneal_pde.pubo import BINARY, SPIN, SpinPolynomial, convert_basis, evaluate, reduce_to_quadratic


def naive_eval(terms, values):
    total = 0.0
    for mono, c in terms:
        p = c
        for i in mono:
            p *= values[i]
        total += p
    return total


def random_terms(rng, n, degree, count):
    terms = []
    for _ in range(count):
        d = int(rng.integers(0, min(degree, n) + 1))
        mono = tuple(int(i) for i in rng.choice(n, size=d, replace=False))
        terms.append((mono, float(rng.normal())))
    return terms


def min_over_aux(red, x):
    n0, k = red.n_original, red.n_aux
    best = np.inf
    for aux in itertools.product((0, 1), repeat=k):
        best = min(best, evaluate(red.quadratic, np.array(list(x) + list(aux))))
    return best


def test_evaluate_example():
    p = SpinPolynomial(2, {(): 1.0, (0,): 2.0, (0, 1): -1.0}, BINARY)
    assert evaluate(p, [1, 1]) == 2.0


def test_square_folding():
    p = SpinPolynomial(1, [((0, 0), 1.0)], SPIN)
    assert p.terms == {(): 1.0}
    q = SpinPolynomial(2, [((1, 1), 3.0)], BINARY)
    assert q.terms == {(1,): 3.0}


def test_domain_errors():
    with pytest.raises(DomainError):
        evaluate(SpinPolynomial(1, {(0,): 1.0}, SPIN), [0])
    with pytest.raises(DomainError):
        evaluate(SpinPolynomial(1, {(0,): 1.0}, BINARY), [-1])


def test_zero_terms_pruned_and_idempotent(rng):
    p = SpinPolynomial(3, [((0, 1), 1.0), ((1, 0), -1.0), ((2,), 2.0)])
    assert p.terms == {(2,): 2.0}
    p2 = SpinPolynomial(4, random_terms(rng, 4, 4, 12))
    assert SpinPolynomial(4, p2.terms) == p2


def test_random_degree4_matches_naive(rng):
    terms = random_terms(rng, 6, 4, 20)
    for basis, dom in ((SPIN, (-1, 1)), (BINARY, (0, 1))):
        p = SpinPolynomial(6, terms, basis)
        for a in itertools.product(dom, repeat=6):
            canon = [(pubo.canonical_monomial(m, basis), c) for m, c in terms]
            assert evaluate(p, np.array(a)) == pytest.approx(naive_eval(canon, a), abs=1e-12)


def test_convert_single_spin():
    b = convert_basis(SpinPolynomial(1, {(0,): 1.0}, SPIN), BINARY)
    assert b.terms == {(): -1.0, (0,): 2.0}


def test_convert_round_trip_and_values(rng):
    for _ in range(10):
        p = SpinPolynomial(5, random_terms(rng, 5, 3, 10), SPIN)
        b = convert_basis(p, BINARY)
        for x in itertools.product((0, 1), repeat=5):
            s = 2 * np.array(x) - 1
            assert evaluate(b, np.array(x)) == pytest.approx(evaluate(p, s), abs=1e-12)
        back = convert_basis(b, SPIN)
        assert set(back.terms) == set(p.terms)
        for k in p.terms:
            assert back.terms[k] == pytest.approx(p.terms[k], abs=1e-12)


def test_quadratic_passes_through(rng):
    p = SpinPolynomial(4, random_terms(rng, 4, 2, 8), SPIN)
    r = reduce_to_quadratic(p)
    assert r.quadratic == p and r.n_aux == 0


def test_negative_cubic_one_aux():
    p = SpinPolynomial(3, {(0, 1, 2): -1.0}, BINARY)
    r = reduce_to_quadratic(p)
    assert r.n_aux == 1 and r.quadratic.degree <= 2
    for x in itertools.product((0, 1), repeat=3):
        assert min_over_aux(r, x) == pytest.approx(evaluate(p, np.array(x)), abs=1e-12)


@pytest.mark.parametrize("d", [3, 4])
@pytest.mark.parametrize("sign", [1.0, -1.0])
def test_single_monomial_exact(d, sign):
    p = SpinPolynomial(d, {tuple(range(d)): 2.5 * sign}, BINARY)
    r = reduce_to_quadratic(p)
    assert r.n_aux == (1 if sign < 0 else (d - 1) // 2)
    for x in itertools.product((0, 1), repeat=d):
        assert min_over_aux(r, x) == pytest.approx(evaluate(p, np.array(x)), abs=1e-12)


def test_aux_map_and_ordering():
    p = SpinPolynomial(5, {(0, 1, 2): 1.0, (1, 2, 3, 4): -2.0}, BINARY)
    r = reduce_to_quadratic(p)
    idx = [a for a, _ in r.aux_map]
    assert idx == list(range(5, 5 + r.n_aux))
    assert len(set(idx)) == len(idx)


def test_degree_five_rejected():
    with pytest.raises(UnsupportedDegreeError):
        reduce_to_quadratic(SpinPolynomial(5, {(0, 1, 2, 3, 4): 1.0}))


def test_spin_input_reduces_exactly(rng):
    p = SpinPolynomial(5, random_terms(rng, 5, 4, 10), SPIN)
    r = reduce_to_quadratic(p)
    for x in itertools.product((0, 1), repeat=5):
        s = 2 * np.array(x) - 1
        assert min_over_aux(r, x) == pytest.approx(evaluate(p, s), abs=1e-10)


def test_ising_round_trip(rng):
    p = SpinPolynomial(4, random_terms(rng, 4, 2, 9), SPIN)
    m = pubo.spin_poly_to_ising(p)
    for s in itertools.product((-1, 1), repeat=4):
        assert energy(m, s) == pytest.approx(evaluate(p, np.array(s)), abs=1e-12)
    assert pubo.ising_to_spin_poly(m) == p
    with pytest.raises(UnsupportedDegreeError):
        pubo.spin_poly_to_ising(SpinPolynomial(3, {(0, 1, 2): 1.0}))


def test_text_round_trip(rng):
    p = SpinPolynomial(6, random_terms(rng, 6, 4, 12), BINARY)
    assert pubo.loads(pubo.dumps(p)) == p


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 6), st.integers(0, 2**31 - 1))
def test_reduction_exact_property(n, seed):
    rng = np.random.default_rng(seed)
    p = SpinPolynomial(n, random_terms(rng, n, 4, 6), BINARY)
    r = reduce_to_quadratic(p)
    assert r.quadratic.degree <= 2
    if r.n_aux > 8:
        return
    for x in itertools.product((0, 1), repeat=n):
        assert min_over_aux(r, x) == pytest.approx(evaluate(p, np.array(x)), abs=1e-9)

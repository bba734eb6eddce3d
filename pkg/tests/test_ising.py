import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anneal_pde import ising
from anneal_pde.errors import CapacityError, DimensionError
from anneal_pde.ising import IsingModel, brute_force_ground_state, delta_energy, energy

from conftest import naive_energy, naive_ground_state, random_model


def test_toy_energies():
    m = ising.toy_model()
    assert energy(m, [-1, 1]) == -3.0
    assert energy(m, [1, 1]) == 1.0


def test_constant_model():
    m = IsingModel(3, {}, None, 5.0)
    for s in itertools.product((-1, 1), repeat=3):
        assert energy(m, s) == 5.0


def test_energy_length_mismatch():
    with pytest.raises(DimensionError):
        energy(ising.toy_model(), [1, 1, 1])


def test_energy_rejects_non_spin_values():
    with pytest.raises(ValueError):
        energy(ising.toy_model(), [0, 1])


def test_model_rejects_self_coupling_and_nonfinite():
    with pytest.raises(ValueError):
        IsingModel(2, {(1, 1): 1.0})
    with pytest.raises(ValueError):
        IsingModel(2, {(0, 1): float("nan")})
    with pytest.raises(DimensionError):
        IsingModel(2, {(0, 2): 1.0})


def test_couplings_canonicalized():
    m = IsingModel(3, {(2, 0): 1.5, (0, 2): 0.5})
    assert dict(m.couplings) == {(0, 2): 2.0}


def test_delta_energy_examples():
    m = ising.toy_model()
    # (+1,+1) -> (-1,+1): energy +1 -> -3; the flipped spin is index 0
    assert delta_energy(m, [1, 1], 0) == -4.0
    assert delta_energy(m, [1, 1], 1) == 0.0
    z = IsingModel(4)
    assert all(delta_energy(z, [1, -1, 1, 1], k) == 0.0 for k in range(4))
    with pytest.raises(DimensionError):
        delta_energy(m, [1, 1], 2)


def test_delta_energy_exhaustive_8_spins(rng):
    m = random_model(rng, 8)
    for s in itertools.product((-1, 1), repeat=8):
        s = np.array(s)
        e0 = energy(m, s)
        for k in range(8):
            t = s.copy()
            t[k] = -t[k]
            assert delta_energy(m, s, k) == pytest.approx(energy(m, t) - e0, rel=1e-12, abs=1e-12)


def test_ground_state_examples():
    s, e = brute_force_ground_state(ising.toy_model())
    assert list(s) == [-1, 1] and e == -3.0
    s, e = brute_force_ground_state(IsingModel(1, {}, [2.0]))
    assert list(s) == [-1] and e == -2.0


def test_gadget_ground_state_matches_independent_enumeration():
    m = ising.gadget_model()
    s, e = brute_force_ground_state(m)
    s_ref, e_ref = naive_ground_state(m)
    assert e == e_ref == -13.0
    assert list(s) == list(s_ref)


def test_tie_break_is_lexicographic():
    # field-free: s and -s tie; the all -1-first state must win
    m = IsingModel(3, {(0, 1): -1.0, (1, 2): -1.0})
    s, _ = brute_force_ground_state(m)
    assert list(s) == [-1, -1, -1]


def test_capacity_error():
    with pytest.raises(CapacityError):
        brute_force_ground_state(IsingModel(30))
    with pytest.raises(CapacityError):
        brute_force_ground_state(IsingModel(6), cap=5)


def test_ground_state_below_all_states(rng):
    for n in (5, 9, 12):
        m = random_model(rng, n)
        _, e = brute_force_ground_state(m)
        for _, block in ising.all_energies(m):
            assert e <= block.min() + 1e-12


def test_all_energies_matches_naive(rng):
    m = random_model(rng, 6, density=0.6)
    states = ising.enumerate_states(6)
    ref = [naive_energy(m, s) for s in states]
    got = np.concatenate([b for _, b in ising.all_energies(m, chunk=7)])
    np.testing.assert_allclose(got, ref, rtol=1e-12, atol=1e-12)


def test_z2_symmetry_without_fields(rng):
    m = random_model(rng, 7, with_fields=False)
    for s in ising.enumerate_states(7)[::5]:
        assert energy(m, s) == pytest.approx(energy(m, -s), rel=1e-13)


def test_from_dense_folds_diagonal():
    J = np.array([[1.0, 2.0], [0.0, 3.0]])
    m = IsingModel.from_dense(J, [0.5, -0.5], 1.0)
    assert dict(m.couplings) == {(0, 1): 2.0}
    assert m.offset == pytest.approx(5.0)


def test_text_round_trip(rng):
    m = random_model(rng, 5, density=0.5)
    m2 = ising.loads(ising.dumps(m))
    for s in ising.enumerate_states(5):
        assert energy(m2, s) == energy(m, s)
    assert ising.dumps(m).splitlines()[0].split()[0] == "5"


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**31 - 1))
def test_delta_energy_property(n, seed):
    rng = np.random.default_rng(seed)
    m = random_model(rng, n, density=0.7)
    s = rng.choice([-1, 1], size=n)
    k = int(rng.integers(n))
    t = s.copy()
    t[k] = -t[k]
    assert delta_energy(m, s, k) == pytest.approx(naive_energy(m, t) - naive_energy(m, s), rel=1e-12, abs=1e-12)

import itertools

import numpy as np
import pytest

from anneal_pde.ising import IsingModel


def naive_energy(model, s):
    """Independent double loop, no vectorization."""
    e = model.offset
    for i in range(model.n_spins):
        e += model.fields[i] * s[i]
    for (i, j), v in model.couplings.items():
        e += v * s[i] * s[j]
    return e


def naive_ground_state(model):
    best, best_s = None, None
    for s in itertools.product((-1, 1), repeat=model.n_spins):
        e = naive_energy(model, s)
        if best is None or e < best - 1e-12:
            best, best_s = e, s
    return np.array(best_s), best


def random_model(rng, n, density=1.0, with_fields=True, scale=1.0):
    couplings = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                couplings[(i, j)] = float(rng.normal() * scale)
    h = rng.normal(size=n) * scale if with_fields else np.zeros(n)
    return IsingModel(n, couplings, h, float(rng.normal()))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)

import numpy as np
import pytest

from quditmeas.paulis import PauliString, QuditRegister

PRIMES = (2, 3, 5)


def random_register(rng, max_q=3, dims=PRIMES):
    q = int(rng.integers(1, max_q + 1))
    return QuditRegister(tuple(int(rng.choice(dims)) for _ in range(q)))


def random_string(rng, register, with_phase=True):
    exps = tuple((int(rng.integers(0, d)), int(rng.integers(0, d))) for d in register.dims)
    tau = int(rng.integers(0, 2 * register.d_p)) if with_phase else 0
    return PauliString(register, exps, tau)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)

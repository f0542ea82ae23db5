import numpy as np
import pytest

from dasolve.problem import haar_unitary


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def unitary_with_phases(phases, rng):
    V = haar_unitary(len(phases), rng)
    return (V * np.exp(1j * np.asarray(phases))) @ V.conj().T

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dasolve.problem import (
    QlspInstance,
    VARIANTS,
    embedding,
    exact_solution,
    gap_lower_bound,
    hamiltonian,
    initial_state,
    load_instance,
    random_instance,
    save_instance,
    solution_state,
)


def svals(A):
    return np.linalg.svd(A, compute_uv=False)


@pytest.mark.parametrize("variant", VARIANTS)
def test_instance_normalisation(variant):
    inst = random_instance(5, 7.0, variant, seed=3)
    assert svals(inst.A).max() == pytest.approx(1.0, abs=1e-9)
    assert 1 / svals(inst.A).min() == pytest.approx(7.0, abs=1e-6)
    assert np.linalg.norm(inst.b) == pytest.approx(1.0, abs=1e-12)
    if variant != "general":
        assert np.allclose(inst.A, inst.A.conj().T)
    if variant == "hermitian-pd":
        ev = np.linalg.eigvalsh(inst.A)
        assert ev.min() >= 1 / 7 - 1e-12 and ev.max() <= 1 + 1e-12


def test_endpoint_singular_values():
    inst = random_instance(2, 4.0, "general", seed=0)
    assert np.allclose(np.sort(svals(inst.A)), [0.25, 1.0])


def test_seed_determinism():
    a = random_instance(4, 5.0, "general", seed=9)
    b = random_instance(4, 5.0, "general", seed=9)
    assert np.array_equal(a.A, b.A) and np.array_equal(a.b, b.b)


def test_large_general_condition():
    inst = random_instance(8, 10.0, "general", seed=1)
    assert np.linalg.norm(np.linalg.inv(inst.A), 2) == pytest.approx(10.0, abs=1e-6)


def test_bad_inputs():
    with pytest.raises(ValueError):
        random_instance(2, 1.0)
    with pytest.raises(ValueError):
        random_instance(2, 3.0, "skew")
    with pytest.raises(ValueError):
        QlspInstance(A=np.eye(2), b=np.ones(3), kappa=2, variant="general")


def test_json_roundtrip(tmp_path):
    inst = random_instance(3, 4.0, "hermitian", seed=2)
    save_instance(inst, tmp_path / "i.json")
    back = load_instance(tmp_path / "i.json")
    assert np.allclose(back.A, inst.A) and np.allclose(back.b, inst.b)
    assert back.variant == inst.variant and back.kappa == inst.kappa and back.seed == 2


def _nullity(H, tol=1e-9):
    return int(np.sum(np.abs(np.linalg.eigvalsh(H)) < tol))


@pytest.mark.parametrize("variant", VARIANTS)
def test_hamiltonian_family_properties(variant):
    inst = random_instance(3, 5.0, variant, seed=4)
    for f in np.linspace(0, 1, 50):
        H = hamiltonian(inst, f, f)
        assert np.linalg.norm(H - H.conj().T, 2) <= 1e-10
        ev = np.linalg.eigvalsh(H)
        assert np.abs(ev).max() <= 1 + 1e-9
        assert _nullity(H) == 2
        nz = np.abs(ev)[np.abs(ev) > 1e-9]
        assert nz.min() >= gap_lower_bound(inst, f) - 1e-9


@pytest.mark.parametrize("variant", VARIANTS)
def test_null_vectors_at_ends(variant):
    inst = random_instance(3, 5.0, variant, seed=5)
    assert np.linalg.norm(hamiltonian(inst, 0, 0) @ initial_state(inst)) <= 1e-12
    assert np.linalg.norm(hamiltonian(inst, 1, 1) @ solution_state(inst)) <= 1e-10
    # the b-carrying lower-block vector is the second null direction
    m = embedding(inst).inner_dim
    other = np.concatenate([np.zeros(m), embedding(inst).bvec])
    for f in (0.0, 0.4, 1.0):
        assert np.linalg.norm(hamiltonian(inst, f, f) @ other) <= 1e-12


def test_pd_solution_null_vector():
    inst = random_instance(4, 3.0, "hermitian-pd", seed=1)
    x = np.linalg.solve(inst.A, inst.b)
    v = np.concatenate([x, np.zeros(4)])
    assert np.linalg.norm(hamiltonian(inst, 1, 1) @ v) <= 1e-12


def test_general_gap_example():
    inst = random_instance(3, 10.0, "general", seed=2)
    ev = np.abs(np.linalg.eigvalsh(hamiltonian(inst, 0.5, 0.5)))
    assert ev[ev > 1e-9].min() >= 0.5024937810560445 - 1e-9


def test_hamiltonian_domain():
    inst = random_instance(2, 3.0)
    with pytest.raises(ValueError):
        hamiltonian(inst, 0.5, 1.5)
    with pytest.raises(ValueError):
        hamiltonian(inst, -0.1, 0.5)


def test_exact_solution_examples():
    b = np.array([0.6, 0.8])
    inst = QlspInstance(A=np.eye(2), b=b, kappa=2, variant="hermitian-pd")
    assert np.allclose(exact_solution(inst), b)
    inst = QlspInstance(A=np.diag([1, 0.25]), b=[0, 1], kappa=4, variant="hermitian-pd")
    assert np.allclose(np.abs(exact_solution(inst)), [0, 1])
    with pytest.raises(ValueError):
        exact_solution(QlspInstance(A=np.zeros((2, 2)), b=[1, 0], kappa=2, variant="general"))


@given(st.integers(0, 10 ** 6), st.sampled_from(VARIANTS))
@settings(max_examples=20, deadline=None)
def test_exact_solution_residual(seed, variant):
    inst = random_instance(4, 6.0, variant, seed)
    x = exact_solution(inst)
    y = inst.A @ x
    y /= np.linalg.norm(y)
    assert abs(abs(np.vdot(y, inst.b)) - 1) <= 1e-10

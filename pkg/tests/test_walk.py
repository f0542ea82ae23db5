import json

import numpy as np
import pytest

from dasolve.problem import VARIANTS, hamiltonian, hamiltonian_dim, random_instance
from dasolve.schedule import Schedule, diff_coeffs
from dasolve.spectral import spectral_norm, unitary_eig
from dasolve.walk import (
    WalkSequence,
    block_encode_H,
    block_encode_f,
    lift,
    reference_walk,
    rotation_R,
    rotation_from_f,
    state_prep,
    walk_at_f,
    walk_step,
)


def multiset_close(a, b, tol):
    """Greedy matching of two phase multisets on the circle."""
    a, b = list(a), list(b)
    if len(a) != len(b):
        return False
    for x in a:
        d = [abs(np.angle(np.exp(1j * (x - y)))) for y in b]
        k = int(np.argmin(d))
        if d[k] > tol:
            return False
        b.pop(k)
    return True


def qubitised_phases(lam):
    a = np.arcsin(np.clip(lam, -1, 1))
    return np.concatenate([a, np.pi - a])


def test_rotation_examples():
    assert np.allclose(rotation_from_f(0.0), [[1, 0], [0, -1]])
    assert np.allclose(rotation_from_f(1.0), [[0, 1], [1, 0]])
    assert np.allclose(rotation_from_f(0.5), np.array([[1, 1], [1, -1]]) / np.sqrt(2))
    sch = Schedule(1.5, 5, 10)
    for s in np.linspace(0, 1, 7):
        R = rotation_R(sch, s)
        assert np.abs(R @ R.T - np.eye(2)).max() <= 1e-12


def test_lift_matches_kron():
    a, b = np.diag([1.0, 2.0]), np.array([[0, 1], [1, 0]])
    full = lift(np.kron(a, b), [0, 2], [2, 3, 2])
    ref = np.einsum("ij,kl,mn->ikmjln", a, np.eye(3), b).reshape(12, 12)
    assert np.allclose(full, ref)


def test_state_prep(rng):
    v = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    U = state_prep(v)
    assert np.allclose(U[:, 0], v / np.linalg.norm(v))
    assert np.allclose(U.conj().T @ U, np.eye(5))


@pytest.mark.parametrize("variant", VARIANTS)
def test_block_encoding_valid(variant):
    inst = random_instance(2, 4, variant, seed=7)
    hd = hamiltonian_dim(inst)
    for f in np.linspace(0, 1, 6):
        be = block_encode_f(inst, f)
        assert np.linalg.norm(be.U @ be.U - np.eye(len(be.U)), 2) <= 1e-10
        assert be.block_dim == hd
        target = hamiltonian(inst, 0.5, f, scale=be.alpha)
        assert np.abs(be.block() - target).max() <= 1e-10


def test_alpha_one_at_half():
    inst = random_instance(2, 4, "general", seed=0)
    be = block_encode_f(inst, 0.5)
    assert be.alpha == pytest.approx(1.0)
    assert np.abs(be.block() - hamiltonian(inst, 0.5, 0.5)).max() <= 1e-10


def test_schedule_signature_specific_point():
    inst = random_instance(2, 4, "general", seed=1)
    sch = Schedule(1.5, 4, 10)
    be = block_encode_H(inst, sch, 0.3)
    f = float(sch.f(0.3))
    assert np.abs(be.block() - hamiltonian(inst, 0.3, f, scale=be.alpha)).max() <= 1e-10
    assert be.flag_state[0] == 1 and be.flag_state.sum() == 1


def test_reference_walk_examples():
    es = unitary_eig(reference_walk(np.zeros((3, 3))).W)
    assert np.sum(np.abs(es.phases) < 1e-12) == 3
    assert np.sum(np.abs(np.abs(es.phases) - np.pi) < 1e-12) == 3
    # the factor i in the walk sends eigenvalue +-1 to +-pi/2 twice each
    es = unitary_eig(reference_walk(np.diag([1.0, -1.0])).W)
    assert np.allclose(np.sort(es.phases), [-np.pi / 2] * 2 + [np.pi / 2] * 2)
    with pytest.raises(ValueError):
        reference_walk(np.diag([1.1]))


@pytest.mark.parametrize("variant", VARIANTS)
def test_reference_walk_phase_pattern(variant):
    inst = random_instance(3, 5, variant, seed=2)
    H = hamiltonian(inst, 0.4, 0.4)
    step = reference_walk(H, 0.4)
    assert np.linalg.norm(step.W.conj().T @ step.W - np.eye(step.dimension), 2) <= 1e-10
    phases = unitary_eig(step.W).phases
    assert multiset_close(phases, qubitised_phases(np.linalg.eigvalsh(H)), 1e-9)


@pytest.mark.parametrize("variant", VARIANTS)
def test_circuit_walk_phases_contain_reference(variant):
    inst = random_instance(2, 4, variant, seed=3)
    f = 0.35
    W = walk_at_f(inst, 0.2, f, "appendix-e").W
    assert np.linalg.norm(W.conj().T @ W - np.eye(len(W)), 2) <= 1e-10
    alpha = block_encode_f(inst, f).alpha
    ref = qubitised_phases(np.linalg.eigvalsh(hamiltonian(inst, 0.2, f, scale=alpha)))
    got = list(unitary_eig(W).phases)
    for x in ref:
        d = [abs(np.angle(np.exp(1j * (x - y)))) for y in got]
        k = int(np.argmin(d))
        assert d[k] <= 1e-9
        got.pop(k)
    assert np.allclose(np.abs(got), np.pi / 2, atol=1e-9)


def test_zero_eigenvalue_gives_zero_and_pi():
    inst = random_instance(2, 4, "general", seed=4)
    for kind in ("appendix-e", "reference"):
        ph = unitary_eig(walk_at_f(inst, 0.5, 0.5, kind).W).phases
        assert np.sum(np.abs(ph) < 1e-9) == 2
        assert np.sum(np.pi - np.abs(ph) < 1e-9) == 2


def test_walk_difference_is_rotation_difference():
    inst = random_instance(2, 4, "general", seed=5)
    sch = Schedule(1.5, 4, 16)
    seq = WalkSequence(inst, sch, "appendix-e")
    for n in range(0, 16, 3):
        dW = spectral_norm(seq(n + 1).W - seq(n).W)
        dR = spectral_norm(rotation_from_f(seq.f(n + 1)) - rotation_from_f(seq.f(n)))
        assert dW == pytest.approx(dR, abs=1e-10)


def test_analytic_coefficients_bound_walk_differences():
    inst = random_instance(2, 4, "general", seed=6)
    T = 32
    sch = Schedule(1.5, 4, T)
    seq = WalkSequence(inst, sch, "appendix-e")
    co = diff_coeffs(sch, "analytic")
    W = [seq(n).W for n in range(T + 1)]
    for n in range(T):
        assert T * spectral_norm(W[n + 1] - W[n]) <= co.c1[n] + 1e-9
        if n <= T - 2:
            assert T ** 2 * spectral_norm(W[n + 2] - 2 * W[n + 1] + W[n]) <= co.c2[n] + 1e-9


def test_sequence_matches_direct_construction():
    inst = random_instance(2, 3, "hermitian", seed=8)
    sch = Schedule(1.5, 3, 8)
    for kind in ("appendix-e", "reference"):
        seq = WalkSequence(inst, sch, kind)
        for n in (1, 5):
            assert np.allclose(seq(n).W, walk_step(inst, sch, n / 8, kind).W, atol=1e-12)
        assert seq.f(0) == 0.0 and seq.f(8) == 1.0
        with pytest.raises(IndexError):
            seq(9)
    with pytest.raises(ValueError):
        WalkSequence(inst, sch, "other")


def test_walk_step_json():
    step = reference_walk(np.diag([0.3, -0.2]), 0.25)
    d = json.loads(step.to_json())
    W = np.array(d["W"])
    assert np.allclose(W[..., 0] + 1j * W[..., 1], step.W)
    assert d["s"] == 0.25 and d["kind"] == "reference"

"""Linear-system instances and the interpolating Hamiltonians whose null space
carries the solution."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

VARIANTS = ("hermitian-pd", "hermitian", "general")

SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


@dataclass(frozen=True)
class QlspInstance:
    A: np.ndarray
    b: np.ndarray
    kappa: float
    variant: str
    seed: int | None = None
    dim: int = field(init=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        A = np.asarray(self.A, dtype=complex)
        b = np.asarray(self.b, dtype=complex).reshape(-1)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] != b.size:
            raise ValueError("A must be square and match the length of b")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "dim", b.size)

    def to_dict(self) -> dict:
        pairs = lambda z: np.stack([z.real, z.imag], axis=-1).tolist()
        return {
            "dim": self.dim,
            "variant": self.variant,
            "kappa": float(self.kappa),
            "A": pairs(self.A),
            "b": pairs(self.b),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QlspInstance":
        def unpair(x):
            arr = np.asarray(x, dtype=float)
            return arr[..., 0] + 1j * arr[..., 1]

        inst = cls(A=unpair(d["A"]), b=unpair(d["b"]), kappa=float(d["kappa"]),
                   variant=d["variant"], seed=d.get("seed"))
        if inst.dim != int(d["dim"]):
            raise ValueError(f"dim field {d['dim']} disagrees with data ({inst.dim})")
        return inst


def save_instance(inst: QlspInstance, path) -> None:
    Path(path).write_text(json.dumps(inst.to_dict(), indent=1))


def load_instance(path) -> QlspInstance:
    return QlspInstance.from_dict(json.loads(Path(path).read_text()))


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_instance(N: int, kappa: float, variant: str = "general", seed: int = 0) -> QlspInstance:
    """Random instance with ||A|| = 1 and ||A^{-1}|| = kappa exactly.

    Singular values (eigenvalue magnitudes for Hermitian variants) are 1 and
    1/kappa plus N-2 log-uniform draws in between.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    if not kappa > 1:
        raise ValueError(f"kappa must exceed 1, got {kappa}")
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    rng = np.random.default_rng(seed)
    inner = np.exp(rng.uniform(-np.log(kappa), 0.0, size=N - 2))
    sv = np.concatenate([[1.0, 1.0 / kappa], inner])
    V = haar_unitary(N, rng)
    if variant == "hermitian-pd":
        A = (V * sv) @ V.conj().T
    elif variant == "hermitian":
        signs = rng.choice([-1.0, 1.0], size=N)
        signs[:2] = [1.0, -1.0]
        A = (V * (sv * signs)) @ V.conj().T
    else:
        U = haar_unitary(N, rng)
        A = (U * sv) @ V.conj().T
    if variant != "general":
        A = (A + A.conj().T) / 2
    b = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    b /= np.linalg.norm(b)
    return QlspInstance(A=A, b=b, kappa=float(kappa), variant=variant, seed=seed)


@dataclass(frozen=True)
class Embedding:
    """Ingredients of H(f) = [[0, A(f) Q], [Q A(f), 0]] on the `inner` space.

    A(f) = (1-f) start + f target, Q = I - |bvec><bvec|.  For the two
    Hermitian variants `start` is sigma_z (x) I; for the PD variant it is I.
    """

    start: np.ndarray
    target: np.ndarray
    bvec: np.ndarray

    @property
    def inner_dim(self) -> int:
        return self.bvec.size

    def A_of_f(self, f: float) -> np.ndarray:
        return (1 - f) * self.start + f * self.target

    def Q(self) -> np.ndarray:
        return np.eye(self.inner_dim) - np.outer(self.bvec, self.bvec.conj())


def embedding(inst: QlspInstance) -> Embedding:
    N = inst.dim
    if inst.variant == "hermitian-pd":
        return Embedding(start=np.eye(N, dtype=complex), target=inst.A, bvec=inst.b)
    start = np.kron(SIGMA_Z, np.eye(N))
    if inst.variant == "hermitian":
        target = np.kron(SIGMA_X, inst.A)
        bvec = np.kron(HADAMARD[:, 0], inst.b)
    else:
        # A^dagger sits top-right so that the f=1 null vector is |0>|A^{-1} b>
        target = np.block([[np.zeros((N, N)), inst.A.conj().T], [inst.A, np.zeros((N, N))]])
        bvec = np.kron([0.0, 1.0], inst.b)
    return Embedding(start=start, target=target, bvec=bvec.astype(complex))


def hamiltonian_dim(inst: QlspInstance) -> int:
    return 2 * inst.dim if inst.variant == "hermitian-pd" else 4 * inst.dim


def hamiltonian(inst: QlspInstance, s: float, f_value: float, scale: float = 1.0) -> np.ndarray:
    """H at interpolation value f_value.

    `s` only records where on the path H is taken; H depends on s through f.
    `scale` multiplies A(f) (used for sub-normalised block encodings).
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    if not -1e-12 <= f_value <= 1 + 1e-12:
        raise ValueError(f"f must lie in [0, 1], got {f_value}")
    emb = embedding(inst)
    Af = scale * emb.A_of_f(f_value)
    Q = emb.Q()
    m = emb.inner_dim
    Z = np.zeros((m, m), dtype=complex)
    return np.block([[Z, Af @ Q], [Q @ Af, Z]])


def gap_lower_bound(inst: QlspInstance, f: float) -> float:
    """Lower bound on the smallest nonzero |eigenvalue| of H(f)."""
    if inst.variant == "hermitian-pd":
        return 1 - f + f / inst.kappa
    return float(np.sqrt((1 - f) ** 2 + (f / inst.kappa) ** 2))


def initial_state(inst: QlspInstance) -> np.ndarray:
    """Null vector of H(0) in the upper block; it is continued adiabatically to the solution."""
    emb = embedding(inst)
    v = emb.start @ emb.bvec
    return np.concatenate([v / np.linalg.norm(v), np.zeros(emb.inner_dim)])


def solution_state(inst: QlspInstance) -> np.ndarray:
    """Null vector of H(1) in the upper block, which encodes A^{-1} b."""
    emb = embedding(inst)
    v = np.linalg.solve(emb.target, emb.bvec)
    return np.concatenate([v / np.linalg.norm(v), np.zeros(emb.inner_dim)])


def readout_map(inst: QlspInstance) -> np.ndarray:
    """Map from H-space to solution space: inner product of the upper block with the
    fixed ancilla pattern that carries x (|0>, |+> or nothing)."""
    N = inst.dim
    m = embedding(inst).inner_dim
    R = np.zeros((N, 2 * m), dtype=complex)
    if inst.variant == "hermitian-pd":
        R[:, :N] = np.eye(N)
    elif inst.variant == "hermitian":
        R[:, :2 * N] = np.kron(HADAMARD[:, 0][None, :], np.eye(N))
    else:
        R[:, :N] = np.eye(N)
    return R


def exact_solution(inst: QlspInstance) -> np.ndarray:
    """Normalised A^{-1} b by a dense solve."""
    try:
        x = np.linalg.solve(inst.A, inst.b)
    except np.linalg.LinAlgError as exc:
        raise ValueError("A is singular") from exc
    return x / np.linalg.norm(x)

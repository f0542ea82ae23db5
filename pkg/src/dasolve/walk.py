"""Qubitised walk operators for H(s): the four-ancilla block encoding with
a rotation-selected A(f), and a one-ancilla reference walk used as a cross-check."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .problem import HADAMARD, QlspInstance, embedding, hamiltonian
from .schedule import Schedule, rotation_entries
from .spectral import svd_dilation

WALK_KINDS = ("appendix-e", "reference")

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)

# register layout of the block-encoding circuit: flag ancillas first, then the
# H-block selector a4, then the A(f) space (a1 (x) system, or system alone)
A2, A3, AA, A4, INNER = range(5)


def lift(op: np.ndarray, targets, dims) -> np.ndarray:
    """Embed `op`, acting on registers `targets` (in that order), into the full space."""
    targets = list(targets)
    rest = [k for k in range(len(dims)) if k not in targets]
    order = targets + rest
    d_rest = int(np.prod([dims[k] for k in rest])) if rest else 1
    full = np.kron(op, np.eye(d_rest))
    shape = [dims[k] for k in order]
    n = len(dims)
    full = full.reshape(shape + shape)
    inv = np.argsort(order)
    full = full.transpose(list(inv) + [n + i for i in inv])
    D = int(np.prod(dims))
    return full.reshape(D, D)


def rotation_R(sch: Schedule, s: float) -> np.ndarray:
    """Select rotation [[1-f, f], [f, -(1-f)]] / sqrt((1-f)^2 + f^2)."""
    a, b = rotation_entries(sch.f(s))
    return np.array([[a, b], [b, -a]], dtype=float)


def rotation_from_f(f: float) -> np.ndarray:
    a, b = rotation_entries(f)
    return np.array([[a, b], [b, -a]], dtype=float)


def state_prep(v: np.ndarray) -> np.ndarray:
    """Unitary mapping e_0 to the unit vector v (phase times a Householder reflection)."""
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    theta = np.angle(v[0]) if abs(v[0]) > 0 else 0.0
    w = v * np.exp(-1j * theta)
    u = -w
    u[0] += 1.0
    nu = np.linalg.norm(u)
    H = np.eye(len(v), dtype=complex)
    if nu > 1e-15:
        u /= nu
        H -= 2 * np.outer(u, u.conj())
    return np.exp(1j * theta) * H


@dataclass(frozen=True)
class BlockEncoding:
    """Self-inverse U whose flag block (all flag ancillas zero) is alpha * H(s)."""

    U: np.ndarray
    ancilla_dim: int
    alpha: float

    @property
    def block_dim(self) -> int:
        return self.U.shape[0] // self.ancilla_dim

    @property
    def flag_state(self) -> np.ndarray:
        e = np.zeros(self.ancilla_dim)
        e[0] = 1.0
        return e

    def block(self) -> np.ndarray:
        m = self.block_dim
        return self.U[:m, :m]


def _oracle_blocks(inst: QlspInstance):
    """Blocks [[A, sqrt(I - A A^+)], [sqrt(I - A^+ A), -A^+]] of the A oracle."""
    U = svd_dilation(inst.A)
    N = inst.dim
    return [[U[:N, :N], U[:N, N:]], [U[N:, :N], U[N:, N:]]]


def _select_target(inst: QlspInstance) -> np.ndarray:
    """Controlled oracle on (aa, inner) whose aa=0 block is the f=1 matrix."""
    blocks = _oracle_blocks(inst)
    N = inst.dim
    out = []
    for j in range(2):
        row = []
        for k in range(2):
            ujk = blocks[j][k]
            if inst.variant == "hermitian-pd":
                row.append(ujk)
            elif inst.variant == "hermitian":
                row.append(np.kron(SIGMA_X, ujk))
            else:
                # aa block (j,k) of |0><1| (x) U_A^+ + |1><0| (x) U_A
                udag_jk = blocks[k][j].conj().T
                z = np.zeros((N, N))
                row.append(np.block([[z, udag_jk], [ujk, z]]))
        out.append(row)
    return np.block(out)


def _b_preparation(inst: QlspInstance):
    """(G, r) with G r equal to the embedded b vector."""
    Ub = state_prep(inst.b)
    N = inst.dim
    if inst.variant == "hermitian-pd":
        r = np.zeros(N)
        r[0] = 1
        return Ub, r
    if inst.variant == "hermitian":
        G = np.kron(HADAMARD, Ub)
        r = np.zeros(2 * N)
        r[0] = 1
        return G, r
    G = np.kron(np.eye(2), Ub)
    r = np.zeros(2 * N)
    r[N] = 1
    return G, r


class _CircuitParts:
    """f-independent factors of the eight-stage circuit.

    The select rotation is R(f) = a Z + b X, so each controlled rotation is
    a C_Z + b C_X + C_H with fixed lifted matrices.
    """

    def __init__(self, inst: QlspInstance):
        emb = embedding(inst)
        m = emb.inner_dim
        dims = [2, 2, 2, 2, m]
        P0 = np.diag([1.0, 0.0])
        P1 = np.diag([0.0, 1.0])
        Z = np.diag([1.0, -1.0])

        G, r = _b_preparation(inst)
        refl = G @ (np.eye(m) - 2 * np.outer(r, r)) @ G.conj().T
        # reflection acts only when a3 = 1 and a4 = x
        def cu_q(x):
            ctrl = P1 if x else P0
            op = np.eye(4 * m, dtype=complex) + np.kron(np.kron(P1, ctrl), refl - np.eye(m))
            return lift(op, [A3, A4, INNER], dims)

        def cr_parts(x):
            on, off = (P1, P0) if x else (P0, P1)
            return tuple(lift(op, [A4, A2], dims) for op in
                         (np.kron(on, Z), np.kron(on, SIGMA_X), np.kron(off, HADAMARD)))

        sel0 = np.kron(np.eye(2), emb.start)
        u_af = lift(np.kron(P0, sel0) + np.kron(P1, _select_target(inst)), [A2, AA, INNER], dims)
        had3 = lift(HADAMARD, [A3], dims)
        x4 = lift(SIGMA_X, [A4], dims)
        self.left = x4 @ had3 @ cu_q(0)
        self.cr1 = cr_parts(1)
        self.mid = u_af
        self.cr0 = cr_parts(0)
        self.right = cu_q(1) @ had3

    def unitary(self, f_value: float) -> np.ndarray:
        a, b = rotation_entries(f_value)
        c1 = a * self.cr1[0] + b * self.cr1[1] + self.cr1[2]
        c0 = a * self.cr0[0] + b * self.cr0[1] + self.cr0[2]
        return self.left @ c1 @ self.mid @ c0 @ self.right


def block_encode_f(inst: QlspInstance, f_value: float, parts: _CircuitParts | None = None) -> BlockEncoding:
    """Eight-stage circuit: Had(a3), CU1_Q, CR0, U_A(f), CR1, CU0_Q, Had(a3), X(a4)."""
    parts = _CircuitParts(inst) if parts is None else parts
    alpha = 1.0 / np.sqrt(2 * ((1 - f_value) ** 2 + f_value ** 2))
    return BlockEncoding(U=parts.unitary(f_value), ancilla_dim=8, alpha=float(alpha))


def block_encode_H(inst: QlspInstance, sch: Schedule, s: float) -> BlockEncoding:
    return block_encode_f(inst, float(sch.f(s)))


def qubitise(U: np.ndarray, ancilla_dim: int) -> np.ndarray:
    """i (2 Pi - I) U with Pi the projector onto the all-zero flag ancillas (leading registers).

    The factor i places H-eigenvalue 0 at walk phases 0 and pi and eigenvalue
    lambda at phases arcsin(lambda) and pi - arcsin(lambda).
    """
    D = U.shape[0]
    m = D // ancilla_dim
    refl = -np.ones(D)
    refl[:m] = 1.0
    return 1j * refl[:, None] * U


@dataclass(frozen=True)
class WalkStep:
    s: float
    W: np.ndarray
    kind: str

    @property
    def dimension(self) -> int:
        return self.W.shape[0]

    def to_json(self) -> str:
        return json.dumps({"s": self.s, "kind": self.kind,
                           "W": np.stack([self.W.real, self.W.imag], -1).tolist()})


def reference_walk(H: np.ndarray, s: float = 0.0) -> WalkStep:
    """Walk from the one-ancilla encoding [[H, sqrt(I-H^2)], [sqrt(I-H^2), -H]]."""
    H = np.asarray(H, dtype=complex)
    # one eigendecomposition for both blocks keeps U unitary when |lambda| is near 1
    lam, E = np.linalg.eigh((H + H.conj().T) / 2)
    if np.max(np.abs(lam)) > 1 + 1e-10:
        raise ValueError(f"reference walk needs ||H|| <= 1, got {np.max(np.abs(lam)):.12f}")
    lam = np.clip(lam, -1.0, 1.0)
    Hs = (E * lam) @ E.conj().T
    S = (E * np.sqrt(1 - lam ** 2)) @ E.conj().T
    m = H.shape[0]
    U = np.empty((2 * m, 2 * m), dtype=complex)
    U[:m, :m], U[:m, m:], U[m:, :m], U[m:, m:] = Hs, S, S, -Hs
    return WalkStep(s=s, W=qubitise(U, 2), kind="reference")


def walk_at_f(inst: QlspInstance, s: float, f_value: float, kind: str = "appendix-e") -> WalkStep:
    if kind == "appendix-e":
        be = block_encode_f(inst, f_value)
        return WalkStep(s=s, W=qubitise(be.U, be.ancilla_dim), kind=kind)
    if kind == "reference":
        return reference_walk(hamiltonian(inst, s, f_value), s)
    raise ValueError(f"unknown walk kind {kind!r}")


def walk_step(inst: QlspInstance, sch: Schedule, s: float, kind: str = "appendix-e") -> WalkStep:
    return walk_at_f(inst, s, float(sch.f(s)), kind)


def walk_dim(inst: QlspInstance, kind: str) -> int:
    m = embedding(inst).inner_dim
    return 16 * m if kind == "appendix-e" else 4 * m


def flag_embed(inst: QlspInstance, v: np.ndarray, kind: str) -> np.ndarray:
    """Place an H-space vector into the walk space with every flag ancilla at zero."""
    out = np.zeros(walk_dim(inst, kind), dtype=complex)
    out[: len(v)] = v
    return out


class WalkSequence:
    """Steps W(n/T), n = 0..T, built on demand from an instance and a schedule."""

    def __init__(self, inst: QlspInstance, sch: Schedule, kind: str = "appendix-e"):
        if kind not in WALK_KINDS:
            raise ValueError(f"unknown walk kind {kind!r}")
        self.inst, self.sch, self.kind = inst, sch, kind
        self._f = sch.f(sch.grid)
        if sch.constant_f is None:
            self._f[0], self._f[-1] = 0.0, 1.0
        if kind == "appendix-e":
            self._parts = _CircuitParts(inst)
        else:
            # H is affine in f
            self._H0 = hamiltonian(inst, 0.0, 0.0)
            self._H1 = hamiltonian(inst, 1.0, 1.0)

    @property
    def T(self) -> int:
        return self.sch.T

    @property
    def dimension(self) -> int:
        return walk_dim(self.inst, self.kind)

    def f(self, n: int) -> float:
        return float(self._f[n])

    def __call__(self, n: int) -> WalkStep:
        if not 0 <= n <= self.T:
            raise IndexError(f"step {n} outside 0..{self.T}")
        f = self.f(n)
        if self.kind == "appendix-e":
            U = self._parts.unitary(f)
            return WalkStep(s=n / self.T, W=qubitise(U, 8), kind=self.kind)
        return reference_walk((1 - f) * self._H0 + f * self._H1, n / self.T)

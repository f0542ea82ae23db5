"""Discrete adiabatic evolution: the product of walk steps, the ideal evolution
built from spectral projectors, and the operators used to analyse the gap
between them."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .problem import embedding
from .schedule import GapProfile, measured_gap_profile
from .spectral import (
    Arc,
    EigenSystem,
    arc_projector,
    inv_sqrt_psd,
    spectral_norm,
    sqrt_psd,
    unitary_eig,
)

RANK_TOL = 1e-7


def _as_matrix(step):
    return step.W if hasattr(step, "W") else np.asarray(step)


def evolve(walk_source, T: int) -> np.ndarray:
    """U(1) = W((T-1)/T) ... W(1/T) W(0).

    `walk_source` is a sequence of T unitaries (or WalkSteps) or a callable n -> step.
    """
    if T <= 0 or T % 2:
        raise ValueError(f"T must be a positive even integer, got {T}")
    get = walk_source if callable(walk_source) else walk_source.__getitem__
    U = None
    for n in range(T):
        W = _as_matrix(get(n))
        if U is None:
            U = np.eye(W.shape[0], dtype=complex)
        if W.shape != U.shape:
            raise ValueError(f"step {n} has shape {W.shape}, expected {U.shape}")
        U = W @ U
    return U


def distance_to_pm1(phases) -> np.ndarray:
    """Angular distance of each eigenphase from the nearer of 0 and pi."""
    a = np.abs(np.asarray(phases))
    return np.minimum(a, np.pi - a)


@dataclass(frozen=True)
class SpectralSplit:
    """Projector onto eigenphases near 0 and pi, separated by a measured gap."""

    P: np.ndarray
    eig: EigenSystem
    mask: np.ndarray
    arcs: tuple
    p_spread: float
    q_dist: float

    @property
    def Q(self) -> np.ndarray:
        return np.eye(self.P.shape[0]) - self.P

    @property
    def rank(self) -> int:
        return int(self.mask.sum())

    @property
    def gap(self) -> float:
        return self.q_dist - self.p_spread


def spectral_split(step, prev: SpectralSplit | None = None, rank: int | None = None) -> SpectralSplit:
    """Split the walk spectrum into phases near {0, pi} and the rest.

    Without an explicit rank, the wanted phases are those within RANK_TOL of
    0 or pi; a rank different from `prev` means eigenphases crossed the gap.
    Arc half-widths sit at the midpoint between the two groups.
    """
    es = unitary_eig(_as_matrix(step))
    d = distance_to_pm1(es.phases)
    order = np.argsort(d, kind="stable")
    r = int(np.sum(d < RANK_TOL)) if rank is None else int(rank)
    if prev is not None and r != prev.rank:
        raise ValueError(f"projector rank changed from {prev.rank} to {r}: eigenphases crossed the gap")
    if not 0 < r < len(d):
        raise ValueError(f"no admissible split (rank {r} of {len(d)})")
    p_spread = float(d[order[r - 1]])
    q_dist = float(d[order[r]])
    if q_dist - p_spread <= 1e-8:
        raise ValueError(f"eigenphase gap {q_dist - p_spread:.3e} too small to split")
    w = 0.5 * (p_spread + q_dist)
    arcs = (Arc(0.0, w), Arc(np.pi, w))
    P = arc_projector(es, arcs)
    mask = np.zeros(len(d), dtype=bool)
    mask[order[:r]] = True
    return SpectralSplit(P=P, eig=es, mask=mask, arcs=arcs, p_spread=p_spread, q_dist=q_dist)


@dataclass(frozen=True)
class IdealStep:
    S: np.ndarray
    v: np.ndarray
    V: np.ndarray
    WA: np.ndarray
    F: np.ndarray
    DP: np.ndarray


def ideal_step(split_now: SpectralSplit, split_next: SpectralSplit, W_now: np.ndarray) -> IdealStep:
    """Polar factor V = v^{-1} S mapping the current eigenspaces onto the next ones."""
    P0, P1 = split_now.P, split_next.P
    DP = P1 - P0
    ndp = spectral_norm(DP)
    if ndp >= 1 - 1e-12:
        raise ValueError(f"||DP|| = {ndp:.6f} >= 1: projector step too large")
    I = np.eye(P0.shape[0])
    S = P1 @ P0 + (I - P1) @ (I - P0)
    M = I - DP @ DP
    F = inv_sqrt_psd(M)
    V = F @ S
    return IdealStep(S=S, v=sqrt_psd(M), V=V, WA=V @ W_now, F=F, DP=DP)


@dataclass
class StepRecord:
    n: int
    W: np.ndarray
    split: SpectralSplit
    U: np.ndarray
    UA: np.ndarray
    ideal: IdealStep | None  # None at the final step n = T


def iterate_run(seq):
    """Yield StepRecord for n = 0..T with U(n), U^A(n) and the step n -> n+1 operators."""
    T = seq.T
    W = _as_matrix(seq(0))
    split = spectral_split(W)
    dim = W.shape[0]
    U = np.eye(dim, dtype=complex)
    UA = np.eye(dim, dtype=complex)
    for n in range(T + 1):
        if n < T:
            W_next = _as_matrix(seq(n + 1))
            split_next = spectral_split(W_next, prev=split)
            ideal = ideal_step(split, split_next, W)
        else:
            ideal = None
        yield StepRecord(n=n, W=W, split=split, U=U, UA=UA, ideal=ideal)
        if n < T:
            U = W @ U
            UA = ideal.WA @ UA
            W, split = W_next, split_next


@dataclass
class AdiabaticRun:
    T: int
    U: np.ndarray
    UA: np.ndarray
    error: float
    p_spread: np.ndarray
    q_dist: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    norm_dp: np.ndarray
    norm_v_minus_i: np.ndarray
    rank: int
    errors: np.ndarray | None = None
    history: list | None = None
    final_state: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def gaps(self) -> GapProfile:
        return measured_gap_profile(self.p_spread, self.q_dist)


TRACE_COLUMNS = ["n", "s", "gap_measured", "c1_exact", "normDP", "normV_minus_I",
                 "cumulative_error_estimate"]


def ideal_evolution_and_error(seq, keep_history: bool = False, track_errors: bool = False,
                              psi0: np.ndarray | None = None, trace_path=None) -> AdiabaticRun:
    """Run the actual and ideal evolutions side by side.

    Also measures the walk-difference coefficients c1(n) = T ||W(n+1) - W(n)||,
    c2(n) = T^2 ||W(n+2) - 2 W(n+1) + W(n)|| and the eigenphase gaps.
    """
    T = seq.T
    track_errors = track_errors or trace_path is not None
    p_spread = np.empty(T + 1)
    q_dist = np.empty(T + 1)
    c1 = np.full(T, np.nan)
    c2 = np.full(T, np.nan)
    norm_dp = np.full(T, np.nan)
    norm_vmi = np.full(T, np.nan)
    errors = np.empty(T + 1) if track_errors else None
    history = [] if keep_history else None
    window = []
    rec = None
    for rec in iterate_run(seq):
        n = rec.n
        p_spread[n], q_dist[n] = rec.split.p_spread, rec.split.q_dist
        window = (window + [rec.W])[-3:]
        if n >= 1:
            c1[n - 1] = T * spectral_norm(window[-1] - window[-2])
        if n >= 2:
            c2[n - 2] = T ** 2 * spectral_norm(window[-1] - 2 * window[-2] + window[-3])
        if rec.ideal is not None:
            norm_dp[n] = spectral_norm(rec.ideal.DP)
            norm_vmi[n] = spectral_norm(rec.ideal.V - np.eye(len(rec.W)))
        if track_errors:
            errors[n] = spectral_norm(rec.U - rec.UA)
        if keep_history:
            history.append(rec)
    U = rec.U
    UA = rec.UA
    run = AdiabaticRun(
        T=T, U=U, UA=UA, error=spectral_norm(U - UA), p_spread=p_spread, q_dist=q_dist,
        c1=c1, c2=c2, norm_dp=norm_dp, norm_v_minus_i=norm_vmi, rank=rec.split.rank,
        errors=errors, history=history,
        final_state=None if psi0 is None else U @ psi0,
        meta={"arc_rule": "midpoint", "rank_tol": RANK_TOL},
    )
    if trace_path is not None:
        write_trace_csv(run, trace_path)
    return run


def write_trace_csv(run: AdiabaticRun, path) -> None:
    T = run.T
    gap0 = run.q_dist - run.p_spread
    pad = lambda a: np.append(a, np.nan)
    c1, dp, vmi = pad(run.c1), pad(run.norm_dp), pad(run.norm_v_minus_i)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for n in range(T + 1):
            w.writerow([n, repr(n / T), repr(float(gap0[n])), repr(float(c1[n])), repr(float(dp[n])),
                        repr(float(vmi[n])), repr(float(run.errors[n]))])


def x_tilde(split: SpectralSplit, X: np.ndarray) -> np.ndarray:
    """Block-off-diagonal solution of [W, Xt] = P X Q - Q X P in the eigenbasis of W.

    This is the residue evaluation of the resolvent sandwich integral around
    the wanted part of the spectrum.
    """
    E = split.eig.vectors
    lam = np.exp(1j * split.eig.phases)
    Xe = E.conj().T @ X @ E
    p = split.mask
    diff = lam[:, None] - lam[None, :]
    out = np.zeros_like(Xe)
    pq = np.outer(p, ~p)
    qp = np.outer(~p, p)
    out[pq] = Xe[pq] / diff[pq]
    out[qp] = -Xe[qp] / diff[qp]
    return E @ out @ E.conj().T


@dataclass
class ProofOperators:
    """Per-step operators indexed by n (None where undefined)."""

    T: int
    W: list
    P: list
    V: list
    WA: list
    F: list
    DP: list
    U: list
    UA: list
    Omega: list
    X: list
    Xt: list
    A: list
    splits: list


def assemble_operators(history) -> ProofOperators:
    T = len(history) - 1
    I = np.eye(history[0].W.shape[0])
    W = [r.W for r in history]
    P = [r.split.P for r in history]
    V = [r.ideal.V if r.ideal else None for r in history]
    WA = [r.ideal.WA if r.ideal else None for r in history]
    F = [r.ideal.F if r.ideal else None for r in history]
    DP = [r.ideal.DP if r.ideal else None for r in history]
    U = [r.U for r in history]
    UA = [r.UA for r in history]
    Omega = [ua.conj().T @ u for ua, u in zip(UA, U)]
    X = [None] + [T * (I - V[n - 1].conj().T) for n in range(1, T + 1)]
    Xt = [None] + [x_tilde(history[n].split, X[n]) for n in range(1, T + 1)]
    A = [(V[n].conj().T - I) @ WA[n] if V[n] is not None else None for n in range(T + 1)]
    return ProofOperators(T=T, W=W, P=P, V=V, WA=WA, F=F, DP=DP, U=U, UA=UA, Omega=Omega,
                          X=X, Xt=Xt, A=A, splits=[r.split for r in history])


def b_operator(ops: ProofOperators, n: int) -> np.ndarray:
    return (ops.Xt[n + 1] - ops.Xt[n]) @ ops.WA[n] + (ops.WA[n] - ops.WA[n - 1]) @ ops.Xt[n]


def z_operator(ops: ProofOperators, n: int) -> np.ndarray:
    A, Xt = ops.A[n], ops.Xt[n]
    return ops.T * (A @ Xt - Xt @ A + b_operator(ops, n))


def summation_by_parts(ops: ProofOperators, l: int):
    """Both sides of the summation-by-parts identity with X(n) = T(I - V^+(n-1)), Y(n) = Omega(n-1).

    Returns (lhs, boundary, sum_term); the identity is lhs = boundary - sum_term / T.
    """
    T = ops.T
    if not 1 <= l <= T - 1:
        raise ValueError(f"l must lie in 1..{T - 1}")
    P0 = ops.P[0]
    Q0 = np.eye(P0.shape[0]) - P0
    Y = lambda n: ops.Omega[n - 1]
    dag = lambda M: M.conj().T
    lhs = sum(Q0 @ dag(ops.UA[n]) @ ops.X[n] @ ops.UA[n] @ P0 @ Y(n) for n in range(1, l + 1))
    boundary = (Q0 @ dag(ops.UA[l]) @ ops.Xt[l + 1] @ ops.UA[l + 1] @ P0 @ Y(l + 1)
                - Q0 @ dag(ops.UA[0]) @ ops.Xt[1] @ ops.UA[1] @ P0 @ Y(1))
    total = 0
    for n in range(1, l + 1):
        dY = Y(n + 1) - Y(n)
        total = total + Q0 @ dag(ops.UA[n]) @ (
            z_operator(ops, n) @ ops.UA[n] @ P0 @ Y(n)
            + ops.Xt[n + 1] @ ops.WA[n] @ ops.UA[n] @ P0 @ (T * dY))
    return lhs, boundary, total


def proof_operator_suite(run: AdiabaticRun, n: int | None = None) -> dict:
    """Residuals of the exact identities relating the actual and ideal evolutions, up to step n."""
    if run.history is None:
        raise ValueError("proof operator suite needs a run with keep_history=True")
    ops = assemble_operators(run.history)
    T = ops.T
    n = T if n is None else n
    I = np.eye(ops.W[0].shape[0])
    dag = lambda M: M.conj().T
    res = {}

    theta = [ops.Omega[m + 1] @ dag(ops.Omega[m]) for m in range(n)]
    res["ripple"] = max((spectral_norm(theta[m] - dag(ops.UA[m + 1]) @ dag(ops.V[m]) @ ops.UA[m + 1])
                         for m in range(n)), default=0.0)
    K = [T * (I - th) for th in theta]
    acc = np.zeros_like(I, dtype=complex)
    vol = 0.0
    for m in range(n + 1):
        vol = max(vol, spectral_norm(ops.Omega[m] - (I - acc / T)))
        if m < n:
            acc = acc + K[m] @ ops.Omega[m]
    res["volterra"] = vol

    lem7 = main_p = main_q = inter_u = inter_w = 0.0
    for m in range(min(n, T)):
        P, Pn, DP, F = ops.P[m], ops.P[m + 1], ops.DP[m], ops.F[m]
        lem7 = max(lem7, spectral_norm(ops.V[m] - F @ (I + DP @ (2 * P - I))))
        v = run.history[m].ideal.v
        main_p = max(main_p, spectral_norm(Pn @ ops.W[m] @ P - Pn @ v @ ops.WA[m] @ P))
        Q, Qn = I - P, I - Pn
        main_q = max(main_q, spectral_norm(Qn @ ops.W[m] @ Q - Qn @ v @ ops.WA[m] @ Q))
        inter_w = max(inter_w, spectral_norm(Pn @ ops.WA[m] - ops.WA[m] @ P))
    for m in range(n + 1):
        inter_u = max(inter_u, spectral_norm(ops.UA[m] @ ops.P[0] - ops.P[m] @ ops.UA[m]))
    res.update(v_factorisation=lem7, main_eq_p=main_p, main_eq_q=main_q,
               intertwine_u=inter_u, intertwine_w=inter_w)

    l = min(n, T - 1)
    if l >= 1:
        lhs, bnd, tot = summation_by_parts(ops, l)
        res["summation_by_parts"] = spectral_norm(lhs - (bnd - tot / T))
    comm = max(spectral_norm(ops.W[m] @ ops.Xt[m] - ops.Xt[m] @ ops.W[m]
                             - (ops.P[m] @ ops.X[m] - ops.X[m] @ ops.P[m])) for m in range(1, n + 1)) if n else 0.0
    res["x_tilde_commutator"] = comm
    return res


def _null_vectors(inst, f_value):
    """Solution-branch and b-branch null vectors of H(f) in H-space."""
    emb = embedding(inst)
    m = emb.inner_dim
    x = np.linalg.solve(emb.A_of_f(f_value), emb.bvec)
    sol = np.concatenate([x / np.linalg.norm(x), np.zeros(m)])
    other = np.concatenate([np.zeros(m), emb.bvec])
    return sol, other


def phase_consistency(seq, run: AdiabaticRun | None = None, tol: float = 1e-8) -> dict:
    """Compare step-to-step overlaps of the +1 and -1 walk eigenvectors built from each null vector.

    With |0k> a flagged null vector and |0k_perp> = i W |0k>, the +1 and -1
    eigenvectors are (|0k> -+ i|0k_perp>)/sqrt(2).  Equal overlaps mean the two
    branches pick up the same phase, so an even number of steps keeps their
    positive superposition (the solution encoding) intact.
    """
    inst, T = seq.inst, seq.T
    mism = 0.0
    min_overlap = 1.0
    prev = None
    for n in range(T + 1):
        W = _as_matrix(seq(n))
        pairs = []
        for k in _null_vectors(inst, seq.f(n)):
            v0 = np.zeros(W.shape[0], dtype=complex)
            v0[: len(k)] = k
            perp = 1j * W @ v0
            pairs.append(((v0 - 1j * perp) / np.sqrt(2), (v0 + 1j * perp) / np.sqrt(2)))
        if prev is not None:
            for (pp, pm), (cp, cm) in zip(prev, pairs):
                a, b = np.vdot(cp, pp), np.vdot(cm, pm)
                mism = max(mism, abs(a - b))
                min_overlap = min(min_overlap, abs(a))
        prev = pairs
    out = {"max_mismatch": mism, "min_overlap": min_overlap, "ok": mism <= tol}
    if run is not None and run.final_state is not None:
        sol, _ = _null_vectors(inst, 1.0)
        v0 = np.zeros(run.U.shape[0], dtype=complex)
        v0[: len(sol)] = sol
        perp = 1j * _as_matrix(seq(T)) @ v0
        out["solution_overlap"] = float(abs(np.vdot(v0, run.final_state)) ** 2)
        out["perp_overlap"] = float(abs(np.vdot(perp, run.final_state)) ** 2)
    return out

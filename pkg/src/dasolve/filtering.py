"""Eigenstate filtering with Dolph-Chebyshev weights on even walk powers.

The transfer function w~(phi) = sum_j w_j e^{2ij phi} / sum_j w_j equals
eps T_ell(beta cos phi); it is 1 at phi in {0, pi} and at most eps in
magnitude once phi is 1/kappa away from both.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .spectral import unitary_eig

IMAG_TOL = 1e-10
NEG_TOL = 1e-12


@dataclass(frozen=True)
class FilterPlan:
    """Weights w_j on powers e^{2ij phi}, j = -ell/2..ell/2 (index 0 holds j = -ell/2)."""

    ell: int
    epsilon: float
    beta: float
    weights: np.ndarray
    raw_scale: float = 1.0

    @property
    def js(self) -> np.ndarray:
        return np.arange(-(self.ell // 2), self.ell // 2 + 1)

    @property
    def normalization(self) -> float:
        return float(np.sum(self.weights))


def chebyshev_order(kappa: float, epsilon: float) -> int:
    """Smallest even ell whose Chebyshev peak width 1/kappa reaches stopband level eps."""
    if not kappa > 1:
        raise ValueError(f"kappa must exceed 1, got {kappa}")
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    raw = np.arccosh(1 / epsilon) / np.arccosh(1 / np.cos(1 / kappa))
    ell = int(np.ceil(raw - 1e-12))
    ell += ell % 2
    return max(ell, 2)


def chebyshev_beta(ell: int, epsilon: float) -> float:
    return float(np.cosh(np.arccosh(1 / epsilon) / ell))


def _cheb_T(ell, x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    inside = np.abs(x) <= 1
    out[inside] = np.cos(ell * np.arccos(x[inside]))
    xo = x[~inside]
    out[~inside] = np.sign(xo) ** ell * np.cosh(ell * np.arccosh(np.abs(xo)))
    return out


def window_weights(ell: int, epsilon: float) -> FilterPlan:
    """Window from the DFT of eps T_ell(beta cos(pi k / ell)) over one full period of phi."""
    if ell <= 0 or ell % 2:
        raise ValueError(f"ell must be a positive even integer, got {ell}")
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    beta = chebyshev_beta(ell, epsilon)
    k = np.arange(2 * ell)
    samples = epsilon * _cheb_T(ell, beta * np.cos(np.pi * k / ell))
    c = np.fft.fft(samples) / (2 * ell)  # coefficient of e^{i n phi} at index n mod 2 ell
    if np.max(np.abs(c.imag)) > IMAG_TOL:
        raise ArithmeticError("window has an imaginary residue: construction bug")
    c = c.real
    half = ell // 2
    w = np.array([c[(2 * j) % (2 * ell)] for j in range(-half, half + 1)])
    # e^{+i ell phi} and e^{-i ell phi} share one DFT bin; split it evenly
    w[0] /= 2
    w[-1] /= 2
    if np.max(np.abs(w - w[::-1])) > IMAG_TOL:
        raise ArithmeticError("window is not symmetric")
    if np.any(w < -NEG_TOL):
        raise ArithmeticError("window has a negative weight")
    w[np.abs(w) < NEG_TOL] = 0.0
    scale = float(np.sum(w))
    return FilterPlan(ell=ell, epsilon=float(epsilon), beta=beta, weights=w / scale, raw_scale=scale)


def make_plan(kappa: float, epsilon: float) -> FilterPlan:
    return window_weights(chebyshev_order(kappa, epsilon), epsilon)


def tilde_w(plan: FilterPlan, phi):
    """Transfer function sum_j w_j e^{2ij phi} / sum_j w_j."""
    phi = np.asarray(phi, dtype=float)
    z = np.exp(2j * np.multiply.outer(phi, plan.js))
    return z @ plan.weights / plan.normalization


def stopband_max(plan: FilterPlan, kappa: float, n: int = 1000) -> float:
    """Max |w~| over an n-point grid of [-pi, pi) outside the 1/kappa peaks at 0 and pi."""
    phi = np.linspace(-np.pi, np.pi, n, endpoint=False)
    d = np.minimum(np.abs(phi), np.pi - np.abs(phi))
    edge = np.array([1 / kappa, np.pi - 1 / kappa, -1 / kappa, 1 / kappa - np.pi])
    phi = np.concatenate([phi[d >= 1 / kappa], edge])
    return float(np.max(np.abs(tilde_w(plan, phi))))


def apply_filter_spectral(state, W_final, plan: FilterPlan):
    """Scale each eigencomponent of `state` by w~(phi_k); returns (state, success probability)."""
    es = unitary_eig(W_final)
    E = es.vectors
    amp = E.conj().T @ np.asarray(state, dtype=complex)
    out = E @ (tilde_w(plan, es.phases) * amp)
    return out, float(np.vdot(out, out).real)


@dataclass
class MeasurementTrace:
    """Per projection: conditional probability of the wanted outcome; failed_at is the
    index of the first sampled failure (None if every projection succeeded or no sampling)."""

    step_probabilities: list = field(default_factory=list)
    failed_at: int | None = None
    partial_states: list | None = None

    @property
    def success_probability(self) -> float:
        return float(np.prod(self.step_probabilities)) if self.step_probabilities else 1.0


def _ry(c, s):
    return np.array([[c, -s], [s, c]])


def apply_filter_lcu(state, W_final, plan: FilterPlan, rng=None, keep_states: bool = False):
    """Simulate the two-live-ancilla unary LCU for sum_k u_k G^k with G = W^2.

    The input first receives W^{-ell} (the inverse walk), so G^k carries the
    power e^{2i(k - ell/2) phi}.  Qubit k of the unary register is prepared
    just before it controls G, the inverse preparation on qubit k is applied
    as soon as qubit k+1 exists, and qubit k is then measured.  With `rng`
    each measurement is sampled and the run stops at the first failure.

    Returns (unnormalised state, success probability, MeasurementTrace); on a
    sampled failure the state is None.
    """
    W = np.asarray(W_final, dtype=complex)
    psi = np.linalg.matrix_power(W.conj().T, plan.ell) @ np.asarray(state, dtype=complex)
    G = W @ W
    u = plan.weights / plan.normalization
    L = len(u) - 1
    S = np.cumsum(u)  # S[k] = sum_{j<=k} u_j
    R = 1.0 - S        # R[k] = sum_{j>k} u_j
    R[R < 0] = 0.0
    d = len(psi)
    trace = MeasurementTrace(partial_states=[] if keep_states else None)

    # live register: amp[a, :] = system vector with the current ancilla in |a>
    amp = np.zeros((2, d), dtype=complex)
    amp[0] = np.sqrt(u[0]) * psi
    amp[1] = np.sqrt(max(R[0], 0.0)) * psi
    amp[1] = G @ amp[1]
    for k in range(L):
        # prepare qubit k+1 controlled on qubit k: sqrt(R_k)|1,0> -> sqrt(u_{k+1})|1,0> + sqrt(R_{k+1})|1,1>
        two = np.zeros((2, 2, d), dtype=complex)  # [a, b]
        two[0, 0] = amp[0]
        if R[k] > 0:
            c, s = np.sqrt(u[k + 1] / R[k]), np.sqrt(R[k + 1] / R[k])
        else:
            c, s = 1.0, 0.0
        two[1, 0] = c * amp[1]
        two[1, 1] = s * amp[1]
        # inverse preparation on qubit k, controlled on qubit k+1 being 0
        if S[k + 1] > 0:
            rot = _ry(np.sqrt(u[k + 1] / S[k + 1]), np.sqrt(S[k] / S[k + 1]))
        else:
            rot = np.array([[0.0, 1.0], [1.0, 0.0]])
        two[:, 0] = np.tensordot(rot, two[:, 0], axes=1)
        # measure qubit k; outcome 1 keeps the wanted combination
        total = float(np.sum(np.abs(two) ** 2))
        keep = float(np.sum(np.abs(two[1]) ** 2))
        p = keep / total if total > 0 else 0.0
        trace.step_probabilities.append(p)
        if rng is not None and rng.random() >= p:
            trace.failed_at = k
            return None, trace.success_probability, trace
        amp = two[1].copy()
        amp[1] = G @ amp[1]
        if keep_states:
            trace.partial_states.append(amp[0].copy())
    # the remainder branch is empty after the last weight; the final outcome is |0>
    total = float(np.sum(np.abs(amp) ** 2))
    p = float(np.sum(np.abs(amp[0]) ** 2)) / total if total > 0 else 0.0
    trace.step_probabilities.append(p)
    if rng is not None and rng.random() >= p:
        trace.failed_at = L
        return None, trace.success_probability, trace
    out = amp[0]
    return out, float(np.vdot(out, out).real), trace


def filter_error_bound(max_stop: float) -> float:
    """Normalised-state error guaranteed when the input has wanted mass >= 1/2.

    The wanted fraction after filtering is at least 1/(1 + m^2), so the overlap
    with the wanted state is at least 1/sqrt(1 + m^2); the result never exceeds m.
    """
    r = np.hypot(1.0, max_stop)
    # sqrt(2 - 2/r) rewritten without cancellation for small m
    return float(max_stop * np.sqrt(2 / (r * (r + 1))))


def write_plan_csv(plan: FilterPlan, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "w_j"])
        for j, wj in zip(plan.js, plan.weights):
            w.writerow([int(j), repr(float(wj))])


def write_response_csv(plan: FilterPlan, path, n: int = 1001) -> None:
    phi = np.linspace(-np.pi, np.pi, n)
    vals = tilde_w(plan, phi).real
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["phi", "retilde_w"])
        for a, b in zip(phi, vals):
            w.writerow([repr(float(a)), repr(float(b))])

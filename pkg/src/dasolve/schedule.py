"""Schedule function f(s) = kappa/(kappa-1) [1 - (1 + s(kappa^{p-1} - 1))^{1/(1-p)}],
gap models on the discrete time grid, and walk-difference coefficients."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

GAP_MODELS = ("linear", "linear-over-sqrt2", "arcsin-adjusted", "exact-from-walk")
C_MODES = ("analytic", "exact")


@dataclass(frozen=True)
class Schedule:
    p: float
    kappa: float
    T: int
    gap_model: str = "linear"
    constant_f: float | None = None  # test hook: freeze f at this value

    def __post_init__(self):
        if not 1.0 < self.p < 2.0:
            raise ValueError(f"p must lie in (1, 2), got {self.p}")
        if not self.kappa > 1.0:
            raise ValueError(f"kappa must exceed 1, got {self.kappa}")
        if int(self.T) != self.T or self.T <= 0 or self.T % 2:
            raise ValueError(f"T must be a positive even integer, got {self.T}")
        if self.gap_model not in GAP_MODELS:
            raise ValueError(f"unknown gap model {self.gap_model!r}")
        object.__setattr__(self, "T", int(self.T))

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.T + 1) / self.T

    def f(self, s):
        return schedule_f(self, s)[0]


def _check_pk(p, kappa):
    if not 1.0 < p < 2.0:
        raise ValueError(f"p must lie in (1, 2), got {p}")
    if not kappa > 1.0:
        raise ValueError(f"kappa must exceed 1, got {kappa}")


def dp_constant(p: float, kappa: float, gap_model: str = "linear") -> float:
    """Normalisation d_p with f' = d_p * gap^p.

    For the linear gap 1 - f + f/kappa this is the integral of gap^{-p};
    the sqrt(2)-reduced gap used for non-PD matrices carries an extra 2^{p/2}.
    """
    _check_pk(p, kappa)
    base = kappa / (kappa - 1) * (kappa ** (p - 1) - 1) / (p - 1)
    if gap_model == "linear-over-sqrt2":
        return 2 ** (p / 2) * base
    return base


def linear_gap(f, kappa):
    return 1 - f + f / kappa


def schedule_f(sch: Schedule, s):
    """Return (f, f', f'') at s (scalar or array)."""
    s = np.asarray(s, dtype=float)
    if np.any(s < -1e-12) or np.any(s > 1 + 1e-12):
        raise ValueError("s must lie in [0, 1]")
    if sch.constant_f is not None:
        z = np.zeros_like(s)
        return z + sch.constant_f, z, z
    p, k = sch.p, sch.kappa
    u = 1 + s * (k ** (p - 1) - 1)
    gap = u ** (1 / (1 - p))
    f = k / (k - 1) * (1 - gap)
    dp = dp_constant(p, k)
    fp = dp * gap ** p
    fpp = -dp ** 2 * p * (1 - 1 / k) * gap ** (2 * p - 1)
    return f, fp, fpp


def gap_ratio_threshold(p: float, kappa: float) -> float:
    """Step count above which gap(s) <= (4/3) gap(s') whenever s' - s <= 4/T."""
    return 16 * 2 ** (p / 2) * (kappa ** (p - 1) - 1) / (p - 1)


def _single_step_gap(sch: Schedule, f):
    base = linear_gap(f, sch.kappa)
    if sch.gap_model == "linear":
        return base
    if sch.gap_model == "linear-over-sqrt2":
        return base / np.sqrt(2)
    if sch.gap_model == "arcsin-adjusted":
        return np.arcsin(np.clip(base, 0.0, 1.0))
    raise ValueError("exact-from-walk gaps must be supplied from a measured walk")


def gap(sch: Schedule, s: float, k: int, measured=None) -> float:
    """Multistep gap Delta_k(s) under the schedule's gap model."""
    if k not in (0, 1, 2):
        raise ValueError(f"k must be 0, 1 or 2, got {k}")
    if s + k / sch.T > 1 + 1e-12:
        raise ValueError("s + k/T exceeds 1")
    n = int(round(s * sch.T))
    if sch.gap_model == "exact-from-walk":
        if measured is None:
            raise ValueError("exact-from-walk gap model needs measured phase data")
        return float(gap_profile(sch, measured).delta_k(k)[n])
    return float(_single_step_gap(sch, sch.f(min(s + k / sch.T, 1.0))))


@dataclass(frozen=True)
class GapProfile:
    """Gap arrays on n = 0..T.  Entries beyond the last defined index are NaN."""

    delta0: np.ndarray
    delta1: np.ndarray
    delta2: np.ndarray
    delta: np.ndarray
    delta_check: np.ndarray

    def delta_k(self, k: int) -> np.ndarray:
        return (self.delta0, self.delta1, self.delta2)[k]


def _window_min(x, n_keep, width):
    """out[i] = min(x[i:i+width]) for i < n_keep, NaN after."""
    out = np.full(len(x), np.nan)
    if n_keep > 0:
        out[:n_keep] = sliding_window_view(x, width)[:n_keep].min(axis=1)
    return out


def gap_profile(sch: Schedule, measured=None) -> GapProfile:
    """Gaps Delta_0..2, boundary-adjusted Delta and the neighbour minimum Delta-check.

    For the exact-from-walk model, `measured` is a pair (p_spread, q_dist) of
    length-(T+1) arrays: the largest distance of a wanted eigenphase from
    {0, pi} and the smallest distance of an unwanted one, per step.
    """
    T = sch.T
    if sch.gap_model == "exact-from-walk":
        if measured is None:
            raise ValueError("exact-from-walk gap model needs measured phase data")
        p_spread, q_dist = measured
        if len(p_spread) != T + 1 or len(q_dist) != T + 1:
            raise ValueError("measured arrays must have length T+1")
        return measured_gap_profile(p_spread, q_dist)
    g = _single_step_gap(sch, sch.f(sch.grid))
    # analytic gaps shrink with s, so the k-step gap is the value at s + k/T
    d = []
    for k in range(3):
        arr = np.full(T + 1, np.nan)
        arr[: T + 1 - k] = g[k:]
        d.append(arr)
    return _assemble_profile(*d)


def measured_gap_profile(p_spread, q_dist) -> GapProfile:
    """Arc gaps from per-step eigenphase distances to {0, pi}.

    The k-step gap is the smallest unwanted distance over steps n..n+k minus
    the largest wanted distance over the same steps.
    """
    p_spread = np.asarray(p_spread, dtype=float)
    q_dist = np.asarray(q_dist, dtype=float)
    T = len(p_spread) - 1
    d = []
    for k in range(3):
        lo_q = _window_min(q_dist, T + 1 - k, k + 1)
        hi_p = -_window_min(-p_spread, T + 1 - k, k + 1)
        d.append(lo_q - hi_p)
    return _assemble_profile(*d)


def _assemble_profile(d0, d1, d2) -> GapProfile:
    T = len(d0) - 1
    delta = d2.copy()
    delta[T - 1] = d1[T - 1]
    delta[T] = d0[T]
    padded = np.concatenate([[np.inf], delta, [np.inf]])
    check = sliding_window_view(padded, 3).min(axis=1)
    return GapProfile(delta0=d0, delta1=d1, delta2=d2, delta=delta, delta_check=check)


def rotation_entries(f):
    """Entries (a, b) of the select rotation R = [[a, b], [b, -a]]."""
    f = np.asarray(f, dtype=float)
    nrm = np.sqrt((1 - f) ** 2 + f ** 2)
    return (1 - f) / nrm, f / nrm


@dataclass(frozen=True)
class Coefficients:
    """c1 on n = 0..T-1, c2 on n = 0..T-1, and neighbour maxima on n = 0..T."""

    c1: np.ndarray
    c2: np.ndarray
    c1hat: np.ndarray
    c2hat: np.ndarray
    mode: str


def hat_max(c, k: int, T: int) -> np.ndarray:
    """Max of c over {n-1, n, n+1} clipped to [0, T-k]; NaN when that set is empty."""
    c = np.asarray(c, dtype=float)[: T - k + 1]
    padded = np.concatenate([[-np.inf], c, np.full(T + 2 - len(c), -np.inf)])
    out = sliding_window_view(padded, 3)[: T + 1].max(axis=1)
    out[np.isneginf(out)] = np.nan
    return out


def coefficients_from_arrays(c1, c2, T: int, mode: str) -> Coefficients:
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    return Coefficients(c1=c1, c2=c2, c1hat=hat_max(c1, 1, T), c2hat=hat_max(c2, 2, T), mode=mode)


def diff_coeffs(sch: Schedule, mode: str = "analytic") -> Coefficients:
    """Bounds c_k with ||D^k W(n/T)|| <= c_k(n/T) / T^k for the rotation-selected walk."""
    if mode not in C_MODES:
        raise ValueError(f"unknown c mode {mode!r}")
    T = sch.T
    s = sch.grid
    f, fp, fpp = schedule_f(sch, s)
    if mode == "analytic":
        c1 = 2 * T * np.diff(f)
        h = 2 * fp ** 2 + np.abs(fpp)
        c2 = 2 * sliding_window_view(np.append(h, -np.inf), 3)[:T].max(axis=1)
    else:
        a, b = rotation_entries(f)
        # R differences are real symmetric traceless, so the norm is the hypotenuse
        c1 = T * np.hypot(np.diff(a), np.diff(b))
        c2 = np.full(T, np.nan)
        c2[: T - 1] = T ** 2 * np.hypot(np.diff(a, 2), np.diff(b, 2))
    return coefficients_from_arrays(c1, c2, T, mode)


PROFILE_COLUMNS = ["n", "s", "f", "fprime", "c1", "c2", "c1hat", "c2hat",
                   "delta0", "delta1", "delta2", "delta_check"]


def profile_rows(sch: Schedule, mode: str = "analytic", measured=None):
    f, fp, _ = schedule_f(sch, sch.grid)
    co = diff_coeffs(sch, mode)
    gp = gap_profile(sch, measured)
    T = sch.T
    pad = lambda a: np.concatenate([a, np.full(T + 1 - len(a), np.nan)])
    c1, c2 = pad(co.c1), pad(co.c2)
    for n in range(T + 1):
        yield [n, n / T, f[n], fp[n], c1[n], c2[n], co.c1hat[n], co.c2hat[n],
               gp.delta0[n], gp.delta1[n], gp.delta2[n], gp.delta_check[n]]


def write_profile_csv(sch: Schedule, path, mode: str = "analytic", measured=None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PROFILE_COLUMNS)
        for row in profile_rows(sch, mode, measured):
            w.writerow([row[0]] + [repr(float(x)) for x in row[1:]])

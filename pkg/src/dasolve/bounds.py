"""Rigorous error bounds for discrete adiabatic evolution, their helper
functions, the asymptotic QLSP constants, and measured-vs-bound operator checks."""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .schedule import (
    GapProfile,
    Schedule,
    coefficients_from_arrays,
    diff_coeffs,
    gap_profile,
    measured_gap_profile,
)
from .spectral import spectral_norm

XI1 = 2 / np.sqrt(3)
XI2 = 2 * np.sqrt(3) - 2
XI3 = 8 / (3 * np.sqrt(3))

PD_CONSTANT = 5632
GENERAL_CONSTANT = 15307


def _check_z(z):
    z = np.asarray(z, dtype=float)
    if np.any(z >= 1) or np.any(z < 0):
        raise ValueError("argument must lie in [0, 1)")
    return z


def D1(z):
    z = _check_z(z)
    return 1 / np.sqrt(1 - z * z)


def D2(z):
    z = _check_z(z)
    return np.sqrt((1 + z) / (1 - z)) - 1


def D3(z):
    z = _check_z(z)
    return z / (1 - z * z) ** 1.5


def _one_minus_cos_half(x):
    return 1 - np.cos(np.asarray(x) / 2)


def G1(c1, c2, delta2, n):
    """Second-difference projector coefficient at step n (needs c1 at n and n+1)."""
    c1, c2, delta2 = map(np.asarray, (c1, c2, delta2))
    return ((c1[n] ** 2 + c1[n] * c1[n + 1]) / (np.pi * _one_minus_cos_half(delta2[n]))
            + 2 * c2[n] / delta2[n])


def G_functions(c1, c2, gaps: GapProfile, T: int):
    """G1..G4 on n = 0..T-2."""
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    n = np.arange(T - 1)
    z = 2 * c1 / (T * gaps.delta1[:T])
    g1 = G1(c1, c2, gaps.delta2, n)
    g2 = g1 * D3(np.maximum(z[n + 1], z[n]))
    g3 = g2 * (1 + z[n]) + D1(z[n]) * (g1 + 8 * c1[n] ** 2 / gaps.delta1[n] ** 2)
    g4 = g3 / T + c1[n]
    return g1, g2, g3, g4


@dataclass
class BoundReport:
    total: float
    terms: dict
    precondition_ok: bool
    inputs: dict = field(default_factory=dict)

    def scaled(self, kappa: float) -> float:
        return self.total * self.inputs["T"] / kappa


def _steps(T, s):
    S = int(round(s * T))
    if abs(S - s * T) > 1e-9 or not 1 <= S <= T:
        raise ValueError(f"s*T must be an integer in 1..T, got {s * T}")
    return S


def theorem1_bound(gaps: GapProfile, c1, c2, T: int, s: float = 1.0, inputs=None) -> BoundReport:
    """Full nine-term bound on ||U(s) - U^A(s)|| from per-step c1, c2 and gaps.

    Precondition T >= max 2 c1 / Delta_1; otherwise total is +inf.
    """
    S = _steps(T, s)
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    inputs = dict(inputs or {}, T=T, s=s)
    if not np.any(c1):
        names = ["boundary_start", "boundary_end", "boundary_x", "cross", "g3_sum", "dx_sum",
                 "g4_sum", "diag_sum", "diag_tail"]
        return BoundReport(0.0, {k: 0.0 for k in names}, True, inputs)
    D0, Dl1 = gaps.delta0, gaps.delta1
    z = 2 * c1[:T] / (T * Dl1[:T])
    ok = bool(np.all(np.isfinite(z)) and np.all(z >= 0) and np.all(z < 1))
    if not ok:
        return BoundReport(float("inf"), {}, False, inputs)
    d2 = D2(z)
    _, _, g3, g4 = G_functions(c1, c2, gaps, T) if T >= 2 else (None, None, None, None)
    m = np.arange(1, S)
    t = {
        "boundary_start": 4 / D0[1] * d2[0],
        "boundary_end": 4 / D0[S] * d2[S - 1],
        "boundary_x": 2 * d2[S - 1],
        "cross": np.sum(4 * (1 / D0[m + 1] + 2 / D0[m]) * d2[m] * d2[m - 1]),
        "g3_sum": np.sum(4 * g3[m - 1] / (T ** 2 * Dl1[m])),
        "dx_sum": np.sum(4 * c1[m] / (np.pi * T * _one_minus_cos_half(Dl1[m])) * d2[m - 1]),
        "g4_sum": np.sum(4 * g4[m - 1] / (T * D0[m]) * d2[m - 1]),
    }
    k = np.arange(S)
    r = c1[k] ** 2 / (T ** 2 * Dl1[k] ** 2)
    t["diag_sum"] = np.sum(24 * r)
    t["diag_tail"] = np.sum(4 * r / (1 - z[k]))
    t = {key: float(v) for key, v in t.items()}
    return BoundReport(float(sum(t.values())), t, True, inputs)


def theorem2_bound(gaps: GapProfile, c1hat, c2hat, T: int, s: float = 1.0, inputs=None) -> BoundReport:
    """Simplified six-term bound using neighbour-maximised c and neighbour-minimised gaps.

    Precondition T >= max 4 c1hat / Delta-check; otherwise total is +inf.
    """
    S = _steps(T, s)
    c1h = np.asarray(c1hat, dtype=float)
    c2h = np.asarray(c2hat, dtype=float)
    dc = gaps.delta_check
    inputs = dict(inputs or {}, T=T, s=s)
    lhs = 4 * c1h[: T + 1] / dc[: T + 1]
    ok = bool(np.nanmax(lhs) <= T)
    if not ok:
        return BoundReport(float("inf"), {}, False, inputs)
    m = np.arange(1, S)
    k = np.arange(S)
    t = {
        "start": 12 * c1h[0] / (T * dc[0] ** 2),
        "end": 12 * c1h[S] / (T * dc[S] ** 2),
        "end_linear": 6 * c1h[S] / (T * dc[S]),
        "cubic_sum": 305 * np.sum(c1h[m] ** 2 / (T ** 2 * dc[m] ** 3)),
        "square_sum": 44 * np.sum(c1h[k] ** 2 / (T ** 2 * dc[k] ** 2)),
        "second_diff_sum": 32 * np.sum(c2h[m] / (T ** 2 * dc[m] ** 2)),
    }
    t = {key: float(v) for key, v in t.items()}
    return BoundReport(float(sum(t.values())), t, True, inputs)


def schedule_bounds(sch: Schedule, c_mode: str = "exact", s: float = 1.0):
    """Full and simplified bounds from the schedule's analytic gaps and c coefficients."""
    gaps = gap_profile(sch)
    co = diff_coeffs(sch, c_mode)
    inputs = {"kappa": sch.kappa, "p": sch.p, "gap_model": sch.gap_model, "c_mode": c_mode}
    return (theorem1_bound(gaps, co.c1, co.c2, sch.T, s, inputs),
            theorem2_bound(gaps, co.c1hat, co.c2hat, sch.T, s, inputs))


def measured_bounds(c1, c2, p_spread, q_dist, T: int, s: float = 1.0):
    """Full and simplified bounds fed with walk-measured c coefficients and eigenphase gaps."""
    gaps = measured_gap_profile(p_spread, q_dist)
    co = coefficients_from_arrays(c1, c2, T, "measured")
    inputs = {"gap_model": "exact-from-walk", "c_mode": "measured"}
    return (theorem1_bound(gaps, co.c1, co.c2, T, s, inputs),
            theorem2_bound(gaps, co.c1hat, co.c2hat, T, s, inputs))


def cp_components(p: float) -> tuple:
    if not 1 < p < 2:
        raise ValueError(f"p must lie in (1, 2), got {p}")
    c1 = (12 * 2 ** (6 + 5 * p / 2) / (3 ** (p + 2) * (p - 1))
          + 305 * 2 ** (16 + 9 * p / 2) / (3 ** (2 * p + 6) * (2 - p) * (p - 1))
          + 32 * 2 ** (9 + 9 * p / 2) * p / (3 ** (2 * p + 4) * (2 - p) * (p - 1)))
    c2 = (12 * 2 ** (6 + 5 * p / 2) / (3 ** (p + 2) * (p - 1))
          + 44 * 2 ** (13 + 9 * p / 2) / (3 ** (2 * p + 5) * (p - 1) ** 2)
          + 32 * 2 ** (13 + 9 * p / 2) / (3 ** (2 * p + 5) * (p - 1) ** 2))
    c3 = (305 * 2 ** (5 * p + 10) / (3 ** (2 * p + 6) * (p - 1) ** 2)
          + 32 * 2 ** (5 * p + 4) * p / (3 ** (2 * p + 4) * (p - 1) ** 2))
    c4 = 6 * 2 ** (4 + 5 * p / 2) / (3 ** (p + 1) * (p - 1))
    return c1, c2, c3, c4


def asymptotic_constants(kappa: float, T: int, p: float = 1.5, variant: str = "general") -> dict:
    """Leading-order error bounds: the fixed p = 3/2 constants and the general-p C_p form."""
    comps = cp_components(p)
    cp = max(comps)
    out = {
        "C_p": cp,
        "components": comps,
        "general_p_bound": cp * (kappa / T + kappa ** (p - 1) / T + kappa / T ** 2 + 1 / T),
    }
    if p == 1.5:
        const = PD_CONSTANT if variant == "hermitian-pd" else GENERAL_CONSTANT
        out["constant"] = const
        out["p15_bound"] = const * kappa / T
    return out


SWEEP_COLUMNS = ["kappa", "p", "T", "gap_model", "c_mode", "bound_thm15", "bound_thm3",
                 "bound_thm16", "precondition_ok"]


def bound_sweep_rows(kappas, ps, Ts, gap_model="arcsin-adjusted", c_mode="exact", variant="general"):
    for kappa in kappas:
        for p in ps:
            for T in Ts:
                sch = Schedule(p=p, kappa=kappa, T=T, gap_model=gap_model)
                b1, b2 = schedule_bounds(sch, c_mode)
                b16 = asymptotic_constants(kappa, T, p, variant).get("p15_bound", float("nan"))
                yield [kappa, p, T, gap_model, c_mode, b1.total, b2.total, b16,
                       b1.precondition_ok and b2.precondition_ok]


def write_bound_sweep(path, kappas, ps, Ts, **kw) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for row in bound_sweep_rows(kappas, ps, Ts, **kw):
            w.writerow(row)



LEMMAS = ("dP", "d2P", "V_minus_I", "dV", "dWA", "dOmega", "Xt", "dXt",
          "A", "B", "Z")


@dataclass
class LemmaSuiteResult:
    rows: dict  # check -> (checked, passed, worst measured/bound ratio)
    error: float
    c1: np.ndarray
    c2: np.ndarray
    p_spread: np.ndarray
    q_dist: np.ndarray
    tol: float

    @property
    def passed(self) -> bool:
        return all(chk == ok for chk, ok, _ in self.rows.values())

    @property
    def pass_rate(self) -> float:
        chk = sum(r[0] for r in self.rows.values())
        return sum(r[1] for r in self.rows.values()) / chk if chk else 1.0


def lemma_bound_suite(source, tol: float = 1e-9) -> LemmaSuiteResult:
    """Stream a run and compare each operator norm with its analytic bound.

    `source` is a WalkSequence (streamed with a three-step window) or an
    AdiabaticRun that kept its history.  Bounds use the walk-measured c1, c2
    and eigenphase gaps of the same run.
    """
    from .adiabatic import iterate_run, x_tilde

    records = source.history if getattr(source, "history", None) is not None else iterate_run(source)
    dag = lambda M: M.conj().T
    nrm = spectral_norm
    meas = {k: {} for k in ["DP", "D2P", "F", "FmI", "VmI", "DV", "DWA", "DOmega", "X", "Xt",
                            "DX", "DXt", "A", "B", "Z"]}
    win = deque(maxlen=3)
    ps, qs, Ws = [], [], []
    c1l, c2l = [], []
    T = None
    last = None
    for rec in records:
        n = rec.n
        if T is None:
            T = getattr(source, "T", None) or getattr(source, "sch").T
        I = np.eye(rec.W.shape[0])
        ps.append(rec.split.p_spread)
        qs.append(rec.split.q_dist)
        Ws = (Ws + [rec.W])[-3:]
        if n >= 1:
            c1l.append(T * nrm(Ws[-1] - Ws[-2]))
        if n >= 2:
            c2l.append(T ** 2 * nrm(Ws[-1] - 2 * Ws[-2] + Ws[-3]))
        cur = {"rec": rec, "Omega": dag(rec.UA) @ rec.U}
        if rec.ideal is not None:
            F = rec.ideal.F
            meas["DP"][n] = nrm(rec.ideal.DP)
            meas["F"][n] = nrm(F)
            meas["FmI"][n] = nrm(F - I)
            meas["VmI"][n] = nrm(rec.ideal.V - I)
            cur["A"] = (dag(rec.ideal.V) - I) @ rec.ideal.WA
            meas["A"][n] = nrm(cur["A"])
        if n >= 1:
            prev = win[-1]
            cur["X"] = T * (I - dag(prev["rec"].ideal.V))
            cur["Xt"] = x_tilde(rec.split, cur["X"])
            meas["X"][n] = nrm(cur["X"])
            meas["Xt"][n] = nrm(cur["Xt"])
            pr = prev["rec"]
            meas["DOmega"][n - 1] = nrm(cur["Omega"] - prev["Omega"])
            if rec.ideal is not None:
                meas["D2P"][n - 1] = nrm(rec.ideal.DP - pr.ideal.DP)
                meas["DV"][n - 1] = nrm(rec.ideal.V - pr.ideal.V)
                meas["DWA"][n - 1] = nrm(rec.ideal.WA - pr.ideal.WA)
            if n >= 2:
                meas["DX"][n - 1] = nrm(cur["X"] - prev["X"])
                meas["DXt"][n - 1] = nrm(cur["Xt"] - prev["Xt"])
                pp = win[-2]["rec"]
                m = n - 1
                B = (cur["Xt"] - prev["Xt"]) @ pr.ideal.WA + (pr.ideal.WA - pp.ideal.WA) @ prev["Xt"]
                meas["B"][m] = nrm(B)
                Z = T * (prev["A"] @ prev["Xt"] - prev["Xt"] @ prev["A"] + B)
                meas["Z"][m] = nrm(Z)
        win.append(cur)
        last = rec
    error = nrm(last.U - last.UA)
    c1 = np.array(c1l)
    c2 = np.append(np.array(c2l), np.nan)
    p_spread, q_dist = np.array(ps), np.array(qs)
    gaps = measured_gap_profile(p_spread, q_dist)
    rows = _evaluate_lemmas(meas, c1, c2, gaps, T, tol)
    return LemmaSuiteResult(rows=rows, error=error, c1=c1, c2=c2, p_spread=p_spread,
                            q_dist=q_dist, tol=tol)


def _evaluate_lemmas(meas, c1, c2, gaps, T, tol):
    D0, Dl1, Dl2 = gaps.delta0, gaps.delta1, gaps.delta2
    g = lambda key, n: meas[key][n]
    omc = _one_minus_cos_half
    checks = {k: [] for k in LEMMAS}
    for n in range(T):
        vbound = g("FmI", n) + g("DP", n) * g("F", n)
        checks["dP"].append((g("DP", n), 2 * c1[n] / (T * Dl1[n])))
        checks["V_minus_I"].append((g("VmI", n), vbound))
        checks["dOmega"].append((g("DOmega", n), vbound))
        checks["A"].append((g("A", n), vbound))
        if n <= T - 2:
            checks["d2P"].append((g("D2P", n), G1(c1, c2, Dl2, n) / T ** 2))
            dpn, dpn1 = g("DP", n), g("DP", n + 1)
            dv = ((1 + dpn1) * g("D2P", n) * D3(max(dpn1, dpn))
                  + g("F", n) * (g("D2P", n) + 2 * dpn ** 2))
            checks["dV"].append((g("DV", n), dv))
            checks["dWA"].append((g("DWA", n), c1[n] / T + g("DV", n)))
    for n in range(1, T + 1):
        checks["Xt"].append((g("Xt", n), 2 * g("X", n) / D0[n]))
    for n in range(1, T):
        X = g("X", n)
        dxt = 2 / Dl1[n] * g("DX", n) + 2 * c1[n] / (np.pi * T * omc(Dl1[n])) * X
        checks["dXt"].append((g("DXt", n), dxt))
        tail = 2 / D0[n] * (c1[n - 1] / T + g("DV", n - 1)) * X
        checks["B"].append((g("B", n), dxt + tail))
        vb = g("FmI", n) + g("DP", n) * g("F", n)
        zb = (4 * T / D0[n] * vb * X + 2 * T / Dl1[n] * g("DX", n)
              + 2 * c1[n] / (np.pi * omc(Dl1[n])) * X
              + 2 / D0[n] * (c1[n - 1] + T * g("DV", n - 1)) * X)
        checks["Z"].append((g("Z", n), zb))
    rows = {}
    for k, pairs in checks.items():
        m = np.array([a for a, _ in pairs], dtype=float)
        b = np.array([b for _, b in pairs], dtype=float)
        ok = m <= b + tol
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(b > 0, m / b, np.where(m > tol, np.inf, 0.0))
        rows[k] = (len(pairs), int(ok.sum()), float(np.max(ratio)) if len(ratio) else 0.0)
    return rows

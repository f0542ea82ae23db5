"""Dense linear-algebra kernel: unitary eigendecomposition, norms, PSD inverse
square roots and spectral projectors restricted to arcs of the unit circle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class EigenSystem:
    """Eigenphases in (-pi, pi] (ascending) with orthonormal eigenvectors as columns."""

    phases: np.ndarray
    vectors: np.ndarray

    @property
    def dimension(self) -> int:
        return len(self.phases)

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * np.exp(1j * self.phases)) @ self.vectors.conj().T


@dataclass(frozen=True)
class Arc:
    """Closed arc of the unit circle, centred at `center` with half-width `half_width`."""

    center: float
    half_width: float

    def __post_init__(self):
        if not 0.0 < self.half_width < np.pi:
            raise ValueError(f"arc half-width must lie in (0, pi), got {self.half_width}")

    def offset(self, phases) -> np.ndarray:
        """Unsigned angular distance of each phase from the arc centre."""
        d = np.mod(np.asarray(phases) - self.center + np.pi, 2 * np.pi) - np.pi
        return np.abs(d)


def wrap_phase(phi):
    """Map angles into (-pi, pi]."""
    out = np.mod(np.asarray(phi, dtype=float) + np.pi, 2 * np.pi) - np.pi
    return np.where(out == -np.pi, np.pi, out)


def unitary_eig(U: np.ndarray, tol: float = 1e-10) -> EigenSystem:
    """Eigendecomposition of a unitary matrix.

    A complex Schur form is used because it returns an orthonormal basis even
    inside degenerate eigenspaces, which plain `eig` does not guarantee.
    """
    U = np.asarray(U, dtype=complex)
    n = U.shape[0]
    resid = np.linalg.norm(U.conj().T @ U - np.eye(n), 2)
    if resid > tol:
        raise ValueError(f"matrix is not unitary: residual {resid:.3e} exceeds {tol:.1e}")
    Tm, Z = scipy.linalg.schur(U, output="complex")
    lam = np.diag(Tm)
    phases = wrap_phase(np.angle(lam))
    order = np.argsort(phases, kind="stable")
    return EigenSystem(phases=phases[order], vectors=Z[:, order])


def spectral_norm(M: np.ndarray) -> float:
    """Largest singular value."""
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def inv_sqrt_psd(M: np.ndarray, floor: float = 1e-300) -> np.ndarray:
    """M^{-1/2} for a Hermitian positive semidefinite M, eigenvalues clamped at `floor`."""
    M = np.asarray(M, dtype=complex)
    herm = np.linalg.norm(M - M.conj().T, 2)
    if herm > 1e-10:
        raise ValueError(f"matrix is not Hermitian (asymmetry {herm:.3e})")
    w, V = np.linalg.eigh((M + M.conj().T) / 2)
    if w.min() < -1e-12:
        raise ValueError(f"matrix is not positive semidefinite (eigenvalue {w.min():.3e})")
    w = np.maximum(w, floor)
    return (V / np.sqrt(w)) @ V.conj().T


def sqrt_psd(M: np.ndarray) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix (small negative eigenvalues clipped)."""
    M = np.asarray(M, dtype=complex)
    w, V = np.linalg.eigh((M + M.conj().T) / 2)
    return (V * np.sqrt(np.maximum(w, 0.0))) @ V.conj().T


def arc_mask(es: EigenSystem, arcs) -> np.ndarray:
    """Boolean mask of eigenphases lying inside any of the given arcs."""
    if isinstance(arcs, Arc):
        arcs = [arcs]
    mask = np.zeros(es.dimension, dtype=bool)
    for arc in arcs:
        off = arc.offset(es.phases)
        near = np.abs(off - arc.half_width) < BOUNDARY_TOL
        if near.any():
            bad = es.phases[near][0]
            raise ValueError(
                f"eigenphase {bad:.12f} lies within {BOUNDARY_TOL:g} of an arc boundary"
            )
        mask |= off < arc.half_width
    return mask


def arc_projector(es: EigenSystem, arc) -> np.ndarray:
    """Orthogonal projector onto the eigenvectors whose phases fall inside `arc`.

    `arc` may be a single Arc or an iterable of Arcs (their union).
    """
    mask = arc_mask(es, arc)
    V = es.vectors[:, mask]
    return V @ V.conj().T


def svd_dilation(A: np.ndarray) -> np.ndarray:
    """Unitary [[A, sqrt(I - A A^+)], [sqrt(I - A^+ A), -A^+]] for a contraction A."""
    A = np.asarray(A, dtype=complex)
    U, sv, Vh = np.linalg.svd(A)
    if sv.max() > 1 + 1e-10:
        raise ValueError(f"dilation needs ||A|| <= 1, got {sv.max():.12f}")
    c = np.sqrt(np.clip(1 - sv ** 2, 0.0, None))
    left = (U * c) @ U.conj().T
    right = (Vh.conj().T * c) @ Vh
    return np.block([[A, left], [right, -A.conj().T]])

"""The operator triple on GNS coordinates: power shift A, frequency shift B,
frequency-reflection conjugation J.

All three are defined by where they send the embedded index vectors:
A x(m,n) = x(m+1,n), B x(m,n) = x(m,n+1), J maps sum a(m,n) x(m,n) to
sum conj(a(m,n)) x(m,-n).  On coordinates they are built by least squares
(Y X^+), which implements the quotient passage of a GNS construction; the
fit residual is the numerical form of the well-definedness argument, and is
essentially zero for any PSD table.

A is partial: its domain is the span of the columns with m <= M-1.  B must
be total (unitary); if the in-window shift pairs do not span the whole
space the table underdetermines B and we refuse rather than guess.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import (
    lstsq_operator,
    orthonormal_columns,
    polar_unitary,
    projector,
    spectral_norm,
)
from .errors import (
    DomainError,
    IllDefinedError,
    IsometryViolationError,
    NotSaturatedError,
    ValidationFailedError,
)
from .gns import GnsSpace
from .moments import MomentIndex

FIT_TOL = 1e-8
PRE_POLAR_TOL = 1e-6
IDENTITY_TOL = 1e-9
UNITARITY_TOL = 1e-10


@dataclass(frozen=True)
class PartialOperator:
    """Matrix acting on span(domain columns); values off the domain are masked.

    domain_columns holds raw embedding vectors (not orthonormalized);
    domain_projector is the Hermitian idempotent onto their span.
    """

    matrix: np.ndarray
    domain_indices: tuple[MomentIndex, ...]
    domain_columns: np.ndarray
    domain_projector: np.ndarray
    domain_dim: int
    fit_residual: float

    def in_domain(self, v: np.ndarray, tol: float = 1e-8) -> bool:
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return True
        return np.linalg.norm(v - self.domain_projector @ v) <= tol * nv


@dataclass(frozen=True)
class AntilinearOperator:
    """Antilinear map v -> matrix @ conj(v)."""

    matrix: np.ndarray

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ np.conj(v)

    @property
    def involution_defect(self) -> float:
        return spectral_norm(self.matrix @ np.conj(self.matrix)
                             - np.eye(self.matrix.shape[0]))

    @property
    def unitarity_defect(self) -> float:
        return spectral_norm(self.matrix.conj().T @ self.matrix
                             - np.eye(self.matrix.shape[0]))


@dataclass(frozen=True)
class OperatorSystem:
    """Validated triple (A, B, J) with the cyclic vector x(0,0).

    residuals maps each enforced identity to its value; diagnostics carries
    non-gating observations (currently the B-invariance of D(A), which the
    truncated window cannot guarantee).
    """

    gns: GnsSpace
    a: PartialOperator
    b: np.ndarray
    j: AntilinearOperator
    x00: np.ndarray
    residuals: dict
    diagnostics: dict


def _shift_pairs_a(gns: GnsSpace):
    win = gns.window
    src = [MomentIndex(m, n) for m, n in win.indices if m <= win.max_power - 1]
    dst = [MomentIndex(m + 1, n) for m, n in src]
    return src, dst


def _shift_pairs_b(gns: GnsSpace):
    win = gns.window
    src = [MomentIndex(m, n) for m, n in win.indices if n <= win.max_freq - 1]
    dst = [MomentIndex(m, n + 1) for m, n in src]
    return src, dst


def build_shift_A(gns: GnsSpace) -> PartialOperator:
    """Power shift as a matrix with an explicit domain projector."""
    if gns.window.max_power < 1:
        raise DomainError("power shift needs a window with max_power >= 1")
    src, dst = _shift_pairs_a(gns)
    x = gns.columns(src)
    y = gns.columns(dst)
    action, residual = lstsq_operator(x, y, gns.factorization_tol)
    if residual > FIT_TOL:
        raise IllDefinedError("power shift", residual, FIT_TOL)
    basis, dim = orthonormal_columns(x, gns.factorization_tol)
    return PartialOperator(
        matrix=action,
        domain_indices=tuple(src),
        domain_columns=x,
        domain_projector=projector(basis),
        domain_dim=dim,
        fit_residual=residual,
    )


def build_shift_B(gns: GnsSpace) -> np.ndarray:
    """Frequency shift, snapped to the nearest unitary by polar decomposition.

    Precondition (saturation): the source columns of the in-window shift
    pairs span the whole embedding space; otherwise the data admits many
    unitary completions and NotSaturatedError is raised.
    """
    if gns.window.max_freq < 1:
        raise DomainError("frequency shift needs a window with max_freq >= 1")
    src, dst = _shift_pairs_b(gns)
    x = gns.columns(src)
    y = gns.columns(dst)
    _, src_rank = orthonormal_columns(x, gns.factorization_tol)
    if src_rank < gns.rank:
        raise NotSaturatedError(src_rank, gns.rank)
    b_raw, residual = lstsq_operator(x, y, gns.factorization_tol)
    if residual > FIT_TOL:
        raise IllDefinedError("frequency shift", residual, FIT_TOL)
    defect = spectral_norm(b_raw.conj().T @ b_raw - np.eye(gns.rank))
    if defect > PRE_POLAR_TOL:
        raise IsometryViolationError(defect, PRE_POLAR_TOL)
    return polar_unitary(b_raw)


def build_conjugation_J(gns: GnsSpace) -> AntilinearOperator:
    """Frequency-reflection conjugation: solves M conj(x(m,n)) = x(m,-n)."""
    win = gns.window
    src = list(win.indices)
    dst = [MomentIndex(m, -n) for m, n in src]
    x = np.conj(gns.columns(src))
    y = gns.columns(dst)
    mat, residual = lstsq_operator(x, y, gns.factorization_tol)
    if residual > FIT_TOL:
        raise IllDefinedError("conjugation", residual, FIT_TOL)
    return AntilinearOperator(matrix=mat)


def _safe_commutation_indices(gns: GnsSpace):
    """Indices where A B x and B A x are both data-defined shifts."""
    win = gns.window
    return [MomentIndex(m, n) for m, n in win.indices
            if m <= win.max_power - 1 and n <= win.max_freq - 1]


def validate_system(a: PartialOperator, b: np.ndarray, j: AntilinearOperator,
                    gns: GnsSpace) -> OperatorSystem:
    """Check the defining identities and package the system.

    Enforced (ValidationFailedError): AB = BA on the doubly-shiftable
    columns, AJ = JA on the domain columns, JB = B^{-1}J, compression
    symmetry of A, unitarity of B, involution and antiunitarity of J.
    Recorded only: ||(I-P_D) B P_D|| -- the truncated window does not
    guarantee that B preserves D(A), and the extension machinery re-checks
    invariance where it actually needs it.
    """
    r = gns.rank
    eye = np.eye(r)
    p = a.domain_projector
    a_mat, j_mat = a.matrix, j.matrix

    safe = _safe_commutation_indices(gns)
    if safe:
        cols = gns.columns(safe)
        ab = a_mat @ (b @ cols) - b @ (a_mat @ cols)
        ab_res = np.linalg.norm(ab) / (1.0 + np.linalg.norm(cols))
    else:
        ab_res = 0.0

    dom = gns.columns(a.domain_indices) if a.domain_indices else np.zeros((r, 0))
    if dom.shape[1]:
        aj = a_mat @ (j_mat @ np.conj(dom)) - j_mat @ np.conj(a_mat @ dom)
        aj_res = np.linalg.norm(aj) / (1.0 + np.linalg.norm(dom))
    else:
        aj_res = 0.0

    residuals = {
        "ab_commutation": float(ab_res),
        "aj_commutation": float(aj_res),
        "jb_twist": spectral_norm(j_mat @ np.conj(b) - b.conj().T @ j_mat),
        "a_symmetry": spectral_norm(p @ (a_mat - a_mat.conj().T) @ p),
        "b_unitarity": spectral_norm(b.conj().T @ b - eye),
        "j_involution": j.involution_defect,
        "j_unitarity": j.unitarity_defect,
        "a_fit": a.fit_residual,
    }
    thresholds = {
        "ab_commutation": IDENTITY_TOL,
        "aj_commutation": IDENTITY_TOL,
        "jb_twist": IDENTITY_TOL,
        "a_symmetry": IDENTITY_TOL,
        "b_unitarity": UNITARITY_TOL,
        "j_involution": IDENTITY_TOL,
        "j_unitarity": IDENTITY_TOL,
        "a_fit": FIT_TOL,
    }
    for name, value in residuals.items():
        if value > thresholds[name]:
            raise ValidationFailedError(name, value, thresholds[name], residuals)

    diagnostics = {
        "b_domain_invariance": spectral_norm((eye - p) @ b @ p),
    }
    return OperatorSystem(
        gns=gns, a=a, b=b, j=j, x00=gns.x00.copy(),
        residuals=residuals, diagnostics=diagnostics,
    )


def build_system(gns: GnsSpace) -> OperatorSystem:
    """Wire the full triple for a GNS space.

    For max_freq = 0 the frequency window is the single point n = 0 and the
    shift is taken to be the identity, the unique choice consistent with the
    angle-free sub-problem on the real line.
    """
    a = build_shift_A(gns)
    if gns.window.max_freq == 0:
        b = np.eye(gns.rank, dtype=complex)
    else:
        b = build_shift_B(gns)
    j = build_conjugation_J(gns)
    return validate_system(a, b, j, gns)


def orbit_vector(sys: OperatorSystem, m: int, n: int, *, tol: float = 1e-8):
    """A^m B^n x00 evaluated left to right with a domain check at each A step.

    Returns (vector, True) when every intermediate power stays in D(A);
    (last valid vector, False) when the orbit exits the domain (B steps are
    always defined; B is unitary).
    """
    v = sys.x00.copy()
    if n >= 0:
        for _ in range(n):
            v = sys.b @ v
    else:
        binv = sys.b.conj().T
        for _ in range(-n):
            v = binv @ v
    for _ in range(m):
        if not sys.a.in_domain(v, tol):
            return v, False
        v = sys.a.matrix @ v
    return v, True

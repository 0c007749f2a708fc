"""Commuting self-adjoint extensions of the power shift.

Pipeline: Cayley-transform the symmetric partial operator A into an isometry
V_A between the ranges of A -+ i, take orthogonal complements H2 and H4 of
those ranges, factor the frequency shift restricted to H2 into a product of
two conjugations (every unitary is such a product), compose the left factor
with the ambient conjugation J to get a canonical isometry U24: H2 -> H4,
and close up U = V_A (+) U24 U2 into a unitary whose inverse Cayley
transform is a Hermitian extension of A commuting with B.  The free
parameter U2 ranges over the unitaries on H2 commuting with B|_H2; distinct
parameters give distinct extensions, hence distinct recovered measures.

All of this requires B to reduce the deficiency subspaces.  That is
automatic with an unbounded index set but can fail on a truncated window,
so verify_reduction gates the machinery instead of assuming it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._linalg import (
    haar_unitary,
    hermitian_part,
    orthonormal_columns,
    orthonormal_complement,
    projector,
    spectral_norm,
    unitary_eig,
    wrap_angle,
)
from .errors import (
    CommutationFailedError,
    ComputationError,
    DomainError,
    OnePointSpectrumError,
    ReductionFailedError,
    ValidationFailedError,
)
from .operators import AntilinearOperator, OperatorSystem

ANGULAR_TOL = 1e-8
REDUCTION_TOL = 1e-9
COMMUTATION_TOL = 1e-9
UNITARITY_TOL = 1e-10
EIG_ONE_GAP = 1e-8
EXTENSION_AGREE_TOL = 1e-8


@dataclass(frozen=True)
class DeficiencyData:
    """Deficiency geometry of the power shift.

    h1..h4 have orthonormal columns spanning range(A-i)|_D, its complement,
    range(A+i)|_D, and its complement; cayley is V_A as an ambient matrix
    (zero on h2), mapping (A-i)f to (A+i)f.
    """

    h1: np.ndarray
    h2: np.ndarray
    h3: np.ndarray
    h4: np.ndarray
    cayley: np.ndarray
    defect: int
    domain_dim: int

    def b_on_h2(self, b: np.ndarray) -> np.ndarray:
        """Compression of the frequency shift to H2 coordinates."""
        return self.h2.conj().T @ b @ self.h2


@dataclass(frozen=True)
class ConjugationPair:
    """Conjugations K, L on H2 coordinates with K o L = B|_H2."""

    k: AntilinearOperator
    l: AntilinearOperator

    def product(self) -> np.ndarray:
        """The linear map K o L (apply L, then K)."""
        return self.k.matrix @ np.conj(self.l.matrix)


@dataclass(frozen=True)
class ExtensionData:
    """A commuting unitary extension U of V_A and its inverse Cayley transform."""

    u: np.ndarray
    a_u: np.ndarray
    parameter: str
    diagnostics: dict


def cayley_decompose(sys: OperatorSystem, *, tol: float | None = None) -> DeficiencyData:
    """Ranges of A -+ i on the domain, their complements, and V_A."""
    gns = sys.gns
    tol = gns.factorization_tol if tol is None else tol
    r = gns.rank
    eye = np.eye(r)
    dom = gns.columns(sys.a.domain_indices)
    y1 = (sys.a.matrix - 1j * eye) @ dom
    y3 = (sys.a.matrix + 1j * eye) @ dom
    h1, rank1 = orthonormal_columns(y1, tol, check_gap=True)
    h3, rank3 = orthonormal_columns(y3, tol, check_gap=True)
    if rank1 != sys.a.domain_dim or rank3 != sys.a.domain_dim:
        # A -+ i is injective on the domain of a symmetric operator, so a
        # rank drop here is numerical breakdown, not geometry.
        raise ComputationError(
            f"range of A -+ i has rank {rank1}/{rank3}, expected "
            f"{sys.a.domain_dim}"
        )
    h2 = orthonormal_complement(h1, r)
    h4 = orthonormal_complement(h3, r)
    cayley = y3 @ np.linalg.pinv(y1, rcond=tol)
    iso = spectral_norm(cayley.conj().T @ cayley - projector(h1))
    if iso > UNITARITY_TOL:
        raise ValidationFailedError("cayley_isometry", iso, UNITARITY_TOL)
    return DeficiencyData(
        h1=h1, h2=h2, h3=h3, h4=h4, cayley=cayley,
        defect=r - rank1, domain_dim=rank1,
    )


def verify_reduction(sys: OperatorSystem, dd: DeficiencyData,
                     tol: float = REDUCTION_TOL) -> dict:
    """Check that B reduces H1..H4, commutes with V_A on H1, and J H2 = H4.

    Returns the residual record; raises ReductionFailedError when the window
    is too small for the commuting-extension construction.
    """
    b = sys.b
    r = sys.gns.rank
    eye = np.eye(r)
    record = {}
    for name, basis in (("h1", dd.h1), ("h2", dd.h2), ("h3", dd.h3), ("h4", dd.h4)):
        p = projector(basis)
        record[f"b_reduces_{name}"] = spectral_norm(p @ b - b @ p)
    if dd.h1.shape[1]:
        record["bva_commutation"] = spectral_norm((b @ dd.cayley - dd.cayley @ b) @ dd.h1)
    else:
        record["bva_commutation"] = 0.0
    if dd.defect:
        p4 = projector(dd.h4)
        record["j_maps_h2_to_h4"] = spectral_norm((eye - p4) @ (sys.j.matrix @ np.conj(dd.h2)))
    else:
        record["j_maps_h2_to_h4"] = 0.0
    for name, value in record.items():
        if value > tol:
            raise ReductionFailedError(name, value, tol, record)
    return record


def godic_lucenko_factor(b_on_h2: np.ndarray, *,
                         angular_tol: float = ANGULAR_TOL) -> ConjugationPair:
    """Factor a unitary into two conjugations, K o L.

    L conjugates coordinates in a (deterministically chosen) eigenbasis W of
    the input: L v = W conj(W^H v), i.e. matrix W W^T.  K is the input
    composed with L.  Then K o L reproduces the input exactly and both
    factors are antilinear involutive isometries.
    """
    b2 = np.asarray(b_on_h2, dtype=complex)
    d = b2.shape[0]
    if d < 1:
        raise DomainError("Godic-Lucenko factorization needs dimension >= 1")
    defect = spectral_norm(b2.conj().T @ b2 - np.eye(d))
    if defect > UNITARITY_TOL:
        raise ValidationFailedError("gl_input_unitarity", defect, UNITARITY_TOL)
    _, w, _ = unitary_eig(b2, angular_tol=angular_tol)
    l_mat = w @ w.T
    k_mat = b2 @ l_mat
    return ConjugationPair(k=AntilinearOperator(k_mat), l=AntilinearOperator(l_mat))


def build_U24(j: AntilinearOperator, k: AntilinearOperator, dd: DeficiencyData,
              b: np.ndarray | None = None) -> np.ndarray:
    """Canonical isometry H2 -> H4 as an ambient matrix: J composed with K.

    Antilinear after antilinear is linear: on ambient coordinates the map is
    M_J conj(Q2 M_K) Q2^H, zero on the complement of H2.  When the frequency
    shift is supplied its commutation with the result is enforced.
    """
    q2, q4 = dd.h2, dd.h4
    d = dd.defect
    if d == 0:
        r = q2.shape[0]
        return np.zeros((r, r), dtype=complex)
    u24 = j.matrix @ np.conj(q2 @ k.matrix) @ q2.conj().T
    cols = u24 @ q2
    range_defect = spectral_norm(cols - projector(q4) @ cols)
    iso_defect = spectral_norm(cols.conj().T @ cols - np.eye(d))
    if range_defect > UNITARITY_TOL or iso_defect > UNITARITY_TOL:
        raise ValidationFailedError(
            "u24_isometry", max(range_defect, iso_defect), UNITARITY_TOL)
    if b is not None:
        comm = spectral_norm((b @ u24 - u24 @ b) @ q2)
        if comm > COMMUTATION_TOL:
            raise CommutationFailedError("u24_b_commutation", comm, COMMUTATION_TOL)
    return u24


def _cot_half(angles: np.ndarray) -> np.ndarray:
    return np.cos(angles / 2.0) / np.sin(angles / 2.0)


def unitary_eig_of_hermitian_cayley(a_mat: np.ndarray):
    """Eigen-data of the Cayley transform (A+i)(A-i)^{-1} of a Hermitian matrix.

    Returns (angles, vectors, eigenvalues of A); the Cayley image of a real
    eigenvalue s is (s+i)/(s-i), computed eigenvalue-wise so the result is
    exactly unitary.
    """
    s, w = scipy.linalg.eigh(a_mat)
    lam = (s + 1j) / (s - 1j)
    angles = wrap_angle(np.angle(lam))
    return angles, w, s


def inverse_cayley(u: np.ndarray, *, gap_tol: float = EIG_ONE_GAP,
                   parameter: str = "") -> tuple[np.ndarray, float]:
    """Hermitian A_U with (A_U + i)(A_U - i)^{-1} = U.

    Computed spectrally: U = W diag(e^{i theta}) W^H gives
    A_U = W diag(cot(theta/2)) W^H, which is i(U+I)(U-I)^{-1} without the
    cancellation that the matrix inverse suffers near eigenvalue 1.  Raises
    OnePointSpectrumError when some |e^{i theta} - 1| <= gap_tol.
    """
    angles, w, _ = unitary_eig(u)
    gaps = np.abs(np.exp(1j * angles) - 1.0)
    if gaps.min() <= gap_tol:
        raise OnePointSpectrumError(float(gaps.min()), parameter)
    a_u = (w * _cot_half(angles)[None, :]) @ w.conj().T
    herm_defect = spectral_norm(a_u - a_u.conj().T)
    return hermitian_part(a_u), float(herm_defect)


def assemble_extension(sys: OperatorSystem, dd: DeficiencyData,
                       u24: np.ndarray | None = None,
                       u2: np.ndarray | None = None,
                       parameter: str = "identity") -> ExtensionData:
    """U = V_A on H1 plus U24 U2 on H2, and its inverse Cayley transform.

    u2 is a unitary on H2 *coordinates* (the dd.h2 basis) commuting with
    B|_H2; None means the identity.  For defect zero A is already
    self-adjoint: U is its Cayley transform and A_U its Hermitian part.
    """
    gns = sys.gns
    r = gns.rank
    d = dd.defect
    diagnostics: dict = {}

    if d == 0:
        a_u = hermitian_part(sys.a.matrix)
        angles, w, _ = unitary_eig_of_hermitian_cayley(a_u)
        u = (w * np.exp(1j * angles)[None, :]) @ w.conj().T
        diagnostics["a_u_hermitization_defect"] = spectral_norm(
            sys.a.matrix - sys.a.matrix.conj().T)
    else:
        if u24 is None:
            raise DomainError("defect > 0 needs the canonical isometry u24")
        if u2 is None:
            u2 = np.eye(d, dtype=complex)
        u2 = np.asarray(u2, dtype=complex)
        if u2.shape != (d, d):
            raise DomainError(f"parameter must be {d}x{d}, got {u2.shape}")
        unit = spectral_norm(u2.conj().T @ u2 - np.eye(d))
        if unit > UNITARITY_TOL:
            raise ValidationFailedError("parameter_unitarity", unit, UNITARITY_TOL)
        b2 = dd.b_on_h2(sys.b)
        comm2 = spectral_norm(u2 @ b2 - b2 @ u2)
        if comm2 > COMMUTATION_TOL:
            raise CommutationFailedError("parameter_b_commutation", comm2,
                                         COMMUTATION_TOL)
        u = dd.cayley + u24 @ dd.h2 @ u2 @ dd.h2.conj().T
        a_u, herm_defect = inverse_cayley(u, parameter=parameter)
        diagnostics["a_u_hermitization_defect"] = herm_defect

    eye = np.eye(r)
    diagnostics["u_unitarity"] = spectral_norm(u.conj().T @ u - eye)
    diagnostics["u_extends_va"] = spectral_norm((u - dd.cayley) @ projector(dd.h1))
    diagnostics["bu_commutation"] = spectral_norm(sys.b @ u - u @ sys.b)
    dom = gns.columns(sys.a.domain_indices)
    diagnostics["a_u_extends_a"] = float(
        np.linalg.norm((a_u - sys.a.matrix) @ dom) / (1.0 + np.linalg.norm(dom)))
    gaps = np.abs(np.linalg.eigvals(u) - 1.0)
    diagnostics["u_eig_gap_from_1"] = float(gaps.min())

    if diagnostics["u_unitarity"] > UNITARITY_TOL:
        raise ValidationFailedError("u_unitarity", diagnostics["u_unitarity"],
                                    UNITARITY_TOL, diagnostics)
    if diagnostics["u_eig_gap_from_1"] <= EIG_ONE_GAP:
        raise OnePointSpectrumError(diagnostics["u_eig_gap_from_1"], parameter)
    if diagnostics["bu_commutation"] > COMMUTATION_TOL:
        raise CommutationFailedError("bu_commutation",
                                     diagnostics["bu_commutation"],
                                     COMMUTATION_TOL, diagnostics)
    if diagnostics["a_u_extends_a"] > EXTENSION_AGREE_TOL:
        raise ValidationFailedError("a_u_extends_a", diagnostics["a_u_extends_a"],
                                    EXTENSION_AGREE_TOL, diagnostics)
    return ExtensionData(u=u, a_u=a_u, parameter=parameter, diagnostics=diagnostics)


def cayley_roundtrip(a_u: np.ndarray, u: np.ndarray) -> float:
    """|| (A_U + i)(A_U - i)^{-1} - U ||, the inverse-Cayley consistency check."""
    r = a_u.shape[0]
    eye = np.eye(r)
    v = (a_u + 1j * eye) @ np.linalg.inv(a_u - 1j * eye)
    return spectral_norm(v - u)


def enumerate_commutant_unitaries(b_on_h2: np.ndarray, count: int, seed: int,
                                  *, angular_tol: float = ANGULAR_TOL) -> list[np.ndarray]:
    """Deterministic sample of unitaries on H2 commuting with B|_H2.

    Eigenvalues of B|_H2 are clustered at an angular tolerance; a commuting
    unitary is block-diagonal over the clusters in B's eigenbasis, so each
    sample draws an independent Haar unitary per cluster.  The first element
    is always the identity.
    """
    if count < 1:
        raise DomainError("count must be >= 1")
    b2 = np.asarray(b_on_h2, dtype=complex)
    d = b2.shape[0]
    if d < 1:
        raise DomainError("commutant enumeration needs dimension >= 1")
    _, w, clusters = unitary_eig(b2, angular_tol=angular_tol)
    rng = np.random.default_rng(seed)
    out = [np.eye(d, dtype=complex)]
    for _ in range(count - 1):
        block = np.zeros((d, d), dtype=complex)
        for cl in clusters:
            block[np.ix_(cl, cl)] = haar_unitary(cl.size, rng)
        out.append(w @ block @ w.conj().T)
    return out

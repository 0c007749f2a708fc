"""Quasiself-adjoint extensions and generalized resolvents.

A contraction C: H2 -> H4 defines an extension A_C on the domain
D(A) + (C - I)H2 by A_C(f + C psi - psi) = A f + i C psi + i psi, a
restriction of the adjoint.  With constant contraction parameters the
resolvent rule is (A_C - z)^{-1} in the upper half plane and
(A_{C*} - z)^{-1} in the lower, C* being the adjoint map H4 -> H2 in the
identified bases.  Unitary C reproduces the self-adjoint extensions; strict
contractions probe the resolvents whose measures live in a larger space
(no measure extraction is attempted for those).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import condition_number, inner, spectral_norm
from .errors import (
    DeficientDomainError,
    DomainError,
    SingularPencilError,
    ValidationFailedError,
)
from .extension import DeficiencyData
from .moments import AtomicMeasure
from .operators import OperatorSystem

NORM_TOL = 1.0 + 1e-12
COMMUTATION_TOL = 1e-9
AGREE_TOL = 1e-9
PENCIL_CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class ContractionParameter:
    """Contraction C: H2 -> H4 in the orthonormal bases chosen by cayley_decompose."""

    matrix: np.ndarray
    norm: float
    commutation_residual: float
    description: str = "contraction"

    @classmethod
    def create(cls, matrix: np.ndarray, sys: OperatorSystem, dd: DeficiencyData,
               *, description: str = "contraction",
               require_commuting: bool = True) -> "ContractionParameter":
        """Validate norm <= 1 and (optionally) commutation with B.

        The commutation is the ambient one through the inclusion maps:
        || B (Q4 C Q2^H) - (Q4 C Q2^H) B ||.  Deliberately non-commuting
        parameters (for negative tests) pass require_commuting=False.
        """
        matrix = np.asarray(matrix, dtype=complex)
        d = dd.defect
        if matrix.shape != (d, d):
            raise DomainError(f"contraction must be {d}x{d}, got {matrix.shape}")
        norm = spectral_norm(matrix) if d else 0.0
        if norm > NORM_TOL:
            raise ValidationFailedError("contraction_norm", norm, NORM_TOL)
        ambient = dd.h4 @ matrix @ dd.h2.conj().T if d else np.zeros_like(sys.b)
        comm = spectral_norm(sys.b @ ambient - ambient @ sys.b)
        if require_commuting and comm > COMMUTATION_TOL:
            raise ValidationFailedError("contraction_b_commutation", comm,
                                        COMMUTATION_TOL)
        return cls(matrix=matrix, norm=float(norm),
                   commutation_residual=float(comm), description=description)


@dataclass(frozen=True)
class QuasiExtension:
    """Everywhere-defined matrix agreeing with A on D(A) and with the
    contraction rule on (C - I)H2; generally non-Hermitian."""

    a_c: np.ndarray
    domain_dim: int
    agree_residual: float
    rule_residual: float


def _quasi_matrix(sys: OperatorSystem, dd: DeficiencyData, cmat: np.ndarray,
                  *, from_h4: bool) -> np.ndarray:
    """Solve for the matrix with the two action rules.

    from_h4=False: parameter maps H2 -> H4, action i(C psi + psi) on psi in H2.
    from_h4=True: parameter maps H4 -> H2, action -i(C psi + psi) on psi in H4
    (the adjoint rule used in the lower half plane).
    """
    gns = sys.gns
    r = gns.rank
    dom = gns.columns(sys.a.domain_indices)
    if dd.defect == 0:
        domain_cols = dom
        action_cols = sys.a.matrix @ dom
    else:
        src, dst = (dd.h4, dd.h2) if from_h4 else (dd.h2, dd.h4)
        sign = -1.0 if from_h4 else 1.0
        ext_cols = dst @ cmat - src
        ext_action = sign * 1j * (dst @ cmat + src)
        domain_cols = np.hstack([dom, ext_cols])
        action_cols = np.hstack([sys.a.matrix @ dom, ext_action])
    svals = np.linalg.svd(domain_cols, compute_uv=False)
    cut = gns.factorization_tol * max(1.0, float(svals.max()))
    rank = int(np.count_nonzero(svals > cut))
    if rank < r:
        raise DeficientDomainError(r - rank)
    return action_cols @ np.linalg.pinv(domain_cols, rcond=gns.factorization_tol)


def build_quasi_extension(sys: OperatorSystem, dd: DeficiencyData,
                          c: ContractionParameter) -> QuasiExtension:
    """Quasiself-adjoint extension A_C for a contraction H2 -> H4."""
    a_c = _quasi_matrix(sys, dd, c.matrix, from_h4=False)
    dom = sys.gns.columns(sys.a.domain_indices)
    agree = float(np.linalg.norm((a_c - sys.a.matrix) @ dom)
                  / (1.0 + np.linalg.norm(dom)))
    if dd.defect:
        psi = dd.h2
        g = dd.h4 @ c.matrix - psi
        want = 1j * (dd.h4 @ c.matrix + psi)
        rule = float(np.linalg.norm(a_c @ g - want) / (1.0 + np.linalg.norm(want)))
    else:
        rule = 0.0
    if agree > AGREE_TOL:
        raise ValidationFailedError("quasi_extends_a", agree, AGREE_TOL)
    if rule > AGREE_TOL:
        raise ValidationFailedError("quasi_rule", rule, AGREE_TOL)
    return QuasiExtension(a_c=a_c, domain_dim=sys.gns.rank,
                          agree_residual=agree, rule_residual=rule)


def generalized_resolvent(sys: OperatorSystem, dd: DeficiencyData,
                          c: ContractionParameter, z: complex) -> np.ndarray:
    """R_z = (A_C - z)^{-1} for Im z > 0, (A_{C*} - z)^{-1} for Im z < 0."""
    z = complex(z)
    if z.imag == 0.0:
        raise DomainError("resolvent point must be non-real")
    if z.imag > 0:
        a_c = _quasi_matrix(sys, dd, c.matrix, from_h4=False)
    else:
        a_c = _quasi_matrix(sys, dd, c.matrix.conj().T, from_h4=True)
    pencil = a_c - z * np.eye(sys.gns.rank)
    cond = condition_number(pencil)
    if not np.isfinite(cond) or cond > PENCIL_CONDITION_LIMIT:
        raise SingularPencilError(cond)
    return np.linalg.inv(pencil)


def resolvent_moment_check(sys: OperatorSystem, dd: DeficiencyData,
                           c: ContractionParameter, z: complex,
                           m1: int, m2: int, n1: int, n2: int,
                           measure: AtomicMeasure) -> float:
    """Residual of the moment-resolvent identity at one index split.

    | <R_z x(m1,n2), x(m2,-n1)> - sum_j w_j x_j^(m1+m2) e^{i(n1+n2) phi_j} / (x_j - z) |

    For canonical (unitary) parameters and the synthesized solution this is
    zero up to rounding; it ties the operator model to the measure.
    """
    win = sys.gns.window
    for (mm, nn) in ((m1, n2), (m2, -n1)):
        if not (0 <= mm <= win.max_power and abs(nn) <= win.max_freq):
            raise DomainError(
                f"index ({mm}, {nn}) outside the embedding window "
                f"[0, {win.max_power}] x [-{win.max_freq}, {win.max_freq}]")
    r_z = generalized_resolvent(sys, dd, c, z)
    left = inner(r_z @ sys.gns.vector(m1, n2), sys.gns.vector(m2, -n1))
    xs, phis, ws = measure.xs, measure.phis, measure.weights
    right = complex(np.sum(
        ws * xs ** (m1 + m2) * np.exp(1j * (n1 + n2) * phis) / (xs - z)))
    return float(abs(left - right))


def resolvent_norm_bound_residual(r_z: np.ndarray, z: complex) -> float:
    """max(0, ||R_z|| - 1/|Im z|): positive means the contraction bound failed."""
    return float(max(0.0, spectral_norm(r_z) - 1.0 / abs(complex(z).imag)))


def adjoint_symmetry_residual(sys: OperatorSystem, dd: DeficiencyData,
                              c: ContractionParameter, z: complex) -> float:
    """|| R_z^* - R_conj(z) ||; the two half-plane rules must be adjoints."""
    upper = generalized_resolvent(sys, dd, c, z)
    lower = generalized_resolvent(sys, dd, c, np.conj(z))
    return spectral_norm(upper.conj().T - lower)


def commutation_residual(sys: OperatorSystem, dd: DeficiencyData,
                         c: ContractionParameter, z: complex) -> float:
    """|| B R_z - R_z B ||."""
    r_z = generalized_resolvent(sys, dd, c, z)
    return spectral_norm(sys.b @ r_z - r_z @ sys.b)


def imaginary_part_profile(sys: OperatorSystem, dd: DeficiencyData,
                           c: ContractionParameter, ts: np.ndarray,
                           eps: float) -> np.ndarray:
    """Im <R_{t+i eps} x00, x00> sampled along the real axis.

    Diagnostic only: Stieltjes inversion of non-canonical resolvents to
    measures is out of scope, but the profile is useful to eyeball.
    """
    out = np.empty(len(ts))
    for i, t in enumerate(ts):
        r_z = generalized_resolvent(sys, dd, c, complex(t, eps))
        out[i] = inner(r_z @ sys.x00, sys.x00).imag
    return out

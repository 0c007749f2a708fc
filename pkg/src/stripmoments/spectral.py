"""Joint spectra of the commuting pair (A_U, B) and atomic solution synthesis.

At finite rank the product of the two spectral measures is a sum of rank-one
projectors onto joint eigenvectors, so the solution measure
mu = ((E x F) x00, x00) is exactly atomic: one atom per joint eigenvector v,
located at (s, phi) with weight |<x00, v>|^2.  Diagonalization is B-first
(well-separated clusters on the circle), then the Hermitian compression of
A_U inside each cluster; A_U-first would break on degenerate A_U eigenvalues
spanning different angles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from ._linalg import (
    angular_distance,
    hermitian_part,
    inner,
    spectral_norm,
    unitary_eig,
    wrap_angle,
)
from .errors import (
    ClusterAmbiguityError,
    CommutationTooLargeError,
    ComputationError,
    DomainError,
)
from .extension import (
    DeficiencyData,
    ExtensionData,
    assemble_extension,
    build_U24,
    enumerate_commutant_unitaries,
    godic_lucenko_factor,
)
from .moments import Atom, AtomicMeasure, MomentTable
from .operators import OperatorSystem

JOINT_TOL = 1e-8
ORTHO_TOL = 1e-10
WEIGHT_FLOOR = 1e-12
VERIFY_TOL = 1e-8


@dataclass(frozen=True)
class JointSpectrum:
    """Joint eigen-triples (s, phi, vec) of a Hermitian/unitary commuting pair."""

    s: np.ndarray
    phi: np.ndarray
    vectors: np.ndarray          # column j is the eigenvector for (s[j], phi[j])
    a_residual: float
    b_residual: float
    ortho_defect: float

    def __len__(self) -> int:
        return self.s.size


def joint_diagonalize(a_u: np.ndarray, b: np.ndarray,
                      tol: float = 1e-8) -> JointSpectrum:
    """Simultaneous eigenbasis of a Hermitian A_U and unitary B that commute.

    ``tol`` is the angular clustering tolerance for B's eigenvalues; clusters
    separated by less than 10*tol (but more than tol) raise
    ClusterAmbiguityError instead of silently picking a side.
    """
    a_u = np.asarray(a_u, dtype=complex)
    b = np.asarray(b, dtype=complex)
    r = a_u.shape[0]
    comm = spectral_norm(a_u @ b - b @ a_u)
    comm_tol = 1e-8 * (1.0 + spectral_norm(a_u))
    if comm > comm_tol:
        raise CommutationTooLargeError(comm, comm_tol)

    angles, w, clusters = unitary_eig(b, angular_tol=tol)
    reps = [angles[cl[0]] for cl in clusters]
    for i in range(len(reps)):
        gap = angular_distance(reps[i], reps[(i + 1) % len(reps)])
        if len(reps) > 1 and tol < gap < 10.0 * tol:
            raise ClusterAmbiguityError(gap, tol)

    s_out = np.empty(r)
    phi_out = np.empty(r)
    vec_out = np.empty((r, r), dtype=complex)
    col = 0
    for cl in clusters:
        q = w[:, cl]
        comp = hermitian_part(q.conj().T @ a_u @ q)
        svals, svecs = scipy.linalg.eigh(comp)
        vecs = q @ svecs
        for k in range(cl.size):
            v = vecs[:, k]
            s_out[col] = float(np.real(inner(a_u @ v, v)))
            phi_out[col] = float(wrap_angle(np.angle(inner(b @ v, v))))
            vec_out[:, col] = v
            col += 1

    a_res = float(max(
        np.linalg.norm(a_u @ vec_out[:, j] - s_out[j] * vec_out[:, j])
        for j in range(r)))
    b_res = float(max(
        np.linalg.norm(b @ vec_out[:, j] - np.exp(1j * phi_out[j]) * vec_out[:, j])
        for j in range(r)))
    ortho = spectral_norm(vec_out.conj().T @ vec_out - np.eye(r))
    a_scale = 1.0 + spectral_norm(a_u)
    if a_res > JOINT_TOL * a_scale or b_res > JOINT_TOL or ortho > ORTHO_TOL:
        raise ComputationError(
            f"joint diagonalization residuals too large "
            f"(a {a_res:.2e}, b {b_res:.2e}, ortho {ortho:.2e})")
    return JointSpectrum(s=s_out, phi=phi_out, vectors=vec_out,
                         a_residual=a_res, b_residual=b_res, ortho_defect=ortho)


@dataclass(frozen=True)
class SolutionMeasure:
    measure: AtomicMeasure
    parameter: str
    fit: float
    dropped_mass: float
    residuals: dict


@dataclass(frozen=True)
class VerificationResult:
    max_residual: float
    ok: bool
    per_index: dict


def verify_solution(table: MomentTable, measure: AtomicMeasure,
                    tol: float = VERIFY_TOL) -> VerificationResult:
    """Relative moment residuals of a measure over the full stored rectangle."""
    xs = measure.xs if len(measure) else np.zeros(0)
    phis = measure.phis if len(measure) else np.zeros(0)
    ws = measure.weights if len(measure) else np.zeros(0)
    per_index = {}
    worst = 0.0
    for m, n in table.indices():
        total = complex(np.sum(ws * xs ** m * np.exp(1j * n * phis)))
        s = table.value(m, n)
        res = abs(total - s) / (1.0 + abs(s))
        per_index[(m, n)] = res
        worst = max(worst, res)
    return VerificationResult(max_residual=worst, ok=worst <= tol,
                              per_index=per_index)


def synthesize_solution(js: JointSpectrum, x00: np.ndarray, src: MomentTable,
                        weight_floor: float = WEIGHT_FLOOR,
                        parameter: str = "identity") -> SolutionMeasure:
    """Atomic measure from a joint spectrum: weight |<x00, v>|^2 at (s, phi).

    Atoms below weight_floor * s(0,0) are dropped (eigenvector components of
    x00 at rounding level would otherwise produce phantom atoms); coincident
    (s, phi) pairs merge by weight addition.
    """
    s00 = src.value(0, 0).real
    floor = weight_floor * s00
    atoms = []
    dropped = 0.0
    for j in range(len(js)):
        w = abs(inner(x00, js.vectors[:, j])) ** 2
        if w < floor:
            dropped += w
            continue
        atoms.append(Atom(float(js.s[j]), float(js.phi[j]), float(w)))
    measure = AtomicMeasure.create(atoms)   # create() merges coincident atoms
    result = verify_solution(src, measure)
    return SolutionMeasure(
        measure=measure, parameter=parameter, fit=result.max_residual,
        dropped_mass=float(dropped),
        residuals={"joint_a": js.a_residual, "joint_b": js.b_residual},
    )


def measure_distance(a: AtomicMeasure, b: AtomicMeasure) -> float:
    """Optimal-assignment distance between atom sets.

    Atoms are matched by position cost max(|dx|, circular |dphi|); the
    distance is the worst matched discrepancy including weights.  Measures
    with different atom counts are maximally distant (inf).
    """
    if len(a) != len(b):
        return float("inf")
    if len(a) == 0:
        return 0.0
    pos_cost = np.zeros((len(a), len(b)))
    full_cost = np.zeros((len(a), len(b)))
    for i, p in enumerate(a.atoms):
        for j, q in enumerate(b.atoms):
            pos_cost[i, j] = max(abs(p.x - q.x), angular_distance(p.phi, q.phi))
            full_cost[i, j] = max(pos_cost[i, j], abs(p.weight - q.weight))
    rows, cols = scipy.optimize.linear_sum_assignment(pos_cost)
    return float(full_cost[rows, cols].max())


def canonical_family(sys: OperatorSystem, dd: DeficiencyData, count: int,
                     seed: int, table: MomentTable,
                     parameters: list[np.ndarray] | None = None,
                     labels: list[str] | None = None) -> list[SolutionMeasure]:
    """Canonical solutions from commutant-parameterized extensions.

    Defect zero has a unique extension and returns one solution regardless of
    count.  Otherwise `count` parameters come from the seeded commutant
    sample (identity first) unless explicit parameter matrices are given.
    Solutions are ordered by parameter index.
    """
    if count < 1:
        raise DomainError("count must be >= 1")
    extensions = extension_family(sys, dd, count, seed, parameters, labels)
    out = []
    for ext in extensions:
        js = joint_diagonalize(ext.a_u, sys.b)
        out.append(synthesize_solution(js, sys.x00, table, parameter=ext.parameter))
    return out


def extension_family(sys: OperatorSystem, dd: DeficiencyData, count: int,
                     seed: int, parameters: list[np.ndarray] | None = None,
                     labels: list[str] | None = None) -> list[ExtensionData]:
    """Assemble the commuting extensions behind canonical_family."""
    if dd.defect == 0:
        return [assemble_extension(sys, dd, parameter="defect-0")]
    b2 = dd.b_on_h2(sys.b)
    pair = godic_lucenko_factor(b2)
    u24 = build_U24(sys.j, pair.k, dd, sys.b)
    if parameters is None:
        params = enumerate_commutant_unitaries(b2, count, seed)
        names = ["identity"] + [f"seed:{seed}#{i}" for i in range(1, count)]
    else:
        params = parameters
        names = labels or [f"explicit#{i}" for i in range(len(parameters))]
    return [
        assemble_extension(sys, dd, u24, p, name)
        for p, name in zip(params, names)
    ]


def polynomial_density_diagnostic(measure: AtomicMeasure, max_power: int,
                                  max_freq: int) -> dict:
    """Rank of the window functions inside the discrete L2(mu) model vs atoms.

    Saturated rank means the window polynomials already span L2 of the
    recovered measure; reported as a diagnostic only.
    """
    xs, phis, ws = measure.xs, measure.phis, measure.weights
    rows = []
    for m in range(max_power + 1):
        for n in range(-max_freq, max_freq + 1):
            rows.append(np.sqrt(ws) * xs ** m * np.exp(1j * n * phis))
    mat = np.array(rows, dtype=complex)
    svals = np.linalg.svd(mat, compute_uv=False)
    cut = 1e-10 * max(1.0, float(svals.max())) if svals.size else 0.0
    return {
        "atoms": len(measure),
        "window_rank": int(np.count_nonzero(svals > cut)),
    }

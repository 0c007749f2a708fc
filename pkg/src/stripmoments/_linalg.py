"""Dense complex linear algebra helpers shared across modules.

Conventions: vectors are 1-d complex ndarrays, operators act as ``mat @ v``,
and the inner product is linear in its *first* argument,
``inner(u, v) = sum_i u_i * conj(v_i)``.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import ComputationError, RankAmbiguityError

TWO_PI = 2.0 * np.pi


def inner(u: np.ndarray, v: np.ndarray) -> complex:
    """Complex inner product, linear in the first argument."""
    return complex(np.vdot(v, u))


def hermitian_part(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.conj().T)


def spectral_norm(mat: np.ndarray) -> float:
    if mat.size == 0:
        return 0.0
    return float(np.linalg.norm(mat, 2))


def wrap_angle(phi):
    """Map angles into [-pi, pi); values already in range pass through bit-exact."""
    phi = np.asarray(phi, dtype=float)
    wrapped = (phi + np.pi) % TWO_PI - np.pi
    return np.where((phi >= -np.pi) & (phi < np.pi), phi, wrapped)


def angular_distance(a: float, b: float) -> float:
    """Distance between two angles on the circle."""
    d = abs(a - b) % TWO_PI
    return min(d, TWO_PI - d)


def orthonormal_columns(cols: np.ndarray, tol: float, *, check_gap: bool = False):
    """Orthonormal basis of the column space, rank cut at ``tol * max(1, s_max)``.

    Returns ``(basis, rank)``.  With ``check_gap`` the kept/dropped singular
    value ratio must be at least 10, otherwise RankAmbiguityError.
    """
    cols = np.atleast_2d(np.asarray(cols, dtype=complex))
    if cols.shape[1] == 0:
        return np.zeros((cols.shape[0], 0), dtype=complex), 0
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return u[:, :0], 0
    cut = tol * max(1.0, float(s[0]))
    rank = int(np.count_nonzero(s > cut))
    if check_gap and 0 < rank < s.size and s[rank] > 0.0:
        if s[rank - 1] / s[rank] < 10.0:
            raise RankAmbiguityError(float(s[rank - 1]), float(s[rank]))
    return u[:, :rank], rank


def orthonormal_complement(basis: np.ndarray, dim: int) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of range(basis) in C^dim."""
    if basis.shape[1] == 0:
        return np.eye(dim, dtype=complex)
    if basis.shape[1] >= dim:
        return np.zeros((dim, 0), dtype=complex)
    comp = scipy.linalg.null_space(basis.conj().T)
    if comp.shape[1] != dim - basis.shape[1]:
        raise ComputationError(
            "orthogonal complement has unexpected dimension "
            f"{comp.shape[1]} (expected {dim - basis.shape[1]})"
        )
    return comp.astype(complex)


def projector(basis: np.ndarray) -> np.ndarray:
    return basis @ basis.conj().T


def lstsq_operator(sources: np.ndarray, targets: np.ndarray, tol: float):
    """Least-squares operator with ``op @ sources ~= targets``.

    Returns ``(op, residual)`` where the residual is Frobenius-relative,
    ``||op @ sources - targets|| / (1 + ||targets||)``.
    """
    op = targets @ np.linalg.pinv(sources, rcond=tol)
    residual = np.linalg.norm(op @ sources - targets) / (
        1.0 + np.linalg.norm(targets)
    )
    return op, float(residual)


def polar_unitary(mat: np.ndarray) -> np.ndarray:
    u, _ = scipy.linalg.polar(mat)
    return u


def condition_number(mat: np.ndarray) -> float:
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[-1] == 0.0:
        return np.inf
    return float(s[0] / s[-1])


def _fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate a vector so its first significant coordinate is real positive."""
    mags = np.abs(v)
    top = mags.max()
    if top == 0.0:
        return v
    idx = int(np.argmax(mags > 0.5 * top))
    return v * (v[idx].conjugate() / mags[idx])


def cluster_indices(angles: np.ndarray, tol: float):
    """Group *sorted* angles into clusters of circular diameter <= tol.

    Returns a list of index arrays.  The first and last cluster are merged
    when they meet across the -pi/pi seam.
    """
    n = angles.size
    if n == 0:
        return []
    groups = [[0]]
    for i in range(1, n):
        if angles[i] - angles[groups[-1][-1]] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    if len(groups) > 1:
        seam = (angles[groups[0][0]] + TWO_PI) - angles[groups[-1][-1]]
        if seam <= tol:
            groups[-1].extend(groups[0])
            groups = groups[1:]
    return [np.asarray(g, dtype=int) for g in groups]


def canonical_subspace_basis(cols: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis depending only on span(cols).

    Greedy pivoted Gram-Schmidt on the columns of the orthogonal projector,
    with a phase fix per vector; LAPACK's arbitrary rotation of degenerate
    eigenvector bases is removed this way.
    """
    k = cols.shape[1]
    if k == 0:
        return cols
    proj = cols @ cols.conj().T
    residual = proj.copy()
    basis = []
    for _ in range(k):
        norms = np.linalg.norm(residual, axis=0)
        pick = int(np.argmax(norms))
        v = residual[:, pick] / norms[pick]
        v = _fix_phase(v)
        basis.append(v)
        residual -= np.outer(v, v.conj() @ residual)
    out = np.stack(basis, axis=1)
    # one Gram-Schmidt sweep to restore orthonormality lost to rounding
    q, _ = np.linalg.qr(out)
    q = np.stack([_fix_phase(q[:, i]) for i in range(k)], axis=1)
    return q


def unitary_eig(mat: np.ndarray, *, angular_tol: float = 1e-8,
                offdiag_tol: float = 1e-9):
    """Eigendecomposition of a unitary matrix with deterministic bases.

    Returns ``(angles, vectors, clusters)``: eigenvalue angles in [-pi, pi)
    sorted ascending, orthonormal eigenvector columns, and a list of index
    arrays grouping angles equal within ``angular_tol`` (members of a cluster
    share one representative angle and a canonical basis of the eigenspace).

    Uses the complex Schur form, which is diagonal for normal input; a
    non-diagonal Schur form means the input was not (numerically) unitary.
    """
    mat = np.asarray(mat, dtype=complex)
    d = mat.shape[0]
    if d == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=complex), []
    t, z = scipy.linalg.schur(mat, output="complex")
    diag = np.diag(t)
    off = np.linalg.norm(t - np.diag(diag))
    scale = max(1.0, float(np.abs(diag).max()))
    if off > offdiag_tol * scale * d:
        raise ComputationError(
            f"Schur form off-diagonal norm {off:.3e}; input is not unitary "
            f"enough for a stable eigendecomposition"
        )
    angles = wrap_angle(np.angle(diag))
    order = np.argsort(angles, kind="stable")
    angles = angles[order]
    vecs = z[:, order]

    groups = cluster_indices(angles, angular_tol)
    out_angles = np.empty(d)
    out_vecs = np.empty((d, d), dtype=complex)
    clusters = []
    col = 0
    for grp in groups:
        rep = float(wrap_angle(np.angle(np.mean(np.exp(1j * angles[grp])))))
        basis = canonical_subspace_basis(vecs[:, grp])
        width = grp.size
        out_angles[col:col + width] = rep
        out_vecs[:, col:col + width] = basis
        clusters.append(np.arange(col, col + width))
        col += width
    return out_angles, out_vecs, clusters


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed random unitary (QR of a Ginibre matrix, phase-fixed)."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    z /= np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))

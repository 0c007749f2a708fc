"""Gram assembly over an index window, solvability check, rank factorization.

The Gram matrix G[t, r] = s(m+k, n-l) of the kernel over the window
{(m, n): 0 <= m <= M, |n| <= N} is positive semidefinite exactly when the
table admits a solution.  A Hermitian eigendecomposition G = U diag(lam) U^H
with eigenvalues cut at a relative tolerance realizes the kernel concretely:
index t embeds as the coordinate vector sqrt(lam_i) * U[t, i], and the
package-wide inner product (linear in the first argument) reproduces G.
Cholesky is not used: exactly singular PSD matrices are the common case.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from ._linalg import hermitian_part
from .errors import ComputationError, DomainError, NotPositiveError
from .moments import MomentIndex, MomentTable, kernel_value, validate_table

DEFAULT_RANK_TOL = 1e-10


@dataclass(frozen=True)
class IndexWindow:
    """Ordered window {(m, n): 0 <= m <= max_power, |n| <= max_freq}.

    Lexicographic order, m ascending then n ascending; position() is the
    inverse of enumeration.
    """

    max_power: int
    max_freq: int
    indices: tuple[MomentIndex, ...]

    @classmethod
    def create(cls, max_power: int, max_freq: int) -> "IndexWindow":
        if max_power < 0 or max_freq < 0:
            raise DomainError("window bounds must be nonnegative")
        idx = tuple(
            MomentIndex(m, n)
            for m in range(max_power + 1)
            for n in range(-max_freq, max_freq + 1)
        )
        return cls(max_power, max_freq, idx)

    def position(self, m: int, n: int) -> int:
        if not (0 <= m <= self.max_power and abs(n) <= self.max_freq):
            raise DomainError(f"index ({m}, {n}) not in window")
        return m * (2 * self.max_freq + 1) + (n + self.max_freq)

    def __len__(self) -> int:
        return len(self.indices)


def build_gram(table: MomentTable, *, validate_tol: float = 1e-10) -> np.ndarray:
    """Hermitian Gram matrix of the kernel over the table's index window."""
    report = validate_table(table, validate_tol)
    if not report.ok:
        v = report.violations[0]
        raise DomainError(
            f"table is invalid: {v.invariant} violated at {v.index} ({v.detail})"
        )
    window = IndexWindow.create(table.max_power, table.max_freq)
    size = len(window)
    gram = np.empty((size, size), dtype=complex)
    for i, t in enumerate(window.indices):
        for j, r in enumerate(window.indices):
            gram[i, j] = kernel_value(table, t, r)
    return hermitian_part(gram)


@dataclass(frozen=True)
class PositivityReport:
    is_psd: bool
    min_eigenvalue: float
    numeric_rank: int
    spectral_norm: float
    eigenvalues: np.ndarray


def check_positivity(gram: np.ndarray, tol: float = DEFAULT_RANK_TOL) -> PositivityReport:
    """PSD test and numeric rank at threshold tol * max(1, ||G||)."""
    gram = np.asarray(gram, dtype=complex)
    try:
        eigs = scipy.linalg.eigvalsh(gram)
    except Exception as exc:  # pragma: no cover - eigvalsh rarely fails
        raise ComputationError(
            f"eigensolver failed on a {gram.shape[0]}x{gram.shape[0]} Gram "
            f"matrix (max |entry| {np.abs(gram).max():.3e}): {exc}"
        ) from exc
    norm = float(np.abs(eigs).max()) if eigs.size else 0.0
    cut = tol * max(1.0, norm)
    return PositivityReport(
        is_psd=bool(eigs.min() >= -cut) if eigs.size else True,
        min_eigenvalue=float(eigs.min()) if eigs.size else 0.0,
        numeric_rank=int(np.count_nonzero(eigs > cut)),
        spectral_norm=norm,
        eigenvalues=eigs,
    )


@dataclass(frozen=True)
class GnsSpace:
    """Finite-rank realization of the kernel: window, Gram, and embedding.

    embedding has shape (len(window), rank); row t holds the coordinates of
    the vector x_t, and inner(x_t, x_r) reproduces gram[t, r].
    """

    window: IndexWindow
    gram: np.ndarray
    rank: int
    embedding: np.ndarray
    factorization_tol: float

    def __post_init__(self):
        self.gram.setflags(write=False)
        self.embedding.setflags(write=False)

    def vector(self, m: int, n: int) -> np.ndarray:
        return self.embedding[self.window.position(m, n)]

    def columns(self, indices: Sequence[MomentIndex]) -> np.ndarray:
        """Embedding vectors as the columns of a (rank, len(indices)) matrix."""
        rows = [self.window.position(m, n) for m, n in indices]
        return self.embedding[rows].T.copy()

    @property
    def x00(self) -> np.ndarray:
        return self.vector(0, 0)

    def embedding_residual(self) -> float:
        return float(np.abs(self.embedding @ self.embedding.conj().T - self.gram).max())


def factorize(gram: np.ndarray, window: IndexWindow,
              tol: float = DEFAULT_RANK_TOL) -> GnsSpace:
    """GNS embedding from the Gram spectrum; raises NotPositiveError if not PSD."""
    gram = hermitian_part(np.asarray(gram, dtype=complex))
    report = check_positivity(gram, tol)
    if not report.is_psd:
        raise NotPositiveError(report.min_eigenvalue)
    eigs, vecs = scipy.linalg.eigh(gram)
    cut = tol * max(1.0, report.spectral_norm)
    keep = eigs > cut
    lam = eigs[keep]
    embedding = vecs[:, keep] * np.sqrt(lam)[None, :]
    return GnsSpace(
        window=window,
        gram=gram,
        rank=int(keep.sum()),
        embedding=embedding.astype(complex),
        factorization_tol=tol,
    )


def build_space(table: MomentTable, tol: float = DEFAULT_RANK_TOL) -> GnsSpace:
    """Convenience pipeline: Gram, positivity gate, factorization."""
    window = IndexWindow.create(table.max_power, table.max_freq)
    return factorize(build_gram(table), window, tol)

"""Shared fixtures: reference measures, the seeded corpus, and independent
oracles (atom-model constructions that never touch the package's GNS path).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

from stripmoments.errors import NotSaturatedError, ReductionFailedError
from stripmoments.extension import cayley_decompose, verify_reduction
from stripmoments.gns import build_gram, build_space, check_positivity
from stripmoments.moments import AtomicMeasure, MomentTable, compute_moments
from stripmoments.operators import build_system

CORPUS_SEED = 20240811
CORPUS_SIZE = 200


# ------------------------------------------------------------------ oracles


def eval_matrix(measure: AtomicMeasure, indices) -> np.ndarray:
    """Weighted atom-evaluation matrix: row t = sqrt(w_j) x_j^m e^{i n phi_j}.

    The Gram over the same indices is exactly this matrix times its adjoint,
    so its singular values squared are the Gram eigenvalues.
    """
    xs, phis, ws = measure.xs, measure.phis, measure.weights
    rows = [np.sqrt(ws) * xs.astype(complex) ** m * np.exp(1j * n * phis)
            for m, n in indices]
    return np.array(rows, dtype=complex)


def oracle_rank(measure: AtomicMeasure, indices, tol: float, gram_norm: float) -> int:
    """Numeric rank of the span of the embedded index vectors, atom-model side."""
    svals = np.linalg.svd(eval_matrix(measure, indices), compute_uv=False)
    cut = np.sqrt(tol * max(1.0, gram_norm))
    return int(np.count_nonzero(svals > cut))


def window_indices(max_power: int, max_freq: int):
    return [(m, n) for m in range(max_power + 1)
            for n in range(-max_freq, max_freq + 1)]


def b_source_indices(max_power: int, max_freq: int):
    return [(m, n) for m in range(max_power + 1)
            for n in range(-max_freq, max_freq)]


def oracle_reduction(measure: AtomicMeasure, max_power: int, max_freq: int) -> float:
    """Atom-model residual of 'multiplication by e^{i phi} preserves H1'.

    Valid whenever the GNS rank equals the atom count (the embedding is then
    unitarily equivalent to the sqrt(w)-scaled atom model).  D is the span of
    the window functions with m <= M-1, H1 = (x - i) D, and B is the diagonal
    phase multiplication.
    """
    xs, phis, ws = measure.xs, measure.phis, measure.weights
    scale = np.sqrt(ws)
    cols = []
    for m in range(max_power):
        for n in range(-max_freq, max_freq + 1):
            cols.append(scale * xs.astype(complex) ** m * np.exp(1j * n * phis))
    h1_cols = (xs - 1j)[:, None] * np.array(cols, dtype=complex).T
    u, svals, _ = np.linalg.svd(h1_cols, full_matrices=False)
    rank = int(np.count_nonzero(svals > 1e-10 * max(1.0, svals.max())))
    p1 = u[:, :rank] @ u[:, :rank].conj().T
    b = np.diag(np.exp(1j * phis))
    return float(np.linalg.norm(p1 @ b - b @ p1, 2))


# ------------------------------------------------------------------- corpus


@dataclass
class CorpusInstance:
    index: int
    measure: AtomicMeasure
    max_power: int
    max_freq: int
    table: MomentTable
    gram: np.ndarray
    positivity: object
    space: object = None
    system: object = None
    dd: object = None
    saturated: bool = True
    reduces: bool = True
    reduction_error: object = None
    error: object = None

    @property
    def defect(self):
        return self.dd.defect if self.dd is not None else None


def _random_measure(rng: np.random.Generator) -> AtomicMeasure:
    k = int(rng.integers(1, 7))
    atoms = [(rng.uniform(-3.0, 3.0), rng.uniform(-np.pi, np.pi),
              rng.uniform(0.1, 2.0)) for _ in range(k)]
    return AtomicMeasure.create(atoms)


def build_corpus() -> list[CorpusInstance]:
    out = []
    for i in range(CORPUS_SIZE):
        rng = np.random.default_rng([CORPUS_SEED, i])
        measure = _random_measure(rng)
        max_power = int(rng.choice([1, 2, 3]))
        max_freq = int(rng.choice([0, 1, 2]))
        table = compute_moments(measure, max_power, max_freq)
        gram = build_gram(table)
        inst = CorpusInstance(
            index=i, measure=measure, max_power=max_power, max_freq=max_freq,
            table=table, gram=gram, positivity=check_positivity(gram),
        )
        try:
            inst.space = build_space(table)
            inst.system = build_system(inst.space)
        except NotSaturatedError as exc:
            inst.saturated = False
            inst.error = exc
            out.append(inst)
            continue
        inst.dd = cayley_decompose(inst.system)
        try:
            verify_reduction(inst.system, inst.dd)
        except ReductionFailedError as exc:
            inst.reduces = False
            inst.reduction_error = exc
        out.append(inst)
    return out


@pytest.fixture(scope="session")
def corpus():
    return build_corpus()


# ------------------------------------------------------------------ fixtures


@pytest.fixture(scope="session")
def three_atom():
    """Defect-1 reference system: atoms x in {0,1,2}, phi = 0, M = 2, N = 0."""
    measure = AtomicMeasure.create([(0.0, 0.0, 1.0), (1.0, 0.0, 1.0), (2.0, 0.0, 1.0)])
    table = compute_moments(measure, 2, 0)
    space = build_space(table)
    system = build_system(space)
    dd = cayley_decompose(system)
    verify_reduction(system, dd)
    return measure, table, system, dd


@pytest.fixture(scope="session")
def product_mix():
    """Defect-2 system with a nontrivial frequency shift: atoms on the grid
    {0,1,2} x {0, pi}, M = 2, N = 1.  B|_H2 has eigenvalues {1, -1}."""
    atoms = [(x, p, 0.5) for x in (0.0, 1.0, 2.0) for p in (0.0, np.pi)]
    measure = AtomicMeasure.create(atoms)
    table = compute_moments(measure, 2, 1)
    space = build_space(table)
    system = build_system(space)
    dd = cayley_decompose(system)
    verify_reduction(system, dd)
    return measure, table, system, dd

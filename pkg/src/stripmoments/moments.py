"""Moment tables and atomic measures on the strip R x [-pi, pi).

Measures are finitely atomic: weighted points (x, phi).  A table stores the
mixed moments s(m, n) = sum_j w_j x_j^m exp(i n phi_j) over the rectangle
0 <= m <= 2*max_power, |n| <= 2*max_freq, which is exactly what is needed to
assemble every Gram entry of the (max_power, max_freq) index window.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, NamedTuple

import numpy as np

from ._linalg import angular_distance, wrap_angle
from .errors import DomainError, IndexOutOfWindowError

# Atoms closer than this in max-norm (with angular wraparound) merge on ingestion.
ATOM_MERGE_TOL = 1e-9


class MomentIndex(NamedTuple):
    """Moment index: power m >= 0, frequency n of either sign."""

    m: int
    n: int


@dataclass(frozen=True)
class Atom:
    """One weighted point of a measure; phi normalized to [-pi, pi)."""

    x: float
    phi: float
    weight: float


@dataclass(frozen=True)
class AtomicMeasure:
    """Finitely many weighted atoms on the strip.  Immutable; build via create()."""

    atoms: tuple[Atom, ...]

    @classmethod
    def create(cls, atoms: Iterable) -> "AtomicMeasure":
        """Validate, wrap angles into [-pi, pi), and merge near-duplicate atoms.

        Accepts Atom instances or (x, phi, weight) triples.  Weights must be
        positive and all coordinates finite; atoms within ATOM_MERGE_TOL of an
        earlier atom (max of |dx| and circular |dphi|) merge by weight addition.
        """
        merged: list[list[float]] = []
        for entry in atoms:
            if isinstance(entry, Atom):
                x, phi, weight = entry.x, entry.phi, entry.weight
            else:
                x, phi, weight = entry
            x, phi, weight = float(x), float(phi), float(weight)
            if not (np.isfinite(x) and np.isfinite(phi) and np.isfinite(weight)):
                raise DomainError("atom coordinates and weight must be finite")
            if weight <= 0.0:
                raise DomainError(f"weight must be positive, got {weight}")
            phi = float(wrap_angle(phi))
            for slot in merged:
                if max(abs(slot[0] - x), angular_distance(slot[1], phi)) < ATOM_MERGE_TOL:
                    slot[2] += weight
                    break
            else:
                merged.append([x, phi, weight])
        return cls(tuple(Atom(x, phi, w) for x, phi, w in merged))

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def total_mass(self) -> float:
        return float(sum(a.weight for a in self.atoms))

    @property
    def xs(self) -> np.ndarray:
        return np.array([a.x for a in self.atoms], dtype=float)

    @property
    def phis(self) -> np.ndarray:
        return np.array([a.phi for a in self.atoms], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([a.weight for a in self.atoms], dtype=float)


@dataclass(frozen=True)
class MomentTable:
    """Dense rectangle of moments; entry (m, n) lives at data[m, n + 2*max_freq]."""

    max_power: int
    max_freq: int
    data: np.ndarray

    def __post_init__(self):
        if self.max_power < 1 or self.max_freq < 0:
            raise DomainError(
                f"window must have max_power >= 1 and max_freq >= 0, got "
                f"({self.max_power}, {self.max_freq})"
            )
        expected = (2 * self.max_power + 1, 4 * self.max_freq + 1)
        if self.data.shape != expected:
            raise DomainError(
                f"table storage shape {self.data.shape} != {expected}"
            )
        self.data.setflags(write=False)

    @classmethod
    def from_values(cls, max_power: int, max_freq: int,
                    values: Mapping[tuple[int, int], complex]) -> "MomentTable":
        """Build from a total map over the stored rectangle; holes are rejected."""
        data = np.full((2 * max_power + 1, 4 * max_freq + 1), np.nan, dtype=complex)
        for (m, n), v in values.items():
            if not (0 <= m <= 2 * max_power and abs(n) <= 2 * max_freq):
                raise DomainError(f"moment index ({m}, {n}) outside declared rectangle")
            data[m, n + 2 * max_freq] = complex(v)
        if np.isnan(data).any():
            holes = [(m, n - 2 * max_freq) for m, n in zip(*np.where(np.isnan(data)))]
            raise DomainError(f"moment table has holes, first at {holes[0]}")
        return cls(max_power, max_freq, data)

    def value(self, m: int, n: int) -> complex:
        if not (0 <= m <= 2 * self.max_power and abs(n) <= 2 * self.max_freq):
            raise IndexOutOfWindowError(m, n, self.max_power, self.max_freq)
        return complex(self.data[m, n + 2 * self.max_freq])

    def indices(self) -> Iterator[MomentIndex]:
        for m in range(2 * self.max_power + 1):
            for n in range(-2 * self.max_freq, 2 * self.max_freq + 1):
                yield MomentIndex(m, n)

    @property
    def max_abs(self) -> float:
        return float(np.abs(self.data).max())


def compute_moments(measure: AtomicMeasure, max_power: int, max_freq: int) -> MomentTable:
    """Forward moments of an atomic measure over the stored rectangle.

    s(m, n) = sum_j w_j x_j^m exp(i n phi_j) for 0 <= m <= 2*max_power and
    |n| <= 2*max_freq.
    """
    if max_power < 1 or max_freq < 0:
        raise DomainError("need max_power >= 1 and max_freq >= 0")
    if len(measure) == 0:
        raise DomainError("measure must contain at least one atom")
    xs, phis, ws = measure.xs, measure.phis, measure.weights
    ms = np.arange(2 * max_power + 1)
    ns = np.arange(-2 * max_freq, 2 * max_freq + 1)
    powers = xs[None, :] ** ms[:, None]            # (2M+1, k)
    phases = np.exp(1j * np.outer(ns, phis))        # (4N+1, k)
    data = np.einsum("mk,nk,k->mn", powers.astype(complex), phases, ws)
    return MomentTable(max_power, max_freq, data)


def kernel_value(table: MomentTable, t: MomentIndex, r: MomentIndex) -> complex:
    """Kernel K(t, r) = s(m+k, n-l) for t=(m,n), r=(k,l)."""
    return table.value(t[0] + r[0], t[1] - r[1])


@dataclass(frozen=True)
class Violation:
    invariant: str
    index: tuple[int, int]
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_table(table: MomentTable, tol: float = 1e-10) -> ValidationReport:
    """Check the table invariants entrywise to an absolute tolerance.

    Violations are data, not errors: finiteness, conjugate symmetry
    s(m,-n) = conj(s(m,n)) (reported once per pair, at n > 0), and
    s(0,0) real and nonnegative.
    """
    out: list[Violation] = []
    nf = table.max_freq
    for m, n in table.indices():
        v = table.data[m, n + 2 * nf]
        if not np.isfinite(v.real) or not np.isfinite(v.imag):
            out.append(Violation("finite", (m, n), f"value {v} is not finite"))
    for m in range(2 * table.max_power + 1):
        for n in range(1, 2 * nf + 1):
            a = table.data[m, n + 2 * nf]
            b = table.data[m, -n + 2 * nf]
            gap = abs(b - np.conj(a))
            if gap > tol:
                out.append(Violation(
                    "conjugate-symmetry", (m, n),
                    f"|s(m,-n) - conj(s(m,n))| = {gap:.3e} > {tol:.0e}"))
    s00 = table.data[0, 2 * nf]
    if abs(s00.imag) > tol:
        out.append(Violation("mass-real", (0, 0),
                             f"Im s(0,0) = {s00.imag:.3e} exceeds {tol:.0e}"))
    if s00.real < -tol:
        out.append(Violation("mass-nonnegative", (0, 0),
                             f"s(0,0) = {s00.real:.3e} is negative"))
    return ValidationReport(tuple(out))

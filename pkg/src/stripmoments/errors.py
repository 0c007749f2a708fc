"""Exception hierarchy for the strip-moment toolkit.

Errors carry the diagnostics they were raised with (residuals, ranks,
eigenvalues) so the CLI can render them and tests can assert on them.
"""

from __future__ import annotations


class StripMomentError(Exception):
    """Base class for every error raised by this package."""


class InputError(StripMomentError):
    """Malformed file, flag, or argument."""


class DomainError(StripMomentError):
    """Mathematically invalid input (empty measure, bad weight, bad window)."""


class IndexOutOfWindowError(DomainError):
    """A (power, frequency) index left the stored rectangle."""

    def __init__(self, m: int, n: int, max_power: int, max_freq: int):
        self.index = (m, n)
        super().__init__(
            f"index (m={m}, n={n}) outside stored rectangle "
            f"[0, {2 * max_power}] x [-{2 * max_freq}, {2 * max_freq}]"
        )


class NotPositiveError(StripMomentError):
    """The Gram matrix is not positive semidefinite."""

    def __init__(self, min_eigenvalue: float):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(
            f"Gram matrix is not positive semidefinite "
            f"(min eigenvalue {min_eigenvalue:.6e})"
        )


class ComputationError(StripMomentError):
    """A numerical routine failed or produced an untrustworthy result."""


class RankAmbiguityError(ComputationError):
    """A numeric rank decision is tolerance-sensitive."""

    def __init__(self, kept: float, dropped: float):
        self.kept = kept
        self.dropped = dropped
        super().__init__(
            f"rank decision ambiguous: smallest kept singular value {kept:.3e} "
            f"vs largest dropped {dropped:.3e} (gap ratio below 10)"
        )


class IllDefinedError(ComputationError):
    """A shift/conjugation fit is inconsistent with the table.

    For PSD tables the defining constraints are always consistent, so this
    signals numerical breakdown or a corrupted table.
    """

    def __init__(self, operator: str, residual: float, threshold: float):
        self.operator = operator
        self.residual = residual
        self.threshold = threshold
        super().__init__(
            f"{operator} is not well defined on this data: "
            f"fit residual {residual:.3e} > {threshold:.0e}"
        )


class NotSaturatedError(StripMomentError):
    """The frequency-shift source span does not cover the embedding space."""

    def __init__(self, source_rank: int, full_rank: int):
        self.source_rank = source_rank
        self.full_rank = full_rank
        super().__init__(
            f"frequency shift underdetermined: source span has rank "
            f"{source_rank} < {full_rank}; the window is too small in "
            f"max_freq to determine a unique unitary shift"
        )


class IsometryViolationError(ComputationError):
    """Pre-correction isometry defect of the frequency shift is too large."""

    def __init__(self, defect: float, threshold: float):
        self.defect = defect
        self.threshold = threshold
        super().__init__(
            f"frequency shift isometry defect {defect:.3e} exceeds "
            f"{threshold:.0e} before polar correction"
        )


class ValidationFailedError(StripMomentError):
    """A validation residual exceeded its threshold."""

    def __init__(self, name: str, value: float, threshold: float, record=None):
        self.name = name
        self.value = value
        self.threshold = threshold
        self.record = dict(record) if record else {}
        super().__init__(
            f"validation failed: {name} = {value:.3e} > {threshold:.0e}"
        )


class ReductionFailedError(ValidationFailedError):
    """The frequency shift does not reduce the deficiency subspaces.

    The finite window cannot support the commuting-extension construction;
    a larger window may.
    """


class CommutationFailedError(ValidationFailedError):
    """A required commutation residual exceeded its threshold."""


class OnePointSpectrumError(StripMomentError):
    """The assembled unitary has 1 in its numerical point spectrum."""

    def __init__(self, gap: float, parameter: str = ""):
        self.gap = gap
        self.parameter = parameter
        suffix = f" (parameter {parameter})" if parameter else ""
        super().__init__(
            f"assembled unitary has an eigenvalue within {gap:.3e} of 1"
            f"{suffix}; re-parameterize (try another seed)"
        )


class ClusterAmbiguityError(StripMomentError):
    """Two eigenvalue clusters are separated by less than 10x the tolerance."""

    def __init__(self, gap: float, tol: float):
        self.gap = gap
        self.tol = tol
        super().__init__(
            f"eigenvalue cluster separation {gap:.3e} is between tol "
            f"({tol:.0e}) and 10*tol; choose the clustering tolerance explicitly"
        )


class CommutationTooLargeError(StripMomentError):
    """Joint diagonalization input pair does not commute within tolerance."""

    def __init__(self, residual: float, threshold: float):
        self.residual = residual
        self.threshold = threshold
        super().__init__(
            f"commutator norm {residual:.3e} > {threshold:.3e}; "
            f"the pair cannot be jointly diagonalized"
        )


class DeficientDomainError(StripMomentError):
    """A quasiself-adjoint extension's domain does not fill the space."""

    def __init__(self, missing: int):
        self.missing = missing
        super().__init__(
            f"extension domain is rank-deficient by {missing}; the parameter "
            f"has 1 in its spectrum relative to the identified bases"
        )


class SingularPencilError(StripMomentError):
    """Resolvent pencil is numerically singular at the requested point."""

    def __init__(self, condition: float):
        self.condition = condition
        super().__init__(
            f"resolvent pencil condition {condition:.3e} > 1e12; the point is "
            f"too close to the real axis or to a spectral point"
        )

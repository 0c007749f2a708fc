"""Numerical toolkit for mixed power-trigonometric moment problems on the
strip R x [-pi, pi): solvability checks, operator models, commuting
self-adjoint extensions, atomic solution synthesis, and generalized
resolvent probes.
"""

from .extension import (
    ConjugationPair,
    DeficiencyData,
    ExtensionData,
    assemble_extension,
    build_U24,
    cayley_decompose,
    enumerate_commutant_unitaries,
    godic_lucenko_factor,
    verify_reduction,
)
from .gns import GnsSpace, IndexWindow, build_gram, build_space, check_positivity, factorize
from .moments import (
    Atom,
    AtomicMeasure,
    MomentIndex,
    MomentTable,
    compute_moments,
    kernel_value,
    validate_table,
)
from .operators import (
    AntilinearOperator,
    OperatorSystem,
    PartialOperator,
    build_conjugation_J,
    build_shift_A,
    build_shift_B,
    build_system,
    validate_system,
)
from .resolvent import (
    ContractionParameter,
    QuasiExtension,
    build_quasi_extension,
    generalized_resolvent,
    resolvent_moment_check,
)
from .spectral import (
    JointSpectrum,
    SolutionMeasure,
    canonical_family,
    joint_diagonalize,
    measure_distance,
    synthesize_solution,
    verify_solution,
)

__version__ = "0.1.0"

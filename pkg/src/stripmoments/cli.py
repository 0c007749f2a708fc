"""Command-line front end: gen, check, solve, verify, probe.

Stable JSON on stdout, diagnostics on stderr, and a fixed exit-code
contract for scripting:

    0  success
    1  mathematical negative (not PSD, verification failed)
    2  input error
    3  solvable but needs different parameters (unsaturated window,
       non-reducing window, eigenvalue-1 collision, ambiguous clustering)

Identical inputs and seeds produce byte-identical output files.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import (
    ClusterAmbiguityError,
    DeficientDomainError,
    DomainError,
    InputError,
    NotPositiveError,
    NotSaturatedError,
    OnePointSpectrumError,
    ReductionFailedError,
    SingularPencilError,
    StripMomentError,
)
from .extension import (
    build_U24,
    cayley_decompose,
    enumerate_commutant_unitaries,
    godic_lucenko_factor,
    verify_reduction,
)
from .gns import build_gram, build_space, check_positivity
from .moments import MomentTable, compute_moments, validate_table
from .operators import build_system
from .resolvent import (
    ContractionParameter,
    adjoint_symmetry_residual,
    commutation_residual,
    generalized_resolvent,
    resolvent_moment_check,
    resolvent_norm_bound_residual,
)
from .spectral import canonical_family, measure_distance, verify_solution

DEFAULT_VERIFY_TOL = 1e-8
DEFAULT_RANK_TOL = 1e-10


def _print_json(doc) -> None:
    sys.stdout.write(io.canonical_json(doc))


def _warn(message: str) -> None:
    sys.stderr.write(message + "\n")


# ---------------------------------------------------------------- commands


def run_gen(args) -> int:
    measure = io.load_measure(args.measure)
    table = compute_moments(measure, args.max_power, args.max_freq)
    io.dump_table(table, args.output)
    _print_json({
        "written": str(args.output),
        "max_power": table.max_power,
        "max_freq": table.max_freq,
        "atoms": len(measure),
        "total_mass": measure.total_mass,
    })
    return 0


def run_check(args) -> int:
    table = io.load_table(args.input)
    report = validate_table(table, args.tol)
    if not report.ok:
        v = report.violations[0]
        raise InputError(
            f"table invalid: {v.invariant} violated at index {v.index}: {v.detail}")
    gram = build_gram(table, validate_tol=args.tol)
    pos = check_positivity(gram, args.rank_tol)
    doc = {
        "is_psd": pos.is_psd,
        "min_eigenvalue": pos.min_eigenvalue,
        "rank": pos.numeric_rank,
        "spectral_norm": pos.spectral_norm,
        "window": {"max_power": table.max_power, "max_freq": table.max_freq,
                   "size": gram.shape[0]},
    }
    if args.spectrum:
        doc["spectrum"] = [float(e) for e in pos.eigenvalues]
    _print_json(doc)
    return 0 if pos.is_psd else 1


def _build_pipeline(table: MomentTable, rank_tol: float):
    gns = build_space(table, rank_tol)
    system = build_system(gns)
    dd = cayley_decompose(system)
    reduction = verify_reduction(system, dd)
    return gns, system, dd, reduction


def _parse_unitary_parameter(spec: str, system, dd):
    """Grammar: identity | seed:<u64> | file:<path> -> (matrix | None, label)."""
    if spec == "identity":
        return None, "identity"
    if spec.startswith("seed:"):
        try:
            seed = int(spec.split(":", 1)[1])
        except ValueError as exc:
            raise InputError(f"bad parameter seed in {spec!r}") from exc
        if seed < 0:
            raise InputError("parameter seed must be nonnegative")
        if dd.defect == 0:
            return None, f"seed:{seed}"
        b2 = dd.b_on_h2(system.b)
        draws = enumerate_commutant_unitaries(b2, 2, seed)
        return draws[1], f"seed:{seed}"
    if spec.startswith("file:"):
        path = spec.split(":", 1)[1]
        mat = io.load_matrix(path)
        if mat.shape != (dd.defect, dd.defect):
            raise InputError(
                f"parameter matrix is {mat.shape}, needs "
                f"({dd.defect}, {dd.defect}) for this table")
        return mat, f"file:{path}"
    raise InputError(
        f"bad --param {spec!r}; expected identity | seed:<u64> | file:<path>")


def _solution_doc(sol, table, dd, seed):
    diagnostics = {
        "fit": sol.fit,
        "dropped_mass": sol.dropped_mass,
        "parameter": sol.parameter,
        "residuals": sol.residuals,
        "defect": dd.defect,
        "seed": seed,
        "window": {"max_power": table.max_power, "max_freq": table.max_freq},
    }
    return io.measure_to_dict(sol.measure, diagnostics)


def _dump_operators(system, dd, path) -> None:
    doc = {
        "rank": system.gns.rank,
        "a_matrix": io.matrix_to_pairs(system.a.matrix),
        "a_domain_indices": [[m, n] for m, n in system.a.domain_indices],
        "b_matrix": io.matrix_to_pairs(system.b),
        "j_matrix": io.matrix_to_pairs(system.j.matrix),
        "x00": io.matrix_to_pairs(system.x00.reshape(1, -1))[0],
        "residuals": system.residuals,
        "diagnostics": system.diagnostics,
        "defect": dd.defect,
    }
    io.atomic_write_text(path, io.canonical_json(doc))


def run_solve(args) -> int:
    table = io.load_table(args.input)
    gns, system, dd, _ = _build_pipeline(table, args.rank_tol)

    if args.param is not None and args.count != 1:
        raise InputError("--param selects a single extension; drop --count")
    parameters = labels = None
    if args.param is not None and dd.defect > 0:
        mat, label = _parse_unitary_parameter(args.param, system, dd)
        parameters = [np.eye(dd.defect, dtype=complex) if mat is None else mat]
        labels = [label]

    solutions = canonical_family(system, dd, args.count, args.seed, table,
                                 parameters=parameters, labels=labels)

    out = Path(args.output)
    written = []
    if len(solutions) == 1 and args.count == 1:
        io.atomic_write_text(out, io.canonical_json(
            _solution_doc(solutions[0], table, dd, args.seed)))
        written.append(str(out))
    else:
        out.mkdir(parents=True, exist_ok=True)
        for i, sol in enumerate(solutions):
            path = out / f"solution_{i:03d}.json"
            io.atomic_write_text(path, io.canonical_json(
                _solution_doc(sol, table, dd, args.seed)))
            written.append(str(path))
        def dist(a, b):
            d = measure_distance(a.measure, b.measure)
            return d if np.isfinite(d) else -1.0  # -1 marks unequal atom counts

        pair_dist = [[dist(a, b) for b in solutions] for a in solutions]
        summary = {
            "defect": dd.defect,
            "count": len(solutions),
            "seed": args.seed,
            "fits": [s.fit for s in solutions],
            "parameters": [s.parameter for s in solutions],
            "pairwise_distance": pair_dist,
            "files": [Path(w).name for w in written],
        }
        io.atomic_write_text(out / "family_summary.json", io.canonical_json(summary))
        written.append(str(out / "family_summary.json"))

    if args.dump_operators:
        op_path = (out / "operators.json") if out.is_dir() \
            else out.with_name(out.name + ".operators.json")
        _dump_operators(system, dd, op_path)
        written.append(str(op_path))

    fits = [s.fit for s in solutions]
    _print_json({
        "written": written,
        "defect": dd.defect,
        "rank": gns.rank,
        "count": len(solutions),
        "max_fit": max(fits),
        "tol": args.tol,
    })
    return 0 if max(fits) <= args.tol else 1


def run_verify(args) -> int:
    table = io.load_table(args.input)
    measure, diagnostics = io.load_solution(args.solution)
    window = diagnostics.get("window", {})
    mp = window.get("max_power")
    nf = window.get("max_freq")
    if isinstance(mp, int) and isinstance(nf, int) and (
            mp < table.max_power or nf < table.max_freq):
        _warn(
            f"warning: solution was produced for window ({mp}, {nf}) but the "
            f"table stores ({table.max_power}, {table.max_freq}); verifying "
            f"on the intersection")
        sub = min(mp, table.max_power), min(nf, table.max_freq)
        values = {}
        for m in range(2 * sub[0] + 1):
            for n in range(-2 * sub[1], 2 * sub[1] + 1):
                values[(m, n)] = table.value(m, n)
        table = MomentTable.from_values(sub[0], sub[1], values)
    result = verify_solution(table, measure, args.tol)
    worst = sorted(result.per_index.items(), key=lambda kv: -kv[1])[:10]
    _print_json({
        "pass": result.ok,
        "max_residual": result.max_residual,
        "tol": args.tol,
        "num_indices": len(result.per_index),
        "worst": [{"m": m, "n": n, "residual": v} for (m, n), v in worst],
    })
    return 0 if result.ok else 1


def _parse_contraction(spec: str, system, dd):
    """Grammar: canonical[:seed] | zero | scale:<t> | file:<path>."""
    d = dd.defect

    def canonical_matrix(u2=None):
        if d == 0:
            return np.zeros((0, 0), dtype=complex)
        b2 = dd.b_on_h2(system.b)
        pair = godic_lucenko_factor(b2)
        u24 = build_U24(system.j, pair.k, dd, system.b)
        base = dd.h4.conj().T @ u24 @ dd.h2
        return base if u2 is None else base @ u2

    if spec == "canonical" or spec.startswith("canonical:"):
        u2 = None
        label = "canonical"
        if spec.startswith("canonical:"):
            try:
                seed = int(spec.split(":", 1)[1])
            except ValueError as exc:
                raise InputError(f"bad contraction seed in {spec!r}") from exc
            if d > 0:
                u2 = enumerate_commutant_unitaries(dd.b_on_h2(system.b), 2, seed)[1]
            label = f"canonical:{seed}"
        return ContractionParameter.create(
            canonical_matrix(u2), system, dd, description=label)
    if spec == "zero":
        return ContractionParameter.create(
            np.zeros((d, d), dtype=complex), system, dd, description="zero")
    if spec.startswith("scale:"):
        try:
            t = float(spec.split(":", 1)[1])
        except ValueError as exc:
            raise InputError(f"bad scale factor in {spec!r}") from exc
        if not 0.0 <= t <= 1.0:
            raise InputError("scale factor must lie in [0, 1]")
        return ContractionParameter.create(
            t * canonical_matrix(), system, dd, description=f"scale:{t:g}")
    if spec.startswith("file:"):
        path = spec.split(":", 1)[1]
        mat = io.load_matrix(path)
        if mat.shape != (d, d):
            raise InputError(
                f"contraction matrix is {mat.shape}, needs ({d}, {d})")
        return ContractionParameter.create(mat, system, dd,
                                           description=f"file:{path}")
    raise InputError(
        f"bad --contraction {spec!r}; expected canonical[:seed] | zero | "
        f"scale:<t> | file:<path>")


def run_probe(args) -> int:
    try:
        re, im = (float(p) for p in args.z.split(","))
    except ValueError as exc:
        raise InputError("--z expects 're,im'") from exc
    z = complex(re, im)
    if z.imag == 0.0:
        raise InputError("z must be non-real")

    table = io.load_table(args.input)
    _, system, dd, _ = _build_pipeline(table, args.rank_tol)
    contraction = _parse_contraction(args.contraction, system, dd)

    r_z = generalized_resolvent(system, dd, contraction, z)
    record = {
        "z": {"re": z.real, "im": z.imag},
        "contraction": contraction.description,
        "contraction_norm": contraction.norm,
        "defect": dd.defect,
        "norm_bound_residual": resolvent_norm_bound_residual(r_z, z),
        "adjoint_symmetry_residual": adjoint_symmetry_residual(
            system, dd, contraction, z),
        "b_commutation_residual": commutation_residual(system, dd, contraction, z),
    }
    checked = [record["norm_bound_residual"],
               record["adjoint_symmetry_residual"],
               record["b_commutation_residual"]]
    if args.measure is not None:
        measure = io.load_measure(args.measure)
        try:
            m1, m2, n1, n2 = (int(p) for p in args.indices.split(","))
        except ValueError as exc:
            raise InputError("--indices expects 'm1,m2,n1,n2'") from exc
        residual = resolvent_moment_check(system, dd, contraction, z,
                                          m1, m2, n1, n2, measure)
        record["moment_check"] = {
            "indices": [m1, m2, n1, n2],
            "residual": residual,
        }
        checked.append(residual)
    record["tol"] = args.tol
    record["pass"] = bool(max(checked) <= args.tol)
    _print_json(record)
    return 0 if record["pass"] else 1


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stripmoments",
        description="Moment problems on the strip R x [-pi, pi): generate, "
                    "check solvability, solve, verify, probe resolvents.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="compute the moment table of a measure file")
    p.add_argument("--measure", required=True, help="measure JSON path")
    p.add_argument("--max-power", type=int, required=True,
                   help="window power bound M (stores powers up to 2M)")
    p.add_argument("--max-freq", type=int, required=True,
                   help="window frequency bound N (stores |n| up to 2N)")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=run_gen)

    p = sub.add_parser("check", help="solvability: Gram positivity over the window")
    p.add_argument("input", help="moment table JSON path")
    p.add_argument("--tol", type=float, default=1e-10,
                   help="table validation tolerance (absolute)")
    p.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL,
                   help="relative PSD/rank threshold")
    p.add_argument("--spectrum", action="store_true",
                   help="include the full Gram spectrum in the output")
    p.set_defaults(func=run_check)

    p = sub.add_parser("solve", help="synthesize canonical atomic solutions")
    p.add_argument("input", help="moment table JSON path")
    p.add_argument("--count", type=int, default=1,
                   help="number of family members (defect 0 always yields 1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--param", default=None,
                   help="extension parameter: identity | seed:<u64> | file:<path>")
    p.add_argument("--tol", type=float, default=DEFAULT_VERIFY_TOL,
                   help="verification tolerance for emitted solutions")
    p.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
    p.add_argument("--dump-operators", action="store_true",
                   help="also write the operator system as JSON")
    p.add_argument("-o", "--output", required=True,
                   help="output file (count=1) or directory")
    p.set_defaults(func=run_solve)

    p = sub.add_parser("verify", help="check a solution file against a table")
    p.add_argument("input", help="moment table JSON path")
    p.add_argument("solution", help="solution/measure JSON path")
    p.add_argument("--tol", type=float, default=DEFAULT_VERIFY_TOL)
    p.set_defaults(func=run_verify)

    p = sub.add_parser("probe", help="generalized resolvent properties at a point")
    p.add_argument("input", help="moment table JSON path")
    p.add_argument("--z", required=True, help="resolvent point as 're,im'")
    p.add_argument("--contraction", required=True,
                   help="canonical[:seed] | zero | scale:<t> | file:<path>")
    p.add_argument("--indices", default="0,0,0,0",
                   help="moment-identity split 'm1,m2,n1,n2' (with --measure)")
    p.add_argument("--measure", default=None,
                   help="solution measure for the moment-resolvent identity")
    p.add_argument("--tol", type=float, default=DEFAULT_VERIFY_TOL)
    p.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
    p.set_defaults(func=run_probe)
    return parser


_HINTS = {
    NotSaturatedError: "increase the table's max_freq window so the "
                       "frequency shift is determined",
    OnePointSpectrumError: "try another --seed or --param",
    ReductionFailedError: "this window cannot support the commuting-extension "
                          "construction; regenerate the table with a larger "
                          "max_power/max_freq",
    ClusterAmbiguityError: "re-run with an explicit clustering tolerance",
    DeficientDomainError: "try another contraction parameter",
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NotPositiveError as exc:
        _warn(f"error: {exc}")
        return 1
    except (NotSaturatedError, OnePointSpectrumError, ReductionFailedError,
            ClusterAmbiguityError, DeficientDomainError) as exc:
        _warn(f"error: {exc}")
        _warn(f"hint: {_HINTS[type(exc)]}")
        return 3
    except SingularPencilError as exc:
        _warn(f"error: {exc}")
        return 2
    except (InputError, DomainError) as exc:
        _warn(f"error: {exc}")
        return 2
    except StripMomentError as exc:
        _warn(f"error: {type(exc).__name__}: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())

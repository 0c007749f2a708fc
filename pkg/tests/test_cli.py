"""CLI behavior: exit codes, JSON output, determinism, file formats."""

from __future__ import annotations

import json

import numpy as np
import pytest

from stripmoments.cli import main
from stripmoments.io import (
    atomic_write_text,
    canonical_json,
    dump_measure,
    dump_table,
    load_table,
)
from stripmoments.moments import AtomicMeasure, MomentTable, compute_moments


@pytest.fixture
def workdir(tmp_path):
    measure = AtomicMeasure.create([(0.0, 0.0, 1.0), (1.0, 0.0, 1.0), (2.0, 0.0, 1.0)])
    dump_measure(measure, tmp_path / "measure.json")
    table = compute_moments(measure, 2, 0)
    dump_table(table, tmp_path / "m.json")
    return tmp_path


def run(*argv):
    return main([str(a) for a in argv])


class TestGen:
    def test_roundtrip(self, tmp_path, capsys):
        dump_measure(AtomicMeasure.create([(2.0, np.pi / 2, 1.0)]),
                     tmp_path / "one.json")
        rc = run("gen", "--measure", tmp_path / "one.json",
                 "--max-power", 1, "--max-freq", 1, "-o", tmp_path / "t.json")
        assert rc == 0
        table = load_table(tmp_path / "t.json")
        assert table.value(1, 1) == pytest.approx(2j)

    def test_empty_measure_exit_2(self, tmp_path, capsys):
        (tmp_path / "empty.json").write_text('{"atoms": []}')
        rc = run("gen", "--measure", tmp_path / "empty.json",
                 "--max-power", 1, "--max-freq", 0, "-o", tmp_path / "t.json")
        assert rc == 2
        assert "at least one atom" in capsys.readouterr().err

    def test_negative_weight_exit_2(self, tmp_path, capsys):
        (tmp_path / "bad.json").write_text(
            '{"atoms": [{"x": 0.0, "phi": 0.0, "weight": -1.0}]}')
        rc = run("gen", "--measure", tmp_path / "bad.json",
                 "--max-power", 1, "--max-freq", 0, "-o", tmp_path / "t.json")
        assert rc == 2
        assert "weight must be positive" in capsys.readouterr().err


class TestCheck:
    def test_generated_table_is_psd(self, workdir, capsys):
        rc = run("check", workdir / "m.json")
        assert rc == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["is_psd"] is True
        assert doc["rank"] == 3

    def test_indefinite_table_exit_1(self, tmp_path, capsys):
        values = {(0, 0): 1.0, (1, 0): 3.0, (2, 0): 1.0}
        table = MomentTable.from_values(1, 0, {k: complex(v) for k, v in values.items()})
        dump_table(table, tmp_path / "bad.json")
        rc = run("check", tmp_path / "bad.json")
        assert rc == 1
        doc = json.loads(capsys.readouterr().out)
        assert doc["min_eigenvalue"] == pytest.approx(-2.0)

    def test_missing_entry_exit_2(self, tmp_path, capsys):
        doc = {"max_power": 1, "max_freq": 0,
               "moments": [{"m": 0, "n": 0, "re": 1.0, "im": 0.0},
                           {"m": 1, "n": 0, "re": 0.5, "im": 0.0}]}
        (tmp_path / "holes.json").write_text(json.dumps(doc))
        assert run("check", tmp_path / "holes.json") == 2

    def test_duplicate_entry_exit_2(self, tmp_path):
        rec = {"m": 0, "n": 0, "re": 1.0, "im": 0.0}
        doc = {"max_power": 1, "max_freq": 0, "moments": [rec, rec, rec]}
        (tmp_path / "dup.json").write_text(json.dumps(doc))
        assert run("check", tmp_path / "dup.json") == 2

    def test_spectrum_flag(self, workdir, capsys):
        rc = run("check", workdir / "m.json", "--spectrum")
        assert rc == 0
        doc = json.loads(capsys.readouterr().out)
        assert len(doc["spectrum"]) == 3


class TestSolve:
    def test_single_atom_solution_matches_generator(self, tmp_path, capsys):
        dump_measure(AtomicMeasure.create([(1.3, -0.4, 0.8)]), tmp_path / "g.json")
        assert run("gen", "--measure", tmp_path / "g.json", "--max-power", 2,
                   "--max-freq", 1, "-o", tmp_path / "t.json") == 0
        rc = run("solve", tmp_path / "t.json", "-o", tmp_path / "sol.json")
        assert rc == 0
        doc = json.loads((tmp_path / "sol.json").read_text())
        assert len(doc["atoms"]) == 1
        assert doc["atoms"][0]["x"] == pytest.approx(1.3, abs=1e-9)
        assert doc["atoms"][0]["phi"] == pytest.approx(-0.4, abs=1e-9)
        assert doc["atoms"][0]["weight"] == pytest.approx(0.8, abs=1e-9)

    def test_family_run_with_summary(self, workdir, capsys):
        rc = run("solve", workdir / "m.json", "--count", 3, "--seed", 7,
                 "-o", workdir / "fam")
        assert rc == 0
        files = sorted(p.name for p in (workdir / "fam").iterdir())
        assert files == ["family_summary.json", "solution_000.json",
                         "solution_001.json", "solution_002.json"]
        summary = json.loads((workdir / "fam" / "family_summary.json").read_text())
        assert summary["defect"] == 1
        dist = np.array(summary["pairwise_distance"])
        assert (dist > 1e-6).sum() >= 2  # off-diagonal distinct pairs exist

    def test_param_identity_single(self, workdir):
        rc = run("solve", workdir / "m.json", "--param", "identity",
                 "-o", workdir / "sol.json")
        assert rc == 0
        doc = json.loads((workdir / "sol.json").read_text())
        assert doc["diagnostics"]["parameter"] == "identity"

    def test_param_with_count_conflicts(self, workdir):
        rc = run("solve", workdir / "m.json", "--param", "identity",
                 "--count", 2, "-o", workdir / "sol.json")
        assert rc == 2

    def test_param_seed_differs_from_identity(self, workdir):
        assert run("solve", workdir / "m.json", "--param", "identity",
                   "-o", workdir / "a.json") == 0
        assert run("solve", workdir / "m.json", "--param", "seed:5",
                   "-o", workdir / "b.json") == 0
        a = json.loads((workdir / "a.json").read_text())
        b = json.loads((workdir / "b.json").read_text())
        ax = sorted(atom["x"] for atom in a["atoms"])
        bx = sorted(atom["x"] for atom in b["atoms"])
        assert max(abs(p - q) for p, q in zip(ax, bx)) > 1e-6

    def test_dump_operators(self, workdir):
        rc = run("solve", workdir / "m.json", "--dump-operators",
                 "-o", workdir / "sol.json")
        assert rc == 0
        dumped = json.loads((workdir / "sol.json.operators.json").read_text())
        assert dumped["rank"] == 3
        assert dumped["defect"] == 1
        assert len(dumped["a_matrix"]) == 3

    def test_not_psd_exit_1(self, tmp_path):
        table = MomentTable.from_values(
            1, 0, {(0, 0): 1 + 0j, (1, 0): 3 + 0j, (2, 0): 1 + 0j})
        dump_table(table, tmp_path / "bad.json")
        assert run("solve", tmp_path / "bad.json", "-o", tmp_path / "out.json") == 1

    def test_unsaturated_exit_3(self, tmp_path, capsys):
        rng = np.random.default_rng(1)
        atoms = [(rng.uniform(-3, 3), rng.uniform(-np.pi, np.pi), 1.0)
                 for _ in range(6)]
        dump_measure(AtomicMeasure.create(atoms), tmp_path / "g.json")
        assert run("gen", "--measure", tmp_path / "g.json", "--max-power", 1,
                   "--max-freq", 1, "-o", tmp_path / "t.json") == 0
        rc = run("solve", tmp_path / "t.json", "-o", tmp_path / "out.json")
        assert rc == 3
        assert "max_freq" in capsys.readouterr().err

    def test_nonreducing_window_exit_3(self, tmp_path, capsys):
        rng = np.random.default_rng(5)
        atoms = [(rng.uniform(-3, 3), rng.uniform(-np.pi, np.pi),
                  rng.uniform(0.1, 2)) for _ in range(4)]
        dump_measure(AtomicMeasure.create(atoms), tmp_path / "g.json")
        assert run("gen", "--measure", tmp_path / "g.json", "--max-power", 1,
                   "--max-freq", 1, "-o", tmp_path / "t.json") == 0
        rc = run("solve", tmp_path / "t.json", "-o", tmp_path / "out.json")
        assert rc == 3
        assert "window" in capsys.readouterr().err


class TestVerify:
    def test_solution_verifies(self, workdir):
        assert run("solve", workdir / "m.json", "-o", workdir / "sol.json") == 0
        assert run("verify", workdir / "m.json", workdir / "sol.json") == 0

    def test_perturbed_solution_fails(self, workdir, capsys):
        assert run("solve", workdir / "m.json", "-o", workdir / "sol.json") == 0
        capsys.readouterr()
        doc = json.loads((workdir / "sol.json").read_text())
        doc["atoms"][0]["x"] += 1e-3
        (workdir / "tampered.json").write_text(json.dumps(doc))
        rc = run("verify", workdir / "m.json", workdir / "tampered.json")
        assert rc == 1
        out = json.loads(capsys.readouterr().out)
        assert out["pass"] is False
        # sensitivity grows with the power, so the worst index sits at high m
        assert out["worst"][0]["m"] >= 2

    def test_window_intersection_warning(self, workdir, tmp_path, capsys):
        assert run("solve", workdir / "m.json", "-o", workdir / "sol.json") == 0
        measure = AtomicMeasure.create([(0.0, 0.0, 1.0), (1.0, 0.0, 1.0),
                                        (2.0, 0.0, 1.0)])
        dump_table(compute_moments(measure, 3, 0), tmp_path / "bigger.json")
        rc = run("verify", tmp_path / "bigger.json", workdir / "sol.json")
        err = capsys.readouterr().err
        assert "intersection" in err
        assert rc == 0

    def test_io_error_exit_2(self, workdir):
        assert run("verify", workdir / "m.json", workdir / "nope.json") == 2


class TestProbe:
    def test_canonical_with_measure(self, workdir, capsys):
        assert run("solve", workdir / "m.json", "-o", workdir / "sol.json") == 0
        capsys.readouterr()
        rc = run("probe", workdir / "m.json", "--z", "0,1",
                 "--contraction", "canonical", "--measure", workdir / "sol.json")
        assert rc == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["moment_check"]["residual"] <= 1e-8

    def test_scale_contraction(self, workdir, capsys):
        rc = run("probe", workdir / "m.json", "--z", "0,1",
                 "--contraction", "scale:0.5")
        assert rc == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["norm_bound_residual"] <= 1e-8
        assert doc["adjoint_symmetry_residual"] <= 1e-8

    def test_real_z_exit_2(self, workdir, capsys):
        rc = run("probe", workdir / "m.json", "--z", "0,0", "--contraction", "zero")
        assert rc == 2
        assert "non-real" in capsys.readouterr().err

    def test_file_contraction(self, workdir, tmp_path):
        mat = [[[0.5, 0.0]]]
        (tmp_path / "c.json").write_text(json.dumps(mat))
        rc = run("probe", workdir / "m.json", "--z", "0,1",
                 "--contraction", f"file:{tmp_path / 'c.json'}")
        assert rc == 0

    def test_bad_contraction_spec(self, workdir):
        assert run("probe", workdir / "m.json", "--z", "0,1",
                   "--contraction", "nonsense") == 2


class TestDeterminism:
    def test_identical_runs_byte_identical(self, tmp_path):
        measure = AtomicMeasure.create(
            [(0.0, 0.0, 1.0), (1.0, 0.0, 1.0), (2.0, 0.0, 1.0)])
        for d in ("a", "b"):
            base = tmp_path / d
            base.mkdir()
            dump_measure(measure, base / "g.json")
            assert run("gen", "--measure", base / "g.json", "--max-power", 2,
                       "--max-freq", 0, "-o", base / "t.json") == 0
            assert run("solve", base / "t.json", "--count", 3, "--seed", 7,
                       "-o", base / "fam") == 0
        for name in ("t.json", "fam/family_summary.json", "fam/solution_000.json",
                     "fam/solution_001.json", "fam/solution_002.json"):
            a = (tmp_path / "a" / name).read_bytes()
            b = (tmp_path / "b" / name).read_bytes()
            assert a == b, f"{name} differs between identical runs"


class TestCanonicalJson:
    def test_sorted_keys_and_17_digits(self):
        text = canonical_json({"b": 1 / 3, "a": 1})
        assert text.index('"a"') < text.index('"b"')
        assert "0.33333333333333331" in text

    def test_atomic_write(self, tmp_path):
        target = tmp_path / "x.json"
        atomic_write_text(target, "hello\n")
        assert target.read_text() == "hello\n"
        assert list(tmp_path.iterdir()) == [target]

"""Moment computation, kernel access, table validation, measure ingestion."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stripmoments.errors import DomainError, IndexOutOfWindowError
from stripmoments.moments import (
    Atom,
    AtomicMeasure,
    MomentIndex,
    MomentTable,
    compute_moments,
    kernel_value,
    validate_table,
)


def table_of(atoms, max_power, max_freq):
    return compute_moments(AtomicMeasure.create(atoms), max_power, max_freq)


class TestComputeMoments:
    def test_unit_atom_all_ones(self):
        t = table_of([(1.0, 0.0, 1.0)], 1, 1)
        for m, n in t.indices():
            assert t.value(m, n) == pytest.approx(1.0)

    def test_atom_at_origin(self):
        t = table_of([(0.0, 0.0, 1.0)], 2, 1)
        for m, n in t.indices():
            expected = 1.0 if m == 0 else 0.0
            assert t.value(m, n) == pytest.approx(expected)

    def test_symmetric_pair_cancels_odd_powers(self):
        t = table_of([(1.0, 0.0, 0.5), (-1.0, 0.0, 0.5)], 2, 0)
        for m in range(5):
            expected = 1.0 if m % 2 == 0 else 0.0
            assert t.value(m, 0) == pytest.approx(expected)

    def test_quarter_turn_atom(self):
        t = table_of([(2.0, np.pi / 2, 1.0)], 1, 1)
        for m, n in t.indices():
            assert t.value(m, n) == pytest.approx(2.0 ** m * 1j ** n)
        assert t.value(1, 1) == pytest.approx(2j)
        assert t.value(1, -1) == pytest.approx(-2j)

    def test_empty_measure_rejected(self):
        with pytest.raises(DomainError):
            compute_moments(AtomicMeasure.create([]), 1, 0)

    def test_bad_window_rejected(self):
        m = AtomicMeasure.create([(1.0, 0.0, 1.0)])
        with pytest.raises(DomainError):
            compute_moments(m, 0, 0)
        with pytest.raises(DomainError):
            compute_moments(m, 1, -1)

    @given(st.lists(
        st.tuples(st.floats(-3, 3), st.floats(-np.pi, np.pi - 1e-9),
                  st.floats(0.1, 2.0)),
        min_size=1, max_size=5))
    @settings(max_examples=60, deadline=None)
    def test_forward_tables_always_validate(self, atoms):
        t = table_of(atoms, 2, 1)
        report = validate_table(t, 1e-12 * max(1.0, t.max_abs))
        assert report.ok, report.violations

    def test_linearity_of_weighted_union(self):
        rng = np.random.default_rng(3)
        a = [(rng.uniform(-3, 3), rng.uniform(-np.pi, np.pi), rng.uniform(0.1, 2))
             for _ in range(3)]
        b = [(rng.uniform(-3, 3), rng.uniform(-np.pi, np.pi), rng.uniform(0.1, 2))
             for _ in range(2)]
        ta, tb = table_of(a, 2, 2), table_of(b, 2, 2)
        tu = table_of(a + b, 2, 2)
        for m, n in tu.indices():
            combined = ta.value(m, n) + tb.value(m, n)
            assert tu.value(m, n) == pytest.approx(combined, rel=1e-12, abs=1e-12)


class TestMeasureIngestion:
    def test_phase_wrapping(self):
        m = AtomicMeasure.create([(1.0, 3 * np.pi, 1.0)])
        assert -np.pi <= m.atoms[0].phi < np.pi
        assert m.atoms[0].phi == pytest.approx(-np.pi)

    def test_near_duplicates_merge(self):
        m = AtomicMeasure.create([(1.0, 0.5, 1.0), (1.0 + 1e-12, 0.5, 2.0)])
        assert len(m) == 1
        assert m.atoms[0].weight == pytest.approx(3.0)

    def test_wraparound_merge(self):
        m = AtomicMeasure.create([(0.0, -np.pi + 1e-12, 1.0), (0.0, np.pi - 1e-12, 1.0)])
        assert len(m) == 1

    def test_negative_weight_rejected(self):
        with pytest.raises(DomainError):
            AtomicMeasure.create([(0.0, 0.0, -1.0)])

    def test_nonfinite_rejected(self):
        with pytest.raises(DomainError):
            AtomicMeasure.create([(np.inf, 0.0, 1.0)])


class TestKernel:
    def test_kernel_is_shifted_lookup(self):
        t = table_of([(1.0, 0.0, 1.0)], 1, 0)
        assert kernel_value(t, MomentIndex(1, 0), MomentIndex(1, 0)) == pytest.approx(1.0)

    def test_kernel_hermitian_symmetry(self):
        t = table_of([(1.3, 0.7, 0.5), (-0.4, -2.1, 1.5)], 2, 2)
        scale = t.max_abs
        idx = [MomentIndex(m, n) for m in range(3) for n in range(-2, 3)]
        for a in idx:
            for b in idx:
                lhs = kernel_value(t, a, b)
                rhs = np.conj(kernel_value(t, b, a))
                assert abs(lhs - rhs) <= 1e-14 * scale

    def test_quarter_turn_kernel_entry(self):
        t = table_of([(2.0, np.pi / 2, 1.0)], 1, 1)
        assert kernel_value(t, MomentIndex(1, 1), MomentIndex(0, 0)) == pytest.approx(2j)

    def test_out_of_window(self):
        t = table_of([(1.0, 0.0, 1.0)], 1, 0)
        with pytest.raises(IndexOutOfWindowError):
            kernel_value(t, MomentIndex(2, 0), MomentIndex(1, 0))


class TestValidateTable:
    def test_forward_tables_pass_tightly(self):
        t = table_of([(2.5, 1.2, 0.3), (0.1, -0.9, 1.1)], 3, 2)
        assert validate_table(t, 1e-12 * max(1.0, t.max_abs)).ok

    def test_conjugate_symmetry_violation_located(self):
        values = {(m, n): 0j for m in range(3) for n in range(-2, 3)}
        values[(0, 0)] = 1.0 + 0j
        values[(0, 1)] = 1j
        values[(0, -1)] = 1j
        t = MomentTable.from_values(1, 1, values)
        report = validate_table(t, 1e-10)
        bad = [v for v in report.violations if v.invariant == "conjugate-symmetry"]
        assert len(bad) == 1
        assert bad[0].index == (0, 1)

    def test_negative_mass_flagged(self):
        values = {(m, 0): 0j for m in range(3)}
        values[(0, 0)] = -1.0 + 0j
        t = MomentTable.from_values(1, 0, values)
        report = validate_table(t, 1e-10)
        assert any(v.invariant == "mass-nonnegative" and v.index == (0, 0)
                   for v in report.violations)

    def test_holes_rejected_at_construction(self):
        values = {(m, 0): 1.0 + 0j for m in range(3)}
        del values[(1, 0)]
        with pytest.raises(DomainError):
            MomentTable.from_values(1, 0, values)

    def test_table_storage_is_frozen(self):
        t = table_of([(1.0, 0.0, 1.0)], 1, 0)
        with pytest.raises(ValueError):
            t.data[0, 0] = 5.0


def test_atom_dataclass_roundtrip():
    a = Atom(x=1.5, phi=-0.3, weight=2.0)
    m = AtomicMeasure.create([a])
    assert m.atoms[0] == a
    assert m.total_mass == pytest.approx(2.0)

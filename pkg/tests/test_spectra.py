import json
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from weylstab import (
    Cosine,
    EmptySet,
    Grid1D,
    GridMismatch,
    InvalidParameter,
    SpectrumReport,
    build_matrix,
    builtin_field,
    edge_drift,
    hausdorff,
    perturb,
    spectrum,
    symbol_sum,
    trig_poly_xi,
)
from weylstab.spectra import default_gap_tol

finite_sets = st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=50)


def brute_hausdorff(A, B):
    D = np.abs(np.subtract.outer(np.asarray(A, float), np.asarray(B, float)))
    return max(D.min(axis=1).max(), D.min(axis=0).max())


def test_diagonal_example():
    r = spectrum(np.diag([3.0, 1.0, 2.0]), gap_tol=0.5)
    assert list(r.eigenvalues) == [1.0, 2.0, 3.0]
    assert (r.edge_minus, r.edge_plus) == (1.0, 3.0)
    assert r.gaps == [(1.0, 2.0), (2.0, 3.0)]


def test_swap_example():
    r = spectrum(np.array([[0.0, 1.0], [1.0, 0.0]]))
    np.testing.assert_allclose(r.eigenvalues, [-1.0, 1.0], atol=1e-15)


def test_tridiagonal_closed_form():
    K = build_matrix(trig_poly_xi([(1.0, 1.0)]), Grid1D(200.0, 400))
    expected = np.sort(np.cos(np.pi * np.arange(1, 401) / 401))
    assert np.max(np.abs(spectrum(K).eigenvalues - expected)) < 1e-10


def test_report_invariants_and_serialization(tmp_path):
    rng = np.random.default_rng(0)
    A = rng.normal(size=(60, 60))
    r = spectrum(A + A.T, gap_tol=0.3)
    ev = r.eigenvalues
    assert np.all(np.diff(ev) >= 0) and r.edge_minus == ev[0] and r.edge_plus == ev[-1]
    for lo, hi in r.gaps:
        assert hi - lo > r.gap_tol
        assert not np.any((ev > lo) & (ev < hi))
    r.to_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "eigenvalue" and len(lines) == 61
    summary = json.loads(r.summary_json(tmp_path / "s.json").read_text())
    assert summary["edge_plus"] == r.edge_plus and summary["gap_tol"] == 0.3


def test_default_gap_tol_is_ten_median_spacings():
    ev = np.array([0.0, 1.0, 2.0, 4.0, 5.0])
    assert default_gap_tol(ev) == 10.0


def test_dense_limit():
    with pytest.raises(InvalidParameter):
        spectrum(build_matrix(trig_poly_xi([(0.0, 1.0)]), Grid1D(1000.0, 8192)))


def test_hausdorff_examples():
    assert hausdorff([1.0, 2.0], [2.0, 1.0]) == 0.0
    assert hausdorff([0.0], [1.0]) == 1.0
    assert hausdorff([0.0, 1.0], [0.4]) == pytest.approx(0.6)
    with pytest.raises(EmptySet):
        hausdorff([], [1.0])


def test_hausdorff_matches_brute_force_on_random_pairs():
    rng = np.random.default_rng(1234)
    for _ in range(1000):
        A = rng.normal(scale=rng.uniform(0.1, 10), size=rng.integers(1, 51))
        B = rng.normal(scale=rng.uniform(0.1, 10), size=rng.integers(1, 51))
        assert hausdorff(A, B) == brute_hausdorff(A, B)


@given(finite_sets, finite_sets)
def test_hausdorff_symmetric(A, B):
    assert hausdorff(A, B) == hausdorff(B, A)


@given(finite_sets, finite_sets)
def test_hausdorff_identity_of_indiscernibles(A, B):
    d = hausdorff(A, B)
    assert hausdorff(A, A) == 0.0
    assert (d == 0.0) == (set(A) == set(B))


@given(finite_sets, finite_sets, finite_sets)
def test_hausdorff_triangle(A, B, C):
    assert hausdorff(A, C) <= hausdorff(A, B) + hausdorff(B, C) + 1e-12


@given(finite_sets, st.floats(-200, 200, allow_nan=False))
def test_hausdorff_adding_one_point(A, x):
    assume(x not in A)
    assert hausdorff(A + [x], A) == pytest.approx(np.min(np.abs(np.asarray(A) - x)), abs=0)


@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=2, max_size=40),
       st.floats(-5, 5, allow_nan=False))
def test_gap_widths_invariant_under_shift(diag, c):
    K = np.diag(diag)
    r1 = spectrum(K, gap_tol=0.5)
    r2 = spectrum(K + c * np.eye(len(diag)), gap_tol=0.5)
    w1 = [hi - lo for lo, hi in r1.gaps]
    w2 = [hi - lo for lo, hi in r2.gaps]
    assert len(w1) == len(w2)
    np.testing.assert_allclose(w1, w2, atol=1e-9)


@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=60))
def test_diagonal_spectrum_exact(diag):
    assert list(spectrum(np.diag(diag)).eigenvalues) == sorted(diag)


def report(lo, hi):
    return SpectrumReport(np.array([lo, hi]), lo, hi, [], 1.0)


def test_edge_drift_examples():
    r0 = report(-1.0, 1.0)
    d = edge_drift(r0, r0)
    assert (d.dE_minus, d.dE_plus) == (0.0, 0.0)
    d = edge_drift(r0, report(-1.1, 1.05))
    assert d.dE_minus == pytest.approx(-0.1) and d.dE_plus == pytest.approx(0.05)


def test_edge_drift_grid_mismatch():
    a = SpectrumReport(np.array([0.0]), 0.0, 0.0, [], 1.0, grid=Grid1D(8.0, 32))
    b = SpectrumReport(np.array([0.0]), 0.0, 0.0, [], 1.0, grid=Grid1D(8.0, 64))
    with pytest.raises(GridMismatch):
        edge_drift(a, b)


def test_edge_drift_two_build_paths_agree():
    a = symbol_sum(trig_poly_xi([(1.0, 1.0)]), trig_poly_xi([(0.0, Cosine(1.0, 1.0, 0.0))]))
    g = Grid1D(32.0, 256)
    F = builtin_field("affine", b=0.0)
    r0 = spectrum(build_matrix(a, g))
    rd = spectrum(build_matrix(perturb(a, F, 0.01), g))
    direct = np.linalg.eigvalsh(build_matrix(perturb(a, F, 0.01), g).matrix)[-1] - np.linalg.eigvalsh(
        build_matrix(a, g).matrix)[-1]
    assert abs(edge_drift(r0, rd).dE_plus - direct) < 1e-12


def test_localization_filter_flags_boundary_states():
    a = symbol_sum(trig_poly_xi([(1.0, 1.0)]), trig_poly_xi([(0.0, Cosine(1.0, 1.0, 0.0))]))
    r = spectrum(build_matrix(a, Grid1D(32.0, 256)), localization=True)
    assert 0 < r.central.size < r.eigenvalues.size
    with pytest.raises(ValueError):
        _ = spectrum(np.eye(3)).central
    assert math.isfinite(r.gap_tol)

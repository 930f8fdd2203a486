"""Basis families: unbiasedness, tilting, rotations, spec parsing."""

import numpy as np
import pytest

from qscatter import bases, numerics
from qscatter.errors import (
    DimensionMismatchError,
    InvalidDimensionError,
    NormalizationError,
    UnsupportedDimensionError,
)


def test_standard_family_is_identity():
    fam = bases.standard_family(4)
    assert fam.kind == "standard"
    np.testing.assert_array_equal(fam.matrix, np.eye(4))
    np.testing.assert_array_equal(fam.per_vector_norm, np.ones(4))


def test_mub_rows_are_orthonormal():
    for d in (2, 3, 5, 7):
        for r in range(d):
            fam = bases.mub(d, r)
            assert numerics.is_unitary(fam.matrix)
            assert fam.kind == f"mub:{r}"


def test_mub_families_are_mutually_unbiased():
    for d in (2, 3, 5):
        mats = [bases.standard_family(d).matrix]
        mats += [bases.mub(d, r).matrix for r in range(d)]
        for i in range(len(mats)):
            for j in range(i + 1, len(mats)):
                overlaps = np.abs(mats[i] @ mats[j].conj().T)
                np.testing.assert_allclose(overlaps, 1 / np.sqrt(d),
                                           atol=1e-10)


def test_mub_qubit_values():
    h = bases.mub(2, 0).matrix * np.sqrt(2)
    np.testing.assert_allclose(h, [[1, 1], [1, -1]], atol=1e-12)
    circ = bases.mub(2, 1).matrix * np.sqrt(2)
    np.testing.assert_allclose(circ, [[1, 1j], [1, -1j]], atol=1e-12)


def test_mub_rejects_bad_inputs():
    with pytest.raises(UnsupportedDimensionError):
        bases.mub(6, 0)
    with pytest.raises(InvalidDimensionError):
        bases.mub(5, 5)
    with pytest.raises(InvalidDimensionError):
        bases.mub(5, -1)


def test_check_lambdas_validation():
    lam = bases.check_lambdas(np.full(4, 0.5), 4)
    np.testing.assert_array_equal(lam, np.full(4, 0.5))
    with pytest.raises(DimensionMismatchError):
        bases.check_lambdas(np.full(3, 0.5), 4)
    with pytest.raises(NormalizationError):
        bases.check_lambdas([0.5, 0.5, 0.5, -0.5], 4)
    with pytest.raises(NormalizationError):
        bases.check_lambdas(np.full(4, 0.4), 4)


def test_tilted_rows_follow_the_spectrum():
    rng = np.random.default_rng(2)
    lam = rng.random(5) + 0.1
    lam = lam / np.linalg.norm(lam)
    fam = bases.tilted(5, 2, lam)
    assert fam.kind == "tilted:2"
    np.testing.assert_array_equal(fam.lambdas, lam)
    expected_mod = np.sqrt(lam) / float(np.sum(lam))
    np.testing.assert_allclose(np.abs(fam.matrix),
                               np.tile(expected_mod, (5, 1)), atol=1e-12)
    # One common row norm, below 1 for any non-degenerate spectrum.
    assert np.ptp(fam.per_vector_norm) < 1e-12
    assert fam.per_vector_norm[0] < 1.0


def test_tilted_with_uniform_spectrum_matches_mub():
    d = 7
    lam = np.full(d, 1 / np.sqrt(d))
    tilt = bases.tilted(d, 3, lam)
    ref = bases.mub(d, 3)
    ratio = tilt.matrix / ref.matrix
    np.testing.assert_allclose(ratio, ratio[0, 0], atol=1e-12)


def test_conjugated_family():
    fam = bases.mub(3, 1)
    conj = fam.conjugated()
    np.testing.assert_array_equal(conj.matrix, fam.matrix.conj())
    assert conj.kind == fam.kind


def test_rotate_matrix_round_trip():
    rng = np.random.default_rng(4)
    t = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    fam = bases.mub(5, 2)
    rotated = bases.rotate_matrix(t, fam)
    np.testing.assert_allclose(
        rotated, fam.matrix.conj() @ t @ fam.matrix.T, atol=1e-12)
    back = bases.rotate_matrix(rotated, fam, inverse=True)
    np.testing.assert_allclose(back, t, atol=1e-10)


def test_rotate_matrix_standard_family_is_identity_map():
    rng = np.random.default_rng(6)
    t = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    np.testing.assert_allclose(
        bases.rotate_matrix(t, bases.standard_family(3)), t, atol=1e-14)


def test_rotate_matrix_inverse_needs_unitary_family():
    lam = np.full(3, 1 / np.sqrt(3))
    fam = bases.tilted(3, 0, lam)
    with pytest.raises(UnsupportedDimensionError):
        bases.rotate_matrix(np.eye(3), fam, inverse=True)


def test_rotate_matrix_shape_check():
    with pytest.raises(DimensionMismatchError):
        bases.rotate_matrix(np.eye(4), bases.mub(5, 0))


def test_parse_basis_spec():
    assert bases.parse_basis_spec("standard", 5).kind == "standard"
    assert bases.parse_basis_spec("mub:2", 5).kind == "mub:2"
    lam = np.full(5, 1 / np.sqrt(5))
    assert bases.parse_basis_spec("tilted:1", 5, lam).kind == "tilted:1"
    with pytest.raises(NormalizationError):
        bases.parse_basis_spec("tilted:1", 5)
    with pytest.raises(InvalidDimensionError):
        bases.parse_basis_spec("fourier:1", 5)
    with pytest.raises(InvalidDimensionError):
        bases.parse_basis_spec("mub:x", 5)


def test_family_validation_catches_mismatches():
    with pytest.raises(NormalizationError):
        bases.BasisFamily(dim=2, kind="standard", matrix=np.eye(2),
                          per_vector_norm=np.array([2.0, 1.0]))
    with pytest.raises(DimensionMismatchError):
        bases.BasisFamily(dim=3, kind="standard", matrix=np.eye(2),
                          per_vector_norm=np.ones(2))

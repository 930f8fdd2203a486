"""Fidelity estimators and dimensionality certification."""

import numpy as np
import pytest

from oracles import density_table, noiseless_table, random_density, target_ket
from qscatter import bases, certify, measure
from qscatter.errors import DimensionMismatchError, NormalizationError


def _random_target(d, rng):
    lam = rng.random(d) + 0.2
    return certify.TargetState(dim=d, lambdas=lam / np.linalg.norm(lam))


def _family_table(rho, family):
    probs = density_table(rho, family.matrix, np.conjugate(family.matrix))
    return noiseless_table(probs, family.kind)


def _standard_table(rho, d):
    return noiseless_table(density_table(rho, np.eye(d), np.eye(d)),
                           "standard")


def test_target_state_validation():
    with pytest.raises(DimensionMismatchError):
        certify.TargetState(dim=3, lambdas=np.ones(2))
    with pytest.raises(NormalizationError):
        certify.TargetState(dim=2, lambdas=np.array([0.8, -0.6]))
    with pytest.raises(NormalizationError):
        certify.TargetState(dim=2, lambdas=np.array([0.8, 0.8]))


def test_target_state_uniform_and_bounds():
    t = certify.TargetState.uniform(4)
    assert t.is_uniform
    np.testing.assert_allclose(t.bounds(), [0.25, 0.5, 0.75, 1.0],
                               atol=1e-12)
    skew = certify.TargetState(dim=2, lambdas=np.array([0.6, 0.8]))
    assert not skew.is_uniform
    np.testing.assert_allclose(skew.bounds(), [0.64, 1.0], atol=1e-12)


def test_estimate_lambda():
    counts = np.diag([4.0, 1.0]) + 0.0
    t = certify.estimate_lambda(
        measure.CountTable(counts=counts, basis_label_a="standard",
                           basis_label_b="standard*", exposure=1.0))
    np.testing.assert_allclose(t.lambdas, [2 / np.sqrt(5), 1 / np.sqrt(5)])
    with pytest.raises(DimensionMismatchError):
        certify.estimate_lambda(np.ones((2, 3)))
    with pytest.raises(NormalizationError):
        certify.estimate_lambda(np.zeros((2, 2)))


def test_c_lambda_is_one_for_uniform_targets():
    rng = np.random.default_rng(2)
    probs = rng.random((3, 3))
    probs /= probs.sum()
    assert certify.c_lambda(probs, certify.TargetState.uniform(3)) == (
        pytest.approx(1.0, abs=1e-12))


def test_matched_moments_rejections():
    d = 3
    rho = random_density(d * d, np.random.default_rng(3))
    std = _standard_table(rho, d)
    fam = _family_table(rho, bases.mub(d, 0))
    uniform = certify.TargetState.uniform(d)
    skew = certify.TargetState(dim=d, lambdas=np.array([0.8, 0.5196152422706631, 0.3]))
    probs = std.normalized()
    with pytest.raises(NormalizationError):
        certify.matched_moments(std, uniform, probs)
    with pytest.raises(NormalizationError):
        certify.matched_moments(fam, skew, probs)


def test_exact_estimator_matches_overlap_uniform():
    rng = np.random.default_rng(4)
    for d in (2, 3, 5):
        target = certify.TargetState.uniform(d)
        w = target_ket(target.lambdas)
        for _ in range(5):
            rho = random_density(d * d, rng)
            std = _standard_table(rho, d)
            fams = [_family_table(rho, bases.mub(d, r)) for r in range(d)]
            got = certify.fidelity_exact(std, fams, target)
            want = float(np.real(np.conjugate(w) @ rho @ w))
            assert got == pytest.approx(want, abs=1e-12)


def test_exact_estimator_matches_overlap_tilted():
    rng = np.random.default_rng(5)
    for d in (2, 3, 5):
        for _ in range(5):
            target = _random_target(d, rng)
            w = target_ket(target.lambdas)
            rho = random_density(d * d, rng)
            std = _standard_table(rho, d)
            fams = [_family_table(rho, bases.tilted(d, r, target.lambdas))
                    for r in range(d)]
            got = certify.fidelity_exact(std, fams, target)
            want = float(np.real(np.conjugate(w) @ rho @ w))
            assert got == pytest.approx(want, abs=1e-12)


def test_exact_estimator_validates_family_coverage():
    d = 3
    rho = random_density(d * d, np.random.default_rng(6))
    std = _standard_table(rho, d)
    fams = [_family_table(rho, bases.mub(d, r)) for r in range(d)]
    target = certify.TargetState.uniform(d)
    with pytest.raises(NormalizationError):
        certify.fidelity_exact(std, fams[:2], target)
    with pytest.raises(NormalizationError):
        certify.fidelity_exact(std, fams + [fams[0]], target)
    with pytest.raises(NormalizationError):
        certify.fidelity_exact(std, [std], target)


def test_lower_bound_is_sound_and_tight():
    rng = np.random.default_rng(7)
    for d in (2, 3, 5):
        for _ in range(10):
            target = _random_target(d, rng)
            w = target_ket(target.lambdas)
            rho = random_density(d * d, rng)
            std = _standard_table(rho, d)
            fam = _family_table(rho, bases.tilted(d, 0, target.lambdas))
            bound = certify.fidelity_lower_bound(std, fam, target)
            truth = float(np.real(np.conjugate(w) @ rho @ w))
            assert bound <= truth + 1e-9
        pure = np.outer(target_ket(target.lambdas),
                        np.conjugate(target_ket(target.lambdas)))
        std = _standard_table(pure, d)
        fam = _family_table(pure, bases.tilted(d, 0, target.lambdas))
        tight = certify.fidelity_lower_bound(std, fam, target)
        assert tight == pytest.approx(1.0, abs=1e-9)


def test_closed_form_agrees_with_exact_uniform():
    rng = np.random.default_rng(8)
    d = 5
    target = certify.TargetState.uniform(d)
    for _ in range(5):
        rho = random_density(d * d, rng)
        std = _standard_table(rho, d)
        fams = [_family_table(rho, bases.mub(d, r)) for r in range(d)]
        exact = certify.fidelity_exact(std, fams, target)
        closed = certify.fidelity_uniform_closed_form(std, fams)
        assert closed == pytest.approx(exact, abs=1e-12)
    with pytest.raises(NormalizationError):
        certify.fidelity_uniform_closed_form(std, fams[:3])


def test_family_projector_sum_resolves_identity_plus_target():
    """Summing |f_k f_k*><...| over the standard family and all d unbiased
    families gives I + d |phi><phi| with phi the uniform target; this is
    what makes the closed-form fidelity work."""
    for d in (2, 3, 5):
        total = np.zeros((d * d, d * d), dtype=np.complex128)
        mats = [np.eye(d)] + [bases.mub(d, r).matrix for r in range(d)]
        for m in mats:
            for k in range(d):
                ket = np.kron(m[k], np.conjugate(m[k]))
                total += np.outer(ket, np.conjugate(ket))
        phi = target_ket(np.full(d, 1.0 / np.sqrt(d)))
        want = np.eye(d * d) + d * np.outer(phi, np.conjugate(phi))
        np.testing.assert_allclose(total, want, atol=1e-10)
        assert np.trace(total).real == pytest.approx(d * (d + 1), abs=1e-9)


def _sampled_tables(d, exposure, seed):
    rng = np.random.default_rng(seed)
    rho = random_density(d * d, rng)
    std_probs = density_table(rho, np.eye(d), np.eye(d))
    tables = []
    for r in range(d):
        fam = bases.mub(d, r)
        probs = np.clip(density_table(rho, fam.matrix,
                                      np.conjugate(fam.matrix)), 0.0, None)
        counts = rng.poisson(probs * exposure).astype(np.float64)
        tables.append(measure.CountTable(
            counts=counts, basis_label_a=fam.kind,
            basis_label_b=fam.kind + "*", exposure=exposure, seed=seed))
    std = measure.CountTable(
        counts=rng.poisson(std_probs * exposure).astype(np.float64),
        basis_label_a="standard", basis_label_b="standard*",
        exposure=exposure, seed=seed)
    return std, tables


def test_certify_exact_path_with_error_bars():
    std, fams = _sampled_tables(3, 2e4, 9)
    report = certify.certify(std, fams, n_mc=64, seed=1)
    assert report.method == "exact"
    assert report.n_mc == 64
    assert report.fidelity_sigma > 0
    assert report.dim == 3
    assert 0 <= report.d_ent <= 3
    again = certify.certify(std, fams, n_mc=64, seed=1)
    assert again.fidelity_sigma == report.fidelity_sigma
    other = certify.certify(std, fams, n_mc=64, seed=2)
    assert other.fidelity_sigma != report.fidelity_sigma
    assert "F =" in report.summary()


def test_certify_defaults_to_uniform_for_unbiased_tables():
    std, fams = _sampled_tables(3, 2e4, 10)
    report = certify.certify(std, fams, n_mc=0)
    assert report.target.is_uniform
    np.testing.assert_allclose(report.bounds, [1 / 3, 2 / 3, 1.0],
                               atol=1e-12)


def test_certify_lower_bound_fallback_warns():
    std, fams = _sampled_tables(3, 2e4, 11)
    report = certify.certify(std, fams[:1], n_mc=0)
    assert report.method == "lower_bound"
    with pytest.warns(UserWarning):
        partial = certify.certify(std, fams[:2], n_mc=0)
    assert partial.method == "lower_bound"
    with pytest.raises(NormalizationError):
        certify.certify(std, [], n_mc=0)


def test_certify_noiseless_tables_skip_resampling():
    d = 3
    rho = random_density(d * d, np.random.default_rng(12))
    std = _standard_table(rho, d)
    fams = [_family_table(rho, bases.mub(d, r)) for r in range(d)]
    report = certify.certify(std, fams, n_mc=500)
    assert report.n_mc == 0
    assert report.fidelity_sigma == 0.0


def test_certify_perfect_state_yields_full_dimensionality():
    d = 5
    phi = target_ket(np.full(d, 1.0 / np.sqrt(d)))
    rho = np.outer(phi, np.conjugate(phi))
    std = _standard_table(rho, d)
    fams = [_family_table(rho, bases.mub(d, r)) for r in range(d)]
    report = certify.certify(std, fams)
    assert report.d_ent == d
    assert report.entangled
    assert report.fidelity == pytest.approx(1.0, abs=1e-12)
    assert report.robust_3sigma


def test_certify_separable_state_is_not_entangled():
    d = 3
    rho = np.eye(d * d, dtype=np.complex128) / (d * d)
    std = _standard_table(rho, d)
    fams = [_family_table(rho, bases.mub(d, r)) for r in range(d)]
    report = certify.certify(std, fams)
    assert report.d_ent <= 1
    assert not report.entangled


def test_certify_resampling_honors_row_corrections():
    d = 3
    std, fams = _sampled_tables(d, 2e4, 13)
    scaled = measure.CountTable(
        counts=fams[0].counts * 2.0, basis_label_a=fams[0].basis_label_a,
        basis_label_b=fams[0].basis_label_b, exposure=fams[0].exposure,
        seed=fams[0].seed, row_scale=np.full(d, 2.0))
    raw = certify.certify(std, [fams[0]], n_mc=48, seed=3)
    corrected = certify.certify(std, [scaled], n_mc=48, seed=3)
    assert corrected.fidelity == pytest.approx(raw.fidelity, abs=1e-12)
    assert corrected.fidelity_sigma == pytest.approx(raw.fidelity_sigma,
                                                     rel=1e-9)

import math

import numpy as np
import pytest

from misodof import numerics
from misodof.model import DomainError, SystemConfig


def test_parse_grid():
    assert numerics.parse_grid("30:70:10") == [30, 40, 50, 60, 70]
    assert numerics.parse_grid("0:1:0.5") == [0, 0.5, 1]
    for bad in ["30:70", "70:30:10", "30:70:0", "a:b:c"]:
        with pytest.raises(DomainError):
            numerics.parse_grid(bad)


def test_mean_and_stderr():
    assert numerics.mean([1e16, 1.0, -1e16]) == 1 / 3
    assert numerics.mc_stderr([2.0]) == 0.0
    assert numerics.mc_stderr([1.0, 3.0]) == pytest.approx(1.0)


def test_error_variance_alpha_zero():
    batch = numerics.sample_channel_batch(SystemConfig(2, 2), [0.0, 0.0], 30, 10_000, seed=1)
    var = np.mean(np.abs(batch.errors) ** 2)
    assert abs(var - 1.0) < 0.05


def test_error_variance_alpha_one():
    batch = numerics.sample_channel_batch(SystemConfig(2, 2), [1.0, 0.0], 30, 10_000, seed=2)
    row0 = np.mean(np.abs(batch.errors[:, 0, :]) ** 2)
    row1 = np.mean(np.abs(batch.errors[:, 1, :]) ** 2)
    assert abs(row0 / 1e-3 - 1) < 0.1
    assert abs(row1 - 1) < 0.05
    np.testing.assert_allclose(batch.estimates + batch.errors, batch.channels)


def test_batch_determinism_and_partitioning():
    cfg = SystemConfig(3, 2)
    a = numerics.sample_channel_batch(cfg, [0.5, 0.2], 40, 100, seed=7)
    b = numerics.sample_channel_batch(cfg, [0.5, 0.2], 40, 100, seed=7)
    assert np.array_equal(a.channels[0], b.channels[0]) and np.array_equal(a.estimates, b.estimates)
    first = numerics.sample_channel_batch(cfg, [0.5, 0.2], 40, 60, seed=7)
    rest = numerics.sample_channel_batch(cfg, [0.5, 0.2], 40, 40, seed=7, first_trial=60)
    assert np.array_equal(np.concatenate([first.channels, rest.channels]), a.channels)
    c = numerics.sample_channel_batch(cfg, [0.5, 0.2], 40, 100, seed=8)
    assert not np.array_equal(a.channels, c.channels)


def test_batch_validation():
    cfg = SystemConfig(2, 2)
    with pytest.raises(DomainError):
        numerics.sample_channel_batch(cfg, [0.5], 30, 10, seed=0)
    with pytest.raises(DomainError):
        numerics.sample_channel_batch(cfg, [0.5, 1.5], 30, 10, seed=0)
    with pytest.raises(DomainError):
        numerics.sample_channel_batch(cfg, [0.5, 0.5], 30, 0, seed=0)


def test_single_user_matches_closed_form():
    batch = numerics.sample_channel_batch(SystemConfig(2, 1), [1.0], 30, 5000, seed=3)
    rates = numerics.zf_rates(batch, [0]).per_user[:, 0]
    exact = np.log2(1 + batch.snr * np.sum(np.abs(batch.channels[:, 0, :]) ** 2, axis=1))
    # beamforming on an estimate with error power 1e-3 loses almost nothing
    assert abs(numerics.mean(rates) - numerics.mean(exact)) < 0.01
    assert np.all(rates <= exact + 1e-9)


def test_zf_perfect_estimate_has_no_interference():
    batch = numerics.sample_channel_batch(SystemConfig(2, 2), [1.0, 1.0], 80, 200, seed=4)
    rates = numerics.zf_rates(batch, [0, 1])
    assert rates.resampled == 0
    assert numerics.mean(rates.per_user[:, 0]) > 20


def test_zf_active_validation():
    batch = numerics.sample_channel_batch(SystemConfig(2, 3), [0.5] * 3, 30, 10, seed=0)
    for bad in ([], [0, 1, 2], [1, 1]):
        with pytest.raises(DomainError):
            numerics.zf_rates(batch, bad)


def test_zf_resamples_singular_estimates():
    batch = numerics.sample_channel_batch(SystemConfig(2, 2), [0.5, 0.5], 30, 4, seed=5)
    est = batch.estimates.copy()
    est[1, 1] = est[1, 0]  # rank-deficient estimate in trial 1
    broken = numerics.ChannelBatch(batch.snr, batch.alphas, batch.channels, est, batch.errors, batch.seed)
    rates = numerics.zf_rates(broken, [0, 1])
    assert rates.resampled >= 1
    assert np.all(np.isfinite(rates.per_user))


def test_fit_exact_line():
    grid = [30, 40, 50, 60]
    pts = [(s, 3.0 + 1.5 * s / 10 * math.log2(10)) for s in grid]
    fit = numerics.fit_dof_slope(pts)
    assert fit.slope == pytest.approx(1.5, abs=1e-12)
    assert fit.stderr == pytest.approx(0.0, abs=1e-9)
    assert numerics.fit_dof_slope([(s, 4.0) for s in grid]).slope == pytest.approx(0.0, abs=1e-12)


def test_fit_noisy_line():
    rng = np.random.default_rng(0)
    grid = [30, 40, 50, 60]
    pts = [(s, 2 * s / 10 * math.log2(10) + rng.normal(0, 0.5)) for s in grid]
    assert abs(numerics.fit_dof_slope(pts).slope - 2) < 0.2


def test_fit_validation():
    with pytest.raises(DomainError):
        numerics.fit_dof_slope([(30, 1), (40, 2)])
    with pytest.raises(DomainError):
        numerics.fit_dof_slope([(30, 1), (30, 2), (40, 3)])


def test_zf_slope_alpha_zero_saturates():
    res = numerics.zf_slope(SystemConfig(2, 2), [0.0, 0.0], [30, 40, 50, 60, 70], 3000, seed=12)
    assert abs(res.fit.slope) <= 0.15
    assert res.csv_lines()[0] == "snr_db,mean_value,stderr"
    assert len(res.csv_lines()) == 6


def test_pivoted_qr_reconstructs():
    rng = np.random.default_rng(1)
    a = numerics.complex_normal(rng, (5, 4))
    qr = numerics.pivoted_qr_lemma2(a)
    np.testing.assert_allclose(qr.q @ qr.r, qr.permuted(a), atol=1e-12)
    np.testing.assert_allclose(qr.q.conj().T @ qr.q, np.eye(5), atol=1e-12)
    assert np.all(qr.diag >= 0)
    assert np.allclose(np.tril(qr.r, -1), 0)


def test_lemma2_identity_and_ones():
    for m in range(1, 6):
        qr = numerics.pivoted_qr_lemma2(np.eye(m))
        assert np.allclose(qr.diag, 1)
        assert numerics.lemma2_violations(np.eye(m)) == []
    ones = np.ones((2, 2))
    qr = numerics.pivoted_qr_lemma2(ones)
    lam = numerics.eigenvalues_desc(ones)
    assert np.allclose(lam, [4, 0])
    assert qr.diag[0] ** 2 == pytest.approx(2.0) and qr.diag[1] == pytest.approx(0.0, abs=1e-12)
    assert numerics.lemma2_violations(ones) == []


def test_lemma2_near_rank_deficient():
    rng = np.random.default_rng(3)
    for m in range(2, 7):
        u = numerics.complex_normal(rng, (m, 1))
        a = u @ numerics.complex_normal(rng, (1, m)) + 1e-7 * numerics.complex_normal(rng, (m, m))
        assert numerics.lemma2_violations(a) == []


def test_lemma2_random_suite():
    res = numerics.verify_lemma2(300, seed=21)
    assert res == {"check": "lemma2", "matrices": 300, "violations": 0, "pass": True}


def test_lemma3_examples():
    assert numerics.lemma3_violations(np.eye(3)) == []
    a = np.diag([2.0, 1.0])
    abar = numerics.permute_lemma3(a)
    assert np.allclose(abar, a)  # already in greedy order
    assert numerics.lemma3_violations(a) == []
    # I={1}: det 4 >= 4/2; I={1,2}: det 4 >= 4/4
    assert abs(np.linalg.det(abar.T @ abar)) == pytest.approx(4.0)


def test_lemma3_random_suite():
    res = numerics.verify_lemma3(60, seed=22)
    assert res["violations"] == 0 and res["pass"]


def test_lemma3_size_limit():
    with pytest.raises(DomainError):
        numerics.lemma3_violations(np.eye(11))


@pytest.mark.parametrize("exponents, slope", [((0.0, 0.0), 0.0), ((1.0, 0.0), 1.0), ((0.5, 0.25, 0.0), 0.75)])
def test_lemma1_slope(exponents, slope):
    chk = numerics.lemma1_slope_check(len(exponents), exponents, [40, 50, 60, 70], 3000, seed=31)
    assert chk.predicted == pytest.approx(slope)
    assert abs(chk.slope - slope) <= 0.1 and chk.passed


def test_lemma1_negative_exponents_count_as_zero():
    chk = numerics.lemma1_slope_check(2, (1.0, -0.5), [40, 50, 60, 70], 2000, seed=32)
    assert chk.predicted == pytest.approx(1.0) and chk.passed


def test_input_covariance_kinds():
    snr = 1e4
    iso = numerics.input_covariance("isotropic", snr, 2)
    assert np.allclose(iso, snr / 2 * np.eye(2))
    skew = numerics.input_covariance("spectral-skewed", snr, 2)
    assert np.trace(skew).real <= snr + 1e-9
    rng = np.random.default_rng(0)
    h1 = numerics.complex_normal(rng, (1, 2))
    aligned = numerics.input_covariance("estimate-aligned", snr, 2, h1)
    assert np.trace(aligned).real == pytest.approx(snr)
    assert abs((h1 @ aligned @ h1.conj().T)[0, 0]) < 1e-6 * snr
    with pytest.raises(DomainError):
        numerics.input_covariance("sideways", snr, 2)


def test_prop4_degenerate_equal_nesting():
    chk = numerics.prop4_slope_check(2, 2, 2, [0.5, 0.5], "isotropic", [30, 40, 50, 60, 70], 1000, seed=41)
    assert chk.bound == 0 and chk.passed


def test_prop4_isotropic_and_aligned():
    grid = [30, 40, 50, 60, 70]
    iso = numerics.prop4_slope_check(2, 1, 2, [0.5], "isotropic", grid, 2000, seed=42)
    assert abs(iso.lhs_slope) < 0.1 and iso.bound == pytest.approx(0.5) and iso.passed
    aligned = numerics.prop4_slope_check(2, 1, 2, [0.5], "estimate-aligned", grid, 2000, seed=43)
    assert abs(aligned.lhs_slope - 0.0) < 0.1 and aligned.passed
    aligned = numerics.prop4_slope_check(2, 1, 2, [1.0], "estimate-aligned", grid, 2000, seed=44)
    assert abs(aligned.lhs_slope - 1.0) < 0.1 and aligned.passed


def test_verify_prop4_covers_nine_configs():
    res = numerics.verify_prop4(300, seed=45)
    assert {(c["m"], c["l"], c["psi"]) for c in res["cases"]} == {
        (m, l, psi) for m, l in numerics.PROP4_NESTINGS for psi in numerics.PSI_KINDS
    }
    assert len(res["cases"]) == 27

import math

import mpmath
import numpy as np
import pytest

from logshot import analysis as an
from logshot.errors import DomainError
from logshot.hfbm import hfbm_cov, increment_variance
from logshot.kernels import Kernel
from logshot.noise import (BoundedPowerLawVariance, IndependentConstant, LogDecayVariance,
                           PowerLawVariance)
from logshot.shotnoise import Ensemble, SamplePath, SimConfig, simulate_ensemble
from oracles import cov_oracle, cov_poly_oracle

# frozen reference values from the mpmath integral oracle
COV_INDEPENDENT_1_2 = 1.0428651343978048
COV_POWERLAW_1_2 = 3.81235047867989
COV_LOGDECAY_2_4 = 6.98542066147324


def test_frozen_values():
    assert an.cov_closed_form_independent(0.25, 1, 1, 1, 2) == pytest.approx(COV_INDEPENDENT_1_2, rel=1e-12)
    assert an.cov_closed_form_powerlaw(0.25, 1, 1, 0.5, 1, 2) == pytest.approx(COV_POWERLAW_1_2, rel=1e-12)
    assert an.cov_closed_form_logdecay(0.25, 1, 3, 0.5, 2, 4) == pytest.approx(COV_LOGDECAY_2_4, rel=1e-12)


def test_frozen_values_match_oracle():
    assert cov_oracle(0.25, 1, lambda u: 1, 1, 2) == pytest.approx(COV_INDEPENDENT_1_2, rel=1e-12)
    assert cov_oracle(0.25, 1, lambda u: 1 + u ** -0.5, 1, 2) == pytest.approx(COV_POWERLAW_1_2, rel=1e-10)
    assert cov_oracle(0.25, 1, lambda u: 3 - 0.5 * mpmath.log(u), 2, 4) == pytest.approx(COV_LOGDECAY_2_4, rel=1e-10)


def test_variance_formula():
    beta, lam, k2 = 0.3, 2.0, 1.5
    for t in (0.5, 3.0):
        expected = lam * k2 * math.gamma(2 * beta + 1) * t
        assert an.cov_closed_form_independent(beta, lam, k2, t, t) == pytest.approx(expected, rel=1e-13)
    s = 1.7
    pl = lam * math.gamma(2 * beta + 1) * s * (1.0 + (1 - 0.4) ** (-2 * beta - 1) * s ** -0.4)
    assert an.cov_closed_form_powerlaw(beta, lam, 1.0, 0.4, s, s) == pytest.approx(pl, rel=1e-13)


def test_collapses_and_symmetry():
    a = an.cov_closed_form_powerlaw(0.2, 1.0, 2.0, 0.0, 1.0, 3.0)
    assert a == pytest.approx(an.cov_closed_form_independent(0.2, 1.0, 3.0, 1.0, 3.0), rel=1e-13)
    b = an.cov_closed_form_logdecay(0.2, 1.0, 2.0, 0.0, 1.0, 3.0)
    assert b == pytest.approx(an.cov_closed_form_independent(0.2, 1.0, 2.0, 1.0, 3.0), rel=1e-13)
    assert an.cov_closed_form_independent(0.2, 1, 1, 3.0, 1.0) == an.cov_closed_form_independent(0.2, 1, 1, 1.0, 3.0)
    assert an.cov_closed_form_independent(0.25, 1, 1, 7.0, 14.0) == pytest.approx(7 * COV_INDEPENDENT_1_2, rel=1e-12)


def test_logdecay_uses_k2_at_s():
    s, t, beta = math.e, 2 * math.e, 0.25
    L = math.log(t / s)
    from logshot.specfun import tricomi_psi
    expected = (math.gamma(1.25) * s * 2.0 * tricomi_psi(-beta, -0.5, L)
                + math.gamma(2.25) * s * tricomi_psi(-beta, -1.5, L))
    assert an.cov_closed_form_logdecay(beta, 1.0, 3.0, 1.0, s, t) == pytest.approx(expected, rel=1e-14)
    with pytest.raises(DomainError):
        an.cov_closed_form_logdecay(beta, 1.0, 1.0, 1.0, 3.0, 4.0)


def test_domain_errors():
    with pytest.raises(DomainError):
        an.cov_closed_form_independent(0.25, 1, 1, 0.0, 1.0)
    with pytest.raises(DomainError):
        an.cov_closed_form_powerlaw(0.25, 1, 1, 1.0, 1.0, 2.0)
    with pytest.raises(an.UnsupportedModelError):
        an.cov_closed_form(0.25, BoundedPowerLawVariance(), 1.0, 1.0, 2.0)


def test_quadrature_agrees_with_closed_forms():
    for noise in (IndependentConstant(1.3), PowerLawVariance(0.7, 0.6), LogDecayVariance(2.0, 0.4, 10.0)):
        for s, t in [(0.5, 0.5), (1.0, 2.0), (0.2, 7.0)]:
            assert an.cov_quadrature(0.3, noise, 1.2, s, t) == pytest.approx(
                an.cov_closed_form(0.3, noise, 1.2, s, t), rel=1e-8)


def test_cov_poly():
    beta = 0.3
    assert an.cov_poly_numeric(beta, 1, 1, 1, 2) == pytest.approx(cov_poly_oracle(beta, 1, 1, 1, 2), rel=1e-10)
    assert an.cov_poly_numeric(beta, 2, 1.5, 2.0, 2.0) == pytest.approx(3 * 2 ** (2 * beta + 1) / (2 * beta + 1), rel=1e-13)
    c = 3.0
    assert an.cov_poly_numeric(beta, 1, 1, c, 2 * c) == pytest.approx(
        c ** (2 * beta + 1) * an.cov_poly_numeric(beta, 1, 1, 1, 2), rel=1e-8)


def test_autocorrelation():
    beta = 0.2
    assert an.autocorrelation_closed_form(beta, 2.0, 0.0) == pytest.approx(1.0, rel=1e-14)
    assert an.autocorrelation_closed_form(beta, 2.0, 3.0) == pytest.approx(
        an.autocorrelation_closed_form(beta, 10.0, 15.0), rel=1e-13)
    taus = np.linspace(0, 50, 101)
    vals = an.autocorrelation_closed_form(beta, 1.0, taus)
    assert np.all((vals > 0) & (vals <= 1 + 1e-14)) and np.all(np.diff(vals) <= 1e-14)
    # matches Cov / sqrt(Var Var)
    c = an.cov_closed_form_independent(beta, 1, 1, 1.0, 4.0)
    v1, v4 = (an.cov_closed_form_independent(beta, 1, 1, x, x) for x in (1.0, 4.0))
    assert an.autocorrelation_closed_form(beta, 1.0, 3.0) == pytest.approx(c / math.sqrt(v1 * v4), rel=1e-13)
    # large-lag shape (1 + x)^(-1/2) log(1 + x)^beta
    x = np.logspace(4, 8, 9)
    ratio = an.autocorrelation_closed_form(beta, 1.0, x) / ((1 + x) ** -0.5 * np.log1p(x) ** beta)
    assert an.loglog_slope(x, ratio) == pytest.approx(0.0, abs=0.1)


def test_empirical_cov():
    grid = np.array([1.0, 2.0])
    zero = Ensemble(grid, np.zeros((10, 2)))
    rep = an.empirical_cov(zero, 1.0, 2.0, target=0.0)
    assert rep.estimate == 0 and rep.std_error == 0 and rep.z_score == 0
    paths = [SamplePath(grid, np.array([x, 2 * x])) for x in (1.0, 2.0, 3.0)]
    assert an.empirical_cov(paths, 1.0, 2.0).estimate == pytest.approx(2.0)
    with pytest.raises(DomainError):
        an.empirical_cov(zero, 1.0, 3.0)


def test_empirical_cov_monte_carlo():
    cfg = SimConfig(Kernel("log", 0.25), IndependentConstant(), 1.0, [1.0, 2.0], seed=21, ensemble_size=100_000)
    ens = simulate_ensemble(cfg)
    for s, t in [(1.0, 2.0), (2.0, 2.0)]:
        rep = an.empirical_cov(ens, s, t, target=an.cov_closed_form_independent(0.25, 1, 1, s, t))
        assert abs(rep.z_score) <= 3


def test_cross_module_identities():
    rng = np.random.default_rng(5)
    for alpha in (1.2, 1.5, 1.8):
        beta = (alpha - 1) / 2
        norm = 1.0 * 1.0 * math.gamma(alpha)
        for s, t in rng.uniform(0.1, 10, size=(10, 2)):
            assert an.cov_closed_form_independent(beta, 1, 1, s, t) / norm == pytest.approx(
                hfbm_cov(alpha, s, t), rel=1e-12)
            lo, hi = sorted((s, t))
            inc = (an.cov_closed_form_independent(beta, 1, 1, lo, lo) + an.cov_closed_form_independent(beta, 1, 1, hi, hi)
                   - 2 * an.cov_closed_form_independent(beta, 1, 1, lo, hi)) / norm
            assert inc == pytest.approx(increment_variance(alpha, lo, hi), rel=1e-8)


def test_expected_qv_basics():
    noise = IndependentConstant(2.0)
    log_k, poly_k = Kernel("log", 0.25), Kernel("poly", 0.25)
    assert an.expected_qv(log_k, 1.5, noise, 3.0, 1) == pytest.approx(1.5 * 2 * math.gamma(1.5) * 3, rel=1e-14)
    assert an.expected_qv(poly_k, 1.5, noise, 3.0, 1) == pytest.approx(1.5 * 2 * 3 ** 1.5 / 1.5, rel=1e-12)
    with pytest.raises(an.UnsupportedModelError):
        an.expected_qv(log_k, 1.0, PowerLawVariance(), 1.0, 4)
    # increments agree with the covariance combination
    inc = an.expected_increments(poly_k, 1.0, 1.0, 1.0, 4)
    s, t = 0.5, 0.75
    ref = (an.cov_poly_numeric(0.25, 1, 1, s, s) + an.cov_poly_numeric(0.25, 1, 1, t, t)
           - 2 * an.cov_poly_numeric(0.25, 1, 1, s, t))
    assert inc[2] == pytest.approx(ref, rel=1e-8)


def test_expected_qv_both_kernels_vanish():
    # Both expected QVs decrease like n^(-2 beta); the polynomial one does not diverge.
    ns = [64, 256, 1024]
    for fam in ("log", "poly"):
        vals = [an.expected_qv(Kernel(fam, 0.25), 1.0, 1.0, 1.0, n) for n in ns]
        assert vals[0] > vals[1] > vals[2]
        assert an.loglog_slope(ns, vals) == pytest.approx(-0.5, abs=0.1)


def test_empirical_qv():
    grid = np.linspace(0, 1, 5)
    assert an.empirical_qv(SamplePath(grid, np.ones(5))) == 0.0
    assert an.empirical_qv(SamplePath(grid, np.arange(5.0))) == 4.0
    with pytest.raises(DomainError):
        an.empirical_qv(SamplePath(np.array([0, 1, 3.0]), np.zeros(3)))


def test_convergence_report_constant_noise():
    rep = an.convergence_report(1.5, 1.0, IndependentConstant(1.0), [0.5, 1.0, 2.0], [1.0, 50.0], 20000, 3)
    assert len(rep.frobenius) == 2 and len(rep.excess_kurtosis) == 2
    assert np.allclose(np.diag(rep.target), [0.5, 1.0, 2.0])
    for zs in rep.variance_z:
        assert max(abs(z) for z in zs) <= 3
    assert set(rep.to_dict()) >= {"target", "empirical", "frobenius", "max_abs"}


def test_convergence_hypotheses():
    with pytest.raises(DomainError):
        an.convergence_report(2.5, 1.0, IndependentConstant(), [1.0], [10.0], 10, 1)
    with pytest.raises(DomainError):
        an.convergence_report(1.5, 1.0, PowerLawVariance(), [1.0], [10.0], 10, 1)
    with pytest.raises(DomainError):
        an.convergence_report(1.5, 1.0, LogDecayVariance(3.0, 1.0, 10.0), [1.0], [10.0], 10, 1)

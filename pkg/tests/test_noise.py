import numpy as np
import pytest

from risklqg import (
    EmpiricalSource,
    GaussianMixture,
    JointNoiseModel,
    moments_analytic,
    moments_empirical,
    sample,
)
from risklqg.errors import (
    DimensionMismatch,
    InsufficientSamples,
    NonPsdWeight,
    UnsupportedSource,
)

# Frozen brute-force oracle values for the scalar shock mixture
# 0.8 N(0, 0.01) + 0.2 N(10, 0.001) with Q_s = 1: sample means over 1e7 draws
# (rng seed 20240811) and their standard errors.
SCALAR_MIX_MC_M3 = (95.788753, 0.065753)
SCALAR_MIX_MC_M4 = (575.31653, 0.27309)


def scalar_shock_mixture():
    return GaussianMixture.scalar([0.8, 0.2], [0.0, 10.0], [0.01, 0.001])


def test_mixture_validation():
    with pytest.raises(NonPsdWeight):
        GaussianMixture.scalar([0.5, 0.4], [0.0, 1.0], [1.0, 1.0])  # weights sum != 1
    with pytest.raises(NonPsdWeight):
        GaussianMixture.scalar([0.5, 0.5], [0.0, 1.0], [1.0, -1.0])  # negative variance
    with pytest.raises(DimensionMismatch):
        GaussianMixture(weights=[1.0], means=[[0.0, 0.0]], covariances=np.eye(3))


def test_scalar_mixture_mean_and_variance():
    # re-derived via the standard mixture identities rather than trusting text
    mix = scalar_shock_mixture()
    p = np.array([0.8, 0.2])
    mu = np.array([0.0, 10.0])
    var = np.array([0.01, 0.001])
    mean = float(p @ mu)
    total_var = float(p @ (var + (mu - mean) ** 2))
    assert mix.mean()[0] == pytest.approx(mean, abs=1e-14)
    assert mix.covariance()[0, 0] == pytest.approx(total_var, abs=1e-12)
    assert total_var == pytest.approx(16.0082, abs=1e-12)


def test_scalar_mixture_third_fourth_vs_frozen_mc_oracle():
    mix = scalar_shock_mixture()
    q = np.array([[1.0]])
    m3 = mix.third_moment(q)[0]
    m4 = mix.fourth_scalar(q)
    mc, se = SCALAR_MIX_MC_M3
    assert abs(m3 - mc) <= 3.0 * se
    mc, se = SCALAR_MIX_MC_M4
    assert abs(m4 - mc) <= 3.0 * se


def test_zero_mean_gaussian_odd_moments_vanish():
    cov = np.array([[0.5, 0.1], [0.1, 0.3]])
    mix = GaussianMixture.single([0.0, 0.0], cov)
    qs = np.diag([1.0, 2.0])
    assert np.allclose(mix.third_moment(qs), 0.0, atol=1e-15)
    # m_w = 2 tr((Qs W)^2) for a single zero-mean Gaussian
    qsw = qs @ cov
    assert mix.fourth_scalar(qs) == pytest.approx(2.0 * np.trace(qsw @ qsw), rel=1e-12)


def test_gaussian_fourth_scalar_vs_mc_band():
    cov = np.array([[0.5, 0.1], [0.1, 0.3]])
    qs = np.diag([1.0, 2.0])
    rng = np.random.default_rng(7)
    draws = rng.multivariate_normal([0.0, 0.0], cov, size=1_000_000)
    vals = (np.einsum("bi,ij,bj->b", draws, qs, draws) - np.trace(qs @ cov)) ** 2
    se = vals.std(ddof=1) / np.sqrt(len(vals))
    mix = GaussianMixture.single([0.0, 0.0], cov)
    assert abs(mix.fourth_scalar(qs) - vals.mean()) <= 3.0 * se


def test_independent_sources_have_zero_cross_covariance(case1_model, opamp, opamp_weights):
    mom = moments_analytic(case1_model, opamp_weights.qs, opamp_weights.qo, opamp.c,
                           fourth_moment="analytic")
    assert np.allclose(mom.h_cross, 0.0, atol=1e-15)


@pytest.mark.parametrize("coupled", [False, True])
def test_p_and_z_identities(coupled, opamp, opamp_weights):
    if coupled:
        joint = GaussianMixture(
            weights=[0.6, 0.4],
            means=[[0.0, 0.0, 0.0], [1.0, -0.5, 2.0]],
            covariances=[
                [[0.05, 0.01, 0.002], [0.01, 0.04, -0.003], [0.002, -0.003, 0.03]],
                [[0.02, 0.0, 0.001], [0.0, 0.06, 0.0], [0.001, 0.0, 0.02]],
            ],
        )
        model = JointNoiseModel.coupled(joint, n=2, q=1)
    else:
        proc = GaussianMixture(
            weights=[0.7, 0.3], means=[[0.0, 0.0], [2.0, 1.0]],
            covariances=[np.diag([0.05, 0.02]), np.diag([0.01, 0.04])],
        )
        out = GaussianMixture.scalar([0.9, 0.1], [0.0, 5.0], [0.02, 0.01])
        model = JointNoiseModel.independent(proc, out)
    mom = moments_analytic(model, opamp_weights.qs, opamp_weights.qo, opamp.c,
                           fourth_moment="analytic")
    c = np.asarray(opamp.c)
    p_ident = c @ mom.w_cov @ c.T + c @ mom.h_cross + (c @ mom.h_cross).T + mom.e_cov
    scale = max(1.0, np.max(np.abs(mom.p_cov)))
    assert np.max(np.abs(p_ident - mom.p_cov)) <= 1e-10 * scale
    z_ident = c @ mom.w_cov @ c.T + np.outer(mom.eps_bar, mom.eps_bar)
    assert np.max(np.abs(z_ident - mom.z_cov)) <= 1e-10 * max(1.0, np.max(np.abs(mom.z_cov)))
    assert np.min(np.linalg.eigvalsh(mom.p_cov)) >= -1e-12
    assert mom.m_w >= 0.0 and mom.m_weps >= 0.0


def test_m_decomposition_field():
    proc = GaussianMixture(
        weights=[0.7, 0.3], means=[[0.0, 0.0], [2.0, 1.0]],
        covariances=[np.diag([0.05, 0.02]), np.diag([0.01, 0.04])],
    )
    out = GaussianMixture.scalar([0.9, 0.1], [0.0, 5.0], [0.02, 0.01])
    model = JointNoiseModel.independent(proc, out)
    c = np.array([[1.0, 0.5]])
    qo = np.array([[2.0]])
    mom = moments_analytic(model, np.eye(2), qo, c, fourth_moment="analytic")
    assert np.allclose(mom.m3_weps, mom.m3_p - mom.m3_eps, atol=1e-14)
    # for independent sources the w-channel part is C * (third moment of w under C'QoC)
    expected = c @ proc.third_moment(c.T @ qo @ c)
    assert np.allclose(mom.m3_weps, expected, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("alpha", [0.5, 2.0, 7.0])
def test_qs_scaling_law(alpha, fullrank_model, opamp):
    qs = np.array([[1.0, 0.3], [0.3, 0.5]])
    qo = np.array([[1.0]])
    base = moments_analytic(fullrank_model, qs, qo, opamp.c, fourth_moment="analytic")
    scaled = moments_analytic(fullrank_model, alpha * qs, qo, opamp.c, fourth_moment="analytic")
    assert np.allclose(scaled.m3_w, alpha * base.m3_w, rtol=1e-12)
    assert scaled.m_w == pytest.approx(alpha**2 * base.m_w, rel=1e-12)


def test_analytic_mc_fourth_moment_paths_agree(fullrank_model, opamp):
    qs = np.array([[1.0, 0.3], [0.3, 0.5]])
    qo = np.array([[1.0]])
    exact = moments_analytic(fullrank_model, qs, qo, opamp.c, fourth_moment="analytic")
    mc = moments_analytic(fullrank_model, qs, qo, opamp.c, fourth_moment="mc",
                          mc_count=2_000_000)
    assert mc.fourth_moment_method == "mc" and mc.mc_count == 2_000_000
    assert mc.m_w == pytest.approx(exact.m_w, rel=5e-3)
    assert mc.m_weps == pytest.approx(exact.m_weps, rel=5e-3)


def _coupled_corpus_model():
    joint = GaussianMixture(
        weights=[0.75, 0.25],
        means=[[0.0, 0.0, 0.0], [2.0, -1.0, 3.0]],
        covariances=[
            [[0.05, 0.01, 0.002], [0.01, 0.04, -0.003], [0.002, -0.003, 0.03]],
            [[0.02, 0.0, 0.001], [0.0, 0.06, 0.0], [0.001, 0.0, 0.02]],
        ],
    )
    return JointNoiseModel.coupled(joint, n=2, q=1)


@pytest.mark.parametrize("which", ["case1", "fullrank", "coupled"])
def test_analytic_vs_empirical_all_fields(which, case1_model, fullrank_model, opamp, opamp_weights):
    corpus = {"case1": case1_model, "fullrank": fullrank_model, "coupled": _coupled_corpus_model()}
    model = corpus[which]
    qs, qo, c = opamp_weights.qs, opamp_weights.qo, np.asarray(opamp.c)
    exact = moments_analytic(model, qs, qo, c, fourth_moment="analytic")
    w, eps = sample(model, 1_000_000, seed=42)
    emp = moments_empirical(w, eps, qs, qo, c)
    count = w.shape[0]
    # vector fields within 3 standard errors (elementwise)
    assert np.all(np.abs(emp.m3_w - exact.m3_w) <= 3.0 * emp.stderr.big_m_w + 1e-12)
    assert np.all(np.abs(emp.m3_p - exact.m3_p) <= 3.0 * emp.stderr.big_m + 1e-12)
    assert abs(emp.m_w - exact.m_w) <= 3.0 * emp.stderr.m_w
    assert abs(emp.m_weps - exact.m_weps) <= 3.0 * emp.stderr.m_weps
    # means and covariances via CLT bands on the plug-in entries
    se_mean = np.sqrt(np.diag(exact.w_cov) / count)
    assert np.all(np.abs(emp.w_bar - exact.w_bar) <= 4.0 * se_mean + 1e-12)
    assert np.allclose(emp.w_cov, exact.w_cov, rtol=0.02, atol=1e-4)
    assert np.allclose(emp.e_cov, exact.e_cov, rtol=0.02, atol=1e-4)
    assert np.allclose(emp.p_cov, exact.p_cov, rtol=0.02, atol=1e-4)
    assert np.allclose(emp.z_cov, exact.z_cov, rtol=0.02, atol=1e-4)


def test_empirical_statistically_zero_third_moment():
    rng = np.random.default_rng(3)
    w = rng.standard_normal((1_000_000, 2))
    eps = rng.standard_normal((1_000_000, 1))
    emp = moments_empirical(w, eps, np.eye(2), [[1.0]], [[1.0, 0.0]])
    assert np.all(np.abs(emp.m3_w) <= 3.0 * emp.stderr.big_m_w)


def test_empirical_degenerate_point_mass():
    w = np.tile([1.5, -2.0], (2000, 1))
    eps = np.tile([0.3], (2000, 1))
    emp = moments_empirical(w, eps, np.eye(2), [[1.0]], [[1.0, 0.0]])
    assert np.allclose(emp.w_cov, 0.0)
    assert np.allclose(emp.m3_w, 0.0)
    assert emp.m_w == 0.0


def test_empirical_guards():
    with pytest.raises(InsufficientSamples):
        moments_empirical(np.zeros((10, 2)), np.zeros((10, 1)), np.eye(2), [[1.0]], [[1.0, 0.0]])
    with pytest.raises(DimensionMismatch):
        moments_empirical(np.zeros((2000, 2)), np.zeros((1000, 1)), np.eye(2), [[1.0]], [[1.0, 0.0]])


def test_analytic_rejects_empirical_sources():
    model = JointNoiseModel.independent(
        EmpiricalSource(np.zeros((2000, 2))), EmpiricalSource(np.zeros((2000, 1)))
    )
    with pytest.raises(UnsupportedSource):
        moments_analytic(model, np.eye(2), [[1.0]], [[1.0, 0.0]])


def test_sampling_determinism(case1_model):
    w1, e1 = sample(case1_model, 500, seed=9)
    w2, e2 = sample(case1_model, 500, seed=9)
    assert np.array_equal(w1, w2) and np.array_equal(e1, e2)
    w3, _ = sample(case1_model, 500, seed=10)
    assert not np.array_equal(w1, w3)


def test_sampling_degenerate_weights():
    mix = GaussianMixture.scalar([1.0 - 1e-15, 1e-15], [0.0, 100.0], [0.01, 0.01])
    model = JointNoiseModel.independent(mix, GaussianMixture.scalar([1.0], [0.0], [0.01]))
    w, _ = sample(model, 2000, seed=1)
    assert np.all(np.abs(w) < 10.0)  # effectively all draws from component 1


def test_sampling_clt_band():
    mix = GaussianMixture.single([1.0, -2.0], np.diag([0.5, 0.25]))
    model = JointNoiseModel.independent(mix, GaussianMixture.scalar([1.0], [0.0], [1.0]))
    k = 200_000
    w, _ = sample(model, k, seed=5)
    se = np.sqrt(np.array([0.5, 0.25]) / k)
    assert np.all(np.abs(w.mean(axis=0) - [1.0, -2.0]) <= 3.0 * se)


def test_input_channel_expansion(opamp):
    xi = scalar_shock_mixture()
    expanded = xi.expand(opamp.b)
    b = np.asarray(opamp.b)
    assert np.allclose(expanded.mean(), (b @ [2.0]).ravel(), rtol=1e-12)
    assert np.allclose(expanded.covariance(), 16.0082 * b @ b.T, rtol=1e-10)


def test_moment_bundle_records_mc_provenance(case1_moments):
    assert case1_moments.fourth_moment_method == "mc"
    assert case1_moments.mc_seed is not None
    assert case1_moments.mc_count == 1_000_000

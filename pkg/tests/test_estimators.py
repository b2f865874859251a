import numpy as np
import pytest

import matshrink as ms
from matshrink import (
    ColumnwiseJS,
    EfronMorris,
    GeneralizedBayes,
    GeneralizedShrinkage,
    ISConfig,
    JamesStein,
    LowESSWarning,
    MLE,
    MatrixT,
    ProblemDims,
    RegimeViolation,
    RngState,
    SVS,
    SingularGram,
    SteinFrobenius,
    ZeroColumn,
    columnwise_js,
    efron_morris,
    embed_spectrum,
    estimate,
    gb_posterior_mean,
    generalized_shrinkage,
    grad_log_density,
    james_stein,
    singular_values,
    spec_from_json,
    spec_to_json,
)
from matshrink._backend import HAVE_COMPILED, get_backend
from matshrink.estimators import estimate_stack, is_posterior_mean_kernel

DIMS = ProblemDims(5, 3)


def _rand_X(gen, n=5, p=3, scale=2.0):
    return scale * gen.standard_normal((n, p))


def test_mle_is_identity():
    gen = RngState(0).generator()
    X = _rand_X(gen)
    assert np.array_equal(estimate(MLE(), X), X)


def test_em_exact_cancellation():
    X = np.zeros((5, 3))
    X[:3, :3] = np.eye(3)  # X'X = I, n-p-1 = 1
    assert np.abs(estimate(EfronMorris(), X)).max() < 1e-14


def test_js_zero_at_boundary():
    gen = RngState(1).generator()
    X = _rand_X(gen)
    X *= np.sqrt((5 * 3 - 2.0) / np.sum(X * X))  # ||X||_F^2 = np - 2
    assert np.abs(estimate(JamesStein(), X)).max() < 1e-12


def test_em_svd_route_agreement():
    gen = RngState(2).generator()
    for _ in range(10):
        X = _rand_X(gen)
        u, s, vt = np.linalg.svd(X, full_matrices=False)
        svd_route = (u * (s - 1.0 / s)) @ vt  # n-p-1 = 1
        assert np.abs(efron_morris(X) - svd_route).max() < 1e-10


def test_em_pseudo_bayes_identity():
    gen = RngState(3).generator()
    X = _rand_X(gen)
    assert np.abs(efron_morris(X) - (X + grad_log_density(SVS(), X))).max() < 1e-10


def test_em_shrinks_singular_values_keeps_vectors():
    gen = RngState(4).generator()
    X = embed_spectrum(DIMS, [9.0, 5.0, 2.0]) + 0.01 * gen.standard_normal((5, 3))
    Mhat = efron_morris(X)
    sx, sm = singular_values(X), singular_values(Mhat)
    assert np.all(sm <= sx + 1e-12)
    ux, _, vxt = np.linalg.svd(X, full_matrices=False)
    um, _, vmt = np.linalg.svd(Mhat, full_matrices=False)
    for i in range(3):
        assert abs(abs(ux[:, i] @ um[:, i]) - 1.0) < 1e-8
        assert abs(abs(vxt[i] @ vmt[i]) - 1.0) < 1e-8


def test_em_regime_violation():
    X = np.ones((4, 3)) + np.eye(4, 3)
    with pytest.raises(RegimeViolation):
        efron_morris(X)


def test_columnwise_js():
    gen = RngState(5).generator()
    X = _rand_X(gen)
    assert np.array_equal(columnwise_js(X, 0.0), X)
    c = float(np.sum(X[:, 1] ** 2))
    Mhat = columnwise_js(X, c)
    assert np.abs(Mhat[:, 1]).max() < 1e-12
    with pytest.raises(ZeroColumn):
        columnwise_js(np.hstack([X[:, :2], np.zeros((5, 1))]))


def test_columnwise_js_p1_reduces_to_james_stein():
    gen = RngState(6).generator()
    X = gen.standard_normal((7, 1)) * 3.0
    # p = 1: default c = (n-2)/p = n-2 = np-2, the James-Stein constant
    assert np.abs(columnwise_js(X) - james_stein(X)).max() < 1e-12


def test_generalized_shrinkage_identities():
    gen = RngState(7).generator()
    X = _rand_X(gen)
    assert np.array_equal(generalized_shrinkage(X, 0.0), X)
    assert np.abs(generalized_shrinkage(X, 1.0) - efron_morris(X)).max() < 1e-14


def test_singular_gram_raises():
    X = np.zeros((5, 3))
    X[:, 0] = 1.0  # rank one
    with pytest.raises(SingularGram):
        efron_morris(X)


def test_james_stein_zero_matrix():
    with pytest.raises(ZeroColumn):
        james_stein(np.zeros((5, 3)))


def test_gb_flat_prior_near_identity():
    gen = RngState(8).generator()
    X = _rand_X(gen)
    n_samples = 10_000
    Mhat, ess = gb_posterior_mean(ms.Flat(), X, ISConfig(n_samples=n_samples, rng=RngState(44)))
    assert abs(ess - n_samples) < 1e-6  # flat weights
    assert np.linalg.norm(Mhat - X) <= 4.0 * np.sqrt(15.0 / n_samples)


def test_gb_sign_symmetric_prior_exact_zero_at_origin():
    X = np.zeros((5, 3))
    Mhat, _ = gb_posterior_mean(
        MatrixT(alpha=-6.0, beta=1.0), X, ISConfig(n_samples=2000, rng=RngState(45))
    )
    assert np.abs(Mhat).max() < 1e-12


def test_gb_svs_matches_em_at_large_signal():
    # independent oracle: a 1e6-sample IS run; EM and the SVS Bayes rule agree
    # closely when all singular values are large
    X = embed_spectrum(DIMS, [20.0, 20.0, 20.0])
    Mhat, _ = gb_posterior_mean(SVS(), X, ISConfig(n_samples=1_000_000, rng=RngState(46)))
    assert np.abs(Mhat - efron_morris(X)).max() < 0.05


def test_gb_reproducible():
    gen = RngState(9).generator()
    X = _rand_X(gen)
    cfg = ISConfig(n_samples=2000, rng=RngState(47))
    a, ea = gb_posterior_mean(SVS(), X, cfg)
    b, eb = gb_posterior_mean(SVS(), X, cfg)
    assert np.array_equal(a, b)
    assert ea == eb


def test_gb_svs_regime_check():
    X = np.ones((4, 3)) + np.eye(4, 3)
    with pytest.raises(RegimeViolation):
        gb_posterior_mean(SVS(), X)


def test_gb_low_ess_warning():
    # an offset observation with a sharply peaked prior starves the ESS
    X = embed_spectrum(DIMS, [10.0, 0.0, 0.0])
    with pytest.warns(LowESSWarning):
        gb_posterior_mean(
            SteinFrobenius(c=500.0, beta=1.0), X, ISConfig(n_samples=500, rng=RngState(48))
        )


def test_gb_shrinks_toward_origin():
    # claimed-superharmonic priors shrink: ||Mhat|| <= ||X|| up to MC noise
    X = embed_spectrum(DIMS, [6.0, 3.0, 1.0])
    for prior in (SVS(), MatrixT(alpha=-6.0, beta=1.0)):
        norms = []
        for s in range(5):
            Mhat, _ = gb_posterior_mean(prior, X, ISConfig(n_samples=4000, rng=RngState(50 + s)))
            norms.append(np.linalg.norm(Mhat))
        se = np.std(norms, ddof=1) / np.sqrt(len(norms))
        assert np.mean(norms) <= np.linalg.norm(X) + 4.0 * se


def test_equivariance_non_bayes():
    gen = RngState(10).generator()
    X = _rand_X(gen)
    U, _ = np.linalg.qr(gen.standard_normal((5, 5)))
    V, _ = np.linalg.qr(gen.standard_normal((3, 3)))
    XR = U @ X @ V.T
    for spec in (MLE(), EfronMorris(), JamesStein(), GeneralizedShrinkage(c=1.5)):
        left = estimate(spec, XR)
        right = U @ estimate(spec, X) @ V.T
        assert np.abs(left - right).max() < 1e-9


def test_equivariance_bayes_with_rotated_draws():
    # rotating X and the common random draws rotates the posterior mean
    gen = RngState(11).generator()
    X = _rand_X(gen)
    Z = gen.standard_normal((1000, 5, 3))
    U, _ = np.linalg.qr(gen.standard_normal((5, 5)))
    V, _ = np.linalg.qr(gen.standard_normal((3, 3)))
    ZR = np.einsum("ab,kbj,cj->kac", U, Z, V)
    for prior in (SVS(), MatrixT(-6.0, 1.0), SteinFrobenius(3.0, 0.5)):
        m, e = is_posterior_mean_kernel(X, Z, prior, 5, 3)
        mr, er = is_posterior_mean_kernel(U @ X @ V.T, ZR, prior, 5, 3)
        assert np.abs(mr - U @ m @ V.T).max() < 1e-9
        assert abs(e - er) < 1e-6 * (1 + e)


@pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernels unavailable")
def test_backends_agree():
    gen = RngState(12).generator()
    X = _rand_X(gen)
    Z = gen.standard_normal((800, 5, 3))
    py = get_backend("python")
    cy = get_backend("compiled")
    for fam, a, b in [(0, 0.0, 0.0), (1, 0.5, 0.0), (1, 1.5, 2.0), (2, 3.0, 1.0), (3, 1.0, 0.5)]:
        m1, e1 = py.is_posterior_mean(X, Z, fam, a, b)
        m2, e2 = cy.is_posterior_mean(X, Z, fam, a, b)
        assert np.abs(m1 - m2).max() < 1e-9
        assert abs(e1 - e2) < 1e-6 * (1 + e1)


def test_mixture_path_activation():
    from matshrink.estimators import needs_defensive_mixture

    assert needs_defensive_mixture(SteinFrobenius(c=13.0), 5, 3)
    assert not needs_defensive_mixture(SteinFrobenius(c=3.0), 5, 3)  # c < np/2
    assert not needs_defensive_mixture(SteinFrobenius(c=13.0, beta=1.0), 5, 3)
    assert not needs_defensive_mixture(SVS(), 5, 3)


def test_mixture_posterior_mean_exact_zero_and_reproducible():
    from matshrink.estimators import gb_draw_and_estimate

    # sign-symmetric prior at X = O: antithetic accumulation cancels exactly
    gen = RngState(60).generator()
    Mhat, _ = gb_draw_and_estimate(SteinFrobenius(c=13.0), np.zeros((5, 3)), gen, 2000)
    assert np.abs(Mhat).max() == 0.0

    X = embed_spectrum(DIMS, [5.0, 0.0, 0.0])
    cfg = ISConfig(n_samples=2000, rng=RngState(61))
    a, ea = gb_posterior_mean(SteinFrobenius(c=13.0), X, cfg)
    b, eb = gb_posterior_mean(SteinFrobenius(c=13.0), X, cfg)
    assert np.array_equal(a, b)
    assert ea == eb


def test_mixture_posterior_mean_overflows_to_unsupported():
    from matshrink import Unsupported

    with pytest.raises(Unsupported):
        gb_posterior_mean(
            SteinFrobenius(c=20.0), np.ones((5, 3)), ISConfig(n_samples=200, rng=RngState(62))
        )


def test_mixture_matches_plain_path_where_both_valid():
    # at c just below np/2 the plain weights have finite variance; the two
    # routes must agree statistically on the posterior mean
    from matshrink._kernels_py import is_posterior_mean_stein_mixture
    import math

    c = 7.0  # < np/2 = 7.5
    X = embed_spectrum(DIMS, [3.0, 1.0, 0.0])
    plain, _ = gb_posterior_mean(
        SteinFrobenius(c=c), X, ISConfig(n_samples=400_000, rng=RngState(63))
    )
    gen = RngState(64).generator()
    d = 15
    k1, k2 = 140_000, 60_000
    Z = gen.standard_normal((k1, 5, 3))
    G = gen.standard_normal((k2, 5, 3))
    U = gen.random(k2)
    tau = math.sqrt(d) + float(np.linalg.norm(X))
    radii = tau * U ** (1.0 / (d - c))
    M2 = radii[:, None, None] * (G / np.sqrt((G * G).sum(axis=(1, 2), keepdims=True)))
    log_omega = math.log(2.0) + 0.5 * d * math.log(math.pi) - math.lgamma(d / 2.0)
    log_g_norm = math.log(d - c) - log_omega - (d - c) * math.log(tau)
    mixed, _ = is_posterior_mean_stein_mixture(X, Z, M2, c, 0.0, 0.3, tau, log_g_norm)
    assert np.abs(mixed - plain).max() < 0.05


@pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernels unavailable")
def test_mixture_backends_agree():
    import math

    gen = RngState(65).generator()
    X = embed_spectrum(DIMS, [5.0, 0.0, 0.0])
    d, c = 15, 13.0
    Z = gen.standard_normal((700, 5, 3))
    G = gen.standard_normal((300, 5, 3))
    U = gen.random(300)
    tau = math.sqrt(d) + float(np.linalg.norm(X))
    radii = tau * U ** (1.0 / (d - c))
    M2 = radii[:, None, None] * (G / np.sqrt((G * G).sum(axis=(1, 2), keepdims=True)))
    log_omega = math.log(2.0) + 0.5 * d * math.log(math.pi) - math.lgamma(d / 2.0)
    log_g_norm = math.log(d - c) - log_omega - (d - c) * math.log(tau)
    py = get_backend("python")
    cy = get_backend("compiled")
    m1, e1 = py.is_posterior_mean_stein_mixture(X, Z, M2, c, 0.0, 0.3, tau, log_g_norm)
    m2, e2 = cy.is_posterior_mean_stein_mixture(X, Z, M2, c, 0.0, 0.3, tau, log_g_norm)
    assert np.abs(m1 - m2).max() < 1e-9
    assert abs(e1 - e2) < 1e-6 * (1 + e1)


@pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernels unavailable")
def test_backends_agree_large_p_cholesky_path():
    gen = RngState(13).generator()
    X = gen.standard_normal((8, 5))
    Z = gen.standard_normal((300, 8, 5))
    py = get_backend("python")
    cy = get_backend("compiled")
    m1, e1 = py.is_posterior_mean(X, Z, 1, 1.0, 0.5)
    m2, e2 = cy.is_posterior_mean(X, Z, 1, 1.0, 0.5)
    assert np.abs(m1 - m2).max() < 1e-9
    assert abs(e1 - e2) < 1e-6 * (1 + e1)


def test_estimate_stack_matches_single():
    gen = RngState(14).generator()
    Xs = gen.standard_normal((20, 5, 3)) * 2.0
    for spec in (MLE(), EfronMorris(), JamesStein(), ColumnwiseJS(), GeneralizedShrinkage(c=0.7)):
        batch = estimate_stack(spec, Xs)
        for k in range(20):
            assert np.abs(batch[k] - estimate(spec, Xs[k])).max() < 1e-10


def test_spec_json_roundtrip():
    specs = [
        MLE(),
        EfronMorris(),
        JamesStein(),
        ColumnwiseJS(),
        ColumnwiseJS(c=0.5),
        GeneralizedShrinkage(c=2.0),
        GeneralizedBayes(prior=SVS(), is_config=ISConfig(n_samples=5000, rng=RngState(3, 1))),
    ]
    for spec in specs:
        assert spec_from_json(spec_to_json(spec)) == spec
    with pytest.raises(ValueError):
        spec_from_json({"kind": "nope"})


def test_isconfig_validation():
    with pytest.raises(ValueError):
        ISConfig(n_samples=10)
    with pytest.raises(ValueError):
        ISConfig(ess_floor=0.0)
    with pytest.raises(ValueError):
        GeneralizedShrinkage(c=-1.0)

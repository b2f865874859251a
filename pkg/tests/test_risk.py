import numpy as np
import pytest

from matshrink import (
    ColumnwiseJS,
    EfronMorris,
    GeneralizedBayes,
    GeneralizedShrinkage,
    ISConfig,
    JamesStein,
    MLE,
    ProblemDims,
    RegimeViolation,
    RngState,
    SVS,
    Unsupported,
    em_exact_risk_at_zero,
    embed_spectrum,
    frobenius_reduction_bound,
    gram_inverse,
    loewner_leq,
    matrix_divergence_fd,
    mc_risk,
    minimaxity_sweep,
    sure,
    sure_unbiasedness_check,
    sweep_to_csv,
)

DIMS = ProblemDims(5, 3)


def test_mc_risk_mle_constant_risk():
    report = mc_risk(MLE(), embed_spectrum(DIMS, [5.0, 2.0, 0.0]), 20_000, RngState(1))
    assert np.all(np.abs(report.eigenvalues - 5.0) <= 4.0 * report.eig_std_errors + 0.05)
    assert abs(report.frobenius_risk - np.trace(report.mean_risk)) < 1e-10
    assert report.n_reps == 20_000


def test_mc_risk_em_at_zero_matches_exact_value():
    report = mc_risk(EfronMorris(), np.zeros((5, 3)), 20_000, RngState(2))
    assert np.all(np.abs(report.eigenvalues - 4.0) <= 4.0 * report.eig_std_errors + 0.05)


def test_mc_risk_determinism_and_worker_independence():
    M = embed_spectrum(DIMS, [3.0, 1.0, 0.0])
    a = mc_risk(EfronMorris(), M, 5000, RngState(3))
    b = mc_risk(EfronMorris(), M, 5000, RngState(3))
    c = mc_risk(EfronMorris(), M, 5000, RngState(3), workers=2)
    assert np.array_equal(a.mean_risk, b.mean_risk)
    assert np.array_equal(a.mean_risk, c.mean_risk)
    assert np.array_equal(a.eig_std_errors, c.eig_std_errors)


def test_mc_risk_bayes_determinism_and_diagnostics():
    spec = GeneralizedBayes(prior=SVS(), is_config=ISConfig(n_samples=1000))
    M = embed_spectrum(DIMS, [5.0, 0.0, 0.0])
    a = mc_risk(spec, M, 600, RngState(4))
    b = mc_risk(spec, M, 600, RngState(4), workers=2)
    assert np.array_equal(a.mean_risk, b.mean_risk)
    assert a.diagnostics["mean_ess"] > 0
    assert "frac_low_ess" in a.diagnostics


def test_mc_risk_common_random_numbers():
    # same seed means same replicate draws across estimator specs
    M = embed_spectrum(DIMS, [4.0, 2.0, 1.0])
    a = mc_risk(MLE(), M, 2000, RngState(5))
    b = mc_risk(GeneralizedShrinkage(c=0.0), M, 2000, RngState(5))
    assert np.allclose(a.mean_risk, b.mean_risk, atol=1e-12)


def test_mc_risk_rejects_few_reps():
    with pytest.raises(ValueError):
        mc_risk(MLE(), np.zeros((5, 3)), 1, RngState(0))


def test_matrix_divergence_identity_map():
    gen = RngState(6).generator()
    X = gen.standard_normal((5, 3))
    div = matrix_divergence_fd(lambda S: S, X)
    assert np.abs(div - 5.0 * np.eye(3)).max() < 1e-8
    div = matrix_divergence_fd(lambda S: np.ones_like(S), X)
    assert np.abs(div).max() < 1e-9


def test_matrix_divergence_em_closed_form():
    gen = RngState(7).generator()
    for _ in range(5):
        X = 2.0 * gen.standard_normal((5, 3))

        def g(S):
            single = S.ndim == 2
            stack = S[None] if single else S
            inv = np.linalg.inv(np.swapaxes(stack, -1, -2) @ stack)
            out = -1.0 * stack @ inv  # n-p-1 = 1
            return out[0] if single else out

        div = matrix_divergence_fd(g, X)
        expected = -1.0 * gram_inverse(X)
        rel = np.linalg.norm(div - expected) / np.linalg.norm(expected)
        assert rel < 1e-5


def test_sure_mle_exact():
    gen = RngState(8).generator()
    X = gen.standard_normal((5, 3))
    rep = sure(MLE(), X)
    assert np.array_equal(rep.estimate, 5.0 * np.eye(3))
    assert rep.divergence_method == "CLOSED_FORM"


def test_sure_em_formula():
    gen = RngState(9).generator()
    X = 2.0 * gen.standard_normal((5, 3))
    rep = sure(EfronMorris(), X)
    expected = 5.0 * np.eye(3) - 1.0 * gram_inverse(X)  # (n-p-1)^2 = 1
    assert np.abs(rep.estimate - expected).max() < 1e-12


@pytest.mark.parametrize(
    "spec",
    [EfronMorris(), JamesStein(), ColumnwiseJS(), GeneralizedShrinkage(c=1.7)],
)
def test_sure_closed_vs_fd(spec):
    gen = RngState(10).generator()
    for _ in range(5):
        X = 2.0 * gen.standard_normal((5, 3))
        closed = sure(spec, X).estimate
        fd = sure(spec, X, method="fd")
        assert fd.divergence_method == "FINITE_DIFFERENCE"
        rel = np.linalg.norm(closed - fd.estimate) / np.linalg.norm(closed)
        assert rel < 1e-5


def test_sure_rejects_bayes():
    spec = GeneralizedBayes(prior=SVS())
    with pytest.raises(Unsupported):
        sure(spec, np.ones((5, 3)))
    with pytest.raises(Unsupported):
        sure_unbiasedness_check(spec, np.zeros((5, 3)), 100, RngState(0))


def test_sure_unbiasedness_mle_exact():
    report = sure_unbiasedness_check(MLE(), np.zeros((5, 3)), 500, RngState(11))
    # SURE(MLE) = n I exactly and the MC risk of the MLE averages to n I;
    # the discrepancy is pure MC noise of the loss
    assert report.max_discrepancy <= 4.0 * report.discrepancy_std_error + 0.2


@pytest.mark.parametrize("spec", [EfronMorris(), ColumnwiseJS(), JamesStein()])
def test_sure_unbiasedness_within_4se(spec):
    M = embed_spectrum(DIMS, [5.0, 2.0, 0.0])
    report = sure_unbiasedness_check(spec, M, 100_000, RngState(12))
    assert report.max_discrepancy <= 4.0 * report.discrepancy_std_error


def test_em_exact_risk_values():
    assert np.array_equal(em_exact_risk_at_zero(DIMS), 4.0 * np.eye(3))
    assert np.array_equal(em_exact_risk_at_zero(ProblemDims(100, 20)), 21.0 * np.eye(20))
    with pytest.raises(RegimeViolation):
        em_exact_risk_at_zero(ProblemDims(4, 3))


def test_em_exact_risk_mc_consistency():
    report = mc_risk(EfronMorris(), np.zeros((5, 3)), 20_000, RngState(13))
    exact = np.diag(em_exact_risk_at_zero(DIMS))
    assert np.all(np.abs(report.eigenvalues - exact) <= 4.0 * report.eig_std_errors + 0.02)


def test_frobenius_reduction_bound():
    assert frobenius_reduction_bound(DIMS, 3) == 0.0
    assert frobenius_reduction_bound(ProblemDims(100, 20), 5) == pytest.approx(1200.0)
    assert frobenius_reduction_bound(ProblemDims(7, 7), 2) == 0.0
    with pytest.raises(ValueError):
        frobenius_reduction_bound(DIMS, 4)


@pytest.mark.parametrize("p,reference,tol", [(10, 11.1974, 0.5), (50, 52.0397, 1.0)])
def test_em_risk_at_zero_higher_dimension(p, reference, tol):
    # published largest eigenvalues at sigma_1 = 0, n = 100 (close to p + 1)
    rep = mc_risk(EfronMorris(), np.zeros((100, p)), 10_000, RngState(31))
    assert abs(rep.eigenvalues[0] - reference) < tol


def test_minimaxity_sweep_mle_and_em_pass():
    spectra = [[0.0, 0.0, 0.0], [5.0, 2.0, 0.0], [10.0, 10.0, 10.0]]
    for spec in (MLE(), EfronMorris()):
        rows = minimaxity_sweep(spec, DIMS, spectra, 4000, RngState(14))
        assert all(r.passed for r in rows)


def test_risk_spectra_equivariance():
    # risk eigenvalues depend on M only through its singular values
    gen = RngState(15).generator()
    M = embed_spectrum(DIMS, [6.0, 2.0, 1.0])
    U, _ = np.linalg.qr(gen.standard_normal((5, 5)))
    V, _ = np.linalg.qr(gen.standard_normal((3, 3)))
    a = mc_risk(EfronMorris(), M, 20_000, RngState(16))
    b = mc_risk(EfronMorris(), U @ M @ V.T, 20_000, RngState(16))
    joint_se = np.sqrt(a.eig_std_errors**2 + b.eig_std_errors**2)
    assert np.all(np.abs(a.eigenvalues - b.eigenvalues) <= 4.0 * joint_se)


def test_em_loewner_dominance():
    # EM risk is dominated by the minimax level n I at every tested mean
    for sigma in ([0.0, 0.0, 0.0], [5.0, 0.0, 0.0], [8.0, 4.0, 2.0]):
        rep = mc_risk(EfronMorris(), embed_spectrum(DIMS, sigma), 10_000, RngState(17))
        slack = 4.0 * rep.eig_std_errors.max()
        assert loewner_leq(rep.mean_risk, (5.0 + slack) * np.eye(3))


def test_gshrink_sure_range():
    gen = RngState(18).generator()
    n, p = 5, 3
    boundary = 2.0 * (n - p - 1)
    for _ in range(10):
        X = 2.0 * gen.standard_normal((n, p))
        rep = sure(GeneralizedShrinkage(c=boundary), X)
        assert np.linalg.eigvalsh(rep.estimate)[-1] <= n + 1e-9
        # inside the range the correction 2 div + g'g is NSD
        for c in (0.5, 1.0, boundary):
            rep = sure(GeneralizedShrinkage(c=c), X)
            assert np.linalg.eigvalsh(rep.estimate - n * np.eye(p))[-1] <= 1e-9
        # outside it the SURE top eigenvalue exceeds n
        rep = sure(GeneralizedShrinkage(c=boundary + 1.0), X)
        assert np.linalg.eigvalsh(rep.estimate)[-1] > n


def test_sweep_csv_roundtrip(tmp_path):
    rows = minimaxity_sweep(MLE(), DIMS, [[2.0, 1.0, 0.0], [4.0, 0.0, 0.0]], 200, RngState(19))
    path = tmp_path / "sweep.csv"
    sweep_to_csv(rows, path)
    data = np.genfromtxt(path, delimiter=",", names=True)
    assert data.shape == (2,)
    lam = np.array([[row[f"lambda_{i+1}"] for i in range(3)] for row in data])
    fro = np.array([row["frobenius"] for row in data])
    assert np.abs(lam.sum(axis=1) - fro).max() < 1e-9

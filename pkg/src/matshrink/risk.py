"""Matrix quadratic risk machinery.

The risk of an estimator is R(M) = E[(Mhat(X) - M)'(Mhat(X) - M)] for
X ~ N(M, I_n, I_p). `mc_risk` estimates it by Monte Carlo with per-replicate
RNG streams (stream = base + replicate index), so results are bit-identical
for any degree of parallelism, and replicates are shared across estimators
when the same seed is used (common random numbers).

`sure` evaluates the pointwise unbiased risk estimate
n I_p + div + div' + g'g for Mhat = X + g(X), with the matrix divergence
(div g)_ij = sum_a d g_aj / d X_ai in closed form for the registered
estimators and by central differences otherwise.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteEvaluation, Unsupported
from .estimators import (
    ColumnwiseJS,
    EfronMorris,
    EstimatorSpec,
    GeneralizedBayes,
    GeneralizedShrinkage,
    JamesStein,
    MLE,
    SVS,
    estimate_stack,
    gb_draw_and_estimate,
    resolve_cjs_constant,
)
from .matcore import ProblemDims, RngState, as_matrix, dims_of, symmetrize

CLOSED_FORM = "CLOSED_FORM"
FINITE_DIFFERENCE = "FINITE_DIFFERENCE"


@dataclass
class RiskReport:
    """Monte Carlo estimate of the p x p risk matrix and its eigenvalues."""

    mean_risk: np.ndarray
    eigenvalues: np.ndarray
    eig_std_errors: np.ndarray
    n_reps: int
    frobenius_risk: float
    seed: RngState
    frobenius_std_error: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "mean_risk": self.mean_risk.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "eig_std_errors": self.eig_std_errors.tolist(),
            "n_reps": self.n_reps,
            "frobenius_risk": self.frobenius_risk,
            "frobenius_std_error": self.frobenius_std_error,
            "seed": self.seed.to_json(),
            "diagnostics": self.diagnostics,
        }


@dataclass
class SureReport:
    estimate: np.ndarray
    divergence_method: str

    def to_json(self) -> dict:
        return {
            "estimate": self.estimate.tolist(),
            "divergence_method": self.divergence_method,
        }


@dataclass
class SureCheckReport:
    """Entrywise comparison of averaged SURE against the MC risk (same replicates)."""

    mean_sure: np.ndarray
    mean_risk: np.ndarray
    max_discrepancy: float
    discrepancy_std_error: float
    n_reps: int

    def to_json(self) -> dict:
        return {
            "mean_sure": self.mean_sure.tolist(),
            "mean_risk": self.mean_risk.tolist(),
            "max_discrepancy": self.max_discrepancy,
            "discrepancy_std_error": self.discrepancy_std_error,
            "n_reps": self.n_reps,
        }


def _loss_stack(Mhat: np.ndarray, M: np.ndarray) -> np.ndarray:
    D = Mhat - M
    return np.einsum("rai,raj->rij", D, D)


def _draw_obs_stack(M: np.ndarray, seed: int, base: int, lo: int, hi: int) -> np.ndarray:
    n, p = M.shape
    Xs = np.empty((hi - lo, n, p))
    for r in range(lo, hi):
        gen = RngState(seed, base + r).generator()
        gen.standard_normal(out=Xs[r - lo])
    Xs += M
    return Xs


def _segment_sums(L: np.ndarray, lo: int, hi: int, bsize: int, n_batches: int):
    """Per-batch partial sums of a (reps, p, p) stack for global indices [lo, hi)."""
    idx = np.minimum(np.arange(lo, hi) // bsize, n_batches - 1)
    starts = np.concatenate([[0], np.flatnonzero(np.diff(idx)) + 1])
    sums = np.add.reduceat(L, starts, axis=0)
    counts = np.diff(np.concatenate([starts, [len(idx)]]))
    return idx[starts], counts, sums


def _risk_chunk(args):
    spec, M, seed, base, lo, hi, bsize, n_batches = args
    n, p = M.shape
    diagnostics = None
    if isinstance(spec, GeneralizedBayes):
        n_samples = 2 * ((spec.is_config.n_samples + 1) // 2)
        L = np.empty((hi - lo, p, p))
        ess_sum, ess_min, n_low = 0.0, math.inf, 0
        floor = spec.is_config.ess_floor * n_samples
        for r in range(lo, hi):
            gen = RngState(seed, base + r).generator()
            X = M + gen.standard_normal((n, p))
            Mhat, ess = gb_draw_and_estimate(spec.prior, X, gen, n_samples)
            D = Mhat - M
            L[r - lo] = D.T @ D
            ess_sum += ess
            ess_min = min(ess_min, ess)
            n_low += ess < floor
        diagnostics = (ess_sum, ess_min, n_low)
    else:
        Xs = _draw_obs_stack(M, seed, base, lo, hi)
        Mhat = estimate_stack(spec, Xs)
        L = _loss_stack(Mhat, M)
    ids, counts, sums = _segment_sums(L, lo, hi, bsize, n_batches)
    return ids, counts, sums, diagnostics


def _chunk_ranges(n_reps: int, chunk: int):
    return [(lo, min(lo + chunk, n_reps)) for lo in range(0, n_reps, chunk)]


def _chunk_size(spec: EstimatorSpec, n: int, p: int) -> int:
    if isinstance(spec, GeneralizedBayes):
        return 256
    return max(1, min(16384, 2_000_000 // (n * p)))


def _run_chunks(worker, args_list, workers: int):
    if workers > 1 and len(args_list) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(worker, args_list))
    return [worker(a) for a in args_list]


def _batch_layout(n_reps: int) -> tuple[int, int]:
    n_batches = max(2, math.isqrt(n_reps))
    bsize = max(1, n_reps // n_batches)
    return n_batches, bsize


def _eig_desc(S: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(S)[..., ::-1]


def mc_risk(
    spec: EstimatorSpec,
    M,
    n_reps: int,
    rng: RngState,
    workers: int = 1,
) -> RiskReport:
    """Monte Carlo risk matrix of an estimator at mean M.

    Draws X_r ~ N(M, I, I) with per-replicate streams, averages the loss
    matrices, and reports descending eigenvalues of the averaged matrix with
    standard errors from sqrt(n_reps) batch means (eigenvalues of batch-mean
    matrices, never averages of per-replicate eigenvalues).
    """
    M = as_matrix(M)
    n, p = M.shape
    if n_reps < 2:
        raise ValueError("n_reps must be at least 2")
    if isinstance(spec, GeneralizedBayes) and isinstance(spec.prior, SVS):
        dims_of(M).require_em_regime()

    n_batches, bsize = _batch_layout(n_reps)
    chunk = _chunk_size(spec, n, p)
    args = [
        (spec, M, rng.seed, rng.stream, lo, hi, bsize, n_batches)
        for lo, hi in _chunk_ranges(n_reps, chunk)
    ]
    results = _run_chunks(_risk_chunk, args, workers)

    batch_sums = np.zeros((n_batches, p, p))
    batch_counts = np.zeros(n_batches, dtype=int)
    ess_sum, ess_min, n_low = 0.0, math.inf, 0
    has_ess = False
    for ids, counts, sums, diag in results:
        for k, b in enumerate(ids):
            batch_sums[b] += sums[k]
            batch_counts[b] += counts[k]
        if diag is not None:
            has_ess = True
            ess_sum += diag[0]
            ess_min = min(ess_min, diag[1])
            n_low += diag[2]

    mean_risk = symmetrize(batch_sums.sum(axis=0) / n_reps)
    eigenvalues = _eig_desc(mean_risk)
    batch_means = batch_sums / batch_counts[:, None, None]
    batch_eigs = _eig_desc(batch_means)
    se = batch_eigs.std(axis=0, ddof=1) / math.sqrt(n_batches)
    batch_traces = np.trace(batch_means, axis1=1, axis2=2)
    fro_se = float(batch_traces.std(ddof=1) / math.sqrt(n_batches))

    diagnostics = {}
    if has_ess:
        diagnostics = {
            "mean_ess": ess_sum / n_reps,
            "min_ess": ess_min,
            "frac_low_ess": n_low / n_reps,
        }
    return RiskReport(
        mean_risk=mean_risk,
        eigenvalues=eigenvalues,
        eig_std_errors=se,
        n_reps=n_reps,
        frobenius_risk=float(np.trace(mean_risk)),
        seed=rng,
        frobenius_std_error=fro_se,
        diagnostics=diagnostics,
    )


def matrix_divergence_fd(g, X, h: float | None = None) -> np.ndarray:
    """Central-difference matrix divergence (div g)_ij = sum_a d g_aj / d X_ai.

    `g` maps n x p matrices to n x p matrices; it may also accept stacks
    (B, n, p) -> (B, n, p), which is used to batch the 2np evaluations.
    """
    X = as_matrix(X)
    n, p = X.shape
    if h is None:
        h = 1e-6 * (1.0 + float(np.linalg.norm(X)))
    stencil = []
    for a in range(n):
        for i in range(p):
            Xp = X.copy()
            Xp[a, i] += h
            Xm = X.copy()
            Xm[a, i] -= h
            stencil.extend([Xp, Xm])
    stack = np.stack(stencil)
    vals = _eval_matrixfn_stack(g, stack, n, p)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteEvaluation("divergence stencil evaluated to a non-finite value")
    D = (vals[0::2] - vals[1::2]) / (2.0 * h)  # (n*p, n, p) indexed by (a, i)
    D = D.reshape(n, p, n, p)
    return np.einsum("aiaj->ij", D)


def _eval_matrixfn_stack(g, stack: np.ndarray, n: int, p: int) -> np.ndarray:
    B = stack.shape[0]
    try:
        vals = np.asarray(g(stack), dtype=float)
        if vals.shape == (B, n, p):
            return vals
    except Exception:
        pass
    return np.stack([np.asarray(g(stack[k]), dtype=float) for k in range(B)])


def _sure_stack(spec: EstimatorSpec, Xs: np.ndarray) -> np.ndarray:
    """Closed-form SURE integrand n I + div + div' + g'g over a stack (B, n, p)."""
    B, n, p = Xs.shape
    nI = n * np.eye(p)
    if isinstance(spec, MLE):
        return np.broadcast_to(nI, (B, p, p)).copy()
    if isinstance(spec, (EfronMorris, GeneralizedShrinkage)):
        if isinstance(spec, EfronMorris):
            ProblemDims(n, p).require_em_regime()
            c = float(n - p - 1)
        else:
            c = spec.c
        from .estimators import _gram_inv_stack

        Sinv = _gram_inv_stack(Xs)
        return nI + (c * c - 2.0 * c * (n - p - 1)) * Sinv
    if isinstance(spec, JamesStein):
        k = n * p - 2.0
        t = np.sum(Xs * Xs, axis=(1, 2))[:, None, None]
        from .estimators import _gram_stack

        G = _gram_stack(Xs)
        return nI - (2.0 * k * n / t) * np.eye(p) + (4.0 * k + k * k) * G / t**2
    if isinstance(spec, ColumnwiseJS):
        c = resolve_cjs_constant(spec.c, n, p)
        q = np.sum(Xs * Xs, axis=1)  # (B, p)
        from .estimators import _gram_stack

        G = _gram_stack(Xs)
        div_diag = -c * (n - 2.0) / q
        sure = np.zeros((B, p, p))
        sure += nI
        sure[:, np.arange(p), np.arange(p)] += 2.0 * div_diag
        sure += c * c * G / (q[:, :, None] * q[:, None, :])
        return sure
    raise Unsupported(f"no closed-form SURE for {spec!r}")


def sure(spec: EstimatorSpec, X, method: str = "auto") -> SureReport:
    """Pointwise unbiased risk estimate for a non-Bayes estimator at X.

    method: "auto" uses the registered closed-form divergence, "fd" forces
    the finite-difference divergence of g(X) = Mhat(X) - X. Bayes specs are
    rejected (weak differentiability of the IS posterior-mean map is not
    certified numerically).
    """
    X = as_matrix(X)
    n, p = X.shape
    if isinstance(spec, GeneralizedBayes):
        raise Unsupported("SURE is not provided for generalized Bayes estimators")
    if method not in ("auto", "fd"):
        raise ValueError("method must be 'auto' or 'fd'")
    if method == "auto":
        est = _sure_stack(spec, X[None])[0]
        return SureReport(estimate=symmetrize(est), divergence_method=CLOSED_FORM)

    def g(stack):
        single = stack.ndim == 2
        s = stack[None] if single else stack
        out = estimate_stack(spec, s) - s
        return out[0] if single else out

    div = matrix_divergence_fd(g, X)
    gx = g(X)
    est = n * np.eye(p) + div + div.T + gx.T @ gx
    return SureReport(estimate=symmetrize(est), divergence_method=FINITE_DIFFERENCE)


def _sure_check_chunk(args):
    spec, M, seed, base, lo, hi, bsize, n_batches = args
    Xs = _draw_obs_stack(M, seed, base, lo, hi)
    L = _loss_stack(estimate_stack(spec, Xs), M)
    S = _sure_stack(spec, Xs)
    ids, counts, sums_diff = _segment_sums(S - L, lo, hi, bsize, n_batches)
    _, _, sums_sure = _segment_sums(S, lo, hi, bsize, n_batches)
    return ids, counts, sums_diff, sums_sure


def sure_unbiasedness_check(
    spec: EstimatorSpec,
    M,
    n_reps: int,
    rng: RngState,
    workers: int = 1,
) -> SureCheckReport:
    """Average SURE over replicates and compare entrywise with the MC risk.

    Both averages use the same X_r draws, so the discrepancy is mean-zero by
    unbiasedness of SURE; reports the maximum absolute entry of the mean
    difference and the batch-means standard error of that entry.
    """
    M = as_matrix(M)
    n, p = M.shape
    if isinstance(spec, GeneralizedBayes):
        raise Unsupported("SURE is not provided for generalized Bayes estimators")
    n_batches, bsize = _batch_layout(n_reps)
    chunk = _chunk_size(spec, n, p)
    args = [
        (spec, M, rng.seed, rng.stream, lo, hi, bsize, n_batches)
        for lo, hi in _chunk_ranges(n_reps, chunk)
    ]
    results = _run_chunks(_sure_check_chunk, args, workers)

    diff_sums = np.zeros((n_batches, p, p))
    sure_sums = np.zeros((n_batches, p, p))
    counts = np.zeros(n_batches, dtype=int)
    for ids, cnt, sdiff, ssure in results:
        for k, b in enumerate(ids):
            diff_sums[b] += sdiff[k]
            sure_sums[b] += ssure[k]
            counts[b] += cnt[k]

    mean_diff = diff_sums.sum(axis=0) / n_reps
    mean_sure = sure_sums.sum(axis=0) / n_reps
    worst = np.unravel_index(np.argmax(np.abs(mean_diff)), mean_diff.shape)
    batch_means = diff_sums / counts[:, None, None]
    se_entry = float(
        batch_means[:, worst[0], worst[1]].std(ddof=1) / math.sqrt(n_batches)
    )
    return SureCheckReport(
        mean_sure=mean_sure,
        mean_risk=mean_sure - mean_diff,
        max_discrepancy=float(np.abs(mean_diff).max()),
        discrepancy_std_error=se_entry,
        n_reps=n_reps,
    )


def em_exact_risk_at_zero(dims: ProblemDims) -> np.ndarray:
    """Exact Efron-Morris risk matrix at M = O: (p + 1) I_p."""
    dims.require_em_regime()
    return (dims.p + 1.0) * np.eye(dims.p)


def frobenius_reduction_bound(dims: ProblemDims, r: int) -> float:
    """Guaranteed Frobenius risk reduction np (1 - r/p)(1 - p/n) at rank r."""
    if not 0 <= r <= dims.p:
        raise ValueError(f"need 0 <= r <= p, got r={r}, p={dims.p}")
    n, p = dims.n, dims.p
    return n * p * (1.0 - r / p) * (1.0 - p / n)


@dataclass
class SweepRow:
    sigma: np.ndarray
    report: RiskReport
    passed: bool

    def to_json(self) -> dict:
        return {
            "sigma": self.sigma.tolist(),
            "report": self.report.to_json(),
            "passed": self.passed,
        }


def minimaxity_sweep(
    spec: EstimatorSpec,
    dims: ProblemDims,
    spectra,
    n_reps: int,
    rng: RngState,
    workers: int = 1,
) -> list[SweepRow]:
    """Risk eigenvalues over a grid of singular-value profiles.

    Each profile is embedded as a canonical diagonal mean; a grid point passes
    when lambda_1 <= n + 4 * SE(lambda_1), the sampled version of the
    minimaxity criterion (constant MLE risk n I makes n the minimax level).
    """
    from .matcore import embed_spectrum

    if len(spectra) == 0:
        raise ValueError("spectra must be nonempty")
    rows = []
    for sigma in spectra:
        sigma = np.asarray(sigma, dtype=float)
        M = embed_spectrum(dims, sigma)
        report = mc_risk(spec, M, n_reps, rng, workers=workers)
        lam1, se1 = report.eigenvalues[0], report.eig_std_errors[0]
        rows.append(SweepRow(sigma=sigma, report=report, passed=bool(lam1 <= dims.n + 4.0 * se1)))
    return rows


def sweep_to_csv(rows: list[SweepRow], path) -> None:
    """Write sweep rows as CSV: sigma_1..p, lambda_1..p, se_1..p, frobenius, n_reps, seed."""
    if not rows:
        raise ValueError("no rows to write")
    p = len(rows[0].sigma)
    cols = (
        [f"sigma_{i+1}" for i in range(p)]
        + [f"lambda_{i+1}" for i in range(p)]
        + [f"se_{i+1}" for i in range(p)]
        + ["frobenius", "n_reps", "seed"]
    )
    lines = [",".join(cols)]
    for row in rows:
        vals = (
            [f"{v:.17g}" for v in row.sigma]
            + [f"{v:.17g}" for v in row.report.eigenvalues]
            + [f"{v:.17g}" for v in row.report.eig_std_errors]
            + [f"{row.report.frobenius_risk:.17g}", str(row.report.n_reps), str(row.report.seed.seed)]
        )
        lines.append(",".join(vals))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")

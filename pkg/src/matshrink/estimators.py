"""Point estimators of a normal mean matrix.

Non-Bayes estimators are deterministic closed forms. Generalized Bayes
posterior means are computed by self-normalized importance sampling with the
likelihood kernel as proposal: for X fixed, the posterior is proportional to
phi(M - X) pi(M), so drawing M_k ~ N(X, I, I) gives weights proportional to
pi(M_k). Antithetic pairs (X + Z, X - Z) are used throughout, and
Frobenius-norm Stein priors steep enough to break the plain proposal get a
defensive mixture component matched to their singularity at the origin.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from ._kernels_py import COLUMNWISE, DET_TYPE, FLAT, STEIN
from .errors import LowESSWarning, SingularGram, Unsupported, ZeroColumn
from .matcore import ProblemDims, RngState, as_matrix, dims_of, gram_inverse
from .priors import (
    ColumnwiseStein,
    Flat,
    MatrixT,
    PriorSpec,
    SteinFrobenius,
    SVS,
    det_exponent,
    family_beta,
    prior_from_json,
    prior_to_json,
)


@dataclass(frozen=True)
class MLE:
    pass


@dataclass(frozen=True)
class EfronMorris:
    pass


@dataclass(frozen=True)
class JamesStein:
    pass


@dataclass(frozen=True)
class ColumnwiseJS:
    # None means the default constant (n - 2) / p, resolved at evaluation
    c: float | None = None


@dataclass(frozen=True)
class GeneralizedShrinkage:
    c: float

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("c must be nonnegative")


@dataclass(frozen=True)
class ISConfig:
    """Importance-sampling configuration for generalized Bayes estimators."""

    n_samples: int = 10_000
    ess_floor: float = 0.02
    rng: RngState = field(default_factory=lambda: RngState(0))

    def __post_init__(self):
        if self.n_samples < 100:
            raise ValueError("n_samples must be at least 100")
        if not 0 < self.ess_floor <= 1:
            raise ValueError("ess_floor must be in (0, 1]")


@dataclass(frozen=True)
class GeneralizedBayes:
    prior: PriorSpec
    is_config: ISConfig = field(default_factory=ISConfig)


EstimatorSpec = (
    MLE | EfronMorris | JamesStein | ColumnwiseJS | GeneralizedShrinkage | GeneralizedBayes
)


def resolve_cjs_constant(c: float | None, n: int, p: int) -> float:
    return (n - 2.0) / p if c is None else float(c)


def prior_kernel_params(prior: PriorSpec, n: int, p: int) -> tuple[int, float, float]:
    """Map a prior to the (family code, a, b) triple the IS kernels consume."""
    dims = ProblemDims(n, p)
    if isinstance(prior, Flat):
        return FLAT, 0.0, 0.0
    if isinstance(prior, (MatrixT, SVS)):
        e = det_exponent(prior, dims)
        if e == 0.0:
            return FLAT, 0.0, 0.0
        return DET_TYPE, e, family_beta(prior)
    if isinstance(prior, SteinFrobenius):
        if prior.c == 0.0:
            return FLAT, 0.0, 0.0
        return STEIN, prior.c, prior.beta
    if isinstance(prior, ColumnwiseStein):
        if prior.c == 0.0:
            return FLAT, 0.0, 0.0
        return COLUMNWISE, prior.c, prior.beta
    raise Unsupported(f"unknown prior {prior!r}")


def generalized_shrinkage(X, c: float) -> np.ndarray:
    """X (I_p - c (X'X)^{-1}); equals the Efron-Morris estimator at c = n-p-1."""
    X = as_matrix(X)
    return X - c * (X @ gram_inverse(X))


def efron_morris(X) -> np.ndarray:
    """X (I_p - (n-p-1) (X'X)^{-1}); shrinks each singular value s to s - (n-p-1)/s."""
    X = as_matrix(X)
    dims = dims_of(X)
    dims.require_em_regime()
    return generalized_shrinkage(X, dims.n - dims.p - 1)


def james_stein(X) -> np.ndarray:
    """(1 - (np-2)/||X||_F^2) X, without positive-part clipping."""
    X = as_matrix(X)
    n, p = X.shape
    fro2 = float(np.sum(X * X))
    if fro2 == 0.0:
        raise ZeroColumn("James-Stein is undefined at the zero matrix")
    return (1.0 - (n * p - 2.0) / fro2) * X


def columnwise_js(X, c: float | None = None) -> np.ndarray:
    """X D with D = diag(d_i), d_i = 1 - c / sum_a X_ai^2; default c = (n-2)/p."""
    X = as_matrix(X)
    n, p = X.shape
    c = resolve_cjs_constant(c, n, p)
    colsq = np.sum(X * X, axis=0)
    if np.any(colsq == 0.0):
        raise ZeroColumn("column-wise James-Stein is undefined with a zero column")
    return X * (1.0 - c / colsq)


# fraction of pairs drawn from the singularity-matched mixture component when
# the plain likelihood proposal has unbounded weight variance
DEFENSIVE_MIX_WEIGHT = 0.3


def needs_defensive_mixture(prior: PriorSpec, n: int, p: int) -> bool:
    """True when likelihood-proposal SNIS weights have infinite variance.

    For pi = ||M||^(-c) (beta = 0) the squared weight under the N(X, I)
    proposal behaves like ||M||^(-2c) near the origin, integrable only for
    c < np/2. Any beta > 0 bounds the weights, and the other registered
    families keep finite weight variance throughout their
    claimed-superharmonic parameter ranges.
    """
    return (
        isinstance(prior, SteinFrobenius)
        and prior.beta == 0.0
        and prior.c >= n * p / 2.0
    )


def gb_draw_and_estimate(
    prior: PriorSpec, X: np.ndarray, gen: np.random.Generator, n_samples: int
) -> tuple[np.ndarray, float]:
    """Draw the IS blocks from `gen` and run the active backend's kernel.

    Plain path: antithetic pairs X +- Z with prior-density weights. For
    Frobenius-norm Stein priors with c >= np/2, a defensive mixture adds a
    second block drawn from the radial density proportional to ||M||^-c on
    the ball ||M|| <= sqrt(np) + ||X||_F, which bounds the weights.
    """
    n, p = X.shape
    d = n * p
    pairs = (n_samples + 1) // 2
    if not needs_defensive_mixture(prior, n, p):
        Z = gen.standard_normal((pairs, n, p))
        return is_posterior_mean_kernel(X, Z, prior, n, p)

    c, beta = prior.c, prior.beta
    if c >= d:
        raise Unsupported(
            f"posterior mean undefined: ||M||^(-c) with c={c} is not integrable "
            f"against the likelihood for c >= np = {d}"
        )
    k2 = max(1, round(DEFENSIVE_MIX_WEIGHT * pairs))
    k1 = max(1, pairs - k2)
    Z = gen.standard_normal((k1, n, p))
    G = gen.standard_normal((k2, n, p))
    U = gen.random(k2)
    tau = math.sqrt(d) + float(np.linalg.norm(X))
    radii = tau * U ** (1.0 / (d - c))
    norms = np.sqrt(np.sum(G * G, axis=(1, 2), keepdims=True))
    M2 = radii[:, None, None] * (G / norms)
    log_omega = math.log(2.0) + 0.5 * d * math.log(math.pi) - math.lgamma(d / 2.0)
    log_g_norm = math.log(d - c) - log_omega - (d - c) * math.log(tau)
    return _backend.is_posterior_mean_stein_mixture(
        np.ascontiguousarray(X),
        np.ascontiguousarray(Z),
        np.ascontiguousarray(M2),
        c,
        beta,
        DEFENSIVE_MIX_WEIGHT,
        tau,
        log_g_norm,
    )


def gb_posterior_mean(prior: PriorSpec, X, cfg: ISConfig | None = None) -> tuple[np.ndarray, float]:
    """Generalized Bayes posterior mean under `prior`, plus the IS effective sample size.

    Draws n_samples/2 antithetic pairs from N(X, I, I), weights each sample by
    its prior density (log space, max-subtracted) and returns the
    self-normalized weighted mean (a defensive mixture component is added for
    the Stein-prior regime with unbounded plain weights; see
    gb_draw_and_estimate). Warns with LowESSWarning when ESS / n_samples
    falls below the configured floor; the estimate is still returned.
    """
    cfg = cfg or ISConfig()
    X = as_matrix(X)
    dims = dims_of(X)
    if isinstance(prior, SVS):
        dims.require_em_regime()
    n_samples = 2 * ((cfg.n_samples + 1) // 2)
    gen = cfg.rng.generator()
    Mhat, ess = gb_draw_and_estimate(prior, X, gen, n_samples)
    if ess / n_samples < cfg.ess_floor:
        warnings.warn(
            f"importance sampling ESS {ess:.1f} of {n_samples} samples is below "
            f"the floor {cfg.ess_floor:g}; estimate may be noisy",
            LowESSWarning,
            stacklevel=2,
        )
    return Mhat, ess


def is_posterior_mean_kernel(X, Z, prior: PriorSpec, n: int, p: int):
    """Run the active backend's IS kernel on a pre-drawn noise block."""
    family, a, b = prior_kernel_params(prior, n, p)
    return _backend.is_posterior_mean(
        np.ascontiguousarray(X, dtype=float), np.ascontiguousarray(Z, dtype=float), family, a, b
    )


def estimate(spec: EstimatorSpec, X) -> np.ndarray:
    """Dispatch to the estimator named by `spec`; deterministic except for Bayes."""
    X = as_matrix(X)
    dims = dims_of(X)
    if isinstance(spec, MLE):
        return X.copy()
    if isinstance(spec, EfronMorris):
        return efron_morris(X)
    if isinstance(spec, JamesStein):
        return james_stein(X)
    if isinstance(spec, ColumnwiseJS):
        return columnwise_js(X, spec.c)
    if isinstance(spec, GeneralizedShrinkage):
        return generalized_shrinkage(X, spec.c)
    if isinstance(spec, GeneralizedBayes):
        Mhat, _ = gb_posterior_mean(spec.prior, X, spec.is_config)
        return Mhat
    raise Unsupported(f"unknown estimator spec {spec!r}")


def _gram_stack(Xs: np.ndarray) -> np.ndarray:
    """X'X over a stack (B, n, p) -> (B, p, p); column dots beat matmul for small p."""
    B, n, p = Xs.shape
    if p > 8:
        return np.swapaxes(Xs, -1, -2) @ Xs
    S = np.empty((B, p, p))
    for i in range(p):
        for j in range(i, p):
            v = np.einsum("ba,ba->b", Xs[:, :, i], Xs[:, :, j])
            S[:, i, j] = v
            S[:, j, i] = v
    return S


def _gram_inv_stack(Xs: np.ndarray) -> np.ndarray:
    S = _gram_stack(Xs)
    try:
        return np.linalg.inv(S)
    except np.linalg.LinAlgError as exc:
        raise SingularGram(str(exc)) from exc


def estimate_stack(spec: EstimatorSpec, Xs: np.ndarray) -> np.ndarray:
    """Vectorized non-Bayes estimates over a replicate stack (B, n, p)."""
    B, n, p = Xs.shape
    if isinstance(spec, MLE):
        return Xs.copy()
    if isinstance(spec, (EfronMorris, GeneralizedShrinkage)):
        if isinstance(spec, EfronMorris):
            ProblemDims(n, p).require_em_regime()
            c = n - p - 1.0
        else:
            c = spec.c
        return Xs - c * (Xs @ _gram_inv_stack(Xs))
    if isinstance(spec, JamesStein):
        fro2 = np.sum(Xs * Xs, axis=(1, 2))
        if np.any(fro2 == 0.0):
            raise ZeroColumn("James-Stein is undefined at the zero matrix")
        return Xs * (1.0 - (n * p - 2.0) / fro2)[:, None, None]
    if isinstance(spec, ColumnwiseJS):
        c = resolve_cjs_constant(spec.c, n, p)
        colsq = np.sum(Xs * Xs, axis=1)
        if np.any(colsq == 0.0):
            raise ZeroColumn("column-wise James-Stein is undefined with a zero column")
        return Xs * (1.0 - c / colsq)[:, None, :]
    raise Unsupported(f"no vectorized path for {spec!r}")


def spec_to_json(spec: EstimatorSpec) -> dict:
    if isinstance(spec, MLE):
        return {"kind": "mle"}
    if isinstance(spec, EfronMorris):
        return {"kind": "em"}
    if isinstance(spec, JamesStein):
        return {"kind": "js"}
    if isinstance(spec, ColumnwiseJS):
        d = {"kind": "cjs"}
        if spec.c is not None:
            d["c"] = float(spec.c)
        return d
    if isinstance(spec, GeneralizedShrinkage):
        return {"kind": "gshrink", "c": float(spec.c)}
    if isinstance(spec, GeneralizedBayes):
        return {
            "kind": "gb",
            "prior": prior_to_json(spec.prior),
            "is": {
                "n_samples": spec.is_config.n_samples,
                "ess_floor": spec.is_config.ess_floor,
                "seed": spec.is_config.rng.seed,
                "stream": spec.is_config.rng.stream,
            },
        }
    raise Unsupported(f"unknown estimator spec {spec!r}")


def spec_from_json(d: dict) -> EstimatorSpec:
    kind = d.get("kind")
    if kind == "mle":
        return MLE()
    if kind == "em":
        return EfronMorris()
    if kind == "js":
        return JamesStein()
    if kind == "cjs":
        return ColumnwiseJS(c=d.get("c"))
    if kind == "gshrink":
        return GeneralizedShrinkage(c=float(d["c"]))
    if kind == "gb":
        if "prior" not in d:
            raise ValueError("gb estimator requires 'prior'")
        is_cfg = d.get("is", {})
        cfg = ISConfig(
            n_samples=int(is_cfg.get("n_samples", 10_000)),
            ess_floor=float(is_cfg.get("ess_floor", 0.02)),
            rng=RngState(int(is_cfg.get("seed", 0)), int(is_cfg.get("stream", 0))),
        )
        return GeneralizedBayes(prior=prior_from_json(d["prior"]), is_config=cfg)
    raise ValueError(f"unknown estimator kind {kind!r}")

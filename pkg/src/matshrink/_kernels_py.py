"""Pure-numpy implementation of the importance-sampling hot kernel.

This is the fallback backend: `matshrink._kernels` (Cython) implements the
same function with a fused C loop. Both consume the same pre-drawn standard
normal block, so the two backends see bit-identical random streams and differ
only in floating-point summation order.

Family codes: 0 = flat, 1 = determinant-type with parameters (exponent e,
beta), 2 = Frobenius-norm Stein type (c, beta), 3 = column-wise Stein type
(c, beta).
"""

from __future__ import annotations

import numpy as np

from .errors import NonFiniteEvaluation

FLAT, DET_TYPE, STEIN, COLUMNWISE = 0, 1, 2, 3


def _log_weights(M: np.ndarray, family: int, a: float, b: float) -> np.ndarray:
    """Unnormalized log prior density over a stack (K, n, p)."""
    if family == FLAT:
        return np.zeros(M.shape[0])
    if family == DET_TYPE:
        p = M.shape[-1]
        S = np.swapaxes(M, -1, -2) @ M
        if b > 0:
            S += b * np.eye(p)
        if p == 1:
            det = S[:, 0, 0]
        elif p == 2:
            det = S[:, 0, 0] * S[:, 1, 1] - S[:, 0, 1] * S[:, 1, 0]
        elif p == 3:
            det = (
                S[:, 0, 0] * (S[:, 1, 1] * S[:, 2, 2] - S[:, 1, 2] * S[:, 2, 1])
                - S[:, 0, 1] * (S[:, 1, 0] * S[:, 2, 2] - S[:, 1, 2] * S[:, 2, 0])
                + S[:, 0, 2] * (S[:, 1, 0] * S[:, 2, 1] - S[:, 1, 1] * S[:, 2, 0])
            )
        else:
            sign, logdet = np.linalg.slogdet(S)
            return np.where(sign > 0, -a * logdet, np.inf)
        with np.errstate(divide="ignore"):
            return np.where(det > 0, -a * np.log(np.maximum(det, 1e-300)), np.inf)
    if family == STEIN:
        t = np.sum(M * M, axis=(-2, -1)) + b
        with np.errstate(divide="ignore"):
            return np.where(t > 0, -0.5 * a * np.log(np.maximum(t, 1e-300)), np.inf)
    if family == COLUMNWISE:
        q = np.sum(M * M, axis=-2) + b
        bad = (q <= 0).any(axis=-1)
        with np.errstate(divide="ignore"):
            lw = -0.5 * a * np.sum(np.log(np.maximum(q, 1e-300)), axis=-1)
        return np.where(bad, np.inf, lw)
    raise ValueError(f"unknown family code {family}")


def is_posterior_mean_stein_mixture(
    X: np.ndarray,
    Z: np.ndarray,
    M2: np.ndarray,
    c: float,
    beta: float,
    mix_a: float,
    tau: float,
    log_g_norm: float,
):
    """Defensive-mixture SNIS posterior mean for Frobenius-norm Stein priors.

    Proposal q = (1 - mix_a) N(X, I) + mix_a g, where g(M) is proportional to
    ||M||^-c on the ball ||M|| <= tau (log normalizer `log_g_norm`). The g
    component matches the prior's singularity at the origin, so the weights
    pi(M) phi(M - X) / q(M) are bounded; the plain likelihood proposal has
    infinite weight variance whenever c >= np/2. Z holds K1 antithetic
    likelihood pairs, M2 holds K2 antithetic pairs drawn from g.
    """
    X = np.asarray(X, dtype=float)
    d = X.size
    log_phi_norm = -0.5 * d * np.log(2.0 * np.pi)

    def logpi(M):
        t = np.sum(M * M, axis=(-2, -1)) + beta
        with np.errstate(divide="ignore"):
            return np.where(t > 0, -0.5 * c * np.log(np.maximum(t, 1e-300)), np.inf)

    def logq(M):
        r2 = np.sum(M * M, axis=(-2, -1))
        lphi = log_phi_norm - 0.5 * np.sum((M - X) ** 2, axis=(-2, -1))
        with np.errstate(divide="ignore"):
            lg = np.where(
                (r2 > 0) & (r2 <= tau * tau),
                log_g_norm - 0.5 * c * np.log(np.maximum(r2, 1e-300)),
                -np.inf,
            )
        return np.logaddexp(np.log1p(-mix_a) + lphi, np.log(mix_a) + lg)

    def logw(M):
        lphi = log_phi_norm - 0.5 * np.sum((M - X) ** 2, axis=(-2, -1))
        return logpi(M) + lphi - logq(M)

    blocks = []
    for base in (X + Z, X - Z, M2, -M2):
        blocks.append((base, logw(base)))
    m = max(lw.max() for _, lw in blocks if lw.size)
    if not np.isfinite(m):
        raise NonFiniteEvaluation("degenerate mixture importance weights")
    wsum = wsq = 0.0
    num = np.zeros_like(X)
    # pair-adjacent accumulation: (+,-) likelihood pairs, then (+,-) g pairs
    for pos, neg in ((0, 1), (2, 3)):
        Mp, lwp = blocks[pos]
        Mm, lwm = blocks[neg]
        wp = np.exp(lwp - m)
        wm = np.exp(lwm - m)
        wsum += float(wp.sum() + wm.sum())
        wsq += float((wp * wp).sum() + (wm * wm).sum())
        num += (wp[:, None, None] * Mp + wm[:, None, None] * Mm).sum(axis=0)
    if wsum <= 0.0:
        raise NonFiniteEvaluation("all importance weights vanished")
    return num / wsum, wsum * wsum / wsq


def is_posterior_mean(X: np.ndarray, Z: np.ndarray, family: int, a: float, b: float):
    """Self-normalized IS posterior mean with antithetic pairs X +- Z_k.

    Weights are the prior density at each sample (the proposal equals the
    likelihood kernel), stabilized by max-subtraction in log space. Returns
    (posterior mean matrix, effective sample size over the 2K samples).
    """
    Z = np.asarray(Z, dtype=float)
    X = np.asarray(X, dtype=float)
    Mp = X + Z
    Mm = X - Z
    lwp = _log_weights(Mp, family, a, b)
    lwm = _log_weights(Mm, family, a, b)
    m = max(lwp.max(), lwm.max())
    if np.isposinf(m):
        raise NonFiniteEvaluation(
            "importance weight hit a singular point of the prior (measure-zero event)"
        )
    if np.isneginf(m) or np.isnan(m):
        raise NonFiniteEvaluation("all importance weights vanished")
    wp = np.exp(lwp - m)
    wm = np.exp(lwm - m)
    wsum = float(wp.sum() + wm.sum())
    wsq = float((wp * wp).sum() + (wm * wm).sum())
    # pair-adjacent accumulation so the +-Z contributions cancel exactly at X = 0
    num = (wp[:, None, None] * Mp + wm[:, None, None] * Mm).sum(axis=0)
    return num / wsum, wsum * wsum / wsq

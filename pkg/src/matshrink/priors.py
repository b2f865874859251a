"""Shrinkage prior families: log-densities, matrix gradients, closed-form matrix Laplacians.

All densities are improper and unnormalized; everything is handled in log
space. A value of +inf is the explicit marker for points where the density
diverges (rank-deficient arguments of determinant-type families with beta = 0).
Such points form measure-zero sets and are only ever reached by deliberately
constructed inputs, never by Monte Carlo draws.

Families:

    MatrixT(alpha, beta)        pi(M) = det(M'M + beta I_p)^(-(alpha+n+p-1)/2)
    SVS()                       pi(M) = det(M'M)^(-(n-p-1)/2)
    SteinFrobenius(c, beta)     pi(M) = (||M||_F^2 + beta)^(-c/2)
    ColumnwiseStein(c, beta)    pi(M) = prod_i (sum_a M_ai^2 + beta)^(-c/2)
    Flat()                      pi(M) = 1

SVS is the alpha = -2p, beta = 0 member of the MatrixT family; it is kept as
its own tag because its exponent depends on the problem dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularPoint, Unsupported
from .matcore import ProblemDims, as_matrix, dims_of, symmetrize


@dataclass(frozen=True)
class MatrixT:
    alpha: float
    beta: float = 0.0

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")


@dataclass(frozen=True)
class SVS:
    pass


@dataclass(frozen=True)
class SteinFrobenius:
    c: float
    beta: float = 0.0

    def __post_init__(self):
        if self.c < 0 or self.beta < 0:
            raise ValueError("c and beta must be nonnegative")


@dataclass(frozen=True)
class ColumnwiseStein:
    c: float
    beta: float = 0.0

    def __post_init__(self):
        if self.c < 0 or self.beta < 0:
            raise ValueError("c and beta must be nonnegative")


@dataclass(frozen=True)
class Flat:
    pass


PriorSpec = MatrixT | SVS | SteinFrobenius | ColumnwiseStein | Flat

_FAMILY_NAMES = {
    MatrixT: "matrix_t",
    SVS: "svs",
    SteinFrobenius: "stein",
    ColumnwiseStein: "columnwise",
    Flat: "flat",
}


def det_exponent(prior: PriorSpec, dims: ProblemDims) -> float:
    """Exponent e in pi = det(M'M + beta I)^(-e) for determinant-type families."""
    if isinstance(prior, MatrixT):
        return (prior.alpha + dims.n + dims.p - 1) / 2.0
    if isinstance(prior, SVS):
        return (dims.n - dims.p - 1) / 2.0
    raise Unsupported(f"{type(prior).__name__} is not a determinant-type prior")


def family_beta(prior: PriorSpec) -> float:
    return getattr(prior, "beta", 0.0)


def claimed_matrix_superharmonic(prior: PriorSpec, dims: ProblemDims) -> bool:
    """Whether the family's parameters lie in its matrix-superharmonic range.

    MatrixT: -n-p+1 <= alpha <= -2p (any beta >= 0). SVS: n-p-1 > 0.
    SteinFrobenius: c <= n-2. ColumnwiseStein: c <= (n-2)/p. Flat: always.
    """
    n, p = dims.n, dims.p
    if isinstance(prior, MatrixT):
        return -n - p + 1 <= prior.alpha <= -2 * p
    if isinstance(prior, SVS):
        return n - p - 1 > 0
    if isinstance(prior, SteinFrobenius):
        return 0 <= prior.c <= n - 2
    if isinstance(prior, ColumnwiseStein):
        return 0 <= prior.c <= (n - 2) / p
    if isinstance(prior, Flat):
        return True
    raise Unsupported(f"unknown prior {prior!r}")


def _logdet_psd(S: np.ndarray) -> np.ndarray:
    """log det of a stack (..., p, p) of PSD matrices; -inf where det <= 0."""
    p = S.shape[-1]
    if p == 1:
        det = S[..., 0, 0]
    elif p == 2:
        det = S[..., 0, 0] * S[..., 1, 1] - S[..., 0, 1] * S[..., 1, 0]
    elif p == 3:
        det = (
            S[..., 0, 0] * (S[..., 1, 1] * S[..., 2, 2] - S[..., 1, 2] * S[..., 2, 1])
            - S[..., 0, 1] * (S[..., 1, 0] * S[..., 2, 2] - S[..., 1, 2] * S[..., 2, 0])
            + S[..., 0, 2] * (S[..., 1, 0] * S[..., 2, 1] - S[..., 1, 1] * S[..., 2, 0])
        )
    else:
        sign, logdet = np.linalg.slogdet(S)
        return np.where(sign > 0, logdet, -np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(det > 0, np.log(np.maximum(det, np.finfo(float).tiny)), -np.inf)


def _gram(M: np.ndarray) -> np.ndarray:
    """M'M for a single matrix or a stack (..., n, p) -> (..., p, p)."""
    return np.swapaxes(M, -1, -2) @ M


def log_density(prior: PriorSpec, M) -> float | np.ndarray:
    """Natural log of the unnormalized prior density at M.

    Accepts a single (n, p) matrix or a stack (..., n, p); returns a scalar or
    the matching batch of values. Returns +inf exactly where the density
    diverges (log argument 0 with a negative net exponent).
    """
    M = np.asarray(M, dtype=float)
    single = M.ndim == 2
    dims = ProblemDims(M.shape[-2], M.shape[-1])

    if isinstance(prior, Flat):
        out = np.zeros(M.shape[:-2])
    elif isinstance(prior, (MatrixT, SVS)):
        e = det_exponent(prior, dims)
        beta = family_beta(prior)
        S = _gram(M)
        if beta > 0:
            S = S + beta * np.eye(dims.p)
        logdet = _logdet_psd(S)
        if e == 0.0:
            out = np.zeros(M.shape[:-2])
        else:
            out = -e * logdet
            # det -> 0 with e > 0 blows up: the +inf marker
            out = np.where(np.isneginf(logdet), np.inf if e > 0 else -np.inf, out)
    elif isinstance(prior, SteinFrobenius):
        t = np.sum(M * M, axis=(-2, -1)) + prior.beta
        with np.errstate(divide="ignore"):
            out = np.where(t > 0, -0.5 * prior.c * np.log(np.maximum(t, 1e-300)), np.inf)
        if prior.c == 0:
            out = np.zeros(M.shape[:-2])
    elif isinstance(prior, ColumnwiseStein):
        colsq = np.sum(M * M, axis=-2) + prior.beta
        with np.errstate(divide="ignore"):
            terms = np.where(
                colsq > 0, np.log(np.maximum(colsq, 1e-300)), -np.inf
            )
        out = -0.5 * prior.c * np.sum(terms, axis=-1)
        if prior.c == 0:
            out = np.zeros(M.shape[:-2])
        else:
            out = np.where(np.isneginf(terms).any(axis=-1), np.inf, out)
    else:
        raise Unsupported(f"unknown prior {prior!r}")

    return float(out) if single else out


def density(prior: PriorSpec, M) -> float | np.ndarray:
    """exp of log_density; +inf propagates as inf."""
    return np.exp(log_density(prior, M))


def grad_log_density(prior: PriorSpec, M) -> np.ndarray:
    """The n x p matrix gradient of log pi at M.

    Closed forms, assembled from the first derivative of det(M'M + beta I):

        MatrixT/SVS:      -(alpha+n+p-1) M (M'M + beta I)^{-1}
        SteinFrobenius:   -c M / (||M||_F^2 + beta)
        ColumnwiseStein:  column i scaled by -c / (sum_a M_ai^2 + beta)
        Flat:             O

    Raises SingularPoint on the singular set (beta = 0 with M rank-deficient,
    or a zero column/norm for the Stein-type families).
    """
    M = as_matrix(M)
    dims = dims_of(M)

    if isinstance(prior, Flat):
        return np.zeros_like(M)
    if isinstance(prior, (MatrixT, SVS)):
        e = det_exponent(prior, dims)
        S = M.T @ M + family_beta(prior) * np.eye(dims.p)
        try:
            sol = np.linalg.solve(S, M.T)
        except np.linalg.LinAlgError as exc:
            raise SingularPoint(str(exc)) from exc
        if not np.all(np.isfinite(sol)):
            raise SingularPoint("singular M'M + beta I")
        return -2.0 * e * sol.T
    if isinstance(prior, SteinFrobenius):
        t = float(np.sum(M * M)) + prior.beta
        if t <= 0:
            raise SingularPoint("zero Frobenius norm with beta = 0")
        return -prior.c * M / t
    if isinstance(prior, ColumnwiseStein):
        colsq = np.sum(M * M, axis=0) + prior.beta
        if np.any(colsq <= 0):
            raise SingularPoint("zero column with beta = 0")
        return -prior.c * M / colsq
    raise Unsupported(f"unknown prior {prior!r}")


def matrix_laplacian_closed(prior: PriorSpec, M) -> np.ndarray:
    """Closed-form p x p matrix Laplacian of the prior density at M.

    MatrixT/SVS (S = M'M + beta I, e = (alpha+n+p-1)/2):

        e * pi(M) * (2(alpha+2p) S^{-1} - 2(alpha+n+p) beta S^{-2}
                     - 2 beta tr(S^{-1}) S^{-1})

    SteinFrobenius (t = ||M||_F^2 + beta):

        -c t^{-c/2-2} (n t I_p - (c+2) M'M)

    ColumnwiseStein: c pi(M) (c A - (n-2) B - n beta C) with
    A_ij = (q_i q_j)^{-1} sum_a M_ai M_aj for q_i = sum_a M_ai^2 + beta,
    B = diag(A), C = diag(q_i^{-2}).
    """
    M = as_matrix(M)
    dims = dims_of(M)
    n, p = dims.n, dims.p

    if isinstance(prior, Flat):
        return np.zeros((p, p))

    if isinstance(prior, (MatrixT, SVS)):
        e = det_exponent(prior, dims)
        alpha = prior.alpha if isinstance(prior, MatrixT) else -2.0 * p
        beta = family_beta(prior)
        if e == 0.0:
            return np.zeros((p, p))
        S = M.T @ M + beta * np.eye(p)
        sign, logdet = np.linalg.slogdet(S)
        if sign <= 0:
            raise SingularPoint("M'M + beta I is singular")
        try:
            Sinv = np.linalg.inv(S)
        except np.linalg.LinAlgError as exc:
            raise SingularPoint(str(exc)) from exc
        pi_val = np.exp(-e * logdet)
        if not np.isfinite(pi_val):
            raise SingularPoint("density overflow at this point")
        bracket = (
            2.0 * (alpha + 2 * p) * Sinv
            - 2.0 * (alpha + n + p) * beta * (Sinv @ Sinv)
            - 2.0 * beta * np.trace(Sinv) * Sinv
        )
        return symmetrize(e * pi_val * bracket)

    if isinstance(prior, SteinFrobenius):
        c, beta = prior.c, prior.beta
        if c == 0:
            return np.zeros((p, p))
        t = float(np.sum(M * M)) + beta
        if t <= 0:
            raise SingularPoint("zero Frobenius norm with beta = 0")
        return symmetrize(-c * t ** (-c / 2.0 - 2.0) * (n * t * np.eye(p) - (c + 2.0) * (M.T @ M)))

    if isinstance(prior, ColumnwiseStein):
        c, beta = prior.c, prior.beta
        if c == 0:
            return np.zeros((p, p))
        q = np.sum(M * M, axis=0) + beta
        if np.any(q <= 0):
            raise SingularPoint("zero column with beta = 0")
        pi_val = float(np.exp(-0.5 * c * np.sum(np.log(q))))
        if not np.isfinite(pi_val):
            raise SingularPoint("density overflow at this point")
        A = (M.T @ M) / np.outer(q, q)
        B = np.diag(np.diag(A))
        C = np.diag(q**-2.0)
        return symmetrize(c * pi_val * (c * A - (n - 2.0) * B - n * beta * C))

    raise Unsupported(f"no closed-form matrix Laplacian registered for {prior!r}")


def laplacian_density_ratio(prior: PriorSpec, M) -> np.ndarray:
    """The scale-free ratio (matrix Laplacian of pi) / pi(M).

    Every registered family has Laplacian pi(M) * bracket(M); this returns the
    bracket directly, avoiding the overflow/underflow of pi itself. Since
    pi > 0 off the singular set, the ratio is negative semidefinite exactly
    when the Laplacian is, which is what certification needs across points
    where the density spans hundreds of orders of magnitude.
    """
    M = as_matrix(M)
    dims = dims_of(M)
    n, p = dims.n, dims.p

    if isinstance(prior, Flat):
        return np.zeros((p, p))

    if isinstance(prior, (MatrixT, SVS)):
        e = det_exponent(prior, dims)
        alpha = prior.alpha if isinstance(prior, MatrixT) else -2.0 * p
        beta = family_beta(prior)
        if e == 0.0:
            return np.zeros((p, p))
        S = M.T @ M + beta * np.eye(p)
        try:
            Sinv = np.linalg.inv(S)
        except np.linalg.LinAlgError as exc:
            raise SingularPoint(str(exc)) from exc
        if not np.all(np.isfinite(Sinv)):
            raise SingularPoint("singular M'M + beta I")
        bracket = (
            2.0 * (alpha + 2 * p) * Sinv
            - 2.0 * (alpha + n + p) * beta * (Sinv @ Sinv)
            - 2.0 * beta * np.trace(Sinv) * Sinv
        )
        return symmetrize(e * bracket)

    if isinstance(prior, SteinFrobenius):
        c, beta = prior.c, prior.beta
        if c == 0:
            return np.zeros((p, p))
        t = float(np.sum(M * M)) + beta
        if t <= 0:
            raise SingularPoint("zero Frobenius norm with beta = 0")
        return symmetrize(-c * t**-2.0 * (n * t * np.eye(p) - (c + 2.0) * (M.T @ M)))

    if isinstance(prior, ColumnwiseStein):
        c, beta = prior.c, prior.beta
        if c == 0:
            return np.zeros((p, p))
        q = np.sum(M * M, axis=0) + beta
        if np.any(q <= 0):
            raise SingularPoint("zero column with beta = 0")
        A = (M.T @ M) / np.outer(q, q)
        B = np.diag(np.diag(A))
        C = np.diag(q**-2.0)
        return symmetrize(c * (c * A - (n - 2.0) * B - n * beta * C))

    raise Unsupported(f"no closed-form matrix Laplacian registered for {prior!r}")


def pseudo_marginal_log(prior: PriorSpec, X) -> float | np.ndarray:
    """log m(X) for the pseudo-marginal m = pi evaluated at the observation.

    Pseudo-Bayes estimators X + grad log m(X) share one code path this way;
    with the SVS family this reproduces the Efron-Morris estimator exactly.
    """
    return log_density(prior, X)


def prior_to_json(prior: PriorSpec) -> dict:
    d = {"family": _FAMILY_NAMES[type(prior)]}
    for field in ("alpha", "beta", "c"):
        if hasattr(prior, field):
            d[field] = float(getattr(prior, field))
    return d


def prior_from_json(d: dict) -> PriorSpec:
    family = d.get("family")
    beta = float(d.get("beta", 0.0))
    if family == "matrix_t":
        if "alpha" not in d:
            raise ValueError("matrix_t prior requires 'alpha'")
        return MatrixT(alpha=float(d["alpha"]), beta=beta)
    if family == "svs":
        return SVS()
    if family == "stein":
        if "c" not in d:
            raise ValueError("stein prior requires 'c'")
        return SteinFrobenius(c=float(d["c"]), beta=beta)
    if family == "columnwise":
        if "c" not in d:
            raise ValueError("columnwise prior requires 'c'")
        return ColumnwiseStein(c=float(d["c"]), beta=beta)
    if family == "flat":
        return Flat()
    raise ValueError(f"unknown prior family {family!r}")

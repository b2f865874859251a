"""Core matrix types, seeded matrix-normal sampling, and linear-algebra primitives.

Matrices are plain float64 ndarrays throughout; the helpers here validate
shape and finiteness at module boundaries. Mean matrices and observations are
n x p, loss/risk matrices are symmetric p x p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    NonConvergence,
    RegimeViolation,
    SingularGram,
)

SYM_ATOL = 1e-10
RCOND_MIN_DEFAULT = 1e-12


@dataclass(frozen=True)
class ProblemDims:
    """Problem size (n rows, p columns) of the mean matrix."""

    n: int
    p: int

    def __post_init__(self):
        if int(self.n) != self.n or int(self.p) != self.p:
            raise ValueError("dimensions must be integers")
        if self.n < 1 or self.p < 1:
            raise ValueError(f"dimensions must be positive, got ({self.n}, {self.p})")

    @property
    def em_regime(self) -> bool:
        """True iff n - p - 1 > 0, the validity regime of the Efron-Morris form."""
        return self.n - self.p - 1 > 0

    def require_em_regime(self):
        if not self.em_regime:
            raise RegimeViolation(
                f"requires n - p - 1 > 0, got n={self.n}, p={self.p}"
            )


@dataclass(frozen=True)
class RngState:
    """Reproducible RNG state: a 64-bit seed plus a stream index.

    Identical (seed, stream) pairs reproduce identical draws bit-for-bit on a
    given platform. Streams derived by offsetting the stream index are
    statistically independent (PCG64 seeded through SeedSequence spawn keys),
    which is how per-replicate streams are built for parallel Monte Carlo.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, offset: int) -> "RngState":
        """State for sub-stream `offset` (e.g. a replicate index)."""
        return RngState(self.seed, self.stream + offset)

    def to_json(self) -> dict:
        return {"seed": int(self.seed), "stream": int(self.stream)}


def as_matrix(entries, dims: ProblemDims | None = None) -> np.ndarray:
    """Validate and return an n x p float64 matrix with finite entries."""
    arr = np.asarray(entries, dtype=float)
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d matrix, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix contains non-finite entries")
    if dims is not None and arr.shape != (dims.n, dims.p):
        raise DimensionMismatch(
            f"expected shape ({dims.n}, {dims.p}), got {arr.shape}"
        )
    return arr


def dims_of(M) -> ProblemDims:
    M = np.asarray(M)
    if M.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d matrix, got ndim={M.ndim}")
    return ProblemDims(M.shape[0], M.shape[1])


def symmetrize(S) -> np.ndarray:
    """Return (S + S') / 2, absorbing floating-point drift of symmetric results."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {S.shape}")
    return (S + S.T) / 2.0


def validate_spectrum(sigma) -> np.ndarray:
    """Validate a descending nonnegative singular-value profile."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 1:
        raise DimensionMismatch("spectrum must be 1-d")
    if np.any(sigma < 0):
        raise ValueError("singular values must be nonnegative")
    if np.any(np.diff(sigma) > 0):
        raise ValueError("singular values must be in descending order")
    return sigma


def sample_matrix_normal(M, rng) -> np.ndarray:
    """Draw X ~ N(M, I_n, I_p), i.e. M plus i.i.d. standard normal noise.

    `rng` may be an RngState (a fresh generator is built from it, so the call
    is a pure function of the state) or a np.random.Generator (which is
    advanced in place).
    """
    M = as_matrix(M)
    gen = rng.generator() if isinstance(rng, RngState) else rng
    return M + gen.standard_normal(M.shape)


def gram_inverse(X, rcond_min: float = RCOND_MIN_DEFAULT) -> np.ndarray:
    """Return (X'X)^{-1} computed from the SVD of X.

    Raises SingularGram when the spectral condition of X'X (ratio of smallest
    to largest eigenvalue) falls below `rcond_min`.
    """
    X = as_matrix(X)
    n, p = X.shape
    if p > n:
        raise DimensionMismatch(f"need p <= n, got n={n}, p={p}")
    _, s, vt = np.linalg.svd(X, full_matrices=False)
    if s[0] == 0.0 or (s[-1] / s[0]) ** 2 < rcond_min:
        raise SingularGram(
            f"X'X condition below rcond_min={rcond_min:g} "
            f"(singular values {s[0]:.3e} .. {s[-1]:.3e})"
        )
    inv = (vt.T / s**2) @ vt
    return symmetrize(inv)


def sym_eig(S) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and matching orthonormal eigenvectors of S.

    Returns (w, Q) with S = Q diag(w) Q'. Raises NonConvergence on NaN input
    or solver failure.
    """
    S = symmetrize(S)
    if not np.all(np.isfinite(S)):
        raise NonConvergence("non-finite entries in symmetric eigenproblem")
    try:
        w, Q = np.linalg.eigh(S)
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(str(exc)) from exc
    return w[::-1], Q[:, ::-1]


def loewner_leq(A, B, tol: float = 0.0) -> bool:
    """True iff A <= B in the Loewner order: B - A positive semidefinite.

    Semidefiniteness is tested as min-eigenvalue(B - A) >= -tol.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"incompatible shapes {A.shape} and {B.shape}")
    w = np.linalg.eigvalsh(symmetrize(B - A))
    return bool(w[0] >= -tol)


def embed_spectrum(dims: ProblemDims, sigma) -> np.ndarray:
    """Canonical n x p mean matrix with the given singular values.

    Places sigma on the diagonal of the top p x p block and zeros elsewhere.
    For orthogonally equivariant estimators the risk depends on the mean only
    through its singular values, so this embedding loses no generality for
    the sweep experiments (the equivariance itself is a tested property).
    """
    sigma = validate_spectrum(sigma)
    if len(sigma) != dims.p or dims.p > dims.n:
        raise DimensionMismatch(
            f"need len(sigma) = p <= n, got len={len(sigma)}, n={dims.n}, p={dims.p}"
        )
    M = np.zeros((dims.n, dims.p))
    M[: dims.p, : dims.p] = np.diag(sigma)
    return M


def singular_values(M) -> np.ndarray:
    """Singular values of M in descending order."""
    return np.linalg.svd(as_matrix(M), compute_uv=False)

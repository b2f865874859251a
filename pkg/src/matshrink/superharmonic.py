"""Numerical certification of matrix superharmonicity.

A matrix-variate function f is matrix superharmonic when its averages over
rank-one sphere perturbations {X + e rho' : ||e|| = 1} never exceed f(X).
For C^2 functions this is equivalent to the p x p matrix Laplacian
(sum over rows of second partials, column pair by column pair) being negative
semidefinite everywhere. This module checks both characterizations on sampled
test points, producing a sampled certificate, not a proof. Lower
semicontinuity (part of the definition) is not machine-checkable for a
black-box f and is recorded as an assumption in every report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteEvaluation, SingularPoint
from .matcore import ProblemDims, RngState, as_matrix, embed_spectrum, symmetrize
from .priors import density, laplacian_density_ratio

CERTIFIED_NSD = "CERTIFIED_NSD"
VIOLATION_FOUND = "VIOLATION_FOUND"
INCONCLUSIVE = "INCONCLUSIVE"

_ASSUMPTIONS = ("lower semicontinuity of f is assumed, not checked",)


@dataclass(frozen=True)
class SpherePerturbation:
    """A rank-one sphere direction rho plus the Monte Carlo node count (antithetic pairs)."""

    rho: tuple
    n_nodes: int = 20_000

    def __post_init__(self):
        object.__setattr__(self, "rho", tuple(float(r) for r in self.rho))
        if self.n_nodes < 2:
            raise ValueError("n_nodes must be at least 2")

    @property
    def rho_array(self) -> np.ndarray:
        return np.asarray(self.rho)


@dataclass
class SphereViolation:
    X: np.ndarray
    rho: np.ndarray
    L_estimate: float
    f_value: float
    std_error: float

    def to_json(self) -> dict:
        return {
            "X": self.X.tolist(),
            "rho": self.rho.tolist(),
            "L_estimate": self.L_estimate,
            "f_value": self.f_value,
            "std_error": self.std_error,
        }


@dataclass
class SuperharmonicReport:
    points_tested: int
    max_laplacian_eigenvalue: float
    worst_point: np.ndarray | None
    sphere_violations: list[SphereViolation]
    verdict: str
    laplacian_violations: int = 0
    skipped_points: int = 0
    nonfinite_nodes: int = 0
    assumptions: tuple = _ASSUMPTIONS

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "points_tested": self.points_tested,
            "max_laplacian_eigenvalue": self.max_laplacian_eigenvalue,
            "worst_point": None if self.worst_point is None else self.worst_point.tolist(),
            "laplacian_violations": self.laplacian_violations,
            "sphere_violations": [v.to_json() for v in self.sphere_violations],
            "skipped_points": self.skipped_points,
            "nonfinite_nodes": self.nonfinite_nodes,
            "assumptions": list(self.assumptions),
        }


def evaluate_stack(f, stack: np.ndarray) -> np.ndarray:
    """Evaluate a scalar matrix function on a (B, n, p) stack.

    Tries one vectorized call first; falls back to a per-matrix loop when f
    only understands single matrices.
    """
    B = stack.shape[0]
    try:
        vals = np.asarray(f(stack), dtype=float)
        if vals.shape == (B,):
            return vals
    except Exception:
        pass
    return np.array([float(f(stack[k])) for k in range(B)])


def matrix_laplacian_fd(f, X, h: float | None = None) -> np.ndarray:
    """Finite-difference p x p matrix Laplacian of a scalar function at X.

    Entry (i, j) sums over rows a the mixed second partial in X_ai, X_aj:
    4-point cross stencil off the diagonal, 3-point stencil on it. The step
    defaults to 1e-4 (1 + ||X||_F), balancing truncation against cancellation.
    """
    X = as_matrix(X)
    n, p = X.shape
    if h is None:
        h = 1e-4 * (1.0 + float(np.linalg.norm(X)))

    stencil = [X]
    for i in range(p):
        for a in range(n):
            for s in (h, -h):
                Xp = X.copy()
                Xp[a, i] += s
                stencil.append(Xp)
    for i in range(p):
        for j in range(i + 1, p):
            for a in range(n):
                for s1 in (h, -h):
                    for s2 in (h, -h):
                        Xp = X.copy()
                        Xp[a, i] += s1
                        Xp[a, j] += s2
                        stencil.append(Xp)
    vals = evaluate_stack(f, np.stack(stencil))
    if not np.all(np.isfinite(vals)):
        raise NonFiniteEvaluation("stencil point evaluated to a non-finite value")

    f0 = vals[0]
    lap = np.zeros((p, p))
    pos = 1
    for i in range(p):
        acc = 0.0
        for _ in range(n):
            fp, fm = vals[pos], vals[pos + 1]
            pos += 2
            acc += (fp - 2.0 * f0 + fm) / (h * h)
        lap[i, i] = acc
    for i in range(p):
        for j in range(i + 1, p):
            acc = 0.0
            for _ in range(n):
                fpp, fpm, fmp, fmm = vals[pos : pos + 4]
                pos += 4
                acc += (fpp - fpm - fmp + fmm) / (4.0 * h * h)
            lap[i, j] = acc
            lap[j, i] = acc
    return symmetrize(lap)


def vectorized_laplacian_fd(f, X, h: float | None = None) -> float:
    """Scalar Laplacian (over all np coordinates) by central differences.

    Equals the trace of the matrix Laplacian; the matrix-variate function is
    superharmonic in the classical vectorized sense when this is nonpositive.
    """
    X = as_matrix(X)
    n, p = X.shape
    if h is None:
        h = 1e-4 * (1.0 + float(np.linalg.norm(X)))
    stencil = [X]
    for i in range(p):
        for a in range(n):
            for s in (h, -h):
                Xp = X.copy()
                Xp[a, i] += s
                stencil.append(Xp)
    vals = evaluate_stack(f, np.stack(stencil))
    if not np.all(np.isfinite(vals)):
        raise NonFiniteEvaluation("stencil point evaluated to a non-finite value")
    f0 = vals[0]
    rest = vals[1:].reshape(-1, 2)
    return float(np.sum((rest[:, 0] - 2.0 * f0 + rest[:, 1]) / (h * h)))


def _orthonormal_frames(gen: np.random.Generator, n: int, frames: int) -> np.ndarray:
    """Haar-distributed orthogonal matrices (frames, n, n), sign-fixed for determinism."""
    G = gen.standard_normal((frames, n, n))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.einsum("fii->fi", R))
    signs[signs == 0] = 1.0
    return Q * signs[:, None, :]


def sphere_average(f, X, pert: SpherePerturbation, rng: RngState) -> tuple[float, float]:
    """Monte Carlo average of f over the rank-one sphere {X + e rho'}.

    Directions e are taken as the columns of Haar-random orthogonal matrices,
    each used with both signs. The antithetic pair kills all odd-order terms
    of f exactly and the orthonormal frame integrates the quadratic term
    exactly, so the estimator error starts at the fourth order; the standard
    error comes from the variance of per-frame means. Nodes where f is
    non-finite are dropped (the +inf marker of improper priors lives on
    measure-zero sets); more than 0.1% of them aborts the estimate.
    """
    X = as_matrix(X)
    n, p = X.shape
    rho = pert.rho_array
    if rho.shape != (p,):
        raise ValueError(f"rho must have length p={p}")
    gen = rng.generator() if isinstance(rng, RngState) else rng

    if not np.any(rho):
        fx = float(evaluate_stack(f, X[None])[0])
        return fx, 0.0

    frames = max(1, math.ceil(pert.n_nodes / n))
    block = max(1, int(2_000_000 / (2 * n * n * p)))
    frame_means = np.empty(frames)
    nonfinite = 0
    done = 0
    while done < frames:
        nf = min(block, frames - done)
        Q = _orthonormal_frames(gen, n, nf)
        # (nf, n directions, n, p) perturbations, both signs
        E = Q[:, :, :, None] * rho[None, None, None, :]
        E = np.swapaxes(E, 1, 2)  # columns of Q are the directions
        stack = np.concatenate([X + E, X - E], axis=1).reshape(-1, n, p)
        vals = evaluate_stack(f, stack).reshape(nf, 2 * n)
        finite = np.isfinite(vals)
        nonfinite += int((~finite).sum())
        if nonfinite > 0.001 * 2 * n * frames:
            raise NonFiniteEvaluation(
                f"more than 0.1% of sphere nodes evaluated non-finite ({nonfinite})"
            )
        vals = np.where(finite, vals, 0.0)
        counts = finite.sum(axis=1)
        with np.errstate(invalid="ignore"):
            frame_means[done : done + nf] = vals.sum(axis=1) / counts
        done += nf

    frame_means = frame_means[np.isfinite(frame_means)]
    if frame_means.size == 0:
        raise NonFiniteEvaluation("no finite sphere nodes at all")
    estimate = float(frame_means.mean())
    if frame_means.size < 2:
        return estimate, 0.0
    se = float(frame_means.std(ddof=1) / math.sqrt(frame_means.size))
    return estimate, se


def default_test_points(dims: ProblemDims, rng: RngState, n_random: int = 30) -> list[np.ndarray]:
    """Test points stressing the interesting regions of shrinkage priors.

    I.i.d. normal points at scales {0.1, 1, 10}, plus structured low-rank
    points (including the all-ones and single-nonzero-column matrices used by
    the threshold counterexamples) and near-rank-deficient points with
    smallest singular value 1e-3.
    """
    n, p = dims.n, dims.p
    gen = rng.generator()
    points = []
    per_scale = max(1, n_random // 3)
    for scale in (0.1, 1.0, 10.0):
        for _ in range(per_scale):
            points.append(scale * gen.standard_normal((n, p)))
    ones_col = np.zeros((n, p))
    ones_col[:, 0] = 1.0
    points.append(ones_col)
    points.append(np.ones((n, p)))
    if p >= 1:
        points.append(embed_spectrum(dims, [10.0] + [0.0] * (p - 1)))
    # near rank deficiency: replace the smallest singular value by 1e-3
    for _ in range(3):
        A = gen.standard_normal((n, p))
        u, s, vt = np.linalg.svd(A, full_matrices=False)
        s[-1] = 1e-3
        points.append((u * s) @ vt)
    return points


def default_perturbations(dims: ProblemDims, rng: RngState, n_nodes: int = 20_000) -> list[SpherePerturbation]:
    p = dims.p
    gen = rng.generator()
    perts = [SpherePerturbation(tuple(1.0 if i == 0 else 0.0 for i in range(p)), n_nodes)]
    v = gen.standard_normal(p)
    perts.append(SpherePerturbation(tuple(v / np.linalg.norm(v)), n_nodes))
    return perts


def certify(
    prior_or_function,
    test_points,
    perturbations,
    tol: float = 1e-10,
    rng: RngState = RngState(0),
) -> SuperharmonicReport:
    """Run Laplacian and sphere-average tests; aggregate into a verdict.

    The Laplacian route works scale-free: for registered prior families it
    tests the closed-form ratio Laplacian(pi)/pi (negative semidefinite
    exactly when the Laplacian is, but immune to the density's dynamic
    range); for black-box callables it divides the finite-difference
    Laplacian by |f(X)| when that is nonzero. A point whose normalized
    Laplacian has an eigenvalue above tol * (1 + ||ratio||_F) is a violation.
    The sphere route flags L(f; X, rho) > f(X) by more than 4 standard
    errors. Points on the singular set of the function (density +inf) are
    skipped and counted. CERTIFIED_NSD is a sampled certificate, not a proof.
    """
    if len(test_points) == 0:
        raise ValueError("test_points must be nonempty")

    is_prior = not callable(prior_or_function)
    if is_prior:
        f = lambda M: density(prior_or_function, M)  # noqa: E731
    else:
        f = prior_or_function

    max_eig = -np.inf
    worst = None
    lap_violations = 0
    skipped = 0
    tested = 0
    for X in test_points:
        X = as_matrix(X)
        try:
            if is_prior:
                lap = laplacian_density_ratio(prior_or_function, X)
            else:
                lap = matrix_laplacian_fd(f, X)
                fx = float(evaluate_stack(f, X[None])[0])
                if np.isfinite(fx) and fx != 0.0:
                    lap = lap / abs(fx)
        except (SingularPoint, NonFiniteEvaluation):
            skipped += 1
            continue
        tested += 1
        top = float(np.linalg.eigvalsh(lap)[-1])
        if top > max_eig:
            max_eig = top
            worst = X
        scale = 1.0 + float(np.linalg.norm(lap))
        if top > tol * scale:
            lap_violations += 1

    sphere_violations = []
    nonfinite = 0
    idx = 0
    for X in test_points:
        X = as_matrix(X)
        fx_arr = evaluate_stack(f, X[None])
        fx = float(fx_arr[0])
        for pert in perturbations:
            idx += 1
            if not np.isfinite(fx):
                skipped += 1
                continue
            try:
                L, se = sphere_average(f, X, pert, rng.child(idx))
            except NonFiniteEvaluation:
                nonfinite += 1
                continue
            if L - fx > 4.0 * se + 1e-9 * max(abs(L), abs(fx)):
                sphere_violations.append(
                    SphereViolation(X=X, rho=pert.rho_array, L_estimate=L, f_value=fx, std_error=se)
                )

    if lap_violations > 0 or sphere_violations:
        verdict = VIOLATION_FOUND
    elif tested == 0:
        verdict = INCONCLUSIVE
    else:
        verdict = CERTIFIED_NSD
    return SuperharmonicReport(
        points_tested=tested,
        max_laplacian_eigenvalue=float(max_eig) if tested else float("nan"),
        worst_point=worst,
        sphere_violations=sphere_violations,
        verdict=verdict,
        laplacian_violations=lap_violations,
        skipped_points=skipped,
        nonfinite_nodes=nonfinite,
    )

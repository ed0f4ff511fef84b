"""Dense linear-algebra primitives, Gaussian noise specs, and the deterministic RNG.

Matrices are plain numpy float64 arrays. Every factorization either returns valid
output or raises a typed error; NaN contamination is never passed through silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NumericsError, RankDeficiencyError


# ---------------------------------------------------------------------------
# Deterministic RNG
# ---------------------------------------------------------------------------

class RngStream:
    """Named substream of a counter-based generator.

    A stream is identified by (seed, key) where key is a tuple of small
    nonnegative integers. Identical identification yields an identical sample
    sequence across runs and platforms (numpy Philox behind SeedSequence).
    ``child(i, j, ...)`` derives an independent substream; ``generator()``
    returns a fresh Generator positioned at the start of the stream, so two
    calls on the same stream replay the same values.
    """

    __slots__ = ("seed", "key")

    def __init__(self, seed: int, key: tuple = ()):
        if seed < 0:
            raise ValueError("seed must be nonnegative")
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        if any(k < 0 or k >= 2**32 for k in self.key):
            raise ValueError("stream key entries must fit in uint32")

    def child(self, *ids: int) -> "RngStream":
        return RngStream(self.seed, self.key + ids)

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        return np.random.Generator(np.random.Philox(ss))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, key={self.key})"

    def __eq__(self, other):
        return (
            isinstance(other, RngStream)
            and self.seed == other.seed
            and self.key == other.key
        )

    def __hash__(self):
        return hash((self.seed, self.key))


def _as_generator(rng) -> np.random.Generator:
    """Accept an RngStream or a live Generator; internal callers pass the
    latter when several draws must continue one sequence."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng)!r}")


# Purpose identifiers for the standard substream hierarchy used by the
# experiment driver: trial stream = RngStream(base_seed).child(trial_index),
# then one of these, then any per-time / per-particle indices.
TRUTH_IC = 0
TRUTH_NOISE = 1
OBS_NOISE = 2
TRAINING = 3
FILTER_INIT = 4
FILTER_STEP = 5


# ---------------------------------------------------------------------------
# Factorizations
# ---------------------------------------------------------------------------

def _check_finite(a: np.ndarray, name: str = "matrix"):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise NumericsError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericsError(f"{name} contains non-finite entries")
    return a


def svd(a):
    """Full-rank thin SVD: returns (left_vectors, singular_values, right_vectors)
    with A = U diag(s) V^T, singular values descending."""
    a = _check_finite(a, "svd input")
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericsError(f"SVD did not converge: {exc}") from exc
    return u, s, vt.T


def qr_positive(a):
    """Reduced QR by modified Gram-Schmidt with a positive-diagonal convention.

    Returns (Q, T) with Q column-orthonormal, T upper triangular, diag(T) > 0,
    and Q @ T = A. Raises RankDeficiencyError when a pivot falls below
    1e-12 * ||A||.
    """
    a = _check_finite(a, "qr input")
    m, n = a.shape
    if n > m:
        raise RankDeficiencyError(f"qr_positive needs columns <= rows, got {m}x{n}")
    scale = np.linalg.norm(a)
    tol = 1e-12 * max(scale, 1e-300)
    q = a.copy()
    t = np.zeros((n, n))
    for i in range(n):
        norm = np.linalg.norm(q[:, i])
        if norm <= tol:
            raise RankDeficiencyError(
                f"qr_positive: column {i} is numerically dependent "
                f"(pivot {norm:.3e} <= {tol:.3e})"
            )
        t[i, i] = norm
        q[:, i] /= norm
        if i + 1 < n:
            # project the new direction out of every remaining column at once
            coeffs = q[:, i] @ q[:, i + 1:]
            t[i, i + 1:] = coeffs
            q[:, i + 1:] -= np.outer(q[:, i], coeffs)
    return q, t


def pseudoinverse(h):
    """Moore-Penrose pseudoinverse of a full-row-rank matrix."""
    h = _check_finite(h, "pseudoinverse input")
    d = h.shape[0]
    s = np.linalg.svd(h, compute_uv=False)
    if s.size < d or s[d - 1] <= 1e-12 * max(s[0], 1e-300):
        raise RankDeficiencyError(
            f"pseudoinverse: matrix is not full row rank "
            f"(smallest singular value {s[-1] if s.size else 0.0:.3e})"
        )
    return np.linalg.pinv(h)


def eig_general(a):
    """Eigendecomposition of a general square matrix.

    Returns (eigenvalues, eigenvectors) with unit-norm eigenvector columns;
    complex conjugate pairs of a real input appear adjacently.
    """
    a = _check_finite(a, "eig input")
    if a.shape[0] != a.shape[1]:
        raise NumericsError(f"eig_general needs a square matrix, got {a.shape}")
    try:
        w, v = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise NumericsError(f"eigendecomposition did not converge: {exc}") from exc
    norms = np.linalg.norm(v, axis=0)
    if np.any(norms == 0) or not np.all(np.isfinite(norms)):
        raise NumericsError("eigendecomposition returned an invalid eigenvector")
    return w, v / norms


# ---------------------------------------------------------------------------
# Gaussian noise specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """Covariance of an additive Gaussian term, scalar-identity or dense SPD.

    The scalar form stores one nonnegative real (variance per component); a
    scale of exactly zero means a degenerate (deterministic) term. The dense
    form caches its Cholesky factor on first use.
    """

    dim: int
    scale: float = 1.0
    matrix: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @staticmethod
    def scaled_identity(dim: int, scale: float) -> "NoiseSpec":
        if scale < 0:
            raise ValueError("noise scale must be nonnegative")
        return NoiseSpec(dim=int(dim), scale=float(scale))

    @staticmethod
    def dense(matrix) -> "NoiseSpec":
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("dense noise covariance must be square")
        if not np.all(np.isfinite(m)):
            raise ValueError("dense noise covariance has non-finite entries")
        if not np.allclose(m, m.T, rtol=1e-10, atol=1e-12):
            raise ValueError("dense noise covariance must be symmetric")
        return NoiseSpec(dim=m.shape[0], scale=float("nan"), matrix=m)

    @property
    def is_scalar(self) -> bool:
        return self.matrix is None

    @property
    def is_zero(self) -> bool:
        return self.matrix is None and self.scale == 0.0

    def cov_matrix(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix
        return self.scale * np.eye(self.dim)

    def _chol(self) -> np.ndarray:
        """Lower Cholesky factor of the dense form (cached)."""
        if "chol" not in self._cache:
            try:
                self._cache["chol"] = scipy.linalg.cholesky(self.matrix, lower=True)
            except scipy.linalg.LinAlgError as exc:
                raise NumericsError(f"noise covariance is not SPD: {exc}") from exc
        return self._cache["chol"]

    def color(self, xi: np.ndarray) -> np.ndarray:
        """Transform standard-normal draws (last axis = dim) into draws of this
        covariance: C xi with C C^T = cov."""
        xi = np.asarray(xi, dtype=float)
        if self.is_zero:
            return np.zeros_like(xi)
        if self.is_scalar:
            return np.sqrt(self.scale) * xi
        return xi @ self._chol().T

    def sample(self, rng, size: int | None = None) -> np.ndarray:
        """Draw one sample (size=None) or a (size, dim) block of samples."""
        gen = _as_generator(rng)
        shape = (self.dim,) if size is None else (size, self.dim)
        if self.is_zero:
            return np.zeros(shape)
        return self.color(gen.standard_normal(shape))

    def solve(self, v: np.ndarray) -> np.ndarray:
        """cov^{-1} v along the last axis."""
        if self.is_zero:
            raise NumericsError("zero covariance is not invertible")
        if self.is_scalar:
            return v / self.scale
        c = self._chol()
        return scipy.linalg.cho_solve((c, True), np.asarray(v, dtype=float).T).T

    def quad(self, v: np.ndarray) -> np.ndarray:
        """v^T cov^{-1} v along the last axis.

        For an exactly zero covariance this is the degenerate-Gaussian limit:
        0 for a zero residual, +inf otherwise.
        """
        v = np.asarray(v, dtype=float)
        if self.is_zero:
            sq = np.sum(v * v, axis=-1)
            return np.where(sq == 0.0, 0.0, np.inf)
        if self.is_scalar:
            return np.sum(v * v, axis=-1) / self.scale
        c = self._chol()
        w = scipy.linalg.solve_triangular(c, v.T, lower=True)
        return np.sum(w * w, axis=0)


def sample_gaussian(mean, cov: NoiseSpec, rng) -> np.ndarray:
    """Draw mean + C xi with C the (cached) Cholesky factor of cov."""
    mean = np.asarray(mean, dtype=float)
    if mean.shape != (cov.dim,):
        raise ValueError(f"mean has shape {mean.shape}, covariance dim is {cov.dim}")
    return mean + cov.sample(rng)

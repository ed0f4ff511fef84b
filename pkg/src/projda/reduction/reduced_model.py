"""Reduced physical model and reduced data model bound into one object.

The reduced state update is f^q(z) = U_out^T f(U_in z) with model-noise
covariance Q^q = U_out^T Q U_out. The data model comes in two kinds:

* model-based: V spans a subspace of the state space (M x r_d);
  reduced data y_hat = V^T H^+ y, operator H^q = V^T H^+ H U, noise
  R^q = V^T H^+ R (H^+)^T V.
* data-based: V spans a subspace of the data space (d x r_d);
  y_hat = V^T y, H^q = V^T H U, R^q = V^T R V.

Identity bases make every map collapse to the unprojected filter exactly, so
the unprojected and projected algorithms share one code path.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from ..errors import NumericsError, ReductionError
from ..models.observation import ObservationOperator
from ..numerics import NoiseSpec
from .basis import ReductionBasis


def conjugate_noise(noise: NoiseSpec, basis: ReductionBasis) -> NoiseSpec:
    """B^T cov B for column-orthonormal B; scalar covariance stays scalar exactly."""
    if basis.is_identity:
        return noise
    if noise.is_scalar:
        return NoiseSpec.scaled_identity(basis.rank, noise.scale)
    return NoiseSpec.dense(basis.columns.T @ noise.matrix @ basis.columns)


class ReducedModel:
    """All precomputed operators one assimilation cycle needs."""

    def __init__(self, model, h: ObservationOperator, q: NoiseSpec, r: NoiseSpec,
                 basis_in: ReductionBasis, basis_out: ReductionBasis,
                 data_basis: ReductionBasis, data_kind: str):
        if data_kind not in ("model", "data"):
            raise ValueError("data_kind must be 'model' or 'data'")
        m = h.state_dim
        if basis_in.state_dim != m or basis_out.state_dim != m:
            raise ReductionError("state basis dimension does not match the model")
        if basis_in.rank != basis_out.rank:
            raise ReductionError("incoming and outgoing state bases must share a rank")
        expected_v_dim = m if data_kind == "model" else h.data_dim
        if data_basis.state_dim != expected_v_dim:
            raise ReductionError(
                f"{data_kind}-based data basis must have {expected_v_dim} rows, "
                f"got {data_basis.state_dim}"
            )

        self.model = model
        self.h = h
        self.q = q
        self.r = r
        self.basis_in = basis_in
        self.basis_out = basis_out
        self.data_basis = data_basis
        self.data_kind = data_kind

        # H U_out: a row subsample of the outgoing basis, exact (no matmul)
        self.hu = basis_out.columns[h.indices, :]

        # reduced data operator H^q (r_d x r_p)
        if data_kind == "data":
            self.h_q = data_basis.reduce(self.hu.T).T if not data_basis.is_identity else self.hu.copy()
            self._hv = None
        else:
            # H V: row subsample of V, used for both y_hat = (HV)^T y and R^q
            self._hv = data_basis.columns[h.indices, :]
            masked = np.zeros_like(basis_out.columns)
            masked[h.indices, :] = basis_out.columns[h.indices, :]
            self.h_q = data_basis.columns.T @ masked

        self.q_q = conjugate_noise(q, basis_out)

        # reduced data noise R^q
        if data_kind == "data":
            self.r_q = conjugate_noise(r, data_basis)
        else:
            rv = r.cov_matrix() @ self._hv
            self.r_q = NoiseSpec.dense(self._hv.T @ rv)
        try:
            if not self.r_q.is_scalar:
                self.r_q._chol()
        except NumericsError as exc:
            raise ReductionError(
                f"reduced data noise R^q is numerically singular; the "
                f"{data_kind}-based data reduction is the cause: {exc}"
            ) from exc

        # smoothing directions for the projected resampling noise, in state space
        if data_kind == "model":
            self._jitter_cols = data_basis.columns
        else:
            w = np.zeros((m, data_basis.rank))
            w[h.indices, :] = data_basis.columns
            self._jitter_cols = w

        self._proposal = None
        self._zq_chol = None

    # -- dimensions ---------------------------------------------------------

    @property
    def state_dim(self) -> int:
        return self.basis_in.state_dim

    @property
    def reduced_dim(self) -> int:
        return self.basis_in.rank

    @property
    def data_reduced_dim(self) -> int:
        return self.data_basis.rank

    @property
    def is_identity(self) -> bool:
        return self.basis_in.is_identity and self.data_basis.is_identity

    # -- maps ----------------------------------------------------------------

    def forecast(self, z_rows: np.ndarray) -> np.ndarray:
        """f^q on row-stacked reduced states: U_out^T f(U_in z)."""
        x = self.basis_in.reconstruct(z_rows)
        fx = self.model.cycle_map(x.T).T
        return self.basis_out.reduce(fx)

    def reduce_data(self, y: np.ndarray) -> np.ndarray:
        """y_hat = V^T H^+ y (model-based) or V^T y (data-based)."""
        y = np.asarray(y, dtype=float)
        if self.data_kind == "data":
            return self.data_basis.reduce(y)
        return self._hv.T @ y

    def jitter_noise(self, gen: np.random.Generator, count: int, omega: float,
                     alpha: float) -> np.ndarray:
        """Projected resampling noise rows: U_out^T [a W W^T + (1-a) I] xi with
        xi ~ N(0, omega I_M); W is V lifted to the state space for data-based
        reductions."""
        return smoothed_noise_rows(self.basis_out, self._jitter_cols, alpha,
                                   omega, gen, count)

    # -- cached factorizations ------------------------------------------------

    def optimal_proposal(self) -> "OptimalProposal":
        if self._proposal is None:
            self._proposal = OptimalProposal(self)
        return self._proposal

    def weight_quad(self, nu_rows: np.ndarray) -> np.ndarray:
        """nu^T (Z^q)^{-1} nu rowwise with Z^q = H^q Q^q H^q^T + R^q."""
        if self._zq_chol is None:
            qh = self.q_q.cov_matrix() @ self.h_q.T
            zq = self.h_q @ qh + self.r_q.cov_matrix()
            try:
                self._zq_chol = scipy.linalg.cholesky(zq, lower=True)
            except scipy.linalg.LinAlgError as exc:
                raise NumericsError(f"weight matrix Z^q is singular: {exc}") from exc
        w = scipy.linalg.solve_triangular(self._zq_chol, np.asarray(nu_rows, dtype=float).T,
                                          lower=True)
        return np.sum(w * w, axis=0)

    def zq_matrix(self) -> np.ndarray:
        qh = self.q_q.cov_matrix() @ self.h_q.T
        return self.h_q @ qh + self.r_q.cov_matrix()


def smoothed_noise_rows(u_basis: ReductionBasis, w_cols: np.ndarray, alpha: float,
                        omega: float, gen: np.random.Generator, count: int) -> np.ndarray:
    """(count, r_p) rows of U^T [a W W^T + (1-a) I] xi, xi ~ N(0, omega I_M)."""
    xi = np.sqrt(omega) * gen.standard_normal((count, u_basis.state_dim))
    smoothed = alpha * ((xi @ w_cols) @ w_cols.T) + (1.0 - alpha) * xi
    return u_basis.reduce(smoothed)


class OptimalProposal:
    """Gaussian proposal of the optimal-proposal update in reduced coordinates.

    Precision A = (Q^q)^{-1} + (HU)^T R^{-1} (HU) is factored once; sampling
    uses delta = L^{-T} xi and the mean shift solves A delta = (HU)^T R^{-1}
    (y - HU f^q(z)).
    """

    def __init__(self, reduced: ReducedModel):
        hu = reduced.hu
        r_p = reduced.reduced_dim
        if reduced.q_q.is_zero:
            raise NumericsError("optimal proposal requires a nonzero model noise Q")
        if reduced.q_q.is_scalar:
            a = np.eye(r_p) / reduced.q_q.scale
        else:
            a = scipy.linalg.cho_solve((reduced.q_q._chol(), True), np.eye(r_p))
        self._rinv_hu = reduced.r.solve(hu.T).T if not reduced.r.is_scalar else hu / reduced.r.scale
        a = a + hu.T @ self._rinv_hu
        try:
            self._chol = scipy.linalg.cholesky(a, lower=True)
        except scipy.linalg.LinAlgError as exc:
            raise NumericsError(f"proposal precision Q_p^{{-1}} is singular: {exc}") from exc

    def mean_shift(self, resid_rows: np.ndarray) -> np.ndarray:
        """Q_p (HU)^T R^{-1} resid, rowwise over (count, d) residuals."""
        rhs = resid_rows @ self._rinv_hu
        return scipy.linalg.cho_solve((self._chol, True), rhs.T).T

    def sample_delta(self, xi_rows: np.ndarray) -> np.ndarray:
        """Draws of N(0, Q_p) from standard-normal rows: L^{-T} xi."""
        return scipy.linalg.solve_triangular(self._chol.T, xi_rows.T, lower=False).T

    def covariance(self) -> np.ndarray:
        """Dense Q_p, mainly for verification."""
        n = self._chol.shape[0]
        return scipy.linalg.cho_solve((self._chol, True), np.eye(n))


def build_reduced_model(model, h: ObservationOperator, q: NoiseSpec, r: NoiseSpec,
                        u: ReductionBasis, v: ReductionBasis | None = None,
                        kind: str = "model", u_out: ReductionBasis | None = None) -> ReducedModel:
    """Assemble the reduced physical and data models.

    u is the state basis (M x r_p); v the data basis, M x r_d for kind='model'
    or d x r_d for kind='data', defaulting to u itself; u_out supports
    time-dependent bases (defaults to u).
    """
    kind = {"model-based": "model", "data-based": "data"}.get(kind, kind)
    if v is None:
        v = u if kind == "model" else None
    if v is None:
        raise ReductionError("data-based reduction requires an explicit data basis")
    return ReducedModel(model, h, q, r, basis_in=u, basis_out=u_out or u,
                        data_basis=v, data_kind=kind)


def identity_reduced_model(model, h: ObservationOperator, q: NoiseSpec,
                           r: NoiseSpec) -> ReducedModel:
    """The trivial reduction: U = I_M, V = I_d, data-based. Unprojected filters
    run through this object so that they share the projected code path."""
    from .basis import identity_basis

    return build_reduced_model(
        model, h, q, r,
        u=identity_basis(h.state_dim),
        v=identity_basis(h.data_dim),
        kind="data",
    )

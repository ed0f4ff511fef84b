"""Orthonormal reduction bases and their file format.

Basis files hold the M x r column-major little-endian float64 entries with a
JSON sidecar {kind, M, r, source_snapshot_file, parameters}.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import ReductionError


class ReductionBasis:
    """Matrix U with orthonormal columns mapping reduced coordinates to states.

    reduce(x) = U^T x, reconstruct(z) = U z. kind is one of
    {pod, dmd, aus, identity}; the identity kind short-circuits both maps so the
    unprojected filters share the projected code path at zero cost.
    """

    def __init__(self, columns: np.ndarray, kind: str, time_dependent: bool = False,
                 validate: bool = True):
        # canonical layout: BLAS kernels round differently per memory order, so
        # a basis loaded from file must not differ from one built in memory
        u = np.ascontiguousarray(columns, dtype=float)
        if u.ndim != 2:
            raise ReductionError("basis columns must form a 2-d matrix")
        m, r = u.shape
        if r > m:
            raise ReductionError(f"basis rank {r} exceeds state dimension {m}")
        if validate:
            gram_err = np.max(np.abs(u.T @ u - np.eye(r)))
            if gram_err > 1e-10:
                raise ReductionError(
                    f"basis columns are not orthonormal (max |U^T U - I| = {gram_err:.3e})"
                )
        self.columns = u
        self.kind = kind
        self.time_dependent = bool(time_dependent)
        self._identity = kind == "identity"

    @property
    def state_dim(self) -> int:
        return self.columns.shape[0]

    @property
    def rank(self) -> int:
        return self.columns.shape[1]

    @property
    def is_identity(self) -> bool:
        return self._identity

    def reduce(self, x: np.ndarray) -> np.ndarray:
        """U^T x along the last axis."""
        x = np.asarray(x, dtype=float)
        if self._identity:
            return x.copy()
        return x @ self.columns

    def reconstruct(self, z: np.ndarray) -> np.ndarray:
        """U z along the last axis."""
        z = np.asarray(z, dtype=float)
        if self._identity:
            return z.copy()
        return z @ self.columns.T

    def project(self, x: np.ndarray) -> np.ndarray:
        """U U^T x, the orthogonal projection onto the span."""
        if self._identity:
            return np.asarray(x, dtype=float).copy()
        return self.reconstruct(self.reduce(x))

    def leading(self, r: int) -> "ReductionBasis":
        """Basis of the first r columns."""
        if r > self.rank:
            raise ReductionError(f"requested {r} columns, basis has {self.rank}")
        if r == self.rank:
            return self
        return ReductionBasis(self.columns[:, :r], kind=self.kind,
                              time_dependent=self.time_dependent, validate=False)


def identity_basis(dim: int) -> ReductionBasis:
    return ReductionBasis(np.eye(dim), kind="identity", validate=False)


def save_basis(path: str, basis: ReductionBasis, source_snapshot_file: str = "",
               parameters: dict | None = None):
    cols = np.asarray(basis.columns, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(cols.tobytes(order="F"))
    sidecar = {
        "kind": basis.kind,
        "M": basis.state_dim,
        "r": basis.rank,
        "source_snapshot_file": source_snapshot_file,
        "parameters": parameters or {},
    }
    with open(path + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")


def load_basis(path: str) -> ReductionBasis:
    with open(path + ".json") as fh:
        sidecar = json.load(fh)
    m, r = int(sidecar["M"]), int(sidecar["r"])
    raw = np.fromfile(path, dtype="<f8")
    if raw.size != m * r:
        raise ValueError(f"basis file holds {raw.size} values, expected {m * r}")
    cols = raw.reshape((m, r), order="F")
    return ReductionBasis(cols, kind=sidecar["kind"])

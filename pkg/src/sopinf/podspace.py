"""POD basis computation, snapshot projection and normalization scales.

The basis is the truncated left-singular factor of the displacement snapshot
matrix.  Normalization divides each (reduced) snapshot matrix by its
Frobenius norm so the optimizer sees unit-scaled data regardless of the
physical magnitudes; the scales are kept to restore the physical operators
afterwards.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_matrix
from .errors import DimensionMismatchError, RankDeficientError, ZeroSnapshotError
from .structures import SnapshotSet

__all__ = [
    "PodBasis",
    "Scales",
    "pod_basis",
    "identity_basis",
    "select_order",
    "project",
    "lift",
    "compute_scales",
    "normalize",
    "PodReducer",
]

#: Relative singular-value floor below which a requested order is treated as
#: exceeding the numerical rank.
RANK_RTOL = 1e-14


@dataclass(frozen=True)
class PodBasis:
    """Truncated orthonormal basis plus the full singular-value spectrum."""

    V: np.ndarray
    singular_values: np.ndarray
    r: int

    def __post_init__(self):
        V = as_matrix(self.V, "V")
        sv = np.asarray(self.singular_values, dtype=np.float64)
        if V.shape[1] != self.r:
            raise DimensionMismatchError(f"V must have r={self.r} columns")
        if np.any(np.diff(sv) > 0) or np.any(sv < 0):
            raise ValueError("singular values must be non-increasing and non-negative")
        V = np.array(V, copy=True)
        V.setflags(write=False)
        sv = np.array(sv, copy=True)
        sv.setflags(write=False)
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "singular_values", sv)
        object.__setattr__(self, "r", int(self.r))

    @property
    def n(self) -> int:
        return self.V.shape[0]

    def energy_ratios(self) -> np.ndarray:
        """Cumulative energy fractions sum(sv[:k]**2) / sum(sv**2)."""
        e = self.singular_values**2
        return np.cumsum(e) / np.sum(e)


@dataclass(frozen=True)
class Scales:
    """Frobenius norms of the reduced snapshot matrices and the input."""

    alpha_x: float
    alpha_v: float
    alpha_a: float
    alpha_u: float

    def __post_init__(self):
        for name in ("alpha_x", "alpha_v", "alpha_a", "alpha_u"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def pod_basis(X, r: int) -> PodBasis:
    """First r left-singular vectors of the snapshot matrix X.

    Column signs are fixed by making the largest-magnitude entry of each
    column positive, so the basis is fully deterministic.

    Raises
    ------
    RankDeficientError
        If ``sigma_r / sigma_1 < 1e-14`` (requested order exceeds the
        numerical rank), or X is identically zero.
    """
    X = as_matrix(X, "X")
    if not 1 <= r <= min(X.shape):
        raise ValueError(f"r must be in [1, {min(X.shape)}], got {r}")
    V, sv, _ = np.linalg.svd(X, full_matrices=False)
    if sv[0] == 0.0:
        raise RankDeficientError("snapshot matrix is identically zero")
    if sv[r - 1] / sv[0] < RANK_RTOL:
        raise RankDeficientError(
            f"order {r} exceeds numerical rank (sigma ratio {sv[r - 1] / sv[0]:.3e})"
        )
    V = V[:, :r].copy()
    for j in range(r):
        i = np.argmax(np.abs(V[:, j]))
        if V[i, j] < 0:
            V[:, j] = -V[:, j]
    return PodBasis(V=V, singular_values=sv, r=r)


def identity_basis(n: int, singular_values=None) -> PodBasis:
    """Identity projection (r = n); useful for exact-recovery studies."""
    sv = np.ones(n) if singular_values is None else singular_values
    return PodBasis(V=np.eye(n), singular_values=sv, r=n)


def select_order(singular_values, energy_tol: float = 1e-10) -> int:
    """Smallest r whose retained energy reaches ``1 - energy_tol``."""
    sv = np.asarray(singular_values, dtype=np.float64)
    e = sv**2
    ratios = np.cumsum(e) / np.sum(e)
    return int(np.searchsorted(ratios, 1.0 - energy_tol) + 1)


def project(basis: PodBasis, snaps: SnapshotSet) -> SnapshotSet:
    """Project the state snapshots onto the basis; inputs pass through."""
    if basis.n != snaps.n:
        raise DimensionMismatchError(
            f"basis has {basis.n} rows but snapshots have n={snaps.n}"
        )
    Vt = basis.V.T
    return SnapshotSet(
        times=snaps.times,
        U=snaps.U,
        X=Vt @ snaps.X,
        Xd=Vt @ snaps.Xd,
        Xdd=Vt @ snaps.Xdd,
    )


def lift(basis: PodBasis, Xr) -> np.ndarray:
    """Lift reduced states back to the full space: X ~= V * Xr."""
    Xr = as_matrix(Xr, "Xr")
    if Xr.shape[0] != basis.r:
        raise DimensionMismatchError(f"Xr must have {basis.r} rows")
    return basis.V @ Xr


def compute_scales(reduced: SnapshotSet) -> Scales:
    """Frobenius norms of X, Xd, Xdd and U of a (reduced) snapshot set."""
    norms = {
        "alpha_x": float(np.linalg.norm(reduced.X)),
        "alpha_v": float(np.linalg.norm(reduced.Xd)),
        "alpha_a": float(np.linalg.norm(reduced.Xdd)),
        "alpha_u": float(np.linalg.norm(reduced.U)),
    }
    for name, val in norms.items():
        if val == 0.0:
            raise ZeroSnapshotError(f"{name}: snapshot matrix is identically zero")
    return Scales(**norms)


def normalize(snaps: SnapshotSet, scales: Scales) -> SnapshotSet:
    """Divide each snapshot matrix by its scale (unit Frobenius norm after)."""
    return SnapshotSet(
        times=snaps.times,
        U=snaps.U / scales.alpha_u,
        X=snaps.X / scales.alpha_x,
        Xd=snaps.Xd / scales.alpha_v,
        Xdd=snaps.Xdd / scales.alpha_a,
    )


class PodReducer(BaseEstimator, TransformerMixin):
    """Sklearn-style transformer wrapping the POD basis.

    Follows the snapshot convention of this package (columns are time
    samples, rows are DOFs), like other snapshot-based decomposition
    libraries.  ``fit`` computes the basis from a displacement snapshot
    matrix; ``transform`` projects and ``inverse_transform`` lifts.

    Parameters
    ----------
    r : int or None
        Truncation order.  When None, the order is picked from the spectrum
        with :func:`select_order` and ``energy_tol``.
    energy_tol : float
        Retained-energy tolerance used when ``r`` is None.
    """

    def __init__(self, r=None, energy_tol=1e-10):
        self.r = r
        self.energy_tol = energy_tol

    def fit(self, X, y=None):
        X = as_matrix(X, "X")
        if self.r is None:
            sv = np.linalg.svd(X, compute_uv=False)
            r = select_order(sv, self.energy_tol)
        else:
            r = int(self.r)
        self.basis_ = pod_basis(X, r)
        self.r_ = r
        self.singular_values_ = self.basis_.singular_values
        return self

    def transform(self, X):
        check_is_fitted(self, "basis_")
        X = as_matrix(X, "X")
        if X.shape[0] != self.basis_.n:
            raise DimensionMismatchError(
                f"X must have {self.basis_.n} rows, got {X.shape[0]}"
            )
        return self.basis_.V.T @ X

    def inverse_transform(self, Xr):
        check_is_fitted(self, "basis_")
        return lift(self.basis_, Xr)

    def reduce(self, snaps: SnapshotSet) -> SnapshotSet:
        """Project a full SnapshotSet (states only; inputs pass through)."""
        check_is_fitted(self, "basis_")
        return project(self.basis_, snaps)

"""Sklearn-style estimator tying the inference pipeline together.

``StructuredOpInf(r=4).fit(snapshots)`` compresses the snapshots, normalizes
them, runs the factorized optimization and assembles the physical reduced
operators; ``predict`` simulates the fitted model under new inputs and lifts
the trajectory back to the full space.  Hyperparameters live in the
constructor, so the estimator clones and grid-searches like any other
sklearn estimator.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import as_matrix
from .errors import DimensionMismatchError
from .evalkit import relative_error, simulate_rom
from .pinfer import TrainConfig, assemble_rom, train
from .podspace import PodBasis, compute_scales, normalize, pod_basis, project
from .structures import SnapshotSet
from .timestep import NewmarkConfig

__all__ = ["StructuredOpInf"]


class StructuredOpInf(BaseEstimator):
    """Structure-preserving operator inference as a fit/predict estimator.

    Parameters
    ----------
    r : int
        Reduced order.
    epochs, lr_low, lr_high, cycle_length : optimizer schedule; defaults are
        the reference protocol (36 000 epochs, triangular cyclic learning
        rate between 5e-6 and 1e-3 with a 2000-epoch half-period).
    adam_beta1, adam_beta2, adam_eps : Adam moment parameters.
    seed : int
        Seed for the factor initialization.
    omega : float
        Training spin speed (rad/s); 0 for non-rotating systems.

    Attributes
    ----------
    basis_ : PodBasis
    scales_ : Scales
    result_ : TrainResult
    rom_ : StructuredROM
    loss_history_ : ndarray
    final_loss_ : float
    """

    def __init__(self, r=2, epochs=36000, lr_low=5e-6, lr_high=1e-3,
                 cycle_length=2000, adam_beta1=0.9, adam_beta2=0.999,
                 adam_eps=1e-8, seed=0, omega=0.0):
        self.r = r
        self.epochs = epochs
        self.lr_low = lr_low
        self.lr_high = lr_high
        self.cycle_length = cycle_length
        self.adam_beta1 = adam_beta1
        self.adam_beta2 = adam_beta2
        self.adam_eps = adam_eps
        self.seed = seed
        self.omega = omega

    def _train_config(self):
        return TrainConfig(
            epochs=self.epochs, lr_low=self.lr_low, lr_high=self.lr_high,
            cycle_length=self.cycle_length, adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2, adam_eps=self.adam_eps,
            seed=self.seed, omega=self.omega,
        )

    def fit(self, snapshots: SnapshotSet, basis: PodBasis | None = None):
        """Fit reduced operators to full-order snapshot data.

        When ``basis`` is omitted it is computed from the displacement
        snapshots at order ``r``.
        """
        if basis is None:
            basis = pod_basis(snapshots.X, int(self.r))
        elif basis.r != int(self.r):
            raise DimensionMismatchError(
                f"basis has r={basis.r} but estimator expects r={self.r}"
            )
        reduced = project(basis, snapshots)
        scales = compute_scales(reduced)
        result = train(normalize(reduced, scales), scales, self._train_config())
        self.basis_ = basis
        self.scales_ = scales
        self.result_ = result
        self.rom_ = assemble_rom(result, scales, basis, float(self.omega))
        self.loss_history_ = result.loss_history
        self.final_loss_ = result.final_loss
        self.dt_ = snapshots.dt
        return self

    def predict(self, U, cfg: NewmarkConfig | None = None,
                omega: float | None = None) -> np.ndarray:
        """Simulate the fitted reduced model under inputs U and lift.

        ``cfg`` defaults to the fit-time step size with ``U.shape[1] - 1``
        steps; ``omega`` defaults to the training spin speed.
        """
        check_is_fitted(self, "rom_")
        U = as_matrix(U, "U")
        if cfg is None:
            cfg = NewmarkConfig(dt=self.dt_, n_steps=U.shape[1] - 1)
        if omega is None:
            omega = float(self.omega)
        return simulate_rom(self.rom_, omega, U, cfg)

    def score(self, U, X_true, cfg: NewmarkConfig | None = None,
              omega: float | None = None) -> float:
        """Negative maximal relative error of the lifted prediction."""
        X_true = as_matrix(X_true, "X_true")
        Xhat = self.predict(U, cfg=cfg, omega=omega)
        return -float(np.max(relative_error(X_true, Xhat)))

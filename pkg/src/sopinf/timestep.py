"""Newmark-beta time integration of M x'' + (D + omega*G) x' + K x = B u.

The scheme solves for the acceleration at each step, so displacement,
velocity and acceleration snapshots all satisfy the governing equations to
solver precision -- exactly the derivative data the inference consumes.
Default parameters (beta = 1/4, gamma = 1/2) are the unconditionally stable
average-acceleration variant, which conserves energy for undamped linear
systems.  The effective matrix is factorized once; each step costs one pair
of triangular solves.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._validation import as_matrix, as_vector
from .errors import (
    DimensionMismatchError,
    NonFiniteError,
    SingularEffectiveMatrixError,
)
from .structures import SecondOrderSystem, SnapshotSet

__all__ = ["NewmarkConfig", "integrate"]


@dataclass(frozen=True)
class NewmarkConfig:
    """Integration parameters; x0/v0 default to zero initial state."""

    dt: float
    n_steps: int
    beta: float = 0.25
    gamma: float = 0.5
    x0: np.ndarray | None = None
    v0: np.ndarray | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if not 0.0 < self.beta <= 0.5:
            raise ValueError("beta must be in (0, 0.5]")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")


def integrate(sys: SecondOrderSystem, omega: float, U, cfg: NewmarkConfig) -> SnapshotSet:
    """Integrate the system under sampled inputs U (m x (n_steps+1)).

    Parameters
    ----------
    sys : SecondOrderSystem
    omega : float
        Spin speed (rad/s); must be 0 for systems without a gyroscopic term.
    U : (m, n_steps+1) array_like
        Inputs sampled on the integration grid; column k belongs to t = k*dt.
    cfg : NewmarkConfig

    Returns
    -------
    SnapshotSet
        Times, inputs and the three state snapshot matrices, including the
        initial state at t = 0.

    Raises
    ------
    SingularEffectiveMatrixError
        If the effective matrix cannot be factorized.
    NonFiniteError
        If the trajectory overflows.
    """
    U = as_matrix(U, "U")
    n, m = sys.n, sys.m
    N = cfg.n_steps + 1
    if U.shape != (m, N):
        raise DimensionMismatchError(f"U must have shape {(m, N)}, got {U.shape}")
    if not sys.has_gyro and omega != 0.0:
        raise ValueError("omega must be 0 for a system without a gyroscopic term")

    E = sys.e_matrix(omega)
    dt, beta, gamma = cfg.dt, cfg.beta, cfg.gamma
    x = np.zeros(n) if cfg.x0 is None else as_vector(cfg.x0, "x0").copy()
    v = np.zeros(n) if cfg.v0 is None else as_vector(cfg.v0, "v0").copy()
    if x.shape != (n,) or v.shape != (n,):
        raise DimensionMismatchError("x0/v0 must have length n")

    S_eff = sys.M + gamma * dt * E + beta * dt * dt * sys.K
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu = scipy.linalg.lu_factor(S_eff)
        a = scipy.linalg.solve(sys.M, sys.B @ U[:, 0] - E @ v - sys.K @ x)
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
        raise SingularEffectiveMatrixError(str(exc)) from exc
    # lu_factor only warns on exact singularity; gate on the U diagonal.
    if np.any(np.diag(lu[0]) == 0.0) or not np.all(np.isfinite(lu[0])):
        raise SingularEffectiveMatrixError("effective matrix is singular")

    X = np.empty((n, N))
    Xd = np.empty((n, N))
    Xdd = np.empty((n, N))
    X[:, 0], Xd[:, 0], Xdd[:, 0] = x, v, a

    BU = sys.B @ U
    for k in range(cfg.n_steps):
        x_star = x + dt * v + dt * dt * (0.5 - beta) * a
        v_star = v + dt * (1.0 - gamma) * a
        rhs = BU[:, k + 1] - E @ v_star - sys.K @ x_star
        a = scipy.linalg.lu_solve(lu, rhs)
        x = x_star + beta * dt * dt * a
        v = v_star + gamma * dt * a
        X[:, k + 1], Xd[:, k + 1], Xdd[:, k + 1] = x, v, a

    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Xd)) and np.all(np.isfinite(Xdd))):
        raise NonFiniteError("integration overflowed (non-finite trajectory)")

    times = dt * np.arange(N)
    return SnapshotSet(times=times, U=U, X=X, Xd=Xd, Xdd=Xdd)

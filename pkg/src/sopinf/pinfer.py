"""Factor-parametrized operator inference for second-order systems.

The reduced operators are sought through an unconstrained parametrization
that makes their structure automatic: mass, damping and inverse stiffness
are factor products ``F F^T`` (symmetric positive semi-definite by
construction) and the gyroscopic term is ``Gc - Gc^T`` (exactly skew).  The
loss compares the reduced displacement snapshots against the displacements
predicted from the velocity, acceleration and input data,

    Xp = P*Bt*U - P*Mh*Xdd - P*(Dh + omega*Gh)*Xd,    P = Kc Kc^T,

with the inverse stiffness P as an independent variable, so no matrix is
inverted inside the optimization.  The resulting nonlinear least-squares
problem is minimized with full-batch Adam under a triangular cyclic
learning-rate schedule; gradients are analytic (matrix calculus), checked
against central finite differences in the test suite.
"""

from dataclasses import dataclass, field

import math

import numpy as np

from ._validation import as_matrix, check_finite
from .errors import (
    DimensionMismatchError,
    IllConditionedStiffnessError,
    NonFiniteError,
    RankDeficientRegressorError,
)
from .podspace import PodBasis, Scales
from .structures import SnapshotSet, StructuredROM

__all__ = [
    "FactorParams",
    "TrainConfig",
    "TrainResult",
    "init_params",
    "predict_displacements",
    "loss",
    "loss_grad",
    "cyclic_lr",
    "train",
    "assemble_rom",
    "ls_opinf_baseline",
]

#: Condition-number guard for inverting the inferred inverse stiffness.
COND_LIMIT = 1e12


@dataclass(frozen=True)
class FactorParams:
    """Optimization variables: four square factors plus the input map."""

    Mc: np.ndarray
    Dc: np.ndarray
    Gc: np.ndarray
    Kc: np.ndarray
    Bt: np.ndarray

    def __post_init__(self):
        mats = {}
        for name in ("Mc", "Dc", "Gc", "Kc", "Bt"):
            A = as_matrix(getattr(self, name), name)
            check_finite(A, name)
            mats[name] = A
        r = mats["Mc"].shape[0]
        for name in ("Mc", "Dc", "Gc", "Kc"):
            if mats[name].shape != (r, r):
                raise DimensionMismatchError(f"{name} must have shape {(r, r)}")
        if mats["Bt"].shape[0] != r:
            raise DimensionMismatchError(f"Bt must have {r} rows")
        for name, A in mats.items():
            A = np.array(A, copy=True)
            A.setflags(write=False)
            object.__setattr__(self, name, A)

    @property
    def r(self) -> int:
        return self.Mc.shape[0]

    @property
    def m(self) -> int:
        return self.Bt.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer hyperparameters; defaults follow the reference protocol
    (36 000 epochs, triangular cyclic learning rate in [5e-6, 1e-3])."""

    epochs: int = 36000
    lr_low: float = 5e-6
    lr_high: float = 1e-3
    cycle_length: int = 2000
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    omega: float = 0.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0 < self.lr_low <= self.lr_high:
            raise ValueError("need 0 < lr_low <= lr_high")
        if self.cycle_length < 1:
            raise ValueError("cycle_length must be >= 1")


@dataclass(frozen=True)
class TrainResult:
    """Best-loss iterate, its loss, and the per-epoch loss history."""

    params: FactorParams
    loss_history: np.ndarray
    final_loss: float
    best_epoch: int = 0

    def __post_init__(self):
        hist = np.asarray(self.loss_history, dtype=np.float64)
        hist = np.array(hist, copy=True)
        hist.setflags(write=False)
        object.__setattr__(self, "loss_history", hist)


def init_params(r: int, m: int, seed: int) -> FactorParams:
    """Initial factors: zero gyroscopic factor, all-ones input map, and
    uniform [0, 1) entries for the mass, damping and stiffness factors.

    Deterministic per seed; draw order is Mc, Dc, Kc.
    """
    if r < 1 or m < 1:
        raise ValueError("r and m must be >= 1")
    rng = np.random.default_rng(seed)
    Mc = rng.random((r, r))
    Dc = rng.random((r, r))
    Kc = rng.random((r, r))
    return FactorParams(Mc=Mc, Dc=Dc, Gc=np.zeros((r, r)), Kc=Kc, Bt=np.ones((r, m)))


def _data_arrays(data: SnapshotSet):
    return data.X, data.Xd, data.Xdd, data.U


def _check_dims(params: FactorParams, data: SnapshotSet):
    if params.r != data.n:
        raise DimensionMismatchError(
            f"params have r={params.r} but data has {data.n} state rows"
        )
    if params.m != data.m:
        raise DimensionMismatchError(
            f"params have m={params.m} but data has {data.m} input rows"
        )


def _predict_raw(Mc, Dc, Gc, Kc, Bt, Xd, Xdd, U, omega):
    P = Kc @ Kc.T
    W = Dc @ Dc.T
    if omega != 0.0:
        W = W + omega * (Gc - Gc.T)
    A = Bt @ U - (Mc @ Mc.T) @ Xdd - W @ Xd
    return P @ A, A, P


def predict_displacements(params: FactorParams, data: SnapshotSet, omega: float) -> np.ndarray:
    """Displacements predicted from the velocity/acceleration/input data.

    No matrix inversion is performed; the inverse stiffness enters as the
    factor product ``Kc Kc^T``.
    """
    _check_dims(params, data)
    Xp, _, _ = _predict_raw(
        params.Mc, params.Dc, params.Gc, params.Kc, params.Bt,
        data.Xd, data.Xdd, data.U, omega,
    )
    return Xp


def loss(params: FactorParams, data: SnapshotSet, omega: float) -> float:
    """Mean squared prediction error F = ||X - Xp||_F^2 / N."""
    _check_dims(params, data)
    R = data.X - predict_displacements(params, data, omega)
    return float(np.vdot(R, R)) / data.n_samples


def _loss_and_grad(Mc, Dc, Gc, Kc, Bt, X, Xd, Xdd, U, omega, N):
    """Loss and analytic gradients for all five factor blocks."""
    Xp, A, P = _predict_raw(Mc, Dc, Gc, Kc, Bt, Xd, Xdd, U, omega)
    R = X - Xp
    F = float(np.vdot(R, R)) / N
    c = 2.0 / N
    PR = P @ R
    S_a = PR @ Xdd.T
    S_v = PR @ Xd.T
    gMc = c * ((S_a + S_a.T) @ Mc)
    gDc = c * ((S_v + S_v.T) @ Dc)
    gGc = (c * omega) * (S_v - S_v.T) if omega != 0.0 else np.zeros_like(Gc)
    gBt = -c * (PR @ U.T)
    T = R @ A.T
    gKc = -c * ((T + T.T) @ Kc)
    return F, (gMc, gDc, gGc, gKc, gBt)


def loss_grad(params: FactorParams, data: SnapshotSet, omega: float) -> FactorParams:
    """Analytic gradient of the loss with respect to every factor block.

    With R = X - Xp and A the bracket multiplying the inverse stiffness:

    - dF/dBt = -(2/N) P R U^T
    - dF/dMc =  (2/N) (P R Xdd^T + Xdd R^T P) Mc
    - dF/dDc =  (2/N) (P R Xd^T  + Xd  R^T P) Dc
    - dF/dGc =  (2 omega/N) (P R Xd^T - Xd R^T P)
    - dF/dKc = -(2/N) (R A^T + A R^T) Kc
    """
    _check_dims(params, data)
    _, grads = _loss_and_grad(
        params.Mc, params.Dc, params.Gc, params.Kc, params.Bt,
        data.X, data.Xd, data.Xdd, data.U, omega, data.n_samples,
    )
    gMc, gDc, gGc, gKc, gBt = grads
    return FactorParams(Mc=gMc, Dc=gDc, Gc=gGc, Kc=gKc, Bt=gBt)


def cyclic_lr(epoch: int, lr_low: float, lr_high: float, cycle_length: int) -> float:
    """Triangular cyclic learning rate; ``cycle_length`` is the half-period.

    Starts at ``lr_low``, peaks at ``lr_high`` after ``cycle_length`` epochs
    and returns linearly to ``lr_low`` after another half-period.
    """
    cycle = math.floor(1 + epoch / (2 * cycle_length))
    x = abs(epoch / cycle_length - 2 * cycle + 1)
    return lr_low + (lr_high - lr_low) * max(0.0, 1.0 - x)


def _check_normalized(data: SnapshotSet):
    for name, A in (("X", data.X), ("Xd", data.Xd), ("Xdd", data.Xdd), ("U", data.U)):
        norm = np.linalg.norm(A)
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(
                f"training data must be normalized; ||{name}||_F = {norm:.6e}"
            )


def train(data: SnapshotSet, scales: Scales, cfg: TrainConfig) -> TrainResult:
    """Run full-batch Adam on the factorized inference problem.

    The data must already be normalized by ``scales`` (all four matrices at
    unit Frobenius norm).  Each epoch takes one Adam step and records the
    loss of the updated iterate; the returned parameters are the best-loss
    iterate seen (earliest epoch on ties), so the best-so-far sequence is
    non-increasing even though the cyclic schedule makes the raw loss
    oscillate.

    Raises
    ------
    NonFiniteError
        If the loss becomes NaN/Inf (reports the epoch index).
    """
    _check_normalized(data)
    X, Xd, Xdd, U = _data_arrays(data)
    N = data.n_samples
    omega = cfg.omega
    start = init_params(data.n, data.m, cfg.seed)
    params = [start.Mc.copy(), start.Dc.copy(), start.Gc.copy(),
              start.Kc.copy(), start.Bt.copy()]

    b1, b2, eps = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps
    mstate = [np.zeros_like(p) for p in params]
    vstate = [np.zeros_like(p) for p in params]
    history = np.empty(cfg.epochs)
    best_loss = math.inf
    best_epoch = -1
    best = None

    _, grads = _loss_and_grad(*params, X, Xd, Xdd, U, omega, N)
    for k in range(cfg.epochs):
        lr = cyclic_lr(k, cfg.lr_low, cfg.lr_high, cfg.cycle_length)
        b1c = 1.0 - b1 ** (k + 1)
        b2c = 1.0 - b2 ** (k + 1)
        for p, g, ms, vs in zip(params, grads, mstate, vstate):
            ms *= b1
            ms += (1.0 - b1) * g
            vs *= b2
            vs += (1.0 - b2) * (g * g)
            p -= lr * (ms / b1c) / (np.sqrt(vs / b2c) + eps)
        F, grads = _loss_and_grad(*params, X, Xd, Xdd, U, omega, N)
        if not math.isfinite(F):
            raise NonFiniteError(f"loss became non-finite at epoch {k}")
        history[k] = F
        if F < best_loss:
            best_loss = F
            best_epoch = k
            best = [p.copy() for p in params]

    result_params = FactorParams(Mc=best[0], Dc=best[1], Gc=best[2],
                                 Kc=best[3], Bt=best[4])
    return TrainResult(params=result_params, loss_history=history,
                       final_loss=best_loss, best_epoch=best_epoch)


def _sym(A):
    return (A + A.T) / 2.0


def assemble_rom(result: TrainResult, scales: Scales, basis: PodBasis,
                 omega_train: float) -> StructuredROM:
    """Rescale the trained factors into physical reduced operators.

    In normalized space the products are Mh = Mc Mc^T, Dh = Dc Dc^T,
    Gh = Gc - Gc^T, Kinv_hat = Kc Kc^T and Bh = Bt.  The physical operators
    divide by the data scales; the stiffness is the symmetric inverse of
    ``alpha_x * Kinv_hat`` computed through its eigendecomposition.

    Raises
    ------
    IllConditionedStiffnessError
        If cond(Kinv_hat) exceeds 1e12.
    """
    p = result.params
    Mh = _sym(p.Mc @ p.Mc.T)
    Dh = _sym(p.Dc @ p.Dc.T)
    Gh = p.Gc - p.Gc.T
    Kinv_hat = _sym(p.Kc @ p.Kc.T)

    lam, Q = np.linalg.eigh(Kinv_hat)
    if lam[0] <= 0.0 or lam[-1] / lam[0] > COND_LIMIT:
        cond = math.inf if lam[0] <= 0.0 else lam[-1] / lam[0]
        raise IllConditionedStiffnessError(
            f"inferred inverse stiffness has condition number {cond:.3e}"
        )
    Kr = _sym(Q @ np.diag(1.0 / (scales.alpha_x * lam)) @ Q.T)

    return StructuredROM(
        Mr=Mh / scales.alpha_a,
        Dr=Dh / scales.alpha_v,
        Gr=Gh / scales.alpha_v,
        Kr=Kr,
        Br=p.Bt / scales.alpha_u,
        basis=basis.V,
        omega_train=omega_train,
        structure_guaranteed=True,
    )


def ls_opinf_baseline(data: SnapshotSet, omega: float,
                      basis: PodBasis | None = None) -> StructuredROM:
    """Unconstrained least-squares comparator without structure guarantees.

    Fixes the mass to identity and regresses the accelerations on velocity,
    displacement and input snapshots:  Xdd ~= -E Xd - K X + B U.  The
    velocity operator is split into symmetric and skew parts (divided by
    ``omega`` when rotating) so the result slots into the same simulation
    path; ``structure_guaranteed`` is False and none of the SPD/skew
    properties are enforced.  A zero input matrix is excluded from the
    regression (B is unidentifiable then and returned as zero).

    Raises
    ------
    RankDeficientRegressorError
        If the regressor matrix loses full column rank.
    """
    X, Xd, Xdd, U = _data_arrays(data)
    r, N = X.shape
    use_input = bool(np.any(U))
    blocks = [Xd.T, X.T] + ([U.T] if use_input else [])
    regressor = np.hstack(blocks)
    sol, _, rank, _ = np.linalg.lstsq(regressor, Xdd.T, rcond=None)
    if rank < regressor.shape[1]:
        raise RankDeficientRegressorError(
            f"regressor rank {rank} < {regressor.shape[1]} columns"
        )
    E_ls = -sol[:r].T
    K_ls = -sol[r:2 * r].T
    B_ls = sol[2 * r:].T if use_input else np.zeros((r, data.m))

    if omega != 0.0:
        Dr = _sym(E_ls)
        Gr = (E_ls - E_ls.T) / (2.0 * omega)
    else:
        Dr, Gr = E_ls, np.zeros((r, r))
    if basis is None:
        basis = PodBasis(V=np.eye(r), singular_values=np.ones(r), r=r)
    return StructuredROM(
        Mr=np.eye(r), Dr=Dr, Gr=Gr, Kr=K_ls, Br=B_ls,
        basis=basis.V, omega_train=omega, structure_guaranteed=False,
    )

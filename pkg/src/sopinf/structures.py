"""Core domain types for full-order and reduced-order second-order systems.

A full-order system is ``M x'' + (D + omega*G) x' + K x = B u`` with symmetric
positive definite mass and stiffness, positive semi-definite damping and a
skew-symmetric gyroscopic matrix scaling with the spin speed.  The same
structural requirements apply to reduced operators.  All types are immutable
after construction (their arrays are marked read-only) and safe to share
across threads.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import as_matrix, as_vector, check_square, frozen
from .errors import DimensionMismatchError, NonFiniteError

__all__ = [
    "SecondOrderSystem",
    "SnapshotSet",
    "StructuredROM",
    "CheckRecord",
    "StructureReport",
    "check_structure",
    "split_velocity_operator",
]

#: Relative tolerance on symmetry defects ||A - A^T||_F / ||A||_F.
SYM_RTOL = 1e-12
#: Relative tolerance on the skew defect ||G + G^T||_F / ||G||_F.
SKEW_RTOL = 1e-12
#: Relative lower bound for damping eigenvalues: min eig D >= -PSD_RTOL*||D||_F.
PSD_RTOL = 1e-10
#: Absolute tolerance on basis orthonormality ||V^T V - I||_F.
ORTHO_TOL = 1e-12


@dataclass(frozen=True)
class SecondOrderSystem:
    """Full-order operators of a linear second-order mechanical system.

    Parameters
    ----------
    M, D, K : (n, n) ndarray
        Mass, viscous damping and stiffness matrices.
    B : (n, m) ndarray
        Input map.
    G : (n, n) ndarray, optional
        Gyroscopic matrix per unit spin speed; zero when omitted.
    has_gyro : bool, optional
        Whether the system carries a gyroscopic term.  Inferred from ``G``
        when omitted.  ``G`` must be identically zero when False.
    """

    M: np.ndarray
    D: np.ndarray
    K: np.ndarray
    B: np.ndarray
    G: np.ndarray | None = None
    has_gyro: bool | None = None

    def __post_init__(self):
        M = frozen(as_matrix(self.M, "M"))
        check_square(M, "M")
        n = M.shape[0]
        D = frozen(as_matrix(self.D, "D"))
        K = frozen(as_matrix(self.K, "K"))
        B = frozen(as_matrix(self.B, "B"))
        G = np.zeros((n, n)) if self.G is None else as_matrix(self.G, "G")
        G = frozen(G)
        for name, A in (("D", D), ("K", K), ("G", G)):
            if A.shape != (n, n):
                raise DimensionMismatchError(
                    f"{name} must have shape {(n, n)}, got {A.shape}"
                )
        if B.shape[0] != n:
            raise DimensionMismatchError(f"B must have {n} rows, got {B.shape[0]}")
        has_gyro = bool(np.any(G)) if self.has_gyro is None else bool(self.has_gyro)
        if not has_gyro and np.any(G):
            raise ValueError("G must be identically zero when has_gyro is False")
        for attr, val in (
            ("M", M), ("D", D), ("K", K), ("B", B), ("G", G), ("has_gyro", has_gyro)
        ):
            object.__setattr__(self, attr, val)

    @property
    def n(self) -> int:
        return self.M.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def e_matrix(self, omega: float = 0.0) -> np.ndarray:
        """Velocity-coupling operator E = D + omega*G seen by the integrator."""
        return self.D + omega * self.G


def split_velocity_operator(E: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split E into its symmetric (damping) and skew (gyroscopic) parts."""
    E = as_matrix(E, "E")
    check_square(E, "E")
    sym = (E + E.T) / 2.0
    return sym, E - sym


@dataclass(frozen=True)
class SnapshotSet:
    """Time grid plus input, displacement, velocity and acceleration snapshots.

    Column ``k`` of each matrix corresponds to ``times[k]``.  The grid must be
    strictly increasing with a constant step; the uniformity check allows the
    deviation floating-point accumulation puts on ``dt * arange(N)`` grids.
    """

    times: np.ndarray
    U: np.ndarray
    X: np.ndarray
    Xd: np.ndarray
    Xdd: np.ndarray

    def __post_init__(self):
        times = frozen(as_vector(self.times, "times"))
        U = frozen(as_matrix(self.U, "U"))
        X = frozen(as_matrix(self.X, "X"))
        Xd = frozen(as_matrix(self.Xd, "Xd"))
        Xdd = frozen(as_matrix(self.Xdd, "Xdd"))
        N = times.shape[0]
        if N < 2:
            raise ValueError("need at least two time points")
        for name, A in (("U", U), ("X", X), ("Xd", Xd), ("Xdd", Xdd)):
            if A.shape[1] != N:
                raise DimensionMismatchError(
                    f"{name} must have {N} columns, got {A.shape[1]}"
                )
        if X.shape != Xd.shape or X.shape != Xdd.shape:
            raise DimensionMismatchError("X, Xd, Xdd must share one shape")
        steps = np.diff(times)
        if np.any(steps <= 0):
            raise ValueError("times must be strictly increasing")
        dt = float(np.mean(steps))
        # 1e-12 relative, floored by the representable resolution of the grid.
        tol = max(1e-12 * dt, 8 * np.finfo(float).eps * float(np.abs(times).max()))
        if float(np.max(np.abs(steps - dt))) > tol:
            raise ValueError("times must have a constant step (within 1e-12 relative)")
        for attr, val in (
            ("times", times), ("U", U), ("X", X), ("Xd", Xd), ("Xdd", Xdd)
        ):
            object.__setattr__(self, attr, val)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.U.shape[0]

    @property
    def n_samples(self) -> int:
        return self.times.shape[0]

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


@dataclass(frozen=True)
class StructuredROM:
    """Assembled reduced operators plus the basis used to lift trajectories.

    ``structure_guaranteed`` is True for operators produced by the factorized
    parametrization or by Galerkin projection; the unconstrained least-squares
    baseline sets it to False.
    """

    Mr: np.ndarray
    Dr: np.ndarray
    Gr: np.ndarray
    Kr: np.ndarray
    Br: np.ndarray
    basis: np.ndarray
    omega_train: float = 0.0
    structure_guaranteed: bool = True

    def __post_init__(self):
        Mr = frozen(as_matrix(self.Mr, "Mr"))
        check_square(Mr, "Mr")
        r = Mr.shape[0]
        Dr = frozen(as_matrix(self.Dr, "Dr"))
        Gr = frozen(as_matrix(self.Gr, "Gr"))
        Kr = frozen(as_matrix(self.Kr, "Kr"))
        Br = frozen(as_matrix(self.Br, "Br"))
        basis = frozen(as_matrix(self.basis, "basis"))
        for name, A in (("Dr", Dr), ("Gr", Gr), ("Kr", Kr)):
            if A.shape != (r, r):
                raise DimensionMismatchError(
                    f"{name} must have shape {(r, r)}, got {A.shape}"
                )
        if Br.shape[0] != r:
            raise DimensionMismatchError(f"Br must have {r} rows, got {Br.shape[0]}")
        if basis.shape[1] != r:
            raise DimensionMismatchError(
                f"basis must have {r} columns, got {basis.shape[1]}"
            )
        for attr, val in (
            ("Mr", Mr), ("Dr", Dr), ("Gr", Gr), ("Kr", Kr), ("Br", Br),
            ("basis", basis), ("omega_train", float(self.omega_train)),
            ("structure_guaranteed", bool(self.structure_guaranteed)),
        ):
            object.__setattr__(self, attr, val)

    @property
    def r(self) -> int:
        return self.Mr.shape[0]

    @property
    def m(self) -> int:
        return self.Br.shape[1]

    def system(self, has_gyro: bool | None = None) -> SecondOrderSystem:
        """View the reduced operators as a SecondOrderSystem of dimension r."""
        if has_gyro is None:
            has_gyro = bool(np.any(self.Gr))
        return SecondOrderSystem(
            M=self.Mr, D=self.Dr, K=self.Kr, B=self.Br, G=self.Gr, has_gyro=has_gyro
        )


@dataclass(frozen=True)
class CheckRecord:
    """One measured invariant: ``value`` compared against ``threshold``."""

    name: str
    passed: bool
    value: float
    threshold: float

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        return f"{self.name}: {status} (value={self.value:.3e}, threshold={self.threshold:.3e})"


@dataclass(frozen=True)
class StructureReport:
    """Per-invariant pass/fail results with the measured margins."""

    checks: tuple = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> CheckRecord:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __str__(self):
        return "\n".join(str(c) for c in self.checks)


def _sym_defect(A):
    return float(np.linalg.norm(A - A.T))


def _extreme_eigs(A):
    """Extreme eigenvalues of the symmetric part (A + A^T)/2."""
    w = np.linalg.eigvalsh((A + A.T) / 2.0)
    return float(w[0]), float(w[-1])


def check_structure(sys) -> StructureReport:
    """Measure the structural invariants of a system or reduced model.

    Symmetry is tested on the matrices as stored (not after symmetrization)
    so construction bugs surface.  Eigenvalues are computed on the symmetric
    part via a dense symmetric eigensolve.

    Parameters
    ----------
    sys : SecondOrderSystem or StructuredROM

    Returns
    -------
    StructureReport
        Records for M/K (symmetry + positive definiteness), D (symmetry +
        positive semi-definiteness), G (skewness) and, for reduced models,
        basis orthonormality.

    Raises
    ------
    NonFiniteError
        If any operator contains NaN or Inf.
    """
    if isinstance(sys, StructuredROM):
        mats = {"M": sys.Mr, "D": sys.Dr, "G": sys.Gr, "K": sys.Kr, "B": sys.Br}
        basis = sys.basis
    elif isinstance(sys, SecondOrderSystem):
        mats = {"M": sys.M, "D": sys.D, "G": sys.G, "K": sys.K, "B": sys.B}
        basis = None
    else:
        raise TypeError(f"cannot check structure of {type(sys).__name__}")

    for name, A in mats.items():
        if not np.all(np.isfinite(A)):
            raise NonFiniteError(f"{name} contains NaN or Inf entries")

    checks = []
    for name in ("M", "K"):
        A = mats[name]
        defect = _sym_defect(A)
        tol = SYM_RTOL * float(np.linalg.norm(A))
        checks.append(CheckRecord(f"{name}_symmetry", defect <= tol, defect, tol))
        lo, hi = _extreme_eigs(A)
        checks.append(CheckRecord(f"{name}_min_eig", lo > 0.0, lo, 0.0))
        checks.append(CheckRecord(f"{name}_max_eig", True, hi, np.inf))

    D = mats["D"]
    defect = _sym_defect(D)
    tol = SYM_RTOL * float(np.linalg.norm(D))
    checks.append(CheckRecord("D_symmetry", defect <= tol, defect, tol))
    lo, hi = _extreme_eigs(D)
    bound = -PSD_RTOL * float(np.linalg.norm(D))
    checks.append(CheckRecord("D_min_eig", lo >= bound, lo, bound))
    checks.append(CheckRecord("D_max_eig", True, hi, np.inf))

    G = mats["G"]
    skew = float(np.linalg.norm(G + G.T))
    tol = SKEW_RTOL * float(np.linalg.norm(G))
    checks.append(CheckRecord("G_skewness", skew <= tol, skew, tol))

    if basis is not None:
        r = basis.shape[1]
        defect = float(np.linalg.norm(basis.T @ basis - np.eye(r)))
        checks.append(CheckRecord("basis_orthonormality", defect <= ORTHO_TOL,
                                  defect, ORTHO_TOL))

    return StructureReport(checks=tuple(checks))

"""Full-order model generators: bending beams, a gyroscopic rotor, and
synthetic random structured systems.

The beam is the classical Euler-Bernoulli element with two DOFs per node
(transverse deflection w and rotation theta).  Element stiffness and
consistent mass, for element length L, flexural rigidity EI and mass per
length rho*A::

    k_e = EI/L^3 * [[ 12,   6L,  -12,   6L ],          m_e = rho*A*L/420 *
                    [ 6L, 4L^2,  -6L, 2L^2 ],              [[ 156,  22L,   54, -13L ],
                    [-12,  -6L,   12,  -6L ],               [ 22L, 4L^2,  13L, -3L^2],
                    [ 6L, 2L^2,  -6L, 4L^2 ]]               [  54,  13L,  156, -22L ],
                                                            [-13L, -3L^2, -22L, 4L^2]]

The rotor is a lumped-parameter model: four DOFs per node ordered
[x1, x2, theta1, theta2], point mass and transverse/polar inertia per node,
shaft segments of unit length modelled as bending elements of rigidity
``shaft_bending_stiffness`` in both transverse planes, isotropic spring and
damper bearings acting on translations, and the polar-inertia gyroscopic
coupling between the two tilt DOFs of every node.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import SingularAssemblyError
from .structures import SecondOrderSystem

__all__ = [
    "Cantilever",
    "Overhanging",
    "BeamSpec",
    "RotorSpec",
    "build_beam",
    "build_rotor",
    "build_synthetic",
    "undamped_frequencies",
]


@dataclass(frozen=True)
class Cantilever:
    """Clamped at node 0 (deflection and rotation fixed)."""


@dataclass(frozen=True)
class Overhanging:
    """Deflection pinned at two interior nodes, both ends free."""

    left_support_node: int
    right_support_node: int


@dataclass(frozen=True)
class BeamSpec:
    """Euler-Bernoulli beam definition.

    Defaults are steel (E = 2.1e11 Pa, rho = 7850 kg/m^3); geometry defaults
    give a slender desk-scale beam.  ``load_nodes`` share a single input
    channel acting on the deflection DOF.
    """

    n_elements: int = 60
    length: float = 5.0
    youngs_modulus: float = 2.1e11
    density: float = 7850.0
    cross_section_area: float = 1.5e-3
    second_moment: float = 1.125e-7
    support: Cantilever | Overhanging = field(default_factory=Cantilever)
    rayleigh_alpha: float = 0.0
    rayleigh_beta: float = 0.0
    load_nodes: tuple = (60,)

    def __post_init__(self):
        if self.n_elements < 2:
            raise ValueError("n_elements must be >= 2")
        for name in ("length", "youngs_modulus", "density",
                     "cross_section_area", "second_moment"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        n_nodes = self.n_elements + 1
        if isinstance(self.support, Overhanging):
            left, right = self.support.left_support_node, self.support.right_support_node
            if not (0 <= left < right <= self.n_elements):
                raise ValueError("support nodes must be distinct and within node range")
        for node in self.load_nodes:
            if not 0 <= node < n_nodes:
                raise ValueError(f"load node {node} outside node range")
        object.__setattr__(self, "load_nodes", tuple(int(k) for k in self.load_nodes))


@dataclass(frozen=True)
class RotorSpec:
    """Lumped-parameter rotor definition; node spacing is fixed at 1 m.

    Defaults give a stiff shaft carrying thin disks (polar inertia twice the
    transverse one) on soft, well-damped end bearings: the bounce whirl sits
    near 2.7 Hz while shaft bending and gyro-shifted tilt whirls stay out of
    the low-frequency band, which keeps chirp responses low-rank yet clearly
    spin-speed dependent.
    """

    n_nodes: int = 7
    node_mass: float = 10.0
    node_transverse_inertia: float = 2.5
    node_polar_inertia: float = 5.0
    shaft_bending_stiffness: float = 3.0e6
    bearing_nodes: tuple = (0, 6)
    bearing_stiffness: float = 1.0e4
    bearing_damping: float = 300.0
    forced_node: int = 3

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be >= 1")
        for name in ("node_mass", "node_transverse_inertia", "node_polar_inertia"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for node in self.bearing_nodes:
            if not 0 <= node < self.n_nodes:
                raise ValueError(f"bearing node {node} outside node range")
        if not 0 <= self.forced_node < self.n_nodes:
            raise ValueError("forced_node outside node range")
        object.__setattr__(
            self, "bearing_nodes", tuple(int(k) for k in self.bearing_nodes)
        )


def _beam_element_matrices(EI, rhoA, L):
    k = EI / L**3 * np.array([
        [12.0, 6 * L, -12.0, 6 * L],
        [6 * L, 4 * L**2, -6 * L, 2 * L**2],
        [-12.0, -6 * L, 12.0, -6 * L],
        [6 * L, 2 * L**2, -6 * L, 4 * L**2],
    ])
    m = rhoA * L / 420.0 * np.array([
        [156.0, 22 * L, 54.0, -13 * L],
        [22 * L, 4 * L**2, 13 * L, -3 * L**2],
        [54.0, 13 * L, 156.0, -22 * L],
        [-13 * L, -3 * L**2, -22 * L, 4 * L**2],
    ])
    return k, m


def _check_spd_stiffness(K):
    w = np.linalg.eigvalsh((K + K.T) / 2.0)
    if w[0] <= 0:
        raise SingularAssemblyError(
            f"stiffness has rigid-body modes (min eig {w[0]:.3e})"
        )


def build_beam(spec: BeamSpec) -> SecondOrderSystem:
    """Assemble a supported Euler-Bernoulli beam as a second-order system.

    Supported DOFs are eliminated by row/column deletion; damping is
    Rayleigh, D = alpha*M + beta*K.  The single input column carries a unit
    entry at every load node's deflection DOF.

    Raises
    ------
    SingularAssemblyError
        If the boundary conditions leave rigid-body modes.
    """
    n_nodes = spec.n_elements + 1
    ndof = 2 * n_nodes
    L = spec.length / spec.n_elements
    EI = spec.youngs_modulus * spec.second_moment
    rhoA = spec.density * spec.cross_section_area
    k_e, m_e = _beam_element_matrices(EI, rhoA, L)

    K = np.zeros((ndof, ndof))
    M = np.zeros((ndof, ndof))
    for e in range(spec.n_elements):
        sl = slice(2 * e, 2 * e + 4)
        K[sl, sl] += k_e
        M[sl, sl] += m_e

    if isinstance(spec.support, Cantilever):
        fixed = [0, 1]
    else:
        fixed = [2 * spec.support.left_support_node,
                 2 * spec.support.right_support_node]
    keep = np.array([i for i in range(ndof) if i not in set(fixed)])
    K = K[np.ix_(keep, keep)]
    M = M[np.ix_(keep, keep)]
    _check_spd_stiffness(K)

    D = spec.rayleigh_alpha * M + spec.rayleigh_beta * K
    col = {dof: i for i, dof in enumerate(keep)}
    B = np.zeros((keep.size, 1))
    for node in spec.load_nodes:
        dof = 2 * node
        if dof not in col:
            raise ValueError(f"load node {node} coincides with a fixed support")
        B[col[dof], 0] = 1.0
    return SecondOrderSystem(M=M, D=D, K=K, B=B, has_gyro=False)


def build_rotor(spec: RotorSpec) -> SecondOrderSystem:
    """Assemble the lumped gyroscopic rotor as a second-order system.

    DOF order per node is [x1, x2, theta1, theta2], so n = 4*n_nodes.  The
    bending plane for x1 pairs with theta2 (positive slope); the plane for x2
    pairs with theta1 through a sign flip, the usual right-handed convention.
    G places +polar_inertia at (theta1, theta2) and the negative at
    (theta2, theta1) of every node, so it is skew by construction.
    """
    n = 4 * spec.n_nodes
    M = np.zeros((n, n))
    D = np.zeros((n, n))
    G = np.zeros((n, n))
    K = np.zeros((n, n))

    for i in range(spec.n_nodes):
        b = 4 * i
        M[b, b] = spec.node_mass
        M[b + 1, b + 1] = spec.node_mass
        M[b + 2, b + 2] = spec.node_transverse_inertia
        M[b + 3, b + 3] = spec.node_transverse_inertia
        G[b + 2, b + 3] += spec.node_polar_inertia
        G[b + 3, b + 2] -= spec.node_polar_inertia

    k_e, _ = _beam_element_matrices(spec.shaft_bending_stiffness, 1.0, 1.0)
    for i in range(spec.n_nodes - 1):
        a, b = 4 * i, 4 * (i + 1)
        # plane 1: (x1_i, th2_i, x1_j, th2_j); plane 2 flips the slope sign.
        for woff, toff, s in ((0, 3, 1.0), (1, 2, -1.0)):
            dofs = [a + woff, a + toff, b + woff, b + toff]
            signs = np.array([1.0, s, 1.0, s])
            K[np.ix_(dofs, dofs)] += k_e * np.outer(signs, signs)

    for node in spec.bearing_nodes:
        b = 4 * node
        K[b, b] += spec.bearing_stiffness
        K[b + 1, b + 1] += spec.bearing_stiffness
        D[b, b] += spec.bearing_damping
        D[b + 1, b + 1] += spec.bearing_damping

    if spec.n_nodes > 1:
        _check_spd_stiffness(K)
    elif not spec.bearing_nodes:
        raise SingularAssemblyError("single-node rotor needs a bearing")
    else:
        # translations held by the bearing; tilt DOFs carry no stiffness on a
        # single node, so skip the SPD gate (K is only PSD here)
        pass

    B = np.zeros((n, 2))
    B[4 * spec.forced_node, 0] = 1.0
    B[4 * spec.forced_node + 1, 1] = 1.0
    return SecondOrderSystem(M=M, D=D, K=K, B=B, G=G, has_gyro=True)


def build_synthetic(n: int, m: int, seed: int) -> SecondOrderSystem:
    """Random structured system, deterministic for a fixed seed.

    M = F F^T + n I and K = H H^T + n I with F, H uniform on [0, 1), so both
    are comfortably positive definite; D = 0.01 C C^T; G = S - S^T; B uniform
    on [-1, 1).  Draw order is F, H, C, S, B.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = np.random.default_rng(seed)
    F = rng.random((n, n))
    H = rng.random((n, n))
    C = rng.random((n, n))
    S = rng.random((n, n))
    M = F @ F.T + n * np.eye(n)
    K = H @ H.T + n * np.eye(n)
    D = 0.01 * (C @ C.T)
    G = S - S.T
    B = rng.uniform(-1.0, 1.0, size=(n, m))
    return SecondOrderSystem(M=M, D=D, K=K, B=B, G=G, has_gyro=bool(np.any(G)))


def undamped_frequencies(sys: SecondOrderSystem) -> np.ndarray:
    """Natural frequencies (Hz) of the undamped non-rotating system."""
    w = scipy.linalg.eigh(sys.K, sys.M, eigvals_only=True)
    return np.sqrt(np.maximum(w, 0.0)) / (2.0 * np.pi)

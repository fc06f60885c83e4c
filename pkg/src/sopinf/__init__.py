"""sopinf: structure-preserving reduced-order inference for second-order
mechanical systems (bending and rotating), with the full-order model
generators, excitation signals and time integration needed to exercise it.
"""

from .errors import (
    ConfigError,
    DimensionMismatchError,
    IllConditionedStiffnessError,
    MissingArtifactError,
    NonFiniteError,
    RankDeficientError,
    RankDeficientRegressorError,
    SingularAssemblyError,
    SingularEffectiveMatrixError,
    SopinfError,
    ZeroReferenceError,
    ZeroSnapshotError,
)
from .structures import (
    SecondOrderSystem,
    SnapshotSet,
    StructuredROM,
    StructureReport,
    check_structure,
)
from .fomlab import (
    BeamSpec,
    Cantilever,
    Overhanging,
    RotorSpec,
    build_beam,
    build_rotor,
    build_synthetic,
    undamped_frequencies,
)
from .excite import ChirpSpec, HarmonicSpec, chirp_value, harmonic_value, sample_input
from .timestep import NewmarkConfig, integrate
from .podspace import (
    PodBasis,
    PodReducer,
    Scales,
    compute_scales,
    identity_basis,
    normalize,
    pod_basis,
    project,
    select_order,
)
from .pinfer import (
    FactorParams,
    TrainConfig,
    TrainResult,
    assemble_rom,
    cyclic_lr,
    init_params,
    loss,
    loss_grad,
    ls_opinf_baseline,
    predict_displacements,
    train,
)
from .evalkit import (
    SweepResult,
    frequency_sweep,
    intrusive_galerkin,
    relative_error,
    simulate_rom,
    speed_sweep,
)
from .estimator import StructuredOpInf

__version__ = "0.1.0"

"""Exception hierarchy shared by all sopinf modules."""


class SopinfError(Exception):
    """Base class for all library-specific failures."""


class NonFiniteError(SopinfError):
    """A matrix or trajectory contains NaN or Inf entries."""


class DimensionMismatchError(SopinfError):
    """Operands have incompatible shapes."""


class SingularAssemblyError(SopinfError):
    """Assembled stiffness matrix has rigid-body modes (min eig <= 0)."""


class SingularEffectiveMatrixError(SopinfError):
    """The Newmark effective matrix could not be factorized."""


class RankDeficientError(SopinfError):
    """Requested POD order exceeds the numerical rank of the data."""


class ZeroSnapshotError(SopinfError):
    """A snapshot matrix is identically zero, so no scale can be derived."""


class ZeroReferenceError(SopinfError):
    """The reference trajectory is identically zero; relative error undefined."""


class RankDeficientRegressorError(SopinfError):
    """The least-squares regressor matrix does not have full column rank."""


class IllConditionedStiffnessError(SopinfError):
    """The inferred inverse stiffness is too ill-conditioned to invert."""


class ConfigError(SopinfError):
    """A pipeline configuration file is invalid; message names the field."""


class MissingArtifactError(SopinfError):
    """A pipeline stage requires an artifact that is not on disk."""

"""Exception hierarchy. Each family maps to a CLI exit code."""


class PBError(Exception):
    exit_code = 1


class ParseError(PBError):
    exit_code = 2


class ConfigError(PBError):
    exit_code = 2


class ModelError(PBError):
    exit_code = 3


class GeometryError(PBError):
    exit_code = 3


class TopologyError(GeometryError):
    pass


class RegistrationError(GeometryError):
    pass


class DimensionError(GeometryError):
    pass


class FormatError(GeometryError):
    pass


class DegeneracyError(PBError):
    """Duplicate interpolation nodes."""
    exit_code = 3


class ConditioningError(GeometryError):
    """Local fictitious-value system is (near) singular."""

    def __init__(self, message, dump=None):
        super().__init__(message)
        self.dump = dump


class AssemblyError(PBError):
    exit_code = 3


class SolverError(PBError):
    exit_code = 4


class NonConvergenceError(SolverError):
    def __init__(self, message, x=None, residuals=None):
        super().__init__(message)
        self.x = x
        self.residuals = residuals or []


class ExtensionError(PBError):
    exit_code = 5


class EnergyError(PBError):
    exit_code = 5


class SingularityError(ModelError):
    """Coulomb potential evaluated at an atom center."""


class StencilError(PBError):
    exit_code = 3

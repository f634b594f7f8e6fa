"""Exception hierarchy shared by all modules."""


class HelfrichFlowError(Exception):
    """Base class for every error raised by this package."""


class MeshError(HelfrichFlowError):
    pass


class NonManifold(MeshError):
    """An edge is not shared by exactly two consistently oriented triangles."""


class Disconnected(MeshError):
    pass


class DegenerateTriangle(MeshError):
    pass


class MeshDegeneracy(MeshError):
    """The mesh degenerated during a flow step."""


class DegenerateConstraint(HelfrichFlowError):
    """Area and volume gradients are (numerically) parallel: the surface is CMC."""


class DtUnderflow(HelfrichFlowError):
    """Repeated step rejections pushed the time step below ``dt_min``."""


class InvalidParams(HelfrichFlowError, ValueError):
    pass


class TargetSigmaUnreachable(HelfrichFlowError, ValueError):
    pass


class AxisTouch(HelfrichFlowError):
    """A profile curve reached the axis of revolution."""


class NoGridStructure(HelfrichFlowError):
    pass


class SigmaOutOfRange(HelfrichFlowError):
    pass


class PointOnSurfaceUnresolved(HelfrichFlowError):
    pass


class OriginOnSurface(HelfrichFlowError):
    pass


class ConfigError(HelfrichFlowError, ValueError):
    pass

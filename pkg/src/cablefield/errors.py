"""Exception hierarchy shared by all cablefield modules."""


class CableFieldError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(CableFieldError):
    """Malformed or inconsistent scenario configuration."""


class GeometryError(CableFieldError):
    """Degenerate curve data or failed collar-coordinate inversion."""


class MaterialsError(CableFieldError):
    """Material tensors violate positivity/boundedness requirements."""


class GridError(CableFieldError):
    """Field grid too coarse or inconsistent with the geometry."""


class CouplingError(CableFieldError):
    """Surface coupling operators cannot be assembled as requested."""


class AssemblyError(CableFieldError):
    """Global operator assembly violated a structural identity."""


class CertificateError(CableFieldError):
    """Boundary-condition matrices fail a certification prerequisite."""


class DomainError(CableFieldError):
    """State/input pair is incompatible with the boundary constraints."""


class SolverError(CableFieldError):
    """Linear solver failed to meet its residual contract."""

"""Numerical laboratory for scalar-curvature asymptotics on rotationally
symmetric 3-manifolds ``dr^2 + phi(r)^2 g_S2`` with a pole."""

__version__ = "0.1.0"

from .dsl import parse_profile, unparse  # noqa: E402
from .errors import (  # noqa: E402
    DomainError,
    DualPathError,
    IntegrationError,
    NonConstantExponentError,
    ParseError,
    ProfileError,
    QuadratureError,
    RootBracketError,
    UnknownIdentifierError,
    WarplabError,
)
from .geometry import WarpedManifold, point_curvatures  # noqa: E402
from .jet import Jet2, eval_jet2  # noqa: E402
from .profile import RadialProfile, builtin_profile, builtin_suite, profile_from_spec  # noqa: E402

__all__ = [
    "__version__",
    "parse_profile", "unparse", "eval_jet2", "Jet2",
    "RadialProfile", "builtin_profile", "builtin_suite", "profile_from_spec",
    "WarpedManifold", "point_curvatures",
    "WarplabError", "ParseError", "UnknownIdentifierError", "NonConstantExponentError",
    "DomainError", "ProfileError", "QuadratureError", "DualPathError",
    "RootBracketError", "IntegrationError",
]

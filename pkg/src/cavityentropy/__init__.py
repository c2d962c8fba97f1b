"""Resonance modes of 2D dielectric microcavities and entropy-based mesh resolution.

The package is organised in layers:

``special``
    Cylinder functions (Bessel J, Hankel H1 and derivatives) with domain guards.
``geometry``
    Area-preserving ellipse family, interior lattice meshes, boundary nodes.
``disk`` / ``bem`` / ``sweep``
    Analytic circular-disk resonances, a Nystrom boundary-integral solver for
    the elliptic cavity and parameter continuation along the deformation.
``entropy`` / ``quantum``
    Shannon entropy of mode patterns, entropy-difference saturation,
    chi-square distance, knee detection, quantum-number identifiability and
    the ``N_O = c (nkR)^2`` scaling fit.
``pipeline``
    Batch orchestration, caching and the ``cavityentropy`` command line tool.
"""

from .errors import (
    CacheError,
    CavityEntropyError,
    CollisionError,
    ConfigError,
    DegenerateFieldError,
    DiscretizationError,
    DomainError,
    InvariantViolationError,
    ModeIdentificationError,
    NoResonanceError,
    NotResolvedError,
    SingularityError,
    SolverError,
)
from .geometry import (
    BoundaryDiscretization,
    EllipseSpec,
    InteriorMesh,
    Polarization,
    boundary_nodes,
    ellipse_from_alpha,
    interior_mesh,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryDiscretization",
    "CacheError",
    "CavityEntropyError",
    "CollisionError",
    "ConfigError",
    "DegenerateFieldError",
    "DiscretizationError",
    "DomainError",
    "EllipseSpec",
    "InteriorMesh",
    "InvariantViolationError",
    "ModeIdentificationError",
    "NoResonanceError",
    "NotResolvedError",
    "Polarization",
    "SingularityError",
    "SolverError",
    "boundary_nodes",
    "ellipse_from_alpha",
    "interior_mesh",
    "__version__",
]

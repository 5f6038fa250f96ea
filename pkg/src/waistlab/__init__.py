"""Numerical verification suite for waist-type lower bounds.

Monte Carlo estimators, exact combinatorial constructions, and
certificate checks for the volumes of level sets, neighborhoods, and
slices of maps out of spheres, cubes, tori, and convex bodies.
"""

from .errors import DomainError, GeneralPositionError, SamplingError, UsageError
from .reports import Certificate, EstimateReport
from .spaces import SpaceDescriptor, ball_volume, sphere_volume

__version__ = "0.1.0"

__all__ = [
    "Certificate",
    "DomainError",
    "EstimateReport",
    "GeneralPositionError",
    "SamplingError",
    "SpaceDescriptor",
    "UsageError",
    "ball_volume",
    "sphere_volume",
    "__version__",
]

"""tmcurv: closed-form bundle-metric geometry with an independent oracle.

The package evaluates the connection, curvature blocks, Ricci operator,
sectional curvatures and rough Laplacian of the metrics induced on a tangent
bundle by isotropic compatible structures, and verifies every formula
numerically against a coordinate-based computation built on exact truncated
Taylor (jet) differentiation.
"""

__version__ = "0.1.0"

from .base_geom import ChartMetric
from .core import IsotropicParams, LiftVector, ScenarioGeometry, TangentPoint

__all__ = [
    "ChartMetric",
    "IsotropicParams",
    "LiftVector",
    "ScenarioGeometry",
    "TangentPoint",
    "__version__",
]

"""skewevt: a simulation laboratory for extreme value laws of skew products.

Iterates skew-product dynamical systems (circle extensions of expanding and
intermittent interval maps, an intermittent skew product with a curve of
neutral points, and a quadratic skew product), measures block maxima of the
observable -log(distance to a target point), compares the resulting law with
its Type I (Gumbel) limit, and estimates the two sufficient hypotheses behind
that limit: decay of the rapidly-returning-set measure and polynomial decay
of correlations.
"""

__version__ = "0.1.0"

from .maps import (  # noqa: F401
    MODULUS,
    AlphaProfile,
    CocycleSpec,
    ProductGeometry,
    ProductPoint,
    Slot,
    SystemDescriptor,
    alpha_profile,
    circle_extension,
    gouezel,
    linear_expanding,
    lsv,
    make_point,
    piecewise_c2,
    point_values,
    product_metric,
    step,
    viana,
)
from .orbit import Ensemble, EnsembleState, OrbitConfig, iterate, sample_invariant  # noqa: F401

"""2D power diagrams and the generalized Lloyd algorithm.

Construct Laguerre (power) diagrams over convex domains, evaluate
quantization / optimal-location energies with concave per-cell costs, run
the weight-updating Lloyd iteration with empty-cell elimination, and compute
the full first- and second-order calculus of the energy.
"""

from .energy import (
    affine_cost,
    cost_from_spec,
    distortion,
    energy,
    entropy_cost,
    helper_H,
    rate_cost,
    sqrt_cost,
    zero_cost,
)
from .errors import PowerLloydError
from .geometry import (
    Domain,
    GeneratorSet,
    PowerDiagram,
    build_power_diagram,
    locate,
    validate_domain,
    voronoi,
)
from .lloyd import (
    LloydConfig,
    LloydTrace,
    convergence_rate,
    evaluate_state,
    lloyd_maps,
    multistart,
    random_init,
    run,
    step,
)
from .measures import (
    AnalyticDensity,
    ConstantDensity,
    RasterDensity,
    edge_moments,
    load_raster,
    polygon_moments,
    save_raster,
    total_mass,
)

__version__ = "0.1.0"

__all__ = [
    "Domain",
    "GeneratorSet",
    "PowerDiagram",
    "build_power_diagram",
    "voronoi",
    "locate",
    "validate_domain",
    "ConstantDensity",
    "AnalyticDensity",
    "RasterDensity",
    "polygon_moments",
    "edge_moments",
    "total_mass",
    "load_raster",
    "save_raster",
    "energy",
    "distortion",
    "helper_H",
    "sqrt_cost",
    "entropy_cost",
    "affine_cost",
    "rate_cost",
    "zero_cost",
    "cost_from_spec",
    "LloydConfig",
    "LloydTrace",
    "evaluate_state",
    "lloyd_maps",
    "step",
    "run",
    "multistart",
    "random_init",
    "convergence_rate",
    "PowerLloydError",
    "__version__",
]

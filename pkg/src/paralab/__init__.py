"""paralab: numerical laboratory for semigroup paraproducts and
paralinearization on discretized sub-Riemannian spaces."""

__version__ = "0.1.0"

from .scene import Scene, build_scene, geometry_report, maximal_function
from .speccalc import (MultiplierFamily, QuadratureRule, SpectralData,
                       apply_multiplier, eigendecompose, eval_multiplier,
                       make_quadrature, reconstruct, square_function)
from .sobolev import SobolevParams, lp_norm, s_functional, sobolev_norm
from .paraproduct import (ParaproductConfig, decompose_product, pi,
                          pi_twisted, rest)
from .paralin import (Nonlinearity, VectorNonlinearity, compute_terms,
                      make_nonlinearity, paralinearize, smoothing_study,
                      vector_paralinearize)
from .propagate import (ManufacturedProblem, directional_regularity,
                        gamma_field, manufacture, refinement_study,
                        twisted_consistency)

__all__ = [
    "Scene", "build_scene", "geometry_report", "maximal_function",
    "MultiplierFamily", "QuadratureRule", "SpectralData", "apply_multiplier",
    "eigendecompose", "eval_multiplier", "make_quadrature", "reconstruct",
    "square_function", "SobolevParams", "lp_norm", "s_functional",
    "sobolev_norm", "ParaproductConfig", "decompose_product", "pi",
    "pi_twisted", "rest", "Nonlinearity", "VectorNonlinearity",
    "compute_terms", "make_nonlinearity", "paralinearize", "smoothing_study",
    "vector_paralinearize", "ManufacturedProblem", "directional_regularity",
    "gamma_field", "manufacture", "refinement_study", "twisted_consistency",
]

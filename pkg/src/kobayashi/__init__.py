"""Numerical bounds for the Kobayashi-Royden metric near pseudoconvex boundaries."""

from .bounds import (
    AnalyticDisc,
    Bound,
    LowerBoundContext,
    closed_form_bound,
    disc_search_upper,
    kappa_ball,
    kappa_halfplane,
    kappa_unit_disc,
    linear_disc_upper,
    mobius_extremal,
    normal_lower_bound,
    schwarz_halfplane_bound,
    verify_chain,
)
from .core_complex import MixedPolynomial, eval_mixed_poly, levi_form, levi_radial, min_levi_eigenvalue
from .domains import Domain, contains, get_domain, normal_ray
from .harness import ExperimentConfig, SampleRow, fit_exponent, fit_log_correction, run_experiment
from .taylor_model import TaylorModel, build_taylor_model, decompose, make_psi, normalize_at_boundary

__version__ = "0.1.0"

__all__ = [
    "AnalyticDisc",
    "Bound",
    "Domain",
    "ExperimentConfig",
    "LowerBoundContext",
    "MixedPolynomial",
    "SampleRow",
    "TaylorModel",
    "build_taylor_model",
    "closed_form_bound",
    "contains",
    "decompose",
    "disc_search_upper",
    "eval_mixed_poly",
    "fit_exponent",
    "fit_log_correction",
    "get_domain",
    "kappa_ball",
    "kappa_halfplane",
    "kappa_unit_disc",
    "levi_form",
    "levi_radial",
    "linear_disc_upper",
    "make_psi",
    "min_levi_eigenvalue",
    "mobius_extremal",
    "normal_lower_bound",
    "normal_ray",
    "normalize_at_boundary",
    "run_experiment",
    "schwarz_halfplane_bound",
    "verify_chain",
]

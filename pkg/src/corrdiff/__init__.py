"""Corrected diffusion approximations for the maximum of a random walk.

Computes the Taylor coefficients of ``r(D) = log E exp(-D R(inf))`` (the log
Cramer-Lundberg constant) and the derived series for overshoot cumulants,
the mean maximum and ladder heights, with quadrature and Monte Carlo checks.
"""

from __future__ import annotations

from .expansion import (
    CumulantTable,
    ExpansionConfig,
    ExpansionReport,
    beta_series,
    kappa_table,
    ladder_series,
    mean_max_series,
    rho_biseries,
    s_series,
    tail_approx,
)
from .increments import IncrementModel, ModelError, conjugate_theta1, make_model, theta1_series
from .mcoracle import McEstimate, is_crossing_prob, ladder_identity_check, lindley_mean, overshoot_transform
from .pseries import BiSeries, Series
from .quadrature import QuadConfig, QuadratureError, I_direct, rho_direct, s_direct

__version__ = "0.1.0"

__all__ = [
    "BiSeries",
    "CumulantTable",
    "ExpansionConfig",
    "ExpansionReport",
    "IncrementModel",
    "I_direct",
    "McEstimate",
    "ModelError",
    "QuadConfig",
    "QuadratureError",
    "Series",
    "beta_series",
    "conjugate_theta1",
    "is_crossing_prob",
    "kappa_table",
    "ladder_identity_check",
    "ladder_series",
    "lindley_mean",
    "make_model",
    "mean_max_series",
    "overshoot_transform",
    "rho_biseries",
    "rho_direct",
    "s_direct",
    "s_series",
    "tail_approx",
    "theta1_series",
]

"""Survival of drifted Brownian motion in cones: exact quadrature,
asymptotic laws for drift regimes A-F, and Monte Carlo."""

from .asymptotics import AsymptoticLaw, asymptotic_law, halfline_law, ratio_diagnostic
from .errors import ConeExitError, DomainError, QuadratureError, SeriesNotConverged
from .geometry import Regime, Wedge, classify_regime, project_onto_cone
from .kernel import KernelSpec, heat_kernel_wedge, normal_derivative_wedge
from .montecarlo import McConfig, McEstimate, mc_survival
from .survival import (
    QuadratureSpec,
    SurvivalValue,
    survival_halfline,
    survival_quarter,
    survival_wedge_exact,
)

__version__ = "0.1.0"

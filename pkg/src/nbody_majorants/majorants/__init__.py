"""Majorant series, their convergence radii and the local error bounds built from them."""

from .bounds import (
    BoundScalings,
    BoundValue,
    certified_step_limit,
    local_bound_physical,
    local_bound_renorm,
    model_for,
    rk_local_error_bound,
)
from .flow import (
    ORIGINAL,
    MajorantModel,
    PhysicalMajorant,
    RenormMajorant,
    identity_residuals,
    lambda_series,
    midpoint_identity_residual,
    midpoint_xi_zeta_hat,
    rho_series,
    xi_zeta_series,
)
from .radii import (
    fold_radius_hat,
    midpoint_radius_hat,
    radius_r,
    radius_r_hat_old,
    radius_R,
    vplus_closed_form,
    vplus_root,
)

__all__ = [
    "BoundScalings",
    "BoundValue",
    "MajorantModel",
    "ORIGINAL",
    "PhysicalMajorant",
    "RenormMajorant",
    "certified_step_limit",
    "fold_radius_hat",
    "identity_residuals",
    "lambda_series",
    "local_bound_physical",
    "local_bound_renorm",
    "midpoint_identity_residual",
    "midpoint_radius_hat",
    "midpoint_xi_zeta_hat",
    "model_for",
    "radius_R",
    "radius_r",
    "radius_r_hat_old",
    "rho_series",
    "rk_local_error_bound",
    "vplus_closed_form",
    "vplus_root",
    "xi_zeta_series",
]

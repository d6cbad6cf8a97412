"""Convergence radii of the majorant series.

``r(eta0)``
    radius of ``lambda``; ``rho`` converges for ``|t| < r / sqrt(mu0^2 + nu0)``.
``R``
    radius of ``(xi, zeta)``, the uniform strip half-width in fictitious time.
``R_hat``
    radius of the implicit midpoint stage majorant ``(xi_hat, zeta_hat)``.
"""

from __future__ import annotations

import math
import warnings
from functools import lru_cache

import mpmath
import numpy as np
from scipy.optimize import brentq, minimize_scalar

from ..errors import InternalConsistencyError, InvalidParametersError, NumericFailure
from ..quadrature import QuadratureError, tanh_sinh

SQRT2M1 = math.sqrt(2.0) - 1.0

# numerator and denominator of g(sigma)^2 up to the prefactor; highest degree first
G_NUMERATOR = (3, 18, 50, 80, 76, 40, -8)
G_DENOMINATOR = (1, 4, 8, 8, 2)


# ---------------------------------------------------------------------------
# physical time
# ---------------------------------------------------------------------------


def f_integrand(sigma, eta0: float):
    """``f(sigma) = (eta0 + 2 (1 - eta0) ((1 - 2 sigma - sigma^2)^(-1/2) - 1))^(-1/2)``."""
    sigma = np.asarray(sigma, dtype=float)
    excess = np.expm1(-0.5 * np.log1p(-2.0 * sigma - sigma * sigma))
    return (eta0 + 2.0 * (1.0 - eta0) * excess) ** -0.5


def _f_from_right(d, eta0: float):
    # 1 - 2 sigma - sigma^2 = d (2 sqrt2 - d) with d = sqrt2 - 1 - sigma
    d = np.asarray(d, dtype=float)
    base = d * (2.0 * math.sqrt(2.0) - d)
    return (eta0 + 2.0 * (1.0 - eta0) * (base**-0.5 - 1.0)) ** -0.5


def radius_r(eta0: float, tol: float = 1e-10) -> float:
    """``r(eta0) = int_0^(sqrt2 - 1) f(sigma) dsigma`` by tanh-sinh quadrature.

    ``eta0 = 0`` is allowed: the integrand then behaves like ``sigma^(-1/2)``
    at the origin and the integral converges.
    """
    if not 0.0 <= eta0 < 1.0:
        raise InvalidParametersError(f"eta0 must lie in [0, 1), got {eta0}")
    try:
        res = tanh_sinh(
            lambda s: f_integrand(s, eta0),
            0.0,
            SQRT2M1,
            tol=tol,
            f_left=lambda d: f_integrand(d, eta0),
            f_right=lambda d: _f_from_right(d, eta0),
        )
    except QuadratureError as exc:
        raise NumericFailure(f"r({eta0}): {exc}", exc.error) from exc
    return res.value


def kappa(sigma):
    """``2 sigma (1 + sigma) / (1 - 2 sigma - sigma^2)^(3/2)``."""
    sigma = np.asarray(sigma, dtype=float)
    return 2.0 * sigma * (1.0 + sigma) / (1.0 - 2.0 * sigma - sigma * sigma) ** 1.5


def _r_hat_objective(sigma, eta0: float):
    return 2.0 * sigma / (math.sqrt(eta0) + np.sqrt(eta0 + kappa(sigma) * (1.0 - eta0)))


def radius_r_hat_old(eta0: float, xtol: float = 1e-10) -> float:
    """The earlier, smaller radius ``sup_sigma 2 sigma (sqrt(eta0) + sqrt(eta0 + kappa (1 - eta0)))^-1``."""
    if not 0.0 <= eta0 <= 1.0:
        raise InvalidParametersError(f"eta0 must lie in [0, 1], got {eta0}")
    if eta0 == 1.0:
        # objective reduces to sigma; supremum at the right end
        return SQRT2M1
    grid = np.linspace(0.0, SQRT2M1, 2001)[1:-1]
    vals = _r_hat_objective(grid, eta0)
    i = int(np.argmax(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(
        lambda s: -_r_hat_objective(s, eta0),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": xtol},
    )
    return float(max(-res.fun, vals[i]))


def remark_fit_bracket(mu0: float, nu0: float) -> tuple[float, float, float]:
    """``(lower, scaled radius, upper)`` of the empirical fit for ``r(eta0) / sqrt(mu0^2 + nu0)``."""
    eta0 = mu0**2 / (mu0**2 + nu0)
    scaled = radius_r(eta0) / math.sqrt(mu0**2 + nu0)
    denom = mu0 + math.sqrt(nu0 / 3.0)
    return SQRT2M1 / denom, scaled, 0.48 / denom


# ---------------------------------------------------------------------------
# renormalized flow
# ---------------------------------------------------------------------------


def vplus_closed_form(dps: int = 40) -> float:
    """Radical expression for the positive root of the numerator of ``g``."""
    with mpmath.workdps(dps):
        a = 251 + 9 * mpmath.sqrt(777)
        c = mpmath.cbrt(a)
        inner = 502 + 18 * mpmath.sqrt(777) - 5 * c**2 + 8 * c
        return float(-1 + mpmath.sqrt(inner) / (3 * c))


def vplus_root() -> float:
    """Smallest-modulus root of ``3s^6 + 18s^5 + 50s^4 + 80s^3 + 76s^2 + 40s - 8``, polished by Brent."""
    roots = np.roots(G_NUMERATOR)
    r = roots[np.argmin(np.abs(roots))]
    if abs(r.imag) > 1e-9 or r.real <= 0:
        raise NumericFailure(f"smallest root {r} is not positive real")
    x = r.real
    return brentq(lambda s: np.polyval(G_NUMERATOR, s), x - 1e-6, x + 1e-6, xtol=1e-17, rtol=1e-15)


def g_integrand(sigma):
    """``g(sigma)`` whose integral over ``(0, v_plus)`` is ``R``."""
    sigma = np.asarray(sigma, dtype=float)
    num = np.polyval(G_NUMERATOR, sigma)
    den = np.polyval(G_DENOMINATOR, sigma)
    return 2.0 / (sigma**2 + 2.0 * sigma + 2.0) ** 2 * np.sqrt(np.maximum(-num / den, 0.0))


@lru_cache(maxsize=4)
def _shifted_numerator(vplus: float, dps: int = 40) -> np.ndarray:
    # coefficients of N(vplus - d) in powers of d, constant term dropped (it vanishes)
    with mpmath.workdps(dps):
        coeffs = [mpmath.mpf(c) for c in G_NUMERATOR]
        v = mpmath.mpf(vplus)
        taylor = mpmath.taylor(lambda x: mpmath.polyval(coeffs, x), v, len(coeffs) - 1)
        return np.array([float(t * (-1) ** k) for k, t in enumerate(taylor)][1:])


def _g_from_right(d, vplus: float):
    d = np.asarray(d, dtype=float)
    shifted = _shifted_numerator(vplus)
    num = np.zeros_like(d)
    for k in range(len(shifted) - 1, -1, -1):
        num = num * d + shifted[k]
    num = num * d
    s = vplus - d
    den = np.polyval(G_DENOMINATOR, s)
    return 2.0 / (s**2 + 2.0 * s + 2.0) ** 2 * np.sqrt(np.maximum(-num / den, 0.0))


@lru_cache(maxsize=8)
def radius_R(tolerance: float = 1e-13) -> tuple[float, float]:
    """``(R, v_plus)`` with ``R = int_0^(v_plus) g(sigma) dsigma``.

    ``v_plus`` is computed from the radical expression and by polynomial root
    finding; a disagreement above ``1e-10`` raises, above ``1e-12`` warns and
    the root finder wins.
    """
    closed = vplus_closed_form()
    root = vplus_root()
    gap = abs(closed - root)
    if gap > 1e-10:
        raise InternalConsistencyError(f"v_plus closed form {closed!r} vs root {root!r}")
    if gap > 1e-12:
        warnings.warn(f"v_plus closed form and root differ by {gap:g}", RuntimeWarning, stacklevel=2)
    vplus = root
    try:
        res = tanh_sinh(g_integrand, 0.0, vplus, tol=tolerance, f_right=lambda d: _g_from_right(d, vplus))
    except QuadratureError as exc:
        raise NumericFailure(f"R: {exc}", exc.error) from exc
    return res.value, vplus


def conformal_sigma(tau, R: float):
    """Map the strip ``|Im tau| < R`` onto the unit disk: ``(e^x - 1)/(e^x + 1)``, ``x = pi tau / (2R)``."""
    if not R > 0:
        raise InvalidParametersError("R must be positive")
    return np.tanh(np.pi * np.asarray(tau, dtype=float) / (4.0 * R))


# ---------------------------------------------------------------------------
# midpoint discretization
# ---------------------------------------------------------------------------


def _zeta_hat_of_xi(x):
    return 0.5 * (np.sqrt(1.0 - 4.0 * x * (1.0 - x) / (2.0 - x * x) ** 1.5) - 1.0)


def _chi_scalar(x, z):
    D = 2.0 - x * x
    return (2.0 * z + z * z + D**-0.5) / D


def tau_of_xi_hat(x):
    """Stage equation for ``xi_hat`` solved for ``tau`` after eliminating ``zeta_hat``."""
    x = np.asarray(x, dtype=float)
    z = _zeta_hat_of_xi(x)
    return 2.0 * (x - 1.0) * np.sqrt(2.0 - _chi_scalar(x, z)) / (1.0 + z)


def fold_radius_hat(xtol: float = 1e-13) -> tuple[float, float]:
    """``(R_hat, xi_hat at the fold)``: the maximum of ``tau(xi_hat)`` on the real branch."""
    grid = np.linspace(1.0, math.sqrt(2.0), 4001)[1:-1]
    with np.errstate(invalid="ignore"):
        vals = tau_of_xi_hat(grid)
    ok = np.isfinite(vals)
    if not ok.any():
        raise NumericFailure("no admissible xi_hat in (1, sqrt 2)")
    # the admissible branch ends where 2 - chi or the square root turns negative
    first_bad = np.argmax(~ok) if (~ok).any() else len(vals)
    vals = vals[:first_bad]
    i = int(np.argmax(vals))
    if i == 0 or i == len(vals) - 1:
        raise NumericFailure("no interior fold of tau(xi_hat) found")
    res = minimize_scalar(
        lambda x: -tau_of_xi_hat(x), bounds=(grid[i - 1], grid[i + 1]), method="bounded", options={"xatol": xtol}
    )
    return float(-res.fun), float(res.x)


@lru_cache(maxsize=8)
def midpoint_radius_hat(tolerance: float = 1e-3, K: int = 120) -> float:
    """Radius ``R_hat`` of the midpoint majorant; fold point with a coefficient-ratio cross-check."""
    a, _ = fold_radius_hat()
    b = midpoint_radius_ratio_estimate(K)
    if abs(a - b) / a > tolerance:
        warnings.warn(f"R_hat fold {a:.9f} vs ratio estimate {b:.9f}", RuntimeWarning, stacklevel=2)
    return a


@lru_cache(maxsize=4)
def midpoint_radius_ratio_estimate(K: int = 120) -> float:
    from .flow import ORIGINAL, _iterate, domb_sykes_radius, psi_hat_operator

    xi, _ = _iterate(psi_hat_operator, K, ORIGINAL, None)
    return domb_sykes_radius(xi.coeffs)

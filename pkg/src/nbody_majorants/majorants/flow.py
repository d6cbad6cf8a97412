"""Majorant series of the N-body flow in physical and renormalized time.

Physical time
    ``rho'' = nu0 rho / (2 - rho^2)^(3/2)``, ``rho(0) = 1``, ``rho'(0) = mu0``,
    obtained as the fixed point of
    ``Phi(rho) = 1 + mu0 t + nu0 * int int rho (2 - rho^2)^(-3/2)``.

Renormalized time
    ``(xi, zeta)`` is the fixed point of
    ``Psi(xi, zeta) = (1 + int F (1 + alpha zeta), int F xi (2 - xi^2)^(-3/2))``
    with ``F = (2 - chi(xi, zeta))^(-1/(2p))``.  For the original
    renormalization function ``p = 1, alpha = 1`` and
    ``chi = (2 - xi^2)^-1 (2 zeta + zeta^2 + (2 - xi^2)^(-1/2))``.

Implicit midpoint stages
    ``(xi_hat, zeta_hat)`` solve the same system with ``int`` replaced by
    multiplication with ``tau / 2``.

The parameters ``p``, ``alpha`` and ``kappa`` of :class:`MajorantModel`
cover the p-norm and energy-based renormalization functions; the
corresponding ``chi`` is the coefficient-wise maximum of the majorants of
the velocity part and the potential part of ``s^(-2p)`` (see
:func:`chi`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..errors import InvalidParametersError
from ..series import (
    DEFAULT_ORDER,
    TruncatedSeries,
    antiderivative,
    coefmax,
    series_pow,
    series_powc,
)


@dataclass(frozen=True)
class MajorantModel:
    """Shape of the renormalized majorant system.

    ``p`` and ``alpha`` are the p-norm exponent and the weight of the
    potential term; ``kappa = U(q0) / (E0 + U(q0))`` is set only for the
    energy-based renormalization, whose velocity term is replaced by
    ``(E0 + U)^p``.  The default is the original renormalization function.
    """

    p: int = 1
    alpha: float = 1.0
    kappa: float | None = None

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise InvalidParametersError(f"p must be a positive integer, got {self.p}")
        if not self.alpha > 0:
            raise InvalidParametersError(f"alpha must be positive, got {self.alpha}")
        if self.kappa is not None and not self.kappa > 0:
            raise InvalidParametersError(f"kappa must be positive, got {self.kappa}")

    @property
    def exponent(self) -> float:
        return -1.0 / (2 * self.p)

    @property
    def is_original(self) -> bool:
        return self.p == 1 and self.alpha == 1.0 and self.kappa is None

    def as_dict(self) -> dict:
        return {"p": self.p, "alpha": self.alpha, "kappa": self.kappa}


ORIGINAL = MajorantModel()


@dataclass(frozen=True)
class PhysicalMajorant:
    rho: TruncatedSeries
    mu0: float
    nu0: float

    @property
    def eta0(self) -> float:
        return self.mu0**2 / (self.mu0**2 + self.nu0)

    @property
    def time_scale(self) -> float:
        """``sqrt(mu0^2 + nu0)``: ``rho(t) = 1 + lambda(t * time_scale)``."""
        return math.sqrt(self.mu0**2 + self.nu0)


@dataclass(frozen=True)
class RenormMajorant:
    xi: TruncatedSeries
    zeta: TruncatedSeries
    kind: str
    radius: float
    model: MajorantModel = field(default=ORIGINAL)

    @property
    def order(self) -> int:
        return self.xi.order

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": self.kind,
                "coefficients_xi": [float(x) for x in self.xi.coeffs],
                "coefficients_zeta": [float(x) for x in self.zeta.coeffs],
                "radius": self.radius,
                "model": self.model.as_dict(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "RenormMajorant":
        d = json.loads(text)
        model = MajorantModel(**d["model"]) if "model" in d else ORIGINAL
        return cls(
            TruncatedSeries(d["coefficients_xi"]),
            TruncatedSeries(d["coefficients_zeta"]),
            d["kind"],
            float(d["radius"]),
            model,
        )


# ---------------------------------------------------------------------------
# physical time
# ---------------------------------------------------------------------------


def phi_operator(rho: TruncatedSeries, mu0: float, nu0: float) -> TruncatedSeries:
    K = rho.order
    h = rho * series_pow(2.0 - rho * rho, -1.5)
    return 1.0 + TruncatedSeries.variable(K, mu0) + nu0 * antiderivative(antiderivative(h))


def rho_series(mu0: float, nu0: float, K: int = DEFAULT_ORDER, sweeps: int | None = None) -> PhysicalMajorant:
    """Majorant of ``(q_i - q_j) / ||q_i^0 - q_j^0||`` in powers of ``t``.

    Iterates ``Phi`` from ``rho = 1``; each sweep fixes two more
    coefficients, so ``ceil(K/2) + 1`` sweeps are used by default.
    """
    if not nu0 > 0 or not mu0 >= 0:
        raise InvalidParametersError(f"need nu0 > 0 and mu0 >= 0, got mu0={mu0}, nu0={nu0}")
    if sweeps is None:
        sweeps = math.ceil(K / 2) + 1
    rho = TruncatedSeries.constant(1.0, K)
    for _ in range(sweeps):
        rho = phi_operator(rho, mu0, nu0)
    return PhysicalMajorant(rho, float(mu0), float(nu0))


def lambda_operator(lam: TruncatedSeries, eta0: float) -> TruncatedSeries:
    K = lam.order
    h = (1.0 + lam) * series_pow(1.0 - 2.0 * lam - lam * lam, -1.5)
    return TruncatedSeries.variable(K, math.sqrt(eta0)) + (1.0 - eta0) * antiderivative(antiderivative(h))


def lambda_series(eta0: float, K: int = DEFAULT_ORDER) -> TruncatedSeries:
    """Solution of ``lambda'' = (1 - eta0)(1 + lambda)(1 - 2 lambda - lambda^2)^(-3/2)``,
    ``lambda(0) = 0``, ``lambda'(0) = sqrt(eta0)``."""
    if not 0.0 <= eta0 < 1.0:
        raise InvalidParametersError(f"eta0 must lie in [0, 1), got {eta0}")
    lam = TruncatedSeries.constant(0.0, K)
    for _ in range(math.ceil(K / 2) + 1):
        lam = lambda_operator(lam, eta0)
    return lam


# ---------------------------------------------------------------------------
# renormalized time
# ---------------------------------------------------------------------------


def chi(xi: TruncatedSeries, zeta: TruncatedSeries, model: MajorantModel = ORIGINAL) -> TruncatedSeries:
    """Majorant of ``s(Q, V)^(-2p) / s(q0, v0)^(-2p)``.

    With ``D = 2 - xi^2`` and ``w = 2 zeta + alpha zeta^2`` the velocity part
    of ``s^(-2p)`` is majored by ``D^-p sum_k C(p,k) x^(p-k) y^k w^k`` where
    pairwise Young inequalities split ``x^(p-k) y^k`` between the velocity
    and potential parts of ``s0^(-2p)``; the potential part is majored by
    ``D^(-3p/2)``.
    """
    D = 2.0 - xi * xi
    if model.is_original:
        return series_pow(D, -1.0) * (2.0 * zeta + zeta * zeta + series_pow(D, -0.5))
    p = model.p
    Dp = series_pow(D, -float(p))
    Dpot = series_pow(D, -1.5 * p)
    if model.kappa is not None:
        e = 1.0 + model.kappa * (series_pow(D, -0.5) - 1.0)
        return coefmax(series_pow(e, float(p)) * Dp, Dpot)
    w = 2.0 * zeta + model.alpha * zeta * zeta
    K = xi.order
    vel = TruncatedSeries.constant(0.0, K)
    pot = TruncatedSeries.constant(0.0, K)
    wk = TruncatedSeries.constant(1.0, K)
    for k in range(p + 1):
        c = math.comb(p, k)
        vel = vel + (c * (p - k) / p) * wk
        pot = pot + (c * k / p * model.alpha**p) * wk
        wk = wk * w
    return coefmax(Dp * vel, Dp * pot + Dpot)


def _rhs(xi: TruncatedSeries, zeta: TruncatedSeries, model: MajorantModel):
    F = series_powc(2.0 - chi(xi, zeta, model), model.exponent)
    f_xi = F * (1.0 + model.alpha * zeta)
    f_zeta = F * xi * series_pow(2.0 - xi * xi, -1.5)
    return f_xi, f_zeta


def psi_operator(xi, zeta, model: MajorantModel = ORIGINAL):
    f_xi, f_zeta = _rhs(xi, zeta, model)
    return 1.0 + antiderivative(f_xi), antiderivative(f_zeta)


def psi_hat_operator(xi, zeta, model: MajorantModel = ORIGINAL):
    f_xi, f_zeta = _rhs(xi, zeta, model)
    return 1.0 + 0.5 * f_xi.shift(), 0.5 * f_zeta.shift()


def _iterate(op, K: int, model: MajorantModel, sweeps: int | None):
    xi = TruncatedSeries.constant(1.0, K)
    zeta = TruncatedSeries.constant(0.0, K)
    for _ in range(K + 1 if sweeps is None else sweeps):
        xi, zeta = op(xi, zeta, model)
    return xi, zeta


@lru_cache(maxsize=32)
def _xi_zeta_cached(K: int, model: MajorantModel, hat: bool):
    return _iterate(psi_hat_operator if hat else psi_operator, K, model, None)


def xi_zeta_series(K: int = DEFAULT_ORDER, model: MajorantModel = ORIGINAL, with_radius: bool = True) -> RenormMajorant:
    """Majorants ``(xi, zeta)`` of the renormalized flow to order ``K``.

    ``Q_i - Q_j <| ||q_i^0 - q_j^0|| xi`` and
    ``V_i - V_j <| ||v_i^0 - v_j^0|| + s0 M_ij zeta``.  For the original
    model the radius is ``R`` from the closed-form integral; otherwise it is
    a coefficient-ratio estimate.  ``with_radius=False`` skips the radius
    (reported as ``nan``) when only the coefficients are needed.
    """
    xi, zeta = _xi_zeta_cached(int(K), model, False)
    if not with_radius:
        radius = math.nan
    elif model.is_original:
        from .radii import radius_R

        radius = radius_R()[0]
    else:
        radius = _model_radius(model, False)
    return RenormMajorant(xi, zeta, "exact-flow", radius, model)


def midpoint_xi_zeta_hat(
    K: int = DEFAULT_ORDER, model: MajorantModel = ORIGINAL, with_radius: bool = True
) -> RenormMajorant:
    """Majorants ``(xi_hat, zeta_hat)`` of the implicit midpoint stage values."""
    xi, zeta = _xi_zeta_cached(int(K), model, True)
    if not with_radius:
        radius = math.nan
    elif model.is_original:
        from .radii import midpoint_radius_hat

        radius = midpoint_radius_hat()
    else:
        radius = _model_radius(model, True)
    return RenormMajorant(xi, zeta, "midpoint", radius, model)


RADIUS_ESTIMATE_ORDER = 100


@lru_cache(maxsize=32)
def _model_radius(model: MajorantModel, hat: bool) -> float:
    # ratio estimates need many coefficients, independent of the order requested;
    # the order-by-order recurrence is much cheaper than sweeping at this order
    from .recurrence import xi_zeta_hat_recurrence, xi_zeta_recurrence

    xi, _ = (xi_zeta_hat_recurrence if hat else xi_zeta_recurrence)(RADIUS_ESTIMATE_ORDER, model)
    return domb_sykes_radius(xi.coeffs)


# ---------------------------------------------------------------------------
# identities
# ---------------------------------------------------------------------------


def gamma_series(zeta: TruncatedSeries, alpha: float = 1.0) -> TruncatedSeries:
    return zeta + 0.5 * alpha * zeta * zeta


def _rel_residual(lhs: TruncatedSeries, rhs: TruncatedSeries) -> float:
    """Largest ``|lhs_k - rhs_k| / max(1, |lhs_k|, |rhs_k|)``; coefficients grow geometrically."""
    a, b = lhs.coeffs, rhs.coeffs
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))))


def identity_residuals(flow: RenormMajorant) -> dict[str, float]:
    """Per-coefficient relative residuals of the algebraic relations of the flow majorant.

    ``(2 - xi^2)^(-1/2) = 1 + gamma`` with ``gamma = zeta + alpha zeta^2 / 2``
    holds for every model; for ``alpha = 1`` it is equivalent to
    ``xi = sqrt(1 + 4 gamma + 2 gamma^2) / (1 + gamma)``.
    """
    xi, zeta = flow.xi, flow.zeta
    g = gamma_series(zeta, flow.model.alpha)
    out = {"gamma": _rel_residual(series_pow(2.0 - xi * xi, -0.5), 1.0 + g)}
    if flow.model.alpha == 1.0:
        out["xiaux"] = _rel_residual(xi * (1.0 + g), series_pow(1.0 + 4.0 * g + 2.0 * g * g, 0.5))
    return out


def midpoint_zeta_from_xi(xi_hat: TruncatedSeries, alpha: float = 1.0) -> TruncatedSeries:
    """``zeta_hat`` as a function of ``xi_hat``.

    Eliminating the common factor from the two stage equations gives
    ``alpha zeta^2 + zeta = u`` with ``u = xi (xi - 1) (2 - xi^2)^(-3/2)``.
    """
    u = xi_hat * (xi_hat - 1.0) * series_pow(2.0 - xi_hat * xi_hat, -1.5)
    return (series_pow(1.0 + 4.0 * alpha * u, 0.5) - 1.0) / (2.0 * alpha)


def midpoint_identity_residual(disc: RenormMajorant) -> float:
    """Per-coefficient relative residual of ``zeta_hat = Z(xi_hat)``."""
    return _rel_residual(disc.zeta, midpoint_zeta_from_xi(disc.xi, disc.model.alpha))


# ---------------------------------------------------------------------------
# coefficient asymptotics
# ---------------------------------------------------------------------------


def domb_sykes_radius(coeffs, fit_fraction: float = 0.5) -> float:
    """Radius of convergence from a linear fit of ``c_k / c_{k-1}`` against ``1/k``.

    Uses the upper ``fit_fraction`` of the available ratios; the intercept
    is the reciprocal radius.
    """
    c = np.asarray(coeffs, dtype=float)
    k = np.arange(len(c))
    ok = (c[1:] > 0) & (c[:-1] > 0)
    kk = k[1:][ok]
    ratios = c[1:][ok] / c[:-1][ok]
    if len(ratios) < 4:
        return math.inf
    start = int(len(ratios) * (1 - fit_fraction))
    x = 1.0 / kk[start:]
    y = ratios[start:]
    slope, intercept = np.polyfit(x, y, 1)
    if intercept <= 0:
        return math.inf
    return 1.0 / intercept

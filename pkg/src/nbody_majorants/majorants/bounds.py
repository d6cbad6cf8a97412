"""Local bounds on N-body solutions and on Runge-Kutta local errors.

Every bound is a majorant series evaluated at the step, scaled by
quantities of the initial state.  Truncated sums under-report because all
coefficients are nonnegative, so each evaluation also carries a geometric
tail estimate; the safeguarded value is the one returned by default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InternalConsistencyError, InvalidParametersError, OutOfDomainError
from ..nbody import RenormSpec, SystemState, pairwise_quantities, renorm_s
from ..series import evaluate_tail
from ..tableau import RKTableau
from .flow import ORIGINAL, MajorantModel, PhysicalMajorant, RenormMajorant
from .radii import radius_r


@dataclass(frozen=True, eq=False)
class BoundScalings:
    """Problem constants of the initial state that scale the majorant series.

    ``min_gap[i]`` is ``min_{j != i} ||q_i - q_j||``; ``alpha`` is the
    potential weight of the renormalization (1 for the original and cheap
    kinds).
    """

    s0: float
    Ki: np.ndarray
    Mij: np.ndarray
    min_gap: np.ndarray
    vnorm: np.ndarray
    mu0: float
    nu0: float
    alpha: float = 1.0

    @classmethod
    def from_state(cls, state: SystemState, spec: RenormSpec = RenormSpec()) -> "BoundScalings":
        pq = pairwise_quantities(state)
        spec = spec.freeze_energy(state)
        alpha = spec.alpha if spec.kind in ("pnorm", "energy") else 1.0
        return cls(
            s0=renorm_s(state, spec),
            Ki=pq.K,
            Mij=pq.M,
            min_gap=pq.min_gap,
            vnorm=pq.vnorm,
            mu0=pq.mu,
            nu0=pq.nu,
            alpha=alpha,
        )

    def position_scale(self, i: int) -> float:
        """``max(s0 ||v_i||, s0^2 K_i / alpha)``."""
        return max(self.s0 * self.vnorm[i], self.s0**2 * self.Ki[i] / self.alpha)

    def velocity_scale(self, i: int) -> float:
        return self.s0 * self.Ki[i]


def model_for(spec: RenormSpec, state: SystemState | None = None) -> MajorantModel:
    """Majorant system matching a renormalization function.

    The energy kind needs the state to fix ``kappa = U / (E0 + U)``.
    """
    if spec.kind in ("original", "cheap"):
        return ORIGINAL
    if spec.kind == "pnorm":
        return MajorantModel(p=spec.p, alpha=spec.alpha)
    if spec.kind == "energy":
        if state is None:
            raise InvalidParametersError("energy kind needs the initial state")
        spec = spec.freeze_energy(state)
        U = pairwise_quantities(state).U
        if not spec.E0 + U > 0:
            raise InvalidParametersError("energy renormalization needs E0 + U > 0")
        return MajorantModel(p=spec.p, alpha=spec.alpha, kappa=U / (spec.E0 + U))
    raise InvalidParametersError("the physical kind has no renormalized majorant")


@dataclass(frozen=True)
class BoundValue:
    """Raw truncated sum and the value with a geometric tail safeguard."""

    raw: float
    safeguarded: float
    truncated: bool = True

    def __float__(self) -> float:
        return self.safeguarded


def local_bound_physical(
    scalings: BoundScalings, rho: PhysicalMajorant, i: int, t: float, detail: bool = False
):
    """Bound on ``||q_i(t) - q_i0 - t v_i0||``: ``min_gap_i * sum_{k>=2} rho_k t^k``."""
    if t < 0:
        raise OutOfDomainError("t must be nonnegative")
    limit = radius_r(rho.eta0) / rho.time_scale
    if t >= limit:
        raise OutOfDomainError(f"t = {t:g} outside the certified disk |t| < {limit:g}")
    raw, safe = evaluate_tail(rho.rho.coeffs, t, start=2)
    out = BoundValue(scalings.min_gap[i] * raw, scalings.min_gap[i] * safe)
    return out if detail else out.safeguarded


def _check_tau(tau: float, radius: float):
    if abs(tau) >= radius:
        raise OutOfDomainError(f"tau = {tau:g} outside the certified radius {radius:g}")


def local_bound_renorm(scalings: BoundScalings, prof: RenormMajorant, i: int, tau: float, detail: bool = False):
    """``(position bound, velocity bound)`` on ``Q_i - q_i0`` and ``V_i - v_i0`` at ``tau``."""
    _check_tau(tau, prof.radius)
    t = abs(tau)
    xr, xs = evaluate_tail(prof.xi.coeffs, t, start=1)
    zr, zs = evaluate_tail(prof.zeta.coeffs, t, start=1)
    ps, vs = scalings.position_scale(i), scalings.velocity_scale(i)
    pos = BoundValue(ps * xr, ps * xs)
    vel = BoundValue(vs * zr, vs * zs)
    return (pos, vel) if detail else (pos.safeguarded, vel.safeguarded)


def certified_step_limit(disc: RenormMajorant, tab: RKTableau) -> float:
    """Largest step for which the stage majorant is evaluated inside its radius."""
    return disc.radius / (2.0 * tab.normA)


def rk_local_error_bound(
    scalings: BoundScalings,
    flow: RenormMajorant,
    disc: RenormMajorant,
    tab: RKTableau,
    i: int,
    tau: float,
    form: str = "triangle",
    detail: bool = False,
):
    """Bound on the local error of one Runge-Kutta step of size ``tau``.

    With ``sigma = 2 ||A||_inf tau`` the stages are majorized by
    ``xi_hat(sigma)``, ``zeta_hat(sigma)`` and the update by
    ``||b||_1 / ||A||_inf`` times the same increments.  Both the update and the
    exact flow share the Taylor coefficients up to the order ``p`` of the
    method, so

    ``||V~_i - V_i(tau)|| <= s0 K_i sum_{k>p} (w zeta_hat_k (2 ||A||)^k + zeta_k) tau^k``

    with ``w = ||b||_1 / ||A||_inf``, and likewise for positions with ``xi`` and
    the position scale.  This is ``form="triangle"`` (the default).

    ``form="difference"`` is the variant
    ``s0 K_i ||b||_inf sum_{k>p} (zeta_hat_k - zeta_k) (2 ||A|| tau)^k``;
    it requires ``zeta_hat_k >= zeta_k`` for every ``k``, which fails for the
    majorants computed here, and then raises
    :class:`~nbody_majorants.errors.InternalConsistencyError`.

    Returns ``(position bound, velocity bound)``; ``inf`` when ``tau`` lies
    outside the radius of the flow majorant (triangle form only).
    """
    if tau < 0:
        raise OutOfDomainError("tau must be nonnegative")
    nA = tab.normA
    limit = certified_step_limit(disc, tab)
    if tau >= limit:
        raise OutOfDomainError(f"tau = {tau:g} outside the certified step range {limit:g}")
    p = tab.order
    K = disc.order
    if flow.order != K:
        raise InvalidParametersError("flow and stage majorants must have equal orders")
    scale = (2.0 * nA) ** np.arange(K + 1)
    ps, vs = scalings.position_scale(i), scalings.velocity_scale(i)
    if form == "difference":
        dz = disc.zeta.coeffs - flow.zeta.coeffs
        dx = disc.xi.coeffs - flow.xi.coeffs
        bad = np.nonzero((dz[p + 1 :] < 0) | (dx[p + 1 :] < 0))[0]
        if len(bad):
            k = int(bad[0]) + p + 1
            raise InternalConsistencyError(
                f"stage majorant coefficient below the flow coefficient at k = {k}: "
                f"zeta_hat_k - zeta_k = {dz[k]:.3e}, xi_hat_k - xi_k = {dx[k]:.3e}"
            )
        xr, xs = evaluate_tail(dx * scale, tau, start=p + 1)
        zr, zs = evaluate_tail(dz * scale, tau, start=p + 1)
        nb = tab.normb
        pos = BoundValue(ps * nb * xr, ps * nb * xs)
        vel = BoundValue(vs * nb * zr, vs * nb * zs)
    elif form == "triangle":
        if tau >= flow.radius:
            inf = BoundValue(math.inf, math.inf)
            return (inf, inf) if detail else (math.inf, math.inf)
        w = tab.normb1 / nA
        cx = w * disc.xi.coeffs * scale + flow.xi.coeffs
        cz = w * disc.zeta.coeffs * scale + flow.zeta.coeffs
        xr, xs = evaluate_tail(cx, tau, start=p + 1)
        zr, zs = evaluate_tail(cz, tau, start=p + 1)
        pos = BoundValue(ps * xr, ps * xs)
        vel = BoundValue(vs * zr, vs * zs)
    else:
        raise InvalidParametersError(f"unknown form {form!r}")
    return (pos, vel) if detail else (pos.safeguarded, vel.safeguarded)

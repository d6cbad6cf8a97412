"""Analytic two-body propagation used as a reference solution."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad

from .errors import InvalidParametersError, NonConvergenceError
from .nbody import RenormSpec, SystemState, renorm_s_batch


@dataclass(frozen=True)
class KeplerOrbit:
    """Relative elliptic orbit of body 1 about body 0 plus uniform barycentric drift."""

    mu: float
    a: float
    e: float
    period: float
    r0: np.ndarray
    v0: np.ndarray
    E0: float
    cm_q: np.ndarray
    cm_v: np.ndarray
    w0: float
    w1: float


def orbit_from_state(state: SystemState) -> KeplerOrbit:
    if state.n != 2:
        raise InvalidParametersError("Kepler propagation needs exactly two bodies")
    mu = float(np.sum(state.gm))
    r = state.q[1] - state.q[0]
    v = state.v[1] - state.v[0]
    rn = float(np.linalg.norm(r))
    inv_a = 2.0 / rn - float(v @ v) / mu
    if not inv_a > 0:
        raise InvalidParametersError("orbit is not elliptic")
    a = 1.0 / inv_a
    ecosE = 1.0 - rn / a
    esinE = float(r @ v) / math.sqrt(mu * a)
    e = math.hypot(ecosE, esinE)
    E0 = math.atan2(esinE, ecosE)
    w = state.gm / mu
    cm_q = w @ state.q
    cm_v = w @ state.v
    return KeplerOrbit(
        mu=mu,
        a=a,
        e=e,
        period=2.0 * math.pi * math.sqrt(a**3 / mu),
        r0=r,
        v0=v,
        E0=E0,
        cm_q=cm_q,
        cm_v=cm_v,
        w0=float(w[0]),
        w1=float(w[1]),
    )


def solve_kepler(M: float, e: float, tol: float = 4e-16, maxiter: int = 60) -> float:
    """Eccentric anomaly ``E`` with ``E - e sin E = M`` by bracketed Newton iteration."""
    Mr = math.remainder(M, 2.0 * math.pi)
    lo, hi = -math.pi, math.pi
    E = Mr + e * math.sin(Mr) if e < 0.8 else math.copysign(math.pi, Mr)
    f = math.inf
    for _ in range(maxiter):
        f = E - e * math.sin(E) - Mr
        if f == 0.0:
            break
        if f > 0:
            hi = E
        else:
            lo = E
        En = E - f / (1.0 - e * math.cos(E))
        if not lo < En < hi:
            En = 0.5 * (lo + hi)
        if abs(En - E) <= tol * max(1.0, abs(E)) or hi - lo <= tol:
            E = En
            break
        E = En
    else:
        if abs(f) > 1e-13:
            raise NonConvergenceError("Kepler equation did not converge", abs(f), maxiter)
    return E + (M - Mr)


def solve_kepler_array(M: np.ndarray, e: float, tol: float = 4e-16, maxiter: int = 60) -> np.ndarray:
    """Vectorized :func:`solve_kepler`."""
    M = np.asarray(M, dtype=float)
    Mr = np.remainder(M + np.pi, 2.0 * np.pi) - np.pi
    lo = np.full_like(Mr, -np.pi)
    hi = np.full_like(Mr, np.pi)
    E = Mr + e * np.sin(Mr) if e < 0.8 else np.where(Mr >= 0, np.pi, -np.pi)
    for _ in range(maxiter):
        f = E - e * np.sin(E) - Mr
        hi = np.where(f > 0, E, hi)
        lo = np.where(f <= 0, E, lo)
        En = E - f / (1.0 - e * np.cos(E))
        En = np.where((En > lo) & (En < hi), En, 0.5 * (lo + hi))
        done = (np.abs(En - E) <= tol * np.maximum(1.0, np.abs(E))) | (hi - lo <= tol) | (f == 0.0)
        E = np.where(f == 0.0, E, En)
        if np.all(done):
            break
    else:
        f = E - e * np.sin(E) - Mr
        if np.max(np.abs(f)) > 1e-13:
            raise NonConvergenceError("Kepler equation did not converge", float(np.max(np.abs(f))), maxiter)
    return E + (M - Mr)


def propagate_arrays(orb: KeplerOrbit, t) -> tuple[np.ndarray, np.ndarray]:
    """Positions and velocities, shapes ``(m, 2, 3)``, after physical times ``t`` (shape ``(m,)``)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = 2.0 * math.pi / orb.period
    M0 = orb.E0 - orb.e * math.sin(orb.E0)
    dE = solve_kepler_array(M0 + n * t, orb.e) - orb.E0
    r0 = float(np.linalg.norm(orb.r0))
    a = orb.a
    f = 1.0 - a / r0 * (1.0 - np.cos(dE))
    g = t - math.sqrt(a**3 / orb.mu) * (dE - np.sin(dE))
    r = f[:, None] * orb.r0 + g[:, None] * orb.v0
    rn = np.linalg.norm(r, axis=1)
    fdot = -math.sqrt(orb.mu * a) * np.sin(dE) / (rn * r0)
    gdot = 1.0 - a / rn * (1.0 - np.cos(dE))
    v = fdot[:, None] * orb.r0 + gdot[:, None] * orb.v0
    cq = orb.cm_q + t[:, None] * orb.cm_v
    q = np.stack([cq - orb.w1 * r, cq + orb.w0 * r], axis=1)
    vv = np.stack([np.broadcast_to(orb.cm_v, v.shape) - orb.w1 * v, orb.cm_v + orb.w0 * v], axis=1)
    return q, vv


def propagate(state: SystemState, t: float) -> SystemState:
    """Exact two-body state after physical time ``t``."""
    q, v = propagate_arrays(orbit_from_state(state), [t])
    return replace(state, q=q[0], v=v[0], t_phys=state.t_phys + t)


def inverse_s_along_orbit(state: SystemState, spec: RenormSpec):
    """Vectorized ``t -> 1 / s(phi_t(state))`` for a two-body state."""
    orb = orbit_from_state(state)
    spec = spec.freeze_energy(state)

    def inv_s(t):
        q, v = propagate_arrays(orb, t)
        return 1.0 / renorm_s_batch(q, v, state.gm, spec, state.G)

    return inv_s


def fictitious_period(state: SystemState, spec: RenormSpec) -> float:
    """Fictitious time of one revolution: ``int_0^T dt / s``."""
    orb = orbit_from_state(state)
    if spec.kind == "physical":
        return orb.period
    inv_s_vec = inverse_s_along_orbit(state, spec)

    def inv_s(t):
        return float(inv_s_vec([t])[0])

    # split at the pericentre passages to help the adaptive rule
    n = 2.0 * math.pi / orb.period
    M0 = orb.E0 - orb.e * math.sin(orb.E0)
    tp = (-M0 / n) % orb.period
    pts = sorted({0.0, tp, orb.period})
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi > lo:
            val, _ = quad(inv_s, lo, hi, epsabs=0.0, epsrel=1e-12, limit=400)
            total += val
    return total

"""Taylor expansions of N-body solutions by series arithmetic.

These are the expansions that the majorant series bound: the exact flow
in physical or fictitious time, and the stage and update series of an
implicit Runge-Kutta step viewed as functions of the step size.  All are
computed by Picard iteration on truncated series; each sweep fixes one
more coefficient, so ``K + 1`` sweeps give every coefficient up to ``K``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .nbody import RenormSpec, SystemState, energy_pair_weights
from .series import TruncatedSeries, VectorSeries, series_powc
from .tableau import RKTableau


def _conv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Truncated Cauchy product along axis 0 with broadcasting over trailing axes."""
    K1 = a.shape[0]
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    for k in range(K1):
        out[k] = np.sum(a[: k + 1] * b[k::-1], axis=0)
    return out


def _scal(a: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Scalar series ``s`` times array-valued series ``a``."""
    T = toeplitz(s, np.zeros_like(s))
    return np.tensordot(T, a, axes=(1, 0))


def _powc(a: np.ndarray, nu: float) -> np.ndarray:
    return series_powc(TruncatedSeries(a), nu).coeffs


def _ipow(a: np.ndarray, p: int) -> np.ndarray:
    out = a
    for _ in range(p - 1):
        out = _conv(out, a)
    return out


def _integrate(a: np.ndarray, c0) -> np.ndarray:
    out = np.empty_like(a)
    out[0] = c0
    k = np.arange(1, a.shape[0]).reshape((-1,) + (1,) * (a.ndim - 1))
    out[1:] = a[:-1] / k
    return out


def _times_tau(a: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a)
    out[1:] = a[:-1]
    return out


def field_series(Q: np.ndarray, V: np.ndarray, gm: np.ndarray, spec: RenormSpec, G: float, masses=None):
    """Series of ``(s, g(Q))`` along given position and velocity series.

    ``Q`` and ``V`` have shape ``(K + 1, n, 3)``.  Returns ``s`` with shape
    ``(K + 1,)`` and ``g`` with shape ``(K + 1, n, 3)``.
    """
    K1, n, _ = Q.shape
    iu, ju = np.triu_indices(n, 1)
    D = Q[:, ju, :] - Q[:, iu, :]  # q_j - q_i per pair
    r2 = np.sum(_conv(D, D), axis=2)  # (K+1, P)
    inv3 = np.stack([_powc(r2[:, p], -1.5) for p in range(len(iu))], axis=1)
    w = np.stack([_scal(D[:, p, :], inv3[:, p]) for p in range(len(iu))], axis=1)
    g = np.zeros((K1, n, 3))
    for p, (i, j) in enumerate(zip(iu, ju)):
        g[:, i, :] += gm[j] * w[:, p, :]
        g[:, j, :] -= gm[i] * w[:, p, :]
    if spec.kind == "physical":
        s = np.zeros(K1)
        s[0] = 1.0
        return s, g
    inv1 = np.stack([_powc(r2[:, p], -0.5) for p in range(len(iu))], axis=1)
    inv2 = np.stack([_powc(r2[:, p], -1.0) for p in range(len(iu))], axis=1)
    DV = V[:, ju, :] - V[:, iu, :]
    dv2 = np.sum(_conv(DV, DV), axis=2)
    ratio2 = np.stack([_conv(dv2[:, p], inv2[:, p]) for p in range(len(iu))], axis=1)
    if spec.kind == "original":
        Kser = np.zeros((K1, n))
        for p, (i, j) in enumerate(zip(iu, ju)):
            Kser[:, i] += gm[j] * inv2[:, p]
            Kser[:, j] += gm[i] * inv2[:, p]
        S = ratio2.sum(axis=1)
        for p, (i, j) in enumerate(zip(iu, ju)):
            S = S + _conv(Kser[:, i] + Kser[:, j], inv1[:, p])
        return _powc(S, -0.5), g
    A = inv2 @ (gm[iu] + gm[ju])
    if spec.kind == "cheap":
        S = ratio2.sum(axis=1) + _conv(A, inv1.sum(axis=1))
        return _powc(S, -0.5), g
    P = spec.p
    pot = _conv(_ipow(A, P), sum(_ipow(inv1[:, p], P) for p in range(len(iu)))) * spec.alpha ** (-P)
    if spec.kind == "pnorm":
        vel = sum(_ipow(ratio2[:, p], P) for p in range(len(iu)))
    else:
        if masses is None:
            masses = gm / G
        U = inv1 @ (gm[iu] * gm[ju]) / G
        E0U = U.copy()
        E0U[0] += spec.E0
        weights = energy_pair_weights(masses, P)
        vel = _conv(_ipow(E0U, P), sum(weights[p] * _ipow(inv2[:, p], P) for p in range(len(iu))))
    return _powc(vel + pot, -1.0 / (2 * P)), g


@dataclass(frozen=True, eq=False)
class FlowSeries:
    """Taylor coefficients ``Q``, ``V`` (shape ``(K + 1, n, 3)``), ``s`` and ``t_phys``."""

    Q: np.ndarray
    V: np.ndarray
    s: np.ndarray
    t: np.ndarray

    @property
    def order(self) -> int:
        return self.Q.shape[0] - 1

    def position(self, i: int) -> VectorSeries:
        return VectorSeries(self.Q[:, i, :])

    def velocity(self, i: int) -> VectorSeries:
        return VectorSeries(self.V[:, i, :])

    def position_diff(self, i: int, j: int) -> VectorSeries:
        return VectorSeries(self.Q[:, i, :] - self.Q[:, j, :])

    def velocity_diff(self, i: int, j: int) -> VectorSeries:
        return VectorSeries(self.V[:, i, :] - self.V[:, j, :])


def _initial(state: SystemState, K: int):
    Q = np.zeros((K + 1, state.n, 3))
    V = np.zeros((K + 1, state.n, 3))
    Q[0] = state.q
    V[0] = state.v
    return Q, V


def flow_series(state: SystemState, spec: RenormSpec, K: int = 10) -> FlowSeries:
    """Taylor coefficients of the exact solution in the independent variable of ``spec``."""
    spec = spec.freeze_energy(state)
    Q, V = _initial(state, K)
    s = np.zeros(K + 1)
    for _ in range(K + 1):
        s, g = field_series(Q, V, state.gm, spec, state.G, state.masses)
        Q = _integrate(_scal(V, s), state.q)
        V = _integrate(_scal(g, s), state.v)
    s, _ = field_series(Q, V, state.gm, spec, state.G, state.masses)
    return FlowSeries(Q, V, s, _integrate(s, state.t_phys))


@dataclass(frozen=True, eq=False)
class StepSeries:
    """Stage series and the update series of one Runge-Kutta step as functions of the step size."""

    stages: tuple[FlowSeries, ...]
    update: FlowSeries


def rk_step_series(state: SystemState, spec: RenormSpec, tableau: RKTableau, K: int = 10) -> StepSeries:
    """Taylor coefficients in the step size of the stage values and of the update.

    Stage ``l`` solves ``Y_l = y0 + h sum_m a_lm f(Y_m)``; the update is
    ``y0 + h sum_m b_m f(Y_m)``.
    """
    spec = spec.freeze_energy(state)
    ns = tableau.stages
    Q0, V0 = _initial(state, K)
    Qs = [Q0.copy() for _ in range(ns)]
    Vs = [V0.copy() for _ in range(ns)]
    fields = []
    for _ in range(K + 2):
        fields = [field_series(Qs[m], Vs[m], state.gm, spec, state.G, state.masses) for m in range(ns)]
        FQ = [_scal(Vs[m], fields[m][0]) for m in range(ns)]
        FV = [_scal(fields[m][1], fields[m][0]) for m in range(ns)]
        newQ, newV = [], []
        for l in range(ns):
            dq = sum(tableau.A[l, m] * FQ[m] for m in range(ns))
            dv = sum(tableau.A[l, m] * FV[m] for m in range(ns))
            newQ.append(Q0 + _times_tau(dq))
            newV.append(V0 + _times_tau(dv))
        Qs, Vs = newQ, newV
    S = [fields[m][0] for m in range(ns)]
    t0 = np.zeros(K + 1)
    t0[0] = state.t_phys
    stage_series = tuple(
        FlowSeries(Qs[l], Vs[l], S[l], t0 + _times_tau(sum(tableau.A[l, m] * S[m] for m in range(ns))))
        for l in range(ns)
    )
    FQ = [_scal(Vs[m], S[m]) for m in range(ns)]
    FV = [_scal(fields[m][1], S[m]) for m in range(ns)]
    upd = FlowSeries(
        Q0 + _times_tau(sum(tableau.b[m] * FQ[m] for m in range(ns))),
        V0 + _times_tau(sum(tableau.b[m] * FV[m] for m in range(ns))),
        sum(tableau.b[m] * S[m] for m in range(ns)),
        t0 + _times_tau(sum(tableau.b[m] * S[m] for m in range(ns))),
    )
    return StepSeries(stage_series, upd)

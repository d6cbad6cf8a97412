"""Check Taylor coefficients of N-body solutions against the majorant series."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..nbody import PHYSICAL, RenormSpec, SystemState, pairwise_quantities
from ..series import DEFAULT_REL_SLACK, TruncatedSeries, VectorSeries, domination_margin
from ..tableau import RKTableau
from ..taylor import flow_series, rk_step_series
from .bounds import BoundScalings, model_for
from .flow import midpoint_xi_zeta_hat, rho_series, xi_zeta_series


@dataclass
class DominanceReport:
    """Worst relative margin per check; a negative margin is a violation."""

    margins: dict[str, float] = field(default_factory=dict)
    rel_slack: float = DEFAULT_REL_SLACK

    def record(self, name: str, f, fbar: TruncatedSeries) -> None:
        m = domination_margin(f, fbar, self.rel_slack)
        scale = np.maximum(1.0, fbar.coeffs)
        worst = float(np.min(m / scale))
        self.margins[name] = min(worst, self.margins.get(name, np.inf))

    @property
    def violations(self) -> list[str]:
        return [k for k, v in self.margins.items() if v < 0]

    @property
    def ok(self) -> bool:
        return not self.violations


def _scaled(series: TruncatedSeries, c: float) -> TruncatedSeries:
    return TruncatedSeries(series.coeffs * c ** np.arange(series.order + 1))


def check_physical(state: SystemState, K: int = 10, report: DominanceReport | None = None) -> DominanceReport:
    """``q_i - q_j <| ||q_i0 - q_j0|| rho`` for all pairs."""
    report = report or DominanceReport()
    pq = pairwise_quantities(state)
    rho = rho_series(pq.mu, pq.nu, K).rho
    fs = flow_series(state, PHYSICAL, K)
    for i in range(state.n):
        for j in range(i + 1, state.n):
            report.record("physical q_i-q_j", fs.position_diff(i, j), pq.dist[i, j] * rho)
    return report


def check_renormalized(
    state: SystemState, spec: RenormSpec, K: int = 10, report: DominanceReport | None = None
) -> DominanceReport:
    """Pair and per-body bounds of the renormalized flow for one renormalization kind."""
    report = report or DominanceReport()
    spec = spec.freeze_energy(state)
    model = model_for(spec, state)
    prof = xi_zeta_series(K, model, with_radius=False)
    sc = BoundScalings.from_state(state, spec)
    pq = pairwise_quantities(state)
    fs = flow_series(state, spec, K)
    _pair_checks(report, f"{spec.kind}", state, fs, prof.xi, prof.zeta, sc, pq)
    for i in range(state.n):
        dq = fs.position(i) - VectorSeries.constant(state.q[i], K)
        dv = fs.velocity(i) - VectorSeries.constant(state.v[i], K)
        report.record(f"{spec.kind} Q_i-q_i0", dq, sc.position_scale(i) * (prof.xi - 1.0))
        report.record(f"{spec.kind} V_i-v_i0", dv, sc.velocity_scale(i) * prof.zeta)
    return report


def _pair_checks(report, label, state, fs, xi, zeta, sc, pq):
    for i in range(state.n):
        for j in range(i + 1, state.n):
            dv0 = float(np.linalg.norm(state.v[i] - state.v[j]))
            report.record(f"{label} Q_i-Q_j", fs.position_diff(i, j), pq.dist[i, j] * xi)
            report.record(f"{label} V_i-V_j", fs.velocity_diff(i, j), dv0 + sc.s0 * pq.M[i, j] * zeta)


def check_rk_stages(
    state: SystemState,
    spec: RenormSpec,
    tab: RKTableau,
    K: int = 10,
    report: DominanceReport | None = None,
) -> DominanceReport:
    """Stage series against ``xi_hat(2 ||A|| tau)``, ``zeta_hat(2 ||A|| tau)``; update against
    ``||b||_1 / ||A||`` times the stage increments."""
    report = report or DominanceReport()
    spec = spec.freeze_energy(state)
    model = model_for(spec, state)
    disc = midpoint_xi_zeta_hat(K, model, with_radius=False)
    sig = 2.0 * tab.normA
    xi_h, zeta_h = _scaled(disc.xi, sig), _scaled(disc.zeta, sig)
    sc = BoundScalings.from_state(state, spec)
    pq = pairwise_quantities(state)
    ss = rk_step_series(state, spec, tab, K)
    label = f"{spec.kind} {tab.name} stage"
    for stage in ss.stages:
        _pair_checks(report, label, state, stage, xi_h, zeta_h, sc, pq)
    w = tab.normb1 / tab.normA
    for i in range(state.n):
        dq = ss.update.position(i) - VectorSeries.constant(state.q[i], K)
        dv = ss.update.velocity(i) - VectorSeries.constant(state.v[i], K)
        report.record(f"{spec.kind} {tab.name} update Q_i-q_i0", dq, sc.position_scale(i) * w * (xi_h - 1.0))
        report.record(f"{spec.kind} {tab.name} update V_i-v_i0", dv, sc.velocity_scale(i) * w * zeta_h)
    return report


def random_state(rng: np.random.Generator, n: int, G: float = 1.0) -> SystemState:
    """Random regular state: log-uniform masses over four decades, positions in a unit box,
    velocities comparable to the local circular speed."""
    gm = 10.0 ** rng.uniform(-2.0, 2.0, size=n) * G
    while True:
        q = rng.uniform(-1.0, 1.0, size=(n, 3))
        d = np.linalg.norm(q[:, None, :] - q[None, :, :], axis=2)
        if np.min(d[np.triu_indices(n, 1)]) > 0.05:
            break
    vscale = np.sqrt(np.sum(gm)) * 10.0 ** rng.uniform(-1.5, 0.5)
    v = rng.normal(size=(n, 3)) * vscale
    return SystemState(gm=gm, q=q, v=v, G=G)

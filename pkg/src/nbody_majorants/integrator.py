"""Fixed-step implicit Runge-Kutta integration with fixed-point iteration.

The stage equations ``K_l = f(y + h sum_m a_lm K_m)`` are solved by plain
fixed-point sweeps.  A sweep is accepted once the stage values change by
less than ``fp_tol`` relative to ``1 + |value|`` in every component.  When
the change stops decreasing for three consecutive sweeps the iteration has
hit the roundoff floor; it is accepted if the change is below ``1e3``
machine epsilons and rejected otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import InvalidParametersError, NonConvergenceError, OutOfDomainError
from .nbody import RenormSpec, SystemState, accelerations, make_field, renorm_s
from .tableau import RKTableau, gauss_tableau

EPS = np.finfo(float).eps
STAGNATION_SWEEPS = 3
STAGNATION_ACCEPT = 1e3 * EPS


@dataclass(frozen=True)
class IntegrationConfig:
    """Fixed-step integration settings.

    ``step`` is the physical time step for the ``physical`` kind and the
    fictitious time step otherwise.
    """

    tableau: RKTableau = field(default_factory=lambda: gauss_tableau(1))
    step: float = 1e-2
    nsteps: int = 100
    fp_tol: float = 1e-14
    fp_maxiter: int = 100
    renorm: RenormSpec = field(default_factory=RenormSpec)
    predictor: str = "constant"

    def __post_init__(self):
        if self.step == 0 or not math.isfinite(self.step):
            raise InvalidParametersError("step must be finite and nonzero")
        if not self.fp_tol > 0:
            raise InvalidParametersError("fp_tol must be positive")
        if self.nsteps < 0 or int(self.nsteps) != self.nsteps:
            raise InvalidParametersError("nsteps must be a nonnegative integer")
        if self.fp_maxiter < 1:
            raise InvalidParametersError("fp_maxiter must be positive")
        if self.predictor not in ("constant", "euler"):
            raise InvalidParametersError("predictor must be 'constant' or 'euler'")

    def as_dict(self) -> dict:
        return {
            "tableau": self.tableau.name,
            "stages": self.tableau.stages,
            "order": self.tableau.order,
            "step": self.step,
            "nsteps": self.nsteps,
            "fp_tol": self.fp_tol,
            "fp_maxiter": self.fp_maxiter,
            "predictor": self.predictor,
            "renorm": {"kind": self.renorm.kind, "p": self.renorm.p, "alpha": self.renorm.alpha, "E0": self.renorm.E0},
        }


@dataclass(frozen=True, eq=False)
class StepRecord:
    index: int
    tau: float
    t_phys: float
    state: SystemState
    fp_iters: int
    local_err: np.ndarray | None = None
    cert_bound: np.ndarray | None = None


@dataclass(eq=False)
class Trajectory:
    """Step records of a run; ``failure`` holds the exception that stopped it early, if any."""

    records: list[StepRecord]
    config: IntegrationConfig
    failure: Exception | None = None

    def __len__(self) -> int:
        return len(self.records)

    @property
    def completed(self) -> bool:
        return self.failure is None

    @property
    def tau(self) -> np.ndarray:
        return np.array([r.tau for r in self.records])

    @property
    def t_phys(self) -> np.ndarray:
        return np.array([r.t_phys for r in self.records])

    @property
    def q(self) -> np.ndarray:
        return np.array([r.state.q for r in self.records])

    @property
    def v(self) -> np.ndarray:
        return np.array([r.state.v for r in self.records])

    @property
    def fp_iters(self) -> np.ndarray:
        return np.array([r.fp_iters for r in self.records])

    def rows(self) -> list[list]:
        """Flat rows in the order of :data:`TRAJECTORY_COLUMNS`."""
        out = []
        for r in self.records:
            for i, name in enumerate(r.state.names):
                le = "" if r.local_err is None else float(r.local_err[i])
                cb = "" if r.cert_bound is None else float(r.cert_bound[i])
                out.append(
                    [r.index, r.tau, r.t_phys, name, *r.state.q[i], *r.state.v[i], r.fp_iters, le, cb]
                )
        return out


TRAJECTORY_COLUMNS = ["step", "tau", "t_phys", "body", "qx", "qy", "qz", "vx", "vy", "vz", "fp_iters",
                      "local_err", "cert_bound"]


# ---------------------------------------------------------------------------
# one step
# ---------------------------------------------------------------------------


def rk_step_flat(
    y: np.ndarray,
    f: Callable[[np.ndarray], np.ndarray],
    tab: RKTableau,
    h: float,
    fp_tol: float = 1e-14,
    fp_maxiter: int = 100,
    predictor: str = "constant",
) -> tuple[np.ndarray, int]:
    """One implicit Runge-Kutta step on a flat state vector; returns ``(y_new, sweeps)``."""
    s = tab.stages
    A, b = tab.A, tab.b
    f0 = f(y)
    if predictor == "euler":
        Y = y[None, :] + (h * tab.c)[:, None] * f0[None, :]
        F = np.array([f(Y[l]) for l in range(s)])
    else:
        Y = np.repeat(y[None, :], s, axis=0)
        F = np.repeat(f0[None, :], s, axis=0)
    best = math.inf
    stalled = 0
    for it in range(1, fp_maxiter + 1):
        Ynew = y[None, :] + h * (A @ F)
        change = float(np.max(np.abs(Ynew - Y) / (1.0 + np.abs(Ynew))))
        Y = Ynew
        F = np.array([f(Y[l]) for l in range(s)])
        if change < fp_tol:
            break
        if change < best:
            best = change
            stalled = 0
        else:
            stalled += 1
            if stalled >= STAGNATION_SWEEPS:
                if best < STAGNATION_ACCEPT:
                    break
                raise NonConvergenceError(
                    f"fixed-point iteration stagnated at residual {best:.3e}", best, it
                )
    else:
        raise NonConvergenceError(
            f"fixed-point iteration did not reach {fp_tol:g} in {fp_maxiter} sweeps", change, fp_maxiter
        )
    return y + h * (b @ F), it


def irk_step(state: SystemState, cfg: IntegrationConfig, index: int = 1, tau0: float = 0.0):
    """Advance ``state`` by one step; returns ``(new state, StepRecord)``.

    For the energy kind ``cfg.renorm.E0`` should already be frozen (as done
    by :func:`integrate`); otherwise it is taken from ``state``.
    """
    f = make_field(state, cfg.renorm)
    y, iters = rk_step_flat(state.flat(), f, cfg.tableau, cfg.step, cfg.fp_tol, cfg.fp_maxiter, cfg.predictor)
    new = state.with_flat(y)
    return new, StepRecord(index, tau0 + cfg.step, new.t_phys, new, iters)


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------


def integrate(
    state: SystemState,
    cfg: IntegrationConfig,
    raise_on_failure: bool = False,
    step_hook: Callable[[SystemState, SystemState], dict] | None = None,
) -> Trajectory:
    """Take ``cfg.nsteps`` fixed steps.

    The first record is the initial state.  A failing step stops the run;
    the records so far are returned with ``failure`` set (or the exception is
    re-raised when ``raise_on_failure``).  ``step_hook(old, new)`` may return
    ``local_err`` and ``cert_bound`` arrays to attach to the record.
    """
    spec = cfg.renorm.freeze_energy(state)
    cfg = replace(cfg, renorm=spec)
    f = make_field(state, spec)
    records = [StepRecord(0, 0.0, state.t_phys, state, 0)]
    y = state.flat()
    cur = state
    failure = None
    for n in range(1, cfg.nsteps + 1):
        try:
            y, iters = rk_step_flat(y, f, cfg.tableau, cfg.step, cfg.fp_tol, cfg.fp_maxiter, cfg.predictor)
            new = state.with_flat(y)
            extra = step_hook(cur, new) if step_hook is not None else {}
        except Exception as exc:  # noqa: BLE001 - any failure ends the run with a partial trajectory
            if raise_on_failure:
                raise
            failure = exc
            break
        records.append(StepRecord(n, n * cfg.step, new.t_phys, new, iters, **extra))
        cur = new
    return Trajectory(records, cfg, failure)


# ---------------------------------------------------------------------------
# reference solutions and error probes
# ---------------------------------------------------------------------------


def substep_reference(state: SystemState, cfg: IntegrationConfig, substeps: int = 16, fp_tol: float = 1e-15):
    """Same method with ``step / substeps`` over one step."""
    f = make_field(state, cfg.renorm)
    y = state.flat()
    h = cfg.step / substeps
    for _ in range(substeps):
        y, _ = rk_step_flat(y, f, cfg.tableau, h, fp_tol, max(cfg.fp_maxiter, 200), cfg.predictor)
    return state.with_flat(y)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def kepler_reference(state: SystemState, step: float, spec: RenormSpec) -> SystemState:
    """Exact two-body state one step ahead.

    In fictitious time the elapsed physical time ``t`` solves
    ``int_0^t dt' / s(phi_t'(state)) = step``, found by Newton's method with
    Gauss-Legendre quadrature of the integrand along the Kepler orbit.
    """
    from .kepler import inverse_s_along_orbit, propagate

    if spec.kind == "physical":
        return propagate(state, step)
    inv_s = inverse_s_along_orbit(state, spec)
    t = step * renorm_s(state, spec)
    prev = math.inf
    for _ in range(30):
        g = 0.5 * t * float(_GL_WEIGHTS @ inv_s(0.5 * t * (_GL_NODES + 1.0))) - step
        dt = g / float(inv_s([t])[0])
        t -= dt
        # quadratic convergence: stop at the roundoff floor
        if abs(dt) <= 4.0 * EPS * abs(t) or abs(dt) >= prev:
            break
        prev = abs(dt)
    return propagate(state, t)


@dataclass(eq=False)
class ErrorTable:
    """Per-step, per-body position errors (``errors[n, i]``) and the probe trajectory."""

    mode: str
    errors: np.ndarray
    velocity_errors: np.ndarray
    trajectory: Trajectory
    bounds: np.ndarray | None = None
    reference_fallbacks: int = 0

    @property
    def max_per_body(self) -> np.ndarray:
        if self.errors.shape[0] == 0:
            return np.full(self.trajectory.records[0].state.n, np.nan)
        return np.nanmax(self.errors, axis=0)

    def spike_ratio(self) -> float:
        """``max / median`` of the per-step maximum over bodies; nan without data."""
        if self.errors.shape[0] == 0:
            return math.nan
        e = np.nanmax(self.errors, axis=1)
        e = e[np.isfinite(e)]
        if e.size == 0:
            return math.nan
        return float(np.max(e) / np.median(e))

    def rows(self) -> list[list]:
        out = []
        recs = self.trajectory.records
        for n in range(self.errors.shape[0]):
            r = recs[n + 1] if self.mode == "local" else recs[n]
            for i, name in enumerate(r.state.names):
                b = "" if self.bounds is None else float(self.bounds[n, i])
                out.append([r.index, r.tau, r.t_phys, name, float(self.errors[n, i]),
                            float(self.velocity_errors[n, i]), b])
        return out


ERROR_COLUMNS = ["step", "tau", "t_phys", "body", "pos_err", "vel_err", "cert_bound"]


def _reference_kind(state: SystemState, reference: str) -> str:
    if reference == "auto":
        return "kepler" if state.n == 2 else "substep"
    if reference not in ("kepler", "substep"):
        raise InvalidParametersError("reference must be 'auto', 'kepler' or 'substep'")
    if reference == "kepler" and state.n != 2:
        raise InvalidParametersError("the Kepler reference needs two bodies")
    return reference


def error_probe(
    state: SystemState,
    cfg: IntegrationConfig,
    mode: str = "local",
    reference: str = "auto",
    certify: bool = False,
    cert_order: int = 60,
) -> ErrorTable:
    """Local or global errors along an integration.

    ``local``: each step, started from the numerical state, is compared with
    the exact (Kepler) or substepped reference over the same step.
    ``global``: the trajectory is compared with a reference at the same
    physical times (Kepler, or a substepped reference run interpolated by
    cubic Hermite splines in physical time).

    With ``certify`` each local error is paired with the majorant
    certificate of the step (renormalized kinds only; ``nan`` outside the
    certified step range).
    """
    if mode not in ("local", "global"):
        raise InvalidParametersError("mode must be 'local' or 'global'")
    ref = _reference_kind(state, reference)
    spec = cfg.renorm.freeze_energy(state)
    cfg = replace(cfg, renorm=spec)
    if mode == "local":
        hook, store = _local_hook(cfg, ref, certify, cert_order)
        traj = integrate(state, cfg, step_hook=hook)
        errs = np.array(store["pos"]) if store["pos"] else np.zeros((0, state.n))
        verrs = np.array(store["vel"]) if store["vel"] else np.zeros((0, state.n))
        bounds = np.array(store["bound"]) if certify and store["bound"] else None
        return ErrorTable("local", errs, verrs, traj, bounds, reference_fallbacks=store["fallbacks"])
    traj = integrate(state, cfg)
    t = traj.t_phys
    if ref == "kepler":
        from .kepler import propagate

        refs = [propagate(state, tt - state.t_phys) for tt in t]
        rq = np.array([r.q for r in refs])
        rv = np.array([r.v for r in refs])
    else:
        rq, rv = _global_substep_reference(state, cfg, t)
    errs = np.linalg.norm(traj.q - rq, axis=2)
    verrs = np.linalg.norm(traj.v - rv, axis=2)
    return ErrorTable("global", errs, verrs, traj)


def _local_hook(cfg: IntegrationConfig, ref: str, certify: bool, cert_order: int):
    store = {"pos": [], "vel": [], "bound": [], "fallbacks": 0}
    certifier = _Certifier(cfg, cert_order) if certify else None

    def hook(old: SystemState, new: SystemState) -> dict:
        exact = None
        if ref == "kepler":
            try:
                exact = kepler_reference(old, cfg.step, cfg.renorm)
            except InvalidParametersError:
                # a numerical state that is no longer elliptic
                store["fallbacks"] += 1
        if exact is None:
            exact = substep_reference(old, cfg)
        pe = np.linalg.norm(new.q - exact.q, axis=1)
        ve = np.linalg.norm(new.v - exact.v, axis=1)
        store["pos"].append(pe)
        store["vel"].append(ve)
        out = {"local_err": pe}
        if certifier is not None:
            b = certifier(old)
            store["bound"].append(b)
            out["cert_bound"] = b
        return out

    return hook, store


class _Certifier:
    """Per-body position certificates of one step from the majorant series."""

    def __init__(self, cfg: IntegrationConfig, K: int):
        from .majorants.bounds import model_for
        from .majorants.flow import midpoint_xi_zeta_hat, xi_zeta_series

        self.cfg = cfg
        self.K = K
        self.fixed = None
        if cfg.renorm.kind in ("original", "cheap", "pnorm"):
            model = model_for(cfg.renorm)
            self.fixed = (xi_zeta_series(K, model), midpoint_xi_zeta_hat(K, model))

    def __call__(self, state: SystemState) -> np.ndarray:
        from .majorants.bounds import BoundScalings, model_for, rk_local_error_bound
        from .majorants.flow import midpoint_xi_zeta_hat, xi_zeta_series

        n = state.n
        if self.cfg.renorm.kind == "physical":
            return np.full(n, np.nan)
        if self.fixed is None:
            model = model_for(self.cfg.renorm, state)
            flow, disc = xi_zeta_series(self.K, model), midpoint_xi_zeta_hat(self.K, model)
        else:
            flow, disc = self.fixed
        sc = BoundScalings.from_state(state, self.cfg.renorm)
        out = np.empty(n)
        for i in range(n):
            try:
                out[i] = rk_local_error_bound(sc, flow, disc, self.cfg.tableau, i, abs(self.cfg.step))[0]
            except OutOfDomainError:
                out[i] = np.nan
        return out


def _global_substep_reference(state: SystemState, cfg: IntegrationConfig, t_query: np.ndarray):
    sub = replace(cfg, step=cfg.step / 16, nsteps=cfg.nsteps * 16, fp_tol=1e-15,
                  fp_maxiter=max(cfg.fp_maxiter, 200))
    ref = integrate(state, sub, raise_on_failure=True)
    t = ref.t_phys
    q = ref.q
    v = ref.v
    acc = np.array([accelerations(r.state) for r in ref.records])
    order = np.argsort(t)
    t, q, v, acc = t[order], q[order], v[order], acc[order]
    n = state.n
    sq = CubicHermiteSpline(t, q.reshape(len(t), -1), v.reshape(len(t), -1))
    sv = CubicHermiteSpline(t, v.reshape(len(t), -1), acc.reshape(len(t), -1))
    return sq(t_query).reshape(-1, n, 3), sv(t_query).reshape(-1, n, 3)

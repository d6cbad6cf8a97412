"""Newtonian N-body vector field and time-renormalization functions.

State layout used by the integrators: a flat vector
``y = [q (n x 3), v (n x 3), t_phys]``.  Along a renormalized trajectory
``dq/dtau = s v``, ``dv/dtau = s g(q)`` and ``dt_phys/dtau = s``; the
physical kind has ``s = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidParametersError, SingularConfigurationError

# Gaussian gravitational constant squared: AU^3 / (solar mass day^2)
G_AU_DAY_MSUN = 0.01720209895**2
MIN_SEPARATION = 1e-30

KINDS = ("original", "cheap", "pnorm", "energy", "physical")


@dataclass(frozen=True, eq=False)
class SystemState:
    """Masses (as ``G m``), positions and velocities of ``n`` bodies."""

    gm: np.ndarray
    q: np.ndarray
    v: np.ndarray
    t_phys: float = 0.0
    G: float = G_AU_DAY_MSUN
    names: tuple[str, ...] = ()
    test_particles: bool = False

    def __post_init__(self):
        gm = np.array(self.gm, dtype=float).reshape(-1)
        q = np.array(self.q, dtype=float).reshape(-1, 3)
        v = np.array(self.v, dtype=float).reshape(-1, 3)
        n = len(gm)
        if n < 2:
            raise InvalidParametersError("need at least two bodies")
        if q.shape != (n, 3) or v.shape != (n, 3):
            raise InvalidParametersError(f"q and v must have shape ({n}, 3)")
        if np.any(gm < 0) or (not self.test_particles and np.any(gm == 0)):
            raise InvalidParametersError("gm must be positive (zero only in test-particle mode)")
        if not self.G > 0:
            raise InvalidParametersError("G must be positive")
        for a in (gm, q, v):
            a.setflags(write=False)
        object.__setattr__(self, "gm", gm)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "t_phys", float(self.t_phys))
        if not self.names:
            object.__setattr__(self, "names", tuple(f"body{i}" for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.gm)

    @property
    def masses(self) -> np.ndarray:
        return self.gm / self.G

    def flat(self) -> np.ndarray:
        return np.concatenate([self.q.ravel(), self.v.ravel(), [self.t_phys]])

    def with_flat(self, y: np.ndarray) -> "SystemState":
        n = self.n
        return replace(self, q=y[: 3 * n].reshape(n, 3), v=y[3 * n : 6 * n].reshape(n, 3), t_phys=float(y[-1]))


@dataclass(frozen=True)
class RenormSpec:
    """Choice of time-renormalization function.

    ``p`` and ``alpha`` matter for the ``pnorm`` and ``energy`` kinds only;
    ``E0`` is the total energy frozen at the start of a trajectory (energy
    kind only, filled in by :meth:`freeze_energy`).
    """

    kind: str = "original"
    p: int = 2
    alpha: float = 3.0
    E0: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParametersError(f"unknown renormalization kind {self.kind!r}")
        if int(self.p) != self.p or self.p < 1:
            raise InvalidParametersError("p must be a positive integer")
        if not self.alpha > 0:
            raise InvalidParametersError("alpha must be positive")

    def freeze_energy(self, state: SystemState) -> "RenormSpec":
        if self.kind != "energy" or self.E0 is not None:
            return self
        return replace(self, E0=pairwise_quantities(state).E)

    @property
    def is_physical(self) -> bool:
        return self.kind == "physical"


PHYSICAL = RenormSpec("physical")


# ---------------------------------------------------------------------------
# pairwise geometry
# ---------------------------------------------------------------------------


def _separations(q: np.ndarray):
    """``diff[i, j] = q_j - q_i`` and ``dist[i, j]``, with the guard applied."""
    diff = q[None, :, :] - q[:, None, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    n = len(q)
    iu, ju = np.triu_indices(n, 1)
    bad = dist[iu, ju] < MIN_SEPARATION
    if bad.any():
        k = int(np.argmax(bad))
        raise SingularConfigurationError(int(iu[k]), int(ju[k]), float(dist[iu[k], ju[k]]))
    np.fill_diagonal(dist, np.inf)
    return diff, dist


def accelerations(state_or_q, gm=None) -> np.ndarray:
    """``g_i = sum_{j != i} G m_j (q_j - q_i) / ||q_i - q_j||^3``, shape (n, 3)."""
    if isinstance(state_or_q, SystemState):
        q, gm = state_or_q.q, state_or_q.gm
    else:
        q = np.asarray(state_or_q, dtype=float).reshape(-1, 3)
    diff, dist = _separations(q)
    w = gm[None, :] / dist**3
    return np.einsum("ij,ijk->ik", w, diff)


@dataclass(frozen=True, eq=False)
class PairQuantities:
    dist: np.ndarray
    K: np.ndarray
    M: np.ndarray
    A: float
    U: float
    E: float
    mu: float
    nu: float
    min_gap: np.ndarray
    vnorm: np.ndarray

    @property
    def eta0(self) -> float:
        return self.mu**2 / (self.mu**2 + self.nu)


def pairwise_quantities(state: SystemState) -> PairQuantities:
    """Scalars built from pair distances: ``K_i``, ``M_ij``, ``A``, ``U``, energy, ``mu``, ``nu``."""
    _, dist = _separations(state.q)
    gm = state.gm
    n = state.n
    iu, ju = np.triu_indices(n, 1)
    inv2 = 1.0 / dist**2
    K = inv2 @ gm
    M = K[:, None] + K[None, :]
    d = dist[iu, ju]
    A = float(np.sum((gm[iu] + gm[ju]) / d**2))
    U = float(np.sum(gm[iu] * gm[ju] / d)) / state.G
    kinetic = 0.5 * float(np.sum(state.masses * np.einsum("ij,ij->i", state.v, state.v)))
    dv = np.linalg.norm(state.v[iu] - state.v[ju], axis=1)
    mu = float(np.max(dv / d))
    nu = float(np.max(M[iu, ju] / d))
    min_gap = dist.min(axis=1)
    return PairQuantities(
        dist=dist,
        K=K,
        M=M,
        A=A,
        U=U,
        E=kinetic - U,
        mu=mu,
        nu=nu,
        min_gap=min_gap,
        vnorm=np.linalg.norm(state.v, axis=1),
    )


def energy_pair_weights(masses: np.ndarray, p: int) -> np.ndarray:
    """``c (m_i^-1/2 + m_j^-1/2)^(2p)`` over pairs ``i < j``; pairs with a massless body get 0.

    ``c = 4`` for ``p <= 2`` as published; ``2^p`` beyond, where 4 no longer
    dominates the velocity bound.
    """
    m = np.asarray(masses, dtype=float)
    iu, ju = np.triu_indices(len(m), 1)
    with np.errstate(divide="ignore"):
        w = (m[iu] ** -0.5 + m[ju] ** -0.5) ** (2 * p)
    w[~np.isfinite(w)] = 0.0
    return max(4.0, 2.0**p) * w


def renorm_s(state: SystemState, spec: RenormSpec) -> float:
    """Value of the time-renormalization function ``s(q, v)`` (time units)."""
    if spec.kind == "physical":
        return 1.0
    diff, dist = _separations(state.q)
    gm = state.gm
    iu, ju = np.triu_indices(state.n, 1)
    d = dist[iu, ju]
    dv2 = np.sum((state.v[iu] - state.v[ju]) ** 2, axis=1)
    if spec.kind == "original":
        K = (1.0 / dist**2) @ gm
        S = np.sum(dv2 / d**2) + np.sum((K[iu] + K[ju]) / d)
        return float(S**-0.5)
    A = float(np.sum((gm[iu] + gm[ju]) / d**2))
    if spec.kind == "cheap":
        return float((np.sum(dv2 / d**2) + A * np.sum(1.0 / d)) ** -0.5)
    p, alpha = spec.p, spec.alpha
    pot = A**p * np.sum((alpha * d) ** -float(p))
    if spec.kind == "pnorm":
        vel = np.sum((dv2 / d**2) ** p)
    else:
        E0 = spec.E0 if spec.E0 is not None else pairwise_quantities(state).E
        U = float(np.sum(gm[iu] * gm[ju] / d)) / state.G
        if not E0 + U > 0:
            raise InvalidParametersError(f"energy renormalization needs E0 + U > 0, got {E0 + U:g}")
        vel = (E0 + U) ** p * np.sum(energy_pair_weights(state.masses, p) / d ** (2 * p))
    return float((vel + pot) ** (-1.0 / (2 * p)))


def renorm_s_batch(q: np.ndarray, v: np.ndarray, gm: np.ndarray, spec: RenormSpec, G: float) -> np.ndarray:
    """:func:`renorm_s` for a stack of configurations ``q, v`` of shape ``(m, n, 3)``."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    m, n, _ = q.shape
    if spec.kind == "physical":
        return np.ones(m)
    gm = np.asarray(gm, dtype=float)
    iu, ju = np.triu_indices(n, 1)
    d = np.linalg.norm(q[:, iu] - q[:, ju], axis=2)
    if np.any(d < MIN_SEPARATION):
        k, p = np.unravel_index(np.argmin(d), d.shape)
        raise SingularConfigurationError(int(iu[p]), int(ju[p]), float(d[k, p]))
    dv2 = np.sum((v[:, iu] - v[:, ju]) ** 2, axis=2)
    if spec.kind == "original":
        Kb = np.zeros((m, n))
        np.add.at(Kb, (slice(None), iu), gm[ju] / d**2)
        np.add.at(Kb, (slice(None), ju), gm[iu] / d**2)
        S = np.sum(dv2 / d**2, axis=1) + np.sum((Kb[:, iu] + Kb[:, ju]) / d, axis=1)
        return S**-0.5
    A = np.sum((gm[iu] + gm[ju]) / d**2, axis=1)
    if spec.kind == "cheap":
        return (np.sum(dv2 / d**2, axis=1) + A * np.sum(1.0 / d, axis=1)) ** -0.5
    p = spec.p
    pot = A**p * np.sum((spec.alpha * d) ** -float(p), axis=1)
    if spec.kind == "pnorm":
        vel = np.sum((dv2 / d**2) ** p, axis=1)
    else:
        if spec.E0 is None:
            raise InvalidParametersError("energy kind needs a frozen E0 for batch evaluation")
        U = np.sum(gm[iu] * gm[ju] / d, axis=1) / G
        vel = (spec.E0 + U) ** p * np.sum(energy_pair_weights(gm / G, p) / d ** (2 * p), axis=1)
    return (vel + pot) ** (-1.0 / (2 * p))


def rhs(state: SystemState, spec: RenormSpec) -> np.ndarray:
    """Flat derivative ``(s v, s g(q), s)`` with respect to the independent variable."""
    s = renorm_s(state, spec)
    g = accelerations(state)
    return np.concatenate([s * state.v.ravel(), s * g.ravel(), [s]])


def make_field(template: SystemState, spec: RenormSpec):
    """Return ``f(y)`` on flat vectors for the integrators."""
    n = template.n
    spec = spec.freeze_energy(template)

    def f(y: np.ndarray) -> np.ndarray:
        st = template.with_flat(y)
        return rhs(st, spec)

    # fast path avoiding dataclass construction for the common kinds
    if spec.kind in ("physical", "original", "pnorm", "cheap"):
        gm = template.gm
        iu, ju = np.triu_indices(n, 1)
        p, alpha = spec.p, spec.alpha
        kind = spec.kind

        def f(y: np.ndarray) -> np.ndarray:  # noqa: F811
            q = y[: 3 * n].reshape(n, 3)
            v = y[3 * n : 6 * n].reshape(n, 3)
            diff, dist = _separations(q)
            inv = 1.0 / dist
            g = np.einsum("ij,ijk->ik", gm[None, :] * inv**3, diff)
            if kind == "physical":
                s = 1.0
            else:
                d = dist[iu, ju]
                dv2 = np.sum((v[iu] - v[ju]) ** 2, axis=1)
                if kind == "original":
                    K = inv**2 @ gm
                    S = np.sum(dv2 / d**2) + np.sum((K[iu] + K[ju]) / d)
                    s = S**-0.5
                else:
                    A = np.sum((gm[iu] + gm[ju]) / d**2)
                    if kind == "cheap":
                        s = (np.sum(dv2 / d**2) + A * np.sum(1.0 / d)) ** -0.5
                    else:
                        S = np.sum((dv2 / d**2) ** p) + A**p * np.sum((alpha * d) ** -float(p))
                        s = S ** (-1.0 / (2 * p))
            out = np.empty_like(y)
            out[: 3 * n] = s * v.ravel()
            out[3 * n : 6 * n] = s * g.ravel()
            out[-1] = s
            return out

    return f


def reduce_to_barycenter(state: SystemState) -> SystemState:
    """Shift so that the mass-weighted mean position and velocity vanish."""
    w = state.gm / np.sum(state.gm)
    qc = w @ state.q
    vc = w @ state.v
    return replace(state, q=state.q - qc, v=state.v - vc)


def angular_momentum(state: SystemState) -> np.ndarray:
    return np.sum(state.masses[:, None] * np.cross(state.q, state.v), axis=0)


def total_energy(state: SystemState) -> float:
    return pairwise_quantities(state).E

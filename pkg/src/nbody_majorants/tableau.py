"""Butcher tableaus of Gauss-Legendre collocation methods."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from .errors import InternalConsistencyError, InvalidParametersError

MAX_STAGES = 8


@dataclass(frozen=True, eq=False)
class RKTableau:
    """Butcher tableau ``(A, b, c)`` with classical order ``order``."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    order: int
    name: str = ""

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        b = np.array(self.b, dtype=float).reshape(-1)
        c = np.array(self.c, dtype=float).reshape(-1)
        s = len(b)
        if A.shape != (s, s) or c.shape != (s,):
            raise InvalidParametersError("inconsistent tableau shapes")
        for a in (A, b, c):
            a.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def stages(self) -> int:
        return len(self.b)

    @property
    def normA(self) -> float:
        """``||A||_inf``, the maximum absolute row sum."""
        return float(np.max(np.sum(np.abs(self.A), axis=1)))

    @property
    def normb(self) -> float:
        """``||b||_inf``."""
        return float(np.max(np.abs(self.b)))

    @property
    def normb1(self) -> float:
        """``||b||_1``; equals 1 for tableaus with positive weights."""
        return float(np.sum(np.abs(self.b)))

    def symplecticity_defect(self) -> float:
        """``max |b_i a_ij + b_j a_ji - b_i b_j|``; zero for quadratic-invariant-preserving methods."""
        bA = self.b[:, None] * self.A
        return float(np.max(np.abs(bA + bA.T - np.outer(self.b, self.b))))


def _legendre_roots(s: int, dps: int) -> list:
    """Roots of ``P_s`` on ``(-1, 1)`` by Newton iteration from Chebyshev-like guesses."""
    roots = []
    for k in range(1, s + 1):
        x = mpmath.cos(mpmath.pi * (k - mpmath.mpf(1) / 4) / (s + mpmath.mpf(1) / 2))
        for _ in range(100):
            p, dp = _legendre_and_derivative(s, x)
            dx = p / dp
            x -= dx
            if abs(dx) < mpmath.mpf(10) ** (-dps + 5):
                break
        roots.append(x)
    return sorted(roots)


def _legendre_and_derivative(s: int, x):
    p0, p1 = mpmath.mpf(1), x
    if s == 0:
        return p0, mpmath.mpf(0)
    for n in range(2, s + 1):
        p0, p1 = p1, ((2 * n - 1) * x * p1 - (n - 1) * p0) / n
    dp = s * (x * p1 - p0) / (x * x - 1)
    return p1, dp


@lru_cache(maxsize=MAX_STAGES)
def gauss_tableau(stages: int, dps: int = 40) -> RKTableau:
    """Gauss-Legendre collocation tableau with ``stages`` stages (order ``2 * stages``).

    Nodes are the shifted Legendre roots; ``a_ij = int_0^{c_i} l_j`` and
    ``b_j = int_0^1 l_j`` with ``l_j`` the Lagrange basis on the nodes, all
    evaluated in ``dps``-digit arithmetic.
    """
    if int(stages) != stages or not 1 <= stages <= MAX_STAGES:
        raise InvalidParametersError(f"stages must be an integer in [1, {MAX_STAGES}], got {stages}")
    s = int(stages)
    with mpmath.workdps(dps):
        c = [(1 + x) / 2 for x in _legendre_roots(s, dps)]
        A = mpmath.matrix(s, s)
        b = []
        for j in range(s):
            # monomial coefficients of l_j, lowest degree first
            poly = [mpmath.mpf(1)]
            denom = mpmath.mpf(1)
            for m in range(s):
                if m == j:
                    continue
                poly = [mpmath.mpf(0)] + poly
                for k in range(len(poly) - 1):
                    poly[k] -= c[m] * poly[k + 1]
                denom *= c[j] - c[m]
            integral = [mpmath.mpf(0)] + [a / (k + 1) for k, a in enumerate(poly)]
            for i in range(s):
                A[i, j] = mpmath.polyval(integral[::-1], c[i]) / denom
            b.append(mpmath.polyval(integral[::-1], 1) / denom)
        tab = RKTableau(
            A=np.array([[float(A[i, j]) for j in range(s)] for i in range(s)]),
            b=np.array([float(x) for x in b]),
            c=np.array([float(x) for x in c]),
            order=2 * s,
            name="midpoint" if s == 1 else f"gauss{s}",
        )
    if np.max(np.abs(tab.A.sum(axis=1) - tab.c)) > 1e-14 or abs(tab.b.sum() - 1.0) > 1e-14:
        raise InternalConsistencyError("Gauss tableau fails row-sum or weight-sum check")
    if tab.symplecticity_defect() > 1e-14:
        raise InternalConsistencyError("Gauss tableau fails the quadratic-invariant condition")
    return tab


def midpoint_tableau() -> RKTableau:
    return gauss_tableau(1)

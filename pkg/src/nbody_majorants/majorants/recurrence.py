"""Direct order-by-order Taylor recurrences for the majorant ODEs.

This is an independent route to the coefficients computed by the
fixed-point operators in :mod:`.flow`: every intermediate quantity is a lazy
node whose ``k``-th coefficient is produced on demand from lower-order
coefficients of its inputs (automatic differentiation in Taylor mode).
"""

from __future__ import annotations

import math

import numpy as np

from ..series import TruncatedSeries
from .flow import ORIGINAL, MajorantModel


class _Node:
    def __init__(self, K: int):
        self.K = K
        self.c = np.zeros(K + 1)
        self.n = 0

    def __getitem__(self, k: int) -> float:
        while self.n <= k:
            self.c[self.n] = self._coef(self.n)
            self.n += 1
        return self.c[k]

    def _coef(self, k: int) -> float:  # pragma: no cover - abstract
        raise NotImplementedError

    def __add__(self, other):
        return _Lin(self, _as_node(other, self.K), 1.0, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        return _Lin(self, _as_node(other, self.K), 1.0, -1.0)

    def __rsub__(self, other):
        return _Lin(_as_node(other, self.K), self, 1.0, -1.0)

    def __mul__(self, other):
        if isinstance(other, _Node):
            return _Mul(self, other)
        return _Lin(self, _Const(0.0, self.K), float(other), 0.0)

    __rmul__ = __mul__

    def __pow__(self, nu):
        return _Pow(self, float(nu))


def _as_node(x, K):
    return x if isinstance(x, _Node) else _Const(float(x), K)


class _Const(_Node):
    def __init__(self, value: float, K: int):
        super().__init__(K)
        self.value = value

    def _coef(self, k):
        return self.value if k == 0 else 0.0


class _Lin(_Node):
    def __init__(self, a, b, ca, cb):
        super().__init__(a.K)
        self.a, self.b, self.ca, self.cb = a, b, ca, cb

    def _coef(self, k):
        return self.ca * self.a[k] + self.cb * self.b[k]


class _Mul(_Node):
    def __init__(self, a, b):
        super().__init__(a.K)
        self.a, self.b = a, b

    def _coef(self, k):
        return sum(self.a[j] * self.b[k - j] for j in range(k + 1))


class _Pow(_Node):
    # p' f = nu p f'  =>  k f_0 p_k = sum_{j<k} ((k-j) nu - j) f_{k-j} p_j
    def __init__(self, a, nu):
        super().__init__(a.K)
        self.a, self.nu = a, nu

    def _coef(self, k):
        f0 = self.a[0]
        if k == 0:
            return f0**self.nu
        s = sum(((k - j) * self.nu - j) * self.a[k - j] * self.c[j] for j in range(k))
        return s / (k * f0)


class _Max(_Node):
    def __init__(self, a, b):
        super().__init__(a.K)
        self.a, self.b = a, b

    def _coef(self, k):
        return max(self.a[k], self.b[k])


class _Integral(_Node):
    """``c0 + int_0^t`` of an integrand bound after construction (closes the ODE loop)."""

    def __init__(self, c0: float, K: int, scale: float = 1.0, shift_only: bool = False):
        super().__init__(K)
        self.c0 = c0
        self.scale = scale
        self.shift_only = shift_only
        self.integrand = None

    def _coef(self, k):
        if k == 0:
            return self.c0
        if self.shift_only:
            return self.scale * self.integrand[k - 1]
        return self.scale * self.integrand[k - 1] / k


def _chi(xi, zeta, model: MajorantModel, K: int):
    D = 2.0 - xi * xi
    if model.is_original:
        return (D ** -1.0) * (2.0 * zeta + zeta * zeta + D**-0.5)
    p = model.p
    Dp = D ** float(-p)
    Dpot = D ** (-1.5 * p)
    if model.kappa is not None:
        e = 1.0 + model.kappa * (D**-0.5 - 1.0)
        return _Max((e ** float(p)) * Dp, Dpot)
    w = 2.0 * zeta + model.alpha * zeta * zeta
    vel = _Const(0.0, K)
    pot = _Const(0.0, K)
    wk = _Const(1.0, K)
    for k in range(p + 1):
        c = math.comb(p, k)
        vel = vel + (c * (p - k) / p) * wk
        pot = pot + (c * k / p * model.alpha**p) * wk
        wk = wk * w
    return _Max(Dp * vel, Dp * pot + Dpot)


def _system(K: int, model: MajorantModel, hat: bool):
    scale = 0.5 if hat else 1.0
    xi = _Integral(1.0, K, scale, shift_only=hat)
    zeta = _Integral(0.0, K, scale, shift_only=hat)
    F = (2.0 - _chi(xi, zeta, model, K)) ** model.exponent
    xi.integrand = F * (1.0 + model.alpha * zeta)
    zeta.integrand = F * xi * (2.0 - xi * xi) ** -1.5
    for k in range(K + 1):
        xi[k]
        zeta[k]
    return TruncatedSeries(xi.c.copy()), TruncatedSeries(zeta.c.copy())


def xi_zeta_recurrence(K: int, model: MajorantModel = ORIGINAL):
    return _system(K, model, hat=False)


def xi_zeta_hat_recurrence(K: int, model: MajorantModel = ORIGINAL):
    return _system(K, model, hat=True)


def rho_recurrence(mu0: float, nu0: float, K: int) -> TruncatedSeries:
    # rho = 1 + mu0 t + nu0 int int rho (2 - rho^2)^(-3/2), written as a first-order pair
    rho = _Integral(1.0, K)
    drho = _Integral(mu0, K)
    rho.integrand = drho
    drho.integrand = nu0 * (rho * (2.0 - rho * rho) ** -1.5)
    for k in range(K + 1):
        rho[k]
    return TruncatedSeries(rho.c.copy())


def lambda_recurrence(eta0: float, K: int) -> TruncatedSeries:
    lam = _Integral(0.0, K)
    dlam = _Integral(math.sqrt(eta0), K)
    lam.integrand = dlam
    dlam.integrand = (1.0 - eta0) * ((1.0 + lam) * (1.0 - 2.0 * lam - lam * lam) ** -1.5)
    for k in range(K + 1):
        lam[k]
    return TruncatedSeries(lam.c.copy())

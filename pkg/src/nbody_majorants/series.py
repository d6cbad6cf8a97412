"""Truncated power series with real or vector coefficients.

Every series carries its truncation order ``K``; coefficients live in a
read-only numpy array of shape ``(K + 1,)`` (scalar) or ``(K + 1, d)``
(vector).  Arithmetic never extends past ``K``.

The partial order ``f <| fbar`` (``f`` is majored by ``fbar``) is checked by
:func:`dominates`.
"""

from __future__ import annotations

import json
import math
from typing import Iterable, Sequence

import numpy as np

DEFAULT_ORDER = 60
DEFAULT_REL_SLACK = 1e-12


class SeriesError(ValueError):
    """Base class for series errors."""


class OrderMismatchError(SeriesError):
    pass


class NormalizationError(SeriesError):
    pass


class DimensionMismatchError(SeriesError):
    pass


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


class TruncatedSeries:
    """Scalar power series ``c_0 + c_1 t + ... + c_K t^K``."""

    __slots__ = ("_c",)
    # make numpy scalars defer to the reflected operators
    __array_ufunc__ = None

    def __init__(self, coeffs: Iterable[float], order: int | None = None):
        c = np.asarray(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs, dtype=float)
        if c.ndim != 1:
            raise SeriesError("scalar series needs a 1-d coefficient array")
        if order is not None:
            if len(c) > order + 1:
                c = c[: order + 1]
            elif len(c) < order + 1:
                c = np.concatenate([c, np.zeros(order + 1 - len(c))])
        if len(c) == 0:
            raise SeriesError("empty series")
        self._c = _frozen(c)

    @classmethod
    def constant(cls, value: float, order: int) -> "TruncatedSeries":
        return cls([value], order)

    @classmethod
    def variable(cls, order: int, scale: float = 1.0) -> "TruncatedSeries":
        """The series ``scale * t``."""
        return cls([0.0, scale], order)

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def order(self) -> int:
        return len(self._c) - 1

    def __len__(self) -> int:
        return len(self._c)

    def __getitem__(self, k):
        return self._c[k]

    def __repr__(self) -> str:
        head = ", ".join(f"{x:.6g}" for x in self._c[:6])
        more = ", ..." if len(self._c) > 6 else ""
        return f"TruncatedSeries([{head}{more}], order={self.order})"

    def _coerce(self, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            _check_orders(self, other)
            return other
        if np.isscalar(other):
            return TruncatedSeries.constant(float(other), self.order)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return TruncatedSeries(self._c + other._c)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(-self._c)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return TruncatedSeries(self._c - other._c)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return TruncatedSeries(other._c - self._c)

    def __mul__(self, other):
        if isinstance(other, VectorSeries):
            return series_mul(other, self)
        if np.isscalar(other):
            return TruncatedSeries(self._c * float(other))
        if isinstance(other, TruncatedSeries):
            return series_mul(self, other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if np.isscalar(other):
            return TruncatedSeries(self._c / float(other))
        return NotImplemented

    def __pow__(self, nu):
        return series_pow(self, nu)

    def __call__(self, t: float) -> float:
        """Evaluate the truncated polynomial at ``t`` (Horner)."""
        acc = 0.0
        for c in self._c[::-1]:
            acc = acc * t + c
        return acc

    def shift(self, m: int = 1) -> "TruncatedSeries":
        """Multiply by ``t**m`` and truncate."""
        c = np.zeros_like(self._c)
        if m < len(c):
            c[m:] = self._c[: len(c) - m]
        return TruncatedSeries(c)

    def rescale(self, a: float) -> "TruncatedSeries":
        """The series of ``f(a t)``."""
        return TruncatedSeries(self._c * a ** np.arange(len(self._c)))

    def truncate(self, order: int) -> "TruncatedSeries":
        return TruncatedSeries(self._c, order)

    def to_json(self) -> str:
        return json.dumps([float(x) for x in self._c])

    @classmethod
    def from_json(cls, text: str) -> "TruncatedSeries":
        data = json.loads(text)
        if not isinstance(data, list):
            raise SeriesError("expected a JSON array of coefficients")
        return cls([float(x) for x in data])

    def csv_rows(self) -> list[tuple[int, float]]:
        return [(k, float(c)) for k, c in enumerate(self._c)]


class VectorSeries:
    """Power series with coefficients in R^d; ``coeffs`` has shape (K+1, d)."""

    __slots__ = ("_c",)
    __array_ufunc__ = None

    def __init__(self, coeffs, order: int | None = None):
        c = np.asarray(coeffs, dtype=float)
        if c.ndim != 2:
            raise SeriesError("vector series needs a (K+1, d) coefficient array")
        if order is not None:
            if c.shape[0] > order + 1:
                c = c[: order + 1]
            elif c.shape[0] < order + 1:
                c = np.vstack([c, np.zeros((order + 1 - c.shape[0], c.shape[1]))])
        self._c = _frozen(c)

    @classmethod
    def constant(cls, vec: Sequence[float], order: int) -> "VectorSeries":
        vec = np.asarray(vec, dtype=float)
        c = np.zeros((order + 1, vec.size))
        c[0] = vec
        return cls(c)

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def order(self) -> int:
        return self._c.shape[0] - 1

    @property
    def dim(self) -> int:
        return self._c.shape[1]

    def __len__(self) -> int:
        return self._c.shape[0]

    def __getitem__(self, k):
        return self._c[k]

    def __repr__(self) -> str:
        return f"VectorSeries(dim={self.dim}, order={self.order})"

    def _check(self, other: "VectorSeries") -> None:
        _check_orders(self, other)
        if other.dim != self.dim:
            raise DimensionMismatchError(f"dimensions {self.dim} and {other.dim} differ")

    def __add__(self, other):
        if isinstance(other, VectorSeries):
            self._check(other)
            return VectorSeries(self._c + other._c)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, VectorSeries):
            self._check(other)
            return VectorSeries(self._c - other._c)
        return NotImplemented

    def __neg__(self):
        return VectorSeries(-self._c)

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return series_mul(self, other)
        if np.isscalar(other):
            return VectorSeries(self._c * float(other))
        return NotImplemented

    __rmul__ = __mul__

    def __call__(self, t: float) -> np.ndarray:
        acc = np.zeros(self.dim)
        for c in self._c[::-1]:
            acc = acc * t + c
        return acc

    def shift(self, m: int = 1) -> "VectorSeries":
        c = np.zeros_like(self._c)
        if m < c.shape[0]:
            c[m:] = self._c[: c.shape[0] - m]
        return VectorSeries(c)

    def norms(self) -> np.ndarray:
        """Euclidean norm of each coefficient vector."""
        return np.linalg.norm(self._c, axis=1)

    def component(self, j: int) -> TruncatedSeries:
        return TruncatedSeries(self._c[:, j])

    def to_json(self) -> str:
        return json.dumps(self._c.tolist())


def _check_orders(a, b) -> None:
    if a.order != b.order:
        raise OrderMismatchError(f"orders {a.order} and {b.order} differ")


def series_mul(a, b: TruncatedSeries):
    """Cauchy product truncated at the common order.

    ``a`` may be scalar or vector valued; ``b`` is scalar.
    """
    if not isinstance(b, TruncatedSeries):
        raise TypeError("second factor must be a TruncatedSeries")
    _check_orders(a, b)
    n = len(b)
    if isinstance(a, TruncatedSeries):
        return TruncatedSeries(np.convolve(a.coeffs, b.coeffs)[:n])
    if isinstance(a, VectorSeries):
        out = np.empty_like(a.coeffs)
        for j in range(a.dim):
            out[:, j] = np.convolve(a.coeffs[:, j], b.coeffs)[:n]
        return VectorSeries(out)
    raise TypeError(f"cannot multiply {type(a).__name__}")


def series_pow(f: TruncatedSeries, nu: float) -> TruncatedSeries:
    """``f**nu`` for a series with constant term exactly 1.

    Uses ``p_k = (1/k) sum_{j<k} ((k - j) nu - j) f_{k-j} p_j`` with ``p_0 = 1``.
    """
    c = f.coeffs
    if c[0] != 1.0:
        raise NormalizationError(f"series_pow needs f_0 == 1, got {c[0]!r}")
    n = len(c)
    p = np.zeros(n)
    p[0] = 1.0
    for k in range(1, n):
        j = np.arange(k)
        p[k] = np.dot(((k - j) * nu - j) * c[k - j], p[:k]) / k
    return TruncatedSeries(p)


def series_powc(f: TruncatedSeries, nu: float) -> TruncatedSeries:
    """``f**nu`` for any series with positive constant term."""
    f0 = f.coeffs[0]
    if not f0 > 0:
        raise NormalizationError(f"constant term must be positive, got {f0!r}")
    return series_pow(TruncatedSeries(f.coeffs / f0), nu) * f0**nu


def derivative(f):
    """Term-wise derivative, zero-padded back to order K."""
    c = f.coeffs
    k = np.arange(1, len(c))
    d = np.zeros_like(c)
    if c.ndim == 1:
        d[:-1] = k * c[1:]
        return TruncatedSeries(d)
    d[:-1] = k[:, None] * c[1:]
    return VectorSeries(d)


def antiderivative(f):
    """Integral from 0; coefficient ``k`` is ``f_{k-1} / k``. The top term of ``f`` drops out."""
    c = f.coeffs
    k = np.arange(1, len(c))
    d = np.zeros_like(c)
    if c.ndim == 1:
        d[1:] = c[:-1] / k
        return TruncatedSeries(d)
    d[1:] = c[:-1] / k[:, None]
    return VectorSeries(d)


def series_calculus(f, which: str):
    if which == "derivative":
        return derivative(f)
    if which == "antiderivative":
        return antiderivative(f)
    raise ValueError(f"unknown operation {which!r}")


def inner(f: VectorSeries, g: VectorSeries) -> TruncatedSeries:
    """Series of ``<f, g>``; with ``g = f`` the series of ``||f||^2``."""
    if f.dim != g.dim:
        raise DimensionMismatchError(f"dimensions {f.dim} and {g.dim} differ")
    _check_orders(f, g)
    n = len(f)
    out = np.zeros(n)
    for j in range(f.dim):
        out += np.convolve(f.coeffs[:, j], g.coeffs[:, j])[:n]
    return TruncatedSeries(out)


vec_norm_sq_series = inner


def coefficient_norms(f) -> np.ndarray:
    c = f.coeffs
    return np.abs(c) if c.ndim == 1 else np.linalg.norm(c, axis=1)


def domination_margin(f, fbar: TruncatedSeries, rel_slack: float = DEFAULT_REL_SLACK) -> np.ndarray:
    """Per-coefficient ``fbar_k + slack_k - ||f_k||``; negative entries are violations."""
    _check_orders(f, fbar)
    b = fbar.coeffs
    slack = rel_slack * np.maximum(1.0, np.abs(b))
    return b + slack - coefficient_norms(f)


def dominates(f, fbar: TruncatedSeries, rel_slack: float = DEFAULT_REL_SLACK) -> bool:
    """True iff ``||f_k|| <= fbar_k + slack`` for every ``k <= K``.

    The slack is ``rel_slack * max(1, fbar_k)``.
    """
    return bool(np.all(domination_margin(f, fbar, rel_slack) >= 0.0))


def coefmax(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    """Coefficient-wise maximum; majors ``x a + y b`` for weights ``x, y >= 0`` with ``x + y = 1``."""
    _check_orders(a, b)
    return TruncatedSeries(np.maximum(a.coeffs, b.coeffs))


def evaluate_tail(coeffs: np.ndarray, t: float, start: int = 0) -> tuple[float, float]:
    """Sum ``coeffs[k] t**k`` for ``k >= start``, raw and with a geometric tail.

    Coefficients must be nonnegative.  The tail estimate multiplies the last
    retained term by ``r / (1 - r)`` where ``r = |t| * max(last five
    coefficient ratios)``; it is infinite when ``r >= 1``.
    """
    c = np.asarray(coeffs, dtype=float)
    t = abs(float(t))
    k = np.arange(len(c))
    terms = c[start:] * t ** k[start:]
    raw = float(terms.sum())
    tail_c = c[-6:]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = tail_c[1:] / tail_c[:-1]
    ratios = ratios[np.isfinite(ratios)]
    if len(ratios) == 0 or t == 0.0:
        return raw, raw
    r = t * float(ratios.max())
    if r >= 1.0:
        return raw, math.inf
    last = float(terms[-1]) if len(terms) else 0.0
    return raw, raw + last * r / (1.0 - r)

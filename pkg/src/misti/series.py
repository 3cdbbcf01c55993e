"""Truncated multivariate power series under total-degree truncation.

This is the generating-function engine: series hold joint pgfs and their
logarithms, with all coefficients of total degree > maxdeg identically zero.
For a series built from exact pmf entries, the coefficients of its log up to
total degree D depend only on the (exact) pgf coefficients up to degree D,
so low-degree log coefficients carry no truncation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.signal import convolve

__all__ = [
    "TruncSeries",
    "ts_mul",
    "ts_exp",
    "ts_log",
    "ts_from_joint_pmf",
    "ts_eval",
]


@lru_cache(maxsize=None)
def _degrees(nvars, maxdeg):
    deg = np.indices((maxdeg + 1,) * nvars).sum(axis=0)
    deg.setflags(write=False)
    return deg


@dataclass(frozen=True, eq=False)
class TruncSeries:
    """Dense coefficient array over {0..maxdeg}^nvars, masked to total degree <= maxdeg."""

    nvars: int
    maxdeg: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.nvars < 1 or self.maxdeg < 0:
            raise ValueError("need nvars >= 1 and maxdeg >= 0")
        shape = (self.maxdeg + 1,) * self.nvars
        given = np.asarray(self.coeffs, dtype=float)
        if given.shape != shape:
            raise ValueError(f"coefficients must have shape {shape}, got {given.shape}")
        c = np.where(_degrees(self.nvars, self.maxdeg) <= self.maxdeg, given, 0.0)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, nvars, maxdeg):
        return cls(nvars, maxdeg, np.zeros((maxdeg + 1,) * nvars))

    @classmethod
    def const(cls, nvars, maxdeg, value):
        c = np.zeros((maxdeg + 1,) * nvars)
        c[(0,) * nvars] = value
        return cls(nvars, maxdeg, c)

    @classmethod
    def from_terms(cls, nvars, maxdeg, terms):
        """Series with the given {multi-index: coefficient} entries."""
        c = np.zeros((maxdeg + 1,) * nvars)
        for idx, val in dict(terms).items():
            idx = (idx,) if np.isscalar(idx) else tuple(idx)
            if len(idx) != nvars:
                raise ValueError(f"index {idx} has wrong arity for {nvars} variables")
            if sum(idx) > maxdeg:
                raise ValueError(f"index {idx} exceeds total degree {maxdeg}")
            c[idx] = val
        return cls(nvars, maxdeg, c)

    def coeff(self, idx):
        idx = (idx,) if np.isscalar(idx) else tuple(idx)
        return float(self.coeffs[idx])

    def allclose(self, other, tol=1e-12):
        return (
            self.nvars == other.nvars
            and self.maxdeg == other.maxdeg
            and bool(np.max(np.abs(self.coeffs - other.coeffs)) <= tol)
        )

    def __add__(self, other):
        other = _coerce(other, self)
        _check_shapes(self, other)
        return TruncSeries(self.nvars, self.maxdeg, self.coeffs + other.coeffs)

    def __sub__(self, other):
        other = _coerce(other, self)
        _check_shapes(self, other)
        return TruncSeries(self.nvars, self.maxdeg, self.coeffs - other.coeffs)

    def __mul__(self, other):
        if np.isscalar(other):
            return TruncSeries(self.nvars, self.maxdeg, self.coeffs * other)
        return ts_mul(self, other)

    __rmul__ = __mul__


def _coerce(x, like):
    return TruncSeries.const(like.nvars, like.maxdeg, x) if np.isscalar(x) else x


def _check_shapes(a, b):
    if (a.nvars, a.maxdeg) != (b.nvars, b.maxdeg):
        raise ValueError(
            f"shape mismatch: ({a.nvars},{a.maxdeg}) vs ({b.nvars},{b.maxdeg})"
        )


def _truncate(full, nvars, maxdeg):
    return full[(slice(0, maxdeg + 1),) * nvars]


def ts_mul(a, b):
    """Cauchy product truncated at the common total degree."""
    _check_shapes(a, b)
    full = convolve(a.coeffs, b.coeffs, mode="full", method="direct")
    return TruncSeries(a.nvars, a.maxdeg, _truncate(full, a.nvars, a.maxdeg))


def ts_exp(a):
    """Series exponential via the homogeneous-degree recursion.

    With E the Euler operator (sum_i x_i d/dx_i), b = exp(a) satisfies
    E b = (E a) b, so the degree-h part of b follows from lower degrees.
    """
    deg = _degrees(a.nvars, a.maxdeg)
    ea = a.coeffs * deg
    out = np.zeros_like(a.coeffs)
    origin = (0,) * a.nvars
    out[origin] = math.exp(a.coeffs[origin])
    for h in range(1, a.maxdeg + 1):
        conv = _truncate(convolve(ea, out, mode="full", method="direct"), a.nvars, a.maxdeg)
        sel = deg == h
        out[sel] = conv[sel] / h
    return TruncSeries(a.nvars, a.maxdeg, out)


def ts_log(a):
    """Series logarithm, inverse of ts_exp; needs a positive constant term."""
    origin = (0,) * a.nvars
    a0 = a.coeffs[origin]
    if not a0 > 0.0:
        raise ValueError(f"log needs a positive constant term, got {a0}")
    deg = _degrees(a.nvars, a.maxdeg)
    out = np.zeros_like(a.coeffs)
    out[origin] = math.log(a0)
    for h in range(1, a.maxdeg + 1):
        eb = out * deg
        conv = _truncate(convolve(eb, a.coeffs, mode="full", method="direct"), a.nvars, a.maxdeg)
        sel = deg == h
        out[sel] = (h * a.coeffs[sel] - conv[sel]) / (h * a0)
    return TruncSeries(a.nvars, a.maxdeg, out)


def ts_from_joint_pmf(pmf, maxdeg=None):
    """Generating-function series of a joint table: coefficient at x is P(x).

    By default the degree bound is large enough (nvars * k) to keep every
    table entry; a smaller ``maxdeg`` keeps only entries of total degree
    <= maxdeg, which is all the log-coefficient analysis up to that degree
    needs.
    """
    n = pmf.ntimes
    d = n * pmf.k if maxdeg is None else maxdeg
    arr = np.zeros((d + 1,) * n)
    m = min(d, pmf.k)
    block = (slice(0, m + 1),) * n
    arr[block] = pmf.table[block]
    return TruncSeries(n, d, arr)


def ts_eval(a, point):
    """Evaluate the series at a point of [0,1]^nvars (plain Horner per axis)."""
    point = np.atleast_1d(np.asarray(point, dtype=float))
    if point.shape != (a.nvars,):
        raise ValueError(f"point must have {a.nvars} coordinates, got {point.shape}")
    arr = a.coeffs
    for x in point[::-1]:
        arr = npoly.polyval(x, np.moveaxis(arr, -1, 0))
    return float(arr)

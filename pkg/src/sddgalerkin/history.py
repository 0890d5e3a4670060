"""History segments u_t on [t - r, t]: storage with dense output, plus delay evaluation."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfigurationError, OrderingError, OutOfRangeError
from .model import DelaySpec
from .spectral import Basis, Domain, h1_norm, lq_norm, synthesize

# slopes use 4 nodes; keep two such stencils behind the oldest needed time
STENCIL = 4
KEEPOUT = 2 * STENCIL


@dataclass(frozen=True, eq=False)
class InitialSegment:
    """phi on [-r, 0] sampled at ``thetas``; ``func`` (optional) gives exact values anywhere."""

    thetas: np.ndarray
    coeffs: np.ndarray
    func: object = None

    @property
    def r(self):
        return max(0.0, float(-self.thetas[0]))

    @property
    def modes(self):
        return self.coeffs.shape[1]

    @staticmethod
    def grid(r, dt):
        steps = int(round(r / dt))
        return (np.arange(steps + 1) - steps) * dt

    @classmethod
    def constant(cls, a, r, dt):
        a = np.asarray(a, dtype=float)
        thetas = cls.grid(r, dt)
        return cls(thetas, np.tile(a, (thetas.size, 1)), _ConstantProfile(a.copy()))

    @classmethod
    def from_function(cls, func, r, dt):
        thetas = cls.grid(r, dt)
        return cls(thetas, np.array([func(th) for th in thetas], dtype=float), func)

    def at(self, theta):
        """phi(theta) without interpolation: exact via ``func`` or a stored node."""
        if self.func is not None:
            return np.asarray(self.func(theta), dtype=float)
        i = int(np.argmin(np.abs(self.thetas - theta)))
        if abs(self.thetas[i] - theta) > 1e-9 * max(1.0, abs(theta)):
            raise OutOfRangeError(f"theta={theta} is not a stored node and the segment has no exact form")
        return self.coeffs[i]

    def scaled(self, factor):
        func = None if self.func is None else _ScaledProfile(self.func, factor)
        return InitialSegment(self.thetas, self.coeffs * factor, func)


@dataclass(frozen=True, eq=False)
class _ConstantProfile:
    a: np.ndarray

    def __call__(self, theta):
        return self.a


@dataclass(frozen=True, eq=False)
class _ScaledProfile:
    base: object
    factor: float

    def __call__(self, theta):
        return self.factor * np.asarray(self.base(theta))


class HistoryBuffer:
    """Time-ordered (t, coefficients) pairs with pruning to the lag window."""

    def __init__(self, r, modes):
        if r < 0:
            raise InvalidConfigurationError("max lag must be >= 0")
        self.r = float(r)
        self.modes = int(modes)
        self._t = []
        self._a = []

    @classmethod
    def from_segment(cls, segment: InitialSegment, t0=0.0, r=None):
        buf = cls(segment.r if r is None else r, segment.modes)
        for th, a in zip(segment.thetas, segment.coeffs):
            buf.push(t0 + th, a)
        return buf

    def __len__(self):
        return len(self._t)

    @property
    def times(self):
        return np.array(self._t)

    @property
    def values(self):
        return np.array(self._a)

    @property
    def t_now(self):
        return self._t[-1]

    @property
    def t_min(self):
        return self._t[0]

    def push(self, t, field, prune=True):
        t = float(t)
        if self._t and not t > self._t[-1]:
            raise OrderingError(f"push at t={t} not after last stored time {self._t[-1]}")
        a = np.array(field, dtype=float)
        if a.shape != (self.modes,):
            raise InvalidConfigurationError(f"field shape {a.shape} does not match buffer modes {self.modes}")
        self._t.append(t)
        self._a.append(a)
        if prune:
            self._prune()
        return self

    def pop(self):
        """Drop the newest entry (used for predictor look-ahead)."""
        self._t.pop()
        return self._a.pop()

    def _prune(self):
        cut = bisect.bisect_left(self._t, self._t[-1] - self.r - 1e-12 * max(1.0, abs(self._t[-1])))
        drop = cut - KEEPOUT
        # amortise the list copies
        if drop > 256:
            del self._t[:drop]
            del self._a[:drop]

    def _locate(self, t_star):
        """(i, None) when t_star is a node (to round-off), else the bracketing pair."""
        t = self._t
        n = len(t)
        spacing = (t[-1] - t[0]) / (n - 1) if n > 1 else 1.0
        tol = 1e-9 * spacing
        i = bisect.bisect_left(t, t_star)
        for k in (i - 1, i):
            if 0 <= k < n and abs(t[k] - t_star) <= tol:
                return k, None
        if i == 0 or i == n:
            raise OutOfRangeError(f"t={t_star} outside stored span [{t[0]}, {t[-1]}]")
        return i - 1, i

    def _slope(self, i):
        """Derivative at node i from the cubic through 4 nearby nodes (exact for cubics)."""
        n = len(self._t)
        if n == 1:
            return np.zeros(self.modes)
        lo = min(max(i - 1, 0), max(n - STENCIL, 0))
        idx = range(lo, min(lo + STENCIL, n))
        ts = [self._t[k] for k in idx]
        x = self._t[i]
        out = np.zeros(self.modes)
        # derivative of the Lagrange basis polynomials at x
        for m, tm in zip(idx, ts):
            d = 0.0
            denom = 1.0
            for tk in ts:
                if tk != tm:
                    denom *= tm - tk
            for tl in ts:
                if tl == tm:
                    continue
                prod = 1.0
                for tk in ts:
                    if tk != tm and tk != tl:
                        prod *= x - tk
                d += prod
            out += (d / denom) * self._a[m]
        return out

    def sample(self, t_star):
        i, j = self._locate(float(t_star))
        if j is None:
            return self._a[i]
        t0, t1 = self._t[i], self._t[j]
        h = t1 - t0
        s = (t_star - t0) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return h00 * self._a[i] + h01 * self._a[j] + h * (h10 * self._slope(i) + h11 * self._slope(j))

    def segment(self, t, r=None):
        """Stored nodes in [t - r, t] as (times, values)."""
        r = self.r if r is None else r
        tol = 1e-9 * max(1.0, abs(t))
        lo = bisect.bisect_left(self._t, t - r - tol)
        hi = bisect.bisect_right(self._t, t + tol)
        return np.array(self._t[lo:hi]), np.array(self._a[lo:hi])

    def copy(self):
        new = HistoryBuffer(self.r, self.modes)
        new._t = list(self._t)
        new._a = [a.copy() for a in self._a]
        return new


def sample(buffer: HistoryBuffer, t_star) -> np.ndarray:
    return buffer.sample(t_star)


@dataclass(frozen=True)
class SegmentNorms:
    c_v1: float
    linf_lq: float


def segment_norms(buffer: HistoryBuffer, t, q, basis: Basis, domain: Domain) -> SegmentNorms:
    """Maxima of ||.||_1 and |.|_q over stored nodes (and midpoints) of [t - r, t]."""
    times, values = buffer.segment(t)
    if times.size == 0:
        raise OutOfRangeError(f"no stored nodes in [{t - buffer.r}, {t}]")
    if buffer.r > 0 and (times[0] > t - buffer.r + 1e-9 * max(1.0, abs(t)) or times[-1] < t - 1e-9 * max(1.0, abs(t))):
        raise OutOfRangeError(f"segment [{t - buffer.r}, {t}] not covered by the buffer")
    if times.size > 1:
        mids = [buffer.sample(0.5 * (a + b)) for a, b in zip(times[:-1], times[1:])]
        values = np.vstack([values, np.array(mids)])
    return SegmentNorms(
        c_v1=float(h1_norm(values, basis).max()),
        linf_lq=float(lq_norm(synthesize(values, basis), domain, q).max()),
    )


def _logistic(z):
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def raw_delay(spec: DelaySpec, t, sigma, current, basis: Basis | None = None):
    """Unclamped functional value given the current state u(t) = phi(0)."""
    if spec.kind == "constant":
        return spec.r if spec.value is None else float(spec.value)
    if spec.kind == "norm-driven":
        return spec.r / (1.0 + float(np.dot(current, current)))
    if basis is None:
        raise InvalidConfigurationError("pointwise-driven delay needs the basis for point evaluation")
    x_c = 0.5 * basis.length if spec.x_c is None else spec.x_c
    value = float(basis.point_values(x_c) @ current)
    return spec.r * _logistic(spec.kappa * value)


def eval_delay(spec: DelaySpec, t, sigma, buffer: HistoryBuffer, basis: Basis | None = None):
    """Lag tau(t + sigma, u_t) clamped into [0, r]; returns ``(tau, clamped)``.

    Catalog functionals only read the current instant phi(0) = u(t).
    """
    current = buffer.sample(t) if spec.kind != "constant" else None
    tau = raw_delay(spec, t, sigma, current, basis)
    if not math.isfinite(tau):
        return spec.r, True
    if tau < 0.0:
        return 0.0, True
    if tau > spec.r:
        return spec.r, True
    return tau, False

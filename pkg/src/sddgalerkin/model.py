"""Reaction terms and delay functionals, with the hypothesis checks they must pass.

Component functions are small frozen dataclasses so a ModelSpec pickles cleanly
into worker processes.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import (
    HypothesisViolationError,
    InvalidConfigurationError,
    InvalidParameterError,
    NumericOverflowError,
)

# --- reaction terms f -----------------------------------------------------


@dataclass(frozen=True)
class Zero:
    """Identically zero term, usable in any reaction or forcing slot."""

    def __call__(self, *args):
        return np.zeros_like(np.asarray(args[-1], dtype=float))


@dataclass(frozen=True)
class Cubic:
    """f(s) = -lam s^3 + mu s."""

    lam: float = 1.0
    mu: float = 0.0

    def __call__(self, s):
        return (-self.lam * s * s + self.mu) * s


@dataclass(frozen=True)
class Linear:
    """f(s) = -lam s."""

    lam: float = 1.0

    def __call__(self, s):
        return -self.lam * s


# --- delayed terms g ------------------------------------------------------


@dataclass(frozen=True)
class SineCoupling:
    b: float = 0.5

    def __call__(self, v):
        return self.b * np.sin(v)


@dataclass(frozen=True)
class RationalCoupling:
    """g(v) = b v / (1 + v^2)."""

    b: float = 0.5

    def __call__(self, v):
        return self.b * v / (1.0 + v * v)


# --- forcing h ------------------------------------------------------------


@dataclass(frozen=True)
class PeriodicForcing:
    """h(t, x) = c sin(omega t) sin(pi x / length)."""

    c: float = 1.0
    omega: float = 2 * math.pi
    length: float = math.pi

    def __call__(self, t, x):
        return self.c * math.sin(self.omega * t) * np.sin(math.pi * np.asarray(x) / self.length)

    @property
    def sup(self):
        return abs(self.c)


@dataclass(frozen=True)
class ShiftedForcing:
    """h(t + shift, x) for a wrapped forcing."""

    base: object
    shift: float

    def __call__(self, t, x):
        return self.base(t + self.shift, x)

    @property
    def sup(self):
        return getattr(self.base, "sup", float("nan"))


# --- delay ----------------------------------------------------------------

DELAY_KINDS = ("constant", "norm-driven", "pointwise-driven")


@dataclass(frozen=True)
class DelaySpec:
    """Lag functional tau(t, u_t) with values forced into [0, r].

    constant:          tau = value
    norm-driven:       tau = r / (1 + |u(t)|_2^2)
    pointwise-driven:  tau = r * logistic(kappa * u(t)(x_c))
    """

    kind: str = "constant"
    r: float = 0.0
    value: float | None = None
    kappa: float = 1.0
    x_c: float | None = None

    def __post_init__(self):
        if self.kind not in DELAY_KINDS:
            raise InvalidConfigurationError(f"unknown delay kind {self.kind!r}; expected one of {DELAY_KINDS}")
        if not (self.r >= 0 and math.isfinite(self.r)):
            raise InvalidConfigurationError(f"max lag r must be finite and >= 0, got {self.r}")

    @property
    def constant_value(self):
        v = self.r if self.value is None else self.value
        return min(max(v, 0.0), self.r)


# --- model ----------------------------------------------------------------


@dataclass(frozen=True)
class Constants:
    """Declared constants of the growth and dissipativity hypotheses."""

    p: float
    beta: float
    alpha: float
    Lambda: float
    N: float
    a0: float
    b0: float


@dataclass(frozen=True)
class ModelSpec:
    name: str
    f: object
    g: object
    h: object
    delay: DelaySpec
    constants: Constants
    h_sup: float = 0.0

    def __post_init__(self):
        c = self.constants
        vals = asdict(c).values()
        if not all(math.isfinite(v) for v in vals):
            raise InvalidConfigurationError("declared constants must be finite")
        if c.alpha < 1:
            raise InvalidConfigurationError(f"alpha must be >= 1, got {c.alpha}")
        if c.Lambda <= 0:
            raise InvalidConfigurationError(f"Lambda must be positive, got {c.Lambda}")

    @property
    def r(self):
        return self.delay.r

    def with_forcing(self, h, h_sup=None):
        return replace(self, h=h, h_sup=self.h_sup if h_sup is None else h_sup)

    def with_delay(self, delay):
        return replace(self, delay=delay)


@dataclass(frozen=True)
class ExponentTable:
    p0: float
    q0: float
    alpha: float

    def q_alpha(self, q):
        return q - 1.0 + self.alpha


def derived_exponents(p, beta, alpha) -> ExponentTable:
    if not (p > 0 and beta >= 0 and alpha >= 1):
        raise InvalidParameterError(f"need p > 0, beta >= 0, alpha >= 1; got p={p}, beta={beta}, alpha={alpha}")
    if beta >= alpha:
        raise HypothesisViolationError(f"H3 violated: beta={beta} must be < alpha={alpha}")
    p0 = (alpha - 1.0) * beta / (alpha - beta)
    return ExponentTable(p0=p0, q0=max(2.0 * p, 2.0 * beta, p0), alpha=float(alpha))


# --- hypothesis validation ------------------------------------------------


@dataclass(frozen=True)
class HypothesisResult:
    name: str
    passed: bool
    worst_sample: float | None = None
    worst_excess: float = 0.0
    note: str = ""


@dataclass(frozen=True)
class HypothesisReport:
    model: str
    sample_range: float
    samples: int
    results: tuple = field(default_factory=tuple)

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def __getitem__(self, name):
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self):
        return {
            "model": self.model,
            "sample_range": self.sample_range,
            "samples": self.samples,
            "passed": self.passed,
            "results": [asdict(r) for r in self.results],
        }


def _bound_check(name, s, lhs, rhs):
    excess = lhs - rhs
    # round-off allowance relative to the magnitudes compared
    slack = 1e-12 * (np.abs(lhs) + np.abs(rhs) + 1.0)
    bad = excess > slack
    i = int(np.argmax(excess - slack))
    return HypothesisResult(
        name,
        passed=not bool(bad.any()),
        worst_sample=float(s[i]),
        worst_excess=float(max(excess[i], 0.0)),
    )


def validate_hypotheses(spec: ModelSpec, sample_range=100.0, samples=10_000) -> HypothesisReport:
    """Check the declared growth/dissipativity constants on a deterministic sample grid."""
    if not sample_range > 0 or samples < 100:
        raise InvalidParameterError("need sample_range > 0 and samples >= 100")
    c = spec.constants
    s = np.linspace(-sample_range, sample_range, int(samples))
    fs = np.asarray(spec.f(s), dtype=float)
    gs = np.asarray(spec.g(s), dtype=float)
    results = [
        _bound_check("H1-f", s, np.abs(fs), c.a0 * (np.abs(s) ** c.p + 1.0)),
        _bound_check("H1-g", s, np.abs(gs), c.b0 * (np.abs(s) ** c.beta + 1.0)),
    ]
    if isinstance(spec.f, Zero):
        # pure heat flow: dissipation comes from the Laplacian alone
        results.append(HypothesisResult("H2", True, note="vacuous: f == 0"))
    else:
        results.append(_bound_check("H2", s, fs * s, -c.Lambda * np.abs(s) ** (c.alpha + 1.0) + c.N))
    results.append(
        HypothesisResult("H3", c.beta < c.alpha, note=f"beta={c.beta}, alpha={c.alpha}")
    )
    f0 = float(np.asarray(spec.f(np.zeros(1)))[0])
    g0 = float(np.asarray(spec.g(np.zeros(1)))[0])
    results.append(
        HypothesisResult("H4", f0 == 0.0 and g0 == 0.0, worst_sample=0.0, worst_excess=max(abs(f0), abs(g0)))
    )
    return HypothesisReport(spec.name, float(sample_range), int(samples), tuple(results))


# --- reaction -------------------------------------------------------------


def eval_reaction(u_now, u_delayed, t, sigma, spec: ModelSpec, x) -> np.ndarray:
    """Pointwise f(u_now) + g(u_delayed) + h(t + sigma, x)."""
    u_now = np.asarray(u_now, dtype=float)
    u_delayed = np.asarray(u_delayed, dtype=float)
    if not (np.isfinite(u_now).all() and np.isfinite(u_delayed).all()):
        raise NumericOverflowError(f"non-finite state entering the reaction at t={t}")
    return spec.f(u_now) + spec.g(u_delayed) + spec.h(t + sigma, x)


# --- catalog --------------------------------------------------------------


def _cubic_constants(lam, mu, beta, b0):
    if mu > 0:
        Lam, N = lam / 2.0, mu * mu / (2.0 * lam)
    else:
        Lam, N = lam, 0.0
    return Constants(p=3.0, beta=beta, alpha=3.0, Lambda=Lam, N=N, a0=lam + abs(mu), b0=b0)


def _delay(kind, r, value=None, kappa=1.0, x_c=None):
    return DelaySpec(kind=kind, r=float(r), value=value, kappa=kappa, x_c=x_c)


def _build(model_id, length, params):
    P = dict(params)

    def take(key, default):
        return float(P.pop(key, default))

    if model_id == "heat":
        r = take("r", 0.0)
        m = ModelSpec("heat", Zero(), Zero(), Zero(), _delay("constant", r),
                      Constants(1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0))
    elif model_id == "linear-decay":
        lam, r = take("lam", 1.0), take("r", 0.0)
        m = ModelSpec("linear-decay", Linear(lam), Zero(), Zero(), _delay("constant", r),
                      Constants(1.0, 0.5, 1.0, lam, 0.0, lam, 1.0))
    elif model_id == "bistable":
        lam, mu, r = take("lam", 1.0), take("mu", 1.0), take("r", 0.5)
        m = ModelSpec("bistable", Cubic(lam, mu), Zero(), Zero(), _delay("constant", r),
                      _cubic_constants(lam, mu, 1.0, 1.0))
    elif model_id == "bad-sign":
        r = take("r", 0.5)
        m = ModelSpec("bad-sign", Cubic(-1.0, 0.0), SineCoupling(0.5), Zero(), _delay("constant", r),
                      Constants(3.0, 1.0, 3.0, 1.0, 0.0, 1.0, 0.5))
    elif model_id in ("cubic", "cubic-sin", "cubic-rational", "cubic-sin-norm", "cubic-sin-point"):
        lam, mu = take("lam", 1.0), take("mu", 0.0)
        b, c, omega = take("b", 0.5), take("c", 1.0), take("omega", 2 * math.pi)
        r = take("r", 0.5)
        tau = P.pop("tau", None)
        if model_id == "cubic":
            g, b0 = Zero(), 1.0
        elif model_id == "cubic-rational":
            g, b0 = RationalCoupling(b), max(abs(b), 1e-12)
        else:
            g, b0 = SineCoupling(b), max(abs(b), 1e-12)
        if model_id == "cubic-sin-norm":
            delay = _delay("norm-driven", r)
        elif model_id == "cubic-sin-point":
            delay = _delay("pointwise-driven", r, kappa=take("kappa", 1.0), x_c=take("x_c", length / 2))
        else:
            delay = _delay("constant", r, value=None if tau is None else float(tau))
        h = PeriodicForcing(c, omega, length) if c != 0 else Zero()
        m = ModelSpec(model_id, Cubic(lam, mu), g, h, delay, _cubic_constants(lam, mu, 1.0, b0), h_sup=abs(c))
    else:
        raise InvalidConfigurationError(f"unknown model id {model_id!r}; catalog: {', '.join(CATALOG)}")
    if P:
        raise InvalidConfigurationError(f"unknown parameters for model {model_id!r}: {sorted(P)}")
    return m


CATALOG = (
    "heat",
    "linear-decay",
    "cubic",
    "cubic-sin",
    "cubic-rational",
    "cubic-sin-norm",
    "cubic-sin-point",
    "bistable",
    "bad-sign",
)


def make_model(model_id: str, length: float = math.pi, **params) -> ModelSpec:
    """Build a catalog model; ``params`` override its defaults (e.g. ``r``, ``tau``, ``c``)."""
    return _build(model_id, float(length), params)

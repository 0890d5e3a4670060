"""Time integration of the Galerkin system for the delayed reaction-diffusion equation.

The stiff part -A is diagonal in the sine basis, so the main scheme is the
second-order exponential time differencing Runge-Kutta method (Cox-Matthews
ETD2RK) with the nonlinearity evaluated pseudospectrally on the collocation
grid.  ``reference_method_of_steps`` is an independent classical RK4 oracle for
constant lags.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BlowUpError, InvalidConfigurationError, NumericOverflowError, UnsupportedOracleError
from .history import HistoryBuffer, InitialSegment, eval_delay
from .model import ModelSpec, eval_reaction
from .spectral import Basis, Domain, build_basis, frac_norm, lq_norm, synthesize

BLOWUP_THRESHOLD = 1e12


def default_grid_points(modes):
    # 3k removes all aliasing from cubic products; 2k is the bare minimum
    return 3 * modes if modes <= 64 else 2 * modes


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    modes: int = 16
    grid_points: int | None = None
    length: float = math.pi
    sigma: float = 0.0
    record_stride: int = 1
    seed: int = 0
    qs: tuple = (2.0,)
    zetas: tuple = (0.5,)

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidConfigurationError(f"dt must be positive, got {self.dt}")
        if not self.t_end >= 0:
            raise InvalidConfigurationError(f"t_end must be >= 0, got {self.t_end}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise InvalidConfigurationError(f"record_stride must be an integer >= 1, got {self.record_stride}")

    @property
    def n_grid(self):
        return self.grid_points or default_grid_points(self.modes)

    @property
    def steps(self):
        return int(round(self.t_end / self.dt))

    def domain(self):
        return Domain(self.length, self.n_grid)

    def basis(self):
        return build_basis(self.domain(), self.modes)

    def check_commensurate(self, r):
        if r > 0:
            ratio = r / self.dt
            if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
                raise InvalidConfigurationError(f"dt={self.dt} must divide the max lag r={r}")

    def with_(self, **changes):
        return replace(self, **changes)


def norm_key(kind, value=None):
    if kind == "l":
        return "linf" if math.isinf(value) else f"l{value:g}"
    if kind == "frac":
        return f"frac{value:g}"
    return kind


@dataclass(eq=False)
class Trajectory:
    model: str
    config: SolverConfig
    basis: Basis = field(repr=False)
    domain: Domain = field(repr=False)
    initial: InitialSegment = field(repr=False)
    times: np.ndarray = field(repr=False)
    fields: np.ndarray = field(repr=False)
    step_times: np.ndarray = field(repr=False)
    reaction: np.ndarray = field(repr=False)
    tau: np.ndarray = field(repr=False)
    clamps: int = 0
    clamp_counts: np.ndarray | None = field(default=None, repr=False)  # cumulative, per step time
    blowup_time: float | None = None
    final_segment: InitialSegment | None = field(default=None, repr=False)
    norms: dict = field(default_factory=dict, repr=False)

    @property
    def blew_up(self):
        return self.blowup_time is not None

    @property
    def r(self):
        return self.initial.r

    def series(self, key):
        return self.times, self.norms[key]

    def field_at(self, t):
        i = int(round(t / (self.config.dt * self.config.record_stride)))
        if i < 0 or i >= self.times.size or abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise InvalidConfigurationError(f"t={t} is not a recorded time")
        return self.fields[i]


def norm_series(fields, basis, domain, qs=(), zetas=()):
    u = synthesize(fields, basis)
    out = {"l2": np.sqrt(np.sum(fields * fields, axis=-1)), "h1": frac_norm(fields, basis, 0.5)}
    for q in qs:
        out[norm_key("l", float(q))] = lq_norm(u, domain, q)
    for z in zetas:
        out[norm_key("frac", float(z))] = frac_norm(fields, basis, z)
    return out


def phi1(z):
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-5
    safe = np.where(small, 1.0, z)
    return np.where(small, 1 + z / 2 + z * z / 6, np.expm1(safe) / safe)


def phi2(z):
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-3
    safe = np.where(small, 1.0, z)
    series = 0.5 + z / 6 + z * z / 24 + z ** 3 / 120 + z ** 4 / 720
    return np.where(small, series, (np.expm1(safe) - safe) / (safe * safe))


class Galerkin:
    """Precomputed ETD2RK coefficients and the pseudospectral nonlinearity."""

    def __init__(self, model: ModelSpec, config: SolverConfig, basis=None, domain=None):
        self.model = model
        self.config = config
        self.domain = domain or config.domain()
        self.basis = basis or build_basis(self.domain, config.modes)
        self.dt = float(config.dt)
        self.sigma = float(config.sigma)
        self.mu = self.basis.eigenvalues
        self.W = self.basis.synthesis
        self.P = self.basis.analysis
        self.x = self.domain.x
        z = -self.mu * self.dt
        self.E = np.exp(z)
        self.c1 = self.dt * phi1(z)
        self.c2 = self.dt * phi2(z)

    def nonlinear(self, a, a_del, t):
        u = self.W @ a
        ud = self.W @ a_del
        try:
            w = eval_reaction(u, ud, t, self.sigma, self.model, self.x)
        except NumericOverflowError as exc:
            raise BlowUpError(t) from exc
        return self.P @ w

    def _check(self, a, t):
        if not np.isfinite(a).all() or np.abs(a).max() > BLOWUP_THRESHOLD:
            raise BlowUpError(t)

    def advance(self, a, buffer: HistoryBuffer, n):
        """One ETD2RK step from t_n = n dt; ``buffer`` must end at (t_n, a)."""
        dt, delay, basis = self.dt, self.model.delay, self.basis
        t0 = n * dt
        t1 = (n + 1) * dt
        tau0, cl0 = eval_delay(delay, t0 + 0.0, self.sigma, buffer, basis)
        N0 = self.nonlinear(a, buffer.sample(t0 - tau0), t0)
        a_star = self.E * a + self.c1 * N0
        self._check(a_star, t1)
        buffer.push(t1, a_star, prune=False)
        try:
            tau1, cl1 = eval_delay(delay, t1, self.sigma, buffer, basis)
            a_del1 = buffer.sample(t1 - tau1)
        finally:
            buffer.pop()
        N1 = self.nonlinear(a_star, a_del1, t1)
        a_new = a_star + self.c2 * (N1 - N0)
        self._check(a_new, t1)
        return a_new, N0, tau0, int(cl0) + int(cl1)

    def reaction_at(self, a, buffer, n):
        t = n * self.dt
        tau, cl = eval_delay(self.model.delay, t, self.sigma, buffer, self.basis)
        return self.nonlinear(a, buffer.sample(t - tau), t), tau, int(cl)


def step(state, buffer: HistoryBuffer, t, spec: ModelSpec, config: SolverConfig, basis=None, domain=None):
    """Single ETD2RK step from time t; returns the new coefficient vector."""
    sys = Galerkin(spec, config, basis, domain)
    n = t / config.dt
    if abs(n - round(n)) > 1e-9 * max(1.0, abs(n)):
        raise InvalidConfigurationError("t must lie on the dt grid")
    a_new, *_ = sys.advance(np.asarray(state, dtype=float), buffer, int(round(n)))
    return a_new


def _check_segment(phi: InitialSegment, spec, config, basis):
    if phi.modes != basis.modes:
        raise InvalidConfigurationError(f"initial segment has {phi.modes} modes, basis has {basis.modes}")
    config.check_commensurate(spec.r)
    if phi.r + 1e-9 < spec.r:
        raise InvalidConfigurationError(f"initial segment covers [-{phi.r}, 0] but the max lag is {spec.r}")
    if phi.thetas.size > 1:
        spacing = np.diff(phi.thetas)
        if np.abs(spacing - config.dt).max() > 1e-9 * config.dt:
            raise InvalidConfigurationError("initial segment must be sampled at the solver dt")


def _finish(model_name, config, basis, domain, phi, rec_t, rec_a, step_t, react, taus, clamps, blowup, buf):
    fields = np.array(rec_a)
    traj = Trajectory(
        model=model_name,
        config=config,
        basis=basis,
        domain=domain,
        initial=phi,
        times=np.array(rec_t),
        fields=fields,
        step_times=np.array(step_t),
        reaction=np.array(react).reshape(-1, basis.modes),
        tau=np.array(taus),
        clamps=clamps,
        blowup_time=blowup,
    )
    if buf is not None and blowup is None:
        ts, vals = buf.segment(buf.t_now, phi.r)
        traj.final_segment = InitialSegment(ts - buf.t_now, vals)
    traj.norms = norm_series(fields, basis, domain, config.qs, config.zetas)
    return traj


def simulate(phi: InitialSegment, spec: ModelSpec, config: SolverConfig, on_blowup="raise", basis=None, domain=None):
    """Integrate from the initial segment to ``config.t_end``.

    With ``on_blowup="flag"`` a blow-up returns the truncated trajectory with
    ``blowup_time`` set instead of raising.
    """
    sys = Galerkin(spec, config, basis, domain)
    basis, domain = sys.basis, sys.domain
    _check_segment(phi, spec, config, basis)
    buf = HistoryBuffer.from_segment(phi, r=max(phi.r, spec.r))
    a = np.array(phi.coeffs[-1], dtype=float)
    stride = config.record_stride
    rec_t, rec_a = [0.0], [a]
    step_t, react, taus = [], [], []
    clamps = 0
    cum = []
    blowup = None
    n_steps = config.steps
    try:
        for n in range(n_steps):
            a_new, N0, tau0, cl = sys.advance(a, buf, n)
            step_t.append(n * sys.dt)
            react.append(N0)
            taus.append(tau0)
            clamps += cl
            cum.append(clamps)
            a = a_new
            buf.push((n + 1) * sys.dt, a)
            if (n + 1) % stride == 0:
                rec_t.append((n + 1) * sys.dt)
                rec_a.append(a)
        N_end, tau_end, cl = sys.reaction_at(a, buf, n_steps)
        step_t.append(n_steps * sys.dt)
        react.append(N_end)
        taus.append(tau_end)
        clamps += cl
        cum.append(clamps)
    except BlowUpError as exc:
        if on_blowup == "raise":
            raise
        blowup = exc.time
    traj = _finish(spec.name, config, basis, domain, phi, rec_t, rec_a, step_t, react, taus, clamps, blowup,
                   None if blowup is not None else buf)
    traj.clamp_counts = np.array(cum, dtype=int)
    return traj


def simulate_undelayed(a0, spec: ModelSpec, config: SolverConfig, basis=None, domain=None):
    """Same scheme on the ODE system with g evaluated at the current state (no history)."""
    sys = Galerkin(spec, config, basis, domain)
    basis, domain = sys.basis, sys.domain
    dt = sys.dt
    a = np.array(a0, dtype=float)
    stride = config.record_stride
    rec_t, rec_a = [0.0], [a]
    step_t, react = [], []
    for n in range(config.steps):
        t0, t1 = n * dt, (n + 1) * dt
        N0 = sys.nonlinear(a, a, t0)
        a_star = sys.E * a + sys.c1 * N0
        sys._check(a_star, t1)
        N1 = sys.nonlinear(a_star, a_star, t1)
        a = a_star + sys.c2 * (N1 - N0)
        sys._check(a, t1)
        step_t.append(t0)
        react.append(N0)
        if (n + 1) % stride == 0:
            rec_t.append(t1)
            rec_a.append(a)
    step_t.append(config.steps * dt)
    react.append(sys.nonlinear(a, a, config.steps * dt))
    phi = InitialSegment(np.zeros(1), np.array(a0, dtype=float)[None, :])
    traj = _finish(spec.name, config, basis, domain, phi, rec_t, rec_a, step_t, react,
                   [0.0] * len(step_t), 0, None, None)
    traj.final_segment = InitialSegment(np.zeros(1), a[None, :].copy())
    return traj


def reference_method_of_steps(phi: InitialSegment, spec: ModelSpec, config: SolverConfig, basis=None, domain=None):
    """Classical RK4 on successive lag windows for a constant delay.

    The delayed input of every RK4 stage on window m is the matching stage value
    recorded on window m-1 (or the exact initial function on window 0), so no
    interpolation is involved.
    """
    delay = spec.delay
    if delay.kind != "constant":
        raise UnsupportedOracleError(f"method of steps needs a constant delay, got {delay.kind!r}")
    c = delay.constant_value
    if not c > 0:
        raise UnsupportedOracleError("method of steps needs a strictly positive delay")
    dt = float(config.dt)
    per_window = c / dt
    if abs(per_window - round(per_window)) > 1e-9 * per_window:
        raise InvalidConfigurationError(f"dt={dt} must divide the delay c={c}")
    per_window = int(round(per_window))
    domain = domain or config.domain()
    basis = basis or build_basis(domain, config.modes)
    mu, W, P, x = basis.eigenvalues, basis.synthesis, basis.analysis, domain.x
    sigma = float(config.sigma)

    def rhs(y, d, t):
        w = spec.f(W @ y) + spec.g(W @ d) + spec.h(t + sigma, x)
        return -mu * y + P @ w

    n_steps = config.steps
    a = np.array(phi.at(0.0), dtype=float)
    rec_t, rec_a = [0.0], [a]
    prev = None
    n = 0
    half = 0.5 * dt
    while n < n_steps:
        cur = np.empty((per_window, 4, basis.modes))
        for s in range(per_window):
            if n >= n_steps:
                break
            t = n * dt
            if prev is None:
                d1 = phi.at(t - c)
                d2 = d3 = phi.at(t + half - c)
                d4 = phi.at(t + dt - c)
            else:
                d1, d2, d3, d4 = prev[s]
            k1 = rhs(a, d1, t)
            y2 = a + half * k1
            k2 = rhs(y2, d2, t + half)
            y3 = a + half * k2
            k3 = rhs(y3, d3, t + half)
            y4 = a + dt * k3
            k4 = rhs(y4, d4, t + dt)
            cur[s, 0], cur[s, 1], cur[s, 2], cur[s, 3] = a, y2, y3, y4
            a = a + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.isfinite(a).all():
                raise BlowUpError((n + 1) * dt)
            n += 1
            if n % config.record_stride == 0:
                rec_t.append(n * dt)
                rec_a.append(a)
        prev = cur
    return _finish(spec.name, config, basis, domain, phi, rec_t, rec_a, [], [], [], 0, None, None)

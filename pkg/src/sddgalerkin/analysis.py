"""Checks of the quantitative estimates on computed trajectories.

The constants in the dissipativity and smoothing estimates are existential, so
every check here fits or derives them from the data and reports how much room
the estimate leaves.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import BlowUpError, InvalidConfigurationError, InvalidParameterError
from .history import HistoryBuffer, InitialSegment, eval_delay, segment_norms
from .spectral import default_delta, frac_norm, h1_norm, lq_norm, semigroup_constant, synthesize

# --- Gamma function -------------------------------------------------------

_LANCZOS_G = 7
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def lanczos_gamma(x):
    """Gamma(x) by the Lanczos approximation (g=7, 9 terms), reflected for x < 1/2."""
    x = float(x)
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * lanczos_gamma(1.0 - x))
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += c / (x + i)
    t = x + _LANCZOS_G + 0.5
    return math.sqrt(2 * math.pi) * t ** (x + 0.5) * math.exp(-t) * acc


# --- report record used by the CLI ----------------------------------------


@dataclass
class CheckResult:
    id: str
    passed: bool
    inputs: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    slack: float | None = None

    def to_dict(self):
        return asdict(self)


# --- envelopes ------------------------------------------------------------


def envelope_tolerance(rho):
    return 1e-6 + 1e-3 * abs(rho)


@dataclass(frozen=True)
class EnvelopeFit:
    B: float
    eta: float
    rho: float
    sup_violation: float
    fitted: bool
    tolerance: float
    head_points: int = 0

    @property
    def passed(self):
        return self.fitted and self.eta > 0 and self.sup_violation <= self.tolerance

    def __call__(self, t):
        if not self.fitted:
            return np.full_like(np.asarray(t, dtype=float), self.rho)
        return self.B * np.exp(-self.eta * np.asarray(t)) + self.rho


def envelope_fit(t, y, tail_fraction=0.2) -> EnvelopeFit:
    """Fit y(t) <= B e^{-eta t} + rho.

    rho is the maximum over the final ``tail_fraction`` of the horizon and eta
    the least-squares decay rate of log(y - rho) on head points clearing rho by
    the tolerance.  B is then lifted to the smallest amplitude for which the
    envelope dominates every head point.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size == 0 or t.shape != y.shape:
        raise InvalidParameterError("series must be nonempty with matching t and y")
    if not 0 < tail_fraction < 1:
        raise InvalidParameterError("tail_fraction must lie in (0, 1)")
    t_tail = t[0] + (1.0 - tail_fraction) * (t[-1] - t[0])
    tail = t >= t_tail
    if not tail.any():
        tail[-1] = True
    rho = float(y[tail].max())
    tol = envelope_tolerance(rho)
    head = (~tail) & (y > rho + tol)
    if head.sum() < 2:
        viol = float(max((y - rho).max(), 0.0))
        return EnvelopeFit(0.0, float("nan"), rho, viol, False, tol, int(head.sum()))
    th, excess = t[head], y[head] - rho
    slope, _ = np.polyfit(th, np.log(excess), 1)
    eta = float(-slope)
    B = float(np.max(excess * np.exp(eta * th)))
    env = B * np.exp(-eta * t) + rho
    viol = float(max((y - env).max(), 0.0))
    return EnvelopeFit(B, eta, rho, viol, True, tol, int(head.sum()))


def absorbing_entry_time(t, y, radius, dwell):
    """First sample time after which y stays <= radius for ``dwell`` time units (None if never)."""
    if not dwell > 0:
        raise InvalidParameterError("dwell must be positive")
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    bad = y > radius
    n = t.size
    # next_bad[i]: time of the first violating sample at or after i
    next_bad = np.full(n, np.inf)
    nxt = np.inf
    for i in range(n - 1, -1, -1):
        if bad[i]:
            nxt = t[i]
        next_bad[i] = nxt
    eps = 1e-9 * max(1.0, abs(t[-1]))
    ok = (~bad) & (next_bad > t + dwell + eps) & (t + dwell <= t[-1] + eps)
    idx = np.flatnonzero(ok)
    return float(t[idx[0]]) if idx.size else None


# --- L-infinity dichotomy ---------------------------------------------------


def linf_dichotomy(trajectory, phi_linf=None, tail_fraction=0.2) -> CheckResult:
    """With r > 0 a constant bound ||phi||_inf + rho must dominate |u|_inf;
    with r = 0 a decaying envelope with eta > 0 must fit."""
    if "linf" not in trajectory.norms:
        raise InvalidConfigurationError("trajectory has no |u|_inf series; add q=inf to the requested norms")
    y = trajectory.norms["linf"]
    if phi_linf is None:
        phi_linf = float(lq_norm(synthesize(trajectory.initial.coeffs, trajectory.basis), trajectory.domain, math.inf).max())
    fit = envelope_fit(trajectory.times, y, tail_fraction)
    r = trajectory.r
    if r > 0:
        bound = phi_linf + fit.rho
        worst = float(y.max())
        passed = worst <= bound + fit.tolerance
        return CheckResult(
            "linf_dichotomy",
            passed,
            inputs={"r": r, "phi_linf": phi_linf},
            constants={"rho_star": fit.rho, "B": 0.0, "sup": worst, "fitted_eta": fit.eta},
            slack=bound / worst if worst > 0 else math.inf,
        )
    passed = fit.fitted and fit.eta > 0 and fit.sup_violation <= fit.tolerance
    return CheckResult(
        "linf_dichotomy",
        passed,
        inputs={"r": r, "phi_linf": phi_linf},
        constants={"rho_star": fit.rho, "B": fit.B, "nu_star": fit.eta, "sup_violation": fit.sup_violation},
        slack=fit.eta if fit.fitted else None,
    )


# --- fractional-power bound -------------------------------------------------


@dataclass(frozen=True)
class FractionalBoundReport:
    zeta: float
    empirical: float
    bound: float
    b: float
    C_zeta: float
    C_zeta_r: float
    delta: float
    phi_l2: float
    t_start: float

    @property
    def passed(self):
        return self.empirical <= self.bound

    @property
    def slack(self):
        return self.bound / self.empirical if self.empirical > 0 else math.inf


def fractional_bound_check(trajectory, zeta, phi_l2=None, t_start=None, delta=None) -> FractionalBoundReport:
    """Compare sup_{t >= t_start} ||u(t)||_zeta with C_{zeta,r} sup|phi|_2 + b C_zeta delta^(zeta-1) Gamma(1-zeta)."""
    if not 0.5 < zeta < 1:
        raise InvalidParameterError(f"zeta must lie in (1/2, 1), got {zeta}")
    if trajectory.blew_up:
        raise BlowUpError(trajectory.blowup_time, "reaction bound is not finite on a blown-up trajectory")
    basis = trajectory.basis
    t_start = trajectory.r if t_start is None else float(t_start)
    if not t_start > 0:
        raise InvalidParameterError("the smoothing bound needs t_start > 0 (set t_start when r = 0)")
    delta = default_delta(basis) if delta is None else float(delta)
    b = float(np.sqrt(np.sum(trajectory.reaction ** 2, axis=-1)).max()) if trajectory.reaction.size else 0.0
    if not math.isfinite(b):
        raise BlowUpError(float("nan"), "reaction bound is not finite")
    if phi_l2 is None:
        phi_l2 = float(np.sqrt(np.sum(trajectory.initial.coeffs ** 2, axis=-1)).max())
    C = semigroup_constant(zeta, basis, delta)
    # t^-zeta e^-delta t is decreasing, so its value at t_start bounds every later time
    C_r = C * t_start ** (-zeta) * math.exp(-delta * t_start)
    bound = C_r * phi_l2 + b * C * delta ** (zeta - 1.0) * lanczos_gamma(1.0 - zeta)
    mask = trajectory.times >= t_start - 1e-12
    emp = float(frac_norm(trajectory.fields[mask], basis, zeta).max()) if mask.any() else 0.0
    return FractionalBoundReport(float(zeta), emp, bound, b, C, C_r, delta, phi_l2, t_start)


# --- equi-continuity --------------------------------------------------------


@dataclass(frozen=True)
class EquiContinuityReport:
    zeta: float
    L: float
    pairs: int
    worst_t: float
    worst_nu: float


def equicontinuity_modulus(trajectory, zeta, eta_off=0.1, nu_min=None, nu_max=0.1) -> EquiContinuityReport:
    """L = max ||u(t+nu) - u(t)||_1 / (nu^(zeta-1/2) + nu^(1/2)) over t >= 2r + eta_off, nu in [nu_min, nu_max]."""
    cfg = trajectory.config
    spacing = cfg.dt * cfg.record_stride
    nu_min = cfg.dt if nu_min is None else nu_min
    t = trajectory.times
    i0 = int(np.searchsorted(t, 2 * trajectory.r + eta_off - 1e-9 * spacing))
    k_lo = max(1, int(math.ceil(nu_min / spacing - 1e-9)))
    k_hi = int(math.floor(nu_max / spacing + 1e-9))
    basis = trajectory.basis
    best, best_t, best_nu, pairs = 0.0, float("nan"), float("nan"), 0
    for k in range(k_lo, k_hi + 1):
        if i0 + k >= t.size:
            break
        nu = k * spacing
        diff = trajectory.fields[i0 + k :] - trajectory.fields[i0 : t.size - k]
        ratio = h1_norm(diff, basis) / (nu ** (zeta - 0.5) + nu ** 0.5)
        pairs += ratio.size
        j = int(np.argmax(ratio))
        if ratio[j] > best or math.isnan(best_t):
            best, best_t, best_nu = float(ratio[j]), float(t[i0 + j]), nu
    if pairs == 0:
        raise InvalidConfigurationError("no admissible (t, nu) pairs: trajectory too short or nu range empty")
    return EquiContinuityReport(float(zeta), best, pairs, best_t, best_nu)


# --- delay continuity -------------------------------------------------------


@dataclass(frozen=True)
class DelayContinuityReport:
    K: float
    pairs_used: int
    excluded: int


def segment_distance(a: InitialSegment, b: InitialSegment, basis) -> float:
    """C_{V1} distance over the shared theta nodes."""
    if a.coeffs.shape != b.coeffs.shape:
        raise InvalidConfigurationError("segments live on different theta grids")
    return float(h1_norm(a.coeffs - b.coeffs, basis).max())


def delay_continuity_probe(spec, pairs, basis, t=0.0, sigma=0.0) -> DelayContinuityReport:
    """K = max |tau(phi) - tau(psi)| / ||phi - psi||_{C_V1}; identical pairs are skipped."""
    K, used, skipped = 0.0, 0, 0
    for phi, psi in pairs:
        d = segment_distance(phi, psi, basis)
        if d == 0.0:
            skipped += 1
            continue
        r = max(phi.r, spec.r)
        tp, _ = eval_delay(spec, t, sigma, HistoryBuffer.from_segment(phi, t, r), basis)
        tq, _ = eval_delay(spec, t, sigma, HistoryBuffer.from_segment(psi, t, r), basis)
        K = max(K, abs(tp - tq) / d)
        used += 1
    return DelayContinuityReport(K, used, skipped)


def unit_ball_pairs(basis, r, dt, count, seed=0):
    """Random pairs of theta-constant segments with ||a||_1 <= 1."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 0xD1A1])))
    j = np.arange(1, basis.modes + 1)
    out = []
    for _ in range(count):
        pair = []
        for _ in range(2):
            a = rng.standard_normal(basis.modes) / j ** 2
            a *= rng.uniform() / float(h1_norm(a, basis))
            pair.append(InitialSegment.constant(a, r, dt))
        out.append(tuple(pair))
    return out


# --- integrated V2 budget ---------------------------------------------------


def v2_budget(trajectory, q, phi_norms=None):
    """Return (int_0^T ||u||_2^2 dt, ||phi||_{C_V1}^2 + ||phi||_{L^inf L^q}^q + 1)."""
    v2 = frac_norm(trajectory.fields, trajectory.basis, 1.0) ** 2
    integral = float(np.trapezoid(v2, trajectory.times)) if trajectory.times.size > 1 else 0.0
    if phi_norms is None:
        buf = HistoryBuffer.from_segment(trajectory.initial)
        phi_norms = segment_norms(buf, 0.0, q, trajectory.basis, trajectory.domain)
    scale = phi_norms.c_v1 ** 2 + phi_norms.linf_lq ** q + 1.0
    return integral, scale

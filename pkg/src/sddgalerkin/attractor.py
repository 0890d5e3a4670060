"""Ensemble approximation of the pullback attractor.

Members are history segments u_t sampled on theta nodes; distances are the
C_{V1} segment distance restricted to those nodes.  The scheme is deterministic,
so each initial segment yields one member: snapshots approximate a selection of
the set-valued process rather than the full solution set.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import BlowUpError, InvalidConfigurationError, InvalidParameterError, UndefinedDistanceError
from .history import HistoryBuffer, InitialSegment, segment_norms
from .integrator import SolverConfig, simulate
from .model import ModelSpec
from .spectral import Basis, Domain


def member_rng(seed, index):
    """Counter-based stream for one ensemble member."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed) & (2**64 - 1), int(index)])))


@dataclass(frozen=True)
class AbsorbingBallSpec:
    R: float
    q: float = 6.0
    count: int = 20
    seed: int = 0
    profile: str = "constant"

    def __post_init__(self):
        if not self.R > 0:
            raise InvalidParameterError(f"ball radius must be positive, got {self.R}")
        if self.count < 1:
            raise InvalidParameterError("count must be >= 1")
        if self.profile not in ("constant", "lowfreq"):
            raise InvalidParameterError(f"unknown time profile {self.profile!r}")


def ball_norm(segment: InitialSegment, q, basis, domain):
    """||phi||_{C_V1} + ||phi||_{L^inf L^q} on the segment's nodes and midpoints."""
    buf = HistoryBuffer.from_segment(segment)
    sn = segment_norms(buf, 0.0, q, basis, domain)
    return sn.c_v1 + sn.linf_lq


@dataclass(frozen=True, eq=False)
class _LowFreqProfile:
    a: np.ndarray
    eps: float
    r: float

    def __call__(self, theta):
        return self.a * (1.0 + self.eps * math.sin(2 * math.pi * theta / self.r))


def sample_absorbing_ball(spec: AbsorbingBallSpec, basis: Basis, domain: Domain, r, dt):
    """Seeded segments with ball norm drawn uniformly from (0, R]."""
    j = np.arange(1, basis.modes + 1)
    out = []
    for i in range(spec.count):
        rng = member_rng(spec.seed, i)
        a = rng.standard_normal(basis.modes) / j ** 2
        if spec.profile == "lowfreq" and r > 0:
            seg = InitialSegment.from_function(_LowFreqProfile(a, rng.uniform(-0.5, 0.5), r), r, dt)
        else:
            seg = InitialSegment.constant(a, r, dt)
        target = spec.R * (1.0 - rng.uniform())  # uniform on (0, R]
        seg = seg.scaled(target / ball_norm(seg, spec.q, basis, domain))
        out.append(seg)
    return out


@dataclass(eq=False)
class EnsembleSnapshot:
    sigma: float
    t: float
    thetas: np.ndarray
    members: np.ndarray  # (M, n_theta, modes)
    member_ids: np.ndarray
    excluded: list = field(default_factory=list)

    def __len__(self):
        return self.members.shape[0]


def _evolve_one(args):
    phi, spec, config = args
    traj = simulate(phi, spec, config, on_blowup="flag")
    if traj.blew_up:
        return None
    return traj.final_segment.coeffs


def pullback_evolve(initials, sigma, t, spec: ModelSpec, config: SolverConfig, workers=1) -> EnsembleSnapshot:
    """Evolve each initial segment over [0, t] with time symbol sigma - t."""
    if not t >= 0:
        raise InvalidParameterError("pullback horizon must be >= 0")
    thetas = initials[0].thetas
    if t == 0:
        members = np.array([phi.coeffs for phi in initials])
        return EnsembleSnapshot(sigma, 0.0, thetas, members, np.arange(len(initials)))
    cfg = config.with_(t_end=float(t), sigma=float(sigma) - float(t), record_stride=max(1, int(round(t / config.dt))))
    jobs = [(phi, spec, cfg) for phi in initials]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evolve_one, jobs))
    else:
        results = [_evolve_one(job) for job in jobs]
    keep = [i for i, res in enumerate(results) if res is not None]
    excluded = [i for i, res in enumerate(results) if res is None]
    members = np.array([results[i] for i in keep]) if keep else np.empty((0, thetas.size, initials[0].modes))
    return EnsembleSnapshot(sigma, float(t), thetas, members, np.array(keep, dtype=int), excluded)


def pairwise_distances(A, B, basis: Basis):
    """C_{V1} distances between member arrays of shape (M, n_theta, modes)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape[1:] != B.shape[1:]:
        raise InvalidConfigurationError("snapshots use different segment grids")
    mu = basis.eigenvalues
    out = np.empty((A.shape[0], B.shape[0]))
    for i in range(A.shape[0]):
        d = A[i][None] - B
        out[i] = np.sqrt(np.einsum("mtk,k,mtk->mt", d, mu, d)).max(axis=1)
    return out


def hausdorff_semidistance(A, B, basis: Basis) -> float:
    """sup_{x in A} inf_{y in B} d(x, y); accepts snapshots or member arrays."""
    A = A.members if isinstance(A, EnsembleSnapshot) else A
    B = B.members if isinstance(B, EnsembleSnapshot) else B
    if len(A) == 0 or len(B) == 0:
        raise UndefinedDistanceError("Hausdorff semidistance of an empty set is undefined")
    return float(pairwise_distances(A, B, basis).min(axis=1).max())


@dataclass(frozen=True)
class ConvergenceTable:
    """Rows (t_m, d_H(S_m, S_{m+1}), d_H(S_m, S_final)); the last successive entry is NaN."""

    rows: tuple

    def as_array(self):
        return np.array(self.rows, dtype=float)

    @property
    def last_successive(self):
        return self.rows[-2][1]


@dataclass
class AttractorResult:
    snapshots: list
    table: ConvergenceTable
    converged: bool
    eps: float


def attractor_approximate(sigma, times, ball: AbsorbingBallSpec, spec: ModelSpec, config: SolverConfig,
                          eps=None, workers=1, basis=None, domain=None) -> AttractorResult:
    times = [float(t) for t in times]
    if len(times) < 3:
        raise InvalidParameterError("need at least 3 pullback times")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise InvalidParameterError("pullback times must be strictly increasing")
    domain = domain or config.domain()
    basis = basis or config.basis()
    eps = 1e-3 * ball.R if eps is None else float(eps)
    initials = sample_absorbing_ball(ball, basis, domain, spec.r, config.dt)
    snaps = []
    for t in times:
        snap = pullback_evolve(initials, sigma, t, spec, config, workers)
        if len(snap.excluded) > 0.5 * len(initials):
            raise BlowUpError(t, f"{len(snap.excluded)} of {len(initials)} members blew up at horizon t={t}")
        snaps.append(snap)
    final = snaps[-1]
    table = []
    for m, snap in enumerate(snaps):
        succ = hausdorff_semidistance(snap, snaps[m + 1], basis) if m + 1 < len(snaps) else float("nan")
        table.append((snap.t, succ, hausdorff_semidistance(snap, final, basis)))
    table = ConvergenceTable(tuple(table))
    return AttractorResult(snaps, table, bool(table.last_successive < eps), eps)


def truncated_equilibria(spec: ModelSpec, basis: Basis, domain: Domain, guesses=None, tol=1e-12):
    """Steady states of the truncated autonomous system -mu a + P[f(Wa) + g(Wa) + h(0)] = 0.

    Found by root finding from a fan of starting points and de-duplicated.
    """
    mu, W, P, x = basis.eigenvalues, basis.synthesis, basis.analysis, domain.x
    forcing = spec.h(0.0, x)

    def residual(a):
        u = W @ a
        return -mu * a + P @ (spec.f(u) + spec.g(u) + forcing)

    if guesses is None:
        guesses = [np.zeros(basis.modes)]
        for j in range(min(basis.modes, 3)):
            for amp in (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0):
                g = np.zeros(basis.modes)
                g[j] = amp
                guesses.append(g)
    roots = []
    for g in guesses:
        sol = optimize.root(residual, g, method="hybr", tol=tol)
        if not sol.success or np.abs(residual(sol.x)).max() > 1e-9:
            continue
        if all(np.abs(sol.x - rt).max() > 1e-6 for rt in roots):
            roots.append(sol.x)
    return roots


def equilibrium_segments(roots, thetas):
    """Theta-constant member array for a list of steady states."""
    return np.array([np.tile(a, (len(thetas), 1)) for a in roots])

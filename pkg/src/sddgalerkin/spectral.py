"""Dirichlet-Laplacian sine basis on (0, L) with its transforms and the heat semigroup.

Spectral fields are plain 1-D numpy arrays of coefficients over the basis
``w_j(x) = sqrt(2/L) sin(j pi x / L)``.  Stacks of fields (shape ``(..., k)``)
are accepted wherever it is cheap to do so.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InvalidConfigurationError, InvalidParameterError


@dataclass(frozen=True)
class Domain:
    """Interval (0, length) sampled on a uniform midpoint grid."""

    length: float
    grid_points: int

    def __post_init__(self):
        if not (self.length > 0 and math.isfinite(self.length)):
            raise InvalidConfigurationError(f"domain length must be positive, got {self.length}")
        if int(self.grid_points) != self.grid_points or self.grid_points < 2:
            raise InvalidConfigurationError(f"grid_points must be an integer >= 2, got {self.grid_points}")

    @property
    def dx(self) -> float:
        return self.length / self.grid_points

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.grid_points) + 0.5) * self.dx


def _frozen(arr):
    arr = np.ascontiguousarray(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Basis:
    modes: int
    length: float
    eigenvalues: np.ndarray
    weights: np.ndarray
    # synthesis matrix, shape (grid_points, modes)
    synthesis: np.ndarray = field(repr=False)
    # projection matrix, shape (modes, grid_points)
    analysis: np.ndarray = field(repr=False)

    @property
    def mu1(self) -> float:
        return float(self.eigenvalues[0])

    def eigenfunction(self, j, x):
        """Evaluate w_j at arbitrary points (j is 1-based)."""
        x = np.asarray(x, dtype=float)
        return math.sqrt(2.0 / self.length) * np.sin(j * math.pi * x / self.length)

    def point_values(self, x) -> np.ndarray:
        """Row vector(s) of all eigenfunctions at points ``x``."""
        j = np.arange(1, self.modes + 1)
        x = np.asarray(x, dtype=float)
        return math.sqrt(2.0 / self.length) * np.sin(np.multiply.outer(x, j) * math.pi / self.length)


def build_basis(domain: Domain, modes: int) -> Basis:
    if int(modes) != modes or modes < 1:
        raise InvalidConfigurationError(f"modes must be a positive integer, got {modes}")
    modes = int(modes)
    if 2 * modes > domain.grid_points:
        raise InvalidConfigurationError(
            f"grid too small: need grid_points >= 2*modes ({2 * modes}), got {domain.grid_points}"
        )
    j = np.arange(1, modes + 1)
    mu = (j * math.pi / domain.length) ** 2
    weights = np.full(domain.grid_points, domain.dx)
    W = math.sqrt(2.0 / domain.length) * np.sin(np.outer(domain.x, j) * math.pi / domain.length)
    return Basis(
        modes=modes,
        length=domain.length,
        eigenvalues=_frozen(mu),
        weights=_frozen(weights),
        synthesis=_frozen(W),
        analysis=_frozen(W.T * domain.dx),
    )


def _check_length(a, basis):
    a = np.asarray(a, dtype=float)
    if a.shape[-1:] != (basis.modes,):
        raise DimensionError(f"field has {a.shape[-1] if a.ndim else 0} coefficients, basis has {basis.modes}")
    return a


def synthesize(field, basis: Basis, domain: Domain | None = None) -> np.ndarray:
    """Grid values sum_j a_j w_j(x_i)."""
    a = _check_length(field, basis)
    return a @ basis.synthesis.T


def project(values, basis: Basis, domain: Domain | None = None) -> np.ndarray:
    """Midpoint-quadrature inner products (values, w_j)."""
    values = np.asarray(values, dtype=float)
    if values.shape[-1:] != (basis.synthesis.shape[0],):
        raise DimensionError(
            f"values have {values.shape[-1] if values.ndim else 0} grid points, expected {basis.synthesis.shape[0]}"
        )
    return values @ basis.analysis.T


def lq_norm(values, domain: Domain, q) -> np.ndarray:
    """|u|_q of grid values along the last axis; q = inf gives the grid max."""
    q = float(q)
    if not q > 1:
        raise InvalidParameterError(f"q must lie in (1, inf], got {q}")
    values = np.abs(np.asarray(values, dtype=float))
    if math.isinf(q):
        return values.max(axis=-1)
    if q == 2.0:
        return np.sqrt(domain.dx * np.sum(values * values, axis=-1))
    # scale out the max so large q does not overflow
    top = values.max(axis=-1, keepdims=True)
    safe = np.where(top > 0, top, 1.0)
    inner = domain.dx * np.sum((values / safe) ** q, axis=-1)
    return np.squeeze(safe, -1) * inner ** (1.0 / q)


def frac_norm(field, basis: Basis, zeta) -> np.ndarray:
    """||A^zeta a|| = (sum mu_j^(2 zeta) a_j^2)^(1/2)."""
    zeta = float(zeta)
    if not 0.0 <= zeta <= 1.0:
        raise InvalidParameterError(f"zeta must lie in [0, 1], got {zeta}")
    a = _check_length(field, basis)
    return np.sqrt(np.sum(basis.eigenvalues ** (2 * zeta) * a * a, axis=-1))


def h1_norm(field, basis: Basis) -> np.ndarray:
    return frac_norm(field, basis, 0.5)


@dataclass(frozen=True)
class NormReport:
    lq: dict
    h1: float
    frac: dict


def norms(field, qs, zetas, basis: Basis, domain: Domain) -> NormReport:
    a = _check_length(field, basis)
    if a.ndim != 1:
        raise DimensionError("norms() expects a single field")
    u = synthesize(a, basis)
    lq = {float(q): float(lq_norm(u, domain, q)) for q in qs}
    frac = {float(z): float(frac_norm(a, basis, z)) for z in zetas}
    return NormReport(lq=lq, h1=float(h1_norm(a, basis)), frac=frac)


def apply_semigroup(field, t, basis: Basis) -> np.ndarray:
    """T(t)a = exp(-t A) a for the diagonal generator."""
    if not t >= 0:
        raise InvalidParameterError(f"semigroup time must be >= 0, got {t}")
    a = _check_length(field, basis)
    return np.exp(-basis.eigenvalues * t) * a


def default_delta(basis: Basis) -> float:
    """Decay margin used in the smoothing bound; half the spectral gap."""
    return 0.5 * basis.mu1


def semigroup_constant(zeta, basis: Basis, delta=None) -> float:
    """Smallest C with ||A^zeta T(t)|| <= C t^-zeta e^(-delta t) on the discrete spectrum.

    Per mode ``(mu t)^zeta exp(-(mu - delta) t)`` peaks at ``t = zeta/(mu - delta)``.
    """
    delta = default_delta(basis) if delta is None else float(delta)
    mu = basis.eigenvalues
    if not 0 <= delta < mu[0]:
        raise InvalidParameterError(f"delta must lie in [0, mu_1), got {delta}")
    zeta = float(zeta)
    if zeta == 0.0:
        return 1.0
    peak = (mu * zeta / (mu - delta)) ** zeta * math.exp(-zeta)
    return float(peak.max())

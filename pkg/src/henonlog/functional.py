"""Energy functional for the critical Hardy-Henon equation with log term.

The equation on the unit ball B in R^N (Dirichlet boundary, radial),

    -Lap u = |x|^alpha |u|^(p-2) u + mu*u*log(u^2) + lambda*u,
    p = 2(N+alpha)/(N-2),

is the Euler-Lagrange equation of

    I(u) = 1/2 int |grad u|^2 - 1/p int |x|^alpha u_+^p
           - lambda/2 int u_+^2 - mu/2 int u_+^2 (log u_+^2 - 1),

with u_+ = max(u, 0) taken nodally.  Nonnegative critical points of I
solve the equation.  The Nehari residual

    g(u) = int |grad u|^2 - int |x|^alpha u_+^p
           - lambda int u_+^2 - mu int u_+^2 log u_+^2

equals <I'(u), u> exactly in the discretization used here.

The s^2 log s^2 and s log s^2 expressions are evaluated as 0 below the
floor ``eta_log`` (both tend to 0 there); the floor only silences the
spurious -inf at nodes where u vanishes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .grids import RadialFunction, RadialGrid, ball_volume, dirichlet_energy, integrate_weighted

__all__ = [
    "ProblemParams",
    "EnergyBreakdown",
    "EnergyOverflowError",
    "energy",
    "gradient",
    "gradient_dual",
    "directional_derivative",
    "nehari_residual",
    "fiber_profile",
    "FiberProfile",
    "log_sobolev_check",
]

#: nodal amplitudes beyond this raise instead of overflowing silently
_AMPLITUDE_GUARD = 1e150


class EnergyOverflowError(ValueError):
    """Raised when nodal amplitudes are too large for the energy terms."""


@dataclass(frozen=True)
class ProblemParams:
    """Problem data (N, alpha, lambda, mu) and derived constants."""

    N: int
    alpha: float
    lam: float
    mu: float
    eta_log: float = 1e-150

    def __post_init__(self):
        if not (isinstance(self.N, (int, np.integer)) and self.N >= 3):
            raise ValueError(f"dimension N must be an integer >= 3, got {self.N!r}")
        if not self.alpha > -2.0:
            raise ValueError(f"alpha must exceed -2, got {self.alpha}")
        if not 0.0 < self.eta_log <= 1e-100:
            raise ValueError("eta_log must lie in (0, 1e-100]")

    @property
    def two_star_alpha(self) -> float:
        """Critical exponent 2(N+alpha)/(N-2) of the weighted embedding."""
        return 2.0 * (self.N + self.alpha) / (self.N - 2.0)

    @property
    def omega_volume(self) -> float:
        """Volume of the unit ball."""
        return ball_volume(self.N)

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "alpha": self.alpha,
            "lambda": self.lam,
            "mu": self.mu,
            "two_star_alpha": self.two_star_alpha,
            "omega_volume": self.omega_volume,
        }


@dataclass(frozen=True)
class EnergyBreakdown:
    """I(u) and its constituent integrals; total is the exact field identity."""

    total: float
    kinetic: float
    critical: float
    quadratic: float
    logarithmic: float
    nehari_residual: float

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "kinetic": self.kinetic,
            "critical": self.critical,
            "quadratic": self.quadratic,
            "logarithmic": self.logarithmic,
            "nehari": self.nehari_residual,
        }


def _plus(u: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.maximum(u, 0.0)


def _sq_log_sq(s: NDArray[np.float64], eta: float) -> NDArray[np.float64]:
    """s^2 * log(s^2), evaluated as 0 for s < eta."""
    out = np.zeros_like(s)
    m = s > eta
    sm = s[m]
    out[m] = sm * sm * 2.0 * np.log(sm)
    return out


def _s_log_sq(s: NDArray[np.float64], eta: float) -> NDArray[np.float64]:
    """s * log(s^2), evaluated as 0 for s < eta."""
    out = np.zeros_like(s)
    m = s > eta
    out[m] = s[m] * 2.0 * np.log(s[m])
    return out


def _values(u, grid: RadialGrid) -> NDArray[np.float64]:
    v = u.values if isinstance(u, RadialFunction) else np.asarray(u, dtype=float)
    if np.max(np.abs(v), initial=0.0) > _AMPLITUDE_GUARD:
        raise EnergyOverflowError(
            "nodal amplitude exceeds 1e150; energy terms would overflow"
        )
    return v


def raw_terms(params: ProblemParams, grid: RadialGrid, u):
    """The four integrals (K, P, Q, L) every functional quantity is built from.

    K = int |grad u|^2, P = int |x|^alpha u_+^p, Q = int u_+^2,
    L = int u_+^2 log u_+^2.
    """
    v = _values(u, grid)
    up = _plus(v)
    K = dirichlet_energy(grid, v)
    P = integrate_weighted(grid, up**params.two_star_alpha, params.alpha)
    Q = integrate_weighted(grid, up * up, 0.0)
    L = integrate_weighted(grid, _sq_log_sq(up, params.eta_log), 0.0)
    for name, val in (("kinetic", K), ("critical", P), ("quadratic", Q), ("log", L)):
        if not math.isfinite(val):
            raise EnergyOverflowError(f"{name} integral overflowed")
    return K, P, Q, L


def energy(params: ProblemParams, grid: RadialGrid, u) -> EnergyBreakdown:
    """Evaluate I(u) with its term-by-term breakdown."""
    K, P, Q, L = raw_terms(params, grid, u)
    p = params.two_star_alpha
    kinetic = 0.5 * K
    critical = P / p
    quadratic = 0.5 * params.lam * Q
    logarithmic = 0.5 * params.mu * (L - Q)
    nehari = K - P - params.lam * Q - params.mu * L
    total = kinetic - critical - quadratic - logarithmic
    return EnergyBreakdown(total, kinetic, critical, quadratic, logarithmic, nehari)


def nehari_residual(params: ProblemParams, grid: RadialGrid, u) -> float:
    """g(u) = int|grad u|^2 - int|x|^alpha u_+^p - lambda int u_+^2 - mu int u_+^2 log u_+^2."""
    K, P, Q, L = raw_terms(params, grid, u)
    return K - P - params.lam * Q - params.mu * L


def gradient_dual(params: ProblemParams, grid: RadialGrid, u) -> NDArray[np.float64]:
    """Exact gradient dI/du_i of the discrete energy (a dual vector).

    Pairing with any variation v (v=0 at r=1) via a plain dot product
    reproduces the directional derivative of ``energy`` to roundoff, and
    dot(gradient_dual(u), u) == nehari_residual(u) identically.
    """
    v = _values(u, grid)
    up = _plus(v)
    pos = v > 0.0
    p = params.two_star_alpha
    w0 = grid.measure_weights(0.0)
    wa = grid.measure_weights(params.alpha)
    d = grid.stiffness_matvec(v)
    d -= wa * up ** (p - 1.0)
    d -= params.lam * w0 * up
    d -= params.mu * w0 * _s_log_sq(up, params.eta_log)
    d[-1] = 0.0
    return d


def directional_derivative(params: ProblemParams, grid: RadialGrid, u, v) -> float:
    """<I'(u), v> for a variation v vanishing at r=1."""
    vv = _values(v, grid).copy()
    vv[-1] = 0.0
    return float(np.dot(gradient_dual(params, grid, u), vv))


def gradient(params: ProblemParams, grid: RadialGrid, u) -> RadialFunction:
    """Strong-form residual field -Lap u - |x|^alpha u_+^(p-1) - lambda u_+ - mu u_+ log u_+^2.

    Uses second-order finite differences on the (possibly graded) grid;
    at a node at r=0 the radial Laplacian limit N*u''(0) applies.  The
    boundary node carries 0 by convention (it is not a degree of freedom).
    For the variational pairing use ``gradient_dual``.
    """
    v = _values(u, grid)
    r = grid.r
    n = len(r)
    p = params.two_star_alpha
    lap = np.zeros(n)

    hm = r[1:-1] - r[:-2]
    hp = r[2:] - r[1:-1]
    denom = hm * hp * (hm + hp)
    upp = 2.0 * (hp * v[:-2] - (hm + hp) * v[1:-1] + hm * v[2:]) / denom
    upr = (hm * hm * v[2:] + (hp * hp - hm * hm) * v[1:-1] - hp * hp * v[:-2]) / denom
    lap[1:-1] = upp + (grid.N - 1) * upr / r[1:-1]

    if r[0] == 0.0:
        lap[0] = 2.0 * grid.N * (v[1] - v[0]) / r[1] ** 2
    else:
        h0, h1 = r[1] - r[0], r[2] - r[1]
        d0 = (
            -(2 * h0 + h1) / (h0 * (h0 + h1)) * v[0]
            + (h0 + h1) / (h0 * h1) * v[1]
            - h0 / (h1 * (h0 + h1)) * v[2]
        )
        dd0 = 2.0 * (h1 * v[0] - (h0 + h1) * v[1] + h0 * v[2]) / (h0 * h1 * (h0 + h1))
        lap[0] = dd0 + (grid.N - 1) * d0 / r[0]

    up = _plus(v)
    ra = np.zeros(n)
    pos_r = r > 0.0
    ra[pos_r] = r[pos_r] ** params.alpha
    if not pos_r.all():
        ra[~pos_r] = 1.0 if params.alpha == 0.0 else 0.0

    res = -lap - ra * up ** (p - 1.0) - params.lam * up
    res -= params.mu * _s_log_sq(up, params.eta_log)
    res[-1] = 0.0
    return RadialFunction(grid, res)


@dataclass
class FiberProfile:
    """Sampled fiber map t -> I(t u) and its discrete extreme points."""

    t: NDArray[np.float64]
    values: NDArray[np.float64]
    minima: list
    maxima: list

    @property
    def n_extrema(self) -> int:
        return len(self.minima) + len(self.maxima)


def fiber_profile(params: ProblemParams, grid: RadialGrid, u, t_values) -> FiberProfile:
    """Sample I(t u) over increasing t > 0 and locate its extreme points.

    Requires u >= 0 and u != 0.  Exact in t given the four base
    integrals: I(tu) = t^2/2 K - t^p/p P - lambda/2 t^2 Q
    - mu/2 (t^2 log(t^2) Q + t^2 (L - Q)).
    """
    t = np.asarray(t_values, dtype=float)
    if t.ndim != 1 or len(t) < 3:
        raise ValueError("need at least three t samples")
    if not np.all(np.diff(t) > 0):
        raise ValueError("t_values must be strictly increasing")
    if t[0] <= 0:
        raise ValueError("t_values must be positive")
    v = _values(u, grid)
    if v.min() < 0:
        raise ValueError("fiber profiles require a nonnegative function")
    K, P, Q, L = raw_terms(params, grid, v)
    if K == 0.0:
        raise ValueError("fiber profiles require a nonzero function")
    p = params.two_star_alpha
    vals = (
        0.5 * t**2 * K
        - t**p / p * P
        - 0.5 * params.lam * t**2 * Q
        - 0.5 * params.mu * (t**2 * np.log(t**2) * Q + t**2 * (L - Q))
    )

    dI = np.diff(vals) / np.diff(t)
    band = 1e-12 * (1.0 + np.max(np.abs(vals)))
    sign = np.where(np.abs(dI) <= band, 0, np.sign(dI)).astype(int)
    minima, maxima = [], []
    last = 0
    last_idx = -1
    for j, s in enumerate(sign):
        if s == 0:
            continue
        if last != 0 and s != last:
            t_ext = t[j]
            if last < 0 and s > 0:
                minima.append(float(t_ext))
            else:
                maxima.append(float(t_ext))
        last = s
        last_idx = j
    return FiberProfile(t=t, values=vals, minima=minima, maxima=maxima)


def log_sobolev_check(grid: RadialGrid, u, a_values) -> float:
    """Worst slack of int u^2 log u^2 <= (a/pi)||grad u||^2 + (log|u|_2^2 - N(1+log a))|u|_2^2.

    Returns min over the supplied a > 0 of RHS - LHS; a nonnegative
    value certifies the inequality for this u at every a.
    """
    a_arr = np.asarray(a_values, dtype=float)
    if np.any(a_arr <= 0):
        raise ValueError("all a values must be positive")
    v = _values(u, grid)
    s = np.abs(v)
    lhs = integrate_weighted(grid, _sq_log_sq(s, 1e-150), 0.0)
    K = dirichlet_energy(grid, v)
    Q = integrate_weighted(grid, v * v, 0.0)
    if Q <= 0:
        raise ValueError("u must be nonzero")
    slacks = [
        (a / math.pi) * K + (math.log(Q) - grid.N * (1.0 + math.log(a))) * Q - lhs
        for a in a_arr
    ]
    return float(min(slacks))

"""Independent ODE oracle for positive radial solutions on the unit ball.

Shooting integrates the initial value problem

    u'' + (N-1)u'/r + r^alpha |u|^(p-2) u + lambda u + mu u log u^2 = 0,
    u(0) = d > 0,  u'(0) = 0,

outward with an adaptive embedded Runge-Kutta pair and adjusts the
center value d until the Dirichlet condition u(1) = 0 holds.  Near the
origin a series start

    u(r) ~ d - (lambda d + mu d log d^2) r^2 / (2N)
             - d^(p-1) r^(2+alpha) / ((2+alpha)(N+alpha))

bridges [0, r_start]; the start radius shrinks automatically for large
d so the dropped terms stay below 1e-8 relative.

The integration kernel is the compiled extension ``_speedups`` when the
build produced it, otherwise the pure-Python twin ``_pure``; set
HENONLOG_SHOOTING=pure|compiled to force a backend.
"""

from __future__ import annotations

import math
import multiprocessing
import os
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.interpolate import CubicHermiteSpline

from ..functional import ProblemParams
from ..grids import RadialFunction, RadialGrid
from ..regions import nonexistence_margin

from . import _pure

_backend_req = os.environ.get("HENONLOG_SHOOTING", "")
if _backend_req == "pure":
    _kernel = _pure
    BACKEND = "pure"
else:
    try:
        from . import _speedups as _kernel  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        if _backend_req == "compiled":
            raise
        _kernel = _pure
        BACKEND = "pure"

STATUS_NAMES = {0: "reached_end", 1: "crossed_zero", 2: "step_underflow",
                3: "step_budget", 4: "blow_up"}

__all__ = [
    "BACKEND",
    "ShootingResult",
    "ShootingRoot",
    "SweepReport",
    "series_start",
    "shoot",
    "find_positive_solution",
    "profile_on_grid",
    "nonexistence_sweep",
]

_SERIES_R0 = 1e-5
_RECORD_CAP = 200_000


@dataclass
class ShootingResult:
    """One outward integration from center value d."""

    d: float
    status: str
    terminal_value: float | None  # u(1) when the shot reached r = 1
    terminal_slope: float | None
    first_zero: float | None      # radius of the first sign change, if any
    positive_on_unit_interval: bool
    n_steps: int
    n_rejected: int
    min_step: float
    trajectory: tuple | None = None  # (r, u, v) arrays when recorded

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "status": self.status,
            "terminal_value": self.terminal_value,
            "terminal_slope": self.terminal_slope,
            "first_zero": self.first_zero,
            "positive_on_unit_interval": self.positive_on_unit_interval,
            "n_steps": self.n_steps,
            "n_rejected": self.n_rejected,
            "min_step": self.min_step,
        }


def series_start(params: ProblemParams, d: float):
    """Start radius and (u, u') there from the origin series."""
    if not d > 0:
        raise ValueError("center value d must be positive")
    N, a = params.N, params.alpha
    p = params.two_star_alpha
    coef_a = -(params.lam * d + params.mu * d * math.log(d * d)) / (2.0 * N)
    coef_b = -(d ** (p - 1.0)) / ((2.0 + a) * (N + a))

    r0 = _SERIES_R0
    # shrink the bridge until the dropped corrections are below 1e-8 * d
    tol = 1e-8 * d
    if abs(coef_a) > 0:
        r0 = min(r0, math.sqrt(tol / abs(coef_a)))
    if abs(coef_b) > 0:
        r0 = min(r0, (tol / abs(coef_b)) ** (1.0 / (2.0 + a)))
    r0 = max(r0, 1e-290)
    u0 = d + coef_a * r0 * r0 + coef_b * r0 ** (2.0 + a)
    v0 = 2.0 * coef_a * r0 + (2.0 + a) * coef_b * r0 ** (1.0 + a)
    return r0, u0, v0


def series_values(params: ProblemParams, d: float, r) -> NDArray[np.float64]:
    """Series profile on [0, r_start] (used to extend trajectories to r=0)."""
    N, a = params.N, params.alpha
    p = params.two_star_alpha
    coef_a = -(params.lam * d + params.mu * d * math.log(d * d)) / (2.0 * N)
    coef_b = -(d ** (p - 1.0)) / ((2.0 + a) * (N + a))
    rr = np.asarray(r, dtype=float)
    return d + coef_a * rr * rr + coef_b * rr ** (2.0 + a)


def shoot(
    params: ProblemParams,
    d: float,
    record: bool = False,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    max_steps: int = 1_000_000,
) -> ShootingResult:
    """Integrate the radial IVP with center value d up to r=1 or the first zero."""
    r0, u0, v0 = series_start(params, d)
    if record:
        rec_r = np.empty(_RECORD_CAP)
        rec_u = np.empty(_RECORD_CAP)
        rec_v = np.empty(_RECORD_CAP)
    else:
        rec_r = rec_u = rec_v = np.empty(1)
    status, r, u, v, r_zero, n_steps, n_rej, h_min, nrec = _kernel.integrate_radial(
        float(params.N), params.alpha, params.two_star_alpha,
        params.lam, params.mu,
        r0, u0, v0, rtol, atol, int(max_steps), int(record),
        rec_r, rec_u, rec_v,
    )
    reached = status == 0
    crossed = status == 1
    traj = None
    if record:
        traj = (rec_r[:nrec].copy(), rec_u[:nrec].copy(), rec_v[:nrec].copy())
    return ShootingResult(
        d=d,
        status=STATUS_NAMES[status],
        terminal_value=u if reached else None,
        terminal_slope=v if reached else None,
        first_zero=(r_zero if crossed else (1.0 if reached and u == 0.0 else None)),
        positive_on_unit_interval=reached and u >= 0.0,
        n_steps=n_steps,
        n_rejected=n_rej,
        min_step=h_min,
        trajectory=traj,
    )


def _boundary_gap(params: ProblemParams, d: float, rtol: float, atol: float) -> float:
    """Signed root function: u(1) for positive shots, -(1 - r_zero) otherwise."""
    res = shoot(params, d, rtol=rtol, atol=atol)
    if res.status == "reached_end":
        return res.terminal_value
    if res.status == "crossed_zero":
        return -(1.0 - res.first_zero)
    return math.nan


@dataclass
class ShootingRoot:
    """A center value whose trajectory is positive inside and vanishes at r=1."""

    d: float
    result: ShootingResult


def find_positive_solution(
    params: ProblemParams,
    d_range,
    bisection_tol: float = 1e-12,
    scan_per_decade: int = 8,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> list[ShootingRoot]:
    """Scan u(1) over a log grid of center values and bisect every bracket.

    Returns all roots found (an empty list is a valid outcome).  A root
    is accepted only if its trajectory is positive on (0,1).
    """
    d_lo, d_hi = float(d_range[0]), float(d_range[1])
    if not (0.0 < d_lo < d_hi):
        raise ValueError("need 0 < d_lo < d_hi")
    decades = math.log10(d_hi / d_lo)
    n = max(int(round(decades * scan_per_decade)) + 1, 8)
    ds = np.geomspace(d_lo, d_hi, n)
    gaps = np.array([_boundary_gap(params, float(d), rtol, atol) for d in ds])

    roots: list[ShootingRoot] = []
    for i in range(n - 1):
        g0, g1 = gaps[i], gaps[i + 1]
        if math.isnan(g0) or math.isnan(g1):
            continue
        if g0 == 0.0:
            pass  # exact hit handled by bisection below at the bracket edge
        if not (g0 > 0.0 >= g1 or g0 <= 0.0 < g1):
            continue
        a, b = float(ds[i]), float(ds[i + 1])
        ga = g0
        for _ in range(200):
            mid = math.sqrt(a * b)
            gm = _boundary_gap(params, mid, rtol, atol)
            if math.isnan(gm):
                break
            if (ga > 0) == (gm > 0):
                a, ga = mid, gm
            else:
                b = mid
            if b - a <= bisection_tol * b:
                break
        d_star = math.sqrt(a * b)
        res = shoot(params, d_star, record=True, rtol=rtol, atol=atol)
        interior_ok = res.status == "reached_end" or (
            res.status == "crossed_zero" and res.first_zero > 1.0 - 1e-6
        )
        if not interior_ok:
            continue
        # the accepted shot must truly hang near zero at the boundary
        end_val = res.terminal_value if res.terminal_value is not None else 0.0
        if abs(end_val) > 1e-5 * d_star:
            continue
        if roots and abs(roots[-1].d - d_star) <= 1e-6 * d_star:
            continue
        roots.append(ShootingRoot(d=d_star, result=res))
    return roots


def profile_on_grid(
    params: ProblemParams, root: ShootingRoot, grid: RadialGrid
) -> RadialFunction:
    """Interpolate a recorded trajectory onto a grid (cubic Hermite)."""
    res = root.result
    if res.trajectory is None:
        res = shoot(params, root.d, record=True)
    r, u, v = res.trajectory
    spline = CubicHermiteSpline(r, u, v)
    vals = np.empty(grid.node_count)
    below = grid.r < r[0]
    vals[below] = series_values(params, root.d, grid.r[below])
    inside = (~below) & (grid.r <= r[-1])
    vals[inside] = spline(grid.r[inside])
    vals[grid.r > r[-1]] = 0.0
    vals[-1] = 0.0
    return RadialFunction(grid, np.maximum(vals, 0.0))


@dataclass
class SweepReport:
    """Raster of shooting outcomes against the closed-form margin."""

    rows: list  # (lambda, mu, margin, found, d_star or None)
    violations: list  # rows where margin >= 0 but a root was found

    def to_json(self) -> dict:
        return {
            "rows": [
                {"lambda": lm, "mu": mu, "margin": mg, "found": fd, "d_star": ds}
                for (lm, mu, mg, fd, ds) in self.rows
            ],
            "violations": list(self.violations),
        }


def _sweep_point(args):
    (N, alpha, lam, mu, lambda1, d_lo, d_hi, scan_per_decade, rtol, atol) = args
    params = ProblemParams(N, alpha, lam, mu)
    margin = nonexistence_margin(params, lambda1)
    roots = find_positive_solution(
        params, (d_lo, d_hi), scan_per_decade=scan_per_decade, rtol=rtol, atol=atol
    )
    d_star = roots[0].d if roots else None
    return (lam, mu, margin, len(roots), d_star)


def nonexistence_sweep(
    N: int,
    alpha: float,
    lambdas,
    mus,
    lambda1: float,
    d_range=(1e-8, 1e8),
    scan_per_decade: int = 4,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    workers: int = 1,
) -> SweepReport:
    """Raster the no-solution criterion against exhaustive shooting.

    Every (lambda, mu) point must have mu < 0; alpha must lie in (-2, 0].
    A positive finding at a point with margin >= 0 falsifies either the
    integrator or the configuration and is reported as a violation.
    """
    if not (-2.0 < alpha <= 0.0):
        raise ValueError("the sweep requires alpha in (-2, 0]")
    mus = [float(m) for m in mus]
    lambdas = [float(x) for x in lambdas]
    if any(m >= 0 for m in mus):
        raise ValueError("all mu values must be negative")
    tasks = [
        (N, alpha, lam, mu, lambda1, d_range[0], d_range[1], scan_per_decade, rtol, atol)
        for lam in lambdas
        for mu in mus
    ]
    if workers > 1:
        with multiprocessing.Pool(workers) as pool:
            rows = pool.map(_sweep_point, tasks)
    else:
        rows = [_sweep_point(t) for t in tasks]
    violations = [
        {"lambda": lm, "mu": mu, "margin": mg, "found": fd, "d_star": ds}
        for (lm, mu, mg, fd, ds) in rows
        if mg >= 0 and fd > 0
    ]
    return SweepReport(rows=rows, violations=violations)

"""Radial discretization of the unit ball in R^N.

For radial functions every volume integral over the unit ball B reduces
to a weighted one-dimensional integral,

    int_B |x|^beta f(|x|) dx = omega_N * int_0^1 r^(N-1+beta) f(r) dr,

where omega_N is the surface area of the unit sphere S^(N-1).  This
module provides the node/weight machinery for those integrals, the
Dirichlet energy of radial functions vanishing at r=1, and the first
Dirichlet eigenpair of the radial Laplacian.

Grids start at r=0 when the weight power alpha is nonnegative and at a
strictly positive floor radius otherwise (the singular weight never has
to be evaluated at the origin).  The "geometric" grading clusters nodes
toward the origin so concentration profiles down to the floor radius
stay resolved while the spacing near r=1 remains O(log(n)/n).

Quadrature weights come from a block-composite interpolatory rule: each
block of four consecutive intervals integrates the local quartic
interpolant exactly (Boole's rule on uniform grids), on arbitrary node
spacings.  Any block whose Lagrange weights fail positivity falls back
to the trapezoid rule on that block, so all weights are positive by
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.sparse import diags
from scipy.sparse.linalg import splu

__all__ = [
    "RadialGrid",
    "RadialFunction",
    "build_grid",
    "integrate_weighted",
    "dirichlet_energy",
    "first_eigenpair",
    "first_eigenvalue_richardson",
    "dirichlet_eigenpairs",
    "sphere_area",
    "ball_volume",
]

#: Default smallest admissible radius for grids that must avoid r=0.
R_FLOOR = 1e-8

#: Intervals per quadrature block (local interpolation degree).
_BLOCK = 4

#: Relative bound on the mass excluded by truncating [0, r_floor).
_EXCLUDED_MASS_TOL = 1e-12


def sphere_area(N: int) -> float:
    """Surface area omega_N of the unit sphere S^(N-1) in R^N."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


def ball_volume(N: int) -> float:
    """Volume of the unit ball in R^N, pi^(N/2)/Gamma(N/2+1)."""
    return math.pi ** (N / 2.0) / math.gamma(N / 2.0 + 1.0)


def _block_weights(x: NDArray[np.float64]) -> NDArray[np.float64]:
    """Weights integrating the Lagrange interpolant on nodes x over [x0, xk]."""
    a, b = x[0], x[-1]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    t = (x - mid) / half
    k = len(x)
    powers = np.vander(t, k, increasing=True).T
    moments = np.array(
        [(1.0 - (-1.0) ** (j + 1)) / (j + 1) for j in range(k)]
    )
    w = np.linalg.solve(powers, moments) * half
    return w


def _composite_weights(r: NDArray[np.float64]) -> NDArray[np.float64]:
    """Blockwise interpolatory weights on arbitrary strictly increasing nodes."""
    n = len(r)
    w = np.zeros(n)
    i = 0
    while i < n - 1:
        j = min(i + _BLOCK, n - 1)
        bw = _block_weights(r[i : j + 1])
        if np.any(bw <= 0.0):
            # graded blocks with extreme spacing ratios: keep positivity
            bw = np.zeros(j - i + 1)
            dr = np.diff(r[i : j + 1])
            bw[:-1] += 0.5 * dr
            bw[1:] += 0.5 * dr
        w[i : j + 1] += bw
        i = j
    return w


@dataclass(frozen=True)
class RadialGrid:
    """Nodes, quadrature weights and stiffness data for radial integrals.

    Attributes:
        N: space dimension (>= 3).
        alpha: weight power the grid was built for (controls r_0 > 0).
        r: strictly increasing nodes, r[-1] == 1.
        w: positive quadrature weights for int_{r0}^1 g(r) dr.
        grading: "uniform" or "geometric" (graded toward the origin).
        omega_N: surface area of S^(N-1).
    """

    N: int
    alpha: float
    r: NDArray[np.float64]
    w: NDArray[np.float64]
    grading: str
    omega_N: float
    # exact interval moments int r^(N-1) dr and the tridiagonal stiffness
    # of the piecewise-linear Dirichlet energy (built once, read-only)
    interval_moments: NDArray[np.float64] = field(repr=False, default=None)
    stiff_main: NDArray[np.float64] = field(repr=False, default=None)
    stiff_off: NDArray[np.float64] = field(repr=False, default=None)

    def __post_init__(self):
        for arr in (self.r, self.w, self.interval_moments, self.stiff_main, self.stiff_off):
            if arr is not None:
                arr.flags.writeable = False

    def __len__(self) -> int:
        return len(self.r)

    @property
    def node_count(self) -> int:
        return len(self.r)

    @property
    def ball_volume(self) -> float:
        return ball_volume(self.N)

    def measure_weights(self, beta: float = 0.0) -> NDArray[np.float64]:
        """Nodal weights of int_B |x|^beta (.) dx, i.e. omega_N*w*r^(N-1+beta)."""
        p = self.N - 1 + beta
        rp = np.zeros_like(self.r)
        pos = self.r > 0.0
        rp[pos] = self.r[pos] ** p
        if not pos.all():
            rp[~pos] = 1.0 if p == 0.0 else 0.0
        return self.omega_N * self.w * rp

    def stiffness_matvec(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        """Tridiagonal product A u for the Dirichlet-energy quadratic form."""
        out = self.stiff_main * u
        out[:-1] += self.stiff_off * u[1:]
        out[1:] += self.stiff_off * u[:-1]
        return out

    def to_descriptor(self) -> dict:
        return {
            "N": self.N,
            "alpha": self.alpha,
            "nodes": self.node_count,
            "grading": self.grading,
        }

    @staticmethod
    def from_descriptor(d: dict) -> "RadialGrid":
        return build_grid(d["N"], d["alpha"], d["nodes"], d["grading"])


@dataclass
class RadialFunction:
    """Nodal values of a radial function on a grid, vanishing at r=1."""

    grid: RadialGrid
    values: NDArray[np.float64]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).copy()
        if v.shape != self.grid.r.shape:
            raise ValueError(
                f"value array of length {v.size} does not match grid "
                f"with {self.grid.node_count} nodes"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("radial function has non-finite nodal values")
        v[-1] = 0.0
        self.values = v

    @staticmethod
    def from_callable(grid: RadialGrid, fn) -> "RadialFunction":
        return RadialFunction(grid, fn(grid.r))

    @staticmethod
    def zero(grid: RadialGrid) -> "RadialFunction":
        return RadialFunction(grid, np.zeros(grid.node_count))

    def copy(self) -> "RadialFunction":
        return RadialFunction(self.grid, self.values.copy())


def _as_values(values, grid: RadialGrid) -> NDArray[np.float64]:
    if isinstance(values, RadialFunction):
        if values.grid is not grid and values.grid.node_count != grid.node_count:
            raise ValueError("radial function lives on a different grid")
        return values.values
    v = np.asarray(values, dtype=float)
    if v.ndim == 0:
        v = np.full(grid.node_count, float(v))
    if v.shape != grid.r.shape:
        raise ValueError("nodal sequence does not match the grid")
    return v


def build_grid(
    N: int, alpha: float, node_count: int, grading: str = "auto"
) -> RadialGrid:
    """Build a radial grid on (0,1] or [0,1] with positive quadrature weights.

    For alpha < 0 the first node is strictly positive: the floor radius is
    chosen so the analytically bounded mass of int_0^{r0} r^(N-1+alpha) dr
    stays below 1e-12.
    """
    if not (isinstance(N, (int, np.integer)) and N >= 3):
        raise ValueError(f"dimension N must be an integer >= 3, got {N!r}")
    if not alpha > -2.0:
        raise ValueError(f"weight power alpha must exceed -2, got {alpha}")
    if not (isinstance(node_count, (int, np.integer)) and node_count >= 16):
        raise ValueError(f"node_count must be an integer >= 16, got {node_count!r}")
    if grading == "auto":
        grading = "uniform" if alpha >= 0 else "geometric"
    if grading not in ("uniform", "geometric"):
        raise ValueError(f"unknown grading {grading!r}")

    n = int(node_count)
    if alpha < 0:
        # truncating [0, r_floor) must lose less than 1e-12 of r^(N-1+alpha)
        floor = min(R_FLOOR, (_EXCLUDED_MASS_TOL * (N + alpha)) ** (1.0 / (N + alpha)))
    else:
        floor = R_FLOOR

    if grading == "uniform":
        if alpha < 0:
            r = np.linspace(floor, 1.0, n)
        else:
            r = np.linspace(0.0, 1.0, n)
    else:
        if alpha < 0:
            gamma = -math.log(floor) / math.log(n)
            r = ((np.arange(1, n + 1)) / n) ** gamma
        else:
            gamma = -math.log(floor) / math.log(n - 1)
            r = (np.arange(n) / (n - 1)) ** gamma
    r[-1] = 1.0

    if not np.all(np.diff(r) > 0):
        raise ValueError("grid nodes failed to be strictly increasing")

    w = _composite_weights(r)
    if not np.all(w > 0):
        raise AssertionError("quadrature weights must all be positive")

    omega = sphere_area(N)
    rp = r**N
    m = np.diff(rp) / N
    dr = np.diff(r)
    c = omega * m / dr**2
    main = np.zeros(n)
    main[:-1] += c
    main[1:] += c
    off = -c
    return RadialGrid(
        N=N,
        alpha=float(alpha),
        r=r,
        w=w,
        grading=grading,
        omega_N=omega,
        interval_moments=m,
        stiff_main=main,
        stiff_off=off,
    )


def integrate_weighted(grid: RadialGrid, values, beta: float) -> float:
    """Approximate int_B |x|^beta f(|x|) dx from nodal values of f.

    Returns omega_N * sum_i w_i r_i^(N-1+beta) f(r_i).  Requires
    beta > -N for integrability.  A node at r=0 contributes zero unless
    N-1+beta == 0 (then r^0 := 1); for negative powers at r=0 the nodal
    sample is skipped, which is consistent under refinement.
    """
    if not beta > -grid.N:
        raise ValueError(f"beta must exceed -N = {-grid.N}, got {beta}")
    f = _as_values(values, grid)
    if not np.all(np.isfinite(f)):
        raise ValueError("integrand has non-finite nodal values")
    return float(np.dot(grid.measure_weights(beta), f))


def dirichlet_energy(grid: RadialGrid, u) -> float:
    """int_B |grad u|^2 for the piecewise-linear interpolant of u.

    Uses the interval-constant derivative (u_{i+1}-u_i)/(r_{i+1}-r_i) and
    integrates r^(N-1) exactly on each interval, so the result is a
    symmetric positive-semidefinite quadratic form vanishing only at u=0.
    """
    v = _as_values(u, grid)
    du = np.diff(v) / np.diff(grid.r)
    return float(grid.omega_N * np.dot(grid.interval_moments, du * du))


def _free_stiffness(grid: RadialGrid):
    """Sparse stiffness on the free nodes (Dirichlet node at r=1 removed)."""
    main = grid.stiff_main[:-1]
    off = grid.stiff_off[:-1]
    return diags([off, main, off], [-1, 0, 1], format="csc")


def dirichlet_eigenpairs(
    grid: RadialGrid,
    n_modes: int = 1,
    tol: float = 1e-12,
    max_iter: int = 10_000,
):
    """Lowest eigenpairs of the radial Laplacian with u(1)=0.

    Inverse power iteration on the generalized problem A u = lambda B u
    (A the Dirichlet-energy stiffness, B the lumped quadrature mass),
    with B-orthogonal deflation for higher modes.  Iteration stops when
    the Rayleigh quotient is stable to ``tol`` relative; exceeding
    ``max_iter`` raises.

    Returns (eigenvalues, eigenfunctions) with each eigenfunction
    normalized to int phi^2 = 1 and sign-fixed to positive mass.
    """
    n = grid.node_count
    b = grid.measure_weights(0.0)[:-1]
    lu = splu(_free_stiffness(grid))
    found_vals: list[float] = []
    found_vecs: list[NDArray[np.float64]] = []

    for _ in range(n_modes):
        x = 1.0 - grid.r[:-1] ** 2 + 0.01
        lam_old = np.inf
        converged = False
        for _ in range(max_iter):
            for v in found_vecs:
                x = x - v * (np.dot(v * b, x))
            y = lu.solve(b * x)
            for v in found_vecs:
                y = y - v * (np.dot(v * b, y))
            bnorm = math.sqrt(np.dot(y * b, y))
            if bnorm == 0.0:
                raise RuntimeError("eigen iteration collapsed onto the deflated space")
            x = y / bnorm
            ax = grid.stiffness_matvec(np.append(x, 0.0))[:-1]
            lam = float(np.dot(x, ax) / np.dot(x * b, x))
            if abs(lam - lam_old) <= tol * max(1.0, abs(lam)):
                converged = True
                break
            lam_old = lam
        if not converged:
            raise RuntimeError(
                f"inverse iteration did not converge within {max_iter} iterations"
            )
        if np.dot(b, x) < 0:
            x = -x
        found_vals.append(lam)
        found_vecs.append(x)

    funcs = [
        RadialFunction(grid, np.append(v, 0.0)) for v in found_vecs
    ]
    return found_vals, funcs


def first_eigenpair(grid: RadialGrid, tol: float = 1e-12, max_iter: int = 10_000):
    """Smallest Dirichlet eigenvalue and its positive eigenfunction."""
    vals, funcs = dirichlet_eigenpairs(grid, 1, tol=tol, max_iter=max_iter)
    return vals[0], funcs[0]


def first_eigenvalue_richardson(
    N: int, alpha: float = 0.0, node_count: int = 8192, grading: str = "auto"
) -> float:
    """Richardson-extrapolated first eigenvalue (second-order base rule)."""
    lam_f, _ = first_eigenpair(build_grid(N, alpha, node_count, grading))
    lam_c, _ = first_eigenpair(build_grid(N, alpha, node_count // 2, grading))
    return (4.0 * lam_f - lam_c) / 3.0

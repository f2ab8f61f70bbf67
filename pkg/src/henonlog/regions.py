"""Classification of (lambda, mu) into the solvability regions.

Membership is decided by the sign of explicit margins built from the
first Dirichlet eigenvalue lambda1 and the best embedding constant
S_alpha, which are injected rather than recomputed so a classification
is exactly reproducible from a stored (lambda1, S_alpha) pair:

  A0:  mu > 0 (any lambda);
  B0:  mu < 0, lambda in [0, lambda1), and
       (a+2)/(2(N+a)) ((lambda1-lambda)/lambda1)^((N+a)/(a+2)) S^((N+a)/(a+2))
         + mu/2 |B| > 0;
  C0:  mu < 0 and (a+2)/(2(N+a)) S^((N+a)/(a+2)) + mu/2 e^(-lambda/mu) |B| > 0;
  no positive solution at all when mu < 0, alpha in (-2, 0] and
       m - m*log(m) + lambda - lambda1 >= 0,  m = -(N-2)mu/(alpha+2).

Margins within +-1e-12 of zero yield UNCLASSIFIED: the defining
inequalities are strict and the classifier never forces a side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .functional import ProblemParams, energy
from .grids import RadialGrid, dirichlet_energy

__all__ = [
    "RegionLabel",
    "Classification",
    "classify",
    "nonexistence_margin",
    "threshold_energy",
    "mp_geometry_constants",
    "MountainPassGeometry",
    "sphere_energy_scan",
]

_TIE_BAND = 1e-12


class RegionLabel(str, Enum):
    A0 = "A0"
    B0 = "B0"
    C0 = "C0"
    B0_AND_C0 = "B0_and_C0"
    NONEXISTENCE = "NONEXISTENCE"
    UNCLASSIFIED = "UNCLASSIFIED"


@dataclass(frozen=True)
class Classification:
    label: RegionLabel
    margins: dict

    def to_json(self) -> dict:
        return {"label": self.label.value, "margins": dict(self.margins)}


def _b0_margin(params: ProblemParams, lambda1: float, S_alpha: float) -> float | None:
    if params.lam >= lambda1 or params.lam < 0:
        return None
    N, a = params.N, params.alpha
    e = (N + a) / (a + 2.0)
    return (
        (a + 2.0)
        / (2.0 * (N + a))
        * ((lambda1 - params.lam) / lambda1) ** e
        * S_alpha**e
        + 0.5 * params.mu * params.omega_volume
    )


def _c0_margin(params: ProblemParams, S_alpha: float) -> float | None:
    if params.mu >= 0:
        return None
    N, a = params.N, params.alpha
    e = (N + a) / (a + 2.0)
    return (
        (a + 2.0) / (2.0 * (N + a)) * S_alpha**e
        + 0.5 * params.mu * math.exp(-params.lam / params.mu) * params.omega_volume
    )


def nonexistence_margin(params: ProblemParams, lambda1: float) -> float:
    """m - m*log(m) + lambda - lambda1 with m = -(N-2)mu/(alpha+2).

    Nonnegative values certify that no positive solution exists.  Equals
    the minimum of f(s) = s^(p-2) + lambda - lambda1 + mu*log(s^2) over
    s > 0, attained at s0 = m^((N-2)/(2(alpha+2))).
    """
    if params.mu >= 0:
        raise ValueError("the no-solution criterion requires mu < 0")
    if params.alpha > 0:
        raise ValueError("the no-solution criterion requires alpha in (-2, 0]")
    m = -(params.N - 2.0) * params.mu / (params.alpha + 2.0)
    return m - m * math.log(m) + params.lam - lambda1


def classify(params: ProblemParams, lambda1: float, S_alpha: float) -> Classification:
    """Assign the most specific region label with all margins attached."""
    if not lambda1 > 0:
        raise ValueError("lambda1 must be positive")
    if not S_alpha > 0:
        raise ValueError("S_alpha must be positive")

    margins: dict = {"B0": None, "C0": None, "nonexistence": None}
    if params.mu > 0:
        return Classification(RegionLabel.A0, margins)
    if params.mu == 0:
        return Classification(RegionLabel.UNCLASSIFIED, margins)

    b0 = _b0_margin(params, lambda1, S_alpha)
    c0 = _c0_margin(params, S_alpha)
    margins["B0"] = b0
    margins["C0"] = c0
    if params.alpha <= 0:
        margins["nonexistence"] = nonexistence_margin(params, lambda1)

    nx = margins["nonexistence"]
    if nx is not None and nx >= _TIE_BAND:
        return Classification(RegionLabel.NONEXISTENCE, margins)
    in_b0 = b0 is not None and b0 > _TIE_BAND
    in_c0 = c0 is not None and c0 > _TIE_BAND
    if in_b0 and in_c0:
        return Classification(RegionLabel.B0_AND_C0, margins)
    if in_b0:
        return Classification(RegionLabel.B0, margins)
    if in_c0:
        return Classification(RegionLabel.C0, margins)
    return Classification(RegionLabel.UNCLASSIFIED, margins)


def threshold_energy(alpha: float, N: int, S_alpha: float) -> float:
    """Compactness threshold E_th = (alpha+2)/(2(N+alpha)) * S_alpha^((N+alpha)/(alpha+2))."""
    return (alpha + 2.0) / (2.0 * (N + alpha)) * S_alpha ** ((N + alpha) / (alpha + 2.0))


@dataclass(frozen=True)
class MountainPassGeometry:
    """Sphere radius rho and energy floor sigma of the mountain-pass geometry."""

    rho: float
    sigma: float
    case: str  # which region's formulas produced the constants

    def to_json(self) -> dict:
        return {"rho": self.rho, "sigma": self.sigma, "case": self.case}


def mp_geometry_constants(
    params: ProblemParams, lambda1: float, S_alpha: float
) -> MountainPassGeometry:
    """Explicit (rho, sigma) with I >= sigma > 0 on the sphere ||grad u|| = rho.

    B0 formulas take precedence when the point lies in both regions.
    """
    cls = classify(params, lambda1, S_alpha)
    N, a = params.N, params.alpha
    e = (N + a) / (a + 2.0)
    if cls.label in (RegionLabel.B0, RegionLabel.B0_AND_C0):
        frac = (lambda1 - params.lam) / lambda1
        rho = frac ** ((N - 2.0) / (2.0 * (a + 2.0))) * S_alpha ** (e / 2.0)
        sigma = cls.margins["B0"]
        return MountainPassGeometry(rho=rho, sigma=sigma, case="B0")
    if cls.label is RegionLabel.C0:
        rho = S_alpha ** (e / 2.0)
        sigma = cls.margins["C0"]
        return MountainPassGeometry(rho=rho, sigma=sigma, case="C0")
    raise ValueError(
        f"mountain-pass constants require (lambda, mu) in B0 or C0, got {cls.label.value}"
    )


def sphere_energy_scan(
    params: ProblemParams,
    grid: RadialGrid,
    rho: float,
    n_dirs: int = 200,
    seed: int = 0,
) -> float:
    """Min of I(u) over random directions scaled to ||grad u|| = rho."""
    rng = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(n_dirs):
        u = rng.standard_normal(grid.node_count)
        u[-1] = 0.0
        ng = math.sqrt(dirichlet_energy(grid, u))
        u *= rho / ng
        worst = min(worst, energy(params, grid, u).total)
    return worst

"""State-level timing-risk analysis against an alert-limit unsafe set.

The risk bound combines the probability mass outside the gamma-confidence
set (erf tail term) with a slab sum over nested confidence polytopes
intersected with the unsafe strip |time error| >= alert limit.  The result
is an upper bound on the violation probability, not a probability itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from srdkf._kernels import clipped_strip_area, leveled_strip_areas
from srdkf.sets import (
    PZonotope,
    Polytope2D,
    _chol_regularized,
    covariance_sqrt,
)

__all__ = ["UnsafeSet", "RiskResult", "halfplane_clip_area", "timing_risk"]


@dataclass(frozen=True)
class UnsafeSet:
    """Two half-planes |time error| >= alert_limit (seconds)."""

    alert_limit: float

    def __post_init__(self):
        if not self.alert_limit > 0.0:
            raise ValueError(f"alert_limit must be positive, got {self.alert_limit}")


@dataclass(frozen=True)
class RiskResult:
    """Decomposed risk bound: tail term plus leveled slab mass."""

    risk: float
    tail_term: float
    slab_mass: float
    per_level: np.ndarray  # (levels, 2) columns: level density, clip area

    def __post_init__(self):
        if self.tail_term < 0.0 or self.slab_mass < 0.0:
            raise ValueError("risk components must be nonnegative")
        if not math.isclose(
            self.risk, self.tail_term + self.slab_mass, rel_tol=1e-12, abs_tol=1e-300
        ):
            raise ValueError("risk must equal tail_term + slab_mass")


def halfplane_clip_area(P: Polytope2D, B: UnsafeSet) -> float:
    """Area of a convex polygon inside the unsafe strips.

    Sutherland-Hodgman clips against x >= AL and x <= -AL; the two shoelace
    areas are summed.  Degenerate polygons contribute zero.
    """
    return float(
        clipped_strip_area(np.ascontiguousarray(P.vertices), B.alert_limit)
    )


def _canonical_split(G, S):
    """Canonicalize fixed and tail generator columns, sorted by angle."""
    cols = np.hstack([G, S])
    is_tail = np.zeros(cols.shape[1], dtype=np.bool_)
    is_tail[G.shape[1] :] = True
    keep = np.linalg.norm(cols, axis=0) > 0.0
    cols, is_tail = cols[:, keep], is_tail[keep]
    if cols.shape[1]:
        flip = (cols[1] < 0.0) | ((cols[1] == 0.0) & (cols[0] < 0.0))
        cols = np.where(flip, -cols, cols)
        order = np.argsort(np.arctan2(cols[1], cols[0]), kind="stable")
        cols, is_tail = cols[:, order], is_tail[order]
    return np.ascontiguousarray(cols), is_tail


def timing_risk(
    err_corr: PZonotope,
    B: UnsafeSet,
    gamma: float = 3.0,
    levels: int = 32,
    mode: str = "slab",
) -> RiskResult:
    """Bound the probability that the timing error violates the alert limit.

    tail_term = 1 - erf(gamma / sqrt(2))^(2n) covers mass outside the
    gamma-confidence set.  The slab term sums, over confidence polytopes at
    gamma_l = gamma * (levels - l) / levels, the unsafe-strip intersection
    area times the density increment between consecutive levels (upper
    Riemann sum).  ``mode="literal"`` instead weights each area by the full
    level density, which over-counts nested levels; it is kept for
    comparison only.
    """
    if err_corr.n != 2:
        raise ValueError("timing risk is defined for the 2-D timing state")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if not gamma > 0.0:
        raise ValueError("gamma must be positive")
    if mode not in ("slab", "literal"):
        raise ValueError(f"unknown mode {mode!r}")

    Lc = _chol_regularized(err_corr.covariance, "covariance")
    log_peak = -math.log(2.0 * math.pi) - float(np.sum(np.log(np.diag(Lc))))
    peak = math.exp(log_peak)
    tail_term = 1.0 - math.erf(gamma / math.sqrt(2.0)) ** 4

    S = covariance_sqrt(err_corr.covariance)
    dirs, is_tail = _canonical_split(err_corr.center_generators, S)
    ls = np.arange(1, levels + 1, dtype=float)
    gammas = gamma * (levels - ls) / levels
    densities = peak * np.exp(-0.5 * gammas * gammas)
    cx, cy = err_corr.center_mean
    if dirs.shape[1]:
        areas = leveled_strip_areas(dirs, is_tail, gammas, cx, cy, B.alert_limit)
    else:
        areas = np.zeros(levels)

    if mode == "slab":
        prev = np.r_[peak * math.exp(-0.5 * gamma * gamma), densities[:-1]]
        weights = densities - prev
    else:
        weights = densities
    slab_mass = float(np.dot(areas, weights))
    return RiskResult(
        tail_term + slab_mass,
        tail_term,
        slab_mass,
        np.column_stack([densities, areas]),
    )

"""Zonotope / probabilistic-zonotope algebra and 2-D polytope conversion.

A probabilistic zonotope (c, G, Sigma) is the supremum of Gaussian densities
with covariance Sigma whose means range over the zonotope <c, G>.  It is an
enclosing probabilistic hull, not a PDF: the enclosed "mass" need not be one.
All operations here are pure functions on immutable values; nothing mutates
its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from srdkf._kernels import box_qp_cd

__all__ = [
    "Zonotope",
    "PZonotope",
    "Polytope2D",
    "LeveledPolytope",
    "BoxQPError",
    "minkowski_sum",
    "linear_map",
    "translate",
    "from_bounds",
    "mahalanobis_to_zonotope",
    "sup_density",
    "gamma_confidence_zonotope",
    "zonotope_to_polytope2d",
    "overapprox_leveled_polytopes",
    "covariance_sqrt",
]

# Generators with norm below this are treated as degenerate and dropped
# during polytope conversion.
_DEGENERATE_NORM = 1e-15


class BoxQPError(RuntimeError):
    """Box-QP failed to converge; carries the best iterate found."""

    def __init__(self, message, distance, beta):
        super().__init__(message)
        self.distance = distance
        self.beta = beta


def _as_vector(x, name):
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class Zonotope:
    """Centrally symmetric set <c, G> = {c + G b : b in [-1, 1]^e}."""

    center: np.ndarray
    generators: np.ndarray

    def __post_init__(self):
        c = _as_vector(self.center, "center")
        G = np.asarray(self.generators, dtype=float)
        if G.size == 0:
            G = G.reshape(c.shape[0], 0)
        if G.ndim != 2 or G.shape[0] != c.shape[0]:
            raise ValueError(
                f"generators must be ({c.shape[0]} x e), got shape {G.shape}"
            )
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "generators", G)

    @property
    def n(self):
        return self.center.shape[0]

    @property
    def e(self):
        return self.generators.shape[1]


def _validated_covariance(S, n):
    """Symmetrize and PSD-clamp a covariance matrix.

    Eigenvalues are required to be >= -1e-12 * ||Sigma||; anything negative
    beyond float noise is rejected, small negatives are clamped to zero.
    """
    S = np.asarray(S, dtype=float)
    if S.shape != (n, n):
        raise ValueError(f"covariance must be ({n} x {n}), got shape {S.shape}")
    scale = np.linalg.norm(S)
    if scale == 0.0:
        return np.zeros((n, n))
    asym = np.linalg.norm(S - S.T)
    if asym > 1e-9 * scale:
        raise ValueError("covariance must be symmetric")
    S = 0.5 * (S + S.T)
    if n == 2:
        # closed-form eigenvalue bound for the hot 2-D path
        tr = S[0, 0] + S[1, 1]
        det = S[0, 0] * S[1, 1] - S[0, 1] * S[1, 0]
        disc = max(tr * tr - 4.0 * det, 0.0)
        eig_min = 0.5 * (tr - math.sqrt(disc))
        if eig_min >= 0.0:
            return S
    # fast path: a successful Cholesky proves positive definiteness
    try:
        np.linalg.cholesky(S)
        return S
    except np.linalg.LinAlgError:
        pass
    w, V = np.linalg.eigh(S)
    if w[0] < -1e-12 * scale:
        raise ValueError(f"covariance has negative eigenvalue {w[0]:.3e}")
    w = np.clip(w, 0.0, None)
    return (V * w) @ V.T


@dataclass(frozen=True)
class PZonotope:
    """Probabilistic zonotope (center_mean, center_generators, covariance)."""

    center_mean: np.ndarray
    center_generators: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        c = _as_vector(self.center_mean, "center_mean")
        G = np.asarray(self.center_generators, dtype=float)
        if G.size == 0:
            G = G.reshape(c.shape[0], 0)
        if G.ndim != 2 or G.shape[0] != c.shape[0]:
            raise ValueError(
                f"center_generators must be ({c.shape[0]} x e), got {G.shape}"
            )
        S = _validated_covariance(self.covariance, c.shape[0])
        object.__setattr__(self, "center_mean", c)
        object.__setattr__(self, "center_generators", G)
        object.__setattr__(self, "covariance", S)

    @property
    def n(self):
        return self.center_mean.shape[0]

    @property
    def e(self):
        return self.center_generators.shape[1]

    def center_zonotope(self):
        """Zonotope of possible center means."""
        return Zonotope(self.center_mean, self.center_generators)


@dataclass(frozen=True)
class Polytope2D:
    """Convex polygon, counter-clockwise vertex order.

    Degenerate polygons (a point or a segment) are allowed and have zero
    area; this keeps downstream risk computation total.
    """

    vertices: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.vertices, dtype=float)
        if V.ndim != 2 or V.shape[1] != 2:
            raise ValueError(f"vertices must be (m x 2), got shape {V.shape}")
        if V.shape[0] == 0:
            raise ValueError("polytope needs at least one vertex")
        scale = max(1.0, float(np.max(np.abs(V))))
        # drop duplicate consecutive vertices (1e-12 relative)
        keep = [0]
        for i in range(1, V.shape[0]):
            if np.max(np.abs(V[i] - V[keep[-1]])) > 1e-12 * scale:
                keep.append(i)
        if len(keep) > 1 and np.max(np.abs(V[keep[-1]] - V[keep[0]])) <= 1e-12 * scale:
            keep.pop()
        V = V[keep]
        if V.shape[0] >= 3:
            e = np.roll(V, -1, axis=0) - V
            cross = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
            if np.any(cross < -1e-9 * scale * scale):
                raise ValueError("vertices are not convex in CCW order")
        object.__setattr__(self, "vertices", V)

    def area(self):
        V = self.vertices
        if V.shape[0] < 3:
            return 0.0
        x, y = V[:, 0], V[:, 1]
        return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


@dataclass(frozen=True)
class LeveledPolytope:
    """One slab of a leveled over-approximation of a p-Zonotope."""

    polytope: Polytope2D
    level_density: float
    density_increment: float

    def __post_init__(self):
        if not (self.level_density >= self.density_increment >= 0.0):
            raise ValueError(
                "need level_density >= density_increment >= 0, got "
                f"{self.level_density!r}, {self.density_increment!r}"
            )


def minkowski_sum(first: PZonotope, *rest: PZonotope) -> PZonotope:
    """Minkowski sum: add centers and covariances, concatenate generators."""
    c = first.center_mean.copy()
    gens = [first.center_generators]
    S = first.covariance.copy()
    for other in rest:
        if other.n != first.n:
            raise ValueError(
                f"dimension mismatch in minkowski_sum: {first.n} vs {other.n}"
            )
        c = c + other.center_mean
        gens.append(other.center_generators)
        S = S + other.covariance
    return PZonotope(c, np.hstack(gens), S)


def linear_map(A, L: PZonotope) -> PZonotope:
    """Map L through the matrix A: (A c, A G, A Sigma A^T)."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[1] != L.n:
        raise ValueError(f"matrix shape {A.shape} does not map dimension {L.n}")
    return PZonotope(A @ L.center_mean, A @ L.center_generators, A @ L.covariance @ A.T)


def translate(mu, L: PZonotope) -> PZonotope:
    """Shift the center mean; generators and covariance are unchanged."""
    mu = _as_vector(mu, "mu")
    if mu.shape[0] != L.n:
        raise ValueError(f"dimension mismatch in translate: {mu.shape[0]} vs {L.n}")
    return PZonotope(mu + L.center_mean, L.center_generators, L.covariance)


def from_bounds(mean_lo, mean_hi, cov_hi, inflation) -> PZonotope:
    """Build a p-Zonotope from interval bounds on mean and covariance.

    center = midpoint of the mean interval, generators = diag of the mean
    half-widths, covariance = inflation * diag(cov_hi).
    """
    lo = _as_vector(mean_lo, "mean_lo")
    hi = _as_vector(mean_hi, "mean_hi")
    ch = _as_vector(cov_hi, "cov_hi")
    if not (lo.shape == hi.shape == ch.shape):
        raise ValueError("bound vectors must share one shape")
    if np.any(lo > hi):
        raise ValueError("mean_lo must be <= mean_hi elementwise")
    if np.any(ch < 0.0):
        raise ValueError("cov_hi must be nonnegative")
    if not inflation > 0.0:
        raise ValueError("inflation must be positive")
    return PZonotope(0.5 * (lo + hi), np.diag(0.5 * (hi - lo)), inflation * np.diag(ch))


def _chol_regularized(M, name):
    """Lower Cholesky factor, with a 1e-12*trace jitter retry."""
    M = np.asarray(M, dtype=float)
    try:
        return la.cholesky(M, lower=True, check_finite=False)
    except la.LinAlgError:
        pass
    jitter = 1e-12 * np.trace(M)
    if jitter <= 0.0:
        raise ValueError(f"{name} is singular and has no positive trace")
    try:
        return la.cholesky(
            M + jitter * np.eye(M.shape[0]), lower=True, check_finite=False
        )
    except la.LinAlgError as exc:
        raise ValueError(f"{name} is singular even after regularization") from exc


def mahalanobis_to_zonotope(point, Z: Zonotope, metric, tol=1e-9, max_sweeps=10_000):
    """Distance from a point to a zonotope under a quadratic metric.

    Solves min over b in [-1,1]^e of
    sqrt((x - c - G b)^T M^-1 (x - c - G b)) as a box-constrained QP
    (cyclic coordinate descent on the whitened problem).  Returns
    (distance, argmin beta).
    """
    x = _as_vector(point, "point")
    if x.shape[0] != Z.n:
        raise ValueError(f"point dimension {x.shape[0]} != zonotope dimension {Z.n}")
    Lc = _chol_regularized(np.asarray(metric, dtype=float), "metric")
    u = la.solve_triangular(Lc, x - Z.center, lower=True, check_finite=False)
    if Z.e == 0:
        return float(np.linalg.norm(u)), np.zeros(0)
    W = la.solve_triangular(Lc, Z.generators, lower=True, check_finite=False)
    beta, r, _, converged = box_qp_cd(
        np.ascontiguousarray(W), np.ascontiguousarray(u), tol, max_sweeps
    )
    dist = float(np.linalg.norm(r))
    if not converged:
        raise BoxQPError(
            f"box-QP did not converge in {max_sweeps} sweeps", dist, beta
        )
    return dist, beta


def sup_density(L: PZonotope, point) -> float:
    """Supremum over the center zonotope of Gaussian densities at ``point``.

    Equals peak * exp(-d^2/2) with peak = ((2 pi)^n det Sigma)^(-1/2) and d
    the covariance-metric distance from the point to the center zonotope.
    Computed in the log domain.
    """
    Lc = _chol_regularized(L.covariance, "covariance")
    log_peak = -0.5 * L.n * math.log(2.0 * math.pi) - float(
        np.sum(np.log(np.diag(Lc)))
    )
    d, _ = mahalanobis_to_zonotope(point, L.center_zonotope(), L.covariance)
    return math.exp(log_peak - 0.5 * d * d)


def covariance_sqrt(S) -> np.ndarray:
    """Square-root factor of a PSD matrix via symmetric eigendecomposition.

    Columns are eigenvectors scaled by sqrt(eigenvalue), in descending
    eigenvalue order with a deterministic sign convention; negative
    eigenvalues are clamped to zero.
    """
    S = np.asarray(S, dtype=float)
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    w = np.clip(w[::-1], 0.0, None)
    V = V[:, ::-1]
    # fix eigenvector signs: largest-magnitude entry positive
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0.0] = 1.0
    return V * signs * np.sqrt(w)


def gamma_confidence_zonotope(L: PZonotope, gamma) -> Zonotope:
    """Zonotope enclosing the p-Zonotope tails truncated at gamma sigmas.

    Appends gamma-scaled covariance square-root columns to the center
    generators; exactly-zero columns are dropped.
    """
    S = covariance_sqrt(L.covariance)
    tail = gamma * S
    tail = tail[:, np.any(tail != 0.0, axis=0)]
    return Zonotope(L.center_mean, np.hstack([L.center_generators, tail]))


def _canonical_directions(G):
    """Flip 2-D generators into the upper half plane and sort by angle.

    Exactly-parallel generators are summed into one column (an exact
    representation of the same zonotope).
    """
    keep = np.linalg.norm(G, axis=0) >= _DEGENERATE_NORM
    G = G[:, keep]
    if G.shape[1] == 0:
        return G
    flip = (G[1] < 0.0) | ((G[1] == 0.0) & (G[0] < 0.0))
    G = np.where(flip, -G, G)
    angles = np.arctan2(G[1], G[0])
    order = np.argsort(angles, kind="stable")
    G = G[:, order]
    angles = angles[order]
    starts = np.flatnonzero(np.r_[True, np.diff(angles) > 0.0])
    if starts.shape[0] < G.shape[1]:
        G = np.add.reduceat(G, starts, axis=1)
    return G


def zonotope_to_polytope2d(Z: Zonotope) -> Polytope2D:
    """Exact vertex enumeration of a 2-D zonotope.

    Generators are canonicalized to the upper half plane and walked in
    angle order; the polygon has 2e vertices for e generators in general
    position.  Near-zero generators (norm < 1e-15) are dropped; all-parallel
    generator sets produce a 2-vertex degenerate polygon.
    """
    if Z.n != 2:
        raise ValueError(f"only 2-D zonotopes convert to polygons, got n={Z.n}")
    G = _canonical_directions(Z.generators)
    c = Z.center
    e = G.shape[1]
    if e == 0:
        return Polytope2D(c.reshape(1, 2))
    total = G.sum(axis=1)
    upper = np.empty((e + 1, 2))
    upper[0] = c - total
    upper[1:] = (c - total)[None, :] + 2.0 * np.cumsum(G.T, axis=0)
    # the opposite boundary chain repeats the generator sequence from the
    # start: vertex after c + total is (c + total) - 2 g_1, i.e. 2c - upper[1]
    lower = 2.0 * c[None, :] - upper[1:e]
    return Polytope2D(np.vstack([upper, lower]))


def overapprox_leveled_polytopes(L: PZonotope, gamma, levels) -> list[LeveledPolytope]:
    """Over-approximate a 2-D p-Zonotope by nested confidence polytopes.

    Level l = 1..levels uses gamma_l = gamma * (levels - l) / levels, so the
    outermost polytope is just inside the gamma-confidence set and the
    innermost (gamma = 0) is the center-zonotope footprint at the density
    peak.  Output is ordered by increasing level density.
    """
    if L.n != 2:
        raise ValueError("leveled over-approximation is 2-D only")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if not gamma > 0.0:
        raise ValueError("gamma must be positive")
    Lc = _chol_regularized(L.covariance, "covariance")
    log_peak = -math.log(2.0 * math.pi) - float(np.sum(np.log(np.diag(Lc))))
    peak = math.exp(log_peak)
    S = covariance_sqrt(L.covariance)
    out = []
    p_prev = peak * math.exp(-0.5 * gamma * gamma)
    for lev in range(1, levels + 1):
        g = gamma * (levels - lev) / levels
        zono = Zonotope(L.center_mean, np.hstack([L.center_generators, g * S]))
        p = peak * math.exp(-0.5 * g * g)
        out.append(LeveledPolytope(zonotope_to_polytope2d(zono), p, p - p_prev))
        p_prev = p
    return out

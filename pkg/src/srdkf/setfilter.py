"""Set-valued distributed Kalman filter with measurement-level attack rejection.

Alongside the point-valued state, each receiver propagates predicted and
corrected p-Zonotopes of its estimation error.  Incoming measurement bundles
carry a broadcast attack status in [0, 1]; the measurement update scales each
optimal gain by (1 - attack_status), so fully flagged bundles are rejected
without estimating the attack magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from srdkf.estimator import PointState, _inv2, cho_factor_jittered, pv_time_update
from srdkf.sets import (
    BoxQPError,
    PZonotope,
    Zonotope,
    linear_map,
    mahalanobis_to_zonotope,
    minkowski_sum,
)

__all__ = [
    "SetState",
    "MeasurementBundle",
    "sr_time_update",
    "innovation_pzonotope",
    "attack_status",
    "adaptive_gain",
    "sr_measurement_update",
]


@dataclass(frozen=True)
class SetState:
    """Per-receiver filter state: point estimate plus error p-Zonotopes."""

    point: PointState
    err_pred: PZonotope
    err_corr: PZonotope

    def __post_init__(self):
        if self.err_pred.n != 2 or self.err_corr.n != 2:
            raise ValueError("estimation-error sets must be 2-D")


@dataclass(frozen=True)
class MeasurementBundle:
    """One receiver's broadcast: measurements, noise model, attack status."""

    receiver_id: int
    z: np.ndarray
    H: np.ndarray
    R: np.ndarray
    attack_status: float
    noise_pz: PZonotope

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        H = np.asarray(self.H, dtype=float)
        R = np.asarray(self.R, dtype=float)
        m = z.shape[0]
        if z.ndim != 1 or m % 2:
            raise ValueError("z must be a flat vector of even length")
        if H.shape != (m, 2) or R.shape != (m, m):
            raise ValueError(
                f"inconsistent bundle shapes: z {z.shape}, H {H.shape}, R {R.shape}"
            )
        if not 0.0 <= self.attack_status <= 1.0:
            raise ValueError(f"attack_status must lie in [0, 1], got {self.attack_status}")
        if self.noise_pz.n != m:
            raise ValueError("noise p-Zonotope dimension must match z")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "R", R)

    def r_cholesky(self):
        """Cholesky factorization of R, cached (R is shared by consumers)."""
        chol = self.__dict__.get("_r_chol")
        if chol is None:
            chol = cho_factor_jittered(self.R, self.receiver_id)
            object.__setattr__(self, "_r_chol", chol)
        return chol


def sr_time_update(s: SetState, F, Q, noise_pz_process: PZonotope) -> SetState:
    """Propagate the point state and the predicted error p-Zonotope.

    err_pred = F err_corr (+) process noise bound; the point state follows
    the standard time update.
    """
    if noise_pz_process.n != 2:
        raise ValueError("process noise p-Zonotope must be 2-D")
    F = np.asarray(F, dtype=float)
    err_pred = minkowski_sum(linear_map(F, s.err_corr), noise_pz_process)
    return SetState(pv_time_update(s.point, F, Q), err_pred, s.err_corr)


def innovation_pzonotope(s: SetState, H, noise_pz_meas: PZonotope) -> PZonotope:
    """Expected innovation set: measurement noise bound (+) H err_pred."""
    return minkowski_sum(noise_pz_meas, linear_map(H, s.err_pred))


def _merge_constant_columns(G):
    """Exactly merge generator columns proportional to the ones vector.

    Columns with all-equal entries span one direction; their absolute
    values sum.  This leaves the represented set unchanged and keeps the
    box-QP small when H is the all-ones measurement map.
    """
    if G.shape[1] == 0 or G.shape[0] < 2:
        return G
    const = np.all(G == G[0:1, :], axis=0)
    if np.count_nonzero(const) <= 1:
        return G
    total = float(np.sum(np.abs(G[0, const])))
    merged = np.full((G.shape[0], 1), total)
    return np.hstack([G[:, ~const], merged])


def attack_status(L_eps: PZonotope, epsilon) -> float:
    """Deviation of the observed innovation from its expected p-Zonotope.

    Equals one minus the ratio of the supremum density at the innovation to
    the supremum density at the center mean, i.e. 1 - exp(-d^2/2) with d
    the covariance-metric distance of the innovation to the center
    zonotope.  Clamped to [0, 1].

    The innovation QP is rank-deficient whenever the generator count
    exceeds the measurement dimension; its value converges orders of
    magnitude faster than its coordinates, so a bounded sweep budget is
    used and the best iterate is accepted on non-convergence.
    """
    G = _merge_constant_columns(L_eps.center_generators)
    try:
        d, _ = mahalanobis_to_zonotope(
            epsilon, Zonotope(L_eps.center_mean, G), L_eps.covariance,
            max_sweeps=200,
        )
    except BoxQPError as err:
        d = err.distance
    val = 1.0 - math.exp(-0.5 * d * d)
    return min(1.0, max(0.0, val))


def adaptive_gain(attack_status, H_j, P_bar, R_j):
    """Attack-weighted gain (1 - alpha) * P_bar H^T R^-1 (2 x 2N)."""
    H_j = np.asarray(H_j, dtype=float)
    R_j = np.asarray(R_j, dtype=float)
    P_bar = np.asarray(P_bar, dtype=float)
    rinv_h = la.cho_solve(cho_factor_jittered(R_j), H_j, check_finite=False)
    return (1.0 - attack_status) * (P_bar @ rinv_h.T)


def sr_measurement_update(s: SetState, bundles) -> SetState:
    """Correct the point state and error p-Zonotope from neighborhood bundles.

    The fused covariance comes from the information-form update over all
    bundles; gains are the optimal ones scaled by (1 - attack_status).  The
    corrected set is
        (I - sum K H) err_pred (+) sum_j K_j noise_j,
    with generator concatenation and the quadratic covariance form.
    """
    if not bundles:
        raise ValueError("need at least one measurement bundle")
    info = _inv2(s.point.covariance)
    solved = []
    for b in bundles:
        rinv_h = la.cho_solve(b.r_cholesky(), b.H, check_finite=False)
        info = info + b.H.T @ rinv_h
        solved.append((b, rinv_h))
    P_bar = _inv2(info)
    P_bar = 0.5 * (P_bar + P_bar.T)

    mean = s.point.mean.copy()
    KH = np.zeros((2, 2))
    gains = []
    for b, rinv_h in solved:
        K = (1.0 - b.attack_status) * (P_bar @ rinv_h.T)
        gains.append(K)
        KH += K @ b.H
        mean = mean + K @ (b.z - b.H @ s.point.mean)
    IKH = np.eye(2) - KH

    pred = s.err_pred
    center = IKH @ pred.center_mean
    gen_blocks = [IKH @ pred.center_generators]
    Sigma = IKH @ pred.covariance @ IKH.T
    for (b, _), K in zip(solved, gains):
        center = center + K @ b.noise_pz.center_mean
        gen_blocks.append(K @ b.noise_pz.center_generators)
        Sigma = Sigma + K @ b.noise_pz.covariance @ K.T
    G = np.hstack(gen_blocks)
    G = G[:, np.any(G != 0.0, axis=0)]
    err_corr = PZonotope(center, G, Sigma)
    return SetState(PointState(mean, P_bar), pred, err_corr)

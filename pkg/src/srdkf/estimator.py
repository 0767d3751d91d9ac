"""Point-valued baselines: adaptive distributed KF and single-receiver KF.

State is the 2-vector [time bias (s), drift rate (s/s)].  The measurement
update fuses neighborhood bundles in information form; the adaptive
measurement-noise update blends the previous covariance with the innovation
outer product plus the projected prediction covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

__all__ = [
    "PointState",
    "NoiseDescriptor",
    "pv_time_update",
    "adaptive_R",
    "pv_measurement_update",
    "single_adaptive_kf_step",
]

_JITTER = 1e-18


@dataclass(frozen=True)
class PointState:
    """Point-valued mean and covariance of the timing state."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mean, dtype=float)
        P = np.asarray(self.covariance, dtype=float)
        if m.shape != (2,) or P.shape != (2, 2):
            raise ValueError(f"bad state shapes {m.shape}, {P.shape}")
        P = 0.5 * (P + P.T)
        # invariant: jittered Cholesky must succeed (closed form for 2x2)
        a, d = P[0, 0] + _JITTER, P[1, 1] + _JITTER
        if not (a > 0.0 and a * d - P[0, 1] * P[1, 0] > 0.0):
            raise np.linalg.LinAlgError("state covariance is not positive definite")
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "covariance", P)


@dataclass(frozen=True)
class NoiseDescriptor:
    """Per-receiver noise model: measurement R, process Q, forgetting psi."""

    R: np.ndarray
    Q: np.ndarray
    psi: float

    def __post_init__(self):
        R = np.asarray(self.R, dtype=float)
        Q = np.asarray(self.Q, dtype=float)
        if R.ndim != 2 or R.shape[0] != R.shape[1] or R.shape[0] % 2:
            raise ValueError(f"R must be square with even size, got {R.shape}")
        if Q.shape != (2, 2):
            raise ValueError(f"Q must be 2x2, got {Q.shape}")
        for M, name in ((R, "R"), (Q, "Q")):
            if np.linalg.norm(M - M.T) > 1e-9 * max(1e-300, np.linalg.norm(M)):
                raise ValueError(f"{name} must be symmetric")
            if np.any(np.linalg.eigvalsh(0.5 * (M + M.T)) < -1e-12 * np.linalg.norm(M)):
                raise ValueError(f"{name} must be PSD")
        if not 0.0 <= self.psi <= 1.0:
            raise ValueError(f"psi must lie in [0, 1], got {self.psi}")
        object.__setattr__(self, "R", 0.5 * (R + R.T))
        object.__setattr__(self, "Q", 0.5 * (Q + Q.T))


def pv_time_update(s: PointState, F, Q) -> PointState:
    """Propagate mean and covariance one step: (F x, F P F^T + Q)."""
    F = np.asarray(F, dtype=float)
    Q = np.asarray(Q, dtype=float)
    return PointState(F @ s.mean, F @ s.covariance @ F.T + Q)


def adaptive_R(prev_R, psi, innovation, H, P_hat):
    """Forgetting-factor update of the measurement noise covariance.

    R <- psi * R_prev + (1 - psi) * (eps eps^T + H P_hat H^T), symmetrized.
    """
    eps = np.asarray(innovation, dtype=float)
    H = np.asarray(H, dtype=float)
    P_hat = np.asarray(P_hat, dtype=float)
    R = psi * np.asarray(prev_R, dtype=float) + (1.0 - psi) * (
        np.outer(eps, eps) + H @ P_hat @ H.T
    )
    return 0.5 * (R + R.T)


def cho_factor_jittered(R, owner="?"):
    """Cholesky of a measurement covariance with a trace-relative retry.

    The adaptive R recursion is built from rank-two updates under a
    forgetting factor, so its numerical rank can collapse once innovations
    grow large; a 1e-12 * mean-diagonal jitter restores conditioning
    without measurably moving the gains.  A covariance that stays
    indefinite even then is reported as singular, naming its receiver.
    """
    R = np.asarray(R, dtype=float)
    try:
        return la.cho_factor(R, lower=True, check_finite=False)
    except la.LinAlgError:
        pass
    jitter = 1e-12 * np.trace(R) / R.shape[0]
    if jitter > 0.0:
        try:
            return la.cho_factor(
                R + jitter * np.eye(R.shape[0]), lower=True, check_finite=False
            )
        except la.LinAlgError:
            pass
    raise ValueError(f"measurement covariance of receiver {owner} is singular")


def _inv2(M):
    """Inverse of a symmetric 2x2 matrix (hot path)."""
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if det == 0.0:
        raise np.linalg.LinAlgError("singular 2x2 matrix")
    return np.array([[M[1, 1], -M[0, 1]], [-M[1, 0], M[0, 0]]]) / det


def _r_solve(bundle, rhs):
    """Solve R x = rhs for a bundle, reusing a cached factorization if any."""
    cached = getattr(bundle, "r_cholesky", None)
    if cached is not None:
        return la.cho_solve(cached(), rhs, check_finite=False)
    z, H, R, rid = _bundle_parts(bundle)
    return la.cho_solve(cho_factor_jittered(R, rid), rhs, check_finite=False)


def _bundle_parts(bundle):
    if isinstance(bundle, tuple):
        z, H, R = bundle[0], bundle[1], bundle[2]
        rid = bundle[3] if len(bundle) > 3 else None
    else:
        z, H, R, rid = bundle.z, bundle.H, bundle.R, bundle.receiver_id
    return np.asarray(z, float), np.asarray(H, float), np.asarray(R, float), rid


def pv_measurement_update(s_pred: PointState, bundles, mode="batch") -> PointState:
    """Information-form fusion of neighborhood measurement bundles.

    Each bundle is (z_j, H_j, R_j[, receiver_id]) or an object exposing
    those attributes.  ``mode="batch"`` inverts the fused information matrix
    once and applies gains K_j = P_bar H_j^T R_j^-1; ``mode="sequential"``
    applies standard covariance-form updates one bundle at a time.  Both
    yield the same posterior.
    """
    if not bundles:
        raise ValueError("need at least one measurement bundle")
    if mode == "sequential":
        state = s_pred
        for b in bundles:
            z, H, R, rid = _bundle_parts(b)
            P = state.covariance
            Sm = H @ P @ H.T + R
            try:
                K = la.cho_solve(la.cho_factor(Sm, lower=True), H @ P).T
            except la.LinAlgError as exc:
                raise ValueError(
                    f"measurement covariance of receiver {rid} is singular"
                ) from exc
            mean = state.mean + K @ (z - H @ state.mean)
            IKH = np.eye(2) - K @ H
            P_new = IKH @ P @ IKH.T + K @ R @ K.T
            state = PointState(mean, P_new)
        return state
    if mode != "batch":
        raise ValueError(f"unknown update mode {mode!r}")

    info = _inv2(s_pred.covariance)
    corr = np.zeros(2)
    solves = []
    for b in bundles:
        z, H, R, rid = _bundle_parts(b)
        innov = z - H @ s_pred.mean
        # solve R [H, innov] in one pass
        sol = _r_solve(b, np.hstack([H, innov[:, None]]))
        info = info + H.T @ sol[:, :2]
        solves.append((H, sol[:, 2]))
    P_bar = _inv2(info)
    P_bar = 0.5 * (P_bar + P_bar.T)
    mean = s_pred.mean.copy()
    for H, rinv_innov in solves:
        mean = mean + P_bar @ (H.T @ rinv_innov)
    return PointState(mean, P_bar)


def single_adaptive_kf_step(s: PointState, F, noise: NoiseDescriptor, z, H):
    """One predict/adapt/correct cycle of the single-receiver adaptive KF.

    Returns (posterior state, updated NoiseDescriptor with the new R).
    """
    pred = pv_time_update(s, F, noise.Q)
    eps = np.asarray(z, float) - np.asarray(H, float) @ pred.mean
    R_new = adaptive_R(noise.R, noise.psi, eps, H, pred.covariance)
    post = pv_measurement_update(pred, [(np.asarray(z, float), np.asarray(H, float), R_new)])
    return post, NoiseDescriptor(R_new, noise.Q, noise.psi)

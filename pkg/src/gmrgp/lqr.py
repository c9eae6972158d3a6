"""Finite-horizon LQR tracking of a predicted trajectory on a double-integrator
plant, with per-step state costs proportional to the inverse of the reference
covariance: certain (low-covariance) phases are tracked stiffly, high-variability
phases compliantly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import IllConditionedRiccatiError

__all__ = [
    "ReferenceTrajectory",
    "TrackerConfig",
    "LqrSolution",
    "SimulationReport",
    "gains_from_covariance",
    "solve_lqr",
    "simulate",
]

_COND_LIMIT = 1e14


@dataclass(frozen=True)
class ReferenceTrajectory:
    """Timed reference with per-step output covariance."""

    times: np.ndarray  # (T,), strictly increasing
    means: np.ndarray  # (T, D)
    covariances: np.ndarray  # (T, D, D)

    def __post_init__(self):
        times = np.asarray(self.times, float).ravel()
        means = np.atleast_2d(np.asarray(self.means, float))
        covs = np.asarray(self.covariances, float)
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        if means.shape[0] != times.size or covs.shape[0] != times.size:
            raise ValueError("times, means and covariances must have equal length")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covariances", covs)

    @property
    def horizon(self) -> int:
        return self.times.size

    @property
    def output_dim(self) -> int:
        return self.means.shape[1]


@dataclass(frozen=True)
class TrackerConfig:
    """Plant and cost settings.

    precision_scale : multiplier on the inverse-covariance state cost.
    control_cost : weight on squared accelerations.
    covariance_floor : added to the reference covariance before inversion.
    """

    precision_scale: float = 1.0
    control_cost: float = 1e-4
    mass: float = 1.0
    damping: float = 0.0
    covariance_floor: float = 1e-6

    def __post_init__(self):
        for name in ("precision_scale", "control_cost", "mass", "covariance_floor"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def gains_from_covariance(ref: ReferenceTrajectory, config: TrackerConfig) -> np.ndarray:
    """(T, 2D, 2D) state-cost matrices: the position block is
    precision_scale * inv(cov + floor * I); velocity error carries zero weight."""
    d = ref.output_dim
    out = np.zeros((ref.horizon, 2 * d, 2 * d))
    eye = np.eye(d)
    for t in range(ref.horizon):
        out[t, :d, :d] = config.precision_scale * np.linalg.inv(
            ref.covariances[t] + config.covariance_floor * eye
        )
    return out


def _plant_matrices(ref: ReferenceTrajectory, config: TrackerConfig):
    """Per-step discrete double-integrator (A_t, B_t) from the reference timestamps."""
    d = ref.output_dim
    eye = np.eye(d)
    a_list, b_list = [], []
    for dt in np.diff(ref.times):
        a = np.zeros((2 * d, 2 * d))
        a[:d, :d] = eye
        a[:d, d:] = dt * eye
        a[d:, d:] = (1.0 - config.damping * dt / config.mass) * eye
        b = np.zeros((2 * d, d))
        b[d:, :] = dt / config.mass * eye
        a_list.append(a)
        b_list.append(b)
    return a_list, b_list


@dataclass(frozen=True)
class LqrSolution:
    """Feedback/feedforward gains and the quadratic cost-to-go at the start."""

    feedback: np.ndarray  # (T-1, D, 2D)
    feedforward: np.ndarray  # (T-1, D)
    cost_quadratic: np.ndarray  # P_0
    cost_linear: np.ndarray  # q_0
    cost_constant: float  # c_0
    state_refs: np.ndarray = field(compare=False, default=None)

    def predicted_cost(self, z0: np.ndarray) -> float:
        """Optimal closed-loop cost from initial plant state ``z0``."""
        z0 = np.asarray(z0, float).ravel()
        return float(z0 @ self.cost_quadratic @ z0 - 2.0 * self.cost_linear @ z0 + self.cost_constant)


def solve_lqr(
    ref: ReferenceTrajectory, state_costs: np.ndarray, config: TrackerConfig
) -> LqrSolution:
    """Backward Riccati recursion for the time-varying tracking problem.

    The tracked state reference holds the reference positions with zero
    velocity weight, so only the position part of the state cost acts.
    """
    t_len, d = ref.horizon, ref.output_dim
    if t_len < 2:
        raise ValueError("horizon must be at least 2")
    if not np.all(np.isfinite(state_costs)):
        raise IllConditionedRiccatiError("state costs contain non-finite entries")
    a_list, b_list = _plant_matrices(ref, config)
    r = config.control_cost * np.eye(d)

    # state references: position = reference mean, velocity by finite differences
    vel = np.gradient(ref.means, ref.times, axis=0)
    z_ref = np.hstack([ref.means, vel])

    p = state_costs[-1].copy()
    q = state_costs[-1] @ z_ref[-1]
    c = float(z_ref[-1] @ state_costs[-1] @ z_ref[-1])
    feedback = np.zeros((t_len - 1, d, 2 * d))
    feedforward = np.zeros((t_len - 1, d))
    for t in range(t_len - 2, -1, -1):
        a, b = a_list[t], b_list[t]
        h = r + b.T @ p @ b
        if np.linalg.cond(h) > _COND_LIMIT:
            raise IllConditionedRiccatiError(f"control Hessian at step {t} is ill-conditioned")
        h_inv = np.linalg.inv(h)
        k = h_inv @ (b.T @ p @ a)
        kff = h_inv @ (b.T @ q)
        feedback[t] = k
        feedforward[t] = kff
        a_cl = a - b @ k
        p_new = state_costs[t] + a.T @ p @ a - (b.T @ p @ a).T @ k
        c = float(z_ref[t] @ state_costs[t] @ z_ref[t]) + c - float(q @ b @ kff)
        q = state_costs[t] @ z_ref[t] + a_cl.T @ q
        p = 0.5 * (p_new + p_new.T)
        if not np.all(np.isfinite(p)):
            raise IllConditionedRiccatiError(f"Riccati recursion diverged at step {t}")
    return LqrSolution(feedback, feedforward, p, q, c, z_ref)


@dataclass(frozen=True)
class SimulationReport:
    """Closed-loop rollout results."""

    states: np.ndarray  # (T, 2D)
    controls: np.ndarray  # (T-1, D)
    position_errors: np.ndarray  # (T,)
    rms_error: float
    cost: float
    predicted_cost: float
    via_misses: tuple[float, ...]
    obstacle_clearances: tuple[float, ...]

    @property
    def positions(self) -> np.ndarray:
        d = self.controls.shape[1]
        return self.states[:, :d]


def simulate(
    ref: ReferenceTrajectory,
    solution: LqrSolution,
    config: TrackerConfig,
    disturbance_std: float = 0.0,
    seed: int = 0,
    via_points=(),
    obstacles=(),
    initial_state: np.ndarray | None = None,
    state_costs: np.ndarray | None = None,
) -> SimulationReport:
    """Forward-integrate the closed loop and score the execution.

    via_points : iterable of (time, position) pairs; each is scored by the
        distance of the executed position at the nearest reference time.
    obstacles : iterable of (center, radius); clearance is the minimum
        distance of the executed path to the disk boundary (negative inside).
    Divergence is reported through the error fields, never raised.
    """
    t_len, d = ref.horizon, ref.output_dim
    a_list, b_list = _plant_matrices(ref, config)
    rng = np.random.default_rng(seed)
    if state_costs is None:
        state_costs = gains_from_covariance(ref, config)
    if initial_state is None:
        z = solution.state_refs[0].copy()
    else:
        z = np.asarray(initial_state, float).ravel().copy()
    states = np.zeros((t_len, 2 * d))
    controls = np.zeros((t_len - 1, d))
    states[0] = z
    cost = 0.0
    predicted = solution.predicted_cost(z)
    for t in range(t_len - 1):
        u = -solution.feedback[t] @ z + solution.feedforward[t]
        controls[t] = u
        err = z - solution.state_refs[t]
        cost += float(err @ state_costs[t] @ err + config.control_cost * u @ u)
        z = a_list[t] @ z + b_list[t] @ u
        if disturbance_std > 0:
            z[d:] += disturbance_std * rng.standard_normal(d)
        states[t + 1] = z
    err_t = states[-1] - solution.state_refs[-1]
    cost += float(err_t @ state_costs[-1] @ err_t)

    positions = states[:, :d]
    errors = np.linalg.norm(positions - ref.means, axis=1)
    misses = []
    for time, target in via_points:
        idx = int(np.argmin(np.abs(ref.times - time)))
        misses.append(float(np.linalg.norm(positions[idx] - np.asarray(target, float))))
    clearances = []
    for center, radius in obstacles:
        dist = np.linalg.norm(positions - np.asarray(center, float), axis=1)
        clearances.append(float(dist.min() - radius))
    return SimulationReport(
        states=states,
        controls=controls,
        position_errors=errors,
        rms_error=float(np.sqrt(np.mean(errors**2))),
        cost=cost,
        predicted_cost=predicted,
        via_misses=tuple(misses),
        obstacle_clearances=tuple(clearances),
    )

"""The seven biomechanical cost features and their per-window aggregation.

A trajectory of T control samples is split into ``n_windows`` contiguous
windows; each window gets its own 7-vector of feature weights. Feature order
is fixed everywhere in the package:

    0  cartesian_velocity   V^T V          (V = wrist velocity)
    1  energy               |v^T tau|
    2  geodesic             v^T M(q) v
    3  joint_acceleration   a^T a
    4  torque_change        taudot^T taudot
    5  joint_velocity       v^T v
    6  joint_torque         tau^T tau

Each entry of the windowed feature matrix is the dt-weighted sum of the
corresponding integrand over the window's control samples.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .arm import ArmModel, State, _inertia_coeffs, forward_dynamics, jacobian, mass_matrix
from .errors import PlanMismatch, ShapeMismatch, TooShort

FEATURE_NAMES = (
    "cartesian_velocity",
    "energy",
    "geodesic",
    "joint_acceleration",
    "torque_change",
    "joint_velocity",
    "joint_torque",
)
N_FEATURES = 7

FEATURE_CSV_HEADER = "window," + ",".join(FEATURE_NAMES)


@dataclass(frozen=True)
class Trajectory:
    """Discrete state/control trajectory with a fixed timestep.

    states has shape (T+1, 4) with rows [q1, q2, v1, v2]; controls has shape
    (T, 2) with rows [tau1, tau2].
    """

    dt: float
    states: np.ndarray
    controls: np.ndarray

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        controls = np.asarray(self.controls, dtype=float)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "controls", controls)
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if states.ndim != 2 or states.shape[1] != 4:
            raise ValueError("states must have shape (T+1, 4)")
        if controls.ndim != 2 or controls.shape[1] != 2:
            raise ValueError("controls must have shape (T, 2)")
        if states.shape[0] != controls.shape[0] + 1:
            raise ValueError("need exactly one more state than controls")
        if not (np.isfinite(states).all() and np.isfinite(controls).all()):
            raise ValueError("trajectory entries must be finite")

    @property
    def n_steps(self) -> int:
        return self.controls.shape[0]

    @property
    def duration(self) -> float:
        return self.n_steps * self.dt

    @property
    def q(self) -> np.ndarray:
        return self.states[:, :2]

    @property
    def v(self) -> np.ndarray:
        return self.states[:, 2:]

    def state(self, t: int) -> State:
        return State(q=self.states[t, :2].copy(), v=self.states[t, 2:].copy())


@dataclass(frozen=True)
class WindowPlan:
    """Partition of control indices 0..T-1 into contiguous windows.

    ``boundaries`` has length n_windows + 1; window s covers
    [boundaries[s], boundaries[s+1]). Any remainder of an uneven division is
    absorbed by the last window.
    """

    n_windows: int
    n_samples: int
    boundaries: tuple[int, ...]

    def __post_init__(self):
        if self.n_windows < 1:
            raise ValueError("need at least one window")
        if len(self.boundaries) != self.n_windows + 1:
            raise ValueError("boundaries must have n_windows + 1 entries")
        if any(b >= e for b, e in zip(self.boundaries[:-1], self.boundaries[1:])):
            raise ValueError("boundaries must be strictly increasing")

    @property
    def total_samples(self) -> int:
        return self.boundaries[-1]

    def window_of(self, t: int) -> int:
        """Window index owning control sample t."""
        return int(np.searchsorted(self.boundaries, t, side="right") - 1)

    def sample_to_window(self) -> np.ndarray:
        """Array of length T mapping each control sample to its window."""
        out = np.empty(self.total_samples, dtype=int)
        for s in range(self.n_windows):
            out[self.boundaries[s]:self.boundaries[s + 1]] = s
        return out


def make_window_plan(T_d: int) -> WindowPlan:
    """Window plan for a demonstration of T_d control samples.

    Uses the largest window count that keeps every window at least two
    samples long: n_windows = floor(T_d / 2). A single trailing sample from
    an odd T_d goes to the last window.
    """
    if T_d < 2:
        raise TooShort(f"need at least 2 control samples, got {T_d}")
    return plan_with_windows(T_d // 2, T_d)


def plan_with_windows(n_windows: int, T_d: int) -> WindowPlan:
    """Plan with an explicit window count; remainder samples extend the last window."""
    if n_windows < 1:
        raise ValueError("n_windows must be >= 1")
    if T_d < n_windows:
        raise TooShort(f"{n_windows} windows need at least {n_windows} samples, got {T_d}")
    n_s = T_d // n_windows
    bounds = tuple(s * n_s for s in range(n_windows)) + (T_d,)
    return WindowPlan(n_windows=n_windows, n_samples=n_s, boundaries=bounds)


@dataclass(frozen=True)
class WindowedFeatures:
    """Per-window integrated feature costs, shape (n_windows, 7)."""

    phi: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        object.__setattr__(self, "phi", phi)
        if phi.ndim != 2 or phi.shape[1] != N_FEATURES:
            raise ValueError(f"phi must have shape (n_windows, {N_FEATURES})")

    @property
    def n_windows(self) -> int:
        return self.phi.shape[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(FEATURE_CSV_HEADER + "\n")
        for s in range(self.n_windows):
            buf.write(",".join([str(s)] + [repr(float(x)) for x in self.phi[s]]) + "\n")
        return buf.getvalue()


def feature_rates(model: ArmModel, x: State, u: np.ndarray,
                  u_next: np.ndarray | None, dt: float) -> np.ndarray:
    """Instantaneous integrands of the seven features at one sample.

    ``u_next`` is the following control sample, used for the torque-change
    rate; pass None at the final sample (the rate is then zero).
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    q, v = x.q, x.v
    u = np.asarray(u, dtype=float)
    V = jacobian(model, q) @ v
    a = forward_dynamics(model, q, v, u)
    if u_next is None:
        taudot = np.zeros(2)
    else:
        taudot = (np.asarray(u_next, dtype=float) - u) / dt
    return np.array([
        float(V @ V),
        abs(float(v @ u)),
        float(v @ mass_matrix(model, q) @ v),
        float(a @ a),
        float(taudot @ taudot),
        float(v @ v),
        float(u @ u),
    ])


def feature_table(model: ArmModel, traj: Trajectory) -> np.ndarray:
    """All seven integrands at every control sample, shape (T, 7).

    Vectorized equivalent of calling :func:`feature_rates` at t = 0..T-1.
    """
    T = traj.n_steps
    q = traj.q[:T]
    v = traj.v[:T]
    u = traj.controls
    q1, q2 = q[:, 0], q[:, 1]
    v1, v2 = v[:, 0], v[:, 1]
    u1, u2 = u[:, 0], u[:, 1]

    a_c, k, d = _inertia_coeffs(model)
    s2, c2 = np.sin(q2), np.cos(q2)
    m11 = a_c + 2.0 * k * c2
    m12 = d + k * c2
    det = m11 * d - m12 * m12

    h = -k * s2
    cv1 = h * (2.0 * v1 * v2 + v2 * v2)
    cv2 = -h * v1 * v1
    g1c = (model.m1 * model.c1 + model.m2 * model.l1) * model.g
    g2c = model.m2 * model.c2 * model.g
    c12 = np.cos(q1 + q2)
    gv1 = g1c * np.cos(q1) + g2c * c12
    gv2 = g2c * c12

    r1 = u1 - cv1 - gv1
    r2 = u2 - cv2 - gv2
    acc1 = (d * r1 - m12 * r2) / det
    acc2 = (-m12 * r1 + m11 * r2) / det

    s1, s12 = np.sin(q1), np.sin(q1 + q2)
    c1 = np.cos(q1)
    Vx = (-model.l1 * s1 - model.l2 * s12) * v1 + (-model.l2 * s12) * v2
    Vz = (model.l1 * c1 + model.l2 * c12) * v1 + (model.l2 * c12) * v2

    taud = np.zeros((T, 2))
    if T > 1:
        taud[:-1] = (u[1:] - u[:-1]) / traj.dt

    table = np.empty((T, N_FEATURES))
    table[:, 0] = Vx * Vx + Vz * Vz
    table[:, 1] = np.abs(v1 * u1 + v2 * u2)
    table[:, 2] = m11 * v1 * v1 + 2.0 * m12 * v1 * v2 + d * v2 * v2
    table[:, 3] = acc1 * acc1 + acc2 * acc2
    table[:, 4] = taud[:, 0] ** 2 + taud[:, 1] ** 2
    table[:, 5] = v1 * v1 + v2 * v2
    table[:, 6] = u1 * u1 + u2 * u2
    return table


def windowed_features(model: ArmModel, traj: Trajectory, plan: WindowPlan) -> WindowedFeatures:
    """dt-weighted per-window sums of the feature integrands."""
    if plan.total_samples != traj.n_steps:
        raise PlanMismatch(
            f"plan covers {plan.total_samples} samples, trajectory has {traj.n_steps}")
    table = feature_table(model, traj)
    phi = np.empty((plan.n_windows, N_FEATURES))
    for s in range(plan.n_windows):
        lo, hi = plan.boundaries[s], plan.boundaries[s + 1]
        phi[s] = table[lo:hi].sum(axis=0) * traj.dt
    return WindowedFeatures(phi=phi)


def total_cost(features: WindowedFeatures, weights: "WeightSchedule | np.ndarray") -> float:
    """Sum over windows of w_s . phi_s; linear in both arguments."""
    w = weights.w if isinstance(weights, WeightSchedule) else np.asarray(weights, dtype=float)
    if w.shape != features.phi.shape:
        raise ShapeMismatch(f"weights {w.shape} vs features {features.phi.shape}")
    return float(np.sum(w * features.phi))


@dataclass(frozen=True)
class WeightSchedule:
    """Nonnegative per-window feature weights, shape (n_windows, 7)."""

    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        object.__setattr__(self, "w", w)
        if w.ndim != 2 or w.shape[1] != N_FEATURES:
            raise ValueError(f"weights must have shape (n_windows, {N_FEATURES})")
        if not np.isfinite(w).all():
            raise ValueError("weights must be finite")
        if (w < 0.0).any():
            raise ValueError("weights must be nonnegative")

    @property
    def n_windows(self) -> int:
        return self.w.shape[0]

    @classmethod
    def uniform(cls, n_windows: int) -> "WeightSchedule":
        """Scale-free symmetric start: every entry 1 / (7 n_windows)."""
        return cls(np.full((n_windows, N_FEATURES), 1.0 / (N_FEATURES * n_windows)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(FEATURE_CSV_HEADER + "\n")
        for s in range(self.n_windows):
            buf.write(",".join([str(s)] + [repr(float(x)) for x in self.w[s]]) + "\n")
        return buf.getvalue()

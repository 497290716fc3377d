"""Analytic kinematics and dynamics of a planar 2-link arm.

Shoulder is the origin of the plane. ``q1`` is the shoulder angle measured
from the horizontal +X axis (pointing toward the target), ``q2`` is the
relative elbow angle. Gravity acts along -Z. All quantities are SI.

Every function here is pure; nothing mutates its inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from typing import NamedTuple

import numpy as np


class State(NamedTuple):
    """Joint-space state: angles ``q`` (rad) and velocities ``v`` (rad/s), each shape (2,)."""

    q: np.ndarray
    v: np.ndarray

    def as_vector(self) -> np.ndarray:
        """Concatenate into the 4-vector [q1, q2, v1, v2]."""
        return np.concatenate([self.q, self.v])


@dataclass(frozen=True)
class ArmModel:
    """Inertial and geometric parameters of the 2-link arm.

    Parameters
    ----------
    l1, l2 : segment lengths [m]
    m1, m2 : segment masses [kg]
    c1, c2 : distance of each segment's COM from its proximal joint [m]
    I1, I2 : segment moments of inertia about the COM [kg m^2]
    g : gravity magnitude [m/s^2]
    q_min, q_max : per-joint angle bounds [rad]
    v_max : per-joint speed bound [rad/s]
    """

    l1: float
    l2: float
    m1: float
    m2: float
    c1: float
    c2: float
    I1: float
    I2: float
    g: float = 9.81
    q_min: tuple[float, float] = (-0.17453292519943295, -0.17453292519943295)
    q_max: tuple[float, float] = (2.9670597283903604, 2.9670597283903604)
    v_max: tuple[float, float] = (20.0, 20.0)

    def __post_init__(self):
        for name in ("l1", "l2", "m1", "m2", "c1", "c2", "I1", "I2"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if not (0.0 < self.c1 <= self.l1) or not (0.0 < self.c2 <= self.l2):
            raise ValueError("COM offsets must satisfy 0 < c_i <= l_i")
        for j in range(2):
            if not self.q_min[j] < self.q_max[j]:
                raise ValueError("q_min must be elementwise below q_max")
            if self.v_max[j] <= 0.0:
                raise ValueError("v_max must be positive")

    @property
    def reach(self) -> float:
        return self.l1 + self.l2

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("q_min", "q_max", "v_max"):
            d[key] = list(d[key])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ArmModel":
        kw = dict(d)
        for key in ("q_min", "q_max", "v_max"):
            if key in kw:
                kw[key] = tuple(float(x) for x in kw[key])
        return cls(**kw)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ArmModel":
        return cls.from_dict(json.loads(text))


def reference_arm() -> ArmModel:
    """Default arm parameters for a generic adult subject.

    These are representative values chosen for this artifact (segment masses,
    COM offsets and inertias in the range of standard anthropometric
    regressions for a ~1.75 m, ~70 kg adult); they are configuration defaults,
    not measurements of any particular subject.
    """
    return ArmModel(
        l1=0.30, l2=0.33,
        m1=2.0, m2=1.7,
        c1=0.13, c2=0.15,
        I1=0.020, I2=0.025,
        g=9.81,
    )


def forward_kinematics(model: ArmModel, q: np.ndarray) -> np.ndarray:
    """Wrist position (X, Z) in the shoulder frame."""
    q1, q2 = float(q[0]), float(q[1])
    x = model.l1 * np.cos(q1) + model.l2 * np.cos(q1 + q2)
    z = model.l1 * np.sin(q1) + model.l2 * np.sin(q1 + q2)
    return np.array([x, z])


def jacobian(model: ArmModel, q: np.ndarray) -> np.ndarray:
    """2x2 Jacobian d(X,Z)/d(q1,q2) of the wrist position."""
    q1, q2 = float(q[0]), float(q[1])
    s1, c1 = np.sin(q1), np.cos(q1)
    s12, c12 = np.sin(q1 + q2), np.cos(q1 + q2)
    return np.array([
        [-model.l1 * s1 - model.l2 * s12, -model.l2 * s12],
        [model.l1 * c1 + model.l2 * c12, model.l2 * c12],
    ])


def jacobian_dq(model: ArmModel, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Partial derivatives (dJ/dq1, dJ/dq2) of the wrist Jacobian."""
    q1, q2 = float(q[0]), float(q[1])
    s1, c1 = np.sin(q1), np.cos(q1)
    s12, c12 = np.sin(q1 + q2), np.cos(q1 + q2)
    dj1 = np.array([
        [-model.l1 * c1 - model.l2 * c12, -model.l2 * c12],
        [-model.l1 * s1 - model.l2 * s12, -model.l2 * s12],
    ])
    dj2 = np.array([
        [-model.l2 * c12, -model.l2 * c12],
        [-model.l2 * s12, -model.l2 * s12],
    ])
    return dj1, dj2


def _inertia_coeffs(model: ArmModel) -> tuple[float, float, float]:
    """(a, k, d) such that M = [[a + 2k c2, d + k c2], [d + k c2, d]]."""
    a = (model.I1 + model.I2 + model.m1 * model.c1 ** 2
         + model.m2 * (model.l1 ** 2 + model.c2 ** 2))
    k = model.m2 * model.l1 * model.c2
    d = model.I2 + model.m2 * model.c2 ** 2
    return a, k, d


def mass_matrix(model: ArmModel, q: np.ndarray) -> np.ndarray:
    """Symmetric positive-definite joint-space inertia matrix M(q)."""
    a, k, d = _inertia_coeffs(model)
    c2 = np.cos(float(q[1]))
    m12 = d + k * c2
    return np.array([[a + 2.0 * k * c2, m12], [m12, d]])


def mass_matrix_dq2(model: ArmModel, q: np.ndarray) -> np.ndarray:
    """dM/dq2 (M does not depend on q1)."""
    _, k, _ = _inertia_coeffs(model)
    s2 = np.sin(float(q[1]))
    return np.array([[-2.0 * k * s2, -k * s2], [-k * s2, 0.0]])


def coriolis_matrix(model: ArmModel, q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Coriolis/centrifugal matrix C(q, v) from the Christoffel symbols.

    This factorization makes Mdot - 2C skew-symmetric.
    """
    _, k, _ = _inertia_coeffs(model)
    h = -k * np.sin(float(q[1]))
    v1, v2 = float(v[0]), float(v[1])
    return np.array([[h * v2, h * (v1 + v2)], [-h * v1, 0.0]])


def coriolis_vector(model: ArmModel, q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """C(q, v) v, the Coriolis/centrifugal torque."""
    _, k, _ = _inertia_coeffs(model)
    h = -k * np.sin(float(q[1]))
    v1, v2 = float(v[0]), float(v[1])
    return np.array([h * (2.0 * v1 * v2 + v2 * v2), -h * v1 * v1])


def gravity_vector(model: ArmModel, q: np.ndarray) -> np.ndarray:
    """Gravity torque g(q) for gravity acting along -Z."""
    g1c = (model.m1 * model.c1 + model.m2 * model.l1) * model.g
    g2c = model.m2 * model.c2 * model.g
    q1, q12 = float(q[0]), float(q[0]) + float(q[1])
    c12 = np.cos(q12)
    return np.array([g1c * np.cos(q1) + g2c * c12, g2c * c12])


def inverse_dynamics(model: ArmModel, q: np.ndarray, v: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Joint torques tau = M(q) a + C(q, v) v + g(q)."""
    return mass_matrix(model, q) @ np.asarray(a, dtype=float) \
        + coriolis_vector(model, q, v) + gravity_vector(model, q)


def forward_dynamics(model: ArmModel, q: np.ndarray, v: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Joint accelerations a = M(q)^-1 (tau - C(q, v) v - g(q))."""
    rhs = np.asarray(tau, dtype=float) - coriolis_vector(model, q, v) - gravity_vector(model, q)
    return np.linalg.solve(mass_matrix(model, q), rhs)


def accel_derivatives(model: ArmModel, q: np.ndarray, v: np.ndarray, tau: np.ndarray
                      ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Acceleration and its partials: (a, da/dq, da/dv, da/dtau).

    da/dtau equals M(q)^-1; the q-partial accounts for the configuration
    dependence of M, C and g via da/dq_j = M^-1 (dr/dq_j - (dM/dq_j) a).
    """
    q1, q2 = float(q[0]), float(q[1])
    v1, v2 = float(v[0]), float(v[1])
    a_c, k, d = _inertia_coeffs(model)
    s2, c2 = np.sin(q2), np.cos(q2)

    m11 = a_c + 2.0 * k * c2
    m12 = d + k * c2
    det = m11 * d - m12 * m12
    minv = np.array([[d, -m12], [-m12, m11]]) / det

    h = -k * s2
    cv = np.array([h * (2.0 * v1 * v2 + v2 * v2), -h * v1 * v1])
    g1c = (model.m1 * model.c1 + model.m2 * model.l1) * model.g
    g2c = model.m2 * model.c2 * model.g
    s1, c1 = np.sin(q1), np.cos(q1)
    s12, c12 = np.sin(q1 + q2), np.cos(q1 + q2)
    gv = np.array([g1c * c1 + g2c * c12, g2c * c12])

    tau = np.asarray(tau, dtype=float)
    acc = minv @ (tau - cv - gv)

    # d(Cv)/dq2 through dh/dq2 = -k c2; Cv has no q1 dependence.
    dh = -k * c2
    dcv_dq2 = np.array([dh * (2.0 * v1 * v2 + v2 * v2), -dh * v1 * v1])
    dgv_dq1 = np.array([-g1c * s1 - g2c * s12, -g2c * s12])
    dgv_dq2 = np.array([-g2c * s12, -g2c * s12])
    dM_dq2_acc = np.array([-2.0 * k * s2 * acc[0] - k * s2 * acc[1], -k * s2 * acc[0]])

    da_dq = np.empty((2, 2))
    da_dq[:, 0] = minv @ (-dgv_dq1)
    da_dq[:, 1] = minv @ (-dcv_dq2 - dgv_dq2 - dM_dq2_acc)

    dcv_dv = np.array([[2.0 * h * v2, 2.0 * h * (v1 + v2)], [-2.0 * h * v1, 0.0]])
    da_dv = minv @ (-dcv_dv)

    return acc, da_dq, da_dv, minv


def step(model: ArmModel, x: State, u: np.ndarray, dt: float) -> State:
    """One semi-implicit Euler step: v' = v + a dt, q' = q + v' dt."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    a = forward_dynamics(model, x.q, x.v, u)
    v_next = x.v + a * dt
    q_next = x.q + v_next * dt
    return State(q=q_next, v=v_next)


def kinetic_energy(model: ArmModel, q: np.ndarray, v: np.ndarray) -> float:
    """0.5 v^T M(q) v."""
    v = np.asarray(v, dtype=float)
    return 0.5 * float(v @ mass_matrix(model, q) @ v)


def potential_energy(model: ArmModel, q: np.ndarray) -> float:
    """Gravitational potential, zero level at the shoulder."""
    q1, q12 = float(q[0]), float(q[0]) + float(q[1])
    z1 = model.c1 * np.sin(q1)
    z2 = model.l1 * np.sin(q1) + model.c2 * np.sin(q12)
    return model.g * (model.m1 * z1 + model.m2 * z2)

"""Constrained reaching problem: minimize windowed feature cost over torques.

The decision variables are the T control samples of a single-shooting
rollout, so the dynamics hold by construction. The terminal horizontal wrist
constraint and the joint/velocity bounds are handled by an augmented
Lagrangian outer loop; each inner subproblem is solved with L-BFGS using an
analytic adjoint gradient propagated backward through the rollout.

Weights are normalized to unit sum internally (the minimizer of the reaching
problem is invariant to positive scaling of the weights), which makes both
the tolerances and the iterate sequence scale-free; the reported objective
is at the caller's original weight scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .arm import ArmModel, State, _inertia_coeffs, gravity_vector
from .errors import Infeasible, NumericalFailure
from .features import (
    N_FEATURES,
    Trajectory,
    WeightSchedule,
    WindowPlan,
    plan_with_windows,
    total_cost,
    windowed_features,
)

_BIG = 1e25  # objective surrogate when a rollout overflows


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances and iteration caps for :func:`solve`."""

    tol_con: float = 1e-4
    tol_kkt: float = 1e-6
    max_outer: int = 500
    max_inner: int = 500
    penalty_init: float = 10.0
    penalty_growth: float = 10.0
    penalty_max: float = 1e8
    zero_window_reg: float = 1e-10
    terminal_velocity_weight: float = 0.0  # optional damping, off by default

    def to_dict(self) -> dict:
        return {
            "tol_con": self.tol_con,
            "tol_kkt": self.tol_kkt,
            "max_outer": self.max_outer,
            "max_inner": self.max_inner,
            "penalty_init": self.penalty_init,
            "penalty_growth": self.penalty_growth,
            "penalty_max": self.penalty_max,
            "zero_window_reg": self.zero_window_reg,
            "terminal_velocity_weight": self.terminal_velocity_weight,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SolverOptions":
        return cls(**d)


@dataclass(frozen=True)
class DocProblem:
    """One reaching problem: initial posture, horizontal target, weights."""

    model: ArmModel
    q0: np.ndarray
    target_x: float
    horizon: int
    dt: float
    plan: WindowPlan
    weights: WeightSchedule

    def __post_init__(self):
        q0 = np.asarray(self.q0, dtype=float).reshape(2)
        object.__setattr__(self, "q0", q0)
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        lo, hi = np.asarray(self.model.q_min), np.asarray(self.model.q_max)
        if (q0 < lo).any() or (q0 > hi).any():
            raise ValueError("q0 violates the joint bounds")
        if abs(self.target_x) > self.model.reach:
            raise Infeasible(
                f"target X = {self.target_x} m exceeds the arm reach {self.model.reach} m")
        if self.plan.total_samples != self.horizon:
            raise ValueError("window plan does not cover the horizon")
        if self.weights.n_windows != self.plan.n_windows:
            raise ValueError("weights and plan disagree on the window count")

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "q0": self.q0.tolist(),
            "target_x": self.target_x,
            "horizon": self.horizon,
            "dt": self.dt,
            "n_windows": self.plan.n_windows,
            "weights": self.weights.w.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DocProblem":
        return cls(
            model=ArmModel.from_dict(d["model"]),
            q0=np.asarray(d["q0"], dtype=float),
            target_x=float(d["target_x"]),
            horizon=int(d["horizon"]),
            dt=float(d["dt"]),
            plan=plan_with_windows(int(d["n_windows"]), int(d["horizon"])),
            weights=WeightSchedule(np.asarray(d["weights"], dtype=float)),
        )


@dataclass(frozen=True)
class DocSolution:
    traj: Trajectory
    objective: float
    kkt_residual: float
    constraint_violation: float
    iterations: int
    converged: bool

    def to_csv(self) -> str:
        """Trajectory as CSV rows (t, q1, q2, v1, v2, tau1, tau2)."""
        lines = ["t,q1,q2,v1,v2,tau1,tau2"]
        T = self.traj.n_steps
        for t in range(T + 1):
            row = [repr(t * self.traj.dt)] + [repr(float(x)) for x in self.traj.states[t]]
            if t < T:
                row += [repr(float(x)) for x in self.traj.controls[t]]
            else:
                row += ["", ""]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def rollout(model: ArmModel, q0: np.ndarray, controls: np.ndarray, dt: float) -> Trajectory:
    """Forward simulation from rest at q0 under the given torque sequence."""
    U = np.asarray(controls, dtype=float)
    if not np.isfinite(U).all():
        raise ValueError("controls must be finite")
    q, v, _ = _rollout_arrays(model, np.asarray(q0, dtype=float), U, dt)
    if not (np.isfinite(q).all() and np.isfinite(v).all()):
        raise NumericalFailure("rollout diverged to non-finite states")
    return Trajectory(dt=dt, states=np.hstack([q, v]), controls=U.copy())


def _rollout_arrays(model: ArmModel, q0: np.ndarray, U: np.ndarray, dt: float):
    """Semi-implicit Euler rollout; returns (q, v, acc) arrays.

    q and v have T+1 rows, acc has T rows (the acceleration used at each
    step, which is also the joint-acceleration feature's integrand input).
    """
    T = U.shape[0]
    a_c, k, d = _inertia_coeffs(model)
    g1c = (model.m1 * model.c1 + model.m2 * model.l1) * model.g
    g2c = model.m2 * model.c2 * model.g

    q = np.empty((T + 1, 2))
    v = np.empty((T + 1, 2))
    acc = np.empty((T, 2))
    q[0] = q0
    v[0] = 0.0
    q1, q2 = float(q0[0]), float(q0[1])
    v1 = v2 = 0.0
    # Divergent probe controls overflow on purpose; the non-finite check
    # below turns that into a truncated rollout, so the warnings are noise.
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(T):
            s2 = np.sin(q2)
            c2 = np.cos(q2)
            m11 = a_c + 2.0 * k * c2
            m12 = d + k * c2
            det = m11 * d - m12 * m12
            h = -k * s2
            c12 = np.cos(q1 + q2)
            r1 = U[t, 0] - h * (2.0 * v1 * v2 + v2 * v2) - (g1c * np.cos(q1) + g2c * c12)
            r2 = U[t, 1] + h * v1 * v1 - g2c * c12
            a1 = (d * r1 - m12 * r2) / det
            a2 = (-m12 * r1 + m11 * r2) / det
            acc[t, 0] = a1
            acc[t, 1] = a2
            v1 += a1 * dt
            v2 += a2 * dt
            q1 += v1 * dt
            q2 += v2 * dt
            v[t + 1] = (v1, v2)
            q[t + 1] = (q1, q2)
            if not (np.isfinite(q1) and np.isfinite(q2)
                    and np.isfinite(v1) and np.isfinite(v2)):
                q[t + 1:] = np.nan
                v[t + 1:] = np.nan
                acc[t:] = np.nan
                break
    return q, v, acc


def _batch_blocks(model: ArmModel, q: np.ndarray, v: np.ndarray, U: np.ndarray,
                  acc: np.ndarray, dt: float):
    """Per-sample feature integrands and all derivative blocks, vectorized.

    Returns (phi, dl-pieces...) where every array is indexed by the control
    sample t = 0..T-1. States enter at index t (the pre-step state).
    """
    T = U.shape[0]
    q1, q2 = q[:T, 0], q[:T, 1]
    v1, v2 = v[:T, 0], v[:T, 1]
    u1, u2 = U[:, 0], U[:, 1]
    a1, a2 = acc[:, 0], acc[:, 1]

    a_c, k, d = _inertia_coeffs(model)
    g1c = (model.m1 * model.c1 + model.m2 * model.l1) * model.g
    g2c = model.m2 * model.c2 * model.g
    l1, l2 = model.l1, model.l2

    s1, c1 = np.sin(q1), np.cos(q1)
    s2, c2 = np.sin(q2), np.cos(q2)
    s12, c12 = np.sin(q1 + q2), np.cos(q1 + q2)

    m11 = a_c + 2.0 * k * c2
    m12 = d + k * c2
    det = m11 * d - m12 * m12
    i11 = d / det
    i12 = -m12 / det
    i22 = m11 / det
    h = -k * s2

    # wrist velocity
    Vx = (-l1 * s1 - l2 * s12) * v1 + (-l2 * s12) * v2
    Vz = (l1 * c1 + l2 * c12) * v1 + (l2 * c12) * v2

    taud = np.zeros((T, 2))
    if T > 1:
        taud[:-1] = (U[1:] - U[:-1]) / dt

    phi = np.empty((T, N_FEATURES))
    phi[:, 0] = Vx * Vx + Vz * Vz
    vu = v1 * u1 + v2 * u2
    phi[:, 1] = np.abs(vu)
    phi[:, 2] = m11 * v1 * v1 + 2.0 * m12 * v1 * v2 + d * v2 * v2
    phi[:, 3] = a1 * a1 + a2 * a2
    phi[:, 4] = taud[:, 0] ** 2 + taud[:, 1] ** 2
    phi[:, 5] = v1 * v1 + v2 * v2
    phi[:, 6] = u1 * u1 + u2 * u2

    # acceleration partials: da/dq columns, da/dv, M^-1
    rq1_1 = g1c * s1 + g2c * s12
    rq1_2 = g2c * s12
    da_dq1_1 = i11 * rq1_1 + i12 * rq1_2
    da_dq1_2 = i12 * rq1_1 + i22 * rq1_2

    dh = -k * c2
    rq2_1 = -dh * (2.0 * v1 * v2 + v2 * v2) + g2c * s12 + k * s2 * (2.0 * a1 + a2)
    rq2_2 = dh * v1 * v1 + g2c * s12 + k * s2 * a1
    da_dq2_1 = i11 * rq2_1 + i12 * rq2_2
    da_dq2_2 = i12 * rq2_1 + i22 * rq2_2

    dv1_1 = -2.0 * h * v2
    dv1_2 = 2.0 * h * v1
    dv2_1 = -2.0 * h * (v1 + v2)
    da_dv11 = i11 * dv1_1 + i12 * dv1_2
    da_dv21 = i12 * dv1_1 + i22 * dv1_2
    da_dv12 = i11 * dv2_1
    da_dv22 = i12 * dv2_1

    # feature gradients (q1 never enters phi1/phi3: wrist speed and kinetic
    # energy are invariant to rotating the whole arm)
    W = l2 * (v1 + v2)
    dphi1_dq2 = -2.0 * W * (Vx * c12 + Vz * s12)
    J11 = -l1 * s1 - l2 * s12
    J12 = -l2 * s12
    J21 = l1 * c1 + l2 * c12
    J22 = l2 * c12
    dphi1_dv1 = 2.0 * (J11 * Vx + J21 * Vz)
    dphi1_dv2 = 2.0 * (J12 * Vx + J22 * Vz)

    sgn = np.sign(vu)
    dphi3_dq2 = -2.0 * k * s2 * v1 * (v1 + v2)
    dphi3_dv1 = 2.0 * (m11 * v1 + m12 * v2)
    dphi3_dv2 = 2.0 * (m12 * v1 + d * v2)

    dphi4_dq1 = 2.0 * (da_dq1_1 * a1 + da_dq1_2 * a2)
    dphi4_dq2 = 2.0 * (da_dq2_1 * a1 + da_dq2_2 * a2)
    dphi4_dv1 = 2.0 * (da_dv11 * a1 + da_dv21 * a2)
    dphi4_dv2 = 2.0 * (da_dv12 * a1 + da_dv22 * a2)
    dphi4_du1 = 2.0 * (i11 * a1 + i12 * a2)
    dphi4_du2 = 2.0 * (i12 * a1 + i22 * a2)

    blocks = {
        "phi": phi, "taud": taud,
        "i11": i11, "i12": i12, "i22": i22,
        "da_dq": np.stack([np.stack([da_dq1_1, da_dq2_1], axis=-1),
                           np.stack([da_dq1_2, da_dq2_2], axis=-1)], axis=-2),
        "da_dv": np.stack([np.stack([da_dv11, da_dv12], axis=-1),
                           np.stack([da_dv21, da_dv22], axis=-1)], axis=-2),
        "dphi_q": {
            0: (None, dphi1_dq2), 2: (None, dphi3_dq2),
            3: (dphi4_dq1, dphi4_dq2),
        },
        "dphi_v": {
            0: (dphi1_dv1, dphi1_dv2), 1: (sgn * u1, sgn * u2),
            2: (dphi3_dv1, dphi3_dv2), 3: (dphi4_dv1, dphi4_dv2),
            5: (2.0 * v1, 2.0 * v2),
        },
        "dphi_u": {
            1: (sgn * v1, sgn * v2), 3: (dphi4_du1, dphi4_du2),
            6: (2.0 * u1, 2.0 * u2),
        },
    }
    return blocks


class _AugmentedLagrangian:
    """Value/gradient of the shooting objective plus constraint terms."""

    def __init__(self, problem: DocProblem, w_norm: np.ndarray, eps_steps: np.ndarray,
                 opts: SolverOptions):
        self.p = problem
        self.model = problem.model
        self.dt = problem.dt
        self.T = problem.horizon
        self.w_step = w_norm[problem.plan.sample_to_window()]  # (T, 7)
        self.eps_steps = eps_steps  # (T,) zero-window regularization
        self.opts = opts
        self.qmin = np.asarray(problem.model.q_min)
        self.qmax = np.asarray(problem.model.q_max)
        self.vmax = np.asarray(problem.model.v_max)
        # multipliers: terminal equality + path bounds at state indices 1..T
        self.lam_eq = 0.0
        self.lam_q_hi = np.zeros((self.T + 1, 2))
        self.lam_q_lo = np.zeros((self.T + 1, 2))
        self.lam_v_hi = np.zeros((self.T + 1, 2))
        self.lam_v_lo = np.zeros((self.T + 1, 2))
        self.mu = opts.penalty_init

    # -- pieces ------------------------------------------------------------

    def _terminal_gap(self, qT: np.ndarray) -> float:
        x = self.model.l1 * np.cos(qT[0]) + self.model.l2 * np.cos(qT[0] + qT[1])
        return float(x - self.p.target_x)

    def violations(self, q: np.ndarray, v: np.ndarray) -> float:
        """Max constraint violation over the trajectory (states 1..T)."""
        c = abs(self._terminal_gap(q[-1]))
        qs, vs = q[1:], v[1:]
        c = max(c, float(np.max(qs - self.qmax, initial=0.0)))
        c = max(c, float(np.max(self.qmin - qs, initial=0.0)))
        c = max(c, float(np.max(np.abs(vs) - self.vmax, initial=0.0)))
        return c

    def update_multipliers(self, q: np.ndarray, v: np.ndarray):
        mu = self.mu
        self.lam_eq += mu * self._terminal_gap(q[-1])
        self.lam_q_hi[1:] = np.maximum(0.0, self.lam_q_hi[1:] + mu * (q[1:] - self.qmax))
        self.lam_q_lo[1:] = np.maximum(0.0, self.lam_q_lo[1:] + mu * (self.qmin - q[1:]))
        self.lam_v_hi[1:] = np.maximum(0.0, self.lam_v_hi[1:] + mu * (v[1:] - self.vmax))
        self.lam_v_lo[1:] = np.maximum(0.0, self.lam_v_lo[1:] + mu * (-v[1:] - self.vmax))

    # -- value and gradient -------------------------------------------------

    def value_and_grad(self, u_flat: np.ndarray, include_constraints: bool = True):
        # Large-but-finite line-search probes can overflow the feature and
        # adjoint algebra; the inf/nan objective that results is rejected by
        # the optimizer, so the warnings themselves are noise.
        with np.errstate(over="ignore", invalid="ignore"):
            return self._value_and_grad(u_flat, include_constraints)

    def _value_and_grad(self, u_flat: np.ndarray, include_constraints: bool = True):
        T, dt = self.T, self.dt
        U = u_flat.reshape(T, 2)
        q, v, acc = _rollout_arrays(self.model, self.p.q0, U, dt)
        if not np.isfinite(q).all():
            return _BIG, np.zeros_like(u_flat)

        b = _batch_blocks(self.model, q, v, U, acc, dt)
        phi = b["phi"]
        ws = self.w_step

        f = float(np.sum(ws * phi) * dt)
        f += float(np.sum(self.eps_steps * np.sum(U * U, axis=1)) * dt)

        # running-cost gradients wrt q_t, v_t, u_t (control-sample indexed)
        dl_dq = np.zeros((T, 2))
        dl_dv = np.zeros((T, 2))
        dl_du = np.zeros((T, 2))
        for fidx, (g1, g2) in b["dphi_q"].items():
            wf = ws[:, fidx]
            if g1 is not None:
                dl_dq[:, 0] += wf * g1
            dl_dq[:, 1] += wf * g2
        for fidx, (g1, g2) in b["dphi_v"].items():
            wf = ws[:, fidx]
            dl_dv[:, 0] += wf * g1
            dl_dv[:, 1] += wf * g2
        for fidx, (g1, g2) in b["dphi_u"].items():
            wf = ws[:, fidx]
            dl_du[:, 0] += wf * g1
            dl_du[:, 1] += wf * g2
        dl_dq *= dt
        dl_dv *= dt
        dl_du *= dt
        # torque-change couples u_t and u_{t+1}
        taud = b["taud"]
        w5 = ws[:, 4:5]
        dl_du += -2.0 * w5 * taud
        dl_du[1:] += 2.0 * w5[:-1] * taud[:-1]
        dl_du += (2.0 * dt) * self.eps_steps[:, None] * U

        # terminal seed and path-bound penalties
        pq = np.zeros(2)
        pv = np.zeros(2)
        if include_constraints:
            mu = self.mu
            cX = self._terminal_gap(q[-1])
            f += self.lam_eq * cX + 0.5 * mu * cX * cX
            qT = q[-1]
            jx = np.array([
                -self.model.l1 * np.sin(qT[0]) - self.model.l2 * np.sin(qT[0] + qT[1]),
                -self.model.l2 * np.sin(qT[0] + qT[1]),
            ])
            pq += (self.lam_eq + mu * cX) * jx

            # one-sided quadratic penalty terms for all path bounds
            def pen(lam, g):
                act = np.maximum(0.0, lam + mu * g)
                return float(np.sum(act * act - lam * lam) / (2.0 * mu)), act

            g_q_hi = q[1:] - self.qmax
            g_q_lo = self.qmin - q[1:]
            g_v_hi = v[1:] - self.vmax
            g_v_lo = -v[1:] - self.vmax
            f_qh, act_qh = pen(self.lam_q_hi[1:], g_q_hi)
            f_ql, act_ql = pen(self.lam_q_lo[1:], g_q_lo)
            f_vh, act_vh = pen(self.lam_v_hi[1:], g_v_hi)
            f_vl, act_vl = pen(self.lam_v_lo[1:], g_v_lo)
            f += f_qh + f_ql + f_vh + f_vl
            dpen_dq = act_qh - act_ql  # (T, 2) at state indices 1..T
            dpen_dv = act_vh - act_vl
            pq += dpen_dq[-1]
            pv += dpen_dv[-1]
            # states 1..T-1 belong to running indices 1..T-1
            dl_dq[1:] += dpen_dq[:-1]
            dl_dv[1:] += dpen_dv[:-1]

        wv = self.opts.terminal_velocity_weight
        if wv > 0.0:
            f += wv * float(v[-1] @ v[-1])
            pv += 2.0 * wv * v[-1]

        # adjoint sweep
        grad = np.empty((T, 2))
        da_dq = b["da_dq"]
        da_dv = b["da_dv"]
        i11, i12, i22 = b["i11"], b["i12"], b["i22"]
        dt2 = dt * dt
        for t in range(T - 1, -1, -1):
            s0 = dt2 * pq[0] + dt * pv[0]
            s1 = dt2 * pq[1] + dt * pv[1]
            grad[t, 0] = dl_du[t, 0] + i11[t] * s0 + i12[t] * s1
            grad[t, 1] = dl_du[t, 1] + i12[t] * s0 + i22[t] * s1
            dq = da_dq[t]
            dv = da_dv[t]
            nq0 = dl_dq[t, 0] + pq[0] + dq[0, 0] * s0 + dq[1, 0] * s1
            nq1 = dl_dq[t, 1] + pq[1] + dq[0, 1] * s0 + dq[1, 1] * s1
            nv0 = dl_dv[t, 0] + dt * pq[0] + pv[0] + dv[0, 0] * s0 + dv[1, 0] * s1
            nv1 = dl_dv[t, 1] + dt * pq[1] + pv[1] + dv[0, 1] * s0 + dv[1, 1] * s1
            pq = np.array([nq0, nq1])
            pv = np.array([nv0, nv1])

        return f, grad.ravel()


def _initial_controls(problem: DocProblem) -> np.ndarray:
    """Gravity compensation at the initial posture, held constant."""
    g0 = gravity_vector(problem.model, problem.q0)
    return np.tile(g0, (problem.horizon, 1))


def solve(problem: DocProblem, warm_start: Trajectory | None = None,
          opts: SolverOptions | None = None, trace: dict | None = None) -> DocSolution:
    """Solve the reaching problem; deterministic for identical inputs.

    ``warm_start`` provides the initial control sequence (its horizon and dt
    must match the problem). ``trace``, when given, is filled with
    per-outer-round inner objective histories for diagnostics.
    """
    opts = opts or SolverOptions()
    if warm_start is not None:
        if warm_start.n_steps != problem.horizon or warm_start.dt != problem.dt:
            raise ValueError("warm start horizon/dt does not match the problem")
        U0 = warm_start.controls.copy()
    else:
        U0 = _initial_controls(problem)

    w_raw = problem.weights.w
    scale = float(w_raw.sum())
    if scale > 0.0:
        w_ld = w_raw.astype(np.longdouble)
        w_norm = np.asarray(w_ld / w_ld.sum(), dtype=float)
        # snap the normalized ratios to a fixed dyadic grid so that positive
        # rescalings of w canonicalize to bit-identical solver inputs; the
        # ~1e-11 relative perturbation is far below the solver tolerances
        w_norm = np.ldexp(np.round(np.ldexp(w_norm, 36)), -36)
    else:
        w_norm = w_raw.copy()

    zero_rows = ~(w_raw.sum(axis=1) > 0.0)
    eps_steps = np.where(zero_rows[problem.plan.sample_to_window()],
                         opts.zero_window_reg, 0.0)

    al = _AugmentedLagrangian(problem, w_norm, eps_steps, opts)
    if trace is not None:
        trace["al_history"] = []

    u_flat = U0.ravel().copy()
    total_iters = 0
    kkt = np.inf
    viol = np.inf
    prev_viol = np.inf
    for _outer in range(opts.max_outer):
        history: list[float] = []
        if trace is not None:
            cb = lambda xk: history.append(al.value_and_grad(xk)[0])  # noqa: E731
        else:
            cb = None
        res = minimize(
            al.value_and_grad, u_flat, jac=True, method="L-BFGS-B",
            callback=cb,
            options={"maxiter": opts.max_inner, "ftol": 1e-14, "gtol": 1e-9, "maxcor": 30},
        )
        u_flat = res.x
        total_iters += int(res.nit)
        if trace is not None:
            trace["al_history"].append(history)
        if res.fun >= _BIG:
            raise NumericalFailure("reaching solve diverged to non-finite states")

        U = u_flat.reshape(problem.horizon, 2)
        q, v, _ = _rollout_arrays(problem.model, problem.q0, U, problem.dt)
        viol = al.violations(q, v)
        al.update_multipliers(q, v)
        # gradient of the Lagrangian at the freshly updated multipliers
        _, g_lagr = al.value_and_grad(u_flat)
        kkt = float(np.max(np.abs(g_lagr)))
        if viol <= opts.tol_con and kkt <= _kkt_tolerance(al, u_flat, opts):
            break
        if viol > 0.25 * prev_viol:
            al.mu = min(al.mu * opts.penalty_growth, opts.penalty_max)
        prev_viol = viol

    U = u_flat.reshape(problem.horizon, 2)
    traj = rollout(problem.model, problem.q0, U, problem.dt)
    objective = total_cost(windowed_features(problem.model, traj, problem.plan),
                           problem.weights)
    converged = bool(viol <= opts.tol_con and kkt <= _kkt_tolerance(al, u_flat, opts))
    return DocSolution(
        traj=traj,
        objective=objective,
        kkt_residual=kkt,
        constraint_violation=viol,
        iterations=total_iters,
        converged=converged,
    )


def _kkt_tolerance(al: _AugmentedLagrangian, u_flat: np.ndarray, opts: SolverOptions) -> float:
    """tol_kkt scaled by the magnitude of the (normalized) objective gradient."""
    _, g_obj = al.value_and_grad(u_flat, include_constraints=False)
    return opts.tol_kkt * max(1.0, float(np.max(np.abs(g_obj))))


def problem_to_json(problem: DocProblem) -> str:
    return json.dumps(problem.to_dict(), indent=2)


def problem_from_json(text: str) -> DocProblem:
    return DocProblem.from_dict(json.loads(text))

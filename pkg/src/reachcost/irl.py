"""Iterative recovery of time-varying cost weights from demonstrations.

The learner treats each demonstration as the preferred trajectory among a
growing set of solver-generated alternatives. Each iteration solves a convex
subproblem for a weight update direction, then line-searches the step size:
a step is accepted only if the reaching solutions it induces move strictly
closer (mean squared state gap) to the demonstrations. Accepted solutions
join the alternative set, sharpening the next subproblem.

All likelihood terms are handled in the log domain; raw windowed costs can
reach hundreds, so summed exponentials would overflow otherwise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .arm import ArmModel
from .doc import DocProblem, DocSolution, SolverOptions, solve
from .errors import LengthMismatch, NumericalFailure
from .features import (
    Trajectory,
    WeightSchedule,
    WindowedFeatures,
    plan_with_windows,
    windowed_features,
)


@dataclass(frozen=True)
class IrlConfig:
    """Learner settings; everything that affects the result lives here."""

    beta: float = 1e-9
    alpha0: float = 1.0
    alpha_factor: float = 0.25
    max_alpha_trials: int = 10
    max_iterations: int = 50
    subproblem_gtol: float = 1e-9
    convergence_tol: float = 1e-10
    convergence_patience: int = 3
    n_windows: int | None = None  # None: min over demos of floor(T_d / 2)
    include_demos_in_set: bool = False  # demos also seed the alternative set
    seed: int = 0
    solver_options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if self.beta < 0.0:
            raise ValueError("beta must be nonnegative")
        if not 0.0 < self.alpha_factor < 1.0:
            raise ValueError("alpha_factor must lie in (0, 1)")
        if self.max_alpha_trials < 1:
            raise ValueError("max_alpha_trials must be at least 1")

    def to_dict(self) -> dict:
        d = {
            "beta": self.beta,
            "alpha0": self.alpha0,
            "alpha_factor": self.alpha_factor,
            "max_alpha_trials": self.max_alpha_trials,
            "max_iterations": self.max_iterations,
            "subproblem_gtol": self.subproblem_gtol,
            "convergence_tol": self.convergence_tol,
            "convergence_patience": self.convergence_patience,
            "n_windows": self.n_windows,
            "include_demos_in_set": self.include_demos_in_set,
            "seed": self.seed,
            "solver_options": self.solver_options.to_dict(),
        }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "IrlConfig":
        d = dict(d)
        if "solver_options" in d:
            d["solver_options"] = SolverOptions.from_dict(d["solver_options"])
        return cls(**d)


@dataclass(frozen=True)
class TrajectoryEntry:
    traj: Trajectory
    features: WindowedFeatures
    posture_id: str


@dataclass
class TrajectorySet:
    """Observed alternatives; features cached at insertion time."""

    entries: list[TrajectoryEntry] = field(default_factory=list)

    def add(self, traj: Trajectory, features: WindowedFeatures, posture_id: str):
        self.entries.append(TrajectoryEntry(traj, features, posture_id))

    def __len__(self) -> int:
        return len(self.entries)

    def feature_rows(self, posture_id: str | None = None) -> np.ndarray:
        """(K, n_windows*7) matrix of flattened cached features.

        With ``posture_id`` the rows are restricted to entries recorded for
        that posture (an alternative is only comparable to a demonstration
        of the same reaching task).
        """
        entries = self.entries
        if posture_id is not None:
            entries = [e for e in entries if e.posture_id == posture_id]
        if not entries:
            return np.zeros((0, 0))
        return np.stack([e.features.phi.ravel() for e in entries])


@dataclass(frozen=True)
class IrlResult:
    weights: WeightSchedule
    merit_history: list[float]
    accepted_steps: int
    final_trajectories: dict[str, DocSolution]
    terminated_reason: str  # converged | no_improving_alpha | max_iterations

    def to_json(self) -> str:
        return json.dumps({
            "weights": self.weights.w.tolist(),
            "merit_history": self.merit_history,
            "accepted_steps": self.accepted_steps,
            "terminated_reason": self.terminated_reason,
        }, indent=2)


def demo_probability(w: WeightSchedule, demo_features: WindowedFeatures,
                     tset: TrajectorySet) -> float:
    """Chance the demonstration is the preferred trajectory under w.

    Soft-min over cost: exp(-cost_demo) / (exp(-cost_demo) + sum over the
    alternative set), evaluated through log-sum-exp. Empty set gives 1.
    """
    if len(tset) == 0:
        return 1.0
    w_flat = w.w.ravel()
    gaps = tset.feature_rows() - demo_features.phi.ravel()
    log_terms = -gaps @ w_flat
    m = max(0.0, float(np.max(log_terms)))
    log_denom = m + float(np.log(np.exp(-m) + np.sum(np.exp(log_terms - m))))
    return float(np.exp(-log_denom))


def subproblem_objective(delta_flat: np.ndarray, gaps_per_demo: Sequence[np.ndarray],
                         w_flat: np.ndarray, beta: float):
    """Value and gradient of the weight-update objective.

    For each demonstration d with gap rows G (alternative minus demo
    features), the term is log(1 + sum_i exp(-G_i.(w + delta))); an L2 tether
    beta/2 |delta|^2 keeps the problem bounded. Convex in delta (log-sum-exp
    of affine maps), so the minimizer is unique whenever beta > 0.
    """
    val = 0.5 * beta * float(delta_flat @ delta_flat)
    grad = beta * delta_flat.copy()
    for gaps in gaps_per_demo:
        log_terms = -gaps @ (w_flat + delta_flat)
        m = max(0.0, float(np.max(log_terms)))
        exp_terms = np.exp(log_terms - m)
        denom = np.exp(-m) + float(np.sum(exp_terms))
        val += m + float(np.log(denom))
        grad -= (exp_terms / denom) @ gaps
    return val, grad


def delta_w_subproblem(w_n: WeightSchedule, demos: Sequence[WindowedFeatures],
                       tset: TrajectorySet, beta: float = 1e-9,
                       gtol: float = 1e-9,
                       demo_postures: Sequence[str] | None = None) -> np.ndarray:
    """Weight-update direction: minimizer of the summed negative log terms.

    Bounded below by -w_n (relative margin 1e-12) so the stepped weights
    stay nonnegative for any step size in (0, 1]. Returns zeros when every
    gap row is zero (the objective is then flat and the tether wins).

    ``demo_postures`` (aligned with ``demos``) restricts each
    demonstration's alternatives to set entries from its own posture;
    alternatives solving a different reaching task say nothing about
    preferences and would otherwise swamp the likelihood.
    """
    if len(demos) == 0 or len(tset) == 0:
        raise ValueError("need at least one demonstration and one set entry")
    if demo_postures is not None and len(demo_postures) != len(demos):
        raise LengthMismatch(
            f"{len(demo_postures)} posture ids vs {len(demos)} demos")
    w_flat = w_n.w.ravel()
    gaps_per_demo = []
    for i, d in enumerate(demos):
        pid = demo_postures[i] if demo_postures is not None else None
        rows = tset.feature_rows(pid)
        gaps_per_demo.append(rows - d.phi.ravel() if rows.size else
                             np.zeros((0, w_flat.size)))
    if all(not np.any(g) for g in gaps_per_demo):
        return np.zeros_like(w_n.w)

    lb = -w_flat * (1.0 - 1e-12)
    bounds = [(lo, None) for lo in lb]
    res = minimize(
        subproblem_objective, np.zeros_like(w_flat), jac=True,
        args=(gaps_per_demo, w_flat, beta), method="L-BFGS-B", bounds=bounds,
        options={"maxiter": 2000, "ftol": 1e-16, "gtol": gtol, "maxcor": 30},
    )
    delta = np.maximum(res.x, lb)
    return delta.reshape(w_n.w.shape)


def _states_of(obj) -> np.ndarray:
    traj = getattr(obj, "traj", obj)
    return traj.states


def merit(predicted: Sequence[Trajectory], demos: Sequence) -> float:
    """Mean over demonstrations of the mean squared 4-dim state gap.

    Each predicted trajectory must be time-aligned with its demonstration
    (same sample count and dt); every state sample counts equally.
    """
    if len(predicted) != len(demos):
        raise LengthMismatch(f"{len(predicted)} predictions vs {len(demos)} demos")
    total = 0.0
    for pred, demo in zip(predicted, demos):
        xs_pred = _states_of(pred)
        xs_demo = _states_of(demo)
        if xs_pred.shape != xs_demo.shape:
            raise LengthMismatch(
                f"prediction states {xs_pred.shape} vs demo states {xs_demo.shape}")
        gap = xs_pred - xs_demo
        total += float(np.mean(np.sum(gap * gap, axis=1)))
    return total / len(demos)


@dataclass(frozen=True)
class _PostureGroup:
    posture_id: str
    demo_indices: list[int]
    q0: np.ndarray
    target_x: float
    horizon: int
    dt: float


def _group_by_posture(demos: Sequence) -> list[_PostureGroup]:
    by_id: dict[str, list[int]] = {}
    for i, d in enumerate(demos):
        by_id.setdefault(d.posture_id, []).append(i)
    groups = []
    for pid in sorted(by_id):
        idxs = by_id[pid]
        first = demos[idxs[0]]
        T0, dt0 = first.traj.n_steps, first.traj.dt
        for j in idxs[1:]:
            tj = demos[j].traj
            if tj.n_steps != T0 or tj.dt != dt0:
                raise LengthMismatch(
                    f"demos at posture {pid} disagree on horizon/dt")
        groups.append(_PostureGroup(
            posture_id=pid, demo_indices=idxs, q0=first.traj.q[0].copy(),
            target_x=first.target_x, horizon=T0, dt=dt0))
    return groups


def run(demos: Sequence, model: ArmModel, cfg: IrlConfig | None = None,
        solver: Callable = solve) -> IrlResult:
    """Full learning loop; deterministic for identical inputs and config.

    One reaching problem is solved per distinct initial posture per line
    search trial. ``solver`` is injectable for testing the acceptance logic
    without paying for real solves.
    """
    cfg = cfg or IrlConfig()
    if len(demos) == 0:
        raise ValueError("need at least one demonstration")

    groups = _group_by_posture(demos)
    if cfg.n_windows is not None:
        n_w = cfg.n_windows
    else:
        n_w = min(d.traj.n_steps // 2 for d in demos)
    if n_w < 1:
        raise ValueError("demos too short for even one window")

    plans = {g.posture_id: plan_with_windows(n_w, g.horizon) for g in groups}
    demo_feats = [
        windowed_features(model, d.traj, plans[d.posture_id]) for d in demos
    ]

    w_n = WeightSchedule.uniform(n_w)
    tset = TrajectorySet()
    if cfg.include_demos_in_set:
        for d, f in zip(demos, demo_feats):
            tset.add(d.traj, f, d.posture_id)

    def solve_group(g: _PostureGroup, w: WeightSchedule, warm, it: int) -> DocSolution:
        prob = DocProblem(model=model, q0=g.q0, target_x=g.target_x,
                          horizon=g.horizon, dt=g.dt, plan=plans[g.posture_id],
                          weights=w)
        try:
            return solver(prob, warm_start=warm, opts=cfg.solver_options)
        except NumericalFailure as e:
            raise NumericalFailure(
                f"iteration {it}, posture {g.posture_id}: {e}") from e

    def group_merit(solutions: dict[str, DocSolution]) -> float:
        preds = [solutions[d.posture_id].traj for d in demos]
        return merit(preds, demos)

    # baseline: one solution per posture at the uniform start
    current_sols = {g.posture_id: solve_group(g, w_n, None, 0) for g in groups}
    for g in groups:
        sol = current_sols[g.posture_id]
        tset.add(sol.traj, windowed_features(model, sol.traj, plans[g.posture_id]),
                 g.posture_id)
    current_merit = group_merit(current_sols)
    merit_history = [current_merit]

    best_merit = current_merit
    best_w = w_n
    best_sols = dict(current_sols)
    accepted = 0
    small_improvements = 0
    reason = "max_iterations"

    demo_postures = [d.posture_id for d in demos]
    for it in range(1, cfg.max_iterations + 1):
        delta = delta_w_subproblem(w_n, demo_feats, tset, beta=cfg.beta,
                                   gtol=cfg.subproblem_gtol,
                                   demo_postures=demo_postures)
        improved = False
        for k in range(cfg.max_alpha_trials):
            alpha = cfg.alpha0 * cfg.alpha_factor ** k
            w_trial = WeightSchedule(np.maximum(w_n.w + alpha * delta, 0.0))
            trial_sols = {
                g.posture_id: solve_group(g, w_trial, current_sols[g.posture_id].traj, it)
                for g in groups
            }
            m_trial = group_merit(trial_sols)
            if m_trial < current_merit:
                improvement = current_merit - m_trial
                w_n = w_trial
                current_sols = trial_sols
                current_merit = m_trial
                merit_history.append(m_trial)
                accepted += 1
                for g in groups:
                    sol = trial_sols[g.posture_id]
                    tset.add(sol.traj,
                             windowed_features(model, sol.traj, plans[g.posture_id]),
                             g.posture_id)
                if m_trial < best_merit:
                    best_merit = m_trial
                    best_w = w_n
                    best_sols = dict(trial_sols)
                improved = True
                small_improvements = (
                    small_improvements + 1 if improvement < cfg.convergence_tol else 0)
                break
        if not improved:
            reason = "no_improving_alpha"
            break
        if small_improvements >= cfg.convergence_patience:
            reason = "converged"
            break

    return IrlResult(
        weights=best_w,
        merit_history=merit_history,
        accepted_steps=accepted,
        final_trajectories=best_sols,
        terminated_reason=reason,
    )

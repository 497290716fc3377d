"""HTTP service exposing the reaching-cost toolkit.

Every capability of the package is reachable as a JSON endpoint so that the
command line (and any robot-side client) can stay a thin shell: generate
synthetic demonstrations, preprocess marker captures, compute windowed
features, solve single reaching problems, run learning studies, score
weights against demonstrations, and emit plot-ready CSV payloads.

Trajectories travel as {dt, states, controls}; demonstrations add subject,
posture, target, and arm parameters, mirroring the on-disk sidecar format.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .arm import ArmModel, reference_arm
from .demos import (
    Demonstration,
    MarkerFrames,
    generate_synthetic,
    markers_to_joints,
)
from .doc import DocProblem, SolverOptions, solve
from .errors import Infeasible, NumericalFailure, ReachcostError
from .features import (
    FEATURE_NAMES,
    Trajectory,
    WeightSchedule,
    make_window_plan,
    plan_with_windows,
    windowed_features,
)
from .irl import IrlConfig
from .studies import EvalReport, EvalRow, StudySpec, rmse, run_study


class ArmIn(BaseModel):
    l1: float
    l2: float
    m1: float
    m2: float
    c1: float
    c2: float
    I1: float
    I2: float
    g: float = 9.81
    q_min: tuple[float, float] | None = None
    q_max: tuple[float, float] | None = None
    v_max: tuple[float, float] | None = None

    def to_model(self) -> ArmModel:
        kwargs = self.model_dump(exclude_none=True)
        return ArmModel(**kwargs)

    @classmethod
    def from_model(cls, m: ArmModel) -> "ArmIn":
        return cls(**m.to_dict())


class TrajectoryIn(BaseModel):
    dt: float
    states: list[list[float]]
    controls: list[list[float]]

    def to_traj(self) -> Trajectory:
        return Trajectory(dt=self.dt, states=np.asarray(self.states),
                          controls=np.asarray(self.controls))

    @classmethod
    def from_traj(cls, t: Trajectory) -> "TrajectoryIn":
        return cls(dt=t.dt, states=t.states.tolist(), controls=t.controls.tolist())


class DemoIn(BaseModel):
    subject_id: str
    posture_id: str
    target_x: float
    arm: ArmIn
    trajectory: TrajectoryIn

    def to_demo(self) -> Demonstration:
        return Demonstration(
            subject_id=self.subject_id, posture_id=self.posture_id,
            traj=self.trajectory.to_traj(), target_x=self.target_x,
            arm=self.arm.to_model())

    @classmethod
    def from_demo(cls, d: Demonstration) -> "DemoIn":
        return cls(subject_id=d.subject_id, posture_id=d.posture_id,
                   target_x=d.target_x, arm=ArmIn.from_model(d.arm),
                   trajectory=TrajectoryIn.from_traj(d.traj))


class SynthRequest(BaseModel):
    posture_id: str
    weights: list[list[float]]
    horizon: int = Field(gt=0)
    dt: float = Field(gt=0.0)
    noise_std_deg: float = 0.0
    seed: int = 0
    subject_id: str = "synthetic"
    target_x: float | None = None
    arm: ArmIn | None = None
    solver_options: dict | None = None


class SynthResponse(BaseModel):
    demo: DemoIn


class PreprocessRequest(BaseModel):
    # marker rows: t, sx, sy, sz, ex, ey, ez, wx, wy, wz
    markers: list[list[float]]
    arm: ArmIn | None = None
    dt: float | None = None
    filter_cutoff_hz: float | None = 8.0
    subject_id: str = "unknown"
    posture_id: str = "P1"
    target_x: float | None = None


class FeaturesRequest(BaseModel):
    trajectory: TrajectoryIn
    arm: ArmIn | None = None
    n_windows: int | None = None  # None: floor(T/2)


class FeaturesResponse(BaseModel):
    n_windows: int
    boundaries: list[int]
    feature_names: list[str]
    phi: list[list[float]]


class SimulateRequest(BaseModel):
    q0: list[float]
    target_x: float
    horizon: int = Field(gt=0)
    dt: float = Field(gt=0.0)
    weights: list[list[float]]
    arm: ArmIn | None = None
    solver_options: dict | None = None
    warm_start: TrajectoryIn | None = None


class SimulateResponse(BaseModel):
    trajectory: TrajectoryIn
    objective: float
    kkt_residual: float
    constraint_violation: float
    iterations: int
    converged: bool


class LearnRequest(BaseModel):
    mode: str
    manifest: dict[str, dict[str, list[DemoIn]]]
    seed: int = 0
    demos_per_cell: int | None = None
    config: dict | None = None
    arm: ArmIn | None = None


class CellResult(BaseModel):
    weights: list[list[float]]
    merit_history: list[float]
    accepted_steps: int
    terminated_reason: str
    final_trajectories: dict[str, TrajectoryIn]


class ReportRow(BaseModel):
    cell: str
    subject_id: str
    posture_id: str
    view: str
    rmse_q1_deg: float
    rmse_q2_deg: float
    avg_deg: float
    n_demos: int


class ReportOut(BaseModel):
    mode: str
    seed: int
    rows: list[ReportRow]
    failed_cells: dict[str, str]
    baseline_rmse_deg: dict[str, tuple[float, float, float]]
    baseline_overall_mean_sd_deg: tuple[float, float]
    text: str


class LearnResponse(BaseModel):
    results: dict[str, CellResult]
    report: ReportOut
    failures: dict[str, str]
    arm: ArmIn


class EvalRequest(BaseModel):
    weights: list[list[float]]
    demos: list[DemoIn]
    arm: ArmIn | None = None
    solver_options: dict | None = None


class PlotsRequest(BaseModel):
    learn: LearnResponse


class PlotsResponse(BaseModel):
    files: dict[str, str]  # filename -> CSV text


def _http_error(e: Exception) -> HTTPException:
    if isinstance(e, (Infeasible, ValueError, KeyError)):
        return HTTPException(status_code=422, detail=f"{type(e).__name__}: {e}")
    if isinstance(e, NumericalFailure):
        return HTTPException(status_code=500, detail=f"{type(e).__name__}: {e}")
    if isinstance(e, ReachcostError):
        return HTTPException(status_code=400, detail=f"{type(e).__name__}: {e}")
    raise e


def _arm_or_default(arm: ArmIn | None) -> ArmModel:
    return arm.to_model() if arm is not None else reference_arm()


def _report_out(report: EvalReport) -> ReportOut:
    return ReportOut(
        mode=report.mode, seed=report.seed,
        rows=[ReportRow(**vars(r)) for r in report.rows],
        failed_cells=report.failed_cells,
        baseline_rmse_deg=report.baseline,
        baseline_overall_mean_sd_deg=report.baseline_overall,
        text=report.to_text(),
    )


def create_app() -> FastAPI:
    app = FastAPI(title="reachcost", version=__version__)

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/synth", response_model=SynthResponse)
    def synth(req: SynthRequest) -> SynthResponse:
        try:
            model = _arm_or_default(req.arm)
            opts = (SolverOptions.from_dict(req.solver_options)
                    if req.solver_options else None)
            demo = generate_synthetic(
                model, req.posture_id, WeightSchedule(np.asarray(req.weights)),
                T_d=req.horizon, dt=req.dt, noise_std_deg=req.noise_std_deg,
                subject_id=req.subject_id, seed=req.seed,
                target_x=req.target_x, solver_options=opts)
            return SynthResponse(demo=DemoIn.from_demo(demo))
        except Exception as e:
            raise _http_error(e) from e

    @app.post("/preprocess", response_model=SynthResponse)
    def preprocess(req: PreprocessRequest) -> SynthResponse:
        try:
            model = _arm_or_default(req.arm)
            rows = np.asarray(req.markers, dtype=float)
            if rows.ndim != 2 or rows.shape[1] != 10:
                raise ValueError("markers must be rows of 10 numbers")
            frames = MarkerFrames(timestamps=rows[:, 0], shoulder=rows[:, 1:4],
                                  elbow=rows[:, 4:7], wrist=rows[:, 7:10])
            traj = markers_to_joints(frames, model, dt=req.dt,
                                     filter_cutoff_hz=req.filter_cutoff_hz)
            target = (req.target_x if req.target_x is not None
                      else 0.85 * model.reach)
            demo = Demonstration(subject_id=req.subject_id,
                                 posture_id=req.posture_id, traj=traj,
                                 target_x=target, arm=model)
            return SynthResponse(demo=DemoIn.from_demo(demo))
        except Exception as e:
            raise _http_error(e) from e

    @app.post("/features", response_model=FeaturesResponse)
    def features(req: FeaturesRequest) -> FeaturesResponse:
        try:
            model = _arm_or_default(req.arm)
            traj = req.trajectory.to_traj()
            if req.n_windows is None:
                plan = make_window_plan(traj.n_steps)
            else:
                plan = plan_with_windows(req.n_windows, traj.n_steps)
            wf = windowed_features(model, traj, plan)
            return FeaturesResponse(
                n_windows=plan.n_windows,
                boundaries=list(plan.boundaries),
                feature_names=list(FEATURE_NAMES),
                phi=wf.phi.tolist())
        except Exception as e:
            raise _http_error(e) from e

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest) -> SimulateResponse:
        try:
            model = _arm_or_default(req.arm)
            w = WeightSchedule(np.asarray(req.weights))
            plan = plan_with_windows(w.n_windows, req.horizon)
            prob = DocProblem(model=model, q0=np.asarray(req.q0),
                              target_x=req.target_x, horizon=req.horizon,
                              dt=req.dt, plan=plan, weights=w)
            opts = (SolverOptions.from_dict(req.solver_options)
                    if req.solver_options else SolverOptions())
            warm = req.warm_start.to_traj() if req.warm_start else None
            sol = solve(prob, warm_start=warm, opts=opts)
            return SimulateResponse(
                trajectory=TrajectoryIn.from_traj(sol.traj),
                objective=sol.objective,
                kkt_residual=sol.kkt_residual,
                constraint_violation=sol.constraint_violation,
                iterations=sol.iterations,
                converged=sol.converged)
        except Exception as e:
            raise _http_error(e) from e

    @app.post("/learn", response_model=LearnResponse)
    def learn(req: LearnRequest) -> LearnResponse:
        try:
            manifest = {
                sid: {pid: [d.to_demo() for d in cell]
                      for pid, cell in cells.items()}
                for sid, cells in req.manifest.items()
            }
            spec = StudySpec(mode=req.mode, manifest=manifest, seed=req.seed,
                             demos_per_cell=req.demos_per_cell)
            cfg = IrlConfig.from_dict(req.config) if req.config else IrlConfig()
            model = req.arm.to_model() if req.arm is not None else None
            out = run_study(spec, cfg, model=model)
            cells = {}
            for name, res in out.results.items():
                cells[name] = CellResult(
                    weights=res.weights.w.tolist(),
                    merit_history=res.merit_history,
                    accepted_steps=res.accepted_steps,
                    terminated_reason=res.terminated_reason,
                    final_trajectories={
                        pid: TrajectoryIn.from_traj(sol.traj)
                        for pid, sol in res.final_trajectories.items()})
            return LearnResponse(
                results=cells,
                report=_report_out(out.report),
                failures=out.failures,
                arm=ArmIn.from_model(out.model))
        except Exception as e:
            raise _http_error(e) from e

    @app.post("/eval", response_model=ReportOut)
    def evaluate(req: EvalRequest) -> ReportOut:
        try:
            demos = [d.to_demo() for d in req.demos]
            model = (req.arm.to_model() if req.arm is not None
                     else demos[0].arm if demos else reference_arm())
            w = WeightSchedule(np.asarray(req.weights))
            opts = (SolverOptions.from_dict(req.solver_options)
                    if req.solver_options else SolverOptions())
            report = EvalReport(mode="eval", seed=0)
            cache: dict = {}
            by_cell: dict[tuple[str, str], list[np.ndarray]] = {}
            for demo in demos:
                traj = demo.traj
                key = (demo.posture_id, traj.n_steps, traj.dt, demo.target_x,
                       traj.q[0].tobytes())
                if key not in cache:
                    plan = plan_with_windows(w.n_windows, traj.n_steps)
                    prob = DocProblem(model=model, q0=traj.q[0],
                                      target_x=demo.target_x,
                                      horizon=traj.n_steps, dt=traj.dt,
                                      plan=plan, weights=w)
                    cache[key] = solve(prob, opts=opts).traj
                pred = cache[key]
                by_cell.setdefault((demo.subject_id, demo.posture_id),
                                   []).append(rmse(pred, traj))
            for (sid, pid) in sorted(by_cell):
                vals = np.mean(np.stack(by_cell[(sid, pid)]), axis=0)
                q1, q2 = float(vals[0]), float(vals[1])
                report.rows.append(EvalRow(
                    cell=f"{sid}/{pid}", subject_id=sid, posture_id=pid,
                    view="input", rmse_q1_deg=q1, rmse_q2_deg=q2,
                    avg_deg=(q1 + q2) / 2.0,
                    n_demos=len(by_cell[(sid, pid)])))
            return _report_out(report)
        except Exception as e:
            raise _http_error(e) from e

    @app.post("/plots", response_model=PlotsResponse)
    def plots(req: PlotsRequest) -> PlotsResponse:
        try:
            model = req.learn.arm.to_model()
            files: dict[str, str] = {}
            for cell, res in req.learn.results.items():
                tag = cell.replace("/", "_")
                w = WeightSchedule(np.asarray(res.weights))
                files[f"weights_{tag}.csv"] = w.to_csv()
                acc = np.zeros_like(w.w)
                for traj_in in res.final_trajectories.values():
                    traj = traj_in.to_traj()
                    plan = plan_with_windows(w.n_windows, traj.n_steps)
                    acc += w.w * windowed_features(model, traj, plan).phi
                totals = acc.sum(axis=1, keepdims=True)
                contrib = acc / np.where(totals > 0.0, totals, 1.0)
                lines = ["window," + ",".join(FEATURE_NAMES)]
                for s in range(contrib.shape[0]):
                    lines.append(
                        str(s) + "," + ",".join(repr(float(x)) for x in contrib[s]))
                files[f"contributions_{tag}.csv"] = "\n".join(lines) + "\n"
            for view in ("input", "held_out"):
                vals = sorted(r.avg_deg for r in req.learn.report.rows
                              if r.view == view)
                if not vals:
                    continue
                qs = np.percentile(np.array(vals), [0, 25, 50, 75, 100])
                lines = ["quantile,rmse_avg_deg"]
                for lab, v in zip(("min", "q1", "median", "q3", "max"), qs):
                    lines.append(f"{lab},{float(v)!r}")
                files[f"rmse_quantiles_{view}.csv"] = "\n".join(lines) + "\n"
            return PlotsResponse(files=files)
        except Exception as e:
            raise _http_error(e) from e

    return app


app = create_app()

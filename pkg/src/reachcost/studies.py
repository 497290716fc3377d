"""Study orchestration: pick input demos, learn weights, score the rest.

Three designs, differing in how demonstrations are pooled before learning:

- sdpd: one learner run per (subject, posture) cell, sampling a few demos
  from that cell.
- sdpi: one run per subject, sampling one demo per posture.
- sipi: a single run pooling one demo per posture from every subject.

Demos not sampled as learner input are held out; both the held-out view and
the input view are scored by solving the reaching problem at the learned
weights for each demo's own start state and horizon, then comparing joint
angles. A fixed-weight reference (RMSE of a static-cost predictor on the
original human dataset) ships as comparison constants and is printed next
to every learned result; it is data, never recomputed here.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .arm import ArmModel
from .demos import Demonstration, read_demo
from .doc import DocProblem, solve
from .errors import LengthMismatch, ManifestIncomplete
from .features import (
    FEATURE_NAMES,
    Trajectory,
    WeightSchedule,
    plan_with_windows,
    windowed_features,
)
from .irl import IrlConfig, IrlResult, run

MODES = ("sdpd", "sdpi", "sipi")

# Fixed-weight reference RMSE [deg] per start posture: (q1, q2, avg) rows
# plus the all-posture row, and the overall mean +/- SD. Comparison
# constants stored verbatim; nothing in this package recomputes them.
BASELINE_RMSE_DEG: dict[str, tuple[float, float, float]] = {
    "P1": (16.92, 15.40, 16.16),
    "P2": (10.06, 13.84, 11.95),
    "P3": (20.60, 19.83, 20.21),
    "P4": (9.28, 19.84, 14.56),
    "P5": (13.54, 17.35, 15.45),
    "All": (13.89, 16.99, 15.44),
}
BASELINE_OVERALL_MEAN_DEG = 15.44
BASELINE_OVERALL_SD_DEG = 10.57


def rmse(pred: Trajectory, demo: Trajectory) -> np.ndarray:
    """Per-joint root-mean-square angle error in degrees, shape (2,)."""
    if pred.states.shape != demo.states.shape:
        raise LengthMismatch(
            f"prediction {pred.states.shape} vs demo {demo.states.shape}")
    err = pred.q - demo.q
    return np.degrees(np.sqrt(np.mean(err * err, axis=0)))


@dataclass(frozen=True)
class StudySpec:
    """Which demos exist, how to pool them, and the sampling seed.

    manifest maps subject id -> posture id -> list of demonstrations, each
    entry either a Demonstration or a path readable by read_demo.
    """

    mode: str
    manifest: dict[str, dict[str, list]]
    seed: int = 0
    demos_per_cell: int | None = None  # None: 3 for sdpd, 1 otherwise

    def __post_init__(self):
        object.__setattr__(self, "mode", self.mode.lower())
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")

    @property
    def inputs_per_cell(self) -> int:
        if self.demos_per_cell is not None:
            return self.demos_per_cell
        return 3 if self.mode == "sdpd" else 1

    @classmethod
    def from_json(cls, text: str) -> "StudySpec":
        d = json.loads(text)
        return cls(mode=d["mode"], manifest=d["manifest"],
                   seed=int(d.get("seed", 0)),
                   demos_per_cell=d.get("demos_per_cell"))


@dataclass(frozen=True)
class EvalRow:
    cell: str  # "subject/posture"
    subject_id: str
    posture_id: str
    view: str  # "input" | "held_out"
    rmse_q1_deg: float
    rmse_q2_deg: float
    avg_deg: float
    n_demos: int


@dataclass
class EvalReport:
    mode: str
    seed: int
    rows: list[EvalRow] = field(default_factory=list)
    failed_cells: dict[str, str] = field(default_factory=dict)
    baseline: dict[str, tuple[float, float, float]] = field(
        default_factory=lambda: dict(BASELINE_RMSE_DEG))
    baseline_overall: tuple[float, float] = (
        BASELINE_OVERALL_MEAN_DEG, BASELINE_OVERALL_SD_DEG)

    def view_rows(self, view: str) -> list[EvalRow]:
        return [r for r in self.rows if r.view == view]

    def aggregate(self, view: str) -> tuple[float, float]:
        """(mean, SD) of per-row average RMSE for one view; SD over rows."""
        vals = np.array([r.avg_deg for r in self.view_rows(view)])
        if vals.size == 0:
            return float("nan"), float("nan")
        return float(np.mean(vals)), float(np.std(vals))

    def per_posture(self, view: str) -> dict[str, tuple[float, float, float]]:
        out: dict[str, tuple[float, float, float]] = {}
        for pid in sorted({r.posture_id for r in self.view_rows(view)}):
            rs = [r for r in self.view_rows(view) if r.posture_id == pid]
            q1 = float(np.mean([r.rmse_q1_deg for r in rs]))
            q2 = float(np.mean([r.rmse_q2_deg for r in rs]))
            out[pid] = (q1, q2, (q1 + q2) / 2.0)
        return out

    def to_text(self) -> str:
        lines = [f"mode={self.mode} seed={self.seed}"]
        for view in ("input", "held_out"):
            per = self.per_posture(view)
            if not per:
                continue
            lines.append(f"\n[{view}] RMSE [deg]            learned              reference")
            lines.append("posture            q1      q2     avg     q1      q2     avg")
            for pid, (q1, q2, avg) in per.items():
                b = self.baseline.get(pid, (float("nan"),) * 3)
                lines.append(
                    f"{pid:<14} {q1:7.2f} {q2:7.2f} {avg:7.2f}"
                    f" {b[0]:7.2f} {b[1]:7.2f} {b[2]:7.2f}")
            mean, sd = self.aggregate(view)
            bm, bs = self.baseline_overall
            lines.append(
                f"{'overall':<14} {mean:7.2f} +/- {sd:5.2f}        "
                f"{bm:7.2f} +/- {bs:5.2f}")
        if self.failed_cells:
            lines.append("\nfailed cells:")
            for cell, why in sorted(self.failed_cells.items()):
                lines.append(f"  {cell}: {why}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps({
            "mode": self.mode,
            "seed": self.seed,
            "rows": [vars(r) for r in self.rows],
            "failed_cells": self.failed_cells,
            "baseline_rmse_deg": {k: list(v) for k, v in self.baseline.items()},
            "baseline_overall_mean_sd_deg": list(self.baseline_overall),
        }, indent=2)


@dataclass
class StudyOutcome:
    spec_mode: str
    results: dict[str, IrlResult]
    report: EvalReport
    failures: dict[str, str]
    model: ArmModel | None = None


def _load_manifest(spec: StudySpec) -> dict[str, dict[str, list[Demonstration]]]:
    loaded: dict[str, dict[str, list[Demonstration]]] = {}
    for sid in sorted(spec.manifest):
        loaded[sid] = {}
        for pid in sorted(spec.manifest[sid]):
            cell = []
            for item in spec.manifest[sid][pid]:
                cell.append(read_demo(item) if isinstance(item, str) else item)
            loaded[sid][pid] = cell
    return loaded


def _check_manifest(spec: StudySpec, demos: dict[str, dict[str, list[Demonstration]]]):
    if not demos:
        raise ManifestIncomplete("manifest has no subjects")
    postures = sorted({p for cells in demos.values() for p in cells})
    need = spec.inputs_per_cell if spec.mode == "sdpd" else 1
    for sid, cells in demos.items():
        for pid in postures:
            if pid not in cells or len(cells[pid]) < need:
                raise ManifestIncomplete(
                    f"subject {sid} posture {pid}: need at least {need} demos")


def _sample_cell(rng: np.random.Generator, cell: list[Demonstration], k: int):
    idx = rng.choice(len(cell), size=k, replace=False)
    chosen = sorted(int(i) for i in idx)
    inputs = [cell[i] for i in chosen]
    held = [d for i, d in enumerate(cell) if i not in chosen]
    return inputs, held


def _predict(model: ArmModel, weights: WeightSchedule, demo: Demonstration,
             cache: dict, warm: dict, cfg: IrlConfig) -> Trajectory:
    traj = demo.traj
    key = (demo.posture_id, traj.n_steps, traj.dt, demo.target_x,
           traj.q[0].tobytes())
    if key in cache:
        return cache[key]
    plan = plan_with_windows(weights.n_windows, traj.n_steps)
    prob = DocProblem(model=model, q0=traj.q[0], target_x=demo.target_x,
                      horizon=traj.n_steps, dt=traj.dt, plan=plan,
                      weights=weights)
    sol = solve(prob, warm_start=warm.get(demo.posture_id),
                opts=cfg.solver_options)
    cache[key] = sol.traj
    return sol.traj


def _score_cell(cell_name: str, sid_for_row, result: IrlResult,
                inputs: list[Demonstration], held: list[Demonstration],
                model: ArmModel, cfg: IrlConfig, rows: list[EvalRow]):
    cache: dict = {}
    warm = {pid: sol.traj for pid, sol in result.final_trajectories.items()}
    for view, group in (("input", inputs), ("held_out", held)):
        by_posture: dict[str, list[np.ndarray]] = {}
        for demo in group:
            pred = _predict(model, result.weights, demo, cache, warm, cfg)
            by_posture.setdefault(demo.posture_id, []).append(rmse(pred, demo.traj))
        for pid in sorted(by_posture):
            vals = np.mean(np.stack(by_posture[pid]), axis=0)
            q1, q2 = float(vals[0]), float(vals[1])
            rows.append(EvalRow(
                cell=cell_name, subject_id=sid_for_row, posture_id=pid,
                view=view, rmse_q1_deg=q1, rmse_q2_deg=q2,
                avg_deg=(q1 + q2) / 2.0, n_demos=len(by_posture[pid])))


def run_study(spec: StudySpec, cfg: IrlConfig | None = None,
              model: ArmModel | None = None) -> StudyOutcome:
    """Run one study; deterministic in (manifest, seed, config).

    The arm model defaults to the model recorded with the first demo. Cells
    fail independently: an error in one learner run is recorded and the
    remaining cells still complete.
    """
    cfg = cfg or IrlConfig()
    demos = _load_manifest(spec)
    _check_manifest(spec, demos)
    rng = np.random.default_rng(spec.seed)

    if model is None:
        first_subject = next(iter(demos.values()))
        model = next(iter(first_subject.values()))[0].arm

    # cells: (name, subject-label, input demos, held-out demos)
    cells: list[tuple[str, str, list[Demonstration], list[Demonstration]]] = []
    k = spec.inputs_per_cell
    if spec.mode == "sdpd":
        for sid in sorted(demos):
            for pid in sorted(demos[sid]):
                ins, held = _sample_cell(rng, demos[sid][pid], k)
                cells.append((f"{sid}/{pid}", sid, ins, held))
    elif spec.mode == "sdpi":
        for sid in sorted(demos):
            ins, held = [], []
            for pid in sorted(demos[sid]):
                i, h = _sample_cell(rng, demos[sid][pid], k)
                ins += i
                held += h
            cells.append((sid, sid, ins, held))
    else:  # sipi
        ins, held = [], []
        for sid in sorted(demos):
            for pid in sorted(demos[sid]):
                i, h = _sample_cell(rng, demos[sid][pid], k)
                ins += i
                held += h
        cells.append(("all", "all", ins, held))

    results: dict[str, IrlResult] = {}
    failures: dict[str, str] = {}
    report = EvalReport(mode=spec.mode, seed=spec.seed)
    for name, sid, ins, held in cells:
        try:
            result = run(ins, model, cfg)
            results[name] = result
            _score_cell(name, sid, result, ins, held, model, cfg, report.rows)
        except Exception as e:  # noqa: BLE001 - cell isolation by contract
            failures[name] = f"{type(e).__name__}: {e}"
    report.failed_cells = dict(failures)
    return StudyOutcome(spec_mode=spec.mode, results=results,
                        report=report, failures=failures, model=model)


def _contribution_matrix(model: ArmModel, result: IrlResult) -> np.ndarray:
    """Share of each window's realized cost carried by each feature.

    w_s * phi_s elementwise, averaged over the final per-posture solutions,
    then normalized so each window row sums to 1 (rows with zero total cost
    stay all-zero).
    """
    w = result.weights.w
    acc = np.zeros_like(w)
    for sol in result.final_trajectories.values():
        plan = plan_with_windows(result.weights.n_windows, sol.traj.n_steps)
        phi = windowed_features(model, sol.traj, plan).phi
        acc += w * phi
    totals = acc.sum(axis=1, keepdims=True)
    safe = np.where(totals > 0.0, totals, 1.0)
    return acc / safe


def emit_plots(outcome: StudyOutcome, out_dir: str) -> list[str]:
    """Plot-ready CSVs: weight profiles, cost contributions, RMSE quantiles."""
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []

    def put(name: str, text: str):
        path = os.path.join(out_dir, name)
        with open(path, "w") as f:
            f.write(text)
        written.append(path)

    for cell, result in outcome.results.items():
        tag = cell.replace("/", "_")
        put(f"weights_{tag}.csv", result.weights.to_csv())
        if outcome.model is not None:
            contrib = _contribution_matrix(outcome.model, result)
            lines = ["window," + ",".join(FEATURE_NAMES)]
            for s in range(contrib.shape[0]):
                lines.append(str(s) + "," + ",".join(repr(float(x)) for x in contrib[s]))
            put(f"contributions_{tag}.csv", "\n".join(lines) + "\n")

    for view in ("input", "held_out"):
        vals = sorted(r.avg_deg for r in outcome.report.view_rows(view))
        if not vals:
            continue
        qs = np.percentile(np.array(vals), [0, 25, 50, 75, 100])
        lines = ["quantile,rmse_avg_deg"]
        for lab, v in zip(("min", "q1", "median", "q3", "max"), qs):
            lines.append(f"{lab},{float(v)!r}")
        put(f"rmse_quantiles_{view}.csv", "\n".join(lines) + "\n")

    put("report.json", outcome.report.to_json() + "\n")
    put("report.txt", outcome.report.to_text())
    return written

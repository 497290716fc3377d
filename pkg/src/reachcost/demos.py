"""Demonstration ingestion, synthesis, and the on-disk trajectory format.

A demonstration is a planar reaching trajectory plus the metadata needed to
pose its reaching problem: who produced it, from which start posture, toward
which horizontal target, with which arm. Real recordings enter through
marker files; synthetic ones are produced by the reaching solver so that a
known weight schedule is the ground truth.

File format: a CSV of samples next to a JSON sidecar (same path with
``.json`` appended) carrying subject, posture, target, arm parameters, and a
schema version. Floats are written with repr so round trips are lossless.
"""

from __future__ import annotations

import json
import os

import numpy as np
from dataclasses import dataclass
from scipy.signal import butter, filtfilt

from .arm import ArmModel, inverse_dynamics
from .doc import DocProblem, SolverOptions, solve
from .errors import NonFiniteData, NonRigid, ParseError, SchemaVersionMismatch, TooShort
from .features import Trajectory, WeightSchedule, plan_with_windows

SCHEMA_VERSION = 1

# Start postures (shoulder, elbow) in degrees: spanning low-to-high shoulder
# elevation with the elbow opening up across the set. Artifact-chosen
# defaults; override per study via config.
POSTURES: dict[str, tuple[float, float]] = {
    "P1": (80.0, 100.0),
    "P2": (70.0, 80.0),
    "P3": (60.0, 60.0),
    "P4": (50.0, 40.0),
    "P5": (40.0, 20.0),
}


def posture_angles(posture_id: str) -> np.ndarray:
    if posture_id not in POSTURES:
        raise KeyError(f"unknown posture {posture_id!r}; expected P1..P5")
    return np.radians(POSTURES[posture_id])


@dataclass(frozen=True)
class Demonstration:
    subject_id: str
    posture_id: str
    traj: Trajectory
    target_x: float
    arm: ArmModel

    def __post_init__(self):
        if self.traj.n_steps < 1:
            raise TooShort("demonstration needs at least 2 samples")
        q0 = self.traj.q[0]
        lo, hi = np.asarray(self.arm.q_min), np.asarray(self.arm.q_max)
        if (q0 < lo).any() or (q0 > hi).any():
            raise ValueError("demonstration starts outside the joint bounds")


@dataclass(frozen=True)
class MarkerFrames:
    timestamps: np.ndarray  # (F,)
    shoulder: np.ndarray  # (F, 3)
    elbow: np.ndarray  # (F, 3)
    wrist: np.ndarray  # (F, 3)

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=float)
        object.__setattr__(self, "timestamps", ts)
        for name in ("shoulder", "elbow", "wrist"):
            pts = np.asarray(getattr(self, name), dtype=float)
            if pts.shape != (ts.size, 3):
                raise ValueError(f"{name} must be (F, 3) matching timestamps")
            if not np.isfinite(pts).all():
                raise NonFiniteData(f"{name} markers contain NaN or Inf")
            object.__setattr__(self, name, pts)
        if not np.isfinite(ts).all():
            raise NonFiniteData("timestamps contain NaN or Inf")
        if ts.size >= 2 and not (np.diff(ts) > 0).all():
            raise ValueError("timestamps must be strictly increasing")

    @property
    def n_frames(self) -> int:
        return self.timestamps.size


def joints_to_markers(model: ArmModel, q: np.ndarray, timestamps: np.ndarray,
                      plane_normal_tilt: float = 0.0) -> MarkerFrames:
    """Synthesize shoulder/elbow/wrist markers from joint angles.

    The arm lives in the X-Z plane (Y = 0); a nonzero tilt rotates the whole
    plane about the X axis to exercise the plane-fitting path.
    """
    q = np.asarray(q, dtype=float)
    F = q.shape[0]
    shoulder = np.zeros((F, 3))
    elbow_x = model.l1 * np.cos(q[:, 0])
    elbow_z = model.l1 * np.sin(q[:, 0])
    wrist_x = elbow_x + model.l2 * np.cos(q[:, 0] + q[:, 1])
    wrist_z = elbow_z + model.l2 * np.sin(q[:, 0] + q[:, 1])
    elbow = np.stack([elbow_x, np.zeros(F), elbow_z], axis=1)
    wrist = np.stack([wrist_x, np.zeros(F), wrist_z], axis=1)
    if plane_normal_tilt != 0.0:
        ct, st = np.cos(plane_normal_tilt), np.sin(plane_normal_tilt)
        rot = np.array([[1.0, 0.0, 0.0], [0.0, ct, -st], [0.0, st, ct]])
        elbow = elbow @ rot.T
        wrist = wrist @ rot.T
    return MarkerFrames(timestamps=np.asarray(timestamps, dtype=float),
                        shoulder=shoulder, elbow=elbow, wrist=wrist)


def _fit_plane_basis(points: np.ndarray, origin: np.ndarray):
    """Least-squares plane through the centered cloud; in-plane basis.

    The first basis vector is the projection of global +X (horizontal) onto
    the plane so the in-plane abscissa keeps its horizontal meaning; the
    second completes it so that +Z maps to positive ordinate.
    """
    centered = points - origin
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    normal = vt[-1]
    ex = np.array([1.0, 0.0, 0.0]) - normal * normal[0]
    nx = np.linalg.norm(ex)
    if nx < 1e-9:  # plane perpendicular to X: fall back to first right vector
        ex = vt[0]
        nx = 1.0
    ex = ex / nx
    ez = np.cross(normal, ex)
    if ez[2] < 0.0:
        ez = -ez
    return ex, ez


def markers_to_joints(frames: MarkerFrames, model: ArmModel,
                      dt: float | None = None,
                      filter_cutoff_hz: float | None = 8.0) -> Trajectory:
    """Planar joint trajectory from 3D markers.

    Projects onto the best-fit movement plane, converts to shoulder and
    elbow angles, resamples to uniform dt (default: median frame interval),
    differentiates, and low-pass filters kinematics with a zero-phase
    second-order Butterworth (pass None to skip). Torques come from inverse
    dynamics on the filtered kinematics, so ``model`` is required.
    """
    if frames.n_frames < 2:
        raise TooShort("need at least 2 marker frames")

    upper = np.linalg.norm(frames.elbow - frames.shoulder, axis=1)
    fore = np.linalg.norm(frames.wrist - frames.elbow, axis=1)
    for name, seg in (("upper arm", upper), ("forearm", fore)):
        mean = float(np.mean(seg))
        if mean <= 0.0 or float(np.max(np.abs(seg - mean))) / mean > 0.05:
            raise NonRigid(f"{name} length varies more than 5% across frames")

    origin = frames.shoulder.mean(axis=0)
    cloud = np.vstack([frames.shoulder, frames.elbow, frames.wrist])
    ex, ez = _fit_plane_basis(cloud, origin)

    def project(pts):
        rel = pts - origin
        return np.stack([rel @ ex, rel @ ez], axis=1)

    sh = project(frames.shoulder)
    el = project(frames.elbow)
    wr = project(frames.wrist)

    seg1 = el - sh
    seg2 = wr - el
    q1 = np.unwrap(np.arctan2(seg1[:, 1], seg1[:, 0]))
    q12 = np.unwrap(np.arctan2(seg2[:, 1], seg2[:, 0]))
    q2 = q12 - q1

    ts = frames.timestamps
    if dt is None:
        dt = float(np.median(np.diff(ts)))
    n = int(np.floor((ts[-1] - ts[0]) / dt + 1e-9))
    if n < 1:
        raise TooShort("marker capture shorter than one sample interval")
    tu = ts[0] + dt * np.arange(n + 1)
    q = np.stack([np.interp(tu, ts, q1), np.interp(tu, ts, q2)], axis=1)

    if filter_cutoff_hz is not None:
        nyq = 0.5 / dt
        if filter_cutoff_hz < nyq and q.shape[0] > 12:
            b, a = butter(2, filter_cutoff_hz / nyq)
            q = filtfilt(b, a, q, axis=0)

    v = np.gradient(q, dt, axis=0)
    acc = np.gradient(v, dt, axis=0)
    controls = np.stack(
        [inverse_dynamics(model, q[t], v[t], acc[t]) for t in range(n)])
    return Trajectory(dt=dt, states=np.hstack([q, v]), controls=controls)


def generate_synthetic(model: ArmModel, posture_id: str, w_true: WeightSchedule,
                       T_d: int, dt: float, noise_std_deg: float = 0.0,
                       subject_id: str = "synthetic", seed: int = 0,
                       target_x: float | None = None,
                       solver_options: SolverOptions | None = None) -> Demonstration:
    """Demonstration produced by the reaching solver at known weights.

    Noise (if any) is additive Gaussian on the joint angles, seeded, with
    velocities recomputed by central differences so states stay consistent.
    The initial sample is left noise-free (subjects start exactly at the
    instructed posture, and the solver will be anchored there).
    """
    q0 = posture_angles(posture_id)
    if target_x is None:
        target_x = 0.85 * model.reach
    plan = plan_with_windows(w_true.n_windows, T_d)
    prob = DocProblem(model=model, q0=q0, target_x=target_x, horizon=T_d,
                      dt=dt, plan=plan, weights=w_true)
    sol = solve(prob, opts=solver_options or SolverOptions())
    traj = sol.traj
    if noise_std_deg > 0.0:
        rng = np.random.default_rng(seed)
        q = traj.q.copy()
        q[1:] += rng.normal(0.0, np.radians(noise_std_deg), size=q[1:].shape)
        v = np.gradient(q, dt, axis=0)
        v[0] = 0.0
        traj = Trajectory(dt=dt, states=np.hstack([q, v]), controls=traj.controls)
    return Demonstration(subject_id=subject_id, posture_id=posture_id,
                         traj=traj, target_x=target_x, arm=model)


CSV_HEADER = "t,q1,q2,v1,v2,tau1,tau2"


def write_demo(path: str, demo: Demonstration) -> None:
    """CSV trajectory plus JSON sidecar at path + '.json'."""
    T = demo.traj.n_steps
    lines = [CSV_HEADER]
    for t in range(T + 1):
        row = [repr(t * demo.traj.dt)]
        row += [repr(float(x)) for x in demo.traj.states[t]]
        if t < T:
            row += [repr(float(x)) for x in demo.traj.controls[t]]
        else:
            row += ["", ""]
        lines.append(",".join(row))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
    sidecar = {
        "schema_version": SCHEMA_VERSION,
        "subject_id": demo.subject_id,
        "posture_id": demo.posture_id,
        "target_x": demo.target_x,
        "dt": demo.traj.dt,
        "n_steps": T,
        "duration_s": T * demo.traj.dt,
        "arm": demo.arm.to_dict(),
    }
    with open(path + ".json", "w") as f:
        json.dump(sidecar, f, indent=2)
        f.write("\n")


def read_demo(path: str) -> Demonstration:
    sidecar_path = path + ".json"
    if not os.path.exists(sidecar_path):
        raise ParseError(f"missing sidecar {sidecar_path}", line=0, column=0)
    with open(sidecar_path) as f:
        try:
            meta = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError(f"sidecar is not valid JSON: {e}",
                             line=e.lineno, column=e.colno) from e
    version = meta.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"sidecar schema {version!r}, this build reads {SCHEMA_VERSION}")

    with open(path) as f:
        text = f.read()
    lines = text.splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ParseError(f"expected header {CSV_HEADER!r}", line=1, column=1)
    states = []
    controls = []
    n_rows = len(lines) - 1
    for i, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 7:
            raise ParseError(f"expected 7 columns, got {len(cells)}",
                             line=i, column=1)
        try:
            vals = [float(c) for c in cells[:5]]
        except ValueError as e:
            raise ParseError(str(e), line=i, column=1) from e
        states.append(vals[1:5])
        is_last = i - 1 == n_rows
        if cells[5] == "" and cells[6] == "":
            if not is_last:
                raise ParseError("missing torque on a non-final row",
                                 line=i, column=6)
        else:
            try:
                controls.append([float(cells[5]), float(cells[6])])
            except ValueError as e:
                raise ParseError(str(e), line=i, column=6) from e
    if len(states) < 2:
        raise ParseError("trajectory needs at least 2 samples", line=2, column=1)
    if len(controls) != len(states) - 1:
        raise ParseError("torque rows must cover all but the final sample",
                         line=len(lines), column=6)
    traj = Trajectory(dt=float(meta["dt"]), states=np.asarray(states),
                      controls=np.asarray(controls))
    if traj.n_steps != int(meta["n_steps"]):
        raise ParseError("sidecar n_steps disagrees with the CSV", line=1, column=1)
    return Demonstration(
        subject_id=str(meta["subject_id"]),
        posture_id=str(meta["posture_id"]),
        traj=traj,
        target_x=float(meta["target_x"]),
        arm=ArmModel.from_dict(meta["arm"]),
    )


def read_marker_csv(path: str) -> MarkerFrames:
    """Generic marker CSV: t, sx,sy,sz, ex,ey,ez, wx,wy,wz."""
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines:
        raise ParseError("empty marker file", line=1, column=1)
    header = [c.strip() for c in lines[0].split(",")]
    expected = ["t", "sx", "sy", "sz", "ex", "ey", "ez", "wx", "wy", "wz"]
    if header != expected:
        raise ParseError(f"expected header {','.join(expected)!r}",
                         line=1, column=1)
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 10:
            raise ParseError(f"expected 10 columns, got {len(cells)}",
                             line=i, column=1)
        try:
            rows.append([float(c) for c in cells])
        except ValueError as e:
            raise ParseError(str(e), line=i, column=1) from e
    arr = np.asarray(rows)
    if arr.shape[0] < 2:
        raise TooShort("need at least 2 marker frames")
    return MarkerFrames(timestamps=arr[:, 0], shoulder=arr[:, 1:4],
                        elbow=arr[:, 4:7], wrist=arr[:, 7:10])


def write_marker_csv(path: str, frames: MarkerFrames) -> None:
    lines = ["t,sx,sy,sz,ex,ey,ez,wx,wy,wz"]
    for i in range(frames.n_frames):
        cells = [repr(float(frames.timestamps[i]))]
        for pts in (frames.shoulder, frames.elbow, frames.wrist):
            cells += [repr(float(x)) for x in pts[i]]
        lines.append(",".join(cells))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")

"""HTTP endpoints: payload round trips, status codes, tiny end-to-end runs."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

import reachcost
from reachcost.demos import generate_synthetic, joints_to_markers
from reachcost.features import (
    WeightSchedule,
    make_window_plan,
    windowed_features,
)
from reachcost.service import DemoIn, app

W = [[0.0, 0.0, 0.0, 0.8, 0.0, 0.2, 0.0]]


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as c:
        yield c


def _demo_payload(model, posture="P1", T=6, seed=0, noise=0.0, target=None):
    demo = generate_synthetic(model, posture, WeightSchedule(np.array(W)),
                              T_d=T, dt=0.03, noise_std_deg=noise, seed=seed,
                              target_x=target)
    return DemoIn.from_demo(demo).model_dump()


def test_health_reports_version(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok", "version": reachcost.__version__}


def test_synth_matches_library_call(client, model):
    r = client.post("/synth", json={
        "posture_id": "P2", "weights": W, "horizon": 6, "dt": 0.03,
        "noise_std_deg": 0.4, "seed": 9})
    assert r.status_code == 200
    demo = r.json()["demo"]
    local = generate_synthetic(model, "P2", WeightSchedule(np.array(W)),
                               T_d=6, dt=0.03, noise_std_deg=0.4, seed=9)
    assert demo["subject_id"] == "synthetic"
    assert demo["posture_id"] == "P2"
    assert demo["target_x"] == pytest.approx(local.target_x)
    assert np.array_equal(np.array(demo["trajectory"]["states"]),
                          local.traj.states)
    assert demo["arm"]["l1"] == model.l1

    assert client.post("/synth", json={
        "posture_id": "P9", "weights": W, "horizon": 6, "dt": 0.03,
    }).status_code == 422
    assert client.post("/synth", json={
        "posture_id": "P1", "weights": W, "horizon": 0, "dt": 0.03,
    }).status_code == 422  # pydantic bound


def test_simulate_solves_and_rejects_bad_problems(client, model):
    q0 = [0.6, 1.4]
    r = client.post("/simulate", json={
        "q0": q0, "target_x": 0.85 * model.reach, "horizon": 8, "dt": 0.03,
        "weights": W})
    assert r.status_code == 200
    body = r.json()
    traj = body["trajectory"]
    assert len(traj["states"]) == 9 and len(traj["controls"]) == 8
    assert isinstance(body["converged"], bool)
    assert body["constraint_violation"] <= 1e-4
    assert body["iterations"] >= 1
    assert np.isfinite(body["objective"])

    # same request again is deterministic
    r2 = client.post("/simulate", json={
        "q0": q0, "target_x": 0.85 * model.reach, "horizon": 8, "dt": 0.03,
        "weights": W})
    assert r2.json()["trajectory"] == traj

    unreachable = client.post("/simulate", json={
        "q0": q0, "target_x": 10.0, "horizon": 8, "dt": 0.03, "weights": W})
    assert unreachable.status_code == 422
    assert "Infeasible" in unreachable.json()["detail"]

    bad_q0 = client.post("/simulate", json={
        "q0": [-2.0, 1.0], "target_x": 0.4, "horizon": 8, "dt": 0.03,
        "weights": W})
    assert bad_q0.status_code == 422


def test_features_endpoint_matches_library(client, model):
    demo = generate_synthetic(model, "P3", WeightSchedule(np.array(W)),
                              T_d=8, dt=0.03)
    payload = DemoIn.from_demo(demo).model_dump()["trajectory"]

    r = client.post("/features", json={"trajectory": payload})
    assert r.status_code == 200
    body = r.json()
    plan = make_window_plan(8)
    assert body["n_windows"] == plan.n_windows
    assert body["boundaries"] == list(plan.boundaries)
    assert body["feature_names"][0] == "cartesian_velocity"
    local = windowed_features(model, demo.traj, plan)
    assert np.allclose(np.array(body["phi"]), local.phi, rtol=0, atol=0)

    r2 = client.post("/features", json={"trajectory": payload, "n_windows": 2})
    assert r2.status_code == 200
    assert r2.json()["n_windows"] == 2

    r3 = client.post("/features", json={"trajectory": payload, "n_windows": 99})
    assert r3.status_code == 400  # more windows than control samples


def test_preprocess_round_trips_markers(client, model):
    t = np.arange(30) * 0.01
    q = np.stack([0.8 + 0.1 * np.sin(3 * t), 1.3 - 0.1 * np.cos(2 * t)], axis=1)
    frames = joints_to_markers(model, q, t)
    rows = np.hstack([t[:, None], frames.shoulder, frames.elbow,
                      frames.wrist]).tolist()

    r = client.post("/preprocess", json={
        "markers": rows, "filter_cutoff_hz": None, "posture_id": "P4",
        "subject_id": "h1"})
    assert r.status_code == 200
    demo = r.json()["demo"]
    got_q = np.array(demo["trajectory"]["states"])[:, :2]
    assert np.max(np.abs(got_q - q)) < 1e-8
    assert demo["posture_id"] == "P4"
    assert demo["target_x"] == pytest.approx(0.85 * model.reach)

    assert client.post("/preprocess", json={
        "markers": [row[:9] for row in rows]}).status_code == 422

    wrist = frames.wrist.copy()
    wrist[10] *= 1.5
    bad = np.hstack([t[:, None], frames.shoulder, frames.elbow, wrist]).tolist()
    r_bad = client.post("/preprocess", json={"markers": bad})
    assert r_bad.status_code == 400
    assert "NonRigid" in r_bad.json()["detail"]

    assert client.post("/preprocess",
                       json={"markers": rows[:1]}).status_code == 400


def test_eval_endpoint_scores_demos(client, model):
    demos = [_demo_payload(model, "P1", seed=1, noise=0.3),
             _demo_payload(model, "P1", seed=2, noise=0.3),
             _demo_payload(model, "P2", seed=3, noise=0.3)]
    r = client.post("/eval", json={"weights": W, "demos": demos})
    assert r.status_code == 200
    body = r.json()
    rows = body["rows"]
    assert len(rows) == 2  # one per (subject, posture) cell
    by_pid = {row["posture_id"]: row for row in rows}
    assert by_pid["P1"]["n_demos"] == 2 and by_pid["P2"]["n_demos"] == 1
    for row in rows:
        assert row["view"] == "input"
        assert row["avg_deg"] == pytest.approx(
            (row["rmse_q1_deg"] + row["rmse_q2_deg"]) / 2)
        assert row["avg_deg"] < 5.0  # generated from these very weights
    assert "reference" in body["text"]

    bad = dict(_demo_payload(model, "P1"), target_x=5.0)
    assert client.post("/eval", json={
        "weights": W, "demos": [bad]}).status_code == 422


def test_learn_then_plots_round_trip(client, model):
    manifest = {"S1": {
        "P1": [_demo_payload(model, "P1", seed=1, noise=0.3),
               _demo_payload(model, "P1", seed=2, noise=0.3)],
        "P2": [_demo_payload(model, "P2", seed=3, noise=0.3),
               _demo_payload(model, "P2", seed=4, noise=0.3)],
    }}
    r = client.post("/learn", json={
        "mode": "sipi", "manifest": manifest,
        "config": {"max_iterations": 0, "n_windows": 2}})
    assert r.status_code == 200
    body = r.json()
    assert set(body["results"]) == {"all"}
    cell = body["results"]["all"]
    assert np.array(cell["weights"]).shape == (2, 7)
    assert cell["terminated_reason"] == "max_iterations"
    assert set(cell["final_trajectories"]) == {"P1", "P2"}
    assert body["report"]["mode"] == "sipi"
    assert not body["failures"]
    views = {row["view"] for row in body["report"]["rows"]}
    assert views == {"input", "held_out"}

    p = client.post("/plots", json={"learn": body})
    assert p.status_code == 200
    files = p.json()["files"]
    assert set(files) == {
        "weights_all.csv", "contributions_all.csv",
        "rmse_quantiles_input.csv", "rmse_quantiles_held_out.csv"}
    assert files["weights_all.csv"].splitlines()[0].startswith("window,")

    missing = {"S1": {"P1": manifest["S1"]["P1"], "P2": []}}
    r_bad = client.post("/learn", json={"mode": "sipi", "manifest": missing})
    assert r_bad.status_code == 400
    assert "ManifestIncomplete" in r_bad.json()["detail"]

    assert client.post("/learn", json={
        "mode": "bogus", "manifest": manifest}).status_code == 422

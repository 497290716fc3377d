"""Command-line client for the reaching-cost service.

Every subcommand builds a JSON request and sends it to the HTTP service —
by default an in-process instance, or a remote one via ``--server URL`` —
then writes the response to files under ``--out``. The heavy lifting
(dynamics, optimization, learning) happens behind the service boundary;
this module only reads local files, shapes requests, and unpacks replies.

Exit codes: 0 on success, 2 when a study finished but some cells failed,
1 on any fatal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .demos import read_demo, read_marker_csv, write_demo
from .features import FEATURE_NAMES, WeightSchedule

POSTURE_IDS = ("P1", "P2", "P3", "P4", "P5")


def _client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server.rstrip("/"), timeout=None)
    from .service import create_app

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient
    return TestClient(create_app(), raise_server_exceptions=False)


def _post(client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except Exception:
            detail = resp.text
        raise RuntimeError(f"{path} failed ({resp.status_code}): {detail}")
    return resp.json()


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    cfg = json.loads(Path(path).read_text())
    if not isinstance(cfg, dict):
        raise RuntimeError("--config must contain a JSON object")
    return cfg


def _read_weights_csv(path: str) -> list[list[float]]:
    text = Path(path).read_text()
    rows = []
    for line in text.strip().splitlines()[1:]:  # skip header
        cells = line.split(",")
        rows.append([float(x) for x in cells[1:]])  # first column: window idx
    return rows


def _demo_payload(demo) -> dict:
    return {
        "subject_id": demo.subject_id,
        "posture_id": demo.posture_id,
        "target_x": demo.target_x,
        "arm": demo.arm.to_dict(),
        "trajectory": {
            "dt": demo.traj.dt,
            "states": demo.traj.states.tolist(),
            "controls": demo.traj.controls.tolist(),
        },
    }


def _demo_from_payload(payload: dict):
    from .arm import ArmModel
    from .demos import Demonstration
    from .features import Trajectory

    traj = Trajectory(
        dt=payload["trajectory"]["dt"],
        states=np.asarray(payload["trajectory"]["states"]),
        controls=np.asarray(payload["trajectory"]["controls"]),
    )
    return Demonstration(
        subject_id=payload["subject_id"],
        posture_id=payload["posture_id"],
        traj=traj,
        target_x=payload["target_x"],
        arm=ArmModel(**payload["arm"]),
    )


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_synth(args, cfg: dict) -> int:
    out = _out_dir(args)
    client = _client(args.server)
    postures = POSTURE_IDS if args.posture == "all" else (args.posture,)
    weights = _read_weights_csv(args.weights)
    manifest: dict[str, dict[str, list[str]]] = {}
    index = 0
    for s in range(args.subjects):
        sid = f"S{s + 1}"
        for pid in postures:
            for rep in range(args.reps):
                req = {
                    "posture_id": pid,
                    "weights": weights,
                    "horizon": args.horizon,
                    "dt": args.dt,
                    "noise_std_deg": args.noise_std_deg,
                    "seed": args.seed + index,
                    "subject_id": sid,
                }
                index += 1
                if args.target_x is not None:
                    req["target_x"] = args.target_x
                if "arm" in cfg:
                    req["arm"] = cfg["arm"]
                if "solver" in cfg:
                    req["solver_options"] = cfg["solver"]
                demo = _demo_from_payload(_post(client, "/synth", req)["demo"])
                path = out / f"{sid}_{pid}_{rep + 1}.csv"
                write_demo(str(path), demo)
                manifest.setdefault(sid, {}).setdefault(pid, []).append(
                    str(path))
                print(f"wrote {path}")
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {out / 'manifest.json'}")
    return 0


def cmd_preprocess(args, cfg: dict) -> int:
    out = _out_dir(args)
    client = _client(args.server)
    frames = read_marker_csv(args.markers)
    rows = np.column_stack([
        frames.timestamps, frames.shoulder, frames.elbow, frames.wrist])
    req: dict = {
        "markers": rows.tolist(),
        "subject_id": args.subject,
        "posture_id": args.posture,
        "filter_cutoff_hz": args.cutoff_hz,
    }
    if args.dt is not None:
        req["dt"] = args.dt
    if args.target_x is not None:
        req["target_x"] = args.target_x
    if "arm" in cfg:
        req["arm"] = cfg["arm"]
    demo = _demo_from_payload(_post(client, "/preprocess", req)["demo"])
    path = out / f"{args.subject}_{args.posture}.csv"
    write_demo(str(path), demo)
    print(f"wrote {path}")
    return 0


def cmd_features(args, cfg: dict) -> int:
    out = _out_dir(args)
    client = _client(args.server)
    demo = read_demo(args.demo)
    req: dict = {
        "trajectory": {
            "dt": demo.traj.dt,
            "states": demo.traj.states.tolist(),
            "controls": demo.traj.controls.tolist(),
        },
        "arm": demo.arm.to_dict(),
    }
    if args.windows is not None:
        req["n_windows"] = args.windows
    resp = _post(client, "/features", req)
    lines = ["window," + ",".join(resp["feature_names"])]
    for s, row in enumerate(resp["phi"]):
        lines.append(str(s) + "," + ",".join(repr(float(x)) for x in row))
    path = out / "features.csv"
    path.write_text("\n".join(lines) + "\n")
    print(f"wrote {path} ({resp['n_windows']} windows)")
    return 0


def cmd_simulate(args, cfg: dict) -> int:
    out = _out_dir(args)
    client = _client(args.server)
    req = json.loads(Path(args.problem).read_text())
    if "arm" not in req and "arm" in cfg:
        req["arm"] = cfg["arm"]
    if "solver" in cfg:
        req.setdefault("solver_options", cfg["solver"])
    if args.warm:
        demo = read_demo(args.warm)
        req["warm_start"] = {
            "dt": demo.traj.dt,
            "states": demo.traj.states.tolist(),
            "controls": demo.traj.controls.tolist(),
        }
    resp = _post(client, "/simulate", req)
    traj = resp.pop("trajectory")
    states = np.asarray(traj["states"])
    controls = np.asarray(traj["controls"])
    lines = ["t,q1,q2,v1,v2,tau1,tau2"]
    for t in range(states.shape[0]):
        tau = (",".join(repr(float(u)) for u in controls[t])
               if t < controls.shape[0] else ",")
        lines.append(f"{t * traj['dt']!r},"
                     + ",".join(repr(float(x)) for x in states[t])
                     + "," + tau)
    (out / "solution.csv").write_text("\n".join(lines) + "\n")
    (out / "solution.json").write_text(json.dumps(resp, indent=2) + "\n")
    print(f"wrote {out / 'solution.csv'}")
    print(f"objective={resp['objective']:.6g} converged={resp['converged']} "
          f"violation={resp['constraint_violation']:.3g}")
    return 0


def _load_manifest_payload(path: str) -> dict:
    manifest = json.loads(Path(path).read_text())
    base = Path(path).parent
    out: dict[str, dict[str, list[dict]]] = {}
    for sid, cells in manifest.items():
        out[sid] = {}
        for pid, entries in cells.items():
            demos = []
            for entry in entries:
                p = Path(entry)
                if not p.is_absolute():
                    p = base / p
                demos.append(_demo_payload(read_demo(str(p))))
            out[sid][pid] = demos
    return out


def cmd_learn(args, cfg: dict) -> int:
    out = _out_dir(args)
    client = _client(args.server)
    req: dict = {
        "mode": args.mode,
        "manifest": _load_manifest_payload(args.manifest),
        "seed": args.seed,
    }
    if args.demos_per_cell is not None:
        req["demos_per_cell"] = args.demos_per_cell
    if "irl" in cfg:
        req["config"] = cfg["irl"]
    if "arm" in cfg:
        req["arm"] = cfg["arm"]
    resp = _post(client, "/learn", req)
    (out / "results.json").write_text(json.dumps(resp, indent=2) + "\n")
    (out / "report.txt").write_text(resp["report"]["text"])
    (out / "report.json").write_text(
        json.dumps(resp["report"], indent=2) + "\n")
    for cell, res in resp["results"].items():
        tag = cell.replace("/", "_")
        w = WeightSchedule(np.asarray(res["weights"]))
        (out / f"weights_{tag}.csv").write_text(w.to_csv())
    print(f"wrote {out / 'results.json'}")
    sys.stdout.write(resp["report"]["text"])
    if resp["failures"]:
        for cell, msg in resp["failures"].items():
            print(f"cell failed: {cell}: {msg}", file=sys.stderr)
        return 2
    return 0


def cmd_eval(args, cfg: dict) -> int:
    out = _out_dir(args)
    client = _client(args.server)
    demos: list[dict] = []
    for cells in _load_manifest_payload(args.manifest).values():
        for entries in cells.values():
            demos.extend(entries)
    req: dict = {
        "weights": _read_weights_csv(args.weights),
        "demos": demos,
    }
    if "arm" in cfg:
        req["arm"] = cfg["arm"]
    if "solver" in cfg:
        req["solver_options"] = cfg["solver"]
    resp = _post(client, "/eval", req)
    (out / "report.txt").write_text(resp["text"])
    (out / "report.json").write_text(json.dumps(resp, indent=2) + "\n")
    sys.stdout.write(resp["text"])
    return 0


def cmd_plots(args, cfg: dict) -> int:
    out = _out_dir(args)
    client = _client(args.server)
    learn = json.loads(Path(args.results).read_text())
    resp = _post(client, "/plots", {"learn": learn})
    for name, text in resp["files"].items():
        (out / name).write_text(text)
        print(f"wrote {out / name}")
    return 0


def cmd_serve(args, cfg: dict) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reachcost",
        description="Learn and evaluate time-varying reaching costs "
                    "for a two-link planar arm.")
    parser.add_argument("--server", default=None,
                        help="URL of a running service "
                             "(default: run in-process)")
    parser.add_argument("--config", default=None,
                        help="JSON file with 'arm', 'solver', 'irl' sections")
    parser.add_argument("--seed", type=int, default=0,
                        help="base random seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic demonstrations")
    p.add_argument("--posture", default="all",
                   choices=("all",) + POSTURE_IDS)
    p.add_argument("--weights", required=True,
                   help="CSV of window weights (window," +
                        ",".join(FEATURE_NAMES) + ")")
    p.add_argument("--horizon", type=int, default=20)
    p.add_argument("--dt", type=float, default=0.03)
    p.add_argument("--noise-std-deg", type=float, default=0.0)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--subjects", type=int, default=1)
    p.add_argument("--target-x", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess",
                       help="convert a marker capture to a joint-space demo")
    p.add_argument("--markers", required=True)
    p.add_argument("--subject", default="unknown")
    p.add_argument("--posture", default="P1", choices=POSTURE_IDS)
    p.add_argument("--target-x", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--cutoff-hz", type=float, default=8.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("features",
                       help="windowed feature sums for a demo file")
    p.add_argument("--demo", required=True)
    p.add_argument("--windows", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("simulate",
                       help="solve one reaching problem from a JSON file")
    p.add_argument("--problem", required=True,
                   help="JSON with q0, target_x, horizon, dt, weights "
                        "(and optionally arm, solver_options)")
    p.add_argument("--warm", default=None,
                   help="demo CSV used as a warm start")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("learn", help="run a weight-learning study")
    p.add_argument("--mode", required=True, choices=("sdpd", "sdpi", "sipi"))
    p.add_argument("--manifest", required=True,
                   help="JSON mapping subject -> posture -> [demo paths]")
    p.add_argument("--demos-per-cell", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("eval",
                       help="score fixed weights against demo files")
    p.add_argument("--weights", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plots",
                       help="emit plot-ready CSVs from learn results")
    p.add_argument("--results", required=True,
                   help="results.json written by the learn command")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plots)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config)
        return args.func(args, cfg)
    except KeyboardInterrupt:
        return 1
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

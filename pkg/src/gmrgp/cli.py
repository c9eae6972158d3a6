"""Command-line entry points: fit, adapt, predict, sample, track, bench.

On failure every subcommand exits nonzero and writes a machine-readable error
JSON to stderr: {"error": <type name>, "message": <text>}.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import bench as bench_mod
from . import gp, lqr, trajectory
from .datasets import generate_synthetic, load_demonstrations, save_demonstrations
from .exceptions import GmrGpError, ParseError
from .gmm import EmConfig, fit_gmm
from .gmr import gmr_predict_batch, predictions_to_csv

log = logging.getLogger("gmrgp")


def _parse_grid(spec: str) -> np.ndarray:
    try:
        start, stop, step = (float(v) for v in spec.split(":"))
    except ValueError:
        raise ParseError(f"grid must be start:stop:step, got {spec!r}") from None
    if step <= 0:
        raise ParseError(f"grid step must be positive, got {step}")
    # include the endpoint when it lands on the grid
    return np.arange(start, stop + 0.5 * step, step)[:, None]


def _load_via_points(path) -> list[trajectory.ViaPoint]:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return [
        trajectory.ViaPoint(
            np.asarray(vp["input"], float),
            np.asarray(vp["output"], float),
            vp.get("noise"),
        )
        for vp in doc
    ]


def _cmd_fit(args) -> None:
    if args.synthetic:
        demos = generate_synthetic(args.synthetic, {}, seed=args.seed)
        if args.save_demos:
            save_demonstrations(demos, args.save_demos)
    else:
        demos = load_demonstrations(args.demos, resample_to=args.resample)
    gmm = fit_gmm(demos, args.components, EmConfig(seed=args.seed))
    log.info("EM converged after %d iterations", len(gmm.log_likelihoods))
    if args.lengthscale is not None and args.noise is not None:
        model = trajectory.build(gmm, lengthscales=args.lengthscale, noise=args.noise)
    else:
        input_range = float(np.ptp(demos.inputs)) or 1.0
        config = gp.default_opt_config(
            input_range, gmm.num_components, seed=args.seed, starts=args.starts
        )
        model = trajectory.build(gmm, demos, config)
    with open(args.out, "w") as fh:
        fh.write(trajectory.model_to_json(model))
    log.info("model written to %s", args.out)


def _load_model(path) -> trajectory.GmrGpModel:
    try:
        with open(path) as fh:
            return trajectory.model_from_json(fh.read())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None


def _cmd_adapt(args) -> None:
    model = _load_model(args.model)
    model = trajectory.adapt(model, _load_via_points(args.via))
    with open(args.out, "w") as fh:
        fh.write(trajectory.model_to_json(model))


def _cmd_predict(args) -> None:
    model = _load_model(args.model)
    xs = _parse_grid(args.grid)
    if args.format == "gmr":
        text = predictions_to_csv(xs, gmr_predict_batch(model.gmm, xs))
    else:
        text = trajectory.trajectory_to_csv(xs, trajectory.predict_trajectory(model, xs))
    with open(args.out, "w") as fh:
        fh.write(text)


def _cmd_sample(args) -> None:
    model = _load_model(args.model)
    xs = _parse_grid(args.grid)
    draws = trajectory.sample_trajectories(model, xs, args.samples, args.seed)
    with open(args.out, "w") as fh:
        d = draws.shape[2]
        fh.write(
            ",".join(["sample", "x0"] + [f"y{i}" for i in range(d)]) + "\n"
        )
        for s in range(draws.shape[0]):
            for i in range(draws.shape[1]):
                row = [str(s), repr(float(xs[i, 0]))] + [repr(float(v)) for v in draws[s, i]]
                fh.write(",".join(row) + "\n")


def _cmd_track(args) -> None:
    try:
        with open(args.scenario) as fh:
            scenario = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{args.scenario}: {exc}") from None
    model = _load_model(scenario["model"])
    if scenario.get("via_points"):
        model = trajectory.adapt(
            model,
            [
                trajectory.ViaPoint(
                    np.asarray(vp["input"], float),
                    np.asarray(vp["output"], float),
                    vp.get("noise"),
                )
                for vp in scenario["via_points"]
            ],
        )
    xs = _parse_grid(scenario["grid"])
    preds = trajectory.predict_trajectory(model, xs)
    ref = lqr.ReferenceTrajectory(
        times=xs[:, 0],
        means=np.array([p.mean for p in preds]),
        covariances=np.array([p.covariance for p in preds]),
    )
    config = lqr.TrackerConfig(**scenario.get("tracker", {}))
    costs = lqr.gains_from_covariance(ref, config)
    solution = lqr.solve_lqr(ref, costs, config)
    obstacles = [
        (np.asarray(o["center"], float), float(o["radius"]))
        for o in scenario.get("obstacles", [])
    ]
    via_scores = [
        (float(vp["input"][0]), np.asarray(vp["output"], float))
        for vp in scenario.get("via_points", [])
    ]
    report = lqr.simulate(
        ref,
        solution,
        config,
        disturbance_std=float(scenario.get("disturbance_std", 0.0)),
        seed=int(scenario.get("seed", 0)),
        via_points=via_scores,
        obstacles=obstacles,
        state_costs=costs,
    )
    d = ref.output_dim
    with open(args.out + ".csv", "w") as fh:
        header = (
            ["t"]
            + [f"pos{i}" for i in range(d)]
            + [f"vel{i}" for i in range(d)]
            + ["error", "trace_q"]
        )
        fh.write(",".join(header) + "\n")
        for t in range(ref.horizon):
            row = (
                [repr(float(ref.times[t]))]
                + [repr(float(v)) for v in report.states[t]]
                + [repr(float(report.position_errors[t])), repr(float(np.trace(costs[t])))]
            )
            fh.write(",".join(row) + "\n")
    summary = {
        "rms_error": report.rms_error,
        "cost": report.cost,
        "predicted_cost": report.predicted_cost,
        "via_misses": list(report.via_misses),
        "obstacle_clearances": list(report.obstacle_clearances),
    }
    if "goal" in scenario:
        goal = np.asarray(scenario["goal"]["center"], float)
        final = report.positions[-1]
        summary["goal_distance"] = float(np.linalg.norm(final - goal))
        summary["goal_reached"] = summary["goal_distance"] <= float(
            scenario["goal"].get("radius", 0.05)
        )
    with open(args.out + ".json", "w") as fh:
        json.dump(summary, fh, indent=2)


def _cmd_bench(args) -> None:
    if args.config:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{args.config}: {exc}") from None
        doc = {k: tuple(v) if isinstance(v, list) else v for k, v in doc.items()}
        config = bench_mod.BenchConfig(**doc)
    else:
        config = bench_mod.BenchConfig()
    reports = bench_mod.run_bench(config)
    with open(args.out, "w") as fh:
        fh.write(bench_mod.reports_to_csv(reports))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gmrgp",
        description="Trajectory learning with GMR-based Gaussian processes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a GMM and build the trajectory model")
    p.add_argument("--demos", help="demonstration CSV")
    p.add_argument("--synthetic", choices=["letter", "minjerk", "approach-insert"])
    p.add_argument("--save-demos", help="also write the synthetic demos to this CSV")
    p.add_argument("--resample", type=int, default=None)
    p.add_argument("--components", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int, default=8)
    p.add_argument("--lengthscale", type=float, default=None, help="skip fitting, fix lengthscale")
    p.add_argument("--noise", type=float, default=None, help="skip fitting, fix noise variance")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_fit)

    p = sub.add_parser("adapt", help="condition a model on via-points")
    p.add_argument("--model", required=True)
    p.add_argument("--via", required=True, help="via-point JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_adapt)

    p = sub.add_parser("predict", help="export the predicted trajectory as CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--grid", required=True, help="start:stop:step over the input")
    p.add_argument("--format", choices=["trajectory", "gmr"], default="trajectory")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_predict)

    p = sub.add_parser("sample", help="draw trajectories from the model")
    p.add_argument("--model", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_sample)

    p = sub.add_parser("track", help="LQR-track a predicted trajectory in simulation")
    p.add_argument("--scenario", required=True, help="scenario JSON")
    p.add_argument("--out", required=True, help="output prefix (.csv and .json)")
    p.set_defaults(fn=_cmd_track)

    p = sub.add_parser("bench", help="query-latency benchmark")
    p.add_argument("--config", default=None, help="benchmark config JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_bench)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("GMRGP_LOG", "WARNING").upper())
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.fn(args)
    except (GmrGpError, OSError, ValueError) as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line surface: simulate, fit, apply, evaluate, benchmark."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from effectune.benchmark import BenchmarkConfig, run_benchmark
from effectune.data import load_dataset, load_truth, save_dataset, save_truth
from effectune.ec import fit_ec
from effectune.ee import fit_causal_tree, fit_ee
from effectune.eo import fit_eo
from effectune.calibration import fit_calibration
from effectune.metrics import PolicyConfig, auuc, binned_mse, mse_true, policy_value, topq_actions, uplift_curve_points
from effectune.model import CalibrationStage, FineTuner, load_model, save_model
from effectune.sim import SimulationParams, draw_dgp, sample_population
from effectune.tree import FitConfig


def _add_data_args(p):
    p.add_argument("--data", required=True, help="experiment CSV")
    p.add_argument("--treatment-col", default="treatment")
    p.add_argument("--outcome-col", default="outcome")
    p.add_argument("--score-col", default="base_score")
    p.add_argument("--propensity", type=float, default=0.5, help="designed P[T=1]")


def _load(args):
    return load_dataset(
        args.data,
        treatment_col=args.treatment_col,
        outcome_col=args.outcome_col,
        score_col=args.score_col,
        propensity_treated=args.propensity,
    )


def _read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def cmd_simulate(args):
    params = SimulationParams.from_dict(_read_json(args.params)) if args.params else SimulationParams()
    if args.seed is not None:
        params = SimulationParams.from_dict({**params.to_dict(), "seed": args.seed})
    rng = np.random.default_rng(np.random.SeedSequence(params.seed))
    dgp = draw_dgp(params, rng)
    dataset, truth = sample_population(dgp, args.n, rng)
    save_dataset(dataset, args.out)
    truth_out = args.truth_out or str(Path(args.out).with_suffix("")) + ".truth.csv"
    save_truth(truth, truth_out)
    print(json.dumps({"rows": dataset.n, "features": dataset.n_features, "out": args.out, "truth_out": truth_out}))


def cmd_fit(args):
    d = _load(args)
    cfg = FitConfig.from_dict(_read_json(args.config)) if args.config else FitConfig()
    method = args.method
    if method == "calibrate":
        tuner = FineTuner(
            kind="calibrated",
            stages=[CalibrationStage(fit_calibration(d.base_score, d))],
            feature_names=d.feature_names,
            metadata={"fit_config": cfg.to_dict(), "seed": cfg.seed},
        )
    elif method == "ee":
        tuner = fit_ee(d, cfg)
    elif method == "ec":
        tuner = fit_ec(d, cfg, cost=args.cost)
    elif method == "eo":
        tuner = fit_eo(d, cfg)
    elif method == "ct":
        tuner = fit_causal_tree(d, include_base_as_feature=False, cfg=cfg)
    else:  # ct-bs
        tuner = fit_causal_tree(d, include_base_as_feature=True, cfg=cfg)
    save_model(tuner, args.out)
    print(json.dumps({"kind": tuner.kind, "stages": len(tuner.stages), "out": args.out}))


def cmd_apply(args):
    d = _load(args)
    tuner = load_model(args.model)
    scores = tuner.apply(d)
    pd.DataFrame({"score": scores}).to_csv(args.out, index=False, float_format="%.17g")
    print(json.dumps({"rows": int(scores.shape[0]), "out": args.out}))


def cmd_evaluate(args):
    d = _load(args)
    frame = pd.read_csv(args.scores)
    col = "score" if "score" in frame.columns else frame.columns[0]
    scores = frame[col].to_numpy(dtype=np.float64)
    if scores.shape[0] != d.n:
        raise SystemExit(f"scores has {scores.shape[0]} rows, dataset has {d.n}")
    policy = PolicyConfig(cost=args.cost, threshold=args.threshold, top_fraction=args.top_fraction)
    wanted = [m.strip() for m in args.metrics.split(",") if m.strip()]
    result = {}
    truth = load_truth(args.truth) if args.truth else None
    for metric in wanted:
        if metric == "mse":
            if truth is not None:
                result["mse"] = mse_true(scores, truth)
            else:
                result["binned_mse"] = binned_mse(scores, d.base_score, d, n_bins=args.bins)
        elif metric == "auuc":
            result["auuc"] = auuc(scores, d, m=args.m)
        elif metric == "policy":
            actions = topq_actions(scores, policy.top_fraction) if policy.top_fraction is not None else (
                scores > policy.threshold
            ).astype(np.float64)
            result["policy_value"] = policy_value(actions, d, policy)
        else:
            raise SystemExit(f"unknown metric {metric!r}; expected mse, auuc, policy")
    if args.curve_out:
        points = uplift_curve_points(scores, d, m=args.m)
        pd.DataFrame(points, columns=["q", "incremental_effect"]).to_csv(args.curve_out, index=False)
    print(json.dumps(result))


def cmd_benchmark(args):
    cfg = BenchmarkConfig.from_dict(_read_json(args.config))
    report = run_benchmark(cfg)
    report.write_csv(args.out)
    summary_out = args.summary_out or str(Path(args.out).with_suffix("")) + ".summary.csv"
    report.write_summary_csv(summary_out)
    for method, size, rep, reason in report.skipped:
        print(f"skipped {method} at size {size} rep {rep}: {reason}", file=sys.stderr)
    print(json.dumps({"rows": len(report.rows), "skipped": len(report.skipped), "out": args.out, "summary_out": summary_out}))


def build_parser():
    parser = argparse.ArgumentParser(prog="effectune", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a synthetic experiment with ground truth")
    p.add_argument("--params", help="SimulationParams JSON file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=None, help="override the params seed")
    p.add_argument("--out", required=True, help="dataset CSV path")
    p.add_argument("--truth-out", default=None, help="sidecar truth CSV (default: <out>.truth.csv)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a scoring model on an experiment CSV")
    p.add_argument("--method", required=True, choices=["calibrate", "ee", "ec", "eo", "ct", "ct-bs"])
    _add_data_args(p)
    p.add_argument("--config", help="FitConfig JSON file")
    p.add_argument("--cost", type=float, default=0.0, help="per-treatment cost (ec only)")
    p.add_argument("--out", required=True, help="model JSON path")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("apply", help="score a dataset with a saved model")
    p.add_argument("--model", required=True)
    _add_data_args(p)
    p.add_argument("--out", required=True, help="scores CSV path")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("evaluate", help="evaluate a scores file against a dataset")
    p.add_argument("--scores", required=True, help="CSV with a 'score' column")
    _add_data_args(p)
    p.add_argument("--truth", help="sidecar truth CSV; enables exact mse")
    p.add_argument("--metrics", default="mse,auuc,policy")
    p.add_argument("--bins", type=int, default=10, help="bins for the model-free mse")
    p.add_argument("--m", type=int, default=10, help="levels for auuc")
    p.add_argument("--cost", type=float, default=0.0)
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--top-fraction", type=float, default=None)
    p.add_argument("--curve-out", default=None, help="also write the uplift-curve points as CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="run a simulation benchmark sweep")
    p.add_argument("--config", required=True, help="BenchmarkConfig JSON file")
    p.add_argument("--out", required=True, help="report CSV path")
    p.add_argument("--summary-out", default=None)
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ValueError as exc:
        raise SystemExit(str(exc))


if __name__ == "__main__":
    main()

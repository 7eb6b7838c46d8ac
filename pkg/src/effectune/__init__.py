"""Effect calibration and causal fine-tuning of non-causal scores.

The library takes a vector of "base scores" (output of any predictive model
that is merely correlated with treatment effects) together with data from a
randomized experiment, and produces causal scores tuned for one of three
tasks: effect estimation (squared error against the CATE), effect ordering
(area under the uplift curve), or effect classification (expected outcome of
the induced treatment policy).
"""

from effectune.data import ExperimentDataset, SimulatedTruth, load_dataset, save_dataset, transformed_outcome
from effectune.metrics import (
    LevelPartition,
    PolicyConfig,
    auuc,
    binned_mse,
    build_levels,
    ewm_true,
    mse_true,
    policy_value,
    topq_actions,
)
from effectune.calibration import CalibrationParams, apply_calibration, fit_calibration
from effectune.tree import FitConfig, SplitCandidate, TreeNode, enumerate_splits, grow_tree
from effectune.model import FineTuner, apply_finetuner, load_model, save_model
from effectune.ee import ee_leaf_correction, ee_split_gain, fit_causal_tree, fit_ee
from effectune.ec import ec_split_gain, find_optimal_threshold, fit_ec
from effectune.eo import EOStump, find_optimal_shift, fit_eo, fit_eo_stump
from effectune.sim import DgpInstance, SimulationParams, draw_dgp, sample_population
from effectune.benchmark import BenchmarkConfig, MetricReport, fit_method, run_benchmark

__version__ = "0.1.0"

__all__ = [
    "ExperimentDataset",
    "SimulatedTruth",
    "load_dataset",
    "save_dataset",
    "transformed_outcome",
    "LevelPartition",
    "PolicyConfig",
    "auuc",
    "binned_mse",
    "build_levels",
    "ewm_true",
    "mse_true",
    "policy_value",
    "topq_actions",
    "CalibrationParams",
    "apply_calibration",
    "fit_calibration",
    "FitConfig",
    "SplitCandidate",
    "TreeNode",
    "enumerate_splits",
    "grow_tree",
    "FineTuner",
    "apply_finetuner",
    "load_model",
    "save_model",
    "ee_leaf_correction",
    "ee_split_gain",
    "fit_causal_tree",
    "fit_ee",
    "ec_split_gain",
    "find_optimal_threshold",
    "fit_ec",
    "EOStump",
    "find_optimal_shift",
    "fit_eo",
    "fit_eo_stump",
    "DgpInstance",
    "SimulationParams",
    "draw_dgp",
    "sample_population",
    "BenchmarkConfig",
    "MetricReport",
    "fit_method",
    "run_benchmark",
]

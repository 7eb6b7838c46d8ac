"""Effect calibration: one scale and one shift for all scores.

The IPW-transformed outcome has the CATE as its conditional expectation, so
an ordinary least-squares fit of the transformed outcome on the scores gives
the affine map that best aligns score magnitudes with effect magnitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from effectune.data import ExperimentDataset, transformed_outcome


@dataclass(frozen=True)
class CalibrationParams:
    scale: float
    shift: float

    def __post_init__(self):
        if not (math.isfinite(self.scale) and math.isfinite(self.shift)):
            raise ValueError(f"calibration parameters must be finite, got {(self.scale, self.shift)}")


def fit_calibration(scores: np.ndarray, d: ExperimentDataset) -> CalibrationParams:
    """Least-squares fit of the transformed outcome on the scores.

    Constant scores collapse to scale 0 with the Horvitz-Thompson effect
    estimate as the shift. A negative fitted scale is legitimate: scores may
    anti-correlate with effects.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape[0] != d.n:
        raise ValueError("scores and dataset must be aligned")
    if d.n < 2:
        raise ValueError("calibration needs at least 2 rows")
    z = transformed_outcome(d)
    s_mean = scores.mean()
    z_mean = z.mean()
    ds = scores - s_mean
    var = float(np.mean(ds * ds))
    if var == 0.0:
        return CalibrationParams(scale=0.0, shift=float(z_mean))
    scale = float(np.mean(ds * (z - z_mean)) / var)
    return CalibrationParams(scale=scale, shift=float(z_mean - scale * s_mean))


def apply_calibration(p: CalibrationParams, scores: np.ndarray) -> np.ndarray:
    return p.scale * np.asarray(scores, dtype=np.float64) + p.shift

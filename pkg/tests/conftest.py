import numpy as np
import pytest

from effectune.data import ExperimentDataset


def make_dataset(treatment, outcome, base_score=None, features=None, p1=0.5, feature_names=()):
    """Small-fixture helper: fills in zero base scores / features when omitted."""
    treatment = np.asarray(treatment, dtype=np.float64)
    n = treatment.shape[0]
    if base_score is None:
        base_score = np.zeros(n)
    if features is None:
        features = np.zeros((n, 1))
    return ExperimentDataset(
        features=features,
        treatment=treatment,
        outcome=np.asarray(outcome, dtype=np.float64),
        base_score=np.asarray(base_score, dtype=np.float64),
        propensity_treated=p1,
        feature_names=feature_names,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)

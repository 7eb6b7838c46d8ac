"""Synthetic experiment generator with known ground truth.

Features are independent Bernoulli(0.5); baseline outcomes and treatment
effects are linear in the features with coefficient pairs drawn from a
correlated bivariate normal, plus correlated idiosyncratic noise. The base
score is the exact conditional expectation of the baseline outcome, i.e. a
best-case non-causal scoring model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from effectune.data import ExperimentDataset, SimulatedTruth


@dataclass(frozen=True)
class SimulationParams:
    """Generator settings. ``w`` features drive outcomes; only the first
    ``w_e`` are visible in the experimental dataset (default: all of them).
    ``rho`` correlates both the coefficient pairs (alpha_j, beta_j) and the
    noise pair."""

    w: int = 50
    w_e: int | None = None
    rho: float = 0.5
    sigma2_alpha: float = 1.0
    sigma2_beta: float = 1.0
    sigma2_y: float = 12.5
    sigma2_c: float = 12.5
    seed: int = 0

    def __post_init__(self):
        if self.w < 1:
            raise ValueError("w must be >= 1")
        if self.w_e is None:
            object.__setattr__(self, "w_e", self.w)
        if not (0 <= self.w_e <= self.w):
            raise ValueError(f"w_e must lie in [0, w], got w_e={self.w_e}, w={self.w}")
        if abs(self.rho) > 1.0:
            raise ValueError(f"|rho| must be <= 1, got {self.rho}")
        for name in ("sigma2_alpha", "sigma2_beta", "sigma2_y", "sigma2_c"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "SimulationParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown SimulationParams fields: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class DgpInstance:
    """One sampled population: baseline and effect coefficients per feature.
    Intercepts are zero."""

    alpha: np.ndarray
    beta_coef: np.ndarray
    params: SimulationParams

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=np.float64)
        beta = np.asarray(self.beta_coef, dtype=np.float64)
        if alpha.shape != (self.params.w,) or beta.shape != (self.params.w,):
            raise ValueError("coefficient vectors must have length w")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta_coef", beta)


def _correlated_pair(rng: np.random.Generator, size, rho, var_a, var_b):
    """(a, b) ~ iid bivariate normal, zero mean, given variances and correlation."""
    z1 = rng.standard_normal(size)
    z2 = rng.standard_normal(size)
    a = math.sqrt(var_a) * z1
    b = math.sqrt(var_b) * (rho * z1 + math.sqrt(1.0 - rho * rho) * z2)
    return a, b


def draw_dgp(p: SimulationParams, rng: np.random.Generator) -> DgpInstance:
    alpha, beta = _correlated_pair(rng, p.w, p.rho, p.sigma2_alpha, p.sigma2_beta)
    return DgpInstance(alpha=alpha, beta_coef=beta, params=p)


def sample_population(g: DgpInstance, n: int, rng: np.random.Generator) -> tuple[ExperimentDataset, SimulatedTruth]:
    """Draw n individuals: features, potential outcomes, a fair-coin treatment,
    the observed outcome, and the noiseless base score and CATE."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p = g.params
    X = rng.integers(0, 2, size=(n, p.w)).astype(np.float64)
    eps_y, eps_c = _correlated_pair(rng, n, p.rho, p.sigma2_y, p.sigma2_c)
    base = X @ g.alpha
    cate = X @ g.beta_coef
    y0 = base + eps_y
    y1 = y0 + cate + eps_c
    t = rng.integers(0, 2, size=n).astype(np.float64)
    y = t * y1 + (1.0 - t) * y0
    dataset = ExperimentDataset(
        features=X[:, : p.w_e],
        treatment=t,
        outcome=y,
        base_score=base,
        propensity_treated=0.5,
        feature_names=tuple(f"x{j}" for j in range(p.w_e)),
    )
    truth = SimulatedTruth(y0=y0, y1=y1, cate=cate)
    return dataset, truth

"""Per-token uncertainty scores and the transmit/retain routing rule."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .model_source import TokenDistribution, argmax_token


class ScoreKind(enum.Enum):
    ENTROPY = "entropy"
    MC_DISAGREEMENT = "disagreement"


@dataclass(frozen=True)
class SamplerConfig:
    """Monte-Carlo disagreement sampler: num_samples draws at temperature > 1."""

    num_samples: int = 10
    temperature: float = 2.0

    def __post_init__(self) -> None:
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if self.temperature <= 1.0:
            raise ValueError("temperature must be > 1")


@dataclass(frozen=True)
class UncertaintyScore:
    value: float
    kind: ScoreKind


@dataclass(frozen=True)
class RoutingDecision:
    """transmit=True escalates the token; soft_value carries the sigmoid relaxation."""

    transmit: bool
    soft_value: float | None = None


def entropy_score(dist: TokenDistribution) -> UncertaintyScore:
    """Shannon entropy of the distribution in nats; 0*ln(0) counts as 0."""
    p = dist.probs
    nz = p[p > 0.0]
    value = float(-(nz * np.log(nz)).sum())
    return UncertaintyScore(max(value, 0.0), ScoreKind.ENTROPY)


def soften(dist: TokenDistribution, temperature: float) -> np.ndarray:
    """Temperature-flattened probabilities: p_i^(1/T), renormalized."""
    q = dist.probs ** (1.0 / temperature)
    return q / q.sum()


def mc_disagreement(
    dist: TokenDistribution, cfg: SamplerConfig, rng: np.random.Generator
) -> UncertaintyScore:
    """Fraction of temperature-softened samples that disagree with the argmax.

    Draws cfg.num_samples tokens from the softened distribution and counts
    how many differ from the unsoftened argmax. The score is a multiple of
    1/num_samples in [0, 1].
    """
    predicted = argmax_token(dist)
    softened = soften(dist, cfg.temperature)
    draws = rng.choice(dist.size, size=cfg.num_samples, p=softened)
    disagreements = int(np.count_nonzero(draws != predicted))
    return UncertaintyScore(disagreements / cfg.num_samples, ScoreKind.MC_DISAGREEMENT)


def hard_route(score: UncertaintyScore, threshold: float) -> RoutingDecision:
    """Binary gate: retain locally when score.value <= threshold, else transmit."""
    return RoutingDecision(transmit=score.value > threshold)


def sigmoid(z: float) -> float:
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def soft_route(score: UncertaintyScore, threshold: float, gamma: float) -> float:
    """Differentiable relaxation of the gate: sigmoid(gamma * (value - threshold))."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return sigmoid(gamma * (score.value - threshold))

"""Cloud-side accept/reject decision over a submitted token.

The large model plays verifier: the submitted token is kept with
probability min(llm[t]/slm[t], 1) and otherwise replaced by a draw from the
normalized surplus max(llm - slm, 0). Under that rule a token sampled from
the small model and corrected this way is marginally distributed exactly as
the large model would have sampled it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model_source import TokenDistribution
from .thresholds import rejection_probability


class Verdict(enum.Enum):
    ACCEPTED = "accepted"
    RESAMPLED = "resampled"


@dataclass(frozen=True)
class AdjudicationResult:
    final_token: int
    verdict: Verdict
    rejection_prob: float


def llm_adjudicate(
    slm: TokenDistribution,
    llm: TokenDistribution,
    token: int,
    rng: np.random.Generator,
) -> AdjudicationResult:
    """Accept the submitted token or resample from the large model's surplus.

    Acceptance happens with probability 1 - rejection_probability. On
    rejection the replacement comes from norm(max(llm - slm, 0)); when that
    surplus is identically zero (the models agree everywhere) the
    replacement falls back to a draw from the llm distribution itself.
    """
    beta = rejection_probability(slm, llm, token)
    if beta <= 0.0 or rng.random() >= beta:
        return AdjudicationResult(token, Verdict.ACCEPTED, beta)
    residual = np.maximum(llm.probs - slm.probs, 0.0)
    total = float(residual.sum())
    if total <= 0.0:
        replacement = int(rng.choice(llm.size, p=llm.probs))
    else:
        replacement = int(rng.choice(llm.size, p=residual / total))
    return AdjudicationResult(replacement, Verdict.RESAMPLED, beta)

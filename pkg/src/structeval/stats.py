"""Paired bootstrap significance testing between two systems.

Each trial resamples document indices with replacement and recomputes both
systems' corpus scores on the resample. The one-sided p-value (system better
than baseline) uses add-one smoothing so it is never exactly zero. Trial
sub-seeds derive deterministically from (seed, trial index), so serial and
parallel execution agree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, LengthMismatch

__all__ = ["BootstrapConfig", "paired_bootstrap", "resample_pvalue"]

#: statistic(per_doc_values, resampled_indices) -> corpus score
Statistic = Callable[[Sequence[float], Sequence[int]], float]

#: score(resampled_indices) -> corpus score for one system
IndexScore = Callable[[Sequence[int]], float]


@dataclass(frozen=True, slots=True)
class BootstrapConfig:
    trials: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ConfigError("bootstrap needs at least 1 trial")


def _mean_of(values: Sequence[float], indices: Sequence[int]) -> float:
    return sum(values[i] for i in indices) / len(indices)


def resample_pvalue(
    n_docs: int,
    baseline_score: IndexScore,
    system_score: IndexScore,
    config: BootstrapConfig = BootstrapConfig(),
) -> float:
    """Core bootstrap loop over document index multisets.

    p = (#{trials with baseline >= system} + 1) / (trials + 1).
    """
    if n_docs < 2:
        raise ConfigError("bootstrap needs at least 2 paired documents")
    not_better = 0
    for trial in range(config.trials):
        rng = np.random.default_rng([config.seed, trial])
        indices = rng.integers(0, n_docs, size=n_docs).tolist()
        if baseline_score(indices) >= system_score(indices):
            not_better += 1
    return (not_better + 1) / (config.trials + 1)


def paired_bootstrap(
    per_doc_baseline: Sequence[float],
    per_doc_system: Sequence[float],
    config: BootstrapConfig = BootstrapConfig(),
    statistic: Statistic | None = None,
) -> float:
    """One-sided paired bootstrap p-value that the system beats the baseline.

    ``statistic`` recomputes a corpus score from per-document values and a
    resampled index multiset; it defaults to the subset mean. Metrics that
    pool across documents (XML-BLEU, StrucAUC) should pass a statistic that
    rebuilds the pooled score from the selected indices.
    """
    if len(per_doc_baseline) != len(per_doc_system):
        raise LengthMismatch(
            f"baseline has {len(per_doc_baseline)} documents, "
            f"system has {len(per_doc_system)}"
        )
    stat = statistic if statistic is not None else _mean_of
    return resample_pvalue(
        len(per_doc_baseline),
        lambda idx: stat(per_doc_baseline, idx),
        lambda idx: stat(per_doc_system, idx),
        config,
    )

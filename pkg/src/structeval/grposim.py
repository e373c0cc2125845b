"""Desk-scale GRPO optimizer over a categorical policy.

A categorical distribution over a fixed candidate pool stands in for
token-level generation: the group-relative objective is policy-agnostic,
and a finite policy makes every quantity exact. One step samples K
candidates with replacement, normalizes their rewards into advantages, and
applies one plain gradient-ascent update on

    (1/K) * sum_i A_i * log pi(i)  -  beta * KL(pi || pi_ref)

using the analytic gradients of the categorical log-likelihood and of the
exact categorical KL divergence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .rewards import RewardSpec, group_advantages, score_reward

__all__ = [
    "CandidatePool",
    "CategoricalPolicy",
    "TrainConfig",
    "StepStats",
    "TrainingTrace",
    "objective",
    "objective_gradient",
    "grpo_step",
    "run_training",
]


@dataclass(frozen=True)
class CandidatePool:
    """A fixed set of candidate documents with precomputed scaled rewards."""

    source_id: str
    candidates: tuple[str, ...]
    reference: str
    rewards: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.candidates) < 2:
            raise ConfigError("candidate pool needs at least 2 candidates")
        if len(self.rewards) != len(self.candidates):
            raise ConfigError("one reward per candidate required")
        if not all(np.isfinite(self.rewards)):
            raise ConfigError("pool rewards must be finite")

    @staticmethod
    def from_documents(
        source_id: str, candidates: list[str], reference: str, spec: RewardSpec
    ) -> "CandidatePool":
        rewards = tuple(score_reward(c, reference, spec) for c in candidates)
        return CandidatePool(
            source_id=source_id,
            candidates=tuple(candidates),
            reference=reference,
            rewards=rewards,
        )


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    return shifted - np.log(np.exp(shifted).sum())


def _softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(_log_softmax(logits))


@dataclass(frozen=True)
class CategoricalPolicy:
    """Softmax policy over pool candidates plus its frozen reference copy."""

    logits: np.ndarray
    reference_logits: np.ndarray

    @staticmethod
    def uniform(n: int) -> "CategoricalPolicy":
        zeros = np.zeros(n, dtype=float)
        return CategoricalPolicy(logits=zeros, reference_logits=zeros.copy())

    @staticmethod
    def from_logits(logits) -> "CategoricalPolicy":
        array = np.asarray(logits, dtype=float)
        return CategoricalPolicy(logits=array.copy(), reference_logits=array.copy())

    def probs(self) -> np.ndarray:
        return _softmax(self.logits)

    def entropy(self) -> float:
        log_p = _log_softmax(self.logits)
        return float(-(np.exp(log_p) * log_p).sum())

    def kl_to_reference(self) -> float:
        return categorical_kl(self.logits, self.reference_logits)

    def with_logits(self, logits: np.ndarray) -> "CategoricalPolicy":
        return CategoricalPolicy(logits=logits, reference_logits=self.reference_logits)


def categorical_kl(logits: np.ndarray, ref_logits: np.ndarray) -> float:
    """Exact KL(softmax(logits) || softmax(ref_logits))."""
    log_p = _log_softmax(np.asarray(logits, dtype=float))
    log_q = _log_softmax(np.asarray(ref_logits, dtype=float))
    p = np.exp(log_p)
    return float((p * (log_p - log_q)).sum())


@dataclass(frozen=True)
class TrainConfig:
    k: int = 8
    learning_rate: float = 0.1
    beta: float = 0.01
    steps: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ConfigError("K (samples per step) must be >= 2")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if self.beta < 0:
            raise ConfigError("beta must be >= 0")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")


@dataclass(frozen=True)
class StepStats:
    """Per-step trace record: sampled mean reward, post-update KL and entropy."""

    step: int
    mean_reward: float
    kl: float
    entropy: float


@dataclass(frozen=True)
class TrainingTrace:
    stats: tuple[StepStats, ...]
    final_policy: CategoricalPolicy


def objective(
    logits: np.ndarray,
    ref_logits: np.ndarray,
    sample_indices: np.ndarray,
    advantages: np.ndarray,
    beta: float,
) -> float:
    """Surrogate objective for one fixed batch of sampled indices.

    The sampled indices and their advantages are held constant, which makes
    the surrogate a smooth function of the logits suitable for gradient
    checking.
    """
    log_p = _log_softmax(np.asarray(logits, dtype=float))
    policy_term = float(np.mean(advantages * log_p[sample_indices]))
    return policy_term - beta * categorical_kl(logits, ref_logits)


def objective_gradient(
    logits: np.ndarray,
    ref_logits: np.ndarray,
    sample_indices: np.ndarray,
    advantages: np.ndarray,
    beta: float,
) -> np.ndarray:
    """Analytic gradient of :func:`objective` with respect to the logits.

    d/dz (1/K) sum_i A_i log pi(s_i) = (1/K) (sum_i A_i e_{s_i} - (sum_i A_i) pi)
    d/dz KL(pi || ref)               = pi * (log pi - log ref - KL)
    """
    logits = np.asarray(logits, dtype=float)
    log_p = _log_softmax(logits)
    p = np.exp(log_p)
    k = len(sample_indices)
    grad = np.zeros_like(logits)
    np.add.at(grad, sample_indices, advantages)
    grad = (grad - advantages.sum() * p) / k
    if beta != 0.0:
        log_q = _log_softmax(np.asarray(ref_logits, dtype=float))
        kl = float((p * (log_p - log_q)).sum())
        grad -= beta * p * (log_p - log_q - kl)
    return grad


def grpo_step(
    policy: CategoricalPolicy,
    pool: CandidatePool,
    config: TrainConfig,
    rng: np.random.Generator,
) -> tuple[CategoricalPolicy, StepStats]:
    """One exploration-and-update stage; returns the updated policy."""
    probs = policy.probs()
    indices = rng.choice(len(pool.candidates), size=config.k, replace=True, p=probs)
    rewards = np.asarray([pool.rewards[i] for i in indices], dtype=float)
    advantages = np.asarray(group_advantages(rewards.tolist()), dtype=float)
    grad = objective_gradient(
        policy.logits, policy.reference_logits, indices, advantages, config.beta
    )
    updated = policy.with_logits(policy.logits + config.learning_rate * grad)
    return updated, StepStats(
        step=0,
        mean_reward=float(rewards.mean()),
        kl=updated.kl_to_reference(),
        entropy=updated.entropy(),
    )


def run_training(pool: CandidatePool, config: TrainConfig) -> TrainingTrace:
    """Iterate :func:`grpo_step` with a deterministic seeded generator.

    The same seed reproduces the trace bit for bit.
    """
    rng = np.random.default_rng(config.seed)
    policy = CategoricalPolicy.uniform(len(pool.candidates))
    stats: list[StepStats] = []
    for step in range(config.steps):
        policy, step_stats = grpo_step(policy, pool, config, rng)
        stats.append(
            StepStats(
                step=step,
                mean_reward=step_stats.mean_reward,
                kl=step_stats.kl,
                entropy=step_stats.entropy,
            )
        )
    return TrainingTrace(stats=tuple(stats), final_policy=policy)

"""Shared generators for randomized tests."""

from __future__ import annotations

import numpy as np
import pytest

from structeval.xmltree import DocTree, parse_document


def random_tree_text(
    rng: np.random.Generator,
    max_nodes: int = 6,
    tags: tuple[str, ...] = ("a", "b", "c"),
    min_nodes: int = 1,
    with_text: bool = False,
) -> str:
    """Serialize a random small fragment (random recursive tree shape)."""
    n = int(rng.integers(min_nodes, max_nodes + 1))
    parents = [int(rng.integers(0, i + 1)) for i in range(n)]  # 0 = top level
    children: list[list[int]] = [[] for _ in range(n + 1)]
    for i, parent in enumerate(parents, start=1):
        children[parent].append(i)
    labels = [""] + [str(rng.choice(tags)) for _ in range(n)]
    texts = [""] * (n + 1)
    if with_text:
        for i in range(1, n + 1):
            if rng.random() < 0.6:
                texts[i] = f"w{int(rng.integers(0, 50))} t{int(rng.integers(0, 50))}"

    def emit(i: int) -> str:
        inner = texts[i] + "".join(emit(c) for c in children[i])
        if i == 0:
            return inner
        return f"<{labels[i]}>{inner}</{labels[i]}>"

    return emit(0)


def parse_ok(text: str) -> DocTree:
    outcome = parse_document(text)
    assert outcome.is_valid, outcome.reason
    return outcome.tree


def random_grpo_fixture(rng: np.random.Generator):
    """Random (pool, policy) surrogate-objective fixture for gradient checks.

    Rewards are drawn per candidate, as in a real pool, so repeated samples
    of one candidate share a reward.
    """
    n = int(rng.integers(2, 8))
    logits = rng.normal(size=n)
    ref_logits = rng.normal(size=n)
    k = int(rng.integers(2, 10))
    indices = rng.integers(0, n, size=k)
    candidate_rewards = rng.normal(size=n) * 5.0
    from structeval.rewards import group_advantages

    advantages = np.asarray(group_advantages(candidate_rewards[indices].tolist()))
    beta = float(rng.choice([0.0, 0.01, 0.5, 2.0]))
    return logits, ref_logits, indices, advantages, beta


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)

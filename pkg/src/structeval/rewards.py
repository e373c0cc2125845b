"""Reward scaling, combination, and group advantage normalization.

Each reward component is computed on its native scale and then mapped
linearly so its magnitude lies in [0, 10]: similarity scores in [0, 1] and
binary indicators are multiplied by 10, metrics on the 0-100 scale by 0.1.
The invalid-XML penalty of -0.1 on TreeSim therefore scales to -1. A
multi-component reward is the sum of its scaled components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .docmetrics import (
    content_bleu,
    node_chrf,
    optimal_node_chrf,
    xml_bleu,
    xml_match,
)
from .errors import ConfigError, GroupTooSmall, InvalidReference
from .nodealign import optimal_alignment
from .textmetrics import BleuConfig, ChrfConfig
from .treedist import INVALID_XML_PENALTY, tree_similarity
from .xmltree import parse_document

__all__ = [
    "REWARD_COMPONENTS",
    "RewardSpec",
    "CandidateGroup",
    "component_scores",
    "score_reward",
    "group_advantages",
    "build_candidate_group",
]

REWARD_COMPONENTS = (
    "treesim",
    "node_chrf",
    "optimal_node_chrf",
    "content_bleu",
    "xml_validity",
    "xml_match",
    "xml_bleu",
)

# Linear factor taking each component's native scale to magnitude [0, 10].
_SCALE = {
    "treesim": 10.0,
    "node_chrf": 0.1,
    "optimal_node_chrf": 0.1,
    "content_bleu": 0.1,
    "xml_validity": 10.0,
    "xml_match": 10.0,
    "xml_bleu": 0.1,
}

#: Group standard deviations below this are treated as zero variance.
DEGENERATE_SIGMA = 1e-12


@dataclass(frozen=True, slots=True)
class RewardSpec:
    """Which reward components to compute; combined by summation."""

    components: tuple[str, ...] = ("treesim",)
    chrf_config: ChrfConfig = field(default_factory=ChrfConfig)
    bleu_config: BleuConfig = field(default_factory=BleuConfig)
    compare_attributes: bool = True

    def __post_init__(self) -> None:
        if not self.components:
            raise ConfigError("reward spec needs at least one component")
        if len(set(self.components)) != len(self.components):
            raise ConfigError("reward components must be unique")
        unknown = [c for c in self.components if c not in REWARD_COMPONENTS]
        if unknown:
            raise ConfigError(
                f"unknown reward component(s) {', '.join(sorted(unknown))}; "
                f"valid components are: {', '.join(REWARD_COMPONENTS)}"
            )

    @staticmethod
    def parse(names: str) -> "RewardSpec":
        """Build a spec from a comma-separated component list."""
        return RewardSpec(components=tuple(n.strip() for n in names.split(",") if n.strip()))


@dataclass(frozen=True, slots=True)
class CandidateGroup:
    """K sampled outputs for one source with rewards and advantages."""

    source_id: str
    raw_rewards: tuple[float, ...]
    scaled_rewards: tuple[float, ...]
    advantages: tuple[float, ...]


def component_scores(hyp_text: str, ref_text: str, spec: RewardSpec) -> dict[str, float]:
    """Native-scale value of each component of ``spec`` for one candidate.

    Raises :class:`InvalidReference` when the reference does not parse; an
    unparseable hypothesis is scored with the TreeSim penalty and zeros.
    """
    ref = parse_document(ref_text)
    if not ref.is_valid:
        raise InvalidReference(ref.reason or "reference does not parse")
    hyp = parse_document(hyp_text)
    valid = hyp.is_valid
    scores: dict[str, float] = {}
    alignment = None
    for name in spec.components:
        if name == "treesim":
            value = tree_similarity(hyp.tree, ref.tree) if valid else INVALID_XML_PENALTY
        elif name == "node_chrf":
            value = node_chrf(hyp.tree, ref.tree, spec.chrf_config) if valid else 0.0
        elif name == "optimal_node_chrf":
            if valid:
                if alignment is None:
                    alignment = optimal_alignment(hyp.tree, ref.tree, spec.chrf_config)
                value = optimal_node_chrf(alignment, spec.chrf_config)
            else:
                value = 0.0
        elif name == "content_bleu":
            value = content_bleu([(hyp_text, ref_text)], spec.bleu_config)
        elif name == "xml_validity":
            value = float(valid)
        elif name == "xml_match":
            value = float(xml_match(hyp, ref.tree, spec.compare_attributes))
        elif name == "xml_bleu":
            value = xml_bleu(
                [(hyp_text, ref_text)], spec.bleu_config, spec.compare_attributes
            )
        else:  # unreachable, spec validates names
            raise ConfigError(f"unknown reward component: {name!r}")
        scores[name] = value
    return scores


def scale_component(name: str, value: float) -> float:
    """Map a component's native value to the [0, 10] reward scale."""
    return value * _SCALE[name]


def score_reward(hyp_text: str, ref_text: str, spec: RewardSpec) -> float:
    """Combined scaled reward: the sum of scaled component scores."""
    native = component_scores(hyp_text, ref_text, spec)
    return sum(scale_component(name, value) for name, value in native.items())


def group_advantages(raw_rewards) -> list[float]:
    """Standardize rewards within a group: (r - mean) / population stdev.

    Zero-variance groups carry no learning signal and get all-zero
    advantages instead of a division fault.
    """
    rewards = [float(r) for r in raw_rewards]
    if len(rewards) < 2:
        raise GroupTooSmall("advantage normalization needs K >= 2 samples")
    mean = sum(rewards) / len(rewards)
    variance = sum((r - mean) ** 2 for r in rewards) / len(rewards)
    sigma = math.sqrt(variance)
    if sigma < DEGENERATE_SIGMA:
        return [0.0] * len(rewards)
    return [(r - mean) / sigma for r in rewards]


def build_candidate_group(
    source_id: str, candidates: list[str], ref_text: str, spec: RewardSpec
) -> CandidateGroup:
    """Score a group of candidate documents and normalize their rewards."""
    raw: list[float] = []
    scaled: list[float] = []
    for candidate in candidates:
        native = component_scores(candidate, ref_text, spec)
        raw.append(sum(native.values()))
        scaled.append(sum(scale_component(n, v) for n, v in native.items()))
    return CandidateGroup(
        source_id=source_id,
        raw_rewards=tuple(raw),
        scaled_rewards=tuple(scaled),
        advantages=tuple(group_advantages(scaled)),
    )

"""Reward scaling/combination and group advantage normalization."""

import math

import pytest

from structeval.errors import ConfigError, GroupTooSmall, InvalidReference
from structeval.rewards import (
    RewardSpec,
    build_candidate_group,
    component_scores,
    group_advantages,
    score_reward,
)

PERFECT = "<a><b>good dog</b></a>"
BROKEN = "<a><b>good dog"


class TestScoreReward:
    def test_perfect_treesim(self):
        spec = RewardSpec(components=("treesim",))
        assert score_reward(PERFECT, PERFECT, spec) == 10.0

    def test_invalid_hypothesis_penalty_scales_to_minus_one(self):
        spec = RewardSpec(components=("treesim",))
        assert score_reward(BROKEN, PERFECT, spec) == pytest.approx(-1.0)

    def test_sum_of_two_maxima(self):
        spec = RewardSpec(components=("treesim", "node_chrf"))
        assert score_reward(PERFECT, PERFECT, spec) == pytest.approx(20.0)

    def test_invalid_reference_raises(self):
        spec = RewardSpec(components=("treesim",))
        with pytest.raises(InvalidReference):
            score_reward(PERFECT, BROKEN, spec)

    def test_component_native_values(self):
        spec = RewardSpec(components=("xml_validity", "xml_match", "node_chrf"))
        native = component_scores("<a><b>dog</b></a>", "<a><b>cat</b></a>", spec)
        assert native["xml_validity"] == 1.0
        assert native["xml_match"] == 1.0
        assert 0.0 <= native["node_chrf"] < 100.0

    def test_invalid_hypothesis_zeroes_other_components(self):
        spec = RewardSpec(
            components=("node_chrf", "optimal_node_chrf", "xml_validity", "xml_match")
        )
        native = component_scores(BROKEN, PERFECT, spec)
        assert native == {
            "node_chrf": 0.0,
            "optimal_node_chrf": 0.0,
            "xml_validity": 0.0,
            "xml_match": 0.0,
        }

    def test_content_bleu_component_survives_invalid_hypothesis(self):
        spec = RewardSpec(components=("content_bleu",))
        assert score_reward(BROKEN, PERFECT, spec) == pytest.approx(10.0)

    def test_all_components_scale_into_band(self):
        spec = RewardSpec(
            components=(
                "treesim", "node_chrf", "optimal_node_chrf", "content_bleu",
                "xml_validity", "xml_match", "xml_bleu",
            )
        )
        total = score_reward(PERFECT, PERFECT, spec)
        assert total == pytest.approx(70.0)  # 7 components, each maxing at 10

    def test_monotone_in_single_component(self):
        spec = RewardSpec(components=("node_chrf",))
        close = score_reward("<b>good dig</b>", "<b>good dog</b>", spec)
        far = score_reward("<b>xxxx</b>", "<b>good dog</b>", spec)
        exact = score_reward("<b>good dog</b>", "<b>good dog</b>", spec)
        assert far < close < exact == 10.0

    def test_unknown_component_rejected(self):
        with pytest.raises(ConfigError):
            RewardSpec(components=("comet",))
        with pytest.raises(ConfigError):
            RewardSpec(components=())
        with pytest.raises(ConfigError):
            RewardSpec(components=("treesim", "treesim"))

    def test_parse_helper(self):
        spec = RewardSpec.parse("treesim, node_chrf")
        assert spec.components == ("treesim", "node_chrf")


class TestGroupAdvantages:
    def test_zero_variance_guard(self):
        assert group_advantages([5, 5, 5, 5]) == [0.0, 0.0, 0.0, 0.0]

    def test_two_point_group(self):
        assert group_advantages([0, 10]) == [-1.0, 1.0]

    def test_matches_independent_mean_sigma(self, rng):
        for _ in range(50):
            rewards = rng.normal(size=8).tolist()
            got = group_advantages(rewards)
            mean = sum(rewards) / 8
            sigma = math.sqrt(sum((r - mean) ** 2 for r in rewards) / 8)
            want = [(r - mean) / sigma for r in rewards]
            assert got == pytest.approx(want, abs=1e-12)

    def test_too_small_group(self):
        with pytest.raises(GroupTooSmall):
            group_advantages([1.0])
        with pytest.raises(GroupTooSmall):
            group_advantages([])

    def test_sum_zero_and_unit_population_std(self, rng):
        for _ in range(200):
            k = int(rng.integers(2, 12))
            rewards = (rng.normal(size=k) * rng.uniform(0.5, 20)).tolist()
            advantages = group_advantages(rewards)
            assert sum(advantages) == pytest.approx(0.0, abs=1e-9)
            var = sum(a * a for a in advantages) / k
            assert math.sqrt(var) == pytest.approx(1.0, abs=1e-9)

    def test_affine_invariance(self, rng):
        for _ in range(100):
            rewards = rng.normal(size=6).tolist()
            scale = float(rng.uniform(0.1, 50))
            shift = float(rng.uniform(-100, 100))
            base = group_advantages(rewards)
            transformed = group_advantages([scale * r + shift for r in rewards])
            assert transformed == pytest.approx(base, abs=1e-9)

    def test_constant_shift_preserves_ranking(self, rng):
        rewards = [1.0, 4.0, 2.0, 8.0]
        base = group_advantages(rewards)
        shifted = group_advantages([r + 3.5 for r in rewards])
        assert sorted(range(4), key=base.__getitem__) == sorted(
            range(4), key=shifted.__getitem__
        )


class TestCandidateGroup:
    def test_build(self):
        spec = RewardSpec(components=("treesim",))
        group = build_candidate_group("s1", [PERFECT, BROKEN], PERFECT, spec)
        assert group.scaled_rewards == (10.0, -1.0)
        assert group.advantages == (1.0, -1.0)
        assert group.source_id == "s1"

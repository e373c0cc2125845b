"""Acceptance suite: every exit criterion at its stated tolerance.

Each criterion prints one `[criterion NN] name: PASS|FAIL` line (visible
with `pytest -s tests/test_acceptance.py`). Criterion 4a is known-red: the
required constant 63 cannot be produced by trapezoidal integration of the
curve the same criterion prescribes (which integrates to 66); the assertion
is kept at the required value rather than weakened.
"""

import json
import math
import subprocess
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from conftest import parse_ok, random_grpo_fixture, random_tree_text
from oracles import assignment_oracle, bleu_oracle, chrf_oracle, ted_oracle
from structeval.corpusio import FixtureSpec, generate_fixtures
from structeval.docmetrics import (
    _StrucDoc,
    _strucauc_from_docs,
    node_chrf,
    optimal_node_chrf,
    strucauc,
    xml_match,
)
from structeval.grposim import TrainConfig, CandidatePool, objective, objective_gradient, run_training
from structeval.nodealign import hungarian, optimal_alignment
from structeval.rewards import group_advantages, score_reward, RewardSpec
from structeval.stats import BootstrapConfig, paired_bootstrap
from structeval.textmetrics import chrf, corpus_bleu
from structeval.treedist import tree_edit_distance, tree_sim
from structeval.xmltree import parse_document

DATA_DIR = Path(__file__).parent / "data"


@contextmanager
def criterion(number: str, name: str):
    try:
        yield
    except BaseException:
        print(f"[criterion {number}] {name}: FAIL")
        raise
    print(f"[criterion {number}] {name}: PASS")


def test_criterion_01_edit_distance_oracle():
    with criterion("01", "edit-distance matches exhaustive oracle on 500 pairs"):
        rng = np.random.default_rng(101)
        started = time.monotonic()
        for _ in range(500):
            a = parse_ok(random_tree_text(rng, max_nodes=6))
            b = parse_ok(random_tree_text(rng, max_nodes=6))
            assert tree_edit_distance(a, b) == ted_oracle(a, b)
        elapsed = time.monotonic() - started
        assert elapsed < 60.0, f"took {elapsed:.1f}s"


def test_criterion_02_assignment_oracle():
    with criterion("02", "hungarian matches permutation minimum on 500 matrices"):
        rng = np.random.default_rng(202)
        started = time.monotonic()
        for _ in range(500):
            rows = int(rng.integers(1, 7))
            cols = int(rng.integers(1, 7))
            matrix = rng.random((rows, cols))
            total = sum(matrix[i][j] for i, j in hungarian(matrix))
            assert total == pytest.approx(
                assignment_oracle(matrix.tolist()), abs=1e-12
            )
        elapsed = time.monotonic() - started
        assert elapsed < 30.0, f"took {elapsed:.1f}s"


def test_criterion_03_treesim_contract():
    with criterion("03", "TreeSim identity, penalty, and relabel fixture"):
        doc = "<concept><title>T</title><p>body</p></concept>"
        assert tree_sim(doc, doc) == 1.0
        assert tree_sim("<concept><title>T", doc) == -0.1
        assert tree_sim("<a><b/></a>", "<a><c/></a>") == pytest.approx(0.5, abs=1e-12)


def test_criterion_04a_strucauc_hand_case():
    with criterion("04a", "StrucAUC hand case equals 63"):
        doc = _StrucDoc(hyp_invalid=False, unaligned=40.0, optimal=80.0, edits=2.0)
        score, curve = _strucauc_from_docs([doc], 5.0)
        assert [v for _, v in curve] == [40.0] * 4 + [80.0] * 7
        # Required value: 63. The trapezoid of the curve above is
        # 3*0.1*40 + 0.1*(40+80)/2 + 6*0.1*80 = 66, so 63 cannot result
        # from trapezoidal integration of this curve; the assertion is
        # kept as required and documents the discrepancy.
        assert score == pytest.approx(63.0, abs=1e-9)


def test_criterion_04b_strucauc_monotone_in_k():
    with criterion("04b", "StrucAUC non-decreasing in K on 100 fixture corpora"):
        k_grid = (1.0, 2.0, 3.5, 5.0, 7.5, 10.0)
        for seed in range(100):
            spec = FixtureSpec(
                doc_count=4,
                corruptions={
                    "relabel-tag": 0.1,
                    "swap-siblings": 0.3,
                    "perturb-text": 0.2,
                    "drop-node": 0.05,
                    "break-wellformedness": 0.1,
                },
            )
            corpus = [
                (r.hypothesis, r.reference) for r in generate_fixtures(spec, seed)
            ]
            scores = [strucauc(corpus, k)[0] for k in k_grid]
            for lo, hi in zip(scores, scores[1:]):
                assert hi >= lo - 1e-9


def test_criterion_04c_strucauc_all_invalid_is_zero():
    with criterion("04c", "StrucAUC of all-invalid hypotheses is exactly 0"):
        corpus = [("<p>a", "<p>a</p>"), ("<", "<q>b</q>"), ("x & y", "<r/>")]
        score, curve = strucauc(corpus, 5.0)
        assert score == 0.0
        assert all(v == 0.0 for _, v in curve)


def _permuted_fixture(rng):
    """Reference tree with unique texts; hypothesis with one sibling block
    rotated. Returns (hyp, ref, moved)."""
    counter = 0

    def paragraph():
        nonlocal counter
        counter += 1
        return f"<p>alpha{counter:02d} beta{counter:02d}</p>"

    sections = []
    for _ in range(int(rng.integers(2, 4))):
        sections.append([paragraph() for _ in range(int(rng.integers(2, 5)))])
    target = int(rng.integers(0, len(sections)))
    rotated = sections[target][1:] + [sections[target][0]]
    moved = rotated != sections[target]
    ref = "".join(f"<sec>{''.join(s)}</sec>" for s in sections)
    hyp = "".join(
        f"<sec>{''.join(rotated if i == target else s)}</sec>"
        for i, s in enumerate(sections)
    )
    return hyp, ref, moved


def test_criterion_05_optimality_dominance():
    with criterion("05", "optimal Node-chrF dominates positional on 200 fixtures"):
        rng = np.random.default_rng(505)
        strict = 0
        for _ in range(200):
            hyp_text, ref_text, moved = _permuted_fixture(rng)
            hyp, ref = parse_ok(hyp_text), parse_ok(ref_text)
            positional = node_chrf(hyp, ref)
            optimal = optimal_node_chrf(optimal_alignment(hyp, ref))
            assert optimal >= positional - 1e-9
            if moved:
                assert optimal > positional
                strict += 1
        assert strict == 200  # every rotation moved non-identical content


def test_criterion_06_chrf_bleu_oracles():
    with criterion("06", "chrF and BLEU match brute-force counting to 1e-9"):
        rng = np.random.default_rng(606)

        def words():
            alphabet = list("abcdef")
            return " ".join(
                "".join(rng.choice(alphabet) for _ in range(int(rng.integers(1, 6))))
                for _ in range(int(rng.integers(0, 8)))
            )

        for _ in range(100):
            hyp, ref = words(), words()
            assert chrf(hyp, ref) == pytest.approx(chrf_oracle(hyp, ref), abs=1e-9)
        for _ in range(100):
            pairs = [(words(), words()) for _ in range(int(rng.integers(1, 4)))]
            assert corpus_bleu(pairs) == pytest.approx(bleu_oracle(pairs), abs=1e-9)


def test_criterion_07_grpo_gradient_check():
    with criterion("07", "analytic GRPO gradient matches finite differences"):
        rng = np.random.default_rng(707)
        for _ in range(50):
            logits, ref_logits, indices, advantages, beta = random_grpo_fixture(rng)
            analytic = objective_gradient(logits, ref_logits, indices, advantages, beta)
            numeric = np.zeros_like(logits)
            eps = 1e-6
            for j in range(len(logits)):
                bump = np.zeros_like(logits)
                bump[j] = eps
                numeric[j] = (
                    objective(logits + bump, ref_logits, indices, advantages, beta)
                    - objective(logits - bump, ref_logits, indices, advantages, beta)
                ) / (2 * eps)
            scale = max(float(np.linalg.norm(analytic)), 1e-12)
            assert float(np.linalg.norm(numeric - analytic)) / scale < 1e-6


def test_criterion_08_grpo_learning():
    with criterion("08", "GRPO learns the best candidate; large beta pins KL"):
        pool = CandidatePool(
            source_id="s",
            candidates=("<a><b>x</b></a>", "<a><b>x"),
            reference="<a><b>x</b></a>",
            rewards=(10.0, 0.0),
        )
        started = time.monotonic()
        probs = []
        for seed in range(20):
            config = TrainConfig(k=8, learning_rate=0.1, beta=0.0, steps=200, seed=seed)
            trace = run_training(pool, config)
            probs.append(float(trace.final_policy.probs()[0]))
        assert sum(probs) / len(probs) > 0.9
        config = TrainConfig(k=8, learning_rate=0.1, beta=10.0, steps=200, seed=0)
        trace = run_training(pool, config)
        assert trace.stats[-1].kl < 0.05
        elapsed = time.monotonic() - started
        assert elapsed < 10.0, f"took {elapsed:.1f}s"


def test_criterion_09_advantage_contract():
    with criterion("09", "advantages: zero sum, unit stdev, affine invariance"):
        rng = np.random.default_rng(909)
        for _ in range(1000):
            k = int(rng.integers(2, 16))
            rewards = (rng.normal(size=k) * float(rng.uniform(0.5, 30))).tolist()
            advantages = group_advantages(rewards)
            assert abs(sum(advantages)) < 1e-9
            sigma = math.sqrt(sum(a * a for a in advantages) / k)
            if any(abs(r - rewards[0]) > 1e-9 for r in rewards):
                assert abs(sigma - 1.0) < 1e-9
            scale = float(rng.uniform(0.1, 40))
            shift = float(rng.uniform(-50, 50))
            transformed = group_advantages([scale * r + shift for r in rewards])
            for a, b in zip(advantages, transformed):
                assert abs(a - b) < 1e-9


def test_criterion_10_bootstrap():
    with criterion("10", "bootstrap p-values: dominance, ties, determinism"):
        rng = np.random.default_rng(1010)
        baseline = rng.uniform(0, 1, size=25).tolist()
        system = [b + 1.0 for b in baseline]
        config = BootstrapConfig(trials=1000, seed=77)
        assert paired_bootstrap(baseline, system, config) == 1 / 1001
        assert paired_bootstrap(baseline, baseline, config) >= 0.5
        assert paired_bootstrap(baseline, system, config) == paired_bootstrap(
            baseline, system, config
        )


def test_criterion_11_fixture_ground_truth():
    with criterion("11", "fixture ground truth: relabel edits and XML-Match"):
        relabels_seen = 0
        for seed in (1, 2, 3):
            spec = FixtureSpec(doc_count=15, corruptions={"relabel-tag": 0.15})
            for record in generate_fixtures(spec, seed):
                k = record.corruption_counts.get("relabel-tag", 0)
                relabels_seen += k
                hyp = parse_document(record.hypothesis).tree
                ref = parse_document(record.reference).tree
                assert optimal_alignment(hyp, ref).edit_count == 0.5 * k
        assert relabels_seen > 0

        # Structure-affecting corruptions always break XML-Match; clean
        # fixtures always match. (Text perturbation cannot affect tree
        # isomorphism and is checked separately in the corpusio tests.)
        spec = FixtureSpec(
            doc_count=40,
            corruptions={
                "drop-node": 0.08,
                "relabel-tag": 0.08,
                "swap-siblings": 0.3,
                "break-wellformedness": 0.15,
            },
        )
        corrupted_seen = 0
        for record in generate_fixtures(spec, 99):
            hyp = parse_document(record.hypothesis)
            ref = parse_document(record.reference).tree
            if record.clean:
                assert xml_match(hyp, ref) == 1
            else:
                corrupted_seen += 1
                assert xml_match(hyp, ref) == 0
        assert corrupted_seen >= 10


GOLDEN_CORPUS = DATA_DIR / "golden_corpus.jsonl"
GOLDEN_REPORT = DATA_DIR / "golden_report.json"


def test_criterion_12a_golden_report_bytes():
    with criterion("12a", "eval reproduces the golden report byte-for-byte"):
        result = subprocess.run(
            [sys.executable, "-m", "structeval.cli", "eval",
             "--corpus", str(GOLDEN_CORPUS), "--threads", "2"],
            capture_output=True,
            timeout=120,
        )
        assert result.returncode == 0, result.stderr.decode()
        assert result.stdout == GOLDEN_REPORT.read_bytes()


def test_criterion_12b_serve_pipelined_order():
    with criterion("12b", "serve answers 1000 pipelined requests in order"):
        docs = [
            ("<p>good morning</p>", "<p>good morning</p>"),
            ("<p>good", "<p>good</p>"),
            ("<x>one</x>", "<y>one</y>"),
            ("<sec><p>a</p><p>b</p></sec>", "<sec><p>b</p><p>a</p></sec>"),
        ]
        spec = RewardSpec(components=("treesim",))
        lines = []
        expected = []
        for i in range(1000):
            hyp, ref = docs[i % len(docs)]
            lines.append(json.dumps(
                {"id": f"q{i}", "hypothesis": hyp, "reference": ref,
                 "rewards": ["treesim"]}
            ))
            expected.append((f"q{i}", score_reward(hyp, ref, spec)))
        result = subprocess.run(
            [sys.executable, "-m", "structeval.cli", "serve"],
            input="\n".join(lines) + "\n",
            capture_output=True,
            text=True,
            timeout=300,
        )
        assert result.returncode == 0, result.stderr
        responses = [json.loads(l) for l in result.stdout.strip().splitlines()]
        assert len(responses) == 1000
        for response, (request_id, total) in zip(responses, expected):
            assert response["id"] == request_id
            assert response["total"] == pytest.approx(total, abs=1e-12)

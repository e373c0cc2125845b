"""Document- and corpus-level metrics.

Per-document scores (XML-Validity, XML-Match, TreeSim, Node-chrF, Optimal
Node-chrF, structural edit count) are combined with corpus-pooled scores
(Content-BLEU, XML-BLEU, StrucAUC) into a single report. Documents whose
reference fails to parse are skipped everywhere; documents whose hypothesis
fails to parse score zero on node-level metrics and contribute zero to every
StrucAUC threshold.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .errors import ConfigError, EmptyCorpus
from .nodealign import OptimalAlignment, optimal_alignment, parallel_pairing
from .textmetrics import BleuConfig, ChrfConfig, chrf, corpus_bleu
from .treedist import INVALID_XML_PENALTY, tree_similarity
from .xmltree import DocTree, ParseOutcome, is_isomorphic, parse_document, strip_markup

__all__ = [
    "METRICS",
    "DocScores",
    "CorpusReport",
    "node_chrf",
    "optimal_node_chrf",
    "strucauc",
    "xml_match",
    "content_bleu",
    "xml_bleu",
    "evaluate_corpus",
    "metric_resampler",
]

METRICS = (
    "xml_validity",
    "xml_match",
    "treesim",
    "node_chrf",
    "optimal_node_chrf",
    "content_bleu",
    "xml_bleu",
    "strucauc",
)

#: Metrics whose corpus value is a plain mean of per-document values.
MEAN_METRICS = ("xml_validity", "xml_match", "treesim", "node_chrf", "optimal_node_chrf")

DEFAULT_STRUCAUC_K = 5.0

STATUS_SCORED = "scored"
STATUS_REF_INVALID = "ref_invalid"
STATUS_HYP_INVALID = "hyp_invalid"


@dataclass(slots=True)
class DocScores:
    """Per-document metric values; ``None`` marks absent fields."""

    doc_id: str
    status: str
    xml_validity: int | None = None
    xml_match: int | None = None
    tree_sim: float | None = None
    node_chrf: float | None = None
    optimal_node_chrf: float | None = None
    edit_count: float | None = None


@dataclass(slots=True)
class CorpusReport:
    """Per-document scores plus corpus aggregates, ordered by document index."""

    per_doc: list[DocScores]
    aggregates: dict[str, float]
    strucauc_curve: list[tuple[float, float]] | None = None
    counts: dict[str, int] = field(default_factory=dict)


def _blank(text: str) -> bool:
    return not text.strip()


def node_chrf(hyp: DocTree, ref: DocTree, config: ChrfConfig = ChrfConfig()) -> float:
    """Mean chrF over positionally paired nodes, in [0, 100].

    Pairs with matching tags where both sides hold only whitespace are
    skipped; tag-mismatched and placeholder pairs score 0; remaining pairs
    score chrF of their direct text. When every pair is skipped there is
    nothing to translate and the score is 100.
    """
    scores: list[float] = []
    for hyp_id, ref_id in parallel_pairing(hyp, ref).pairs:
        if hyp_id is None or ref_id is None:
            scores.append(0.0)
            continue
        hyp_node = hyp.nodes[hyp_id]
        ref_node = ref.nodes[ref_id]
        if hyp_node.tag != ref_node.tag:
            scores.append(0.0)
            continue
        if _blank(hyp_node.direct_text) and _blank(ref_node.direct_text):
            continue
        scores.append(chrf(hyp_node.direct_text, ref_node.direct_text, config))
    if not scores:
        return 100.0
    return sum(scores) / len(scores)


def optimal_node_chrf(
    alignment: OptimalAlignment, config: ChrfConfig = ChrfConfig()
) -> float:
    """Node-chrF under the optimal one-to-one alignment, in [0, 100].

    Matched pairs follow the same tag-match/skip rules as the positional
    score; every unmatched node contributes 0.
    """
    hyp, ref = alignment.hyp, alignment.ref
    scores: list[float] = []
    for hyp_id, ref_id in alignment.matches:
        hyp_node = hyp.nodes[hyp_id]
        ref_node = ref.nodes[ref_id]
        if hyp_node.tag != ref_node.tag:
            scores.append(0.0)
            continue
        if _blank(hyp_node.direct_text) and _blank(ref_node.direct_text):
            continue
        scores.append(chrf(hyp_node.direct_text, ref_node.direct_text, config))
    scores.extend(0.0 for _ in alignment.unmatched_hyp)
    scores.extend(0.0 for _ in alignment.unmatched_ref)
    if not scores:
        return 100.0
    return sum(scores) / len(scores)


def xml_match(
    hyp: ParseOutcome, ref: DocTree, compare_attributes: bool = True
) -> int:
    """1 iff the hypothesis parses and its tree equals the reference tree."""
    if not hyp.is_valid:
        return 0
    return int(is_isomorphic(hyp.tree, ref, compare_attributes))


@dataclass(frozen=True, slots=True)
class _StrucDoc:
    """Sufficient per-document statistics for the StrucAUC curve."""

    hyp_invalid: bool
    unaligned: float = 0.0
    optimal: float = 0.0
    edits: float = 0.0


def _struc_doc(
    hyp: DocTree, ref: DocTree, config: ChrfConfig
) -> tuple[_StrucDoc, OptimalAlignment]:
    alignment = optimal_alignment(hyp, ref, config)
    doc = _StrucDoc(
        hyp_invalid=False,
        unaligned=node_chrf(hyp, ref, config),
        optimal=optimal_node_chrf(alignment, config),
        edits=alignment.edit_count,
    )
    return doc, alignment


def _thresholds(k_max: float) -> list[float]:
    if k_max <= 0:
        raise ConfigError("StrucAUC K must be > 0")
    grid = [i * 0.5 for i in range(int(k_max / 0.5) + 1)]
    if grid[-1] < k_max:
        grid.append(k_max)
    return grid


def _strucauc_from_docs(
    docs: list[_StrucDoc], k_max: float
) -> tuple[float, list[tuple[float, float]]]:
    if not docs:
        raise EmptyCorpus("no document with a valid reference")
    thresholds = _thresholds(k_max)
    curve: list[tuple[float, float]] = []
    for k in thresholds:
        total = 0.0
        for doc in docs:
            if doc.hyp_invalid:
                continue  # contributes 0 at every threshold
            if k == 0.0:
                total += doc.unaligned
            else:
                total += doc.optimal if doc.edits <= k else doc.unaligned
        curve.append((k, total / len(docs)))
    auc = 0.0
    for (k0, y0), (k1, y1) in zip(curve, curve[1:]):
        auc += (y0 + y1) / 2.0 * (k1 - k0) / k_max
    return auc, curve


def strucauc(
    corpus: list[tuple[str, str]],
    k_max: float = DEFAULT_STRUCAUC_K,
    config: ChrfConfig = ChrfConfig(),
) -> tuple[float, list[tuple[float, float]]]:
    """Structure-tolerance AUC over a corpus of (hypothesis, reference) texts.

    Per document: an invalid reference skips the document entirely; an
    invalid hypothesis contributes 0 at every threshold. Otherwise the
    curve credits the document's Optimal Node-chrF at thresholds k at or
    above its structural edit count and its positional Node-chrF below.
    The score is the trapezoidal integral of the mean curve against
    k / k_max, on the 0-100 scale; the curve points are also returned.
    """
    docs: list[_StrucDoc] = []
    for hyp_text, ref_text in corpus:
        ref = parse_document(ref_text)
        if not ref.is_valid:
            continue
        hyp = parse_document(hyp_text)
        if not hyp.is_valid:
            docs.append(_StrucDoc(hyp_invalid=True))
            continue
        doc, _ = _struc_doc(hyp.tree, ref.tree, config)
        docs.append(doc)
    return _strucauc_from_docs(docs, k_max)


def content_bleu(
    corpus: list[tuple[str, str]], config: BleuConfig = BleuConfig()
) -> float:
    """Corpus BLEU over markup-stripped document texts."""
    pairs = [(strip_markup(h), strip_markup(r)) for h, r in corpus]
    return corpus_bleu(pairs, config)


def _xml_bleu_pairs(
    hyp: ParseOutcome, ref: DocTree, compare_attributes: bool
) -> list[tuple[str, str]]:
    """Segment pairs one document contributes to the pooled XML-BLEU."""
    if xml_match(hyp, ref, compare_attributes):
        hyp_segments = list(hyp.tree.segments)
        ref_segments = list(ref.segments)
        width = max(len(hyp_segments), len(ref_segments))
        hyp_segments += [""] * (width - len(hyp_segments))
        ref_segments += [""] * (width - len(ref_segments))
        return list(zip(hyp_segments, ref_segments))
    return [("", segment) for segment in ref.segments]


def _pooled_xml_bleu(
    doc_pairs: list[list[tuple[str, str]]], all_matched: bool, config: BleuConfig
) -> float:
    pooled = [pair for pairs in doc_pairs for pair in pairs]
    if not pooled:
        # Pure-markup corpus: nothing to pair. Perfect only if every
        # document matched structurally.
        return 100.0 if all_matched else 0.0
    return corpus_bleu(pooled, config)


def xml_bleu(
    corpus: list[tuple[str, str]],
    config: BleuConfig = BleuConfig(),
    compare_attributes: bool = True,
) -> float:
    """Corpus BLEU over tag-boundary segments with structure gating.

    Structure-matched documents pair their segments positionally (padding
    the shorter list with empty strings); mismatched or invalid documents
    pair every reference segment with the empty string. All pairs are
    pooled into one corpus BLEU. Documents with invalid references are
    skipped.
    """
    doc_pairs: list[list[tuple[str, str]]] = []
    all_matched = True
    scored = False
    for hyp_text, ref_text in corpus:
        ref = parse_document(ref_text)
        if not ref.is_valid:
            continue
        scored = True
        hyp = parse_document(hyp_text)
        matched = bool(xml_match(hyp, ref.tree, compare_attributes))
        all_matched = all_matched and matched
        doc_pairs.append(_xml_bleu_pairs(hyp, ref.tree, compare_attributes))
    if not scored:
        raise EmptyCorpus("no document with a valid reference")
    return _pooled_xml_bleu(doc_pairs, all_matched, config)


@dataclass(slots=True)
class _DocResult:
    """One document's scores plus the payloads pooled metrics need."""

    scores: DocScores
    struc: _StrucDoc | None = None
    content_pair: tuple[str, str] | None = None
    xml_bleu_pairs: list[tuple[str, str]] | None = None
    matched: bool = True


def _resolve_metrics(metrics) -> tuple[str, ...]:
    if metrics is None:
        return METRICS
    requested = tuple(metrics)
    unknown = [m for m in requested if m not in METRICS]
    if unknown:
        raise ConfigError(
            f"unknown metric(s) {', '.join(sorted(unknown))}; "
            f"valid metrics are: {', '.join(METRICS)}"
        )
    if not requested:
        raise ConfigError("at least one metric must be requested")
    return requested


def _score_record(
    record,
    requested: tuple[str, ...],
    chrf_config: ChrfConfig,
    bleu_config: BleuConfig,
    compare_attributes: bool,
) -> _DocResult:
    wants = set(requested)
    need_align = wants & {"optimal_node_chrf", "strucauc"}
    need_node = wants & {"node_chrf", "strucauc"}
    scores = DocScores(doc_id=record.id, status=STATUS_SCORED)
    result = _DocResult(scores=scores)

    ref = parse_document(record.reference)
    if not ref.is_valid:
        scores.status = STATUS_REF_INVALID
        return result
    hyp = parse_document(record.hypothesis)

    if "content_bleu" in wants:
        result.content_pair = (
            strip_markup(record.hypothesis),
            strip_markup(record.reference),
        )
    if "xml_bleu" in wants:
        result.matched = bool(xml_match(hyp, ref.tree, compare_attributes))
        result.xml_bleu_pairs = _xml_bleu_pairs(hyp, ref.tree, compare_attributes)

    if not hyp.is_valid:
        scores.status = STATUS_HYP_INVALID
        if "xml_validity" in wants:
            scores.xml_validity = 0
        if "xml_match" in wants:
            scores.xml_match = 0
        if "treesim" in wants:
            scores.tree_sim = INVALID_XML_PENALTY
        if "node_chrf" in wants:
            scores.node_chrf = 0.0
        if "optimal_node_chrf" in wants:
            scores.optimal_node_chrf = 0.0
        if "strucauc" in wants:
            result.struc = _StrucDoc(hyp_invalid=True)
        return result

    if "xml_validity" in wants:
        scores.xml_validity = 1
    if "xml_match" in wants:
        scores.xml_match = xml_match(hyp, ref.tree, compare_attributes)
    if "treesim" in wants:
        scores.tree_sim = tree_similarity(hyp.tree, ref.tree)
    if need_node:
        scores.node_chrf = node_chrf(hyp.tree, ref.tree, chrf_config)
    if need_align:
        alignment = optimal_alignment(hyp.tree, ref.tree, chrf_config)
        scores.optimal_node_chrf = optimal_node_chrf(alignment, chrf_config)
        scores.edit_count = alignment.edit_count
        if "strucauc" in wants:
            result.struc = _StrucDoc(
                hyp_invalid=False,
                unaligned=scores.node_chrf,
                optimal=scores.optimal_node_chrf,
                edits=alignment.edit_count,
            )
    if "node_chrf" not in wants:
        scores.node_chrf = None
    if "optimal_node_chrf" not in wants and "strucauc" not in wants:
        scores.optimal_node_chrf = None
        scores.edit_count = None
    return result


def metric_resampler(
    records,
    metric: str,
    *,
    strucauc_k: float = DEFAULT_STRUCAUC_K,
    chrf_config: ChrfConfig = ChrfConfig(),
    bleu_config: BleuConfig = BleuConfig(),
    compare_attributes: bool = True,
):
    """Corpus score plus a recompute-from-resample function for one metric.

    Returns ``(n_docs, full_score, score_fn)`` where ``score_fn`` maps a
    document index multiset (indices into the ref-valid documents, in
    input order) to the metric recomputed on that resample. Mean metrics
    average the selected per-document values; pooled metrics (Content-BLEU,
    XML-BLEU, StrucAUC) are rebuilt from per-document sufficient statistics,
    which is what bootstrap significance testing needs.
    """
    requested = _resolve_metrics([metric])
    results = [
        _score_record(r, requested, chrf_config, bleu_config, compare_attributes)
        for r in records
    ]
    scoreable = [r for r in results if r.scores.status != STATUS_REF_INVALID]
    if not scoreable:
        raise EmptyCorpus("every document has an invalid reference")
    n = len(scoreable)

    if metric == "content_bleu":
        pairs = [r.content_pair for r in scoreable]

        def score(indices) -> float:
            return corpus_bleu([pairs[i] for i in indices], bleu_config)

    elif metric == "xml_bleu":
        doc_pairs = [r.xml_bleu_pairs for r in scoreable]
        matched = [r.matched for r in scoreable]

        def score(indices) -> float:
            return _pooled_xml_bleu(
                [doc_pairs[i] for i in indices],
                all(matched[i] for i in indices),
                bleu_config,
            )

    elif metric == "strucauc":
        docs = [r.struc for r in scoreable]

        def score(indices) -> float:
            return _strucauc_from_docs([docs[i] for i in indices], strucauc_k)[0]

    else:
        attr = {
            "xml_validity": "xml_validity",
            "xml_match": "xml_match",
            "treesim": "tree_sim",
            "node_chrf": "node_chrf",
            "optimal_node_chrf": "optimal_node_chrf",
        }[metric]
        values = [float(getattr(r.scores, attr)) for r in scoreable]

        def score(indices) -> float:
            return sum(values[i] for i in indices) / len(indices)

    return n, score(range(n)), score


def evaluate_corpus(
    records,
    metrics=None,
    *,
    strucauc_k: float = DEFAULT_STRUCAUC_K,
    chrf_config: ChrfConfig = ChrfConfig(),
    bleu_config: BleuConfig = BleuConfig(),
    compare_attributes: bool = True,
    threads: int | None = None,
) -> CorpusReport:
    """Score every requested metric for a corpus of records.

    ``records`` is a sequence of objects with ``id``, ``hypothesis`` and
    ``reference`` attributes. Documents whose reference does not parse are
    marked and excluded from every aggregate. Per-document scoring is pure
    and may run on a thread pool; aggregation is a deterministic fold in
    document order.
    """
    records = list(records)
    if not records:
        raise EmptyCorpus("corpus contains no records")
    requested = _resolve_metrics(metrics)

    def score(record) -> _DocResult:
        return _score_record(
            record, requested, chrf_config, bleu_config, compare_attributes
        )

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(score, records))
    else:
        results = [score(record) for record in records]

    scoreable = [r for r in results if r.scores.status != STATUS_REF_INVALID]
    if not scoreable:
        raise EmptyCorpus("every document has an invalid reference")

    aggregates: dict[str, float] = {}
    field_of = {
        "xml_validity": "xml_validity",
        "xml_match": "xml_match",
        "treesim": "tree_sim",
        "node_chrf": "node_chrf",
        "optimal_node_chrf": "optimal_node_chrf",
    }
    for metric in requested:
        if metric in field_of:
            values = [
                getattr(r.scores, field_of[metric])
                for r in scoreable
                if getattr(r.scores, field_of[metric]) is not None
            ]
            aggregates[metric] = sum(values) / len(values) if values else 0.0
    edit_counts = [
        r.scores.edit_count for r in scoreable if r.scores.edit_count is not None
    ]
    if edit_counts and ("optimal_node_chrf" in requested or "strucauc" in requested):
        aggregates["edit_count"] = sum(edit_counts) / len(edit_counts)

    if "content_bleu" in requested:
        pairs = [r.content_pair for r in scoreable]
        aggregates["content_bleu"] = corpus_bleu(pairs, bleu_config)
    if "xml_bleu" in requested:
        aggregates["xml_bleu"] = _pooled_xml_bleu(
            [r.xml_bleu_pairs for r in scoreable],
            all(r.matched for r in scoreable),
            bleu_config,
        )
    curve = None
    if "strucauc" in requested:
        auc, curve = _strucauc_from_docs([r.struc for r in scoreable], strucauc_k)
        aggregates["strucauc"] = auc

    counts = {
        "documents": len(results),
        "scored": sum(1 for r in results if r.scores.status == STATUS_SCORED),
        "hyp_invalid": sum(
            1 for r in results if r.scores.status == STATUS_HYP_INVALID
        ),
        "ref_invalid": sum(
            1 for r in results if r.scores.status == STATUS_REF_INVALID
        ),
    }
    return CorpusReport(
        per_doc=[r.scores for r in results],
        aggregates=aggregates,
        strucauc_curve=curve,
        counts=counts,
    )

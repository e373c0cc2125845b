"""Corpus file formats, synthetic fixtures, and report serialization.

Corpora are JSONL (one record per line, document strings carry escaped
newlines). The fixture generator emits seeded synthetic corpora whose size
and depth distribution follow software-documentation trees (median 18 nodes,
mean around 27, depth up to 7) and whose hypotheses are produced by applying
ground-truth-annotated corruption operators to a clean reference.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .docmetrics import CorpusReport, DocScores
from .errors import ConfigError, DuplicateId, MalformedLine
from .xmltree import parse_document

__all__ = [
    "CorpusRecord",
    "FixtureRecord",
    "FixtureSpec",
    "CORRUPTION_OPS",
    "read_corpus",
    "scan_corpus",
    "write_corpus",
    "generate_fixtures",
    "write_report",
]

CORRUPTION_OPS = (
    "drop-node",
    "relabel-tag",
    "swap-siblings",
    "break-wellformedness",
    "perturb-text",
)


@dataclass(frozen=True, slots=True)
class CorpusRecord:
    """One parallel document: hypothesis and reference, optional source."""

    id: str
    hypothesis: str
    reference: str
    source: str | None = None


@dataclass(frozen=True, slots=True)
class FixtureRecord(CorpusRecord):
    """Synthetic record annotated with the corruptions actually applied."""

    corruption_counts: Mapping[str, int] = field(default_factory=dict)

    @property
    def clean(self) -> bool:
        return not any(self.corruption_counts.values())


def _record_from_json(obj, line_no: int) -> CorpusRecord:
    if not isinstance(obj, dict):
        raise MalformedLine(line_no, "record is not a JSON object")
    for key in ("id", "hypothesis", "reference"):
        if key not in obj:
            raise MalformedLine(line_no, f"missing field {key!r}")
        if not isinstance(obj[key], str):
            raise MalformedLine(line_no, f"field {key!r} is not a string")
    source = obj.get("source")
    if source is not None and not isinstance(source, str):
        raise MalformedLine(line_no, "field 'source' is not a string")
    return CorpusRecord(
        id=obj["id"],
        hypothesis=obj["hypothesis"],
        reference=obj["reference"],
        source=source,
    )


def _open_lines(source):
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as handle:
            yield from handle
    else:
        yield from source


def scan_corpus(source, fmt: str = "jsonl"):
    """Read a corpus, collecting diagnostics instead of failing fast.

    Returns (records, diagnostics); diagnostics is a list of human-readable
    per-line error strings.
    """
    if fmt != "jsonl":
        raise ConfigError(f"unknown corpus format: {fmt!r}")
    records: list[CorpusRecord] = []
    diagnostics: list[str] = []
    seen: set[str] = set()
    for line_no, line in enumerate(_open_lines(source), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            diagnostics.append(f"line {line_no}: invalid JSON ({exc.msg})")
            continue
        try:
            record = _record_from_json(obj, line_no)
        except MalformedLine as exc:
            diagnostics.append(str(exc))
            continue
        if record.id in seen:
            diagnostics.append(f"line {line_no}: duplicate record id {record.id!r}")
            continue
        seen.add(record.id)
        records.append(record)
    return records, diagnostics


def read_corpus(source, fmt: str = "jsonl") -> list[CorpusRecord]:
    """Read a JSONL corpus; raises on the first malformed or duplicate line."""
    if fmt != "jsonl":
        raise ConfigError(f"unknown corpus format: {fmt!r}")
    records: list[CorpusRecord] = []
    seen: set[str] = set()
    for line_no, line in enumerate(_open_lines(source), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedLine(line_no, f"invalid JSON ({exc.msg})") from exc
        record = _record_from_json(obj, line_no)
        if record.id in seen:
            raise DuplicateId(record.id)
        seen.add(record.id)
        records.append(record)
    return records


def write_corpus(records, target) -> None:
    """Write records as JSONL to a path or text stream."""

    def dump(handle) -> None:
        for record in records:
            obj = {"id": record.id}
            if record.source is not None:
                obj["source"] = record.source
            obj["hypothesis"] = record.hypothesis
            obj["reference"] = record.reference
            handle.write(json.dumps(obj, ensure_ascii=False) + "\n")

    if isinstance(target, (str, Path)):
        with open(target, "w", encoding="utf-8") as handle:
            dump(handle)
    else:
        dump(target)


# --- synthetic fixtures ----------------------------------------------------

_TAG_VOCAB = (
    "concept", "title", "shortdesc", "conbody", "prolog", "source", "section",
    "p", "ul", "ol", "li", "uicontrol", "codeblock", "codeph", "note", "table",
    "tgroup", "thead", "tbody", "row", "entry", "fig", "image", "xref", "term",
    "keyword", "cmd", "step", "steps", "substep", "task", "taskbody", "context",
    "result", "example", "postreq", "prereq", "menucascade", "filepath",
    "userinput", "systemoutput", "varname", "option", "parmname", "apiname",
    "b", "i", "u", "ph", "q", "cite", "dl", "dlentry", "dt", "dd", "lines",
    "pre", "draft",
)

_WORDS = (
    "account", "action", "active", "adjust", "admin", "alert", "align",
    "amount", "analysis", "application", "apply", "archive", "assign",
    "balance", "batch", "branch", "budget", "button", "cancel", "catalog",
    "change", "channel", "check", "client", "close", "column", "company",
    "compare", "confirm", "content", "control", "copy", "create", "credit",
    "currency", "custom", "data", "default", "delete", "detail", "dialog",
    "display", "document", "download", "draft", "edit", "enable", "enter",
    "entry", "error", "export", "field", "file", "filter", "folder", "format",
    "group", "header", "help", "history", "import", "input", "invoice",
    "item", "journal", "key", "label", "ledger", "level", "limit", "list",
    "local", "mapping", "menu", "message", "mode", "module", "monitor",
    "name", "network", "number", "object", "open", "option", "order",
    "output", "page", "panel", "period", "plan", "post", "print", "process",
    "profile", "project", "query", "range", "record", "refresh", "region",
    "release", "report", "request", "reset", "result", "review", "role",
    "row", "rule", "save", "screen", "search", "section", "select", "server",
    "service", "session", "setting", "setup", "source", "status", "step",
    "submit", "summary", "system", "table", "target", "task", "template",
    "text", "total", "trace", "transfer", "type", "unit", "update", "upload",
    "user", "value", "variant", "version", "view", "warning", "workflow",
)


@dataclass(frozen=True, slots=True)
class FixtureSpec:
    """Shape and corruption parameters for synthetic corpora."""

    doc_count: int = 20
    median_nodes: float = 18.0
    mean_nodes: float = 27.36
    max_depth: int = 7
    tag_vocab_size: int = 58
    corruptions: Mapping[str, float] = field(default_factory=dict)
    text_probability: float = 0.7
    attribute_probability: float = 0.2

    def __post_init__(self) -> None:
        if self.doc_count < 1:
            raise ConfigError("doc_count must be >= 1")
        if not (0 < self.median_nodes <= self.mean_nodes):
            raise ConfigError("need 0 < median_nodes <= mean_nodes")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if not 1 <= self.tag_vocab_size <= len(_TAG_VOCAB):
            raise ConfigError(f"tag_vocab_size must be in [1, {len(_TAG_VOCAB)}]")
        for name, rate in self.corruptions.items():
            if name not in CORRUPTION_OPS:
                raise ConfigError(
                    f"unknown corruption {name!r}; valid: {', '.join(CORRUPTION_OPS)}"
                )
            if not 0.0 <= rate <= 1.0:
                raise ConfigError(f"corruption rate for {name!r} must be in [0, 1]")


class _GenNode:
    __slots__ = ("tag", "attrs", "text", "children")

    def __init__(self, tag: str, attrs=None, text: str = "") -> None:
        self.tag = tag
        self.attrs = list(attrs or [])
        self.text = text
        self.children: list[_GenNode] = []

    def clone(self) -> "_GenNode":
        copy = _GenNode(self.tag, list(self.attrs), self.text)
        copy.children = [child.clone() for child in self.children]
        return copy

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()

    def shape_signature(self):
        """Tag-and-shape identity, ignoring text and attributes."""
        return (self.tag, tuple(c.shape_signature() for c in self.children))


def _serialize_nodes(top_level: list[_GenNode]) -> str:
    parts: list[str] = []

    def emit(node: _GenNode) -> None:
        attrs = "".join(f" {name}={quoteattr(value)}" for name, value in node.attrs)
        if not node.text and not node.children:
            parts.append(f"<{node.tag}{attrs}/>")
            return
        parts.append(f"<{node.tag}{attrs}>")
        if node.text:
            parts.append(escape(node.text))
        for child in node.children:
            emit(child)
        parts.append(f"</{node.tag}>")

    for node in top_level:
        emit(node)
    return "".join(parts)


def _random_tree(spec: FixtureSpec, rng: np.random.Generator) -> list[_GenNode]:
    sigma_sq = 2.0 * math.log(spec.mean_nodes / spec.median_nodes)
    sigma = math.sqrt(sigma_sq) if sigma_sq > 0 else 0.0
    n = int(round(rng.lognormal(math.log(spec.median_nodes), sigma)))
    n = min(max(n, 1), 80)
    vocab = _TAG_VOCAB[: spec.tag_vocab_size]
    top_level: list[_GenNode] = []
    interior: list[tuple[_GenNode, int]] = []  # (node, depth)
    attr_counter = 0
    for _ in range(n):
        node = _GenNode(tag=str(rng.choice(vocab)))
        if rng.random() < spec.text_probability:
            count = int(rng.integers(2, 7))
            node.text = " ".join(str(rng.choice(_WORDS)) for _ in range(count))
        if rng.random() < spec.attribute_probability:
            attr_counter += 1
            node.attrs = [("id", f"x{attr_counter:03d}")]
        slots = [(None, 0)] + [item for item in interior if item[1] < spec.max_depth]
        parent, depth = slots[int(rng.integers(0, len(slots)))]
        if parent is None:
            top_level.append(node)
        else:
            parent.children.append(node)
        interior.append((node, depth + 1))
    return top_level


def _apply_drops(top_level, rng, rate: float) -> int:
    if rate <= 0:
        return 0
    nodes = [n for t in top_level for n in t.walk()]
    doomed = {id(n) for n in nodes if rng.random() < rate}
    if not doomed:
        return 0

    def rebuild(children: list[_GenNode]) -> list[_GenNode]:
        kept: list[_GenNode] = []
        for child in children:
            child.children = rebuild(child.children)
            if id(child) in doomed:
                kept.extend(child.children)  # promote grandchildren
            else:
                kept.append(child)
        return kept

    top_level[:] = rebuild(top_level)
    return len(doomed)


def _apply_relabels(top_level, rng, rate: float) -> int:
    if rate <= 0:
        return 0
    count = 0
    for node in [n for t in top_level for n in t.walk()]:
        if rng.random() < rate:
            count += 1
            # Fresh tag outside the generation vocabulary, so alignment
            # ground truth cannot be confused by accidental tag matches.
            node.tag = f"ztag{count:03d}"
    return count


def _apply_swaps(top_level, rng, rate: float) -> int:
    if rate <= 0:
        return 0
    count = 0
    parents = [top_level] + [
        n.children for t in top_level for n in t.walk() if len(n.children) >= 2
    ]
    for siblings in parents:
        if len(siblings) < 2 or rng.random() >= rate:
            continue
        eligible = [
            i
            for i in range(len(siblings) - 1)
            if siblings[i].shape_signature() != siblings[i + 1].shape_signature()
        ]
        if not eligible:
            continue
        i = eligible[int(rng.integers(0, len(eligible)))]
        siblings[i], siblings[i + 1] = siblings[i + 1], siblings[i]
        count += 1
    return count


def _apply_text_perturbations(top_level, rng, rate: float) -> int:
    if rate <= 0:
        return 0
    count = 0
    for node in [n for t in top_level for n in t.walk()]:
        if node.text and rng.random() < rate:
            words = node.text.split()
            count += 1
            words[int(rng.integers(0, len(words)))] = f"zzw{count:03d}"
            node.text = " ".join(words)
    return count


def _break_wellformedness(document: str, rng: np.random.Generator) -> str:
    choice = int(rng.integers(0, 3))
    if choice == 0 and "</" in document:
        broken = document[: document.rindex("</") + 2]
    elif choice == 1 and ">" in document:
        i = document.index(">")
        broken = document[:i] + document[i + 1 :]
    else:
        broken = document + "<broken"
    if parse_document(broken).is_valid:  # paranoia: mutations above cannot heal
        broken += "<broken"
    return broken


def generate_fixtures(spec: FixtureSpec, seed: int) -> list[FixtureRecord]:
    """Deterministic seeded corpus of clean references and corrupted hypotheses.

    Each record's ``corruption_counts`` holds the number of times each
    operator actually fired, giving property tests their ground truth
    (e.g. k relabels and nothing else imply an optimal-alignment edit count
    of 0.5 * k).
    """
    records: list[FixtureRecord] = []
    for index in range(spec.doc_count):
        rng = np.random.default_rng([seed, index])
        reference_tree = _random_tree(spec, rng)
        reference = _serialize_nodes(reference_tree)
        corrupted = [node.clone() for node in reference_tree]
        counts: dict[str, int] = {}
        rates = dict(spec.corruptions)
        counts["drop-node"] = _apply_drops(corrupted, rng, rates.get("drop-node", 0.0))
        counts["relabel-tag"] = _apply_relabels(
            corrupted, rng, rates.get("relabel-tag", 0.0)
        )
        counts["swap-siblings"] = _apply_swaps(
            corrupted, rng, rates.get("swap-siblings", 0.0)
        )
        counts["perturb-text"] = _apply_text_perturbations(
            corrupted, rng, rates.get("perturb-text", 0.0)
        )
        hypothesis = _serialize_nodes(corrupted)
        counts["break-wellformedness"] = 0
        if rng.random() < rates.get("break-wellformedness", 0.0):
            hypothesis = _break_wellformedness(hypothesis, rng)
            counts["break-wellformedness"] = 1
        records.append(
            FixtureRecord(
                id=f"doc{index:04d}",
                hypothesis=hypothesis,
                reference=reference,
                corruption_counts={k: v for k, v in counts.items() if v},
            )
        )
    return records


# --- report serialization ---------------------------------------------------

_REPORT_METRIC_ORDER = (
    "xml_validity",
    "xml_match",
    "treesim",
    "node_chrf",
    "optimal_node_chrf",
    "edit_count",
    "content_bleu",
    "xml_bleu",
    "strucauc",
)

_DOC_FIELDS = (
    ("xml_validity", "xml_validity"),
    ("xml_match", "xml_match"),
    ("treesim", "tree_sim"),
    ("node_chrf", "node_chrf"),
    ("optimal_node_chrf", "optimal_node_chrf"),
    ("edit_count", "edit_count"),
)


def _fmt(value) -> str:
    """JSON fragment for one value; floats fixed at 4 decimals."""
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.4f}"
    return json.dumps(value, ensure_ascii=False)


def _doc_row(scores: DocScores) -> dict:
    row = {"id": scores.doc_id, "status": scores.status}
    for name, attr in _DOC_FIELDS:
        value = getattr(scores, attr)
        row[name] = float(value) if value is not None else None
    return row


def _report_json(report: CorpusReport) -> bytes:
    out = io.StringIO()
    out.write("{\n")
    out.write('  "counts": {')
    out.write(
        ", ".join(f'"{k}": {report.counts.get(k, 0)}' for k in
                  ("documents", "scored", "hyp_invalid", "ref_invalid"))
    )
    out.write("},\n")
    out.write('  "aggregates": {')
    parts = [
        f'"{name}": {_fmt(float(report.aggregates[name]))}'
        for name in _REPORT_METRIC_ORDER
        if name in report.aggregates
    ]
    out.write(", ".join(parts))
    out.write("}")
    if report.strucauc_curve is not None:
        points = ", ".join(
            f"[{_fmt(float(k))}, {_fmt(float(v))}]" for k, v in report.strucauc_curve
        )
        out.write(f',\n  "strucauc_curve": [{points}]')
    out.write(',\n  "documents": [\n')
    rows = []
    for scores in report.per_doc:
        row = _doc_row(scores)
        cells = ", ".join(f'{json.dumps(k)}: {_fmt(v)}' for k, v in row.items())
        rows.append("    {" + cells + "}")
    out.write(",\n".join(rows))
    out.write("\n  ]\n}\n")
    return out.getvalue().encode("utf-8")


def _report_tsv(report: CorpusReport) -> bytes:
    columns = ["id", "status"] + list(_REPORT_METRIC_ORDER)
    lines = ["\t".join(columns)]

    def cell(value) -> str:
        return "" if value is None else f"{float(value):.4f}"

    for scores in report.per_doc:
        row = _doc_row(scores)
        values = [row["id"], row["status"]]
        values += [cell(row.get(name)) for name in _REPORT_METRIC_ORDER]
        lines.append("\t".join(values))
    aggregate = ["AGGREGATE", ""]
    aggregate += [cell(report.aggregates.get(name)) for name in _REPORT_METRIC_ORDER]
    lines.append("\t".join(aggregate))
    return ("\n".join(lines) + "\n").encode("utf-8")


def write_report(report: CorpusReport, fmt: str = "json") -> bytes:
    """Serialize a report deterministically; identical inputs give identical bytes."""
    if fmt == "json":
        return _report_json(report)
    if fmt == "tsv":
        return _report_tsv(report)
    raise ConfigError(f"unknown report format: {fmt!r}")

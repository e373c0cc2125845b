"""Parsing of XML fragments into normalized ordered labeled trees.

Documents are treated as fragments: any number of top-level elements (plus
stray top-level text) is wrapped under a synthetic dummy root before parsing.
The dummy root carries an empty tag and never counts toward ``node_count``.
Parse failures are returned as values (``ParseOutcome``), never raised, so
that metrics can score invalid model output without try/except noise.
"""

from __future__ import annotations

import re
import xml.parsers.expat
from dataclasses import dataclass, field

__all__ = [
    "TreeNode",
    "DocTree",
    "ParseOutcome",
    "parse_document",
    "is_isomorphic",
    "text_segments",
    "strip_markup",
    "canonical_xml",
    "normalize_ws",
]

# Tag used to wrap the fragment for the underlying parser. If the input text
# itself contains this close tag, the unwrapped fragment is malformed anyway
# (stray end tag), so the outcome is Invalid either way.
_WRAPPER_TAG = "structeval-fragment-wrapper"

_WS_RUN = re.compile(r"\s+")


def normalize_ws(text: str) -> str:
    """Collapse whitespace runs to single spaces and trim the ends."""
    return _WS_RUN.sub(" ", text).strip()


@dataclass(frozen=True, slots=True)
class TreeNode:
    """One element of a parsed document.

    ``attributes`` are sorted by name; ``direct_text`` is the concatenation of
    the node's own character data in document order, excluding all descendant
    text. ``children`` holds node ids in document order. The dummy root is the
    only node with an empty ``tag``.
    """

    tag: str
    attributes: tuple[tuple[str, str], ...] = ()
    direct_text: str = ""
    children: tuple[int, ...] = ()

    def has_text(self) -> bool:
        """True if the node carries any non-whitespace character data."""
        return bool(self.direct_text.strip())


@dataclass(frozen=True, slots=True)
class DocTree:
    """Ordered labeled tree for one document.

    ``nodes[0]`` is the dummy root; node ids are document (pre-order)
    positions. ``segments`` are the whitespace-normalized maximal text runs
    between tag boundaries, in document order, whitespace-only runs excluded.
    """

    nodes: tuple[TreeNode, ...]
    segments: tuple[str, ...] = ()

    root: int = 0

    @property
    def node_count(self) -> int:
        """Number of element nodes, excluding the dummy root."""
        return len(self.nodes) - 1

    def preorder(self, include_root: bool = False) -> list[int]:
        """Node ids in depth-first document order."""
        order: list[int] = []
        stack = [self.root]
        while stack:
            nid = stack.pop()
            order.append(nid)
            stack.extend(reversed(self.nodes[nid].children))
        return order if include_root else order[1:]

    def node(self, nid: int) -> TreeNode:
        return self.nodes[nid]


@dataclass(frozen=True, slots=True)
class ParseOutcome:
    """Result of :func:`parse_document`: a tree or a failure reason."""

    tree: DocTree | None = None
    reason: str | None = None

    @property
    def is_valid(self) -> bool:
        return self.tree is not None

    @staticmethod
    def valid(tree: DocTree) -> "ParseOutcome":
        return ParseOutcome(tree=tree)

    @staticmethod
    def invalid(reason: str) -> "ParseOutcome":
        return ParseOutcome(reason=reason or "unparseable document")


def _strip_prolog(text: str) -> str:
    """Drop a leading BOM, XML declaration, and DOCTYPE declaration."""
    s = text.lstrip("﻿")
    m = re.match(r"\s*<\?xml\b.*?\?>", s, re.DOTALL)
    if m:
        s = s[m.end():]
    m = re.match(r"\s*<!DOCTYPE", s, re.IGNORECASE)
    if m:
        # Scan to the matching '>' allowing one [...] internal subset.
        i = m.end()
        depth = 0
        while i < len(s):
            c = s[i]
            if c == "[":
                depth += 1
            elif c == "]":
                depth -= 1
            elif c == ">" and depth <= 0:
                return s[i + 1:]
            i += 1
        # Unterminated DOCTYPE: leave as-is, the parser will reject it.
    return s


class _TreeBuilder:
    """Collects expat events into node records and text segments."""

    def __init__(self) -> None:
        # Parallel per-node stores; index = node id.
        self.tags: list[str] = [""]
        self.attrs: list[tuple[tuple[str, str], ...]] = [()]
        self.texts: list[list[str]] = [[]]
        self.children: list[list[int]] = [[]]
        self.segments: list[str] = []
        self._stack: list[int] = []
        self._chunk: list[str] = []
        self._seen_wrapper = False

    def _flush_segment(self) -> None:
        if self._chunk:
            seg = normalize_ws("".join(self._chunk))
            if seg:
                self.segments.append(seg)
            self._chunk.clear()

    def start(self, name: str, attr_list: list[str]) -> None:
        self._flush_segment()
        if not self._seen_wrapper:
            self._seen_wrapper = True
            self._stack.append(0)
            return
        nid = len(self.tags)
        pairs = list(zip(attr_list[0::2], attr_list[1::2]))
        self.tags.append(name)
        self.attrs.append(tuple(sorted(pairs)))
        self.texts.append([])
        self.children.append([])
        self.children[self._stack[-1]].append(nid)
        self._stack.append(nid)

    def end(self, name: str) -> None:
        self._flush_segment()
        self._stack.pop()

    def chardata(self, data: str) -> None:
        self._chunk.append(data)
        self.texts[self._stack[-1]].append(data)

    def build(self) -> DocTree:
        nodes = tuple(
            TreeNode(
                tag=self.tags[i],
                attributes=self.attrs[i],
                direct_text="".join(self.texts[i]),
                children=tuple(self.children[i]),
            )
            for i in range(len(self.tags))
        )
        return DocTree(nodes=nodes, segments=tuple(self.segments))


def parse_document(text: str) -> ParseOutcome:
    """Parse an arbitrary string as an XML fragment.

    Top-level text becomes ``direct_text`` of the dummy root. Comments and
    processing instructions are discarded. Undefined entity references,
    unbalanced tags, duplicate or malformed attributes, and illegal characters
    make the outcome Invalid. The empty string parses to a valid empty tree.
    """
    if not isinstance(text, str):
        return ParseOutcome.invalid("document is not a string")
    fragment = _strip_prolog(text)
    builder = _TreeBuilder()
    parser = xml.parsers.expat.ParserCreate()
    parser.ordered_attributes = True
    parser.buffer_text = True
    parser.StartElementHandler = builder.start
    parser.EndElementHandler = builder.end
    parser.CharacterDataHandler = builder.chardata
    try:
        parser.Parse(f"<{_WRAPPER_TAG}>", False)
        parser.Parse(fragment, False)
        parser.Parse(f"</{_WRAPPER_TAG}>", True)
    except xml.parsers.expat.ExpatError as exc:
        return ParseOutcome.invalid(str(exc))
    except ValueError as exc:
        # expat refuses e.g. surrogates embedded in the input string
        return ParseOutcome.invalid(str(exc))
    return ParseOutcome.valid(builder.build())


def is_isomorphic(a: DocTree, b: DocTree, compare_attributes: bool = False) -> bool:
    """Structural equality from the dummy roots down.

    Compares child counts, child order, and tags at every position;
    ``compare_attributes`` additionally requires identical sorted attribute
    lists. Text content is ignored.
    """
    stack = [(a.root, b.root)]
    while stack:
        na, nb = stack.pop()
        node_a, node_b = a.nodes[na], b.nodes[nb]
        if node_a.tag != node_b.tag:
            return False
        if compare_attributes and node_a.attributes != node_b.attributes:
            return False
        if len(node_a.children) != len(node_b.children):
            return False
        stack.extend(zip(node_a.children, node_b.children))
    return True


def text_segments(tree: DocTree) -> list[str]:
    """Maximal text runs between tag boundaries, normalized, in order."""
    return list(tree.segments)


_TAG_LIKE = re.compile(r"<[^>]*>|<[^>]*$")
_ENTITY = re.compile(r"&(amp|lt|gt|apos|quot|#[0-9]+|#x[0-9a-fA-F]+);")

_NAMED_ENTITIES = {"amp": "&", "lt": "<", "gt": ">", "apos": "'", "quot": '"'}


def _decode_entity(m: re.Match[str]) -> str:
    body = m.group(1)
    if body in _NAMED_ENTITIES:
        return _NAMED_ENTITIES[body]
    try:
        code = int(body[2:], 16) if body.startswith("#x") else int(body[1:])
        return chr(code)
    except (ValueError, OverflowError):
        return m.group(0)


def strip_markup(text: str) -> str:
    """Remove all markup, keeping only translatable text.

    Well-formed input is reduced to its text segments joined by single
    spaces. Unparseable input falls back to a best-effort removal of
    tag-like spans plus entity decoding, so content metrics stay computable
    for invalid model output.
    """
    outcome = parse_document(text)
    if outcome.is_valid:
        return " ".join(outcome.tree.segments)
    stripped = _TAG_LIKE.sub(" ", text)
    stripped = _ENTITY.sub(_decode_entity, stripped)
    return normalize_ws(stripped)


def _escape_text(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _escape_attr(s: str) -> str:
    return _escape_text(s).replace('"', "&quot;")


def canonical_xml(tree: DocTree, nid: int | None = None) -> str:
    """Canonical serialization of a node's entire subtree.

    Attributes are emitted sorted by name, direct text is whitespace
    normalized and placed before the children, and no indentation is added,
    so pretty-printing differences can never perturb downstream costs.
    Serializing the dummy root yields the whole fragment.
    """
    if nid is None:
        nid = tree.root
    parts: list[str] = []
    _serialize(tree, nid, parts)
    return "".join(parts)


def _serialize(tree: DocTree, nid: int, out: list[str]) -> None:
    node = tree.nodes[nid]
    text = normalize_ws(node.direct_text)
    if nid == tree.root:
        if text:
            out.append(_escape_text(text))
        for child in node.children:
            _serialize(tree, child, out)
        return
    out.append(f"<{node.tag}")
    for name, value in node.attributes:
        out.append(f' {name}="{_escape_attr(value)}"')
    if not text and not node.children:
        out.append("/>")
        return
    out.append(">")
    if text:
        out.append(_escape_text(text))
    for child in node.children:
        _serialize(tree, child, out)
    out.append(f"</{node.tag}>")

"""Ordered tree edit distance (Zhang-Shasha) and the TreeSim score.

The distance operates on element nodes only, labeled by tag name; text and
attributes are excluded. Both dummy roots take part in the dynamic program
(they share the empty label and match at zero cost) but are excluded from
the node counts used to normalize TreeSim.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError, InvalidReference
from .xmltree import DocTree, parse_document

__all__ = ["EditCostScheme", "tree_edit_distance", "tree_similarity", "tree_sim"]

INVALID_XML_PENALTY = -0.1


@dataclass(frozen=True, slots=True)
class EditCostScheme:
    insert_cost: float = 1.0
    delete_cost: float = 1.0
    relabel_cost: float = 1.0

    def __post_init__(self) -> None:
        if min(self.insert_cost, self.delete_cost, self.relabel_cost) < 0:
            raise ConfigError("edit costs must be non-negative")


class _PostorderTree:
    """Postorder labels, leftmost-leaf-descendant indices, and keyroots."""

    __slots__ = ("labels", "lmds", "keyroots")

    def __init__(self, tree: DocTree) -> None:
        labels: list[str] = []
        lmds: list[int] = []

        def visit(nid: int) -> int:
            node = tree.nodes[nid]
            lmd = -1
            for child in node.children:
                child_lmd = visit(child)
                if lmd < 0:
                    lmd = child_lmd
            index = len(labels)
            labels.append(node.tag)
            lmds.append(lmd if lmd >= 0 else index)
            return lmds[index]

        visit(tree.root)
        last_for_lmd: dict[int, int] = {}
        for index, lmd in enumerate(lmds):
            last_for_lmd[lmd] = index
        self.labels = labels
        self.lmds = lmds
        self.keyroots = sorted(last_for_lmd.values())


def tree_edit_distance(
    a: DocTree, b: DocTree, costs: EditCostScheme = EditCostScheme()
) -> float:
    """Minimum total cost turning ``a`` into ``b`` with ordered-tree edits.

    Edits are node insertion, deletion, and relabeling; a relabel is free
    when the tags already agree. The distance is 0 iff the trees are
    isomorphic ignoring attributes, and symmetric whenever insert and
    delete costs coincide.
    """
    ta, tb = _PostorderTree(a), _PostorderTree(b)
    la, lb = ta.lmds, tb.lmds
    size_a, size_b = len(ta.labels), len(tb.labels)
    treedists = [[0.0] * size_b for _ in range(size_a)]

    def relabel(x: int, y: int) -> float:
        return 0.0 if ta.labels[x] == tb.labels[y] else costs.relabel_cost

    def compute(i: int, j: int) -> None:
        m = i - la[i] + 2
        n = j - lb[j] + 2
        fd = [[0.0] * n for _ in range(m)]
        ioff = la[i] - 1
        joff = lb[j] - 1
        for x in range(1, m):
            fd[x][0] = fd[x - 1][0] + costs.delete_cost
        for y in range(1, n):
            fd[0][y] = fd[0][y - 1] + costs.insert_cost
        for x in range(1, m):
            for y in range(1, n):
                if la[i] == la[x + ioff] and lb[j] == lb[y + joff]:
                    fd[x][y] = min(
                        fd[x - 1][y] + costs.delete_cost,
                        fd[x][y - 1] + costs.insert_cost,
                        fd[x - 1][y - 1] + relabel(x + ioff, y + joff),
                    )
                    treedists[x + ioff][y + joff] = fd[x][y]
                else:
                    p = la[x + ioff] - 1 - ioff
                    q = lb[y + joff] - 1 - joff
                    fd[x][y] = min(
                        fd[x - 1][y] + costs.delete_cost,
                        fd[x][y - 1] + costs.insert_cost,
                        fd[p][q] + treedists[x + ioff][y + joff],
                    )

    for i in ta.keyroots:
        for j in tb.keyroots:
            compute(i, j)
    return treedists[size_a - 1][size_b - 1]


def tree_similarity(hyp: DocTree, ref: DocTree) -> float:
    """Normalized structural similarity of two parsed trees, in [0, 1].

    1 - EditDist / max(node counts), node counts excluding the dummy roots.
    Two empty fragments are a vacuous perfect match. The raw ratio can dip
    below zero when the edit script must delete and re-insert on both
    sides, so the value is floored at 0 to keep the advertised range.
    """
    denominator = max(hyp.node_count, ref.node_count)
    if denominator == 0:
        return 1.0
    distance = tree_edit_distance(hyp, ref)
    return max(0.0, 1.0 - distance / denominator)


def tree_sim(hypothesis_text: str, reference_text: str) -> float:
    """TreeSim score of a raw hypothesis against a raw reference.

    Returns the invalid-XML penalty (-0.1) when the hypothesis does not
    parse; raises :class:`InvalidReference` when the reference does not.
    """
    ref = parse_document(reference_text)
    if not ref.is_valid:
        raise InvalidReference(ref.reason or "reference does not parse")
    hyp = parse_document(hypothesis_text)
    if not hyp.is_valid:
        return INVALID_XML_PENALTY
    return tree_similarity(hyp.tree, ref.tree)

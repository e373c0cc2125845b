"""Positional node pairing and optimal one-to-one node alignment.

The positional pairing zips the pre-order traversals of hypothesis and
reference trees, padding the shorter side with placeholders. The optimal
alignment instead solves a rectangular minimum-cost assignment over chrF
distances between canonical subtree serializations and derives a structural
edit count: one edit per unmatched node, half an edit per matched pair with
differing tags. Positional moves are intentionally free.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import zip_longest

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import NonFiniteCost
from .textmetrics import ChrfConfig, chrf
from .xmltree import DocTree, canonical_xml

__all__ = [
    "NodePairing",
    "OptimalAlignment",
    "parallel_pairing",
    "hungarian",
    "optimal_alignment",
]

TAG_MISMATCH_EDIT = 0.5


@dataclass(frozen=True, slots=True)
class NodePairing:
    """Position-paired node ids from parallel depth-first traversal.

    ``pairs`` holds (hyp node id, ref node id) with ``None`` standing in for
    the placeholder padding on the shorter side; placeholders only ever
    appear at the tail.
    """

    hyp: DocTree
    ref: DocTree
    pairs: tuple[tuple[int | None, int | None], ...]


@dataclass(frozen=True, slots=True)
class OptimalAlignment:
    """Minimum-cost one-to-one node mapping plus its structural edit count."""

    hyp: DocTree
    ref: DocTree
    matches: tuple[tuple[int, int], ...]
    unmatched_hyp: tuple[int, ...]
    unmatched_ref: tuple[int, ...]
    edit_count: float


def parallel_pairing(hyp: DocTree, ref: DocTree) -> NodePairing:
    """Zip pre-order traversals (dummy roots excluded), padding the shorter."""
    pairs = tuple(zip_longest(hyp.preorder(), ref.preorder(), fillvalue=None))
    return NodePairing(hyp=hyp, ref=ref, pairs=pairs)


def hungarian(cost: np.ndarray | list[list[float]]) -> list[tuple[int, int]]:
    """Minimum-cost injective assignment for a rectangular cost matrix.

    Every row of the smaller dimension is assigned a distinct column; the
    result is sorted by row index. Raises :class:`NonFiniteCost` on NaN or
    infinite entries.
    """
    matrix = np.asarray(cost, dtype=float)
    if matrix.size == 0:
        return []
    if matrix.ndim != 2:
        raise NonFiniteCost("cost must be a 2-d matrix")
    if not np.isfinite(matrix).all():
        raise NonFiniteCost("cost matrix contains NaN or infinite entries")
    rows, cols = linear_sum_assignment(matrix)
    return sorted(zip(rows.tolist(), cols.tolist()))


def optimal_alignment(
    hyp: DocTree, ref: DocTree, chrf_config: ChrfConfig = ChrfConfig()
) -> OptimalAlignment:
    """Hungarian node alignment over subtree-serialization chrF distances.

    Each node is represented by the canonical serialization of its entire
    subtree (tags and descendants included); the assignment cost is
    1 - chrF/100 between serializations. Nodes of the larger side left
    without a partner populate the unmatched lists.
    """
    hyp_ids = hyp.preorder()
    ref_ids = ref.preorder()
    if not hyp_ids or not ref_ids:
        return OptimalAlignment(
            hyp=hyp,
            ref=ref,
            matches=(),
            unmatched_hyp=tuple(hyp_ids),
            unmatched_ref=tuple(ref_ids),
            edit_count=float(len(hyp_ids) + len(ref_ids)),
        )
    hyp_texts = [canonical_xml(hyp, nid) for nid in hyp_ids]
    ref_texts = [canonical_xml(ref, nid) for nid in ref_ids]
    cost = np.empty((len(hyp_ids), len(ref_ids)), dtype=float)
    for i, hyp_text in enumerate(hyp_texts):
        for j, ref_text in enumerate(ref_texts):
            cost[i, j] = 1.0 - chrf(hyp_text, ref_text, chrf_config) / 100.0
    assignment = hungarian(cost)
    matches = tuple((hyp_ids[i], ref_ids[j]) for i, j in assignment)
    matched_hyp = {i for i, _ in assignment}
    matched_ref = {j for _, j in assignment}
    unmatched_hyp = tuple(nid for i, nid in enumerate(hyp_ids) if i not in matched_hyp)
    unmatched_ref = tuple(nid for j, nid in enumerate(ref_ids) if j not in matched_ref)
    mismatched = sum(
        1 for h, r in matches if hyp.nodes[h].tag != ref.nodes[r].tag
    )
    edit_count = (
        len(unmatched_hyp) + len(unmatched_ref) + TAG_MISMATCH_EDIT * mismatched
    )
    return OptimalAlignment(
        hyp=hyp,
        ref=ref,
        matches=matches,
        unmatched_hyp=unmatched_hyp,
        unmatched_ref=unmatched_ref,
        edit_count=edit_count,
    )

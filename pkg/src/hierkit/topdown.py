"""Top-down class selection: breadth-first, image-count ordered, budgeted.

Starting below the root, each tree layer is sorted by subtree-inclusive image
count (ties broken by synset id) and every class holding at least t_t images
is selected until the class budget is reached. Images are then assigned to
the nearest selected ancestor-or-self, so a selected class keeps descendant
images unless a deeper selected class captures them first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ContractViolation
from .labelmap import LabelMap, from_members
from .taxonomy import SynsetId, Taxonomy, subtree_counts


@dataclass(frozen=True)
class TopDownConfig:
    t_t: int
    budget: int

    def __post_init__(self) -> None:
        if self.t_t < 0:
            raise ContractViolation(f"t_t must be >= 0, got {self.t_t}")
        if self.budget < 1:
            raise ContractViolation(f"budget must be >= 1, got {self.budget}")


@dataclass
class SelectionResult:
    selected: list[SynsetId]
    subtree_count: dict[SynsetId, int]
    effective_count: dict[SynsetId, int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def top_down_select(
    taxonomy: Taxonomy, config: TopDownConfig
) -> SelectionResult:
    """Pick up to ``budget`` classes layer by layer from the top.

    The root itself is never a candidate; selection starts with its
    children. Within a layer candidates are visited by descending
    subtree-inclusive count, then ascending id. Fewer than ``budget``
    classes come back when the taxonomy cannot supply them.
    """
    sums = subtree_counts(taxonomy)
    selected: list[SynsetId] = []
    layer = [taxonomy.root]
    while layer and len(selected) < config.budget:
        next_layer: list[SynsetId] = []
        for node_id in layer:
            next_layer.extend(taxonomy.nodes[node_id].children)
        next_layer.sort(key=lambda n: (-sums[n], n))
        for node_id in next_layer:
            if len(selected) >= config.budget:
                break
            if sums[node_id] >= config.t_t:
                selected.append(node_id)
        layer = next_layer
    return SelectionResult(selected=selected, subtree_count=sums)


def assign_to_selected(
    taxonomy: Taxonomy,
    selected: list[SynsetId],
    t_t: int | None = None,
    provenance: str = "",
) -> tuple[LabelMap, dict[SynsetId, int], list[str]]:
    """Route every synset's direct images to its nearest selected ancestor.

    Synsets with no selected ancestor-or-self contribute to the unassigned
    pool. Returns the label map, the per-class effective counts, and
    warnings for classes left short of t_t after assignment (reported,
    never repaired).
    """
    if not selected:
        raise ContractViolation("selected class list is empty")
    selected_set = set(selected)
    for node_id in selected:
        if node_id not in taxonomy.nodes:
            raise ContractViolation(f"unknown synset id: {node_id!r}")

    # single top-down sweep carrying the nearest selected ancestor-or-self
    nearest: dict[SynsetId, SynsetId | None] = {}
    stack: list[tuple[SynsetId, SynsetId | None]] = [(taxonomy.root, None)]
    while stack:
        node_id, inherited = stack.pop()
        owner = node_id if node_id in selected_set else inherited
        nearest[node_id] = owner
        for child in taxonomy.nodes[node_id].children:
            stack.append((child, owner))

    members: dict[SynsetId, set[SynsetId]] = {s: set() for s in selected_set}
    unassigned: list[tuple[SynsetId, int]] = []
    effective: dict[SynsetId, int] = {s: 0 for s in selected_set}
    for node_id, node in taxonomy.nodes.items():
        owner = nearest[node_id]
        if owner is None:
            if node.direct_count > 0:
                unassigned.append((node_id, node.direct_count))
        else:
            members[owner].add(node_id)
            effective[owner] += node.direct_count

    warnings = []
    if t_t is not None:
        warnings = [
            f"class {s}: effective count {effective[s]} < t_t={t_t}"
            for s in sorted(selected_set)
            if effective[s] < t_t
        ]
    label_map = from_members(members, effective, unassigned, provenance)
    return label_map, effective, warnings


def top_down_pipeline(
    taxonomy: Taxonomy, config: TopDownConfig
) -> tuple[LabelMap, SelectionResult]:
    """Selection followed by nearest-ancestor image assignment."""
    result = top_down_select(taxonomy, config)
    provenance = f"topdown t_t={config.t_t} budget={config.budget}"
    if not result.selected:
        # nothing eligible: every image stays out of training
        unassigned = sorted(
            (node_id, node.direct_count)
            for node_id, node in taxonomy.nodes.items()
            if node.direct_count > 0
        )
        return LabelMap(classes=[], unassigned=unassigned,
                        provenance=provenance), result
    label_map, effective, warnings = assign_to_selected(
        taxonomy, result.selected, t_t=config.t_t, provenance=provenance
    )
    result.effective_count = effective
    result.warnings = warnings
    return label_map, result

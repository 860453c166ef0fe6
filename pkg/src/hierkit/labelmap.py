"""Label maps: merged training classes and their synset membership.

Both reorganization routes produce the same artifact: a list of training
classes, each backed by a disjoint set of original synsets, plus the images
that were dropped from training. The on-disk format is line oriented:

    # hierkit-labelmap v1 <provenance>
    <class_id>\\t<representative_synset>\\t<assigned_count>\\t<members,...>
    ...
    #UNASSIGNED
    <synset>\\t<count>
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ParseError
from .taxonomy import SynsetId

_HEADER_PREFIX = "# hierkit-labelmap v1"


@dataclass(frozen=True)
class LabelClass:
    class_id: int
    representative: SynsetId
    members: tuple[SynsetId, ...]
    assigned_count: int


@dataclass
class LabelMap:
    classes: list[LabelClass]
    unassigned: list[tuple[SynsetId, int]] = field(default_factory=list)
    provenance: str = ""

    def total_assigned(self) -> int:
        return sum(c.assigned_count for c in self.classes)

    def total_unassigned(self) -> int:
        return sum(count for _, count in self.unassigned)

    def class_of_synset(self) -> dict[SynsetId, int]:
        out: dict[SynsetId, int] = {}
        for cls in self.classes:
            for member in cls.members:
                out[member] = cls.class_id
        return out


def from_members(
    members: dict[SynsetId, set[SynsetId]],
    assigned_counts: dict[SynsetId, int],
    unassigned: list[tuple[SynsetId, int]],
    provenance: str,
) -> LabelMap:
    """Assign consecutive class ids to survivors, sorted by representative."""
    classes = [
        LabelClass(
            class_id=class_id,
            representative=rep,
            members=tuple(sorted(members[rep])),
            assigned_count=assigned_counts[rep],
        )
        for class_id, rep in enumerate(sorted(members))
    ]
    return LabelMap(
        classes=classes,
        unassigned=sorted(unassigned),
        provenance=provenance,
    )


def write_label_map(label_map: LabelMap) -> str:
    lines = [f"{_HEADER_PREFIX} {label_map.provenance}".rstrip()]
    for cls in label_map.classes:
        lines.append(
            f"{cls.class_id}\t{cls.representative}\t{cls.assigned_count}\t"
            + ",".join(cls.members)
        )
    lines.append("#UNASSIGNED")
    for synset, count in label_map.unassigned:
        lines.append(f"{synset}\t{count}")
    return "\n".join(lines) + "\n"


def read_label_map(text: str) -> LabelMap:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(_HEADER_PREFIX):
        raise ParseError("missing label-map header", line=1)
    provenance = lines[0][len(_HEADER_PREFIX):].strip()
    classes: list[LabelClass] = []
    unassigned: list[tuple[SynsetId, int]] = []
    in_unassigned = False
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        if line == "#UNASSIGNED":
            in_unassigned = True
            continue
        if line.startswith("#"):
            continue
        fields = line.split("\t")
        if in_unassigned:
            if len(fields) != 2:
                raise ParseError(
                    f"expected 'synset<TAB>count', got {raw!r}", line=lineno
                )
            try:
                unassigned.append((fields[0], int(fields[1])))
            except ValueError:
                raise ParseError(
                    f"non-numeric count {fields[1]!r}", line=lineno
                ) from None
        else:
            if len(fields) != 4:
                raise ParseError(
                    "expected 'class_id<TAB>representative<TAB>count<TAB>"
                    f"members', got {raw!r}",
                    line=lineno,
                )
            try:
                class_id = int(fields[0])
                count = int(fields[2])
            except ValueError:
                raise ParseError(
                    f"non-numeric field in {raw!r}", line=lineno
                ) from None
            members = tuple(m for m in fields[3].split(",") if m)
            classes.append(
                LabelClass(
                    class_id=class_id,
                    representative=fields[1],
                    members=members,
                    assigned_count=count,
                )
            )
    return LabelMap(classes=classes, unassigned=unassigned, provenance=provenance)

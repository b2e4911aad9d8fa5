"""Structural description of the combined model and its coordinate layout."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

HOMOGENEOUS = "homogeneous"
STRATIFIED = "stratified"
CLUSTERED = "clustered"


def natural_key(label) -> tuple:
    """Sort key that orders ``c2`` before ``c10``."""
    parts = re.split(r"(\d+)", str(label))
    return tuple((0, int(p)) if p.isdigit() else (1, p) for p in parts if p != "")


@dataclass(frozen=True)
class StructureSpec:
    """How local parameters map onto the combined model.

    ``specific`` lists local coordinates that are not shared: they get one
    copy per center (``stratified``) or per cluster (``clustered``).
    """

    mode: str = HOMOGENEOUS
    specific: tuple[int, ...] = ()
    cluster_of_center: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in (HOMOGENEOUS, STRATIFIED, CLUSTERED):
            raise ValueError(f"unknown combine mode {self.mode!r}")
        spec = tuple(sorted({int(i) for i in self.specific}))
        object.__setattr__(self, "specific", spec)
        object.__setattr__(self, "cluster_of_center", {str(k): v for k, v in dict(self.cluster_of_center).items()})
        if self.mode == HOMOGENEOUS and spec:
            raise ValueError("homogeneous structure cannot have specific coordinates")
        if self.mode == CLUSTERED and not self.cluster_of_center:
            raise ValueError("clustered structure needs a center -> cluster map")

    @classmethod
    def homogeneous(cls) -> StructureSpec:
        return cls(HOMOGENEOUS)

    @classmethod
    def stratified(cls, coords) -> StructureSpec:
        return cls(STRATIFIED, tuple(coords))

    @classmethod
    def clustered(cls, cluster_of_center, coords=(0,)) -> StructureSpec:
        return cls(CLUSTERED, tuple(coords), dict(cluster_of_center))

    def group_of(self, center_id):
        """Group label of a center (None when nothing is group-specific)."""
        if not self.specific:
            return None
        if self.mode == STRATIFIED:
            return str(center_id)
        try:
            return self.cluster_of_center[str(center_id)]
        except KeyError:
            raise KeyError(f"center {center_id!r} has no cluster label") from None

    def cluster_labels(self) -> list:
        return sorted(set(self.cluster_of_center.values()), key=natural_key)


@dataclass(frozen=True)
class CombinedLayout:
    """Coordinate order of a combined estimate.

    Shared coordinates come first in local order, followed by the specific
    coordinates of each group in ascending group label order.
    """

    local_names: tuple[str, ...]
    shared: tuple[int, ...]
    specific: tuple[int, ...]
    groups: tuple = ()

    @property
    def dim(self) -> int:
        return len(self.shared) + len(self.groups) * len(self.specific)

    def names(self) -> list[str]:
        out = [self.local_names[i] for i in self.shared]
        for g in self.groups:
            out += [f"{self.local_names[i]}[{g}]" for i in self.specific]
        return out

    @classmethod
    def build(cls, local_names, structure: StructureSpec, center_ids=()) -> CombinedLayout:
        """Layout for ``structure``; stratified groups are the given centers."""
        specific = structure.specific
        shared = tuple(i for i in range(len(local_names)) if i not in specific)
        if not specific:
            groups = ()
        elif structure.mode == CLUSTERED:
            groups = tuple(structure.cluster_labels())
        else:
            groups = tuple(sorted({str(c) for c in center_ids}, key=natural_key))
        return cls(tuple(local_names), shared, specific, groups)

    def group_slice(self, g) -> slice:
        pos = self.groups.index(g)
        s = len(self.specific)
        start = len(self.shared) + pos * s
        return slice(start, start + s)

    def local_to_combined(self, g) -> list[int]:
        """Combined index of every local coordinate for a center in group ``g``."""
        out = [0] * len(self.local_names)
        for k, i in enumerate(self.shared):
            out[i] = k
        if self.specific:
            start = self.group_slice(g).start
            for k, i in enumerate(self.specific):
                out[i] = start + k
        return out

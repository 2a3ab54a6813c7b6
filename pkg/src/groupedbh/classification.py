"""Group structures over a set of hypotheses.

A study has N hypotheses indexed 0..N-1. A :class:`HierTree` organizes them
into nested levels of groups; sibling groups at any level must jointly cover
their parent but are allowed to overlap. A :class:`ClassificationForest`
holds S such trees over the same index set, one per simultaneous
classification criterion. Depth-0 trees (a single root group) and forests of
depth-1 trees recover the unclassified and S-way special cases.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


def _as_index_array(members) -> np.ndarray:
    arr = np.unique(np.asarray(list(members) if not isinstance(members, np.ndarray) else members, dtype=np.int64))
    return arr


@dataclass(eq=False)
class GroupNode:
    """One group in a hierarchy.

    ``path`` is the positional lineage (g1, ..., gl), 1-based within each
    parent; the root has the empty path. ``members`` is a sorted array of
    hypothesis indices.
    """

    path: tuple[int, ...]
    members: np.ndarray
    children: tuple["GroupNode", ...] = ()

    def __post_init__(self):
        self.members = _as_index_array(self.members)
        self.children = tuple(self.children)

    @property
    def level(self) -> int:
        return len(self.path)

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(eq=False)
class HierTree:
    """A hierarchy of groups over indices 0..n-1.

    All leaves sit at the same depth; depth 0 means the root is the only
    group. Hypotheses may belong to several sibling groups (overlap), but
    every hypothesis must be covered at every level.
    """

    n: int
    root: GroupNode

    @property
    def depth(self) -> int:
        d = 0
        node = self.root
        while node.children:
            node = node.children[0]
            d += 1
        return d

    def nodes_at_level(self, level: int) -> list[GroupNode]:
        out = [self.root]
        for _ in range(level):
            out = [c for node in out for c in node.children]
        return out

    @property
    def leaves(self) -> list[GroupNode]:
        return self.nodes_at_level(self.depth)


@dataclass(eq=False)
class ClassificationForest:
    """S simultaneous hierarchies over one index universe."""

    n: int
    trees: tuple[HierTree, ...]

    def __post_init__(self):
        self.trees = tuple(self.trees)

    @property
    def s_count(self) -> int:
        return len(self.trees)


def flat_tree(n: int) -> HierTree:
    """Depth-0 tree: one root group over all n indices."""
    return HierTree(n=n, root=GroupNode(path=(), members=np.arange(n)))


def tree_from_levels(n: int, levels: list[list[tuple[tuple[int, ...], np.ndarray]]]) -> HierTree:
    """Build a tree from explicit (path, members) pairs, one list per level.

    Paths are 1-based positional lineages; every group's parent path must
    appear at the previous level. Overlapping siblings are allowed, and the
    same member set may appear under several parents (distinct paths).
    """
    root = GroupNode(path=(), members=np.arange(n))
    by_path: dict[tuple[int, ...], GroupNode] = {(): root}
    for level_groups in levels:
        new_kids: dict[tuple[int, ...], list[GroupNode]] = {}
        for path, members in level_groups:
            path = tuple(int(v) for v in path)
            parent_path = path[:-1]
            if parent_path not in by_path:
                raise ValueError(f"group {path} has no parent {parent_path}")
            node = GroupNode(path=path, members=members)
            by_path[path] = node
            new_kids.setdefault(parent_path, []).append(node)
        for parent_path, nodes in new_kids.items():
            by_path[parent_path].children = tuple(sorted(nodes, key=lambda nd: nd.path))
    return HierTree(n=n, root=root)


def tree_from_groups(n: int, levels: list[list[np.ndarray]]) -> HierTree:
    """Build a tree from per-level member lists.

    Parentage is inferred by set containment: each group becomes a child of
    the first group at the previous level that contains all of its members.
    Use :func:`tree_from_levels` when a group must hang under several
    overlapping parents.
    """
    root = GroupNode(path=(), members=np.arange(n))
    current = [root]
    for level_groups in levels:
        assigned: dict[int, list[np.ndarray]] = {i: [] for i in range(len(current))}
        for mem in level_groups:
            mem = _as_index_array(mem)
            placed = False
            for i, parent in enumerate(current):
                if np.isin(mem, parent.members).all():
                    assigned[i].append(mem)
                    placed = True
                    break
            if not placed:
                raise ValueError("group does not fit inside any parent at the previous level")
        next_nodes = []
        for i, parent in enumerate(current):
            kids = tuple(
                GroupNode(path=parent.path + (j + 1,), members=mem)
                for j, mem in enumerate(assigned[i])
            )
            parent.children = kids
            next_nodes.extend(kids)
        current = next_nodes
    return HierTree(n=n, root=root)


def forest_from_grid(shape: tuple[int, ...]) -> ClassificationForest:
    """S-way forest for hypotheses laid out on a full S-dimensional grid.

    Index i maps to grid cell np.unravel_index(i, shape); tree s groups the
    cells by their s-th coordinate (a depth-1 partition).
    """
    n = int(np.prod(shape))
    coords = np.unravel_index(np.arange(n), shape)
    trees = []
    for s, size in enumerate(shape):
        groups = [np.flatnonzero(coords[s] == g) for g in range(size)]
        trees.append(tree_from_groups(n, [groups]))
    return ClassificationForest(n=n, trees=tuple(trees))


# ---------------------------------------------------------------------------
# validation


def validate_tree(tree: HierTree) -> list[str]:
    """Structural invariant check; returns a list of violations (empty = ok)."""
    violations = []
    n = tree.n
    root = tree.root
    if root.members.size != n or (root.members != np.arange(n)).any():
        violations.append(f"root members must be exactly 0..{n - 1}")
    depths = set()

    def visit(node: GroupNode, depth: int):
        if node.members.size == 0:
            violations.append(f"empty group at path {node.path}")
        if node.members.size and (node.members[0] < 0 or node.members[-1] >= n):
            violations.append(f"index out of range [0, {n}) at path {node.path}")
        if not node.children:
            depths.add(depth)
            return
        union = np.unique(np.concatenate([c.members for c in node.children]))
        for c in node.children:
            if not np.isin(c.members, node.members).all():
                violations.append(f"child {c.path} not contained in parent {node.path}")
        if union.size != node.members.size or (union != node.members).any():
            violations.append(f"children of {node.path} do not cover the parent")
        for c in node.children:
            visit(c, depth + 1)

    visit(root, 0)
    if len(depths) > 1:
        violations.append(f"leaves at unequal depths: {sorted(depths)}")
    return violations


def validate_forest(forest: ClassificationForest) -> list[str]:
    """Validate every tree; all trees must share the same index universe."""
    violations = []
    if forest.s_count < 1:
        violations.append("forest must contain at least one tree")
    for s, tree in enumerate(forest.trees):
        if tree.n != forest.n:
            violations.append(f"tree {s} has n={tree.n}, forest has n={forest.n}")
        violations.extend(f"tree {s}: {v}" for v in validate_tree(tree))
    return violations


# ---------------------------------------------------------------------------
# derived quantities


def group_stats(node: GroupNode, is_null: np.ndarray) -> tuple[int, int, float]:
    """(size, null count, null proportion) of a group under known truth."""
    is_null = np.asarray(is_null, dtype=bool)
    n = int(node.members.size)
    n0 = int(is_null[node.members].sum())
    return n, n0, n0 / n


def leaf_memberships(forest: ClassificationForest, i: int) -> list[list[tuple[int, ...]]]:
    """Per-tree list of leaf paths whose member set contains index i."""
    if not 0 <= i < forest.n:
        raise IndexError(f"hypothesis index {i} out of range [0, {forest.n})")
    out = []
    for tree in forest.trees:
        paths = [leaf.path for leaf in tree.leaves if np.isin(i, leaf.members)]
        out.append(paths)
    return out


# ---------------------------------------------------------------------------
# JSON round trip
#
# Schema: {"n": int, "trees": [{"levels": [[{"path": [...], "members": [...]}]]}]}
# A members entry is either a plain index or a two-element [start, stop)
# run; runs of three or more consecutive indices are compressed on save.


def _encode_members(members: np.ndarray) -> list:
    out = []
    i = 0
    m = members
    while i < m.size:
        j = i
        while j + 1 < m.size and m[j + 1] == m[j] + 1:
            j += 1
        if j - i >= 2:
            out.append([int(m[i]), int(m[j]) + 1])
        else:
            out.extend(int(v) for v in m[i : j + 1])
        i = j + 1
    return out


def _decode_members(encoded: list) -> np.ndarray:
    parts = []
    for item in encoded:
        if isinstance(item, list):
            start, stop = item
            parts.append(np.arange(start, stop, dtype=np.int64))
        else:
            parts.append(np.array([item], dtype=np.int64))
    if not parts:
        return np.array([], dtype=np.int64)
    return np.unique(np.concatenate(parts))


def forest_to_dict(forest: ClassificationForest) -> dict:
    trees = []
    for tree in forest.trees:
        levels = []
        for level in range(1, tree.depth + 1):
            levels.append(
                [
                    {"path": list(node.path), "members": _encode_members(node.members)}
                    for node in tree.nodes_at_level(level)
                ]
            )
        trees.append({"levels": levels})
    return {"n": forest.n, "trees": trees}


def forest_from_dict(data: dict) -> ClassificationForest:
    n = int(data["n"])
    trees = []
    for tdata in data["trees"]:
        levels = [
            [(tuple(g["path"]), _decode_members(g["members"])) for g in level_groups]
            for level_groups in tdata["levels"]
        ]
        trees.append(tree_from_levels(n, levels))
    return ClassificationForest(n=n, trees=tuple(trees))


def save_forest(forest: ClassificationForest, path) -> None:
    with open(path, "w") as fh:
        json.dump(forest_to_dict(forest), fh, indent=1)
        fh.write("\n")


def load_forest(path) -> ClassificationForest:
    with open(path) as fh:
        return forest_from_dict(json.load(fh))

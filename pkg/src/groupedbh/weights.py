"""P-value weights for grouped Benjamini-Hochberg procedures.

Oracle weights assume the per-group null proportions are known and satisfy
the normalization sum over true nulls of 1/W_i = N exactly, which is what
makes the weighted step-up control FDR. Data-adaptive weights replace the
null counts with Storey-type estimates (n - R(lambda) + 1) / (1 - lambda).

Extended-real conventions for degenerate oracle groups: a group whose
members are all null gets effect +inf (its members are never rejected
through that lineage); a group with no nulls gets effect 0 (its members'
weighted p-values collapse to 0). A globally degenerate truth (all null or
none null) yields the constant weight 1.0 resp. 0.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classification import ClassificationForest, GroupNode, HierTree, group_stats


def _ratio(pi0: float) -> float:
    """pi0 / (1 - pi0) on the extended positive reals."""
    if pi0 >= 1.0:
        return math.inf
    return pi0 / (1.0 - pi0)


def _safe_div(a: float, b: float) -> float:
    """a / b with 0/0 -> 0 and x/0 -> inf, x/inf -> 0."""
    if a == 0.0:
        return 0.0
    if b == 0.0:
        return math.inf
    if math.isinf(b):
        return 0.0
    return a / b


# ---------------------------------------------------------------------------
# oracle weights


def oracle_flat_weights(is_null: np.ndarray) -> np.ndarray:
    """Constant weight pi0 = (#nulls)/N for every hypothesis."""
    is_null = np.asarray(is_null, dtype=bool)
    pi0 = is_null.mean()
    return np.full(is_null.size, pi0)


def oracle_overlap_oneway_weights(
    n: int,
    groups: list[np.ndarray],
    group_effects: np.ndarray,
    is_null: np.ndarray,
) -> np.ndarray:
    """Weights for one-way classification with overlapping groups.

    Any positive per-group effect w_g is admissible; the assembly
    renormalizes so that the sum of inverse weights over true nulls is N.
    """
    is_null = np.asarray(is_null, dtype=bool)
    group_effects = np.asarray(group_effects, dtype=float)
    if len(groups) != group_effects.size:
        raise ValueError("one effect per group required")
    if (group_effects <= 0).any() or not np.isfinite(group_effects).all():
        raise ValueError("group effects must be finite and positive")
    members = [np.asarray(g, dtype=np.int64) for g in groups]
    covered = np.zeros(n, dtype=bool)
    for mem in members:
        covered[mem] = True
    if not covered.all():
        raise ValueError("every hypothesis must belong to at least one group")
    n0_g = np.array([is_null[mem].sum() for mem in members], dtype=float)
    return _assemble(n, members, group_effects, n0_g)


def _assemble(
    n: int,
    leaf_members: list[np.ndarray],
    leaf_effects: np.ndarray,
    leaf_null_mass: np.ndarray,
) -> np.ndarray:
    """Turn per-leaf effects into per-hypothesis weights.

    W_i = A / sum_{leaves containing i} 1/w_leaf, where the normalizer
    A = (1/N) * sum_leaves (null mass)/w_leaf makes Condition 1 hold for
    the null mass used (exact counts for oracle, estimates for adaptive).
    """
    inv_sum = np.zeros(n)
    a_terms = []
    for mem, w, mass in zip(leaf_members, leaf_effects, leaf_null_mass):
        if w == 0.0:
            inv_sum[mem] = math.inf
        elif not math.isinf(w):
            inv_sum[mem] += 1.0 / w
        if mass > 0.0 and not math.isinf(w):
            a_terms.append(_safe_div(mass, w))
    norm = math.fsum(a_terms) / n
    weights = np.empty(n)
    zero = np.isinf(inv_sum)
    never = inv_sum == 0.0
    finite = ~zero & ~never
    weights[zero] = 0.0
    weights[never] = math.inf
    if math.isinf(norm):
        weights[finite] = math.inf
    else:
        weights[finite] = norm / inv_sum[finite]
    return weights


def oracle_hier_effects(
    tree: HierTree, is_null: np.ndarray, recursion: str = "forward"
) -> dict[tuple[int, ...], float]:
    """Per-node grouping effects w_{g1...gl} under known truth.

    ``recursion="forward"`` chains each level off its parent,
    w_l = pi0 (1 - pi0) r_l / w_{l-1} with r_l = pi0_l / (1 - pi0_l);
    ``recursion="alternate"`` uses the equivalent two-step form
    w_l = w_{l-2} * r_l / r_{l-1}. Both seed w at the root with the global
    null proportion.
    """
    if recursion not in ("forward", "alternate"):
        raise ValueError(f"unknown recursion {recursion!r}")
    is_null = np.asarray(is_null, dtype=bool)
    pi0 = float(is_null.mean())
    effects: dict[tuple[int, ...], float] = {(): pi0}
    ratios: dict[tuple[int, ...], float] = {}

    def visit(node: GroupNode):
        for child in node.children:
            _, _, pi0_c = group_stats(child, is_null)
            r = _ratio(pi0_c)
            ratios[child.path] = r
            if recursion == "forward":
                if r == 0.0:
                    w = 0.0
                elif math.isinf(r):
                    w = math.inf
                else:
                    w = pi0 * (1.0 - pi0) * _safe_div(r, effects[node.path])
            else:
                if len(child.path) == 1:
                    w = 0.0 if r == 0.0 else (1.0 - pi0) * r
                else:
                    w_gp = effects[node.path[:-1]]
                    r_parent = ratios[node.path]
                    if r == 0.0:
                        w = 0.0
                    elif math.isinf(r):
                        w = math.inf
                    else:
                        w = _safe_div(w_gp * r, r_parent) if not math.isinf(w_gp) else math.inf
            effects[child.path] = w
            visit(child)

    visit(tree.root)
    return effects


def oracle_hier_weights(
    tree: HierTree, is_null: np.ndarray, recursion: str = "forward"
) -> np.ndarray:
    """Hierarchically grouped oracle weights (overlap-aware)."""
    is_null = np.asarray(is_null, dtype=bool)
    pi0 = float(is_null.mean())
    if pi0 == 0.0 or pi0 == 1.0 or tree.depth == 0:
        return np.full(tree.n, pi0)
    effects = oracle_hier_effects(tree, is_null, recursion=recursion)
    leaves = tree.leaves
    members = [leaf.members for leaf in leaves]
    w = np.array([effects[leaf.path] for leaf in leaves])
    n0 = np.array([group_stats(leaf, is_null)[1] for leaf in leaves], dtype=float)
    return _assemble(tree.n, members, w, n0)


def _sway_marginal_effects(forest: ClassificationForest, is_null: np.ndarray) -> list[np.ndarray]:
    is_null = np.asarray(is_null, dtype=bool)
    pi0 = float(is_null.mean())
    per_tree = []
    for tree in forest.trees:
        if tree.depth != 1:
            raise ValueError("S-way weights need depth-1 trees; use the generalized form otherwise")
        effects = []
        for leaf in tree.leaves:
            _, _, pi0_g = group_stats(leaf, is_null)
            r = _ratio(pi0_g)
            effects.append(0.0 if r == 0.0 else (1.0 - pi0) * r)
        per_tree.append(np.array(effects))
    return per_tree


def oracle_sway_weights(forest: ClassificationForest, is_null: np.ndarray) -> np.ndarray:
    """Simultaneous S-way oracle weights: per-cell harmonic mean of the
    marginal group effects, each tree a non-overlapping partition."""
    is_null = np.asarray(is_null, dtype=bool)
    pi0 = float(is_null.mean())
    if pi0 == 0.0 or pi0 == 1.0:
        return np.full(forest.n, pi0)
    inv_acc = np.zeros(forest.n)
    for tree, effects in zip(forest.trees, _sway_marginal_effects(forest, is_null)):
        seen = np.zeros(forest.n, dtype=bool)
        for leaf, w in zip(tree.leaves, effects):
            if seen[leaf.members].any():
                raise ValueError("S-way trees must not have overlapping groups")
            seen[leaf.members] = True
            inv_acc[leaf.members] += _safe_div(1.0, w)
        if not seen.all():
            raise ValueError("every hypothesis must belong to a group in each tree")
    inv_mean = inv_acc / forest.s_count
    weights = np.empty(forest.n)
    weights[np.isinf(inv_mean)] = 0.0
    weights[inv_mean == 0.0] = math.inf
    ok = np.isfinite(inv_mean) & (inv_mean > 0.0)
    weights[ok] = 1.0 / inv_mean[ok]
    return weights


def oracle_gen_weights(
    forest: ClassificationForest, is_null: np.ndarray, recursion: str = "forward"
) -> np.ndarray:
    """Generalized oracle weights: harmonic mean over trees of the per-tree
    hierarchical weights."""
    is_null = np.asarray(is_null, dtype=bool)
    pi0 = float(is_null.mean())
    if pi0 == 0.0 or pi0 == 1.0:
        return np.full(forest.n, pi0)
    inv_acc = np.zeros(forest.n)
    for tree in forest.trees:
        w_tree = oracle_hier_weights(tree, is_null, recursion=recursion)
        with np.errstate(divide="ignore"):
            inv_acc += np.where(w_tree == 0.0, math.inf, 1.0 / w_tree)
    inv_mean = inv_acc / forest.s_count
    weights = np.empty(forest.n)
    weights[np.isinf(inv_mean)] = 0.0
    weights[inv_mean == 0.0] = math.inf
    ok = np.isfinite(inv_mean) & (inv_mean > 0.0)
    weights[ok] = 1.0 / inv_mean[ok]
    return weights


# ---------------------------------------------------------------------------
# data-adaptive weights


@dataclass(frozen=True)
class NullCountEstimate:
    """Storey-type null count estimate for one group of p-values."""

    lam: float
    r_lambda: int
    n_hat0: float


def storey_null_estimate(pvalues: np.ndarray, lam: float) -> NullCountEstimate:
    """n_hat0 = (n - R(lambda) + 1) / (1 - lambda); always positive."""
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    pvalues = np.asarray(pvalues, dtype=float)
    r = int(np.count_nonzero(pvalues <= lam))
    return NullCountEstimate(lam=lam, r_lambda=r, n_hat0=(pvalues.size - r + 1) / (1.0 - lam))


def da_flat_weights(pvalues: np.ndarray, lam: float) -> np.ndarray:
    """Adaptive BH weight: the flat Storey estimate of pi0 for every i."""
    pvalues = np.asarray(pvalues, dtype=float)
    est = storey_null_estimate(pvalues, lam)
    return np.full(pvalues.size, est.n_hat0 / pvalues.size)


def da_hier_effects(
    tree: HierTree,
    pvalues: np.ndarray,
    lam: float,
    ancestor_mode: str = "recursive",
) -> dict[tuple[int, ...], float]:
    """Estimated grouping effects w_hat along the tree.

    The chain is w_hat_{g1} = (n_hat0_{g1}/N) m_1 at level 1 and
    w_hat_l = w_hat_{l-2} * (n_hat0_l / n_hat0_{l-1}) * m_l deeper down,
    seeded at the root with the estimated pi0.

    ``ancestor_mode`` picks how internal-node null counts enter the chain:

    * ``"recursive"``: an ancestor's count is m_l times its descendant's,
      taken along each leaf's own lineage. This keeps every weight a
      non-decreasing function of every p-value, which is the hypothesis
      the adaptive FDR guarantee rests on.
    * ``"direct"``: every node's count is the Storey estimate over its own
      member p-values. This matches how the two-level brain-region example
      is usually computed, but with three or more level-1 groups a deep
      chain loses coordinate-wise monotonicity.
    """
    if ancestor_mode not in ("recursive", "direct"):
        raise ValueError(f"unknown ancestor_mode {ancestor_mode!r}")
    pvalues = np.asarray(pvalues, dtype=float)
    if pvalues.size != tree.n:
        raise ValueError("p-value vector length must equal the tree's n")
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")

    n = tree.n
    nhat_direct: dict[tuple[int, ...], float] = {}
    for node in tree.root.walk():
        nhat_direct[node.path] = storey_null_estimate(pvalues[node.members], lam).n_hat0

    effects: dict[tuple[int, ...], float] = {}

    if ancestor_mode == "direct":
        effects[()] = nhat_direct[()] / n

        def visit(node: GroupNode):
            m_l = len(node.children)
            for child in node.children:
                if child.level == 1:
                    w = (nhat_direct[child.path] / n) * m_l
                else:
                    w_gp = effects[node.path[:-1]]
                    w = w_gp * (nhat_direct[child.path] / nhat_direct[node.path]) * m_l
                effects[child.path] = w
                visit(child)

        visit(tree.root)
        return effects

    # recursive mode: chain each leaf's lineage with ancestor counts
    # n_hat0_{l-1} = m_l * n_hat0_l, which telescopes to
    # w_hat_leaf = n_hat0_leaf * (prod of branching factors) / N.
    effects[()] = nhat_direct[()] / n

    def visit_rec(node: GroupNode, mult: int):
        m_l = len(node.children)
        for child in node.children:
            effects[child.path] = nhat_direct[child.path] * mult * m_l / n
            visit_rec(child, mult * m_l)

    visit_rec(tree.root, 1)
    return effects


def da_hier_weights(
    tree: HierTree,
    pvalues: np.ndarray,
    lam: float,
    ancestor_mode: str = "recursive",
) -> np.ndarray:
    """Data-adaptive hierarchically grouped weights (overlap-aware)."""
    pvalues = np.asarray(pvalues, dtype=float)
    if tree.depth == 0:
        return da_flat_weights(pvalues, lam)
    effects = da_hier_effects(tree, pvalues, lam, ancestor_mode=ancestor_mode)
    leaves = tree.leaves
    members = [leaf.members for leaf in leaves]
    w = np.array([effects[leaf.path] for leaf in leaves])
    nhat0 = np.array(
        [storey_null_estimate(pvalues[leaf.members], lam).n_hat0 for leaf in leaves]
    )
    return _assemble(tree.n, members, w, nhat0)


def da_sway_weights(forest: ClassificationForest, pvalues: np.ndarray, lam: float) -> np.ndarray:
    """Data-adaptive S-way weights: harmonic mean over classifications of
    the estimated marginal effects."""
    pvalues = np.asarray(pvalues, dtype=float)
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    n = forest.n
    inv_acc = np.zeros(n)
    for tree in forest.trees:
        if tree.depth != 1:
            raise ValueError("S-way weights need depth-1 trees; use the generalized form otherwise")
        m_s = len(tree.leaves)
        seen = np.zeros(n, dtype=bool)
        for leaf in tree.leaves:
            if seen[leaf.members].any():
                raise ValueError("S-way trees must not have overlapping groups")
            seen[leaf.members] = True
            r = int(np.count_nonzero(pvalues[leaf.members] <= lam))
            w = (leaf.members.size - r + 1) / (n * (1.0 - lam)) * m_s
            inv_acc[leaf.members] += 1.0 / w
        if not seen.all():
            raise ValueError("every hypothesis must belong to a group in each tree")
    return forest.s_count / inv_acc


def da_gen_weights(
    forest: ClassificationForest,
    pvalues: np.ndarray,
    lam: float,
    ancestor_mode: str = "recursive",
) -> np.ndarray:
    """Data-adaptive generalized weights: harmonic mean over trees of the
    per-tree hierarchical weights."""
    pvalues = np.asarray(pvalues, dtype=float)
    inv_acc = np.zeros(forest.n)
    for tree in forest.trees:
        inv_acc += 1.0 / da_hier_weights(tree, pvalues, lam, ancestor_mode=ancestor_mode)
    return forest.s_count / inv_acc

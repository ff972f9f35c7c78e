"""Interval trees and nesting trees over level-set contours.

Two constructions classify a signal by the topology of its level contours:

* the ordered interval tree ('tw'): arches are processed from the coarsest
  apex down; each arch splits the region cell containing its apex into
  left-of-arch / inside-arch / right-of-arch children, in that fixed
  x-order.  Every internal node has exactly three children.
* the nesting tree ('tt'): a virtual root over the minimal-encloser
  forest; children are canonically ordered, so equality means unordered
  rooted-tree isomorphism (insensitive to mirror reflection).

Equality of either kind is equality of the parenthesis canonical encoding;
node annotations (apex coordinates, contour ids) are metadata and excluded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .contours import Contour, NestingForest, branch_positions
from .errors import TreeStructureError


@dataclass
class TreeNode:
    children: list = dataclass_field(default_factory=list)
    annotation: dict = dataclass_field(default_factory=dict)

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class ScaleTree:
    kind: str                   # 'tw' | 'tt'
    root: TreeNode

    def __post_init__(self):
        if self.kind not in ("tw", "tt"):
            raise TreeStructureError(f"unknown tree kind {self.kind!r}")


def canonical_encode(tree: ScaleTree) -> str:
    """Parenthesis encoding; 'tw' preserves child order, 'tt' sorts it."""
    ordered = tree.kind == "tw"

    def enc(node: TreeNode) -> str:
        parts = [enc(c) for c in node.children]
        if not ordered:
            parts.sort()
        return "(" + "".join(parts) + ")"

    return enc(tree.root)


def trees_equal(a: ScaleTree, b: ScaleTree) -> bool:
    if a.kind != b.kind:
        raise TreeStructureError(f"cannot compare {a.kind!r} with {b.kind!r}")
    return canonical_encode(a) == canonical_encode(b)


def _apex_tie_tolerance(arches: list) -> float:
    top = max(c.apex_rho for c in arches)
    return 1e-9 * max(top, 1e-30)


def _signal_first(c: Contour) -> np.ndarray:
    return c.points if c.ends[0] == "signal" else c.points[::-1]


def _pair_truncated(arches: list) -> list:
    """Merge grid-truncated branches into whole arches where possible.

    A component entering the coarsest row is one branch of an arch whose
    apex lies below the computed range.  A single such branch acts as a
    degenerate arch of its own; exactly two of them are the left and right
    branches of one arch truncated by the bottom row and are fused into a
    virtual arch with its apex placed on that row.  Three or more leave the
    hierarchy genuinely ambiguous.
    """
    cut = [c for c in arches if c.truncated]
    if len(cut) <= 1:
        return arches
    if len(cut) > 2:
        raise TreeStructureError(
            f"{len(cut)} contours are truncated by the coarsest row; their "
            "merge order is unknowable -- extend the grid to smaller "
            "bandwidths")
    rest = [c for c in arches if not c.truncated]
    a, b = sorted(cut, key=lambda c: c.points[np.argmin(c.points[:, 1]), 0])
    left = _signal_first(a)          # signal row down to the coarse row
    right = _signal_first(b)[::-1]   # coarse row back up to the signal row
    pts = np.vstack([left, right])
    rho_min = float(min(left[-1, 1], right[0, 1]))
    apex = ((float(left[-1, 0]) + float(right[0, 0])) / 2.0, rho_min)
    virtual = Contour(
        id=min(a.id, b.id), points=pts, kind="arch", level=a.level,
        apex=apex, feet=(float(left[0, 0]), float(right[-1, 0])),
        truncated=True, ends=("signal", "signal"))
    return rest + [virtual]


def build_tw(contours: list) -> ScaleTree:
    """Ordered trinary interval tree from the arches of one level set.

    Arches are inserted in order of increasing apex bandwidth (coarsest
    merge scale first, the most smoothing-persistent structure).  The apex
    of each later arch lies at a finer bandwidth, so it falls into exactly
    one region cell of the current subdivision; that cell gains three
    children ordered left / inside / right.

    Raises TreeStructureError on loops (use the nesting tree), on
    non-causal components with both endpoints on the coarse boundary, and
    on apex ties beyond the snap tolerance (degenerate input; perturb).
    """
    arches = []
    for c in contours:
        if c.kind == "loop":
            raise TreeStructureError(
                f"contour {c.id} is a loop; the interval tree is defined on "
                "arches only -- build the nesting tree instead")
        if c.ends.count("signal") == 0:
            raise TreeStructureError(
                f"contour {c.id} never reaches the signal-side boundary "
                "(non-causal geometry)")
        arches.append(c)

    root = TreeNode()
    if not arches:
        return ScaleTree(kind="tw", root=root)

    arches = _pair_truncated(arches)
    tol = _apex_tie_tolerance(arches)
    order = sorted(arches, key=lambda c: (c.apex_rho, c.apex_x))
    for prev, nxt in zip(order, order[1:]):
        if abs(nxt.apex_rho - prev.apex_rho) <= tol:
            raise TreeStructureError(
                f"contours {prev.id} and {nxt.id} have tied apex bandwidths "
                f"({prev.apex_rho!r} vs {nxt.apex_rho!r}); hierarchy is "
                "ambiguous -- perturb the input or extend the grid")

    region_arch = {id(root): None}
    for arch in order:
        node = root
        while not node.is_leaf:
            owner = region_arch[id(node)]
            xs = branch_positions(owner, arch.apex_rho)
            if xs.size == 0:
                # apex above the owner's span; fall back to foot interval
                xs = sorted(owner.feet) if owner.feet else [owner.apex_x]
            lo, hi = xs[0], xs[-1]
            if arch.apex_x <= lo:
                node = node.children[0]
            elif arch.apex_x >= hi:
                node = node.children[2]
            else:
                node = node.children[1]
        node.annotation = {"contour": arch.id, "apex_x": arch.apex_x,
                           "apex_rho": arch.apex_rho}
        node.children = [TreeNode(), TreeNode(), TreeNode()]
        region_arch[id(node)] = arch
        for child in node.children:
            region_arch[id(child)] = None
    return ScaleTree(kind="tw", root=root)


def build_tt(forest: NestingForest) -> ScaleTree:
    """Nesting tree: virtual root, one node per contour, canonical order."""
    by_id = {c.id: c for c in forest.contours}

    def make(cid: int) -> TreeNode:
        c = by_id[cid]
        node = TreeNode(annotation={"contour": cid, "apex_x": c.apex_x,
                                    "apex_rho": c.apex_rho, "kind": c.kind})
        node.children = [make(k) for k in forest.children.get(cid, [])]
        _sort_canonically(node)
        return node

    root = TreeNode()
    root.children = [make(cid) for cid in forest.roots]
    _sort_canonically(root)
    return ScaleTree(kind="tt", root=root)


def _sort_canonically(node: TreeNode) -> None:
    enc_cache = {}

    def enc(n: TreeNode) -> str:
        key = id(n)
        if key not in enc_cache:
            enc_cache[key] = "(" + "".join(sorted(enc(c) for c in n.children)) + ")"
        return enc_cache[key]

    node.children.sort(key=enc)


def tree_to_dict(tree: ScaleTree) -> dict:
    def conv(node: TreeNode) -> dict:
        out = {"children": [conv(c) for c in node.children]}
        if node.annotation:
            out["annotation"] = node.annotation
        return out

    return {"kind": tree.kind, "encoding": canonical_encode(tree),
            "root": conv(tree.root)}


def tree_to_json(tree: ScaleTree, indent: int = 2) -> str:
    return json.dumps(tree_to_dict(tree), indent=indent, sort_keys=True)


def tree_to_dot(tree: ScaleTree) -> str:
    """Graphviz rendering with apex annotations as labels."""
    lines = [f"digraph {tree.kind} {{", "  node [shape=circle];"]
    counter = [0]

    def visit(node: TreeNode) -> int:
        idx = counter[0]
        counter[0] += 1
        ann = node.annotation
        if ann:
            label = f"c{ann.get('contour', '?')}\\nrho={ann.get('apex_rho', 0):.4g}"
        else:
            label = ""
        lines.append(f'  n{idx} [label="{label}"];')
        for child in node.children:
            cidx = visit(child)
            lines.append(f"  n{idx} -> n{cidx};")
        return idx

    visit(tree.root)
    lines.append("}")
    return "\n".join(lines) + "\n"

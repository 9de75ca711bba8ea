"""Full binary trees, their Horton-Strahler orders and branch counts.

Trees are stored as an index arena: ``children[i]`` is ``None`` for a leaf
or an ordered ``(left, right)`` pair of node indices.  Left and right are
distinguished, so a tree and its mirror image are different elements of
the tree space of magnitude ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import DomainError, StructureError

ENUMERATION_CAP = 12

Children = Optional[tuple[int, int]]


def catalan(k: int) -> int:
    return comb(2 * k, k) // (k + 1)


def count_trees(n: int) -> int:
    """Number of full binary trees with ``n`` leaves (Catalan(n - 1))."""
    if n < 1:
        raise DomainError(f"magnitude must be >= 1, got {n}")
    return catalan(n - 1)


@dataclass(frozen=True)
class Tree:
    children: tuple[Children, ...]
    root: int = 0

    def __post_init__(self) -> None:
        _check_structure(self.children, self.root)

    @property
    def magnitude(self) -> int:
        return sum(1 for c in self.children if c is None)

    def __len__(self) -> int:
        return len(self.children)

    def to_parens(self) -> str:
        out: list[str] = []
        stack: list[object] = [self.root]
        while stack:
            item = stack.pop()
            if item == ")":
                out.append(")")
                continue
            c = self.children[item]  # type: ignore[index]
            out.append("(")
            if c is None:
                out.append(")")
            else:
                stack.extend((")", c[1], c[0]))
        return "".join(out)

    @classmethod
    def from_parens(cls, text: str) -> "Tree":
        return _tree_from_parens(text.strip())

    @classmethod
    def leaf(cls) -> "Tree":
        return cls(children=(None,), root=0)

    def __str__(self) -> str:
        return self.to_parens()


def _check_structure(children: Sequence[Children], root: int) -> None:
    size = len(children)
    if size == 0:
        raise StructureError("tree has no nodes")
    if not 0 <= root < size:
        raise StructureError(f"root index {root} out of range")
    parents = [-1] * size
    for i, c in enumerate(children):
        if c is None:
            continue
        if len(c) != 2:
            raise StructureError(f"node {i} must have 0 or 2 children")
        for ch in c:
            if not 0 <= ch < size:
                raise StructureError(f"node {i} has child index {ch} out of range")
            if ch == root:
                raise StructureError("root cannot be a child")
            if parents[ch] != -1:
                raise StructureError(f"node {ch} has more than one parent")
            parents[ch] = i
    # every non-root node has a parent; reachability from root rules out cycles
    seen = 0
    stack = [root]
    while stack:
        v = stack.pop()
        seen += 1
        c = children[v]
        if c is not None:
            stack.extend(c)
        if seen > size:
            raise StructureError("child links contain a cycle")
    if seen != size:
        raise StructureError("child links do not form a single tree")


def _tree_from_parens(text: str) -> Tree:
    # each "(" opens a node; a node closed with no children is a leaf
    children: list[list[int]] = []
    stack: list[int] = []
    root = -1
    for pos, ch in enumerate(text):
        if ch == "(":
            idx = len(children)
            children.append([])
            if stack:
                children[stack[-1]].append(idx)
            elif root == -1:
                root = idx
            else:
                raise StructureError(f"trailing content at position {pos}")
            stack.append(idx)
        elif ch == ")":
            if not stack:
                raise StructureError(f"unbalanced ')' at position {pos}")
            stack.pop()
        else:
            raise StructureError(f"unexpected character {ch!r} at position {pos}")
    if stack or root == -1:
        raise StructureError("unbalanced or empty tree string")
    for i, c in enumerate(children):
        if len(c) not in (0, 2):
            raise StructureError(f"node {i} has {len(c)} children")
    return Tree(tuple(None if not c else (c[0], c[1]) for c in children), root)


# nested form: None is a leaf, a pair is an internal node
def _nested_to_tree(nested: object) -> Tree:
    children: list[Children] = []

    def build(node: object) -> int:
        idx = len(children)
        children.append(None)
        if node is not None:
            left, right = node  # type: ignore[misc]
            li = build(left)
            ri = build(right)
            children[idx] = (li, ri)
        return idx

    build(nested)
    return Tree(tuple(children), 0)


@lru_cache(maxsize=None)
def _nested_shapes(n: int) -> tuple[object, ...]:
    if n == 1:
        return (None,)
    out: list[object] = []
    for a in range(1, n):
        for left in _nested_shapes(a):
            for right in _nested_shapes(n - a):
                out.append((left, right))
    return tuple(out)


def enumerate_trees(n: int, cap: int = ENUMERATION_CAP) -> list[Tree]:
    """All full binary trees with ``n`` leaves, left magnitude ascending."""
    if n < 1 or n > cap:
        raise DomainError(f"enumeration requires 1 <= n <= {cap}, got {n}")
    return [_nested_to_tree(s) for s in _nested_shapes(n)]


def iter_tree_strings(n: int, cap: int = ENUMERATION_CAP) -> Iterator[str]:
    for tree in enumerate_trees(n, cap):
        yield tree.to_parens()


def remy_steps(n: int) -> np.ndarray:
    """Exclusive upper bounds of the random draws made by Remy's growth."""
    i = np.arange(1, n, dtype=np.int64)
    return 2 * (2 * i - 1)


def grow_remy(n: int, draws: Sequence[int]) -> Tree:
    """Build the tree determined by a sequence of Remy draws.

    Draw ``i`` (0-based) lies in ``[0, 2(2i+1))``; its quotient by two picks
    the node to graft onto and its parity picks the side of the new leaf.
    """
    size = 2 * n - 1
    left = [-1] * size
    right = [-1] * size
    parent = [-1] * size
    root = 0
    for i in range(1, n):
        d = int(draws[i - 1])
        x, side = divmod(d, 2)
        y = 2 * i - 1
        z = 2 * i
        p = parent[x]
        if p == -1:
            root = y
        elif left[p] == x:
            left[p] = y
        else:
            right[p] = y
        parent[y] = p
        if side == 0:
            left[y], right[y] = x, z
        else:
            left[y], right[y] = z, x
        parent[x] = y
        parent[z] = y
    children = tuple(None if left[i] == -1 else (left[i], right[i]) for i in range(size))
    return Tree(children, root)


def sample_uniform(n: int, rng: np.random.Generator) -> Tree:
    """Draw a tree uniformly from all full binary trees with ``n`` leaves."""
    if n < 1:
        raise DomainError(f"magnitude must be >= 1, got {n}")
    if n == 1:
        return Tree.leaf()
    draws = rng.integers(0, remy_steps(n))
    return grow_remy(n, draws)


@dataclass(frozen=True)
class StrahlerProfile:
    orders: tuple[int, ...]
    counts: tuple[int, ...]

    @property
    def strahler_number(self) -> int:
        return len(self.counts)

    @property
    def magnitude(self) -> int:
        return self.counts[0]

    def S(self, r: int) -> int:
        """Number of branches of order ``r`` (zero above the Strahler number)."""
        if r < 1:
            raise DomainError(f"order must be >= 1, got {r}")
        return self.counts[r - 1] if r <= len(self.counts) else 0


def strahler(tree: Tree) -> StrahlerProfile:
    children = tree.children
    size = len(children)
    # preorder, then process in reverse so children precede parents
    preorder: list[int] = []
    parent = [-1] * size
    stack = [tree.root]
    while stack:
        v = stack.pop()
        preorder.append(v)
        c = children[v]
        if c is not None:
            parent[c[0]] = v
            parent[c[1]] = v
            stack.extend(c)
    if len(preorder) != size:
        raise StructureError("tree has unreachable nodes")
    orders = [0] * size
    for v in reversed(preorder):
        c = children[v]
        if c is None:
            orders[v] = 1
        else:
            a, b = orders[c[0]], orders[c[1]]
            orders[v] = a + 1 if a == b else max(a, b)
    top = orders[tree.root]
    counts = [0] * top
    # a branch is counted at its most downstream node
    for v in range(size):
        p = parent[v]
        if p == -1 or orders[p] != orders[v]:
            counts[orders[v] - 1] += 1
    return StrahlerProfile(orders=tuple(orders), counts=tuple(counts))


def bifurcation_ratio(profile: StrahlerProfile, q: int, r: int = 1) -> Fraction:
    """``S_{q+r} / S_q`` as an exact rational, zero when ``S_q`` vanishes."""
    if q < 1 or r < 1:
        raise DomainError(f"need q >= 1 and r >= 1, got q={q}, r={r}")
    den = profile.S(q)
    if den == 0:
        return Fraction(0)
    return Fraction(profile.S(q + r), den)

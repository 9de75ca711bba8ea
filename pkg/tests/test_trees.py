from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from strahler_clt import exact
from strahler_clt.errors import DomainError, StructureError
from strahler_clt.sampling import branch_counts
from strahler_clt.trees import (Tree, bifurcation_ratio, count_trees, enumerate_trees, grow_remy,
                                iter_tree_strings, remy_steps, sample_uniform, strahler)

SIX_LEAF = "((()(()()))((()())()))"
PERFECT_8 = "(((()())(()()))((()())(()())))"


def mirror(tree: Tree) -> Tree:
    return Tree(tuple(None if c is None else (c[1], c[0]) for c in tree.children), tree.root)


def relabel(tree: Tree, perm: list[int]) -> Tree:
    children = [None] * len(tree)
    for old, c in enumerate(tree.children):
        children[perm[old]] = None if c is None else (perm[c[0]], perm[c[1]])
    return Tree(tuple(children), perm[tree.root])


@st.composite
def trees(draw, max_leaves=40):
    n = draw(st.integers(1, max_leaves))
    if n == 1:
        return Tree.leaf()
    draws = [draw(st.integers(0, int(h) - 1)) for h in remy_steps(n)]
    return grow_remy(n, draws)


@pytest.mark.parametrize("n,expected", [(1, 1), (2, 1), (3, 2), (4, 5), (5, 14), (12, 58786)])
def test_enumeration_counts(n, expected):
    assert len(enumerate_trees(n)) == expected == count_trees(n)


def test_enumeration_distinct_and_ordered():
    strings = list(iter_tree_strings(5))
    assert len(set(strings)) == 14
    assert strings[0] == "(()(()(()(()()))))"
    assert enumerate_trees(3)[0].to_parens() == "(()(()()))"


@pytest.mark.parametrize("n", [0, 13])
def test_enumeration_domain(n):
    with pytest.raises(DomainError):
        enumerate_trees(n)


def test_enumeration_cap_is_configurable():
    assert len(enumerate_trees(13, cap=13)) == count_trees(13)


def test_reference_profiles():
    prof = strahler(Tree.from_parens(SIX_LEAF))
    assert prof.counts == (6, 2, 1)
    assert bifurcation_ratio(prof, 1, 1) == Fraction(1, 3)
    assert strahler(Tree.leaf()).counts == (1,)
    perfect = strahler(Tree.from_parens(PERFECT_8))
    assert perfect.counts == (8, 4, 2, 1)
    assert bifurcation_ratio(perfect, 1, 2) == Fraction(1, 4)
    assert bifurcation_ratio(perfect, 5, 1) == 0
    assert perfect.S(9) == 0


def test_caterpillar_has_one_order_two_branch():
    prof = strahler(enumerate_trees(7)[0])
    assert prof.counts == (7, 1)


@pytest.mark.parametrize("text", ["", "(", "(()", "(()())()", "(()()())", "((())())", "(a)"])
def test_malformed_strings(text):
    with pytest.raises(StructureError):
        Tree.from_parens(text)


@pytest.mark.parametrize("children,root", [
    ((None, None, (1, 2)), 0),           # root is a leaf, rest unreachable
    (((1, 1), None), 0),                 # repeated child
    (((1, 2), (0, 2), None), 0),         # root used as a child
    (((1, 2), None), 0),                 # index out of range
    (((1, 2), (2, 3), (1, 3), None), 0),  # two parents
    (((1,), None), 0),                   # unary node
])
def test_structural_errors(children, root):
    with pytest.raises(StructureError):
        Tree(children, root)


@given(trees())
def test_parens_roundtrip(tree):
    text = tree.to_parens()
    assert Tree.from_parens(text).to_parens() == text
    assert Tree.from_parens(text).magnitude == tree.magnitude


@given(trees())
def test_profile_invariants(tree):
    prof = strahler(tree)
    n = tree.magnitude
    assert prof.S(1) == n
    assert all(c >= 1 for c in prof.counts)
    for r in range(2, prof.strahler_number + 1):
        assert prof.S(r) * 2 ** (r - 1) <= n
        # every order-r branch starts where two order-(r-1) branches meet
        assert 2 * prof.S(r) <= prof.S(r - 1)
    if n >= 2:
        assert prof.S(2) >= 1
    assert prof.strahler_number <= n.bit_length()
    assert prof.S(prof.strahler_number) == 1


@given(trees(), st.data())
def test_profile_invariant_under_relabeling_and_mirroring(tree, data):
    perm = data.draw(st.permutations(range(len(tree))))
    assert strahler(relabel(tree, list(perm))).counts == strahler(tree).counts
    assert strahler(mirror(tree)).counts == strahler(tree).counts


@given(trees(), st.integers(1, 6), st.integers(1, 4))
def test_ratio_bounds(tree, q, r):
    v = bifurcation_ratio(strahler(tree), q, r)
    assert 0 <= v <= Fraction(1, 2**r)


def test_ratio_domain():
    with pytest.raises(DomainError):
        bifurcation_ratio(strahler(Tree.leaf()), 0, 1)


def test_sample_single_leaf():
    assert sample_uniform(1, np.random.default_rng(0)).to_parens() == "()"


def test_sample_deterministic():
    a = [sample_uniform(30, np.random.default_rng(5)).to_parens() for _ in range(3)]
    b = [sample_uniform(30, np.random.default_rng(5)).to_parens() for _ in range(3)]
    assert a == b


def test_remy_draws_are_a_bijection():
    # every draw sequence lands on a tree, and every tree is hit equally often
    n = 5
    highs = [int(h) for h in remy_steps(n)]
    images = Counter()
    for code in range(int(np.prod(highs))):
        draws = []
        for h in highs:
            code, d = divmod(code, h)
            draws.append(d)
        images[grow_remy(n, draws).to_parens()] += 1
    assert len(images) == count_trees(n)
    assert len(set(images.values())) == 1


def test_sample_uniform_over_four_leaves():
    rng = np.random.default_rng(2024)
    freq = Counter(sample_uniform(4, rng).to_parens() for _ in range(100_000))
    assert set(freq) == set(iter_tree_strings(4))
    assert all(abs(c / 100_000 - 0.2) <= 0.01 for c in freq.values())
    assert chisquare(list(freq.values())).pvalue > 1e-3


def test_compiled_sampler_matches_kernel_at_six_leaves():
    counts = branch_counts(6, 100_000, np.random.default_rng(99))
    freq = Counter(counts[:, 2].tolist())
    for m in (1, 2, 3):
        p = float(exact.transition_prob(6, m))
        se = (p * (1 - p) / 100_000) ** 0.5
        assert abs(freq[m] / 100_000 - p) <= 3 * se


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 60), st.integers(0, 2**32 - 1))
def test_compiled_counts_match_python_profile(n, seed):
    # same uniforms drive both paths: d = floor(u * high)
    u = np.random.default_rng(seed).random((3, max(n - 1, 0)))
    from strahler_clt.sampling import _remy_counts
    out = np.zeros((3, n.bit_length() + 2), dtype=np.int64)
    if n == 1:
        return
    _remy_counts(n, u, out)
    highs = remy_steps(n)
    for row in range(3):
        draws = np.floor(u[row] * highs).astype(np.int64)
        prof = strahler(grow_remy(n, draws))
        expected = list(prof.counts) + [0] * (out.shape[1] - 1 - len(prof.counts))
        assert out[row, 1:].tolist() == expected

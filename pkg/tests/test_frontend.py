import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gentree.errors import BranchBudgetExceeded, ContractivityError, ParseError, UnbalancedBrackets
from gentree.frontend import (
    IFSSpec, LSystemSpec, SimilarityMap, attractor_points, expand_discrete, parse_ifs,
    parse_ifs_document, parse_lsystem, rewrite, serialize_ifs, serialize_lsystem,
)
from gentree.analysis import hausdorff

TH = math.pi / 5
BINARY_IFS = [SimilarityMap(0.6, TH, (0.0, 1.0)), SimilarityMap(0.6, -TH, (0.0, 1.0))]

IFS_DOC = """{
  "v": 1,
  "kind": "ifs",
  "maps": [
    {"lambda": 0.6, "theta": 0.6283185307179586, "t": [0.0, 1.0]},
    {"lambda": 0.6, "theta": -0.6283185307179586, "t": [0.0, 1.0]}
  ]
}"""


def compose_oracle(maps, word, root):
    """Apply the maps of ``word`` left to right with explicit matrix entries."""
    x, y = root
    for i in word:
        m = maps[i]
        a, b = m.lam * math.cos(m.theta), m.lam * math.sin(m.theta)
        x, y = a * x - b * y + m.t[0], b * x + a * y + m.t[1]
    return x, y


def test_parse_ifs_document():
    maps = parse_ifs(IFS_DOC)
    assert maps == BINARY_IFS
    spec = parse_ifs_document(IFS_DOC)
    assert spec.root == (0.0, 0.0) and spec.heading == math.pi / 2


def test_ifs_round_trip():
    text = serialize_ifs(BINARY_IFS)
    assert parse_ifs(text) == BINARY_IFS
    assert serialize_ifs(parse_ifs_document(text)) == text


@pytest.mark.parametrize("doc,err", [
    ('{"v": 1, "kind": "ifs", "maps": []}', ParseError),
    ('{"v": 1, "kind": "ifs", "maps": [{"lambda": 1.0, "theta": 0, "t": [0, 1]}]}', ContractivityError),
    ('{"v": 1, "kind": "ifs", "maps": [{"lambda": 0.5, "theta": 0}]}', ParseError),
    ('{"v": 2, "kind": "ifs", "maps": []}', ParseError),
    ('{"v": 1, "kind": "lsystem", "axiom": "F"}', ParseError),
    ('{"v": 1, "kind": "ifs", "maps": [{"lambda": 0.5, "theta": 0, "t": [0, "a"]}]}', ParseError),
])
def test_bad_ifs_documents(doc, err):
    with pytest.raises(err):
        parse_ifs(doc)


def test_empty_map_list_message():
    with pytest.raises(ParseError, match="at least one map required"):
        parse_ifs('{"v": 1, "kind": "ifs", "maps": []}')


def test_syntax_error_reports_position():
    with pytest.raises(ParseError) as exc:
        parse_ifs('{\n  "v": 1,\n  "kind": "ifs",\n  "maps": [,]\n}')
    assert exc.value.line == 4 and exc.value.col is not None


def test_duplicate_keys_rejected():
    with pytest.raises(ParseError, match="duplicate"):
        parse_lsystem('{"v": 1, "kind": "lsystem", "axiom": "F", "angle": 0.5, '
                      '"rules": {"F": "FF", "F": "F[+F]"}}')


def test_contractivity_on_construction():
    with pytest.raises(ContractivityError):
        SimilarityMap(1.0, 0.0)


LSYS_DOC = ('{"v": 1, "kind": "lsystem", "axiom": "F", "rules": {"F": "F[+F][-F]"}, '
            '"angle": 0.5235987755982988}')


def test_parse_lsystem():
    spec = parse_lsystem(LSYS_DOC)
    assert spec.axiom == "F" and spec.rules == {"F": "F[+F][-F]"}
    assert spec.angle == pytest.approx(math.pi / 6)
    assert parse_lsystem(serialize_lsystem(spec)) == spec
    text = serialize_lsystem(spec)
    assert serialize_lsystem(parse_lsystem(text)) == text


def test_unicode_minus_accepted():
    spec = parse_lsystem(LSYS_DOC.replace("[-F]", "[−F]"))
    assert spec.rules["F"] == "F[+F][-F]"


@pytest.mark.parametrize("rule", ["F[+F", "F]+F[", "[[F]"])
def test_unbalanced(rule):
    with pytest.raises(UnbalancedBrackets):
        parse_lsystem(LSYS_DOC.replace("F[+F][-F]", rule))


def test_pass_through_symbol():
    spec = parse_lsystem('{"v": 1, "kind": "lsystem", "axiom": "GFG", "rules": {"F": "FG"}, "angle": 0.3}')
    assert rewrite(spec, 2) == "GFGGG"
    tree = expand_discrete(spec, 2)
    assert len(tree) == 2


@pytest.mark.parametrize("k", range(0, 7))
def test_lsystem_edge_count(k):
    spec = LSystemSpec("F", {"F": "F[+F][-F]"}, math.pi / 6)
    tree = expand_discrete(spec, k, scale_per_depth=0.6)
    assert len(tree.edges) == 3 ** k
    assert rewrite(spec, k).count("F") == 3 ** k


def test_lsystem_symbol_count_recurrence():
    # F -> F+G, G -> F : |F|_k = |F|_{k-1} + |G|_{k-1}, |G|_k = |F|_{k-1}
    spec = LSystemSpec("F", {"F": "F+G", "G": "F"}, 0.3)
    f, g = 1, 0
    for k in range(1, 12):
        f, g = f + g, f
        s = rewrite(spec, k)
        assert (s.count("F"), s.count("G")) == (f, g)


def test_lsystem_geometry():
    spec = LSystemSpec("F", {"F": "F[+F][-F]"}, math.pi / 2)
    tree = expand_discrete(spec, 1, scale_per_depth=0.5)
    pos = tree.positions
    assert np.allclose(pos, [[0, 0], [0, 1], [-0.5, 1], [0.5, 1]], atol=1e-15)
    assert [n.parent_id for n in tree.nodes] == [None, 0, 1, 1]
    labels = [n.label for n in tree.nodes[1:]]
    assert [l.lam for l in labels] == [1.0, 0.5, 0.5]
    assert [l.sigma for l in labels] == [1, 1, -1]


def test_lsystem_iteration_cap():
    spec = LSystemSpec("F", {"F": "F[+F][-F]"}, 0.5, max_iterations=3)
    with pytest.raises(ValueError):
        expand_discrete(spec, 4)


def test_lsystem_budget():
    spec = LSystemSpec("F", {"F": "F[+F][-F]"}, 0.5, max_iterations=30)
    with pytest.raises(BranchBudgetExceeded):
        expand_discrete(spec, 20)


def test_ifs_depth_zero():
    tree = expand_discrete(BINARY_IFS, 0)
    assert len(tree) == 1 and tree.nodes[0].position == (0.0, 0.0)
    assert tree.base == pytest.approx((0.0, -1.0))


def test_ifs_depth_two_against_oracle():
    root = (0.0, 0.0)
    tree = expand_discrete(BINARY_IFS, 2, root=root)
    assert len(tree) == 7
    for n in tree.nodes:
        assert np.allclose(n.position, compose_oracle(BINARY_IFS, n.word, root), atol=1e-12, rtol=0)
    assert [n.word for n in tree.nodes] == [(), (0,), (1,), (0, 0), (0, 1), (1, 0), (1, 1)]
    assert [n.label.sigma for n in tree.nodes[1:3]] == [1, -1]


def test_ifs_recursion_depth_8():
    root = (0.3, -0.2)
    tree = expand_discrete(BINARY_IFS, 8, root=root)
    assert len(tree) == 2 ** 9 - 1
    for n in tree.nodes[1:]:
        parent = tree.nodes[n.parent_id]
        assert n.word[:-1] == parent.word
        assert np.allclose(n.position, BINARY_IFS[n.word[-1]](np.array(parent.position)), atol=1e-15, rtol=0)
        assert np.allclose(n.position, compose_oracle(BINARY_IFS, n.word, root), atol=1e-12, rtol=0)


def test_attractor_k0():
    assert attractor_points(BINARY_IFS, 0, (2.0, 3.0)).points.tolist() == [[2.0, 3.0]]


def test_attractor_single_map():
    pts = attractor_points([SimilarityMap(0.5, 0.0, (1.0, 0.0))], 3, (0.0, 0.0)).points
    assert pts.shape == (1, 2)
    assert np.allclose(pts[0], [1.75, 0.0], atol=1e-15)


def test_attractor_two_maps_k10():
    root = (0.0, 1.0)
    a9 = attractor_points(BINARY_IFS, 9, root, dedup=False).points
    a10 = attractor_points(BINARY_IFS, 10, root, dedup=False)
    assert len(a10) == 1024
    # for x, y in A_9: |F_i(x) - F_j(y)| <= lam * diam(A_9) + max_y |F_i(y) - F_j(y)|
    const = max(np.hypot(*(fi(a9) - fj(a9)).T).max() for fi in BINARY_IFS for fj in BINARY_IFS)
    diam9 = attractor_points(BINARY_IFS, 9, root).diameter()
    assert a10.diameter() <= 0.6 * diam9 + const + 1e-12


def test_attractor_matches_word_enumeration():
    root = (0.1, 0.2)
    pts = attractor_points(BINARY_IFS, 4, root, dedup=False).points
    words = list(itertools.product(range(2), repeat=4))
    assert np.allclose(pts, [compose_oracle(BINARY_IFS, w, root) for w in words], atol=1e-12, rtol=0)


def test_attractor_dedup_collisions():
    # both maps send the origin to t, so A_1 from the origin is a single point
    assert len(attractor_points(BINARY_IFS, 1, (0.0, 0.0))) == 1
    assert len(attractor_points(BINARY_IFS, 1, (0.0, 0.0), dedup=False)) == 2


def test_attractor_budget():
    with pytest.raises(BranchBudgetExceeded):
        attractor_points(BINARY_IFS, 30)


@pytest.mark.parametrize("k", range(0, 11))
def test_attractor_cauchy(k):
    root = (0.0, 0.0)
    d01 = hausdorff(attractor_points(BINARY_IFS, 0, root), attractor_points(BINARY_IFS, 1, root))
    dk = hausdorff(attractor_points(BINARY_IFS, k, root), attractor_points(BINARY_IFS, k + 1, root))
    assert dk <= 0.6 ** k * d01 * (1 + 1e-12)


maps_st = st.lists(st.builds(SimilarityMap, st.floats(0.05, 0.95), st.floats(-3.1, 3.1),
                             st.tuples(st.floats(-5, 5), st.floats(-5, 5))), min_size=1, max_size=4)


@settings(max_examples=50)
@given(maps_st, st.tuples(st.floats(-3, 3), st.floats(-3, 3)), st.floats(-3, 3), st.floats(0.1, 4))
def test_ifs_round_trip_property(maps, root, heading, trunk):
    spec = IFSSpec(tuple(maps), root, heading, trunk)
    text = serialize_ifs(spec)
    assert parse_ifs_document(text) == spec
    assert serialize_ifs(parse_ifs_document(text)) == text


@settings(max_examples=50)
@given(st.text("F+-G", max_size=6).map(lambda s: "[" + s + "]"), st.floats(0.01, 3), st.integers(0, 20),
       st.floats(0.05, 1.0))
def test_lsystem_round_trip_property(rhs, angle, iters, scale):
    spec = LSystemSpec("F", {"F": "F" + rhs}, angle, iters, scale)
    text = serialize_lsystem(spec)
    assert parse_lsystem(text) == spec
    assert serialize_lsystem(parse_lsystem(text)) == text

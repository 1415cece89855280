import random

import pytest

from omqlab.graphalg import (
    CapExceeded,
    TreeDecomposition,
    cq_treewidth,
    dtree,
    is_ditree,
    is_minor,
    k_unravel,
    treewidth,
    unravel1_at,
)
from omqlab.homtools import find_homomorphism
from omqlab.model import (
    CQ,
    ConceptFact,
    Database,
    QueryError,
    RoleFact,
    UndirectedGraph,
    gaifman_graph,
)
from omqlab.surface import parse_database, parse_query
from fixtures import D1, fig2_cq


def _cycle(n=4):
    vs = [f"v{i}" for i in range(n)]
    return UndirectedGraph(vs, [(vs[i], vs[(i + 1) % n]) for i in range(n)])


def _complete(n):
    vs = [f"v{i}" for i in range(n)]
    return UndirectedGraph(vs, [(a, b) for i, a in enumerate(vs) for b in vs[i + 1:]])


def test_treewidth_basics():
    w, td = treewidth(_cycle(4))
    assert w == 2 and td.validate(_cycle(4)) == []
    assert treewidth(UndirectedGraph("ab", [("a", "b")]))[0] == 1
    assert treewidth(_complete(4))[0] == 3
    assert treewidth(UndirectedGraph())[0] == 0
    assert treewidth(UndirectedGraph("abc"))[0] == 0


def test_treewidth_witness_always_validates():
    rng = random.Random(4)
    for _ in range(60):
        n = rng.randint(1, 8)
        vs = [f"v{i}" for i in range(n)]
        edges = [(rng.choice(vs), rng.choice(vs)) for _ in range(rng.randint(0, 12))]
        g = UndirectedGraph(vs, [e for e in edges if e[0] != e[1]])
        w, td = treewidth(g)
        assert td.validate(g) == []
        assert td.width >= w


def test_treewidth_cap():
    vs = [f"v{i}" for i in range(30)]
    with pytest.raises(CapExceeded):
        treewidth(UndirectedGraph(vs))


def test_cq_treewidth_fig2():
    assert cq_treewidth(fig2_cq) == 2
    assert cq_treewidth(fig2_cq.restrict({"x1", "x2", "x3"})) == 1
    all_answered = CQ(("x1", "x2", "x3", "x4"), fig2_cq.atoms)
    assert cq_treewidth(all_answered) == 1


def test_is_ditree():
    assert is_ditree(parse_database("r(a,b)\ns(a,b)\nr(b,c)"))
    assert not is_ditree(parse_database("r(a,a)"))
    assert not is_ditree(parse_database("r(a,b)\nr(c,b)"))


def test_dtree():
    merged = dtree(parse_query("q() :- r(x,y), s(z,y)").disjuncts[0])
    assert merged is not None and merged.arity == 1
    assert len(merged.variables()) == 2
    assert dtree(parse_query("q() :- r(x,y), r(y,x)").disjuncts[0]) is None
    fork = parse_query("q() :- r(x,y), r(x,z)").disjuncts[0]
    out = dtree(fork)
    assert out is not None and set(out.atoms) == set(fork.atoms)


def test_dtree_is_initial():
    # the merged query must map into any ditree the original maps into
    q = parse_query("q() :- r(x,y), s(z,y), r(y,u)").disjuncts[0]
    merged = dtree(q)
    assert merged is not None
    target = parse_database("r(a,b)\ns(a,b)\nr(b,c)")
    if find_homomorphism(CQ((), q.atoms), target) is not None:
        assert find_homomorphism(CQ((), merged.atoms), target) is not None


def test_k_unravel_full_tuple_is_identity():
    d = parse_database("A(a)\nr(a,b)")
    u = k_unravel(d, ("a", "b"), 1, 3)
    assert u.database == d


def test_k_unravel_cycle():
    cyc = parse_database("r(a,b)\nr(b,c)\nr(c,d)\nr(d,a)")
    u = k_unravel(cyc, (), 1, 3)
    g = gaifman_graph(u.database)
    for comp in g.connected_components():
        edges = sum(g.degree(v) for v in comp) // 2
        assert edges < len(comp)  # acyclic: treewidth 1
    pi = u.projection()
    for f in u.database.role_facts():
        assert RoleFact(f.name, pi.get(f.a, f.a), pi.get(f.b, f.b)) in cyc.facts


def test_k_unravel_singleton():
    u = k_unravel(parse_database("A(a)"), (), 1, 0)
    facts = list(u.database.facts)
    assert len(facts) == 1 and facts[0].name == "A"
    assert u.projection()[facts[0].a] == "a"


def test_k_unravel_keeps_anchor_adjacent_constants():
    u = k_unravel(parse_database("r(a,b)"), ("a",), 1, 1)
    assert any(f.name == "r" and f.a == "a" for f in u.database.role_facts())


def test_unravel1_at():
    d = parse_database("A(a)")
    assert unravel1_at(d, "a", 2).database == d
    d2 = parse_database("r(a,b)\nr(b,a)")
    u = unravel1_at(d2, "a", 2)
    out = {(f.a, f.b) for f in u.database.role_facts()}
    # a path a -> b' -> a* with both projections correct exists
    pi = u.projection()
    succ_b = [b for (x, b) in out if x == "a" and pi.get(b) == "b"]
    assert succ_b
    assert any(x in succ_b and pi.get(y, y) == "a" for (x, y) in out)
    with pytest.raises(ValueError):
        unravel1_at(d2, "zz", 1)


def test_unravel1_prop4_neighborhood():
    u = unravel1_at(D1, "b1", 1)
    names = {f.name for f in u.database.concept_facts() if f.a == "b1"}
    assert "B1" in names
    # one level of role neighbours is present
    assert any("b1" in f.terms() for f in u.database.role_facts())


def test_is_minor():
    edge = UndirectedGraph("uv", [("u", "v")])
    assert is_minor(edge, _cycle(4))
    assert not is_minor(_complete(4), _cycle(4))
    assert is_minor(_cycle(4), _cycle(4))
    assert is_minor(UndirectedGraph(), _cycle(4))
    with pytest.raises(CapExceeded):
        is_minor(edge, UndirectedGraph([f"v{i}" for i in range(20)]))

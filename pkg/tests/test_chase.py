import random

import pytest

from omqlab.chase import (
    InconsistentInput,
    canonical_model,
    chase_of_cq,
    chase_restriction,
    oblivious_chase,
)
from omqlab.entailment import is_consistent
from omqlab.graphalg import treewidth
from omqlab.homtools import find_homomorphism
from omqlab.model import (
    CQ,
    ConceptFact,
    Database,
    Dialect,
    EMPTY_ONTOLOGY,
    Ontology,
    Role,
    RoleFact,
    RoleInclusion,
    gaifman_graph,
)
from omqlab.surface import parse_database, parse_ontology, parse_query
from fixtures import d_example1, omega1, omega2

import sys, os
sys.path.insert(0, os.path.dirname(__file__))
from gen import rand_database, rand_eli_ontology


def test_chase_single_firing():
    ch = oblivious_chase(parse_database("A(a)"), parse_ontology("A <= exists r . B"), 1)
    facts = sorted(map(str, ch.facts.facts))
    assert facts == ["A(a)", "B(_n0)", "r(a,_n0)"]
    assert ch.provenance["_n0"].kind == "anonymous"
    assert ch.provenance["_n0"].depth == 1


def test_chase_role_inclusion():
    o = Ontology([RoleInclusion(Role("r"), Role("s"))], Dialect.ELH_BOT)
    ch = oblivious_chase(parse_database("r(a,b)"), o, 2)
    assert RoleFact("s", "a", "b") in ch.facts.facts


def test_chase_depth_bound():
    ch = oblivious_chase(parse_database("A(a)"), parse_ontology("A <= exists r . A"), 3)
    anon = [p for p in ch.provenance.values() if p.kind == "anonymous"]
    assert len(anon) == 3
    assert sorted(p.depth for p in anon) == [1, 2, 3]


def test_chase_restriction():
    ch = oblivious_chase(parse_database("A(a)"), parse_ontology("A <= exists r . B"), 1)
    assert chase_restriction(ch) == parse_database("A(a)")
    o = Ontology([RoleInclusion(Role("r"), Role("s"))], Dialect.ELH_BOT)
    ch2 = oblivious_chase(parse_database("r(a,b)"), o, 2)
    assert chase_restriction(ch2) == parse_database("r(a,b)\ns(a,b)")
    ch3 = oblivious_chase(d_example1, omega1, 2)
    assert ConceptFact("A4", "b") in chase_restriction(ch3).facts


def test_chase_of_cq_matches_database_chase():
    q = parse_query("q() :- A(x), r(x,y)").disjuncts[0]
    o = parse_ontology("A <= exists r . B")
    assert chase_of_cq(q, o, 2).facts == oblivious_chase(q.as_database(), o, 2).facts


def test_chase_deterministic():
    o = parse_ontology("A <= exists r . B\nB <= exists s . A")
    d = parse_database("A(a)\nA(b)")
    c1 = oblivious_chase(d, o, 3)
    c2 = oblivious_chase(d, o, 3)
    assert c1.facts == c2.facts
    assert {k: (p.kind, p.parent, p.depth) for k, p in c1.provenance.items()} == \
           {k: (p.kind, p.parent, p.depth) for k, p in c2.provenance.items()}


def test_chase_preserves_treewidth():
    rng = random.Random(31)
    for _ in range(25):
        o = rand_eli_ontology(rng, rng.randint(1, 4), names=["A", "B"],
                              roles=["r"], bot_prob=0.0)
        d = rand_database(rng, rng.randint(2, 4), names=["A", "B"], roles=["r"])
        if not d.dom:
            continue
        w0 = treewidth(gaifman_graph(d))[0]
        ch = oblivious_chase(d, o, 2)
        w1 = treewidth(gaifman_graph(ch.facts))[0]
        assert w1 == max(w0, 1) or w1 == w0


def test_homomorphism_transport():
    # a hom between databases lifts to their chases
    rng = random.Random(13)
    for _ in range(25):
        o = rand_eli_ontology(rng, rng.randint(1, 4), names=["A", "B"],
                              roles=["r"], bot_prob=0.0)
        d1 = rand_database(rng, 2, names=["A", "B"], roles=["r"])
        d2 = rand_database(rng, 3, names=["A", "B"], roles=["r"])
        if not d1.dom or not d2.dom:
            continue
        h = find_homomorphism(CQ((), d1.facts), d2)
        if h is None:
            continue
        ch1 = oblivious_chase(d1, o, 2)
        ch2 = oblivious_chase(d2, o, 4)
        lifted = find_homomorphism(CQ((), ch1.facts.facts), ch2.facts,
                                   {a: h[a] for a in d1.dom})
        assert lifted is not None


def test_canonical_model_simple():
    cm = canonical_model(parse_database("A(a)"), parse_ontology("A <= exists r . B"), 1)
    roles = list(cm.database.role_facts())
    assert any(f.a == "a" for f in roles)
    assert any(f.name == "B" for f in cm.database.concept_facts())


def test_canonical_model_empty_ontology():
    d = parse_database("A(a)\nB(b)\nr(a,b)")
    cm = canonical_model(d, EMPTY_ONTOLOGY, 3)
    assert cm.database == d


def test_canonical_model_saturates():
    # a missing concept is derived at the right constant before matching
    d = parse_database("B1(h1)\nA2(x2)\nr(x2,h1)")
    cm = canonical_model(d, omega2, 2)
    assert ConceptFact("A1", "h1") in cm.database.facts
    assert ConceptFact("A4", "x2") in cm.database.facts


def test_canonical_model_rejects_inconsistent():
    with pytest.raises(InconsistentInput):
        canonical_model(parse_database("A(a)"), parse_ontology("A <= bot"), 1)


def test_canonical_agrees_with_deep_chase():
    from oracles import oracle_answers
    from omqlab.evaluation import evaluate_naive
    from omqlab.model import FULL_SCHEMA, OMQ
    from gen import rand_cq

    rng = random.Random(19)
    checked = 0
    for _ in range(40):
        o = rand_eli_ontology(rng, rng.randint(1, 5), names=["A", "B"], roles=["r", "s"])
        d = rand_database(rng, rng.randint(1, 3), names=["A", "B"], roles=["r", "s"])
        if not d.dom or not is_consistent(d, o):
            continue
        from omqlab.model import UCQ
        q = UCQ((rand_cq(rng, rng.randint(1, 4), 0, names=["A", "B"], roles=["r", "s"]),))
        Q = OMQ(o, FULL_SCHEMA, q)
        assert evaluate_naive(Q, d).answers == oracle_answers(Q, d)
        checked += 1
    assert checked >= 15

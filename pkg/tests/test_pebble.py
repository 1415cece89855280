import random

import pytest

from omqlab.entailment import is_consistent
from omqlab.evaluation import evaluate_naive
from omqlab.graphalg import cq_treewidth
from omqlab.model import (
    Dialect,
    EMPTY_ONTOLOGY,
    FULL_SCHEMA,
    OMQ,
    Ontology,
    Role,
    RoleInclusion,
    UCQ,
)
from omqlab.pebble import (
    Anchored,
    Const,
    EXIST,
    PebblePrecondition,
    exists_eligible,
    exists_mccs,
    extend_query_plus,
    is_d_labeling,
    pebble_answers,
    pebble_evaluate,
    reach,
)
from omqlab.surface import parse_database, parse_ontology, parse_query
from fixtures import Q1, d_example1, fig2, fig2_cq, omega1

import sys, os
sys.path.insert(0, os.path.dirname(__file__))
from gen import rand_cq, rand_database, rand_elhdr_ontology


def _q(text):
    return parse_query(text).disjuncts[0]


def test_reach_base():
    levels = reach(_q("q() :- r(x,y)"), ("x", "y"))
    assert levels == {"x": {0}, "y": {1}}


def test_reach_forward():
    levels = reach(_q("q() :- r(x,y), s(y,z)"), ("x", "y"))
    assert levels["z"] == {2}


def test_reach_upward():
    levels = reach(_q("q() :- r(x,y), s(w,y)"), ("x", "y"))
    assert levels["w"] == {0}


def test_reach_rejects_answer_second():
    with pytest.raises(Exception):
        reach(parse_query("q(y) :- r(x,y)").disjuncts[0], ("x", "y"))


def test_eligibility():
    ok, dt = exists_eligible(_q("q() :- r(x,y)"), ("x", "y"))
    assert ok and dt.arity == 1
    ok, dt = exists_eligible(_q("q() :- r(x,y), r(z,y)"), ("x", "y"))
    assert ok and len(dt.variables()) == 2  # x and z merge into the root
    ok, _ = exists_eligible(_q("q() :- r(x,y), s(y,xp), t(xp,y)"), ("x", "y"))
    assert not ok


def test_exists_mccs():
    q = parse_query("q(x) :- A(x), r(u,v)").disjuncts[0]
    (atoms,) = exists_mccs(q)
    assert sorted(map(str, atoms)) == ["r(u,v)"]
    assert exists_mccs(parse_query("q(x) :- r(x,y)").disjuncts[0]) == []
    whole = exists_mccs(fig2_cq)
    assert len(whole) == 1 and len(whole[0]) == 8


def test_extend_query_plus():
    assert extend_query_plus(OMQ(EMPTY_ONTOLOGY, FULL_SCHEMA, fig2)).atoms == \
        fig2_cq.atoms
    o = parse_ontology("A <= B")
    q = parse_query("q() :- A(x), r(x,y)")
    qp = extend_query_plus(OMQ(o, FULL_SCHEMA, q))
    assert qp.atoms == q.disjuncts[0].atoms  # the A-copy collapses onto A(x)
    qp1 = extend_query_plus(Q1)
    assert qp1.atoms == fig2_cq.atoms  # A2-copy at x2 is already there


def test_is_d_labeling_const_hom():
    d = parse_database("A1(a)\nA2(b)\nA3(c)\nr(b,a)\nr(b,c)")
    labels = {"x1": Const("a"), "x2": Const("b"), "x3": Const("c"),
              "x4": Const("b")}
    assert is_d_labeling(Q1, d, labels, {"x1", "x2", "x3", "x4"})


def test_is_d_labeling_condition3():
    o = parse_ontology("A <= exists r . top")
    Q = OMQ(o, FULL_SCHEMA, parse_query("q() :- r(x,y), A(x)"))
    d = parse_database("A(a)")
    labels = {"x": EXIST, "y": Const("a")}
    assert not is_d_labeling(Q, d, labels, {"x", "y"})


def test_is_d_labeling_anchored():
    o = parse_ontology("A <= exists r . top")
    Q = OMQ(o, FULL_SCHEMA, parse_query("q() :- A(x), r(x,y)"))
    d = parse_database("A(a)")
    labels = {"x": Const("a"), "y": Anchored(("x", "y"), "a")}
    assert is_d_labeling(Q, d, labels, {"x", "y"})
    labels_bad = {"x": Const("a"), "y": Anchored(("x", "y"), "zz")}
    assert not is_d_labeling(Q, d, labels_bad, {"x", "y"})


def test_pebble_matches_naive_on_example1():
    assert pebble_evaluate(Q1, d_example1, (), 1)
    assert evaluate_naive(Q1, d_example1).boolean()


def test_pebble_one_sided_on_fig2():
    # without the ontology the plain cycle needs width 2; with one pebble
    # pair the game may overshoot, but never undershoots
    Q = OMQ(EMPTY_ONTOLOGY, FULL_SCHEMA, fig2)
    d = fig2_cq.as_database()
    naive = evaluate_naive(Q, d).boolean()
    game = pebble_evaluate(Q, d, (), 1)
    assert naive
    assert game  # one-sided: may be true, must not be false


def test_pebble_rejects_unsupported():
    o = parse_ontology("A <= exists inv(r) . B")
    with pytest.raises(PebblePrecondition):
        pebble_evaluate(OMQ(o, FULL_SCHEMA, fig2), d_example1, (), 1)
    with pytest.raises(PebblePrecondition):
        pebble_evaluate(OMQ(omega1, Ontology((),).dialect and
                            __import__("omqlab.model", fromlist=["Schema"]).Schema.of(["A1"]),
                            fig2), d_example1, (), 1)


def test_long_anonymous_path_is_exact():
    o = parse_ontology("A <= exists r . (B & exists r . top)")
    d = parse_database("A(a)")
    path6 = parse_query("q() :- r(y1,y2), r(y2,y3), r(y3,y4), r(y4,y5), r(y5,y6)")
    Q = OMQ(o, FULL_SCHEMA, path6)
    assert not evaluate_naive(Q, d).boolean()
    assert not pebble_evaluate(Q, d, (), 1)
    path2 = parse_query("q() :- r(y1,y2), r(y2,y3)")
    Q2 = OMQ(o, FULL_SCHEMA, path2)
    assert evaluate_naive(Q2, d).boolean()
    assert pebble_evaluate(Q2, d, (), 1)


def test_boundary_self_loop_case():
    # the boundary pair's root carries a database loop; the tree witness
    # must still be found
    o = Ontology(list(parse_ontology("A <= exists r . B").axioms)
                 + [RoleInclusion(Role("r"), Role("t"))], Dialect.ELH_BOT)
    q = parse_query("q() :- r(x,y), t(u,y), s(x,u)")
    d = parse_database("A(a)\ns(a,a)")
    Q = OMQ(o, FULL_SCHEMA, q)
    assert evaluate_naive(Q, d).boolean()
    assert pebble_evaluate(Q, d, (), 2)


def test_agreement_random_sample():
    rng = random.Random(55)
    n = 0
    for _ in range(60):
        o = rand_elhdr_ontology(rng, rng.randint(1, 5), names=["A1", "A2", "B1"],
                                roles=["r", "s"])
        d = rand_database(rng, rng.randint(2, 4), names=["A1", "A2", "B1"],
                          roles=["r", "s"])
        arity = rng.choice([0, 1])
        q = rand_cq(rng, rng.randint(max(arity, 1), 4), arity,
                    names=["A1", "A2", "B1"], roles=["r", "s"], max_tw=2)
        if not d.dom or not is_consistent(d, o):
            continue
        Q = OMQ(o, FULL_SCHEMA, UCQ((q,)))
        k = max(1, cq_treewidth(q))
        assert pebble_answers(Q, d, k) == evaluate_naive(Q, d).answers
        n += 1
    assert n >= 25


def test_hom_induced_labelings_validate():
    # labels read off a real homomorphism into the canonical model always
    # pass the conditions (the certificate direction)
    from omqlab.chase import canonical_model
    from omqlab.evaluation import chase_steps
    from omqlab.homtools import iter_homomorphisms
    from omqlab.pebble import LabelContext, analyze_pair

    rng = random.Random(67)
    checked = 0
    for _ in range(40):
        o = rand_elhdr_ontology(rng, rng.randint(1, 4), names=["A1", "B1"],
                                roles=["r"])
        d = rand_database(rng, rng.randint(2, 3), names=["A1", "B1"], roles=["r"])
        q = rand_cq(rng, rng.randint(1, 4), 0, names=["A1", "B1"], roles=["r"],
                    max_tw=2)
        if not d.dom or not is_consistent(d, o):
            continue
        Q = OMQ(o, FULL_SCHEMA, UCQ((q,)))
        cm = canonical_model(d, o, chase_steps(Q.query), share_copies=False)
        h = None
        for cand in iter_homomorphisms(q, cm.database):
            h = cand
            break
        if h is None:
            continue
        ctx = LabelContext(Q, d)
        labels = {}
        ok_build = True
        for v in sorted(q.variables()):
            if h[v] in d.dom:
                labels[v] = Const(h[v])
        anon = [v for v in sorted(q.variables()) if h[v] not in d.dom]
        for v in anon:
            assigned = False
            for at in q.sorted_atoms():
                if not hasattr(at, "b"):
                    continue
                for x, y in ((at.a, at.b), (at.b, at.a)):
                    if h.get(x) in d.dom and h.get(y) not in d.dom:
                        sysm = ctx.system((x, y))
                        if v in sysm.members() and sysm.eligible:
                            labels[v] = Anchored(sysm.rep, h[x])
                            assigned = True
                            break
                if assigned:
                    break
            if not assigned:
                if v in ctx.exist_ok:
                    labels[v] = EXIST
                else:
                    ok_build = False
        if not ok_build:
            continue
        checked += 1
        assert ctx.is_labeling(labels, frozenset(q.quantified_vars())), (
            o.sorted_axioms(), str(d), str(q), {k: str(x) for k, x in labels.items()})
    assert checked >= 10

import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from omqlab.model import Dialect, Ontology, RoleInclusion, Role
from omqlab.surface import (
    ParseError,
    parse_answers,
    parse_database,
    parse_ontology,
    parse_query,
    parse_schema,
    serialize_answers,
    serialize_database,
    serialize_ontology,
    serialize_query,
)
from fixtures import D1, FIG2_TEXT, omega2


def test_parse_single_inclusion():
    o = parse_ontology("A2 <= A4")
    assert o.dialect == Dialect.EL
    assert len(o.axioms) == 1


def test_parse_nested_existential():
    o = parse_ontology("B <= exists r . (B1 & B2 & exists r . top)")
    (ax,) = o.axioms
    assert "exists r" in str(ax)
    assert o.dialect == Dialect.EL


def test_parse_functionality():
    o = parse_ontology("func r")
    assert o.dialect == Dialect.DLLITE_F_EQ


def test_parse_database_and_arity_conflict():
    d = parse_database("A1(a)\nr(b,a)")
    assert len(d.facts) == 2
    with pytest.raises(ParseError):
        parse_database("A(a)\nA(a,b)")


def test_prop4_database_roundtrips():
    assert parse_database(serialize_database(D1)) == D1


def test_parse_fig2_query():
    q = parse_query(FIG2_TEXT)
    assert len(q.disjuncts[0].atoms) == 8
    assert q.is_boolean()


def test_head_mismatch():
    with pytest.raises(ParseError):
        parse_query("q(x) :- A(x)\nq(y) :- A(y)")


def test_two_disjuncts():
    q = parse_query("q() :- A(x)\nq() :- B(x)")
    assert len(q.disjuncts) == 2


def test_unbound_head_variable():
    with pytest.raises(ParseError):
        parse_query("q(x) :- A(y)")


def test_ontology_roundtrip_omega2():
    back = parse_ontology(serialize_ontology(omega2))
    assert back.axioms == omega2.axioms


def test_role_inclusion_via_usage():
    o = parse_ontology("exists r . top <= A\nr <= s")
    kinds = sorted(type(a).__name__ for a in o.axioms)
    assert kinds == ["ConceptInclusion", "RoleInclusion"]


def test_role_inclusion_explicit_inverse():
    o = parse_ontology("inv(r) <= s")
    (ax,) = o.axioms
    assert isinstance(ax, RoleInclusion) and ax.lhs == Role("r", True)


def test_answers_format():
    assert json.loads(serialize_answers(True, [()])) == {
        "consistent": True, "answers": [[]]}
    assert json.loads(serialize_answers(True, [])) == {
        "consistent": True, "answers": []}
    consistent, tuples = parse_answers(serialize_answers(False, [("b", "a")]))
    assert not consistent and tuples == [("b", "a")]


def test_schema_files():
    s = parse_schema("A1\nr\n# comment\n")
    assert not s.full and s.names == frozenset({"A1", "r"})
    assert parse_schema("full").full


def test_parser_total_on_junk():
    for junk in ["<= <=", "A &", "exists . B", "q( :-", "\x00\x01", "disjoint-roles r"]:
        with pytest.raises(ParseError):
            parse_ontology(junk)


# grammar-directed fuzz round-trips

_names = st.sampled_from(["A", "B", "C1", "Top_x"])
_roles = st.sampled_from(["r", "s", "t2"])


def _concepts(depth):
    base = st.one_of(_names.map(lambda n: n),
                     st.just("top"))
    if depth == 0:
        return base
    sub = _concepts(depth - 1)
    return st.one_of(
        base,
        st.tuples(_roles, st.booleans(), sub).map(
            lambda t: f"exists {'inv(' + t[0] + ')' if t[1] else t[0]} . ({t[2]})"),
        st.lists(sub, min_size=2, max_size=3).map(lambda xs: " & ".join(f"({x})" for x in xs)),
    )


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(_concepts(2), _concepts(2)), min_size=1, max_size=4))
def test_ontology_fuzz_roundtrip(pairs):
    text = "\n".join(f"{l} <= {r}" for l, r in pairs)
    o = parse_ontology(text)
    assert parse_ontology(serialize_ontology(o)).axioms == o.axioms


@settings(max_examples=60, deadline=None)
@given(st.lists(
    st.one_of(
        st.tuples(_names, st.sampled_from("abcd")).map(lambda t: f"{t[0]}({t[1]})"),
        st.tuples(_roles, st.sampled_from("abcd"), st.sampled_from("abcd")).map(
            lambda t: f"{t[0]}({t[1]},{t[2]})"),
    ),
    min_size=0, max_size=10))
def test_database_fuzz_roundtrip(lines):
    d = parse_database("\n".join(lines))
    assert parse_database(serialize_database(d)) == d


def test_query_roundtrip_random():
    rng = random.Random(3)
    for _ in range(40):
        n = rng.randint(1, 4)
        atoms = []
        for _ in range(rng.randint(1, 6)):
            if rng.random() < 0.4:
                atoms.append(f"A{rng.randint(1,3)}(x{rng.randrange(n)})")
            else:
                atoms.append(f"r{rng.randint(1,2)}(x{rng.randrange(n)},x{rng.randrange(n)})")
        text = "q() :- " + ", ".join(atoms)
        q = parse_query(text)
        assert parse_query(serialize_query(q)) == q

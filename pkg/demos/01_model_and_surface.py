"""Building blocks: concepts, axioms, ontologies, databases, queries, and
the text formats they travel in.
"""

from omqlab.model import Atomic, Exists, Role, conj
from omqlab.surface import (
    parse_database,
    parse_ontology,
    parse_query,
    serialize_answers,
    serialize_ontology,
)

# Ontologies are sets of inclusions over a small concept grammar.  The
# dialect is inferred as the least one admitting every axiom.
onto = parse_ontology("""
# concept inclusions
A2 <= A4
B <= exists r . (B1 & B2 & exists r . top)
# a range restriction: everything something r-points at is a C
range r <= C
""")
print("dialect:", onto.dialect.value)
print(serialize_ontology(onto))

# Concepts are immutable ASTs with canonical conjunctions.
c = conj(Atomic("A"), Exists(Role("r"), Atomic("B")))
print("concept:", c)
print("same conjunction, any order:", conj(Exists(Role("r"), Atomic("B")), Atomic("A")) == c)

# Databases are fact sets; queries are datalog-style rules, one disjunct
# per line, sharing a head.
db = parse_database("""
A1(alice)
A2(bob)
r(bob, alice)
""")
print("\ndatabase constants:", sorted(db.dom))

query = parse_query("q(x) :- r(x,y), A1(y)")
print("query:", query)

# Answers serialize to a stable JSON shape.
print("answers:", serialize_answers(True, [("bob",)]))

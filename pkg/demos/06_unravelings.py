"""Unravelings trade cycles for trees: the width-k unraveling of a
database keeps a chosen tuple verbatim, maps homomorphically onto the
original, and preserves certain answers of width-k queries.
"""

from omqlab.evaluation import evaluate_naive
from omqlab.graphalg import k_unravel, treewidth, unravel1_at
from omqlab.model import FULL_SCHEMA, OMQ, gaifman_graph
from omqlab.surface import parse_database, parse_ontology, parse_query

cycle = parse_database("""
r(a,b)
r(b,c)
r(c,d)
r(d,a)
""")
print("cycle treewidth:", treewidth(gaifman_graph(cycle))[0])

u = k_unravel(cycle, (), k=1, depth=3)
g = gaifman_graph(u.database)
acyclic = all(sum(g.degree(v) for v in comp) // 2 < len(comp)
              for comp in g.connected_components())
print("unraveling:", len(u.database.dom), "constants, acyclic:", acyclic)

# The projection is a homomorphism back onto the cycle.
pi = u.projection()
print("projection of a sample fact:",
      next(f"{f} -> r({pi[f.a]},{pi[f.b]})" for f in u.database.role_facts()))

# Certain answers of width-1 queries survive the unraveling.
onto = parse_ontology("range r <= Visited")
path = parse_query("q() :- r(x,y), Visited(y)")
Q = OMQ(onto, FULL_SCHEMA, path)
print("on the cycle:   ", evaluate_naive(Q, cycle).boolean())
print("on the unravel: ", evaluate_naive(Q, u.database).boolean())

# The width-1 unraveling AT a constant keeps that constant as its root.
u1 = unravel1_at(parse_database("r(a,b)\nr(b,a)"), "a", depth=2)
print("\nrooted unraveling facts:", sorted(map(str, u1.database.facts)))

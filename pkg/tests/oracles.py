"""Independent oracles used to cross-check the engine.

These deliberately take the dumb route: bounded oblivious chase plus
plain homomorphism search, with a depth-stability re-check.
"""

from omqlab.chase import oblivious_chase
from omqlab.homtools import all_answers, find_homomorphism
from omqlab.model import (
    CQ,
    Concept,
    ConceptFact,
    Conj,
    Database,
    Exists,
    concept_as_cq,
    concept_extension,
)


def concept_depth(c: Concept) -> int:
    if isinstance(c, Exists):
        return 1 + concept_depth(c.filler)
    if isinstance(c, Conj):
        return max(concept_depth(p) for p in c.parts)
    return 0


def chase_clashes(chased, o) -> bool:
    for ci in o.concept_inclusions():
        if ci.rhs.contains_bot() and concept_extension(chased.facts, ci.lhs):
            return True
    return False


def oracle_subsumes(o, c: Concept, d: Concept, extra_depth: int = 0) -> bool:
    """Bounded chase of the concept's tree database, then match the
    subsumer at the root; stability-checked two levels deeper."""
    if c.contains_bot():
        return True
    first = _bounded_subsumes(o, c, d, extra_depth)
    second = _bounded_subsumes(o, c, d, extra_depth + 2)
    assert first == second, "chase depth instability"
    return first


def _bounded_subsumes(o, c, d, extra_depth) -> bool:
    axdepth = max([concept_depth(ci.lhs) + concept_depth(ci.rhs)
                   for ci in o.concept_inclusions()] + [1])
    depth = concept_depth(c) + concept_depth(d) + axdepth + extra_depth
    root_q = concept_as_cq(c, rooted=True)
    root = root_q.answer_vars[0]
    db = Database(root_q.atoms) if root_q.atoms else Database(
        [ConceptFact("_seed", root)])
    ch = oblivious_chase(db, o, depth)
    if chase_clashes(ch, o):
        return True
    if d.contains_bot():
        return False
    dq = concept_as_cq(d, rooted=True)
    return find_homomorphism(dq, ch.facts, {dq.answer_vars[0]: root}) is not None


def oracle_answers(Q, d: Database, depth: int = 6) -> frozenset:
    """Answers by generous oblivious chase, with stability re-check."""
    a1 = frozenset(all_answers(Q.query, oblivious_chase(d, Q.ontology, depth).facts,
                               restrict_to=d.dom))
    a2 = frozenset(all_answers(Q.query, oblivious_chase(d, Q.ontology, depth + 2).facts,
                               restrict_to=d.dom))
    assert a1 == a2, "chase depth instability"
    return a1

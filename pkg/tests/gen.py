"""Seeded random instance generators shared by the test suite."""

from __future__ import annotations

import random

from omqlab.model import (
    Atomic,
    CQ,
    Concept,
    ConceptFact,
    ConceptInclusion,
    Database,
    Dialect,
    Exists,
    Ontology,
    RangeRestriction,
    Role,
    RoleFact,
    RoleInclusion,
    TOP,
    BOT,
    UCQ,
    conj,
)
from omqlab.graphalg import cq_treewidth


def rand_concept(rng: random.Random, names, roles, depth: int,
                 allow_inverse: bool, allow_top=True) -> Concept:
    kinds = ["atom", "atom", "conj", "exists"]
    if allow_top:
        kinds.append("top")
    if depth <= 0:
        kinds = ["atom", "atom", "top"] if allow_top else ["atom"]
    k = rng.choice(kinds)
    if k == "atom":
        return Atomic(rng.choice(names))
    if k == "top":
        return TOP
    if k == "conj":
        n = rng.randint(2, 3)
        return conj(*(rand_concept(rng, names, roles, depth - 1, allow_inverse)
                      for _ in range(n)))
    role = Role(rng.choice(roles), allow_inverse and rng.random() < 0.4)
    return Exists(role, rand_concept(rng, names, roles, depth - 1, allow_inverse))


def rand_eli_ontology(rng: random.Random, n_axioms: int, names=None, roles=None,
                      depth=3, bot_prob=0.15) -> Ontology:
    names = names or ["A", "B", "C", "D"]
    roles = roles or ["r", "s"]
    axioms = []
    for _ in range(n_axioms):
        lhs = rand_concept(rng, names, roles, rng.randint(0, depth), True,
                           allow_top=False)
        if rng.random() < bot_prob:
            axioms.append(ConceptInclusion(lhs, BOT))
        else:
            rhs = rand_concept(rng, names, roles, rng.randint(0, depth), True)
            axioms.append(ConceptInclusion(lhs, rhs))
    return Ontology(axioms, Dialect.ELI_BOT)


def rand_elhdr_ontology(rng: random.Random, n_axioms: int, names=None,
                        roles=None, depth=2, bot_prob=0.05) -> Ontology:
    """Random ontology in the inverse-free dialect with role inclusions and
    range restrictions."""
    names = names or ["A1", "A2", "A3", "B1", "B2"]
    roles = roles or ["r", "s"]
    axioms = []
    for _ in range(n_axioms):
        pick = rng.random()
        if pick < 0.15 and len(roles) > 1:
            r, s = rng.sample(roles, 2)
            axioms.append(RoleInclusion(Role(r), Role(s)))
        elif pick < 0.3:
            axioms.append(RangeRestriction(
                rng.choice(roles),
                rand_concept(rng, names, roles, 1, False, allow_top=False)))
        else:
            lhs = rand_concept(rng, names, roles, rng.randint(0, depth), False,
                               allow_top=False)
            if rng.random() < bot_prob:
                axioms.append(ConceptInclusion(lhs, BOT))
            else:
                rhs = rand_concept(rng, names, roles, rng.randint(0, depth), False)
                axioms.append(ConceptInclusion(lhs, rhs))
    return Ontology(axioms, Dialect.ELHDR_BOT)


def rand_database(rng: random.Random, n_constants: int, names=None, roles=None,
                  n_facts=None) -> Database:
    names = names or ["A1", "A2", "A3", "B1", "B2"]
    roles = roles or ["r", "s"]
    consts = [f"c{i}" for i in range(n_constants)]
    n_facts = n_facts if n_facts is not None else rng.randint(n_constants, 3 * n_constants)
    facts = []
    for _ in range(n_facts):
        if rng.random() < 0.45:
            facts.append(ConceptFact(rng.choice(names), rng.choice(consts)))
        else:
            facts.append(RoleFact(rng.choice(roles), rng.choice(consts),
                                  rng.choice(consts)))
    return Database(facts)


def rand_cq(rng: random.Random, n_vars: int, arity: int, names=None, roles=None,
            n_atoms=None, max_tw=None, tries=60) -> CQ:
    """Random connected-ish CQ; resamples until the treewidth bound holds."""
    names = names or ["A1", "A2", "A3", "B1", "B2"]
    roles = roles or ["r", "s"]
    for _ in range(tries):
        var = [f"x{i}" for i in range(n_vars)]
        n_atoms = n_atoms or rng.randint(n_vars, 2 * n_vars)
        atoms = []
        # a random spanning tree keeps things connected
        for i in range(1, n_vars):
            j = rng.randrange(i)
            a, b = var[i], var[j]
            if rng.random() < 0.5:
                a, b = b, a
            atoms.append(RoleFact(rng.choice(roles), a, b))
        for _ in range(max(0, n_atoms - n_vars + 1)):
            if rng.random() < 0.4:
                atoms.append(ConceptFact(rng.choice(names), rng.choice(var)))
            else:
                atoms.append(RoleFact(rng.choice(roles), rng.choice(var),
                                      rng.choice(var)))
        bound = set()
        for at in atoms:
            bound.update(at.terms())
        avs = [v for v in var[:arity] if v in bound]
        try:
            q = CQ(tuple(avs), atoms)
        except Exception:
            continue
        if max_tw is None or cq_treewidth(q) <= max_tw:
            return q
    raise RuntimeError("could not sample a query within the treewidth bound")


def rand_ucq(rng: random.Random, n_disjuncts: int, n_vars: int, arity: int,
             max_tw=None, **kw) -> UCQ:
    ds = []
    avs = None
    for _ in range(n_disjuncts):
        q = rand_cq(rng, rng.randint(max(arity, 1), n_vars), arity,
                    max_tw=max_tw, **kw)
        if avs is None:
            avs = q.answer_vars
        else:
            q = CQ(avs, [at for at in q.atoms]) if q.answer_vars != avs else q
        ds.append(q)
    return UCQ(ds)


def rand_tw_bounded_database(rng: random.Random, k: int, n_bags: int,
                             names=None, roles=None) -> Database:
    """Database generated along a random width-``k`` tree decomposition, so
    its treewidth is at most ``k``."""
    names = names or ["A1", "A2", "A3", "B1", "B2"]
    roles = roles or ["r", "s"]
    counter = [0]

    def fresh():
        counter[0] += 1
        return f"c{counter[0]}"

    bags = []
    facts = []
    for i in range(n_bags):
        if not bags:
            bag = [fresh() for _ in range(k + 1)]
        else:
            parent = rng.choice(bags)
            keep = rng.sample(parent, rng.randint(0, k))
            bag = keep + [fresh() for _ in range(k + 1 - len(keep))]
        bags.append(bag)
        for _ in range(rng.randint(1, k + 2)):
            if rng.random() < 0.4:
                facts.append(ConceptFact(rng.choice(names), rng.choice(bag)))
            else:
                facts.append(RoleFact(rng.choice(roles), rng.choice(bag),
                                      rng.choice(bag)))
    return Database(facts)

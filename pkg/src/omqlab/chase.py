"""The oblivious chase with provenance and a depth bound, and the truncated
canonical model (saturation, type copies, then bounded successor rounds).

Fresh constants are numbered deterministically (`_n<k>` for chase nodes,
`_t<k>` for type copies), so identical inputs produce identical output.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .model import (
    Atomic,
    Axiom,
    CQ,
    Concept,
    ConceptFact,
    ConceptInclusion,
    Database,
    Fact,
    Ontology,
    Role,
    RoleFact,
    RoleInclusion,
    concept_as_cq,
    concept_extension,
    cq_as_database,
    FreshVars,
    axiom_key,
)
from .entailment import (
    NormalOntology,
    Saturation,
    _elhi_view,
    normalize,
    saturate,
)


class InconsistentInput(ValueError):
    pass


class ChaseCapExceeded(RuntimeError):
    pass


CHASE_NODE_CAP = 500000


@dataclass(frozen=True)
class Provenance:
    """Where a constant of a chase result comes from."""

    kind: str                     # "original" | "anonymous" | "type_copy"
    parent: Optional[str] = None  # generating constant (anonymous nodes)
    via: Optional[Axiom] = None   # generating axiom, when one exists
    role: Optional[Role] = None   # edge label for successor-rule nodes
    depth: int = 0
    type_copy: Optional[frozenset] = None  # the copied type (concepts)


@dataclass(frozen=True)
class ChaseDb:
    facts: Database
    provenance: dict
    types: dict  # constant -> frozenset of sub-concepts (canonical model only)

    def original_constants(self) -> frozenset:
        return frozenset(a for a, p in self.provenance.items() if p.kind == "original")

    def restriction(self) -> Database:
        keep = self.original_constants()
        return Database(f for f in self.facts.facts
                        if all(t in keep for t in f.terms()))


def chase_restriction(c: ChaseDb) -> Database:
    return c.restriction()


# ---------------------------------------------------------------------------
# Oblivious chase


def oblivious_chase(d: Database, o: Ontology, depth: int) -> ChaseDb:
    """The two-rule chase, applied fairly in rounds; a concept-inclusion
    firing attaches a fresh tree even when the conclusion already holds.
    Fresh trees are only attached at constants whose forest depth is below
    ``depth``; each (constant, axiom) pair fires at most once."""
    o = _elhi_view(o)
    inclusions = o.concept_inclusions()  # range restrictions fold in here
    role_incs = o.role_inclusions()
    facts: set[Fact] = set(d.facts)
    prov: dict[str, Provenance] = {a: Provenance("original") for a in sorted(d.dom)}
    fired: set = set()
    counter = itertools.count()

    changed = True
    while changed:
        changed = False
        current = Database(facts)
        # rule 2: role inclusions
        for ri in role_incs:
            for f in sorted(current.role_facts(), key=lambda f: (f.name, f.a, f.b)):
                pairs = []
                if not ri.lhs.inverted and f.name == ri.lhs.name:
                    pairs.append((f.a, f.b))
                elif ri.lhs.inverted and f.name == ri.lhs.name:
                    pairs.append((f.b, f.a))
                for a, b in pairs:
                    g = (RoleFact(ri.rhs.name, b, a) if ri.rhs.inverted
                         else RoleFact(ri.rhs.name, a, b))
                    if g not in facts:
                        facts.add(g)
                        changed = True
        current = Database(facts)
        # rule 1: concept inclusions
        for ax in inclusions:
            if ax.rhs.contains_bot() or ax.lhs.contains_bot():
                continue
            ext = concept_extension(current, ax.lhs)
            for a in sorted(ext):
                if (a, ax) in fired or prov[a].depth >= depth:
                    continue
                fired.add((a, ax))
                changed = True
                _attach_concept(ax.rhs, a, ax, facts, prov, counter)
                if len(prov) > CHASE_NODE_CAP:
                    raise ChaseCapExceeded("chase grew past the node cap")
    return ChaseDb(Database(facts), prov, {})


def _attach_concept(c: Concept, root: str, ax, facts: set, prov: dict, counter) -> None:
    """Attach the tree-shaped database of ``c`` with its root glued to ``root``."""
    q = concept_as_cq(c, rooted=True)
    rename = {q.answer_vars[0]: root}
    order = sorted(q.variables() - {q.answer_vars[0]})
    for v in order:
        fresh = f"_n{next(counter)}"
        rename[v] = fresh
    for at in q.sorted_atoms():
        facts.add(at.rename(rename))
    # provenance and depths: tree distance from the root
    depths = {q.answer_vars[0]: prov[root].depth}
    pending = [at for at in q.sorted_atoms() if isinstance(at, RoleFact)]
    while pending:
        rest = []
        for at in pending:
            if at.a in depths and at.b not in depths:
                depths[at.b] = depths[at.a] + 1
            elif at.b in depths and at.a not in depths:
                depths[at.a] = depths[at.b] + 1
            elif at.a not in depths and at.b not in depths:
                rest.append(at)
        if len(rest) == len(pending):
            break
        pending = rest
    for v in order:
        prov[rename[v]] = Provenance("anonymous", parent=root, via=ax,
                                     depth=depths.get(v, prov[root].depth + 1))


def chase_of_cq(q: CQ, o: Ontology, depth: int) -> ChaseDb:
    return oblivious_chase(cq_as_database(q), o, depth)


# ---------------------------------------------------------------------------
# Truncated canonical model


@dataclass(frozen=True)
class CanonicalModel:
    database: Database       # plain facts: role facts + concept-name facts
    types: dict              # constant -> frozenset of sub-concepts
    original: frozenset
    provenance: dict
    saturation: Saturation

    def chase_db(self) -> ChaseDb:
        return ChaseDb(self.database, self.provenance, self.types)


def canonical_model(d: Database, o: Ontology, steps: int,
                    require_consistent: bool = True,
                    share_copies: bool = True) -> CanonicalModel:
    """Saturate ``d``, add one copy per maximal implied type, then run the
    witnessed-successor rule for ``steps`` rounds.  Query matches of size
    up to ``steps`` over the original constants then agree with the full
    universal model."""
    onorm = normalize(_elhi_view(o))
    sat = saturate(d, onorm)
    if sat.clashes():
        if require_consistent:
            raise InconsistentInput("database is inconsistent with the ontology")
        return CanonicalModel(sat.database, {}, frozenset(d.dom),
                              {a: Provenance("original") for a in d.dom}, sat)

    facts: set[Fact] = set(sat.database.facts)
    types: dict[str, frozenset] = {a: sat.types[a] for a in sat.types}
    prov: dict[str, Provenance] = {a: Provenance("original") for a in sorted(d.dom)}
    tcount = itertools.count()
    ncount = itertools.count()

    # type copies: one fresh constant per maximal implied type (projected to
    # the ontology's sub-concepts; names outside sub(O) cannot hold at
    # anonymous elements anyway).  Copies are shared across constants: any
    # fully anonymous match works below any copy of the same type.
    copied: dict[frozenset, str] = {}
    for a in sorted(sat.types):
        reach = onorm.reachable_types(sat.types[a])
        projected = {frozenset(n for n in t
                               if n in onorm.name_concept and n != "_top")
                     for t in reach}
        projected.discard(frozenset())
        maximal = [t for t in projected if not any(t < u for u in projected)]
        for t in sorted(maximal, key=sorted):
            if share_copies and t in copied:
                continue
            c = f"_t{next(tcount)}"
            copied[t] = c
            types[c] = onorm._engine.close(t)
            prov[c] = Provenance("type_copy", parent=a,
                                 type_copy=onorm.concepts_of(t))
            for n in sorted(t):
                cc = onorm.name_concept.get(n)
                if isinstance(cc, Atomic):
                    facts.add(ConceptFact(n, c))

    succ_index: dict[tuple, set] = {}

    def successors(a: str, role: Role) -> set:
        return succ_index.get((a, role), set())

    def index_fact(f: RoleFact) -> None:
        succ_index.setdefault((f.a, Role(f.name)), set()).add(f.b)
        succ_index.setdefault((f.b, Role(f.name, True)), set()).add(f.a)

    for f in Database(facts).role_facts():
        index_fact(f)

    for round_no in range(steps):
        additions: list[tuple[str, Role, frozenset]] = []
        for a in sorted(types):
            canon = onorm._engine.canonical(onorm._engine.close(types[a]))
            by_role: dict[Role, list] = {}
            for (parent, rule), child in canon.child_types.items():
                if parent == canon.root:
                    by_role.setdefault(rule.role, []).append(child)
            for role in sorted(by_role, key=str):
                # only inclusion-maximal successor types are demanded
                cands = by_role[role]
                maximal = sorted({c for c in cands
                                  if not any(c < other for other in cands)},
                                 key=sorted)
                for child in maximal:
                    witnessed = any(child <= types.get(b, frozenset())
                                    for b in successors(a, role))
                    if not witnessed:
                        additions.append((a, role, child))
        if not additions:
            break
        for a, role, child in additions:
            # re-check: an earlier addition this round may witness it now
            if any(child <= types.get(b, frozenset()) for b in successors(a, role)):
                continue
            b = f"_n{next(ncount)}"
            types[b] = child
            prov[b] = Provenance("anonymous", parent=a, role=role,
                                 depth=prov[a].depth + 1,
                                 type_copy=onorm.concepts_of(child))
            for sup in sorted(onorm.super_roles.get(role, frozenset({role})), key=str):
                f = (RoleFact(sup.name, b, a) if sup.inverted
                     else RoleFact(sup.name, a, b))
                facts.add(f)
                index_fact(f)
            for n in sorted(child):
                cc = onorm.name_concept.get(n)
                if cc is None or isinstance(cc, Atomic):
                    if n != "_top":
                        facts.add(ConceptFact(n, b))
            if len(types) > CHASE_NODE_CAP:
                raise ChaseCapExceeded("canonical model grew past the node cap")

    sub_types = {a: onorm.concepts_of(t) for a, t in types.items()}
    return CanonicalModel(Database(facts), sub_types, frozenset(d.dom), prov, sat)

"""Ontology normal form, subsumption, type computation, extended-database
saturation, and consistency.

The engine works on a normalized rule set over concept *names*:

    top <= A        A <= bot        A1 & ... & An <= A
    exists r . A <= B               A <= exists r . B

plus role inclusions.  Every subconcept of the ontology (and any extra
concepts a caller supplies) receives a definitional name wired in both
directions, so membership of a complex concept at an element is always
readable off the element's name type.

Subsumption and friends are answered from the canonical structure of a
seed type: a tree whose node types form the least fixpoint of the rule
system, with information flowing both down (via inverse roles) and up
(via existential premises).  Node types are memoized per (parent type,
generating axiom), which keeps the computation finite.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .model import (
    Atomic,
    BOT,
    Bot,
    Concept,
    ConceptFact,
    ConceptInclusion,
    Conj,
    Database,
    Dialect,
    ELHI_FAMILY,
    DLLITE_FAMILY,
    Exists,
    Fact,
    Functionality,
    Ontology,
    RangeRestriction,
    Role,
    RoleDisjointness,
    RoleFact,
    RoleInclusion,
    TOP,
    Top,
    conj,
)

TOP_NAME = "_top"


class UnsupportedDialect(ValueError):
    pass


@dataclass(frozen=True)
class ExistsRule:
    """``exists role . filler_name <= head`` (detection direction)."""

    role: Role
    filler: str
    head: str


@dataclass(frozen=True)
class SuccRule:
    """``body <= exists role . succ`` (generation direction)."""

    body: str
    role: Role
    succ: str


class NormalOntology:
    """Normalized rule system plus the fresh-name map for sub-concepts."""

    def __init__(self, source: Ontology, extra_concepts: Iterable[Concept] = ()):
        if source.dialect not in ELHI_FAMILY:
            raise UnsupportedDialect(
                f"the reasoning engine handles the ELHI_bot family, got "
                f"{source.dialect.value}")
        self.source = source
        self.top_rules: set[str] = {TOP_NAME}
        self.bot_names: set[str] = set()
        self.conj_rules: list[tuple[frozenset, str]] = []
        self.exists_rules: list[ExistsRule] = []
        self.succ_rules: list[SuccRule] = []
        self.defname: dict[Concept, str] = {TOP: TOP_NAME}
        self.name_concept: dict[str, Concept] = {TOP_NAME: TOP}
        self._fresh = itertools.count()

        inclusions = source.concept_inclusions()
        subs: set[Concept] = {TOP}
        for ci in inclusions:
            for side in (ci.lhs, ci.rhs):
                subs.update(side.subconcepts())
        for c in extra_concepts:
            subs.update(c.subconcepts())
        subs.discard(BOT)
        self.sub_concepts: tuple = tuple(sorted(subs, key=lambda c: c.key()))
        for c in self.sub_concepts:
            self._define(c)

        for ci in inclusions:
            if ci.lhs.contains_bot():
                continue  # vacuous
            if isinstance(ci.rhs, Bot):
                self.bot_names.add(self.defname[ci.lhs])
            else:
                self.conj_rules.append(
                    (frozenset({self.defname[ci.lhs]}), self.defname[ci.rhs]))

        self.super_roles = _role_closure(source)
        self._dedupe()
        self._engine = _Engine(self)

    # -- construction ------------------------------------------------------

    def _define(self, c: Concept) -> str:
        """Definitional name for ``c``, detection and generation wired."""
        if c in self.defname:
            return self.defname[c]
        if isinstance(c, Atomic):
            self.defname[c] = c.name
            self.name_concept.setdefault(c.name, c)
            return c.name
        name = f"_n{next(self._fresh)}"
        self.defname[c] = name
        self.name_concept[name] = c
        if isinstance(c, Conj):
            parts = [self._define(p) for p in c.parts]
            self.conj_rules.append((frozenset(parts), name))
            for p in parts:
                self.conj_rules.append((frozenset({name}), p))
        elif isinstance(c, Exists):
            filler = self._define(c.filler)
            self.exists_rules.append(ExistsRule(c.role, filler, name))
            self.succ_rules.append(SuccRule(name, c.role, filler))
        else:
            raise ValueError(f"cannot normalize {c!r}")
        return name

    def _dedupe(self) -> None:
        self.conj_rules = sorted(set(self.conj_rules), key=lambda r: (sorted(r[0]), r[1]))
        self.exists_rules = sorted(set(self.exists_rules),
                                   key=lambda r: (str(r.role), r.filler, r.head))
        self.succ_rules = sorted(set(self.succ_rules),
                                 key=lambda r: (r.body, str(r.role), r.succ))

    # -- views ---------------------------------------------------------------

    def fresh_name_map(self) -> dict[Concept, str]:
        return {c: n for c, n in self.defname.items() if not isinstance(c, Atomic)}

    def axioms(self) -> list:
        """The rule system rendered back as inclusion axioms."""
        out: list = [ConceptInclusion(TOP, Atomic(TOP_NAME))]
        out += [ConceptInclusion(Atomic(n), BOT) for n in sorted(self.bot_names)]
        for body, head in self.conj_rules:
            lhs = conj(*(Atomic(n) for n in sorted(body)))
            out.append(ConceptInclusion(lhs, Atomic(head)))
        for r in self.exists_rules:
            out.append(ConceptInclusion(Exists(r.role, Atomic(r.filler)), Atomic(r.head)))
        for r in self.succ_rules:
            out.append(ConceptInclusion(Atomic(r.body), Exists(r.role, Atomic(r.succ))))
        out += [RoleInclusion(r, s) for r, ss in sorted(self.super_roles.items(),
                                                        key=lambda kv: str(kv[0]))
                for s in sorted(ss, key=str) if s != r]
        return out

    def names_of(self, concepts: Iterable[Concept]) -> frozenset:
        return frozenset(self.defname[c] for c in concepts)

    def concepts_of(self, names: Iterable[str]) -> frozenset:
        """Project a name type onto sub-concepts (inert names drop out)."""
        out = set()
        for n in names:
            c = self.name_concept.get(n)
            if c is not None and c in self.defname:
                out.add(c)
        out.discard(TOP)
        return frozenset(out)

    # -- queries -------------------------------------------------------------

    def seed_type(self, names: Iterable[str]) -> frozenset:
        return self._engine.close(frozenset(names))

    def root_type(self, seed: Iterable[str]) -> frozenset:
        return self._engine.canonical(frozenset(seed)).root

    def reachable_types(self, seed: Iterable[str]) -> frozenset:
        return self._engine.canonical(frozenset(seed)).reachable

    def is_unsat(self, seed: Iterable[str]) -> bool:
        return self._engine.canonical(frozenset(seed)).clash


def _role_closure(o: Ontology) -> dict:
    """Reflexive-transitive super-role map, closed under inversion."""
    roles: set[Role] = set()
    for ci in o.concept_inclusions():
        for side in (ci.lhs, ci.rhs):
            roles.update(side.roles())
    edges: set[tuple[Role, Role]] = set()
    for ri in o.role_inclusions():
        roles.add(ri.lhs)
        roles.add(ri.rhs)
        edges.add((ri.lhs, ri.rhs))
        edges.add((ri.lhs.inverse(), ri.rhs.inverse()))
    roles |= {r.inverse() for r in roles}
    sup = {r: {r} for r in roles}
    changed = True
    while changed:
        changed = False
        for a, b in edges:
            for src, targets in sup.items():
                if a in targets and b not in targets:
                    targets.add(b)
                    changed = True
    return {r: frozenset(ss) for r, ss in sup.items()}


@dataclass
class _Canonical:
    root: frozenset
    reachable: frozenset
    clash: bool
    child_types: dict


class _Engine:
    """Least-fixpoint evaluation of canonical structures over name types."""

    def __init__(self, onorm: NormalOntology):
        self.o = onorm
        self._canon_cache: dict[frozenset, _Canonical] = {}

    def close(self, names: frozenset) -> frozenset:
        t = set(names) | self.o.top_rules
        changed = True
        while changed:
            changed = False
            for body, head in self.o.conj_rules:
                if head not in t and body <= t:
                    t.add(head)
                    changed = True
        return frozenset(t)

    def _sup(self, role: Role) -> frozenset:
        return self.o.super_roles.get(role, frozenset({role}))

    def _backflow(self, parent: frozenset, role: Role) -> set:
        """Names forced on a child reached from ``parent`` via ``role``."""
        inv_sups = self._sup(role.inverse())
        return {r.head for r in self.o.exists_rules
                if r.role in inv_sups and r.filler in parent}

    def _upflow(self, child: frozenset, role: Role) -> set:
        """Names forced on a parent with a ``role`` edge to ``child``."""
        sups = self._sup(role)
        return {r.head for r in self.o.exists_rules
                if r.role in sups and r.filler in child}

    def canonical(self, seed: frozenset) -> _Canonical:
        hit = self._canon_cache.get(seed)
        if hit is not None:
            return hit
        memo: dict = {}
        root = self.close(seed)
        while True:
            changed = [False]
            visited: set = set()
            root2 = self._update_node(root, None, None, memo, visited, changed)
            if root2 == root and not changed[0]:
                break
            root = root2

        reachable: set[frozenset] = set()
        child_types: dict = {}
        stack = [root]
        while stack:
            t = stack.pop()
            if t in reachable:
                continue
            reachable.add(t)
            for rule in self.o.succ_rules:
                if rule.body in t:
                    child = memo[(t, rule)]
                    child_types[(t, rule)] = child
                    if child not in reachable:
                        stack.append(child)
        clash = any(t & self.o.bot_names for t in reachable)
        out = _Canonical(root, frozenset(reachable), clash, child_types)
        if len(self._canon_cache) < 100000:
            self._canon_cache[seed] = out
        return out

    def _update_node(self, current: frozenset, parent: Optional[frozenset],
                     via: Optional[SuccRule], memo, visited, changed) -> frozenset:
        key = (parent, via, current)
        if key in visited:
            return current
        visited.add(key)
        base = set(current)
        if via is not None:
            base.add(via.succ)
            base |= self._backflow(parent, via.role)
        for rule in self.o.succ_rules:
            if rule.body not in current:
                continue
            ckey = (current, rule)
            child = memo.get(ckey)
            if child is None:
                child = self.close(frozenset({rule.succ}) | self._backflow(current, rule.role))
                memo[ckey] = child
                changed[0] = True
            child2 = self._update_node(child, current, rule, memo, visited, changed)
            if child2 != child:
                memo[ckey] = child2
                changed[0] = True
                child = child2
            base |= self._upflow(child, rule.role)
        new = self.close(frozenset(base))
        if new != current:
            changed[0] = True
        return new


# ---------------------------------------------------------------------------
# Public operations


_NORMAL_CACHE: dict = {}


def normalize(o: Ontology, extra_concepts: Iterable[Concept] = ()) -> NormalOntology:
    """Normal form of an ELHI_bot-family ontology (cached per input)."""
    key = (o.axioms, o.dialect, tuple(sorted(extra_concepts, key=lambda c: c.key())))
    hit = _NORMAL_CACHE.get(key)
    if hit is None:
        hit = NormalOntology(o, extra_concepts)
        if len(_NORMAL_CACHE) < 10000:
            _NORMAL_CACHE[key] = hit
    return hit


def subsumes(o: Ontology, c: Concept, d: Concept) -> bool:
    """``o |= c <= d``, decided on the canonical structure of ``c``."""
    if isinstance(d, Top):
        return True
    if isinstance(c, Bot):
        return True
    extra = [x for x in (c, d) if not x.contains_bot()]
    onorm = normalize(_elhi_view(o), extra)
    if c.contains_bot():
        return True
    seed = frozenset({onorm.defname[c]})
    if onorm.is_unsat(seed):
        return True
    if d.contains_bot():
        return False
    return onorm.defname[d] in onorm.root_type(seed)


@dataclass(frozen=True)
class ExtendedDatabase:
    """A database plus complex-concept facts (over sub-concepts)."""

    base: Database
    concept_facts: frozenset = frozenset()  # of (Concept, constant)

    def facts_at(self, a: str) -> frozenset:
        return frozenset(c for c, b in self.concept_facts if b == a)

    @staticmethod
    def of(d: Database | "ExtendedDatabase") -> "ExtendedDatabase":
        if isinstance(d, ExtendedDatabase):
            return d
        return ExtendedDatabase(d)


@dataclass
class Saturation:
    """Result of saturating a database: closed facts and per-constant types."""

    database: Database                 # role facts + concept-name facts, closed
    types: dict                        # constant -> frozenset of names
    extended: ExtendedDatabase         # complex concept facts made explicit
    onorm: NormalOntology

    def type_concepts(self, a: str) -> frozenset:
        return self.onorm.concepts_of(self.types.get(a, frozenset()))

    def clashes(self) -> bool:
        return any(self.onorm.is_unsat(t) for t in self.types.values())


def saturate(d: Database | ExtendedDatabase, o: Ontology | NormalOntology) -> Saturation:
    """Close a (possibly extended) database under consequence: concept
    facts entailed by each constant's conjunction, existential premises
    along explicit role facts, and the role hierarchy."""
    onorm = o if isinstance(o, NormalOntology) else normalize(_elhi_view(o))
    ext = ExtendedDatabase.of(d)

    role_facts: set[RoleFact] = set()
    types: dict[str, set] = {a: set() for a in ext.base.dom}
    for f in ext.base.facts:
        if isinstance(f, ConceptFact):
            types.setdefault(f.a, set()).add(f.name)
        else:
            role_facts.add(f)
    for c, a in ext.concept_facts:
        types.setdefault(a, set()).add(onorm.defname[c])

    # role hierarchy closure
    closed: set[RoleFact] = set()
    frontier = list(role_facts)
    while frontier:
        f = frontier.pop()
        if f in closed:
            continue
        closed.add(f)
        for s in onorm.super_roles.get(Role(f.name), frozenset({Role(f.name)})):
            g = RoleFact(s.name, f.b, f.a) if s.inverted else RoleFact(s.name, f.a, f.b)
            if g not in closed:
                frontier.append(g)
    role_facts = closed

    succ: dict[tuple[str, Role], set] = {}
    for f in role_facts:
        succ.setdefault((f.a, Role(f.name)), set()).add(f.b)
        succ.setdefault((f.b, Role(f.name, True)), set()).add(f.a)

    changed = True
    while changed:
        changed = False
        for a in sorted(types):
            t = onorm.root_type(frozenset(types[a]))
            if not t <= types[a]:
                types[a] |= t
                changed = True
        for rule in onorm.exists_rules:
            for (a, r), bs in list(succ.items()):
                if r != rule.role:
                    continue
                if rule.head not in types.get(a, set()):
                    if any(rule.filler in types.get(b, set()) for b in bs):
                        types.setdefault(a, set()).add(rule.head)
                        changed = True

    db_facts: set[Fact] = set(role_facts)
    complex_facts: set = set()
    for a, t in types.items():
        for n in sorted(t):
            c = onorm.name_concept.get(n)
            if c is None:
                db_facts.add(ConceptFact(n, a))   # database name outside sub(O)
            elif isinstance(c, Atomic):
                db_facts.add(ConceptFact(n, a))
            elif not isinstance(c, Top):
                complex_facts.add((c, a))
    final = Database(db_facts)
    return Saturation(final, {a: frozenset(t) for a, t in types.items()},
                      ExtendedDatabase(final, frozenset(complex_facts)), onorm)


def entailed_concept_fact(d: Database, o: Ontology, c: Concept, a: str) -> bool:
    onorm = normalize(_elhi_view(o))
    if c not in set(onorm.sub_concepts):
        raise ValueError(f"{c} is not a sub-concept of the ontology")
    sat = saturate(d, onorm)
    return onorm.defname[c] in sat.types.get(a, frozenset())


def type_implies(o: Ontology, t1: Iterable[Concept], t2: Iterable[Concept]) -> bool:
    """Every model realizing ``t1`` somewhere also realizes ``t2`` somewhere."""
    t1, t2 = list(t1), list(t2)
    if not t2:
        return True
    if set(t2) <= set(t1):
        return True
    marker = conj(*t2)
    o2 = Ontology(list(_elhi_view(o).axioms) + [ConceptInclusion(marker, BOT)],
                  Dialect.ELHI_BOT)
    onorm = normalize(o2, t1)
    seed = onorm.names_of(t1)
    return onorm.is_unsat(seed)


def max_successor_types(o: Ontology, t: Iterable[Concept], r: Role) -> list[frozenset]:
    """Inclusion-maximal types t2 with ``o |= conj(t) <= exists r . conj(t2)``,
    read off the canonical root's ``r``-children."""
    onorm = normalize(_elhi_view(o), list(t))
    seed = onorm.names_of(t)
    if onorm.is_unsat(seed):
        return [frozenset(onorm.sub_concepts) - {TOP}]
    canon = onorm._engine.canonical(onorm._engine.close(seed))
    cands = []
    for (parent, rule), child in canon.child_types.items():
        if parent == canon.root and r in onorm.super_roles.get(rule.role, {rule.role}):
            cands.append(onorm.concepts_of(child))
    out = []
    for c in cands:
        if not any(c < other for other in cands):
            out.append(c)
    return sorted(set(out), key=lambda s: sorted(x.key() for x in s))


def _elhi_view(o: Ontology) -> Ontology:
    """The ELHI_bot part of an ontology: DL-Lite inclusions translate
    directly; role disjointness folds into unsatisfiable existentials;
    functionality is handled by the callers that own it."""
    if o.dialect in ELHI_FAMILY:
        return o
    if o.dialect not in DLLITE_FAMILY:
        raise UnsupportedDialect(o.dialect.value)
    axioms: list = list(o.concept_inclusions())
    axioms += o.role_inclusions()
    sup = _role_closure(Ontology(axioms, Dialect.ELHI_BOT))
    for dis in o.role_disjointness():
        targets = set(dis.roles)
        for r in sorted({x for x in sup} | {Role(n) for n in targets}, key=str):
            if r.inverted:
                continue
            covered = {s.name for s in sup.get(r, frozenset({r})) if not s.inverted}
            if targets <= covered:
                axioms.append(ConceptInclusion(Exists(r, TOP), BOT))
                axioms.append(ConceptInclusion(Exists(r.inverse(), TOP), BOT))
    return Ontology(axioms, Dialect.ELHI_BOT)


def is_consistent(d: Database, o: Ontology) -> bool:
    """Consistency of a database with an ontology (ELHI_bot or DL-Lite)."""
    if o.dialect in DLLITE_FAMILY:
        for fr in o.functional_roles():
            for a in d.dom:
                if len(d.successors(a, Role(fr))) > 1:
                    return False
        sup = _role_closure(_elhi_view(o))
        pairs: dict[tuple, set] = {}
        for f in d.role_facts():
            for s in sup.get(Role(f.name), frozenset({Role(f.name)})):
                key = (f.b, f.a) if s.inverted else (f.a, f.b)
                pairs.setdefault(key, set()).add(s.name)
        for dis in o.role_disjointness():
            for names in pairs.values():
                if set(dis.roles) <= names:
                    return False
    sat = saturate(d, normalize(_elhi_view(o)))
    return not sat.clashes()

"""Core data model: roles, concepts, axioms, ontologies, databases, queries.

Everything in this module is immutable and hashable.  Conjunctions are
flattened and kept in a canonical (sorted) order so that structurally
equal concepts compare equal regardless of how they were written down.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Union


# ---------------------------------------------------------------------------
# Roles and concepts


@dataclass(frozen=True, order=True)
class Role:
    """A role name or its inverse.  ``(r^-)^- = r`` by construction."""

    name: str
    inverted: bool = False

    def inverse(self) -> "Role":
        return Role(self.name, not self.inverted)

    def __str__(self) -> str:
        return f"inv({self.name})" if self.inverted else self.name


class Concept:
    """Base class for concept AST nodes."""

    __slots__ = ()

    def key(self):
        raise NotImplementedError

    def is_el(self) -> bool:
        """True if the concept uses no inverse roles."""
        return all(not r.inverted for r in self.roles())

    def roles(self) -> Iterator[Role]:
        return iter(())

    def subconcepts(self) -> Iterator["Concept"]:
        """All subconcepts including the concept itself."""
        yield self

    def contains_bot(self) -> bool:
        return any(isinstance(c, Bot) for c in self.subconcepts())

    def __lt__(self, other: "Concept") -> bool:
        return self.key() < other.key()


@dataclass(frozen=True)
class Top(Concept):
    __slots__ = ()

    def key(self):
        return (0,)

    def __str__(self) -> str:
        return "top"


@dataclass(frozen=True)
class Bot(Concept):
    __slots__ = ()

    def key(self):
        return (1,)

    def __str__(self) -> str:
        return "bot"


@dataclass(frozen=True)
class Atomic(Concept):
    __slots__ = ("name",)
    name: str

    def key(self):
        return (2, self.name)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Exists(Concept):
    __slots__ = ("role", "filler")
    role: Role
    filler: Concept

    def key(self):
        return (3, self.role.name, self.role.inverted, self.filler.key())

    def roles(self) -> Iterator[Role]:
        yield self.role
        yield from self.filler.roles()

    def subconcepts(self) -> Iterator[Concept]:
        yield self
        yield from self.filler.subconcepts()

    def __str__(self) -> str:
        filler = str(self.filler)
        if isinstance(self.filler, Conj):
            filler = f"({filler})"
        return f"exists {self.role} . {filler}"


@dataclass(frozen=True)
class Conj(Concept):
    """Conjunction over a flattened, canonically ordered tuple of parts."""

    __slots__ = ("parts",)
    parts: tuple

    def key(self):
        return (4,) + tuple(p.key() for p in self.parts)

    def roles(self) -> Iterator[Role]:
        for p in self.parts:
            yield from p.roles()

    def subconcepts(self) -> Iterator[Concept]:
        yield self
        for p in self.parts:
            yield from p.subconcepts()

    def __str__(self) -> str:
        out = []
        for p in self.parts:
            s = str(p)
            if isinstance(p, Exists):
                s = f"({s})"
            out.append(s)
        return " & ".join(out)


TOP = Top()
BOT = Bot()


def conj(*parts: Concept) -> Concept:
    """Build a conjunction, flattening nested ones and sorting the parts."""
    flat: list[Concept] = []
    for p in parts:
        if isinstance(p, Conj):
            flat.extend(p.parts)
        else:
            flat.append(p)
    flat.sort(key=lambda c: c.key())
    if len(flat) == 1:
        return flat[0]
    if not flat:
        return TOP
    return Conj(tuple(flat))


def is_basic_concept(c: Concept) -> bool:
    """Concept name, top, bot, or an unqualified existential restriction."""
    if isinstance(c, (Top, Bot, Atomic)):
        return True
    return isinstance(c, Exists) and isinstance(c.filler, Top)


# ---------------------------------------------------------------------------
# Axioms and ontologies


@dataclass(frozen=True, order=True)
class ConceptInclusion:
    lhs: Concept
    rhs: Concept

    def __str__(self) -> str:
        return f"{self.lhs} <= {self.rhs}"


@dataclass(frozen=True, order=True)
class RoleInclusion:
    lhs: Role
    rhs: Role

    def __str__(self) -> str:
        return f"{self.lhs} <= {self.rhs}"


@dataclass(frozen=True, order=True)
class RangeRestriction:
    """``range r <= C``, standing for the inclusion  exists inv(r).top <= C."""

    role: str
    filler: Concept

    def as_inclusion(self) -> ConceptInclusion:
        return ConceptInclusion(Exists(Role(self.role, True), TOP), self.filler)

    def __str__(self) -> str:
        return f"range {self.role} <= {self.filler}"


@dataclass(frozen=True, order=True)
class RoleDisjointness:
    roles: tuple  # role names

    def __str__(self) -> str:
        return "disjoint-roles " + ", ".join(self.roles)


@dataclass(frozen=True, order=True)
class Functionality:
    role: str

    def __str__(self) -> str:
        return f"func {self.role}"


Axiom = Union[ConceptInclusion, RoleInclusion, RangeRestriction, RoleDisjointness, Functionality]

_AXIOM_ORDER = (ConceptInclusion, RoleInclusion, RangeRestriction, RoleDisjointness, Functionality)


def axiom_key(ax: Axiom):
    for i, cls in enumerate(_AXIOM_ORDER):
        if isinstance(ax, cls):
            return (i, str(ax))
    raise TypeError(f"not an axiom: {ax!r}")


class Dialect(str, enum.Enum):
    EL = "EL"
    EL_BOT = "EL_bot"
    ELH_BOT = "ELH_bot"
    ELHDR_BOT = "ELHdr_bot"
    ELI = "ELI"
    ELI_BOT = "ELI_bot"
    ELHI_BOT = "ELHI_bot"
    DLLITE_R = "DL-LiteR"
    DLLITE_R_HORN = "DL-LiteR-horn"
    DLLITE_F = "DL-LiteF"
    DLLITE_F_EQ = "DL-LiteF-eq"


# Dialects the ELHI_bot reasoning engine accepts directly.
ELHI_FAMILY = {
    Dialect.EL,
    Dialect.EL_BOT,
    Dialect.ELH_BOT,
    Dialect.ELHDR_BOT,
    Dialect.ELI,
    Dialect.ELI_BOT,
    Dialect.ELHI_BOT,
}

DLLITE_FAMILY = {
    Dialect.DLLITE_R,
    Dialect.DLLITE_R_HORN,
    Dialect.DLLITE_F,
    Dialect.DLLITE_F_EQ,
}

# Order used when inferring the least dialect admitting a set of axioms.
DIALECT_INFERENCE_ORDER = (
    Dialect.EL,
    Dialect.EL_BOT,
    Dialect.ELH_BOT,
    Dialect.ELHDR_BOT,
    Dialect.ELI,
    Dialect.ELI_BOT,
    Dialect.ELHI_BOT,
    Dialect.DLLITE_F_EQ,
    Dialect.DLLITE_R,
    Dialect.DLLITE_F,
    Dialect.DLLITE_R_HORN,
)


@dataclass(frozen=True)
class Ontology:
    axioms: frozenset
    dialect: Dialect

    def __init__(self, axioms: Iterable[Axiom], dialect: Dialect = Dialect.ELHI_BOT):
        object.__setattr__(self, "axioms", frozenset(axioms))
        object.__setattr__(self, "dialect", dialect)
        bad = check_dialect_axioms(self.axioms, dialect)
        if bad:
            raise DialectError(dialect, bad)

    def sorted_axioms(self) -> list:
        return sorted(self.axioms, key=axiom_key)

    def concept_inclusions(self) -> list[ConceptInclusion]:
        out = [a for a in self.axioms if isinstance(a, ConceptInclusion)]
        out += [a.as_inclusion() for a in self.axioms if isinstance(a, RangeRestriction)]
        return sorted(out)

    def role_inclusions(self) -> list[RoleInclusion]:
        return sorted(a for a in self.axioms if isinstance(a, RoleInclusion))

    def functional_roles(self) -> frozenset:
        return frozenset(a.role for a in self.axioms if isinstance(a, Functionality))

    def role_disjointness(self) -> list[RoleDisjointness]:
        return sorted(a for a in self.axioms if isinstance(a, RoleDisjointness))

    def concept_names(self) -> frozenset:
        names = set()
        for ci in self.concept_inclusions():
            for side in (ci.lhs, ci.rhs):
                names.update(s.name for s in side.subconcepts() if isinstance(s, Atomic))
        return frozenset(names)

    def role_names(self) -> frozenset:
        names = set()
        for ci in self.concept_inclusions():
            for side in (ci.lhs, ci.rhs):
                names.update(r.name for r in side.roles())
        for ri in self.role_inclusions():
            names.add(ri.lhs.name)
            names.add(ri.rhs.name)
        for ax in self.axioms:
            if isinstance(ax, Functionality):
                names.add(ax.role)
            elif isinstance(ax, RoleDisjointness):
                names.update(ax.roles)
        return frozenset(names)

    def __str__(self) -> str:
        return "\n".join(str(a) for a in self.sorted_axioms())


class DialectError(ValueError):
    """An axiom set does not fit the declared dialect."""

    def __init__(self, dialect: Dialect, violations: list[str]):
        self.dialect = dialect
        self.violations = violations
        super().__init__(f"dialect {dialect.value}: " + "; ".join(violations))


def _el_concept_ok(c: Concept, allow_bot: bool, allow_inverse: bool) -> bool:
    if c.contains_bot() and not allow_bot:
        return False
    if not allow_inverse and not c.is_el():
        return False
    return True


def _check_inclusion_shape(ax: ConceptInclusion, allow_bot, allow_inverse) -> Optional[str]:
    # bot may appear only as the full right-hand side
    if ax.lhs.contains_bot():
        return f"bot on the left-hand side of {ax}"
    if ax.rhs.contains_bot() and not isinstance(ax.rhs, Bot):
        return f"bot nested inside the right-hand side of {ax}"
    if not allow_bot and isinstance(ax.rhs, Bot):
        return f"bot not admitted: {ax}"
    if not allow_inverse and (not ax.lhs.is_el() or not ax.rhs.is_el()):
        return f"inverse role not admitted: {ax}"
    return None


def _check_dllite_inclusion(ax: ConceptInclusion, horn: bool) -> Optional[str]:
    lhs_parts = ax.lhs.parts if isinstance(ax.lhs, Conj) else (ax.lhs,)
    if not all(is_basic_concept(b) for b in lhs_parts):
        return f"non-basic concept on the left of {ax}"
    if not is_basic_concept(ax.rhs):
        return f"non-basic concept on the right of {ax}"
    if not horn and len(lhs_parts) > 1 and not isinstance(ax.rhs, Bot):
        return f"conjunctive left-hand side needs bot right-hand side: {ax}"
    return None


def check_dialect_axioms(axioms: Iterable[Axiom], dialect: Dialect) -> list[str]:
    """Return the list of violations (empty when every axiom is admitted)."""
    out: list[str] = []
    for ax in sorted(axioms, key=axiom_key):
        v = _check_one_axiom(ax, dialect)
        if v:
            out.append(v)
    return out


def _check_one_axiom(ax: Axiom, dialect: Dialect) -> Optional[str]:
    d = Dialect(dialect)
    if d in ELHI_FAMILY:
        allow_bot = d in (Dialect.EL_BOT, Dialect.ELH_BOT, Dialect.ELHDR_BOT,
                          Dialect.ELI_BOT, Dialect.ELHI_BOT)
        allow_inverse = d in (Dialect.ELI, Dialect.ELI_BOT, Dialect.ELHI_BOT)
        allow_role_inc = d in (Dialect.ELH_BOT, Dialect.ELHDR_BOT, Dialect.ELHI_BOT)
        if isinstance(ax, ConceptInclusion):
            return _check_inclusion_shape(ax, allow_bot, allow_inverse)
        if isinstance(ax, RoleInclusion):
            if not allow_role_inc:
                return f"role inclusion not admitted: {ax}"
            if not allow_inverse and (ax.lhs.inverted or ax.rhs.inverted):
                return f"inverse role not admitted: {ax}"
            return None
        if isinstance(ax, RangeRestriction):
            # expressible directly with an inverse role in ELHI_bot
            if d in (Dialect.ELHDR_BOT, Dialect.ELHI_BOT):
                if d is Dialect.ELHDR_BOT and not _el_concept_ok(ax.filler, True, False):
                    return f"range filler must be an EL_bot concept: {ax}"
                return None
            return f"range restriction not admitted: {ax}"
        return f"axiom form not admitted: {ax}"

    if d is Dialect.DLLITE_F_EQ:
        if isinstance(ax, Functionality):
            return None
        return f"only functionality assertions admitted: {ax}"

    if d in (Dialect.DLLITE_R, Dialect.DLLITE_R_HORN):
        if isinstance(ax, ConceptInclusion):
            return _check_dllite_inclusion(ax, horn=d is Dialect.DLLITE_R_HORN)
        if isinstance(ax, RoleInclusion):
            if ax.lhs.inverted:
                return f"inverse role on the left of a role inclusion: {ax}"
            return None
        if isinstance(ax, RoleDisjointness):
            return None
        return f"axiom form not admitted: {ax}"

    if d is Dialect.DLLITE_F:
        if isinstance(ax, ConceptInclusion):
            v = _check_dllite_inclusion(ax, horn=False)
            if v:
                return v
            lhs_parts = ax.lhs.parts if isinstance(ax.lhs, Conj) else (ax.lhs,)
            if len(lhs_parts) > 1 and not isinstance(ax.rhs, Bot):
                return f"conjunctive left-hand side needs bot right-hand side: {ax}"
            return None
        if isinstance(ax, (RoleDisjointness, Functionality)):
            return None
        return f"axiom form not admitted: {ax}"

    raise ValueError(f"unknown dialect {dialect!r}")


def infer_dialect(axioms: Iterable[Axiom]) -> Dialect:
    """Least dialect (along the fixed inference order) admitting all axioms."""
    axioms = list(axioms)
    for d in DIALECT_INFERENCE_ORDER:
        if not check_dialect_axioms(axioms, d):
            return d
    raise DialectError(Dialect.ELHI_BOT, check_dialect_axioms(axioms, Dialect.ELHI_BOT))


def check_dialect(o: Ontology) -> list[str]:
    """Violation report for the ontology against its own dialect tag."""
    return check_dialect_axioms(o.axioms, o.dialect)


EMPTY_ONTOLOGY = Ontology((), Dialect.EL)


# ---------------------------------------------------------------------------
# Schemas, databases, facts


@dataclass(frozen=True)
class Schema:
    full: bool
    names: frozenset = field(default_factory=frozenset)

    @staticmethod
    def full_schema() -> "Schema":
        return Schema(True, frozenset())

    @staticmethod
    def of(names: Iterable[str]) -> "Schema":
        return Schema(False, frozenset(names))

    def admits(self, name: str) -> bool:
        return self.full or name in self.names

    def __str__(self) -> str:
        return "full" if self.full else "{" + ", ".join(sorted(self.names)) + "}"


FULL_SCHEMA = Schema.full_schema()


@dataclass(frozen=True, order=True)
class ConceptFact:
    """``A(a)``; also used as a unary query atom with a variable in ``a``."""

    name: str
    a: str

    def terms(self) -> tuple:
        return (self.a,)

    def rename(self, m) -> "ConceptFact":
        return ConceptFact(self.name, m.get(self.a, self.a))

    def __str__(self) -> str:
        return f"{self.name}({self.a})"


@dataclass(frozen=True, order=True)
class RoleFact:
    """``r(a,b)``; also used as a binary query atom."""

    name: str
    a: str
    b: str

    def terms(self) -> tuple:
        return (self.a, self.b)

    def rename(self, m) -> "RoleFact":
        return RoleFact(self.name, m.get(self.a, self.a), m.get(self.b, self.b))

    def __str__(self) -> str:
        return f"{self.name}({self.a},{self.b})"


Fact = Union[ConceptFact, RoleFact]


def fact_key(f: Fact) -> tuple:
    """Total order across unary and binary facts/atoms."""
    ts = f.terms()
    return (f.name, len(ts)) + ts


def sorted_facts(facts: Iterable[Fact]) -> list:
    return sorted(facts, key=fact_key)


class Database:
    """A finite set of unary and binary facts, with precomputed indexes."""

    __slots__ = ("facts", "dom", "_hash")

    def __init__(self, facts: Iterable[Fact] = ()):
        object.__setattr__(self, "facts", frozenset(facts))
        dom = set()
        for f in self.facts:
            dom.update(f.terms())
        object.__setattr__(self, "dom", frozenset(dom))
        object.__setattr__(self, "_hash", hash(self.facts))

    def __setattr__(self, *a):
        raise AttributeError("Database is immutable")

    def __eq__(self, other):
        return isinstance(other, Database) and self.facts == other.facts

    def __hash__(self):
        return self._hash

    def __contains__(self, fact: Fact) -> bool:
        return fact in self.facts

    def __len__(self) -> int:
        return len(self.facts)

    def __iter__(self) -> Iterator[Fact]:
        return iter(sorted_facts(self.facts))

    def concept_facts(self) -> Iterator[ConceptFact]:
        return (f for f in sorted_facts(self.facts) if isinstance(f, ConceptFact))

    def role_facts(self) -> Iterator[RoleFact]:
        return (f for f in sorted_facts(self.facts) if isinstance(f, RoleFact))

    def concept_names_at(self, a: str) -> frozenset:
        return frozenset(f.name for f in self.facts
                         if isinstance(f, ConceptFact) and f.a == a)

    def successors(self, a: str, role: Role) -> frozenset:
        if role.inverted:
            return frozenset(f.a for f in self.facts
                             if isinstance(f, RoleFact) and f.name == role.name and f.b == a)
        return frozenset(f.b for f in self.facts
                         if isinstance(f, RoleFact) and f.name == role.name and f.a == a)

    def names(self) -> frozenset:
        return frozenset(f.name for f in self.facts)

    def union(self, other: "Database") -> "Database":
        return Database(self.facts | other.facts)

    def uses_only(self, schema: Schema) -> bool:
        return all(schema.admits(n) for n in self.names())

    def __str__(self) -> str:
        return "\n".join(str(f) for f in sorted_facts(self.facts))

    def __repr__(self) -> str:
        return f"Database({sorted_facts(self.facts)!r})"


def restrict_database(d: Database, constants: Iterable[str]) -> Database:
    """Keep exactly the facts all of whose constants lie in ``constants``."""
    keep = set(constants)
    return Database(f for f in d.facts if all(t in keep for t in f.terms()))


def gaifman_graph(d: Database) -> "UndirectedGraph":
    g = UndirectedGraph(d.dom)
    for f in d.facts:
        ts = f.terms()
        if len(ts) == 2 and ts[0] != ts[1]:
            g.add_edge(ts[0], ts[1])
    return g


class UndirectedGraph:
    """Simple undirected graph without self loops."""

    def __init__(self, vertices: Iterable = (), edges: Iterable = ()):
        self.adj: dict = {v: set() for v in vertices}
        for a, b in edges:
            self.add_edge(a, b)

    def add_vertex(self, v):
        self.adj.setdefault(v, set())

    def add_edge(self, a, b):
        if a == b:
            return
        self.adj.setdefault(a, set()).add(b)
        self.adj.setdefault(b, set()).add(a)

    @property
    def vertices(self) -> frozenset:
        return frozenset(self.adj)

    def edges(self) -> set:
        return {frozenset((a, b)) for a, nbrs in self.adj.items() for b in nbrs}

    def neighbours(self, v) -> set:
        return set(self.adj.get(v, ()))

    def degree(self, v) -> int:
        return len(self.adj.get(v, ()))

    def subgraph(self, keep: Iterable) -> "UndirectedGraph":
        keep = set(keep)
        g = UndirectedGraph(keep)
        for v in keep:
            for w in self.adj.get(v, ()):
                if w in keep:
                    g.add_edge(v, w)
        return g

    def connected_components(self) -> list[set]:
        seen: set = set()
        comps = []
        for v in sorted(self.adj, key=str):
            if v in seen:
                continue
            comp = {v}
            stack = [v]
            while stack:
                u = stack.pop()
                for w in self.adj[u]:
                    if w not in comp:
                        comp.add(w)
                        stack.append(w)
            seen |= comp
            comps.append(comp)
        return comps

    def is_connected(self) -> bool:
        return len(self.connected_components()) <= 1

    def copy(self) -> "UndirectedGraph":
        g = UndirectedGraph(self.adj)
        for v, nbrs in self.adj.items():
            g.adj[v] = set(nbrs)
        return g


# ---------------------------------------------------------------------------
# Queries


class QueryError(ValueError):
    pass


class CQ:
    """A conjunctive query with an ordered answer-variable tuple.

    Atoms are ``ConceptFact``/``RoleFact`` values whose terms are variable
    names.  Every answer variable must occur in some atom; equality atoms
    and constants are not supported.
    """

    __slots__ = ("answer_vars", "atoms", "_hash")

    def __init__(self, answer_vars: Iterable[str], atoms: Iterable[Fact]):
        avs = tuple(answer_vars)
        if len(set(avs)) != len(avs):
            raise QueryError(f"repeated answer variable in {avs}")
        atomset = frozenset(atoms)
        # Answer variables without atoms are tolerated here (the atom-free
        # fragment coming from the top concept needs them); the parser
        # rejects them for user-written queries.
        object.__setattr__(self, "answer_vars", avs)
        object.__setattr__(self, "atoms", atomset)
        object.__setattr__(self, "_hash", hash((avs, atomset)))

    def unbound_answer_vars(self) -> list[str]:
        bound: set = set()
        for at in self.atoms:
            bound.update(at.terms())
        return [x for x in self.answer_vars if x not in bound]

    def __setattr__(self, *a):
        raise AttributeError("CQ is immutable")

    def __eq__(self, other):
        return (isinstance(other, CQ) and self.answer_vars == other.answer_vars
                and self.atoms == other.atoms)

    def __hash__(self):
        return self._hash

    @property
    def arity(self) -> int:
        return len(self.answer_vars)

    def is_boolean(self) -> bool:
        return self.arity == 0

    def variables(self) -> frozenset:
        var = set(self.answer_vars)
        for at in self.atoms:
            var.update(at.terms())
        return frozenset(var)

    def quantified_vars(self) -> frozenset:
        return self.variables() - set(self.answer_vars)

    def as_database(self) -> Database:
        return Database(self.atoms)

    def restrict(self, keep: Iterable[str]) -> "CQ":
        """Restriction to a variable set; answer variables outside are dropped."""
        keep = set(keep)
        atoms = [at for at in self.atoms if all(t in keep for t in at.terms())]
        avs = tuple(x for x in self.answer_vars if x in keep)
        return CQ(avs, atoms)

    def rename(self, m: dict) -> "CQ":
        avs = tuple(m.get(x, x) for x in self.answer_vars)
        return CQ(avs, (at.rename(m) for at in self.atoms))

    def sorted_atoms(self) -> list:
        return sorted_facts(self.atoms)

    def names(self) -> frozenset:
        return frozenset(at.name for at in self.atoms)

    def __str__(self) -> str:
        head = "q(" + ",".join(self.answer_vars) + ")"
        body = ", ".join(str(a) for a in self.sorted_atoms())
        return f"{head} :- {body}"

    def __repr__(self) -> str:
        return f"CQ({self.answer_vars!r}, {self.sorted_atoms()!r})"


def cq_as_database(q: CQ) -> Database:
    return q.as_database()


class UCQ:
    """A nonempty disjunction of CQs sharing one answer-variable tuple."""

    __slots__ = ("disjuncts", "_hash")

    def __init__(self, disjuncts: Iterable[CQ]):
        ds = tuple(disjuncts)
        if not ds:
            raise QueryError("a UCQ needs at least one disjunct")
        avs = ds[0].answer_vars
        for d in ds[1:]:
            if d.answer_vars != avs:
                raise QueryError(
                    f"disjuncts disagree on answer variables: {avs} vs {d.answer_vars}")
        object.__setattr__(self, "disjuncts", ds)
        object.__setattr__(self, "_hash", hash(ds))

    def __setattr__(self, *a):
        raise AttributeError("UCQ is immutable")

    def __eq__(self, other):
        return isinstance(other, UCQ) and self.disjuncts == other.disjuncts

    def __hash__(self):
        return self._hash

    @property
    def answer_vars(self) -> tuple:
        return self.disjuncts[0].answer_vars

    @property
    def arity(self) -> int:
        return len(self.answer_vars)

    def is_boolean(self) -> bool:
        return self.arity == 0

    def names(self) -> frozenset:
        out: set = set()
        for d in self.disjuncts:
            out |= d.names()
        return frozenset(out)

    def __iter__(self) -> Iterator[CQ]:
        return iter(self.disjuncts)

    def __len__(self) -> int:
        return len(self.disjuncts)

    def __str__(self) -> str:
        return "\n".join(str(d) for d in self.disjuncts)


@dataclass(frozen=True)
class OMQ:
    ontology: Ontology
    schema: Schema
    query: UCQ

    @property
    def arity(self) -> int:
        return self.query.arity

    def with_query(self, q: UCQ) -> "OMQ":
        return OMQ(self.ontology, self.schema, q)


def single_cq_omq(o: Ontology, s: Schema, q: CQ) -> OMQ:
    return OMQ(o, s, UCQ((q,)))


# ---------------------------------------------------------------------------
# Concepts as queries


class FreshVars:
    """Deterministic fresh-symbol source, scoped per operation call."""

    def __init__(self, prefix: str = "_v"):
        self.prefix = prefix
        self.n = 0

    def next(self) -> str:
        s = f"{self.prefix}{self.n}"
        self.n += 1
        return s


def concept_as_cq(c: Concept, rooted: bool = True, fresh: Optional[FreshVars] = None) -> CQ:
    """Tree-shaped CQ representing ``c``; the root is the answer variable
    when ``rooted``, and the query is Boolean otherwise.

    ``top`` yields a single fresh variable with no atoms.
    """
    if c.contains_bot():
        raise QueryError("bot admits no query representation")
    fresh = fresh or FreshVars()
    root = fresh.next()
    atoms: list[Fact] = []
    _concept_atoms(c, root, fresh, atoms)
    if rooted:
        return CQ((root,), atoms)
    return CQ((), atoms)


def _concept_atoms(c: Concept, node: str, fresh: FreshVars, out: list) -> None:
    if isinstance(c, Top):
        return
    if isinstance(c, Atomic):
        out.append(ConceptFact(c.name, node))
        return
    if isinstance(c, Conj):
        for p in c.parts:
            _concept_atoms(p, node, fresh, out)
        return
    if isinstance(c, Exists):
        child = fresh.next()
        if c.role.inverted:
            out.append(RoleFact(c.role.name, child, node))
        else:
            out.append(RoleFact(c.role.name, node, child))
        _concept_atoms(c.filler, child, fresh, out)
        return
    raise QueryError(f"cannot translate {c!r}")


def concept_extension(d: Database, c: Concept) -> frozenset:
    """Constants of ``d`` in the extension of ``c`` (evaluated over ``d`` itself)."""
    if isinstance(c, Top):
        return d.dom
    if isinstance(c, Bot):
        return frozenset()
    if isinstance(c, Atomic):
        return frozenset(a for a in d.dom if c.name in d.concept_names_at(a))
    if isinstance(c, Conj):
        out = d.dom
        for p in c.parts:
            out = out & concept_extension(d, p)
        return out
    if isinstance(c, Exists):
        filler = concept_extension(d, c.filler)
        return frozenset(a for a in d.dom if d.successors(a, c.role) & filler)
    raise TypeError(f"not a concept: {c!r}")

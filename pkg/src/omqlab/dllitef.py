"""Functional-role handling: the inclusion/functionality split, forced
merges under functionality, single-atom generation, the Boolean-query
rewriting that eliminates ontology reasoning on functionality-respecting
databases, and the width-1 equivalence decision.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from .model import (
    Atomic,
    CQ,
    Concept,
    ConceptFact,
    Database,
    Dialect,
    DLLITE_FAMILY,
    Exists,
    FULL_SCHEMA,
    FreshVars,
    OMQ,
    Ontology,
    QueryError,
    Role,
    RoleFact,
    TOP,
    UCQ,
    cq_as_database,
    gaifman_graph,
    single_cq_omq,
)
from .entailment import _elhi_view, is_consistent
from .evaluation import evaluate_naive
from .graphalg import MINOR_VERTEX_CAP, CapExceeded, is_minor
from .homtools import contractions, find_homomorphism
from .treelike import (
    TwEquivVerdict,
    cq_canonical,
    contains_full_schema,
    decide_tw_equiv_full,
)

REW_VARIABLE_CAP = 10


@dataclass(frozen=True)
class FunctionalSplit:
    inclusions: Ontology          # everything except functionality
    functionalities: frozenset    # functional role names


def split_ontology(o: Ontology) -> FunctionalSplit:
    if o.dialect not in (Dialect.DLLITE_F, Dialect.DLLITE_F_EQ):
        raise ValueError(f"functional split expects DL-LiteF, got {o.dialect.value}")
    from .model import Functionality
    rest = [ax for ax in o.sorted_axioms() if not isinstance(ax, Functionality)]
    return FunctionalSplit(Ontology(rest, Dialect.DLLITE_F),
                           frozenset(o.functional_roles()))


def satisfies_functionality(d: Database, funcs: Iterable[str]) -> bool:
    for r in funcs:
        for a in d.dom:
            if len(d.successors(a, Role(r))) > 1:
                return False
    return True


def id_functional(q: UCQ, funcs: Iterable[str]) -> UCQ:
    """Minimal contraction of each disjunct respecting the functionality
    assertions: merge y1, y2 whenever r(x,y1), r(x,y2) for functional r."""
    funcs = frozenset(funcs)
    return UCQ(tuple(_id_one(cq, funcs) for cq in q.disjuncts))


def _id_one(cq: CQ, funcs: frozenset) -> CQ:
    if not cq.is_boolean():
        raise QueryError("functional identification expects Boolean queries")
    parent = {v: v for v in cq.variables()}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    atoms = set(cq.atoms)
    changed = True
    while changed:
        changed = False
        succ: dict = {}
        for at in atoms:
            if isinstance(at, RoleFact) and at.name in funcs:
                succ.setdefault((find(at.a), at.name), set()).add(find(at.b))
        for (_, _), bs in succ.items():
            bs = sorted(bs)
            for other in bs[1:]:
                if find(other) != find(bs[0]):
                    parent[find(other)] = find(bs[0])
                    changed = True
        if changed:
            atoms = {at.rename({v: find(v) for v in cq.variables()}) for at in atoms}
    return CQ((), atoms)


# ---------------------------------------------------------------------------
# Single-atom generation


def generates(o: Ontology, atom, p: CQ, rooted: bool = True) -> bool:
    """Certain-answer check of ``p`` over the single-atom database
    ``{atom}`` (whose variables act as constants).  In rooted mode the
    query's answer variable must be answered by its own name in the atom;
    detached mode asks for a Boolean match anywhere."""
    d = Database([atom])
    res = evaluate_naive(OMQ(_elhi_view(o), FULL_SCHEMA, UCQ((p,))), d)
    if not rooted:
        return bool(res.answers)
    if not p.answer_vars:
        raise QueryError("rooted generation needs a unary query")
    root = p.answer_vars[0]
    if root not in d.dom:
        return False
    return (root,) in res.answers


# ---------------------------------------------------------------------------
# Trees hanging off a query, and the rewriting construction


def _trees_in(q: CQ, protected: frozenset = frozenset()) -> list[tuple[str, frozenset]]:
    """Pendant trees: pairs (root x, atoms) where x is an articulation
    point and the atoms form a tree hanging below x (edge directions are
    free; the chase can generate edges pointing either way).  Trees never
    contain protected (answer) variables except possibly as the root."""
    g = gaifman_graph(cq_as_database(q))
    out = []
    for x in sorted(q.variables()):
        rest = set(q.variables()) - {x}
        sub = g.subgraph(rest)
        for comp in sub.connected_components():
            if comp & protected:
                continue
            atoms = frozenset(at for at in q.atoms
                              if set(at.terms()) <= comp | {x}
                              and set(at.terms()) & comp)
            if not atoms:
                continue
            if not _is_pendant_tree(atoms, x):
                continue
            out.append((x, atoms))
    return out


def _is_pendant_tree(atoms: frozenset, root: str) -> bool:
    pairs = set()
    nodes = {root}
    for at in atoms:
        ts = at.terms()
        nodes.update(ts)
        if len(ts) == 2:
            if ts[0] == ts[1]:
                return False
            pairs.add(frozenset(ts))
    if len(pairs) != len(nodes) - 1:
        return False
    adj: dict = {}
    for e in pairs:
        a, b = tuple(e)
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    seen = {root}
    stack = [root]
    while stack:
        u = stack.pop()
        for w in adj.get(u, ()):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen == nodes


def _generator_atoms(o: Ontology, q_names: Iterable[str], x: str, fresh: FreshVars):
    """Candidate generating atoms anchored at ``x``: A(x), S(x,z), S(z,x)."""
    onames = _elhi_view(o)
    concepts = sorted({s.name for ax in onames.concept_inclusions()
                       for side in (ax.lhs, ax.rhs)
                       for s in side.subconcepts() if isinstance(s, Atomic)}
                      | set(q_names))
    roles = sorted({r.name for ax in onames.concept_inclusions()
                    for side in (ax.lhs, ax.rhs) for r in side.roles()}
                   | {ri.lhs.name for ri in onames.role_inclusions()}
                   | {ri.rhs.name for ri in onames.role_inclusions()})
    for name in concepts:
        yield ConceptFact(name, x)
    for name in roles:
        yield RoleFact(name, x, fresh.next())
        yield RoleFact(name, fresh.next(), x)


def rewrite_family(o: Ontology, p: CQ, minor_gate: bool = True) -> list[CQ]:
    """All queries producible by: contracting ``p``, removing a set of
    ontology-generatable pendant trees (optionally gated on the result
    staying a minor of the original), re-attaching a generating atom per
    removed tree, and replacing detachedly generatable components by their
    generating atoms.  Deduplicated up to isomorphism.  Answer variables
    never vanish into removed trees or replaced components."""
    if len(p.variables()) > REW_VARIABLE_CAP:
        raise CapExceeded(
            f"rewriting enumeration capped at {REW_VARIABLE_CAP} variables")
    protected = frozenset(p.answer_vars)
    results: dict = {}
    g_p = gaifman_graph(cq_as_database(p))
    onames = _elhi_view(o)
    q_names = p.names()
    gen_cache: dict = {}

    def tree_generators(atoms: frozenset, root: str) -> list:
        key = (atoms, root)
        if key in gen_cache:
            return gen_cache[key]
        sub = CQ((root,), atoms)
        fresh = FreshVars("_g")
        out = [at for at in _generator_atoms(o, q_names, root, fresh)
               if generates(onames, at, sub, rooted=True)]
        gen_cache[key] = out
        return out

    det_cache: dict = {}

    def detached_generators(atoms: frozenset) -> list:
        if atoms in det_cache:
            return det_cache[atoms]
        sub = CQ((), atoms)
        fresh = FreshVars("_g")
        out = [at for at in _generator_atoms(o, q_names, "_d0", fresh)
               if generates(onames, at, sub, rooted=False)]
        det_cache[atoms] = out
        return out

    for pc, _ in contractions(p):
        trees = _trees_in(pc, protected)
        # sets of pairwise variable-disjoint trees (roots may coincide)
        for tset in _tree_subsets(trees):
            removed = frozenset().union(*(a for _, a in tset)) if tset else frozenset()
            remaining = frozenset(pc.atoms) - removed
            kept_vars = {t for at in remaining for t in at.terms()} | {
                x for x, _ in tset}
            if minor_gate:
                g_body = gaifman_graph(Database(remaining))
                for x in kept_vars - {t for at in remaining for t in at.terms()}:
                    g_body.add_vertex(x)
                try:
                    if not is_minor(g_body, g_p):
                        continue
                except CapExceeded:
                    continue
            gen_options = []
            ok = True
            for x, atoms in tset:
                gens = tree_generators(atoms, x)
                if not gens:
                    ok = False
                    break
                gen_options.append([(x, g) for g in gens])
            if not ok:
                continue
            for combo in itertools.product(*gen_options) if gen_options else [()]:
                atoms2 = set(remaining)
                fresh = FreshVars("_f")
                for x, g in combo:
                    atoms2.add(_instantiate_generator(g, x, fresh))
                base = CQ(p.answer_vars, atoms2)
                for variant in _detached_variants(base, detached_generators,
                                                  protected):
                    key = cq_canonical(variant)
                    if key not in results:
                        results[key] = variant
    return [results[k] for k in sorted(results)]


def _instantiate_generator(g, x: str, fresh: FreshVars):
    """Re-anchor a generator atom (built around some anchor) at ``x``."""
    if isinstance(g, ConceptFact):
        return ConceptFact(g.name, x)
    if g.a.startswith("_g"):
        return RoleFact(g.name, fresh.next(), x)
    return RoleFact(g.name, x, fresh.next())


def _tree_subsets(trees: list):
    """Subsets of pendant trees that are variable-disjoint except possibly
    at their roots."""
    yield ()
    for size in range(1, len(trees) + 1):
        for combo in itertools.combinations(trees, size):
            ok = True
            for (x1, a1), (x2, a2) in itertools.combinations(combo, 2):
                v1 = {t for at in a1 for t in at.terms()} - {x1}
                v2 = {t for at in a2 for t in at.terms()} - {x2}
                if v1 & v2 or x1 in v2 or x2 in v1:
                    ok = False
                    break
            if ok:
                yield combo


def _detached_variants(base: CQ, detached_generators,
                       protected: frozenset = frozenset()) -> Iterable[CQ]:
    """Replace any set of fully detachable components by generating atoms;
    components holding protected variables stay."""
    comps = _components(base)
    det: list[tuple[frozenset, list]] = []
    for comp_atoms in comps:
        if {t for at in comp_atoms for t in at.terms()} & protected:
            continue
        gens = detached_generators(comp_atoms)
        if gens:
            det.append((comp_atoms, gens))
    yield base
    if not det:
        return
    fresh = FreshVars("_h")
    for size in range(1, len(det) + 1):
        for combo in itertools.combinations(det, size):
            for choice in itertools.product(*(gens for _, gens in combo)):
                atoms = set(base.atoms)
                for (comp_atoms, _), g in zip(combo, choice):
                    atoms -= comp_atoms
                    atoms.add(_rename_detached(g, fresh))
                yield CQ(base.answer_vars, atoms)


def _rename_detached(g, fresh: FreshVars):
    if isinstance(g, ConceptFact):
        return ConceptFact(g.name, fresh.next())
    return RoleFact(g.name, fresh.next(), fresh.next())


def _components(q: CQ) -> list[frozenset]:
    g = gaifman_graph(cq_as_database(q))
    out = []
    for comp in g.connected_components():
        atoms = frozenset(at for at in q.atoms if set(at.terms()) <= comp)
        if atoms:
            out.append(atoms)
    return out


def rew(Q: OMQ) -> UCQ:
    """The rewriting of a Boolean OMQ: on databases satisfying the
    functionality assertions, it evaluates exactly like the input."""
    if not Q.schema.full:
        raise QueryError("the rewriting is defined over the full schema")
    if Q.ontology.dialect not in (Dialect.DLLITE_F, Dialect.DLLITE_F_EQ):
        raise ValueError("rew expects a DL-LiteF ontology")
    split = split_ontology(Q.ontology)
    disjuncts: dict = {}
    for p in Q.query.disjuncts:
        for w in rewrite_family(split.inclusions, p, minor_gate=True):
            disjuncts.setdefault(cq_canonical(w), w)
    return UCQ(tuple(disjuncts[k] for k in sorted(disjuncts)))


# ---------------------------------------------------------------------------
# Width-1 equivalence for DL-LiteF


def decide_ubcq1_equiv(Q: OMQ) -> TwEquivVerdict:
    """Width-1 equivalence of a Boolean DL-LiteF OMQ over the full schema,
    via the functionality-respecting contraction and the exact full-schema
    decision for the inclusion part."""
    if not Q.schema.full:
        raise QueryError("the width-1 decision is defined over the full schema")
    if not Q.query.is_boolean():
        raise QueryError("the width-1 decision expects Boolean queries")
    split = split_ontology(Q.ontology)
    q2 = id_functional(Q.query, split.functionalities)
    Q2 = OMQ(_elhi_view(split.inclusions), FULL_SCHEMA, q2)
    verdict = decide_tw_equiv_full(Q2, 1)
    if verdict.is_yes():
        witness = OMQ(Q.ontology, FULL_SCHEMA, verdict.witness.query)
        return TwEquivVerdict("yes", witness=witness)
    return TwEquivVerdict("no", counterexample=verdict.counterexample)


def ubcq_equiv_via_disjuncts(Q: OMQ, k: int,
                             per_bcq_decider: Optional[Callable] = None) -> bool:
    """A union of Boolean queries is width-``k`` equivalent iff every
    disjunct either is so on its own or is contained in another disjunct."""
    if not Q.query.is_boolean():
        raise QueryError("expects Boolean queries")
    if per_bcq_decider is None:
        if k != 1:
            raise ValueError("only the width-1 decider ships by default")
        per_bcq_decider = lambda omq: decide_ubcq1_equiv(omq).is_yes()
    for i, p in enumerate(Q.query.disjuncts):
        if per_bcq_decider(single_cq_omq(Q.ontology, Q.schema, p)):
            continue
        others = [other for j, other in enumerate(Q.query.disjuncts) if j != i]
        if not others:
            return False
        contained = any(
            contains_full_schema(single_cq_omq(Q.ontology, Q.schema, p),
                                 single_cq_omq(Q.ontology, Q.schema, other))
            for other in others)
        if not contained:
            return False
    return True

"""Semantic tree-likeness machinery: UCQ_k-approximation, full-schema
containment and emptiness, maximum contractions, rewritings, the
tree-likeness decision procedures, and witness-bounded containment for
the DL-Lite(R,horn) family.

Everything here runs at desk scale: contraction spaces are enumerated
exhaustively (Bell numbers of the variable count) and candidate
subqueries smallest-first, so verdicts and witnesses are deterministic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

from .model import (
    Atomic,
    CQ,
    Concept,
    ConceptFact,
    ConceptInclusion,
    Database,
    Dialect,
    DLLITE_FAMILY,
    ELHI_FAMILY,
    Exists,
    FULL_SCHEMA,
    FreshVars,
    OMQ,
    Ontology,
    QueryError,
    Role,
    RoleFact,
    Schema,
    TOP,
    UCQ,
    concept_as_cq,
    cq_as_database,
    conj,
    single_cq_omq,
)
from .chase import canonical_model
from .entailment import (
    _elhi_view,
    entailed_concept_fact,
    is_consistent,
    normalize,
)
from .evaluation import chase_steps, evaluate_naive
from .graphalg import cq_treewidth
from .homtools import contractions, find_homomorphism, iter_homomorphisms


class SchemaPrecondition(ValueError):
    pass


@dataclass(frozen=True)
class TwEquivVerdict:
    outcome: str                       # "yes" | "no" | "unknown"
    witness: Optional[OMQ] = None      # for "yes": an equivalent UCQ_k OMQ
    counterexample: Optional[Database] = None
    note: str = ""

    def is_yes(self) -> bool:
        return self.outcome == "yes"


# ---------------------------------------------------------------------------
# Canonical forms (isomorphism dedup)


def cq_canonical(q: CQ) -> tuple:
    """Canonical form under renamings of quantified variables."""
    qs = sorted(q.quantified_vars())
    best = None
    for perm in itertools.permutations(range(len(qs))):
        m = {v: f"_q{perm[i]}" for i, v in enumerate(qs)}
        atoms = tuple(sorted(str(at.rename(m)) for at in q.atoms))
        key = (q.answer_vars, atoms)
        if best is None or key < best:
            best = key
    if best is None:
        best = (q.answer_vars, tuple(sorted(map(str, q.atoms))))
    return best


def db_canonical(d: Database) -> tuple:
    consts = sorted(d.dom)
    best = None
    for perm in itertools.permutations(range(len(consts))):
        m = {c: f"_c{perm[i]}" for i, c in enumerate(consts)}
        key = tuple(sorted(str(f.rename(m)) for f in d.facts))
        if best is None or key < best:
            best = key
    return best if best is not None else ()


# ---------------------------------------------------------------------------
# Approximation and containment


def ucq_k_approximation(Q: OMQ, k: int) -> OMQ:
    """Same ontology and schema; the query becomes every contraction of a
    disjunct whose tree width is at most ``k`` (deduplicated)."""
    out: list[CQ] = []
    seen: set = set()
    for cq in Q.query.disjuncts:
        for qc, _ in contractions(cq):
            if cq_treewidth(qc) > k:
                continue
            key = cq_canonical(qc)
            if key not in seen:
                seen.add(key)
                out.append(qc)
    if not out:
        # no tree-like contraction exists; the approximation is the empty
        # query, represented by an unsatisfiable disjunct over fresh names
        out = [_unsatisfiable_disjunct(Q)]
    return OMQ(Q.ontology, Q.schema, UCQ(out))


def _unsatisfiable_disjunct(Q: OMQ) -> CQ:
    # a fresh concept name never entailed: matches nothing beyond its own
    # occurrences, and the schema keeps it out of databases when non-full
    names = {n for cq in Q.query.disjuncts for n in cq.names()}
    fresh = "_never"
    while fresh in names:
        fresh += "_"
    avs = Q.query.answer_vars
    atoms = [ConceptFact(fresh, x) for x in avs] or [ConceptFact(fresh, "_z")]
    return CQ(avs, atoms)


def disjunct_contained(o: Ontology, q1: CQ, q2: CQ) -> bool:
    """(o, full, q1) <= (o, full, q2) via the chase-homomorphism criterion."""
    d1 = cq_as_database(q1)
    if not is_consistent(d1, o):
        return True
    cm = canonical_model(d1, o, chase_steps(UCQ((q2,))))
    fixed = dict(zip(q2.answer_vars, q1.answer_vars))
    return find_homomorphism(q2, cm.database, fixed) is not None


def contains_full_schema(Q1: OMQ, Q2: OMQ) -> bool:
    """Q1 <= Q2 over the full schema: every consistent disjunct database of
    Q1 must admit a homomorphism from some disjunct of Q2 into its chase,
    fixing the answer tuple."""
    if not (Q1.schema.full and Q2.schema.full):
        raise SchemaPrecondition("containment check requires the full schema")
    if Q1.arity != Q2.arity:
        return False
    for q1 in Q1.query.disjuncts:
        d1 = cq_as_database(q1)
        if not is_consistent(d1, Q1.ontology):
            continue
        cm = canonical_model(d1, Q2.ontology, chase_steps(Q2.query))
        hit = False
        for q2 in Q2.query.disjuncts:
            fixed = dict(zip(q2.answer_vars, q1.answer_vars))
            if find_homomorphism(q2, cm.database, fixed) is not None:
                hit = True
                break
        if not hit:
            return False
    return True


def equivalent_full_schema(Q1: OMQ, Q2: OMQ) -> bool:
    return contains_full_schema(Q1, Q2) and contains_full_schema(Q2, Q1)


def is_empty_full_schema(Q: OMQ) -> bool:
    if not Q.schema.full:
        raise SchemaPrecondition("emptiness test requires the full schema")
    return all(not is_consistent(cq_as_database(cq), Q.ontology)
               for cq in Q.query.disjuncts)


# ---------------------------------------------------------------------------
# Maximum contractions and rewritings


def _equivalent_contractions(Q: OMQ) -> list[tuple[CQ, tuple]]:
    """Contractions q_c with (O, full, q_c) equivalent to Q, with their
    partitions.  Containment of Q in the contraction is automatic."""
    q = Q.query.disjuncts[0]
    dq = cq_as_database(q)
    if not is_consistent(dq, Q.ontology):
        raise QueryError("maximum contractions need a non-empty input")
    cm = canonical_model(dq, Q.ontology, chase_steps(Q.query))
    out = []
    for qc, part in contractions(q):
        fixed = {x: x for x in qc.answer_vars}
        if find_homomorphism(qc, cm.database, fixed) is not None:
            out.append((qc, part))
    return out


def _coarsens(p1: tuple, p2: tuple) -> bool:
    """Every block of p2 lies inside a block of p1 (p1 is coarser)."""
    blocks1 = [set(b) for b in p1]
    return all(any(set(b) <= b1 for b1 in blocks1) for b in p2)


def maximum_contractions(Q: OMQ) -> list[OMQ]:
    """All equivalence-preserving contractions admitting no further
    equivalence-preserving proper contraction."""
    if not Q.schema.full:
        raise SchemaPrecondition("maximum contractions require the full schema")
    if len(Q.query.disjuncts) != 1:
        raise QueryError("maximum contractions take a single-CQ query")
    equiv = _equivalent_contractions(Q)
    out = []
    for qc, part in equiv:
        if any(part != p2 and _coarsens(p2, part) for _, p2 in equiv):
            continue
        out.append((part, qc))
    out.sort(key=lambda pq: (len(pq[0]), pq[0]))
    seen = set()
    result = []
    for _, qc in out:
        key = cq_canonical(qc)
        if key not in seen:
            seen.add(key)
            result.append(Q.with_query(UCQ((qc,))))
    return result


def extend_with_entailed_atoms(Q: OMQ) -> CQ:
    """Attach, at every variable satisfying an axiom's left side in the
    chase of the query database, a fresh copy of that side (one copy per
    variable and concept)."""
    q = Q.query.disjuncts[0]
    o = _elhi_view(Q.ontology)
    dq = cq_as_database(q)
    atoms = set(q.atoms)
    fresh = FreshVars("_e")
    done: set = set()
    for ci in o.concept_inclusions():
        c = ci.lhs
        if c.contains_bot() or isinstance(c, type(TOP)):
            continue
        for x in sorted(q.variables()):
            if (x, c) in done:
                continue
            if entailed_concept_fact(dq, o, c, x):
                done.add((x, c))
                qc = concept_as_cq(c, rooted=True, fresh=fresh)
                rename = {qc.answer_vars[0]: x}
                atoms.update(at.rename(rename) for at in qc.atoms)
    return CQ(q.answer_vars, atoms)


def rewriting(Q: OMQ) -> OMQ:
    """A rewriting: pick a maximum contraction, follow a homomorphism into
    the chase of the query database, restrict the query to its range, and
    re-attach the entailed concept trees."""
    if not Q.schema.full:
        raise SchemaPrecondition("rewritings require the full schema")
    if len(Q.query.disjuncts) != 1:
        raise QueryError("rewritings take a single-CQ query")
    q = Q.query.disjuncts[0]
    o = _elhi_view(Q.ontology)
    maxes = maximum_contractions(Q)
    qc = maxes[0].query.disjuncts[0]
    dq = cq_as_database(q)
    # per-constant copies keep the provenance walk attributable
    cm = canonical_model(dq, o, chase_steps(UCQ((qc,))), share_copies=False)
    h = find_homomorphism(qc, cm.database, {x: x for x in qc.answer_vars})
    if h is None:
        raise AssertionError("maximum contraction lost its witnessing homomorphism")
    rng = set(h.values())
    kept = rng & q.variables()
    below = set()
    for c in rng - q.variables():
        p = cm.provenance.get(c)
        while p is not None and p.parent is not None:
            if p.parent in q.variables():
                below.add(p.parent)
                break
            p = cm.provenance.get(p.parent)
    V = kept | below
    restricted = q.restrict(kept)
    atoms = set(restricted.atoms)
    fresh = FreshVars("_e")
    for ci in o.concept_inclusions():
        c = ci.lhs
        if c.contains_bot():
            continue
        for x in sorted(V):
            if entailed_concept_fact(dq, o, c, x):
                qcq = concept_as_cq(c, rooted=True, fresh=fresh)
                atoms.update(at.rename({qcq.answer_vars[0]: x}) for at in qcq.atoms)
    out = CQ(q.answer_vars, atoms)
    return Q.with_query(UCQ((out,)))


# ---------------------------------------------------------------------------
# Deciding tree-likeness


def _prune_disjuncts(Q: OMQ) -> list[CQ]:
    """Drop inconsistent disjuncts and ones contained in another disjunct."""
    o = Q.ontology
    live = [cq for cq in Q.query.disjuncts
            if is_consistent(cq_as_database(cq), o)]
    keep: list[CQ] = []
    for i, p in enumerate(live):
        redundant = False
        for j, other in enumerate(live):
            if i == j:
                continue
            if disjunct_contained(o, p, other):
                # keep the earlier of mutually equivalent disjuncts
                if not disjunct_contained(o, other, p) or j < i:
                    redundant = True
                    break
        if not redundant:
            keep.append(p)
    return keep


def _full_contraction(q: CQ) -> CQ:
    """Collapse all quantified variables into one (or onto an answer var)."""
    var = sorted(q.variables())
    answers = set(q.answer_vars)
    quant = [v for v in var if v not in answers]
    if not quant:
        return q
    rep = quant[0]
    m = {v: rep for v in quant}
    return q.rename(m)


def _subquery_candidates(qp: CQ, k: int):
    """Atom subsets of the extended query, smallest first, that keep all
    answer variables and have tree width at most ``k``."""
    atoms = qp.sorted_atoms()
    answers = set(qp.answer_vars)
    for size in range(1, len(atoms) + 1):
        for combo in itertools.combinations(atoms, size):
            bound = {t for at in combo for t in at.terms()}
            if answers and not answers <= bound:
                continue
            cand = CQ(qp.answer_vars, combo)
            if cq_treewidth(cand) <= k:
                yield cand


def decide_tw_equiv_full(Q: OMQ, k: int) -> TwEquivVerdict:
    """Exact tree-likeness decision over the full schema: per pruned
    disjunct, extend the query with entailed concept copies and search its
    subqueries of width at most ``k`` for an equivalent one."""
    if not Q.schema.full:
        raise SchemaPrecondition("the exact decision requires the full schema")
    if Q.ontology.dialect not in ELHI_FAMILY | {Dialect.DLLITE_R, Dialect.DLLITE_R_HORN}:
        raise ValueError(f"dialect {Q.ontology.dialect.value} not supported here")
    live = _prune_disjuncts(Q)
    if not live:
        witness = Q.with_query(UCQ((_full_contraction(Q.query.disjuncts[0]),)))
        return TwEquivVerdict("yes", witness=witness, note="empty query")
    found: list[CQ] = []
    for p in live:
        qp = extend_with_entailed_atoms(single_cq_omq(Q.ontology, Q.schema, p))
        cmp_model = None
        hit = None
        for cand in _subquery_candidates(qp, k):
            dq = cq_as_database(cand)
            if not is_consistent(dq, Q.ontology):
                continue
            cm = canonical_model(dq, Q.ontology, chase_steps(UCQ((p,))))
            fixed = {x: x for x in p.answer_vars}
            if find_homomorphism(p, cm.database, fixed) is not None:
                hit = cand
                break
        if hit is None:
            return TwEquivVerdict("no")
        found.append(hit)
    witness = Q.with_query(UCQ(found))
    return TwEquivVerdict("yes", witness=witness)


def decide_tw_equiv_general(Q: OMQ, k: int, budget: int = 5) -> TwEquivVerdict:
    """Full schema: exact, delegating to the approximation containment.
    Otherwise a bounded counterexample search (an honest semi-decision:
    a returned "unknown" means no separating database was found)."""
    Qa = ucq_k_approximation(Q, k)
    if Q.schema.full:
        if contains_full_schema(Q, Qa):
            return TwEquivVerdict("yes", witness=Qa)
        cex = _full_schema_counterexample(Q, Qa)
        return TwEquivVerdict("no", counterexample=cex)
    for d in _candidate_databases(Q, budget):
        if len(d.dom) > budget or not d.uses_only(Q.schema):
            continue
        try:
            r1 = evaluate_naive(Q, d)
            r2 = evaluate_naive(Qa, d)
        except Exception:
            continue
        if r1.consistent and r1.answers - r2.answers:
            return TwEquivVerdict("no", counterexample=d)
    return TwEquivVerdict("unknown",
                          note=f"no separating database within {budget} constants")


def _full_schema_counterexample(Q: OMQ, Qa: OMQ) -> Optional[Database]:
    for q1 in Q.query.disjuncts:
        d1 = cq_as_database(q1)
        if not is_consistent(d1, Q.ontology):
            continue
        cm = canonical_model(d1, Q.ontology, chase_steps(Qa.query))
        hit = False
        for q2 in Qa.query.disjuncts:
            fixed = dict(zip(q2.answer_vars, q1.answer_vars))
            if find_homomorphism(q2, cm.database, fixed) is not None:
                hit = True
                break
        if not hit:
            return d1
    return None


def _candidate_databases(Q: OMQ, budget: int):
    """Guided candidates for a separating database: schema-reducts of
    disjunct-database contractions, with dropped concept atoms optionally
    replaced by schema concepts that entail them."""
    o = Q.ontology
    schema = Q.schema
    vocab = sorted({n for ax in _elhi_view(o).concept_inclusions()
                    for side in (ax.lhs, ax.rhs)
                    for s in side.subconcepts() if isinstance(s, Atomic)
                    for n in [s.name]} |
                   {n for cq in Q.query.disjuncts for n in cq.names()})
    s_concepts = [n for n in vocab if schema.admits(n)]
    seen: set = set()
    for cq in Q.query.disjuncts:
        for qc, _ in contractions(cq):
            base = cq_as_database(qc)
            keep = [f for f in base.facts if schema.admits(f.name)]
            dropped: dict[str, list] = {}
            for f in base.facts:
                if not schema.admits(f.name) and isinstance(f, ConceptFact):
                    dropped.setdefault(f.a, []).append(Atomic(f.name))
            options: list[list] = []
            slots = sorted(dropped)
            for x in slots:
                needed = conj(*dropped[x])
                subs = [None]
                for b in s_concepts:
                    try:
                        from .entailment import subsumes
                        if subsumes(o, Atomic(b), needed):
                            subs.append(b)
                    except Exception:
                        continue
                options.append(subs)
            for combo in itertools.product(*options) if slots else [()]:
                facts = list(keep)
                for x, b in zip(slots, combo):
                    if b is not None:
                        facts.append(ConceptFact(b, x))
                d = Database(facts)
                if not d.dom or len(d.dom) > budget:
                    continue
                key = db_canonical(d)
                if key in seen:
                    continue
                seen.add(key)
                yield d


# ---------------------------------------------------------------------------
# Witness-bounded containment for DL-Lite(R,horn)


def _sourcing_variants(o: Ontology, d: Database, schema: Schema, answers: tuple):
    """Per-fact weakenings of a witness database: a concept fact may be
    sourced by any schema concept that entails it, a role fact by any
    schema (sub-)role implying it; facts outside the schema must be
    re-sourced or the candidate dies."""
    from .entailment import subsumes, _role_closure
    sup = _role_closure(_elhi_view(o))
    vocab_c = sorted({s.name for ax in _elhi_view(o).concept_inclusions()
                      for side in (ax.lhs, ax.rhs)
                      for s in side.subconcepts() if isinstance(s, Atomic)}
                     | {f.name for f in d.concept_facts()})
    vocab_c = [n for n in vocab_c if schema.admits(n)]
    per_fact: list[list] = []
    for f in sorted(d.facts, key=str):
        opts: list = []
        if isinstance(f, ConceptFact):
            if schema.admits(f.name):
                opts.append(f)
            for b in vocab_c:
                if b != f.name and subsumes(o, Atomic(b), Atomic(f.name)):
                    opts.append(ConceptFact(b, f.a))
        else:
            target = Role(f.name)
            if schema.admits(f.name):
                opts.append(f)
            for s, supers in sorted(sup.items(), key=lambda kv: str(kv[0])):
                if s.inverted or s.name == f.name or not schema.admits(s.name):
                    continue
                if target in supers:
                    opts.append(RoleFact(s.name, f.a, f.b))
                if target.inverse() in supers:
                    opts.append(RoleFact(s.name, f.b, f.a))
        if not opts:
            return
        per_fact.append(opts)
    for combo in itertools.product(*per_fact):
        yield Database(combo), answers


def contains_dllite_horn(Q1: OMQ, Q2: OMQ) -> bool:
    """Containment for DL-Lite(R/horn) OMQs over a shared schema.  Witness
    candidates are the databases of Q1's rewriting family (contraction +
    generated-tree elimination) with per-fact weakenings; their sizes stay
    within the |q|*(|vocab|+1) witness bound.  Databases inconsistent with
    the left ontology are additionally probed through clash patterns."""
    allowed = {Dialect.DLLITE_R, Dialect.DLLITE_R_HORN, Dialect.DLLITE_F,
               Dialect.DLLITE_F_EQ} | ELHI_FAMILY
    for Q in (Q1, Q2):
        if Q.ontology.dialect not in allowed:
            raise ValueError(f"dialect {Q.ontology.dialect.value} not supported")
    if Q1.arity != Q2.arity:
        return False
    schema = Q1.schema
    from .dllitef import rewrite_family

    cap = max(len(cq.atoms) + len(cq.variables()) for cq in Q1.query.disjuncts)
    vocab = len({n for cq in Q1.query.disjuncts for n in cq.names()}
                | {n for cq in Q2.query.disjuncts for n in cq.names()}) + 1
    cap = cap * (vocab + 1)

    seen: set = set()
    for p in Q1.query.disjuncts:
        answers = tuple(p.answer_vars)
        for w in rewrite_family(Q1.ontology, p, minor_gate=False):
            base = cq_as_database(w)
            if not base.dom or len(base.dom) > cap:
                continue
            for d, a in _sourcing_variants(Q1.ontology, base, schema, answers):
                if not d.uses_only(schema):
                    continue
                key = (db_canonical(d), a)
                if key in seen:
                    continue
                seen.add(key)
                if _separates(Q1, Q2, d, a):
                    return False
    for d in _clash_witnesses(Q1.ontology, schema):
        r2 = evaluate_naive(OMQ(Q2.ontology, schema, Q2.query), d)
        if r2.consistent:
            tuples = set(itertools.product(sorted(d.dom), repeat=Q2.arity))
            if tuples - r2.answers:
                return False
    return True


def _separates(Q1: OMQ, Q2: OMQ, d: Database, a: tuple) -> bool:
    try:
        r1 = evaluate_naive(OMQ(Q1.ontology, Q1.schema, Q1.query), d)
    except Exception:
        return False
    if not r1.consistent:
        r2 = evaluate_naive(OMQ(Q2.ontology, Q2.schema, Q2.query), d)
        return r2.consistent
    if a not in r1.answers:
        return False
    r2 = evaluate_naive(OMQ(Q2.ontology, Q2.schema, Q2.query), d)
    if not r2.consistent:
        return False
    return a not in r2.answers


def _clash_witnesses(o: Ontology, schema: Schema):
    """Small schema databases inconsistent with the ontology, one per
    reachable clash axiom (when its pattern survives the schema)."""
    onorm = _elhi_view(o)
    fresh = FreshVars("_w")
    for ax in onorm.concept_inclusions():
        if not ax.rhs.contains_bot() or ax.lhs.contains_bot():
            continue
        try:
            q = concept_as_cq(ax.lhs, rooted=True, fresh=fresh)
        except QueryError:
            continue
        d = cq_as_database(q)
        if d.dom and d.uses_only(schema) and not is_consistent(d, o):
            yield d
    for dis in o.role_disjointness():
        facts = [RoleFact(r, "w0", "w1") for r in dis.roles]
        d = Database(facts)
        if d.uses_only(schema) and not is_consistent(d, o):
            yield d
    if o.dialect in DLLITE_FAMILY:
        for r in sorted(o.functional_roles()):
            if schema.admits(r):
                yield Database([RoleFact(r, "w0", "w1"), RoleFact(r, "w0", "w2")])

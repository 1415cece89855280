"""OMQ evaluation pipelines: naive (canonical model + homomorphism) and
bounded-treewidth dynamic programming.

An inconsistent database has every tuple as a certain answer; results
carry an explicit ``consistent`` flag so the caller can surface this.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .model import (
    CQ,
    ConceptFact,
    Database,
    OMQ,
    QueryError,
    Role,
    RoleFact,
    UCQ,
    gaifman_graph,
)
from .chase import CanonicalModel, canonical_model
from .entailment import is_consistent
from .graphalg import cq_treewidth, treewidth
from .homtools import all_answers, iter_homomorphisms


class SchemaViolation(ValueError):
    pass


class TreewidthPrecondition(ValueError):
    pass


@dataclass(frozen=True)
class EvalResult:
    consistent: bool
    answers: frozenset
    algorithm: str
    stats: dict = field(default_factory=dict)

    def boolean(self) -> bool:
        return bool(self.answers)


def _check_schema(Q: OMQ, d: Database) -> None:
    if not d.uses_only(Q.schema):
        extra = sorted(n for n in d.names() if not Q.schema.admits(n))
        raise SchemaViolation(f"database uses names outside the schema: {extra}")


def _all_tuples(d: Database, arity: int) -> frozenset:
    return frozenset(itertools.product(sorted(d.dom), repeat=arity))


def chase_steps(q: UCQ) -> int:
    """Successor rounds generous enough for any disjunct-sized match: a
    connected image inside an anonymous tree spans at most as many levels
    as the query has variables, and components starting deep are covered
    by the type copies."""
    return max(len(cq.variables()) for cq in q.disjuncts) + 1


def evaluate_naive(Q: OMQ, d: Database) -> EvalResult:
    """Certain answers via the truncated canonical model and plain
    homomorphism search."""
    _check_schema(Q, d)
    if not is_consistent(d, Q.ontology):
        return EvalResult(False, _all_tuples(d, Q.arity), "naive")
    cm = canonical_model(d, Q.ontology, chase_steps(Q.query))
    answers = all_answers(Q.query, cm.database, restrict_to=cm.original)
    stats = {"chase_constants": len(cm.database.dom), "chase_facts": len(cm.database)}
    return EvalResult(True, frozenset(answers), "naive", stats)


def evaluate_fpt(Q: OMQ, d: Database, k: int) -> EvalResult:
    """Same canonical model, then width-``k`` dynamic programming per
    disjunct and candidate tuple."""
    _check_schema(Q, d)
    for cq in Q.query.disjuncts:
        w = cq_treewidth(cq)
        if w > k:
            raise TreewidthPrecondition(f"disjunct has tree width {w} > {k}")
    if not is_consistent(d, Q.ontology):
        return EvalResult(False, _all_tuples(d, Q.arity), "fpt")
    cm = canonical_model(d, Q.ontology, chase_steps(Q.query))
    answers = set()
    candidates = sorted(itertools.product(sorted(d.dom), repeat=Q.arity))
    for cq in Q.query.disjuncts:
        for a in candidates:
            if a in answers:
                continue
            if evaluate_tw_cq(cq, cm.database, k, a,
                              anonymous_ok=frozenset(cm.database.dom)):
                answers.add(a)
    stats = {"chase_constants": len(cm.database.dom), "chase_facts": len(cm.database)}
    return EvalResult(True, frozenset(answers), "fpt", stats)


class _TreeEvaluator:
    """Certain answers of downward-tree queries, decided directly over the
    saturation and the type engine (no materialized canonical model)."""

    def __init__(self, o, d: Database):
        from .entailment import _elhi_view, normalize, saturate
        self.onorm = normalize(_elhi_view(o))
        self.sat = saturate(d, self.onorm)
        self.d = d
        self._memo: dict = {}
        self._children_cache: dict = {}

    def _children(self, seed: frozenset):
        hit = self._children_cache.get(seed)
        if hit is None:
            canon = self.onorm._engine.canonical(self.onorm._engine.close(seed))
            hit = [(rule.role, child)
                   for (parent, rule), child in canon.child_types.items()
                   if parent == canon.root]
            self._children_cache[seed] = hit
        return hit

    def _reachable(self, seed: frozenset) -> frozenset:
        return self.onorm.reachable_types(seed)

    def _parse_tree(self, q: CQ):
        root = q.answer_vars[0]
        concept_at: dict = {}
        down: dict = {}
        loops: list = []
        for at in q.sorted_atoms():
            if isinstance(at, ConceptFact):
                concept_at.setdefault(at.a, []).append(at.name)
            elif at.a == at.b:
                if at.a != root:
                    raise QueryError("tree queries admit loops at the root only")
                loops.append(at.name)
            else:
                down.setdefault(at.a, {}).setdefault(at.b, []).append(at.name)
        # edges[parent] = [(child, sorted role names of the multi-edge)]
        edges = {p: sorted((w, tuple(sorted(names))) for w, names in kids.items())
                 for p, kids in down.items()}
        return root, concept_at, edges, loops

    def answers(self, q: CQ) -> frozenset:
        """Real constants at which the rooted tree query certainly holds."""
        root, concept_at, edges, loops = self._parse_tree(q)
        out = set()
        for e in sorted(self.d.dom):
            if all(RoleFact(n, e, e) in self.sat.database.facts for n in loops) \
                    and self._match_real(root, e, concept_at, edges):
                out.add(e)
        return frozenset(out)

    def holds_somewhere(self, q: CQ) -> bool:
        """Boolean: does the tree match anywhere in the canonical model?"""
        if q.answer_vars:
            root = q.answer_vars[0]
        else:
            # pick the tree root: the unique variable without incoming edges
            targets = {at.b for at in q.atoms
                       if isinstance(at, RoleFact) and at.a != at.b}
            roots = sorted(q.variables() - targets)
            root = roots[0]
            q = CQ((root,), q.atoms)
        _, concept_at, edges, loops = self._parse_tree(q)
        if not loops:
            seen = set()
            for a in sorted(self.sat.types):
                for t in self._reachable(self.sat.types[a]):
                    if t in seen:
                        continue
                    seen.add(t)
                    if self._match_anon(root, t, concept_at, edges):
                        return True
        return bool(self.answers(q))

    def _match_real(self, v: str, e: str, concept_at, edges) -> bool:
        names = self.sat.types.get(e, frozenset())
        for n in concept_at.get(v, ()):
            if n not in names:
                return False
        for w, role_names in edges.get(v, ()):
            ok = False
            succs = None
            for rn in role_names:
                s = self.sat.database.successors(e, Role(rn))
                succs = s if succs is None else (succs & s)
                if not succs:
                    break
            for b in sorted(succs or ()):
                if self._match_real(w, b, concept_at, edges):
                    ok = True
                    break
            if not ok:
                for role, child in self._children(self.sat.types.get(e, frozenset())):
                    sups = self.onorm.super_roles.get(role, {role})
                    if all(Role(rn) in sups for rn in role_names):
                        if self._match_anon(w, child, concept_at, edges):
                            ok = True
                            break
            if not ok:
                return False
        return True

    def _match_anon(self, v: str, t: frozenset, concept_at, edges) -> bool:
        key = (v, t)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        self._memo[key] = False  # cycles in the type graph cannot help
        ok = all(n in t for n in concept_at.get(v, ()))
        if ok:
            for w, role_names in edges.get(v, ()):
                found = False
                for role, child in self._children(t):
                    sups = self.onorm.super_roles.get(role, {role})
                    if all(Role(rn) in sups for rn in role_names):
                        if self._match_anon(w, child, concept_at, edges):
                            found = True
                            break
                if not found:
                    ok = False
                    break
        self._memo[key] = ok
        return ok


def evaluate_tw_cq(q: CQ, d: Database, k: int, a: tuple,
                   anonymous_ok: frozenset | None = None) -> bool:
    """Join of partial homomorphisms along a width-``k`` decomposition of
    the quantified part, answer variables pinned to ``a``.

    ``anonymous_ok`` widens the range of quantified variables beyond
    ``dom(d)`` (used when matching into a chase, where answer variables
    stay on the original constants but quantified ones may roam)."""
    if cq_treewidth(q) > k:
        raise TreewidthPrecondition(f"query tree width exceeds {k}")
    if len(a) != q.arity:
        raise QueryError(f"candidate arity {len(a)} != query arity {q.arity}")
    pin = dict(zip(q.answer_vars, a))
    dom = anonymous_ok if anonymous_ok is not None else d.dom

    # atoms entirely over answer variables: check once
    fixed_atoms = [at for at in q.sorted_atoms()
                   if all(t in pin for t in at.terms())]
    for at in fixed_atoms:
        if at.rename(pin) not in d.facts:
            return False

    quantified = sorted(q.quantified_vars())
    if not quantified:
        return True

    restricted = [at for at in q.atoms
                  if all(t in quantified for t in at.terms())]
    g = gaifman_graph(Database(restricted))
    for v in quantified:
        g.add_vertex(v)
    _, td = treewidth(g)

    # atom -> the bag charged with checking it (all quantified terms inside)
    bags = [set(b) for b in td.bags]
    charge: dict[int, list] = {i: [] for i in range(len(bags))}
    for at in q.sorted_atoms():
        qvars = [t for t in at.terms() if t in set(quantified)]
        if not qvars:
            continue
        home = None
        for i, b in enumerate(bags):
            if set(qvars) <= b:
                home = i
                break
        if home is None:
            raise AssertionError("decomposition misses an atom")
        charge[home].append(at)

    # root the bag tree and order children
    adj: dict[int, set] = {i: set() for i in range(len(bags))}
    for e in td.edges:
        i, j = tuple(e)
        adj[i].add(j)
        adj[j].add(i)
    order = []
    parent = {0: None}
    stack = [0]
    seen = {0}
    while stack:
        u = stack.pop()
        order.append(u)
        for w in sorted(adj[u]):
            if w not in seen:
                seen.add(w)
                parent[w] = u
                stack.append(w)

    messages: dict[int, set] = {}

    def bag_assignments(i: int):
        vars_i = sorted(bags[i])
        atoms_i = charge[i]
        sub = CQ((), atoms_i)
        fixed = {v: pin[v] for at in atoms_i for v in at.terms() if v in pin}
        extra = [v for v in vars_i if v not in sub.variables()]
        allowed = {v: dom for v in vars_i}
        for h in iter_homomorphisms(sub, d, fixed=fixed, allowed=allowed):
            base = {v: h[v] for v in vars_i if v in h}
            if extra:
                for combo in itertools.product(sorted(dom), repeat=len(extra)):
                    th = dict(base)
                    th.update(zip(extra, combo))
                    yield th
            else:
                yield base

    ok_tables: dict[int, set] = {}
    for i in reversed(order):
        children = [w for w in adj[i] if parent.get(w) == i]
        table = set()
        for th in bag_assignments(i):
            good = True
            for w in children:
                sep = tuple(sorted((v, th[v]) for v in bags[i] & bags[w]))
                if sep not in messages[w]:
                    good = False
                    break
            if good:
                table.add(tuple(sorted(th.items())))
        if not table:
            return False
        up = parent[i]
        if up is not None:
            sepvars = bags[i] & bags[up]
            messages[i] = {tuple(sorted((v, c) for v, c in th if v in sepvars))
                           for th in table}
        ok_tables[i] = table
    return bool(ok_tables[order[0]])

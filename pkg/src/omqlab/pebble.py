"""Certain-answer evaluation through labelings and the modified existential
pebble game (inverse-free dialects, full schema).

A labeling assigns each variable a database constant, the marker "maps
somewhere anonymous" for fully anonymous components, or an anchored
marker naming a guarded-pair system and the database constant below
which the variable's image hangs.  Local conditions make labelings
certify homomorphisms into the chase; the game decides their existence
with k+1 pebbles.

Three ambiguities in the source material are resolved here (the
agreement suite exercises all of them):

* the third reach rule closes upward from every reached variable, not
  just the pair's second component (the narrow reading loses certified
  answers on four-variable queries);
* the root-versus-deeper tests in the label-propagation conditions
  compare against level-1 membership (the tree root), and boundary
  dtrees tolerate self-loops at their root class, which stand for
  database facts at the anchor constant;
* anchored-label systems are those of the whole query (labels must glue
  across game positions), and the anonymous marker is admitted only on
  variables of full-query components whose tree witness the database
  satisfies - checking that per restriction window is provably too weak.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

from .model import (
    CQ,
    ConceptFact,
    Database,
    Dialect,
    OMQ,
    QueryError,
    RoleFact,
    UCQ,
    cq_as_database,
    gaifman_graph,
    single_cq_omq,
)
from .entailment import is_consistent, normalize, saturate, _elhi_view
from .evaluation import _TreeEvaluator, evaluate_naive
from .graphalg import dtree_merge, is_ditree
from .treelike import extend_with_entailed_atoms

PEBBLE_DIALECTS = {Dialect.EL, Dialect.EL_BOT, Dialect.ELH_BOT, Dialect.ELHDR_BOT}


class PebblePrecondition(ValueError):
    pass


# ---------------------------------------------------------------------------
# Labels


@dataclass(frozen=True)
class Const:
    value: str

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Exist:
    def __str__(self) -> str:
        return "exists"


EXIST = Exist()


@dataclass(frozen=True)
class Anchored:
    pair: tuple   # representative guarded pair (x', y')
    at: str       # anchor constant

    def __str__(self) -> str:
        return f"(({self.pair[0]},{self.pair[1]}),{self.at})"


def is_const(l) -> bool:
    return isinstance(l, Const)


# ---------------------------------------------------------------------------
# Reach systems


def reach(q: CQ, pair: tuple) -> dict:
    """Leveled reach sets of a guarded pair (x, y) with y quantified:
    variable -> set of levels.  Level 0 sits at the anchor constant,
    level i >= 1 at depth i of the anonymous tree below it."""
    x, y = pair
    if y in q.answer_vars:
        raise QueryError("the second pair component must be quantified")
    levels: dict[str, set] = {x: {0}, y: {1}}
    cap = len(q.variables()) + 1  # deeper levels are unrealizable in a ditree
    role_atoms = [at for at in q.atoms if isinstance(at, RoleFact)]
    changed = True
    while changed:
        changed = False
        for at in role_atoms:
            # forward: a variable at level i >= 1 pushes its successors deeper
            for i in sorted(levels.get(at.a, ())):
                if 0 < i < cap and i + 1 not in levels.setdefault(at.b, set()):
                    levels[at.b].add(i + 1)
                    changed = True
            # upward: a variable at level i+1 pulls its predecessors to i
            for i in sorted(levels.get(at.b, ())):
                if i - 1 >= 0 and i - 1 not in levels.setdefault(at.a, set()):
                    levels[at.a].add(i - 1)
                    changed = True
    return levels


def guarded_pairs(q: CQ) -> list[tuple]:
    g = gaifman_graph(cq_as_database(q))
    out = []
    answers = set(q.answer_vars)
    for e in sorted(g.edges(), key=lambda e: sorted(e, key=str)):
        a, b = sorted(e)
        for x, y in ((a, b), (b, a)):
            if y not in answers:
                out.append((x, y))
    return out


@dataclass(frozen=True)
class ReachSystem:
    pair: tuple
    rep: tuple                   # canonical representative pair
    levels: dict
    eligible: bool
    dtree: Optional[CQ]          # rooted, possibly with root self-loops

    def level_set(self, v: str) -> set:
        return self.levels.get(v, set())

    def members(self) -> frozenset:
        return frozenset(self.levels)


def _boundary_dtree(q: CQ, members: Iterable[str]) -> Optional[CQ]:
    """Initial ditree of the reach restriction, rooted at the level-0
    class; self-loops are tolerated at the root only (they stand for
    database facts at the anchor constant)."""
    sub = q.restrict(members)
    merged = dtree_merge(CQ((), sub.atoms))
    vars_all = {t for at in merged.atoms for t in at.terms()}
    loops = {at for at in merged.atoms
             if isinstance(at, RoleFact) and at.a == at.b}
    pairs = {(at.a, at.b) for at in merged.atoms
             if isinstance(at, RoleFact) and at.a != at.b}
    targets = [b for _, b in pairs]
    indeg = {v: 0 for v in vars_all}
    for b in targets:
        indeg[b] += 1
    roots = sorted(v for v, k in indeg.items() if k == 0)
    if len(roots) != 1 or any(k > 1 for k in indeg.values()):
        return None
    root = roots[0]
    if len(pairs) != len(vars_all) - 1:
        return None
    if any(at.a != root for at in loops):
        return None
    # reachability from the root (acyclicity)
    children: dict = {}
    for s, t in pairs:
        children.setdefault(s, set()).add(t)
    seen = {root}
    stack = [root]
    while stack:
        u = stack.pop()
        for w in children.get(u, ()):
            if w in seen:
                return None
            seen.add(w)
            stack.append(w)
    if seen != vars_all:
        return None
    return CQ((root,), merged.atoms)


def analyze_pair(q: CQ, pair: tuple) -> ReachSystem:
    levels = reach(q, pair)
    members = frozenset(levels)
    level0 = sorted(v for v, ls in levels.items() if 0 in ls)
    level1 = sorted(v for v, ls in levels.items() if 1 in ls)
    # the canonical representative must regenerate this very system, else
    # labels naming it would be ambiguous between systems
    rep = pair
    answers = set(q.answer_vars)
    for cand in ((x0, y0) for x0 in level0 for y0 in level1
                 if y0 not in answers):
        if cand == pair or reach(q, cand) == levels:
            rep = cand
            break
    dt = _boundary_dtree(q, members)
    return ReachSystem(pair, rep, levels, dt is not None, dt)


def exists_eligible(q: CQ, pair: tuple) -> tuple[bool, Optional[CQ]]:
    sys = analyze_pair(q, pair)
    return sys.eligible, sys.dtree


def exists_mccs(q: CQ) -> list[frozenset]:
    """Atom sets of the maximal connected components containing only
    quantified variables."""
    g = gaifman_graph(cq_as_database(q))
    answers = set(q.answer_vars)
    out = []
    for comp in g.connected_components():
        if comp & answers:
            continue
        atoms = frozenset(at for at in q.atoms if set(at.terms()) <= comp)
        if atoms:
            out.append(atoms)
    return sorted(out, key=lambda s: sorted(map(str, s)))


def _strict_dtree(q: CQ) -> Optional[CQ]:
    merged = dtree_merge(CQ((), q.atoms))
    if not is_ditree(cq_as_database(merged)):
        return None
    pairs = {(at.a, at.b) for at in merged.atoms if isinstance(at, RoleFact)}
    targets = {b for _, b in pairs}
    vars_all = {t for at in merged.atoms for t in at.terms()}
    roots = sorted(vars_all - targets)
    return CQ((roots[0],), merged.atoms) if roots else None


# ---------------------------------------------------------------------------
# D-labelings


class LabelContext:
    """Memoized machinery for checking labelings of one (extended) query
    against one database."""

    def __init__(self, Q: OMQ, d: Database, const_requirements=None):
        if Q.ontology.dialect not in PEBBLE_DIALECTS:
            raise PebblePrecondition(
                f"labelings are defined for the inverse-free dialects, got "
                f"{Q.ontology.dialect.value}")
        if not Q.schema.full:
            raise PebblePrecondition("labelings require the full schema")
        if len(Q.query.disjuncts) != 1:
            raise PebblePrecondition("labelings are per-CQ")
        # var -> rooted tree queries that must certify at the variable's
        # constant (stands in for attaching entailed concept copies)
        self.const_requirements = const_requirements or {}
        self.Q = Q
        self.q = Q.query.disjuncts[0]
        self.d = d
        self.onto = Q.ontology
        sat = saturate(d, normalize(_elhi_view(Q.ontology)))
        if sat.clashes():
            raise PebblePrecondition("database is inconsistent with the ontology")
        self.chminus = sat.database
        self.trees = _TreeEvaluator(Q.ontology, d)
        self._systems: dict = {}
        self._dtree_answers: dict = {}
        self._restrict_cache: dict = {}
        # variables allowed to carry the anonymous marker: members of
        # full-query components whose tree witness the database satisfies
        self.exist_ok: frozenset = self._exist_ok()

    def _exist_ok(self) -> frozenset:
        ok = set()
        for atoms in exists_mccs(self.q):
            dt = _strict_dtree(CQ((), atoms))
            if dt is None:
                continue
            if self.trees.holds_somewhere(CQ((), dt.atoms)):
                ok.update(t for at in atoms for t in at.terms())
        return frozenset(ok)

    def restricted(self, on_vars: frozenset) -> CQ:
        hit = self._restrict_cache.get(on_vars)
        if hit is None:
            hit = self.q.restrict(set(on_vars) | set(self.q.answer_vars))
            self._restrict_cache[on_vars] = hit
        return hit

    def system(self, pair: tuple) -> ReachSystem:
        """Reach system of a guarded pair, always over the full query."""
        hit = self._systems.get(pair)
        if hit is None:
            hit = analyze_pair(self.q, pair)
            self._systems[pair] = hit
        return hit

    def dtree_holds_at(self, dt: CQ, c: str) -> bool:
        key = (dt.atoms, dt.answer_vars)
        answers = self._dtree_answers.get(key)
        if answers is None:
            answers = set(self.trees.answers(dt))
            self._dtree_answers[key] = answers
        return c in answers

    # -- the conditions ------------------------------------------------------

    def is_labeling(self, labels: dict, on_vars: frozenset) -> bool:
        sub = self.restricted(on_vars)
        for x in sub.answer_vars:
            if not is_const(labels.get(x)):
                return False
        const_vars = {v for v in sub.variables() if is_const(labels.get(v))}
        for v in const_vars:
            for tree_q in self.const_requirements.get(v, ()):
                if not self.dtree_holds_at(tree_q, labels[v].value):
                    return False
        for at in sub.atoms:
            terms = at.terms()
            if all(t in const_vars for t in terms):
                fact = at.rename({t: labels[t].value for t in terms})
                if fact not in self.chminus.facts:
                    return False
        for v in sub.variables():
            lv = labels.get(v)
            if lv == EXIST and v not in self.exist_ok:
                return False
            if isinstance(lv, Anchored):
                sysm = self.system(lv.pair)
                if v not in sysm.members():
                    return False
                # grounding: the representative pair pins its own variables
                lx = labels.get(lv.pair[0])
                if lx is not None and lx != Const(lv.at):
                    return False
                ly = labels.get(lv.pair[1])
                if ly is not None and ly != lv:
                    return False
        for at in sub.atoms:
            if not isinstance(at, RoleFact):
                continue
            if not self._role_atom_ok(at, labels):
                return False
        return True

    def _role_atom_ok(self, at: RoleFact, labels: dict) -> bool:
        lx, ly = labels.get(at.a), labels.get(at.b)
        # nothing anonymous points back into the database part
        if is_const(ly) and not is_const(lx):
            return False
        # anchored sources push their anchor onto targets
        if isinstance(lx, Anchored) and ly != lx:
            return False
        # anchored targets constrain their sources by tree level
        if isinstance(ly, Anchored):
            sysm = self.system(ly.pair)
            ls = sysm.level_set(at.b)
            ok = False
            if 1 in ls and is_const(lx) and lx.value == ly.at:
                ok = True
            if (ls - {0, 1}) and lx == ly:
                ok = True
            if 0 in ls and is_const(lx) and RoleFact(
                    at.name, lx.value, ly.at) in self.chminus.facts:
                ok = True
            if not ok:
                return False
        # a constant-to-anonymous edge needs an eligible, satisfied,
        # well-anchored boundary pair
        for x, y in ((at.a, at.b), (at.b, at.a)):
            lxx, lyy = labels.get(x), labels.get(y)
            if not (is_const(lxx) and lyy is not None and not is_const(lyy)):
                continue
            if y in self.q.answer_vars:
                return False
            sysm = self.system((x, y))
            if not sysm.eligible or sysm.dtree is None:
                return False
            if not self.dtree_holds_at(sysm.dtree, lxx.value):
                return False
            if not isinstance(lyy, Anchored) or lyy.at != lxx.value:
                return False
            px, py = lyy.pair
            if 0 not in sysm.level_set(px) or 1 not in sysm.level_set(py):
                return False
        return True


def is_d_labeling(Q: OMQ, d: Database, labels: dict, on_vars: Iterable[str]) -> bool:
    """Do the labeling conditions hold on the restriction of the query to
    ``on_vars`` (plus the answer variables)?  Label values: constants,
    ``EXIST``, or ``Anchored(pair, constant)``."""
    ctx = LabelContext(Q, d)
    return ctx.is_labeling(dict(labels), frozenset(on_vars))


def extend_query_plus(Q: OMQ) -> CQ:
    """The query extended with a fresh copy of every axiom left-hand side
    its chase satisfies at a variable (rewritings are subqueries of this)."""
    return extend_with_entailed_atoms(Q)


# ---------------------------------------------------------------------------
# The modified existential pebble game


def _const_requirements(Q: OMQ) -> dict:
    """Rooted tree queries per variable: every axiom left-hand side the
    query's chase satisfies at the variable (the rewriting decorations,
    expressed as certification conditions)."""
    from .model import concept_as_cq, FreshVars
    from .entailment import entailed_concept_fact
    q = Q.query.disjuncts[0]
    o = _elhi_view(Q.ontology)
    dq = cq_as_database(q)
    out: dict = {}
    fresh = FreshVars("_c")
    seen: set = set()
    for ci in o.concept_inclusions():
        c = ci.lhs
        if c.contains_bot():
            continue
        for x in sorted(q.variables()):
            if (x, c) in seen:
                continue
            if entailed_concept_fact(dq, o, c, x):
                seen.add((x, c))
                tree = concept_as_cq(c, rooted=True, fresh=fresh)
                if tree.atoms:
                    out.setdefault(x, []).append(tree)
    return out


def pebble_evaluate(Q: OMQ, d: Database, a: tuple, k: int) -> bool:
    """Does the candidate tuple survive the (k+1)-pebble labeling game on
    the extended query?  Exact on width-k-equivalent inputs; otherwise a
    sound over-approximation of the certain answers."""
    if len(Q.query.disjuncts) != 1:
        raise PebblePrecondition("the game takes a single-CQ query")
    if Q.ontology.dialect not in PEBBLE_DIALECTS:
        raise PebblePrecondition(f"unsupported dialect {Q.ontology.dialect.value}")
    if not Q.schema.full:
        raise PebblePrecondition("the game requires the full schema")
    if len(a) != Q.arity:
        raise QueryError("candidate arity mismatch")
    if not is_consistent(d, Q.ontology):
        return True
    base = Q.query.disjuncts[0]
    if not is_consistent(cq_as_database(base), Q.ontology):
        return False
    # Entailed concept copies are folded into per-variable certification
    # conditions instead of fresh atoms: the game then runs on the original
    # variable set.
    requirements = _const_requirements(Q)
    ctx = LabelContext(Q, d, const_requirements=requirements)
    pins = {x: Const(c) for x, c in zip(base.answer_vars, a)}
    if not ctx.is_labeling(pins, frozenset()):
        return False

    quantified = sorted(base.quantified_vars())
    size = min(k + 1, len(quantified))
    # positions over maximal pebble sets decide the game: smaller positions
    # are restrictions of surviving maximal ones
    vsets = [frozenset(c) for c in itertools.combinations(quantified, size)]
    if not vsets:
        return True  # no quantified variables; the pins were checked above

    dom = sorted(d.dom)
    anchor_labels: dict[str, list] = {v: [] for v in quantified}
    seen_anchor: dict[str, set] = {v: set() for v in quantified}
    for pair in guarded_pairs(base):
        sysm = ctx.system(pair)
        if not sysm.eligible or sysm.dtree is None:
            continue
        for v in sysm.members():
            if v not in anchor_labels:
                continue
            for c in dom:
                lab = Anchored(sysm.rep, c)
                if lab in seen_anchor[v]:
                    continue
                seen_anchor[v].add(lab)
                # anchors whose tree witness fails at c can never occur in
                # a valid full labeling
                rep_sys = ctx.system(sysm.rep)
                dt = rep_sys.dtree if rep_sys.dtree is not None else sysm.dtree
                if ctx.dtree_holds_at(dt, c):
                    anchor_labels[v].append(lab)

    # per-variable universe, prefiltered by singleton validity
    universe: dict[str, list] = {}
    for v in quantified:
        cands = [Const(c) for c in dom] + [EXIST] + anchor_labels.get(v, [])
        keep = []
        for l in cands:
            labels = dict(pins)
            labels[v] = l
            if ctx.is_labeling(labels, frozenset({v})):
                keep.append(l)
        if not keep:
            return False
        universe[v] = keep

    # pairwise compatibility per variable pair (within any position)
    pair_ok: dict = {}
    for v1, v2 in itertools.combinations(quantified, 2):
        allowed = []
        base = dict(pins)
        for l1 in universe[v1]:
            base[v1] = l1
            for l2 in universe[v2]:
                base[v2] = l2
                if ctx.is_labeling(base, frozenset({v1, v2})):
                    allowed.append((l1, l2))
            del base[v2]
        pair_ok[(v1, v2)] = set(allowed)

    def enumerate_labelings(V: frozenset) -> list:
        vlist = sorted(V)
        if len(vlist) == 1:
            return [(l,) for l in universe[vlist[0]]]
        if len(vlist) == 2:
            return sorted(pair_ok[(vlist[0], vlist[1])], key=str)
        out = []
        labels = dict(pins)

        def rec(i: int, acc: list):
            if i == len(vlist):
                labels.update(zip(vlist, acc))
                if ctx.is_labeling(labels, V):
                    out.append(tuple(acc))
                return
            v = vlist[i]
            for l in universe[v]:
                good = True
                for j in range(i):
                    w = vlist[j]
                    key = (w, v) if w < v else (v, w)
                    pr = (acc[j], l) if w < v else (l, acc[j])
                    if pr not in pair_ok[key]:
                        good = False
                        break
                if good:
                    acc.append(l)
                    rec(i + 1, acc)
                    acc.pop()

        rec(0, [])
        return out

    valid: dict[frozenset, list] = {}
    for V in vsets:
        out = enumerate_labelings(V)
        if not out:
            return False  # Spoiler moves here and wins immediately
        valid[V] = out

    return _duplicator_survives(vsets, valid)


def _duplicator_survives(vsets: list, valid: dict) -> bool:
    """Greatest fixpoint over maximal positions, by support propagation:
    a position needs, for every other pebble set, a live position agreeing
    on the overlap; when a support bucket empties, its dependants die."""
    var_index = {V: {v: i for i, v in enumerate(sorted(V))} for V in vsets}
    shared = {(V, V2): tuple(sorted(V & V2))
              for V in vsets for V2 in vsets if V != V2}

    def project(V, assignment, svars):
        idx = var_index[V]
        return tuple(assignment[idx[v]] for v in svars)

    counts: dict = {}
    watchers: dict = {}
    contributes: dict = {}
    alive: dict = {}
    for V in vsets:
        for assignment in valid[V]:
            alive[(V, assignment)] = True
            buckets = set()
            for V2 in vsets:
                if V2 == V:
                    continue
                svars = shared[(V2, V)]
                buckets.add((V, svars, project(V, assignment, svars)))
            contributes[(V, assignment)] = buckets
            for b in buckets:
                counts[b] = counts.get(b, 0) + 1

    dead: list = []
    for V in vsets:
        for assignment in valid[V]:
            for V2 in vsets:
                if V2 == V:
                    continue
                svars = shared[(V, V2)]
                need = (V2, svars, project(V, assignment, svars))
                if counts.get(need, 0) == 0:
                    dead.append((V, assignment))
                    break
                watchers.setdefault(need, []).append((V, assignment))

    remaining = {V: len(valid[V]) for V in vsets}
    while dead:
        pos = dead.pop()
        if not alive.get(pos, False):
            continue
        alive[pos] = False
        V, _ = pos
        remaining[V] -= 1
        if remaining[V] == 0:
            return False
        for b in contributes[pos]:
            counts[b] -= 1
            if counts[b] == 0:
                for dep in watchers.get(b, ()):
                    if alive.get(dep, False):
                        dead.append(dep)
    return all(remaining[V] > 0 for V in vsets)


def pebble_answers(Q: OMQ, d: Database, k: int) -> frozenset:
    """All tuples surviving the game (union over disjuncts)."""
    if not is_consistent(d, Q.ontology):
        return frozenset(itertools.product(sorted(d.dom), repeat=Q.arity))
    out = set()
    for cq in Q.query.disjuncts:
        sub = single_cq_omq(Q.ontology, Q.schema, cq)
        for a in itertools.product(sorted(d.dom), repeat=Q.arity):
            if a not in out and pebble_evaluate(sub, d, a, k):
                out.add(a)
    return frozenset(out)

"""Homomorphisms between queries and databases, contraction enumeration,
cores, and injective-only satisfaction.

Homomorphism search is plain backtracking with forward pruning; branching
order is descending Gaifman degree with lexicographic tie-break, candidate
order is lexicographic, so the first solution is deterministic.
"""

from __future__ import annotations

from typing import Callable, Iterable, Iterator, Optional

from .model import (
    CQ,
    ConceptFact,
    Database,
    QueryError,
    RoleFact,
    UCQ,
    cq_as_database,
    gaifman_graph,
)


class HomError(ValueError):
    pass


def _var_order(q: CQ, fixed: Iterable[str] = ()) -> list[str]:
    g = gaifman_graph(q.as_database())
    deg = {v: g.degree(v) for v in q.variables()}
    free = [v for v in q.variables() if v not in set(fixed)]
    return sorted(free, key=lambda v: (-deg.get(v, 0), v))


def _atom_indexes(target: Database):
    concepts: dict[str, set] = {}
    out_edges: dict[tuple, set] = {}
    in_edges: dict[tuple, set] = {}
    pairs: set = set()
    for f in target.facts:
        if isinstance(f, ConceptFact):
            concepts.setdefault(f.name, set()).add(f.a)
        else:
            out_edges.setdefault((f.name, f.a), set()).add(f.b)
            in_edges.setdefault((f.name, f.b), set()).add(f.a)
            pairs.add((f.name, f.a, f.b))
    return concepts, out_edges, in_edges, pairs


def _candidates(q: CQ, target: Database, allowed=None):
    """Per-variable candidate constants from unary atoms (plus `allowed`)."""
    concepts, *_ = _atom_indexes(target)
    cand: dict[str, set] = {}
    base = set(target.dom)
    for v in q.variables():
        cand[v] = set(base) if allowed is None else set(allowed.get(v, base))
    for at in q.atoms:
        if isinstance(at, ConceptFact):
            cand[at.a] &= concepts.get(at.name, set())
    return cand


def iter_homomorphisms(
    q: CQ,
    target: Database,
    fixed: Optional[dict] = None,
    allowed: Optional[dict] = None,
) -> Iterator[dict]:
    """All homomorphisms from ``q`` into ``target`` extending ``fixed``,
    in deterministic (lexicographic) order."""
    fixed = dict(fixed or {})
    for v, c in fixed.items():
        if v not in q.variables():
            raise HomError(f"fixed variable {v} does not occur in the query")
        if c not in target.dom and q.atoms:
            return
    concepts, out_edges, in_edges, pairs = _atom_indexes(target)
    cand = _candidates(q, target, allowed)
    for v, c in fixed.items():
        if q.atoms and c not in cand[v]:
            return
        cand[v] = {c}

    order = _var_order(q, fixed)
    # atoms indexed by the variable that completes them under `order`
    rank = {v: i for i, v in enumerate(order)}
    for v in fixed:
        rank[v] = -1
    check_at: dict[str, list] = {v: [] for v in order}
    narrow_at: dict[str, list] = {v: [] for v in order}
    upfront = []
    for at in q.atoms:
        ts = at.terms()
        last = max(ts, key=lambda t: rank[t])
        if rank[last] < 0:
            upfront.append(at)
        else:
            check_at[last].append(at)
            if isinstance(at, RoleFact) and at.a != at.b:
                narrow_at[last].append(at)

    h0 = dict(fixed)
    for at in upfront:
        if not _atom_holds(at, h0, concepts, pairs):
            return

    def candidates(v: str, h: dict):
        # narrow by role atoms linking v to already assigned variables
        out = cand[v]
        for at in narrow_at[v]:
            if at.b == v and at.a in h:
                out = out & out_edges.get((at.name, h[at.a]), frozenset())
            elif at.a == v and at.b in h:
                out = out & in_edges.get((at.name, h[at.b]), frozenset())
            if not out:
                break
        return out

    # iterative backtracking (queries can have very many variables)
    h = dict(h0)
    if not order:
        yield dict(h)
        return
    iters: list = [iter(sorted(candidates(order[0], h)))]
    while iters:
        i = len(iters) - 1
        v = order[i]
        advanced = False
        for c in iters[-1]:
            h[v] = c
            if all(_atom_holds(at, h, concepts, pairs) for at in check_at[v]):
                advanced = True
                break
        if not advanced:
            h.pop(v, None)
            iters.pop()
            continue
        if i + 1 == len(order):
            yield dict(h)
            continue
        iters.append(iter(sorted(candidates(order[i + 1], h))))


def _atom_holds(at, h, concepts, pairs) -> bool:
    if isinstance(at, ConceptFact):
        return h[at.a] in concepts.get(at.name, ())
    return (at.name, h[at.a], h[at.b]) in pairs


def find_homomorphism(q: CQ, target: Database, fixed: Optional[dict] = None) -> Optional[dict]:
    """First homomorphism extending ``fixed`` under the deterministic order,
    or ``None``."""
    for h in iter_homomorphisms(q, target, fixed):
        return h
    return None


def cq_homomorphism(q1: CQ, q2: CQ) -> Optional[dict]:
    """Homomorphism between CQs fixing the (shared) answer variables."""
    fixed = {x: x for x in q1.answer_vars}
    return find_homomorphism(q1, cq_as_database(q2), fixed)


def all_answers(q: UCQ | CQ, d: Database, restrict_to: Optional[frozenset] = None) -> set:
    """All answer tuples of ``q`` on ``d``; optionally only tuples whose
    components lie in ``restrict_to``.  One existence check per candidate
    tuple, so the search never enumerates whole homomorphism spaces."""
    import itertools

    disjuncts = q.disjuncts if isinstance(q, UCQ) else (q,)
    out: set = set()
    pool = sorted(restrict_to if restrict_to is not None else d.dom)
    for cq in disjuncts:
        if not cq.answer_vars:
            if () not in out and find_homomorphism(cq, d) is not None:
                out.add(())
            continue
        for combo in itertools.product(pool, repeat=len(cq.answer_vars)):
            if combo in out:
                continue
            fixed = dict(zip(cq.answer_vars, combo))
            if find_homomorphism(cq, d, fixed) is not None:
                out.add(combo)
    return out


# ---------------------------------------------------------------------------
# Contractions


def _restricted_growth_strings(n: int) -> Iterator[tuple]:
    """All set partitions of range(n), encoded canonically."""
    if n == 0:
        yield ()
        return
    s = [0] * n

    def rec(i: int, m: int):
        if i == n:
            yield tuple(s)
            return
        for v in range(m + 2):
            s[i] = v
            yield from rec(i + 1, max(m, v))

    yield from rec(1, 0)


def contractions(q: CQ, proper_only: bool = False) -> Iterator[tuple]:
    """All contractions of ``q`` (including ``q`` itself unless
    ``proper_only``), each as ``(contracted CQ, partition)``.

    A partition block may contain at most one answer variable and is
    represented by it; otherwise by its least variable.
    """
    var = sorted(q.variables())
    answers = set(q.answer_vars)
    n = len(var)
    for rgs in _restricted_growth_strings(n):
        blocks: dict[int, list] = {}
        for i, b in enumerate(rgs):
            blocks.setdefault(b, []).append(var[i])
        if proper_only and len(blocks) == n:
            continue
        ok = True
        rep: dict[str, str] = {}
        partition = []
        for block in blocks.values():
            avs = [x for x in block if x in answers]
            if len(avs) > 1:
                ok = False
                break
            r = avs[0] if avs else min(block)
            for x in block:
                rep[x] = r
            partition.append(tuple(sorted(block)))
        if not ok:
            continue
        yield q.rename(rep), tuple(sorted(partition))


def is_contraction_of(qc: CQ, q: CQ) -> bool:
    """True iff some variable identification of ``q`` yields ``qc`` exactly."""
    for cand, _ in contractions(q):
        if cand == qc:
            return True
    return False


# ---------------------------------------------------------------------------
# Cores


def core(q: CQ) -> CQ:
    """A maximum retract of ``q``: repeatedly fold the query onto a proper
    homomorphic image (fixing answer variables) until none exists.

    Worst case exponential; intended for desk-scale queries.
    """
    current = q
    while True:
        folded = _proper_retraction(current)
        if folded is None:
            return current
        current = folded


def _proper_retraction(q: CQ) -> Optional[CQ]:
    var = q.variables()
    fixed = {x: x for x in q.answer_vars}
    for h in iter_homomorphisms(q, cq_as_database(q), fixed):
        image = set(h.values())
        if len(image) < len(var):
            atoms = {at.rename(h) for at in q.atoms}
            return CQ(q.answer_vars, atoms)
    return None


def equivalent_cqs(q1: CQ, q2: CQ) -> bool:
    """Plain CQ equivalence (mutual homomorphisms fixing answer variables)."""
    return cq_homomorphism(q1, q2) is not None and cq_homomorphism(q2, q1) is not None


# ---------------------------------------------------------------------------
# Injective-only satisfaction


def io_satisfies(d: Database, p: CQ) -> bool:
    """``d |=io p``: some homomorphism exists and every one is injective."""
    if not p.is_boolean():
        raise QueryError("io-satisfaction is defined for Boolean queries")
    found = False
    nvars = len(p.variables())
    for h in iter_homomorphisms(p, d):
        found = True
        if len(set(h.values())) != nvars:
            return False
    return found


def io_contraction(d: Database, p: CQ) -> CQ:
    """A contraction of ``p`` that ``d`` satisfies injectively-only, found
    by merging the collisions of an arbitrary non-injective homomorphism
    until only injective ones remain."""
    if not p.is_boolean():
        raise QueryError("io-contraction is defined for Boolean queries")
    current = p
    while True:
        witness = None
        for h in iter_homomorphisms(current, d):
            if len(set(h.values())) != len(current.variables()):
                witness = h
                break
        if witness is None:
            if find_homomorphism(current, d) is None:
                raise HomError("database does not satisfy the query")
            return current
        groups: dict[str, list] = {}
        for v in sorted(current.variables()):
            groups.setdefault(witness[v], []).append(v)
        rep = {v: vs[0] for vs in groups.values() for v in vs}
        current = current.rename(rep)


# ---------------------------------------------------------------------------
# Dangling-tree removal


def strip_trees(p: CQ) -> CQ:
    """Largest sub-conjunction of a connected Boolean query with no
    articulation point splitting off a treewidth-1 component (pendant trees,
    including reflexive loops and multi-edges, are peeled away)."""
    from .graphalg import treewidth  # local import to avoid a cycle

    if not p.is_boolean():
        raise QueryError("tree stripping is defined for Boolean queries")
    g = gaifman_graph(cq_as_database(p))
    if not g.is_connected():
        raise QueryError("tree stripping needs a connected query")
    if treewidth(g)[0] <= 1:
        raise QueryError("tree stripping needs tree width above 1")

    atoms = set(p.atoms)
    while True:
        live = set()
        for at in atoms:
            live.update(at.terms())
        g = gaifman_graph(Database(atoms))
        peel = {v for v in live if g.degree(v) <= 1}
        doomed = {at for at in atoms if set(at.terms()) & peel}
        if not doomed:
            return CQ((), atoms)
        atoms -= doomed

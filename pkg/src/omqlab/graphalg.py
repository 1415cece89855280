"""Tree decompositions, exact treewidth, ditree tests, dtree construction,
unravelings into bounded-treewidth databases, and minor tests.

Treewidth is exact (elimination-order dynamic programming over vertex
subsets with degree-1/simplicial preprocessing); there are no heuristic
shortcuts on decision paths.  Inputs are desk scale; a hard vertex cap
guards against accidental blowups.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

from .model import (
    CQ,
    ConceptFact,
    Database,
    Fact,
    QueryError,
    RoleFact,
    UndirectedGraph,
    cq_as_database,
    gaifman_graph,
)

TREEWIDTH_VERTEX_CAP = 25
MINOR_VERTEX_CAP = 12


class CapExceeded(RuntimeError):
    """A desk-scale size cap was hit; results would not be exact in time."""


@dataclass(frozen=True)
class TreeDecomposition:
    """Bags indexed by id, plus tree edges over bag ids."""

    bags: tuple  # tuple of frozensets, index = bag id
    edges: frozenset  # frozenset of frozenset({i, j})

    @property
    def width(self) -> int:
        if not self.bags:
            return -1
        return max(len(b) for b in self.bags) - 1

    def validate(self, g: UndirectedGraph) -> list[str]:
        """The three defining conditions, checked directly."""
        out = []
        covered = set().union(*self.bags) if self.bags else set()
        if set(g.vertices) - covered:
            out.append(f"uncovered vertices: {sorted(set(g.vertices) - covered, key=str)}")
        for e in g.edges():
            if not any(e <= b for b in self.bags):
                out.append(f"edge {sorted(e, key=str)} in no bag")
        # tree shape
        n = len(self.bags)
        if n and len(self.edges) != n - 1:
            out.append("bag tree has the wrong number of edges")
        if n and not self._tree_connected():
            out.append("bag tree is disconnected")
        # connectedness of each vertex's bag set
        for v in g.vertices:
            ids = [i for i, b in enumerate(self.bags) if v in b]
            if ids and not self._connected_within(set(ids)):
                out.append(f"bags of {v} are not connected")
        return out

    def _adj(self):
        adj = {i: set() for i in range(len(self.bags))}
        for e in self.edges:
            i, j = tuple(e)
            adj[i].add(j)
            adj[j].add(i)
        return adj

    def _tree_connected(self) -> bool:
        return self._connected_within(set(range(len(self.bags))))

    def _connected_within(self, ids: set) -> bool:
        if not ids:
            return True
        adj = self._adj()
        seen = {next(iter(sorted(ids)))}
        stack = list(seen)
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w in ids and w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen == ids


# ---------------------------------------------------------------------------
# Exact treewidth


_TW_CACHE: dict = {}


def treewidth(g: UndirectedGraph) -> tuple[int, TreeDecomposition]:
    """Exact treewidth with a witness decomposition.

    Edgeless graphs (including the empty graph) report width 0.
    """
    key = (g.vertices, frozenset(g.edges()))
    hit = _TW_CACHE.get(key)
    if hit is not None:
        return hit
    out = _treewidth_uncached(g)
    if len(_TW_CACHE) < 200000:
        _TW_CACHE[key] = out
    return out


def _treewidth_uncached(g: UndirectedGraph) -> tuple[int, TreeDecomposition]:
    if len(g.vertices) > TREEWIDTH_VERTEX_CAP:
        raise CapExceeded(f"treewidth limited to {TREEWIDTH_VERTEX_CAP} vertices, "
                          f"got {len(g.vertices)}")
    vertices = sorted(g.vertices, key=str)
    if not vertices:
        return 0, TreeDecomposition((frozenset(),), frozenset())

    # preprocessing: peel degree-<=1 and simplicial vertices, remember order
    work = {v: set(g.neighbours(v)) for v in vertices}
    peeled: list[tuple] = []  # (vertex, neighbour clique at removal)
    lower = 0
    changed = True
    while changed and len(work) > 1:
        changed = False
        for v in sorted(work, key=str):
            nbrs = work[v]
            if len(nbrs) <= 1 or _is_clique(nbrs, work):
                lower = max(lower, len(nbrs))
                peeled.append((v, frozenset(nbrs)))
                for w in nbrs:
                    work[w].discard(v)
                del work[v]
                changed = True
                break

    if work:
        core_order, core_width = _elimination_dp(work)
    else:
        core_order, core_width = [], 0
    width = max(lower, core_width)

    # full elimination order: peeled first, then the core order
    order = [v for v, _ in peeled] + core_order
    bags, edges = _decomposition_from_order(g, order)
    td = TreeDecomposition(tuple(bags), frozenset(edges))
    return width, td


def _is_clique(vs: set, adj: dict) -> bool:
    vs = list(vs)
    return all(b in adj[a] for a, b in itertools.combinations(vs, 2))


def _elimination_dp(adj: dict) -> tuple[list, int]:
    """Exact minimum over elimination orders via subset DP."""
    vertices = sorted(adj, key=str)
    index = {v: i for i, v in enumerate(vertices)}
    n = len(vertices)
    bits = {v: 1 << index[v] for v in vertices}
    nbr_bits = {v: sum(bits[w] for w in adj[v]) for v in vertices}
    full = (1 << n) - 1

    from functools import lru_cache

    @lru_cache(maxsize=None)
    def reach_degree(eliminated: int, v: str) -> int:
        # vertices outside `eliminated` reachable from v through eliminated ones
        seen = bits[v]
        frontier = [v]
        out = 0
        while frontier:
            u = frontier.pop()
            cand = nbr_bits[u] & ~seen
            seen |= cand
            m = cand
            while m:
                low = m & -m
                w = vertices[low.bit_length() - 1]
                m ^= low
                if bits[w] & eliminated:
                    frontier.append(w)
                else:
                    out += 1
        return out

    best: dict[int, tuple] = {0: (0, None)}  # eliminated-set -> (width, last vertex)
    layer = {0: (0, None)}
    for _ in range(n):
        nxt: dict[int, tuple] = {}
        for s, (w, _) in layer.items():
            rest = full & ~s
            m = rest
            while m:
                low = m & -m
                v = vertices[low.bit_length() - 1]
                m ^= low
                cost = max(w, reach_degree(s, v))
                s2 = s | bits[v]
                if s2 not in nxt or cost < nxt[s2][0]:
                    nxt[s2] = (cost, v)
        best.update(nxt)
        layer = nxt

    # reconstruct the order backwards
    order = []
    s = full
    while s:
        _, v = best[s]
        order.append(v)
        s &= ~bits[v]
    order.reverse()
    return order, best[full][0]


def _decomposition_from_order(g: UndirectedGraph, order: list) -> tuple[list, set]:
    """Bags from an elimination order (fill-in simulation)."""
    if not order:
        return [frozenset()], set()
    pos = {v: i for i, v in enumerate(order)}
    adj = {v: set(g.neighbours(v)) for v in g.vertices}
    bags: list[frozenset] = []
    later: list[set] = []
    for v in order:
        nbrs = {w for w in adj[v] if pos[w] > pos[v]}
        bags.append(frozenset({v} | nbrs))
        later.append(nbrs)
        for a in nbrs:
            adj[a].discard(v)
            for b in nbrs:
                if a != b:
                    adj[a].add(b)
    edges: set = set()
    for i, v in enumerate(order):
        nbrs = later[i]
        if nbrs:
            first = min(nbrs, key=lambda w: pos[w])
            edges.add(frozenset({i, pos[first]}))
        elif i + 1 < len(order):
            edges.add(frozenset({i, i + 1}))
    return bags, edges


def cq_treewidth(q: CQ) -> int:
    """Treewidth of the quantified-variable restriction; 1 when that
    restriction has no binary atoms."""
    quantified = q.quantified_vars()
    restricted = [at for at in q.atoms if all(t in quantified for t in at.terms())]
    if not any(isinstance(at, RoleFact) for at in restricted):
        return 1
    g = gaifman_graph(Database(restricted))
    for v in quantified:
        g.add_vertex(v)
    return treewidth(g)[0]


# ---------------------------------------------------------------------------
# Ditrees and initial ditree quotients


def _directed_pairs(d: Database) -> set:
    return {(f.a, f.b) for f in d.facts if isinstance(f, RoleFact)}


def is_ditree(d: Database) -> bool:
    """True iff the directed role graph is a tree (multi-edges fine,
    reflexive loops not)."""
    pairs = _directed_pairs(d)
    if any(a == b for a, b in pairs):
        return False
    if not d.dom:
        return True
    indeg = {v: 0 for v in d.dom}
    for _, b in pairs:
        indeg[b] += 1
    roots = [v for v, k in indeg.items() if k == 0]
    if len(roots) != 1 or any(k > 1 for k in indeg.values()):
        return False
    if len(pairs) != len(d.dom) - 1:
        return False
    # connectivity from the root
    children: dict = {}
    for a, b in pairs:
        children.setdefault(a, set()).add(b)
    seen = {roots[0]}
    stack = [roots[0]]
    while stack:
        u = stack.pop()
        for w in children.get(u, ()):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen == set(d.dom)


def dtree_merge(q: CQ) -> CQ:
    """Exhaustively identify x1, x2 whenever atoms r(x1,y), s(x2,y) share
    the target y; the quotient query is returned (answer tuple preserved)."""
    parent = {v: v for v in q.variables()}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            ra, rb = sorted((ra, rb))
            parent[rb] = ra

    changed = True
    while changed:
        changed = False
        sources: dict = {}
        for at in q.atoms:
            if isinstance(at, RoleFact):
                sources.setdefault(find(at.b), set()).add(find(at.a))
        for srcs in sources.values():
            srcs = sorted(srcs)
            for other in srcs[1:]:
                if find(other) != find(srcs[0]):
                    union(srcs[0], other)
                    changed = True

    rep = {v: find(v) for v in q.variables()}
    return q.rename(rep)


def dtree(q: CQ) -> Optional[CQ]:
    """Initial ditree the connected Boolean query maps into, as a CQ whose
    root is the single answer variable; ``None`` if no ditree preimage."""
    if not q.is_boolean():
        raise QueryError("dtree is defined for Boolean queries")
    if q.atoms and not gaifman_graph(cq_as_database(q)).is_connected():
        raise QueryError("dtree needs a connected query")
    merged = dtree_merge(q)
    db = cq_as_database(merged)
    if not is_ditree(db):
        return None
    root = _ditree_root(db, merged)
    return CQ((root,), merged.atoms)


def _ditree_root(db: Database, q: CQ) -> str:
    pairs = _directed_pairs(db)
    targets = {b for _, b in pairs}
    roots = sorted(v for v in q.variables() if v not in targets)
    return roots[0]


# ---------------------------------------------------------------------------
# Unravelings


@dataclass(frozen=True)
class UnravelNode:
    constant: str
    projection: str  # the original constant this one copies
    bag: int
    depth: int


@dataclass(frozen=True)
class Unraveling:
    database: Database
    nodes: tuple  # UnravelNode per fresh or reused constant of the bag tree
    decomposition: TreeDecomposition

    def projection(self) -> dict:
        return {n.constant: n.projection for n in self.nodes}


def _automorphisms(d: Database, fixed: set) -> list[dict]:
    """All renamings of non-fixed constants preserving the fact set."""
    movable = sorted(set(d.dom) - fixed)
    autos = []
    for perm in itertools.permutations(movable):
        m = dict(zip(movable, perm))
        if all(f.rename(m) in d.facts for f in d.facts):
            autos.append(m)
    return autos


def k_unravel(d: Database, a: tuple, k: int, depth: int) -> Unraveling:
    """Truncated width-``k`` unraveling of ``d`` up to the tuple ``a``:
    the tuple's facts stay verbatim, the rest unravels into bags of at
    most ``k + 1`` constants, and crossing facts are re-attached along the
    projection.  ``depth`` counts bag generations below the synthetic root.

    Child bags that are automorphic images of a sibling (over the parent
    overlap) are generated once; the duplicates are homomorphically
    redundant.  Constants adjacent only to tuple constants still receive
    (fact-free) bag copies; dropping them would lose certain answers.
    """
    anchors = set(a)
    base_facts = [f for f in d.facts if not (set(f.terms()) & anchors)]
    base = Database(base_facts)
    base_dom = sorted(set(d.dom) - anchors)
    autos = _automorphisms(d, anchors) if len(base_dom) <= 7 else [
        {c: c for c in base_dom}]

    fresh_count = itertools.count()
    facts: set[Fact] = set(f for f in d.facts if set(f.terms()) <= anchors)
    nodes: list[UnravelNode] = []
    bags: list[frozenset] = [frozenset()]
    edges: set = set()
    # frontier entries: (bag id, {original constant -> copy})
    frontier: list[tuple[int, dict]] = [(0, {})]

    for level in range(depth + 1):
        next_frontier: list[tuple[int, dict]] = []
        for bag_id, proj in frontier:
            image = set(proj)
            stable = [m for m in autos if all(m[p] == p for p in image)]
            seen_children: set = set()
            for size in range(1, k + 2):
                for comb in itertools.combinations(base_dom, size):
                    cset = set(comb)
                    if cset <= image:
                        continue  # nothing fresh; the parent bag covers it
                    orbit = min(tuple(sorted(m[c] for c in comb)) for m in stable)
                    if orbit in seen_children:
                        continue
                    seen_children.add(orbit)
                    mapping: dict = {}
                    for c in comb:
                        if c in proj:
                            mapping[c] = proj[c]
                        else:
                            copy = f"_u{next(fresh_count)}"
                            mapping[c] = copy
                            nodes.append(UnravelNode(copy, c, len(bags), level))
                    for f in base.facts:
                        if set(f.terms()) <= cset:
                            facts.add(f.rename(mapping))
                    child_id = len(bags)
                    bags.append(frozenset(mapping.values()))
                    edges.add(frozenset({bag_id, child_id}))
                    next_frontier.append((child_id, {c: mapping[c] for c in comb}))
        frontier = next_frontier

    # re-attach crossing facts along the projection
    proj_all: dict[str, list] = {}
    for n in nodes:
        proj_all.setdefault(n.projection, []).append(n.constant)
    for f in d.facts:
        ts = set(f.terms())
        if ts <= anchors or not (ts & anchors):
            continue
        if isinstance(f, RoleFact):
            if f.a in anchors:
                for c in proj_all.get(f.b, ()):
                    facts.add(RoleFact(f.name, f.a, c))
            else:
                for c in proj_all.get(f.a, ()):
                    facts.add(RoleFact(f.name, c, f.b))

    # The returned decomposition covers the whole unraveling: anchors join
    # every bag, so its width is at most k + |anchors|.  The width-k claim
    # is about the anchor-free part (drop the anchors from the bags).
    if anchors:
        bags = [b | frozenset(anchors) for b in bags]
    td = TreeDecomposition(tuple(bags), frozenset(edges))
    return Unraveling(Database(facts), tuple(nodes), td)


def unravel1_at(d: Database, a: str, depth: int) -> Unraveling:
    """Treewidth-1 unraveling started at ``a`` (the root constant is ``a``
    itself), truncated after ``depth`` extra bag generations."""
    if a not in d.dom:
        raise ValueError(f"{a} is not a constant of the database")
    fresh_count = itertools.count()
    facts: set[Fact] = {f for f in d.facts if set(f.terms()) <= {a}}
    nodes: list[UnravelNode] = [UnravelNode(a, a, 0, 0)]
    bags: list[frozenset] = [frozenset({a})]
    edges: set = set()
    frontier: list[tuple[int, dict]] = [(0, {a: a})]
    dom = sorted(d.dom)
    autos = _automorphisms(d, set()) if len(dom) <= 7 else [{c: c for c in dom}]

    for level in range(1, depth + 1):
        next_frontier = []
        for bag_id, proj in frontier:
            image = set(proj)
            stable = [m for m in autos if all(m.get(p, p) == p for p in image)]
            seen_children: set = set()
            for size in (1, 2):
                for comb in itertools.combinations(dom, size):
                    cset = set(comb)
                    if cset <= image:
                        continue
                    orbit = min(tuple(sorted(m.get(c, c) for c in comb)) for m in stable)
                    if orbit in seen_children:
                        continue
                    seen_children.add(orbit)
                    mapping = {}
                    for c in comb:
                        if c in proj:
                            mapping[c] = proj[c]
                        else:
                            copy = f"_u{next(fresh_count)}"
                            mapping[c] = copy
                            nodes.append(UnravelNode(copy, c, len(bags), level))
                    for f in d.facts:
                        if set(f.terms()) <= cset:
                            facts.add(f.rename(mapping))
                    child_id = len(bags)
                    bags.append(frozenset(mapping.values()))
                    edges.add(frozenset({bag_id, child_id}))
                    next_frontier.append((child_id, dict(zip(comb, (mapping[c] for c in comb)))))
        frontier = next_frontier

    td = TreeDecomposition(tuple(bags), frozenset(edges))
    return Unraveling(Database(facts), tuple(nodes), td)


# ---------------------------------------------------------------------------
# Minors


def is_minor(h: UndirectedGraph, g: UndirectedGraph) -> bool:
    """Exact test: is ``h`` obtainable from a subgraph of ``g`` by edge
    contractions (branch-set model)?"""
    if len(g.vertices) > MINOR_VERTEX_CAP:
        raise CapExceeded(f"minor test limited to {MINOR_VERTEX_CAP} vertices, "
                          f"got {len(g.vertices)}")
    hv = sorted(h.vertices, key=str)
    if not hv:
        return True
    if len(hv) > len(g.vertices):
        return False
    gv = sorted(g.vertices, key=str)
    order = sorted(hv, key=lambda v: (-h.degree(v), str(v)))

    def connected_subsets(avail: frozenset):
        # nonempty connected subsets of available vertices, small first
        singles = [frozenset({v}) for v in sorted(avail, key=str)]
        seen = set(singles)
        frontier = singles
        while frontier:
            yield from frontier
            nxt = []
            for s in frontier:
                border = set()
                for v in s:
                    border |= g.neighbours(v)
                for w in sorted(border & avail - s, key=str):
                    s2 = s | {w}
                    if s2 not in seen:
                        seen.add(s2)
                        nxt.append(s2)
            frontier = nxt

    def linked(s1: frozenset, s2: frozenset) -> bool:
        return any(w in g.neighbours(v) for v in s1 for w in s2)

    def assign(i: int, used: frozenset, branch: dict) -> bool:
        if i == len(order):
            return True
        v = order[i]
        needed = [u for u in order[:i] if u in h.neighbours(v)]
        for s in connected_subsets(frozenset(g.vertices) - used):
            if all(linked(s, branch[u]) for u in needed):
                branch[v] = s
                if assign(i + 1, used | s, branch):
                    return True
                del branch[v]
        return False

    return assign(0, frozenset(), {})

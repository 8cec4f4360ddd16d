"""Exhaustive enumeration of vertex-labeled general phylogenetic networks.

This module is the package's ground truth.  Counts are obtained by direct
backtracking search over in-edge assignments; no generating functions are
involved anywhere, so agreement with the assembled series is meaningful
evidence rather than a tautology.

A network on n vertices has exactly one root (in 0, out 2); every other
vertex is a leaf (in 1, out 0), a tree vertex (in 1, out 2) or a
reticulation (in 2, out 1).  Parallel edges are allowed, but only as a
double edge from a single parent into a reticulation (in-degree 2 forces
multiplicity <= 2, and only reticulations have in-degree 2).  The graph
must be a connected DAG.  A counting argument fixes the shape of any valid
degree profile: with k reticulations and l leaves, n = 2l + 2k - 1 (odd)
and there are t = l + k - 2 tree vertices.

Key reduction: validity is invariant under relabeling, so the number of
networks in which a *specific* set of labels carries each degree type is
independent of that choice.  We therefore search once over a fixed typed
layout and multiply by the multinomial n! / (t! k! l!).  The search itself
never assumes anything beyond the degree/DAG constraints, and a second,
entirely independent generate-and-filter enumerator (over raw edge
multisets) is provided for cross-validation at small n.

Connectivity needs no explicit check in the typed search: every non-root
vertex has in-degree >= 1, so following parent edges from any vertex must
terminate (acyclicity) at the unique in-degree-0 vertex, the root.  The
brute-force enumerator still checks it, since it filters raw edge sets.
"""

from __future__ import annotations

import math
import time
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations_with_replacement, permutations

__all__ = [
    "BudgetExceeded",
    "Classification",
    "CountTable",
    "LeafClass",
    "Network",
    "brute_force_census",
    "census",
    "count_leaf_labeled",
    "degree_profile",
    "leaf_classes",
    "networks",
    "symmetry_census",
    "write_edge_lists",
]

DEFAULT_MAX_N = 9
EXTENDED_MAX_N = 11


class BudgetExceeded(Exception):
    """Raised when an enumeration runs past its time budget.

    Partial results are discarded by construction: callers only ever see
    counts from searches that ran to completion.
    """


class InvalidNetwork(ValueError):
    pass


def degree_profile(n: int, k: int):
    """Return (t, l) = (#tree vertices, #leaves), or None if impossible.

    Out-degrees supply 2 + 2t + k edge slots and in-degrees demand
    l + t + 2k, so t = l + k - 2 and n = 2l + 2k - 1.
    """
    if n < 3 or n % 2 == 0 or k < 0:
        return None
    l = (n + 1) // 2 - k
    t = l + k - 2
    if l < 1 or t < 0:
        return None
    return t, l


def _multinomial(n: int, t: int, k: int, l: int) -> int:
    return math.factorial(n) // (math.factorial(t) * math.factorial(k) * math.factorial(l))


# ---------------------------------------------------------------------------
# Networks and their classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Network:
    """A vertex-labeled network given as a multiset of directed edges.

    Labels are 1..n.  The edge tuple is sorted, with parallel edges
    appearing twice.
    """

    n: int
    edges: tuple

    def validate(self) -> None:
        indeg = Counter()
        outdeg = Counter()
        mult = Counter(self.edges)
        for (u, v) in self.edges:
            if not (1 <= u <= self.n and 1 <= v <= self.n) or u == v:
                raise InvalidNetwork(f"bad edge {(u, v)}")
            indeg[v] += 1
            outdeg[u] += 1
        roots = [v for v in range(1, self.n + 1) if indeg[v] == 0]
        if len(roots) != 1 or outdeg[roots[0]] != 2:
            raise InvalidNetwork("need exactly one root of out-degree 2")
        for v in range(1, self.n + 1):
            if v == roots[0]:
                continue
            if (indeg[v], outdeg[v]) not in ((1, 0), (1, 2), (2, 1)):
                raise InvalidNetwork(f"vertex {v} has degree type {(indeg[v], outdeg[v])}")
        for (u, v), m in mult.items():
            if m > 2:
                raise InvalidNetwork("edge multiplicity above 2")
            if m == 2 and indeg[v] != 2:
                raise InvalidNetwork("double edge not into a reticulation")
        if self._has_cycle():
            raise InvalidNetwork("cycle")
        if not self._connected():
            raise InvalidNetwork("disconnected")

    def _adjacency(self):
        adj = [[] for _ in range(self.n + 1)]
        for (u, v) in self.edges:
            adj[u].append(v)
        return adj

    def _has_cycle(self) -> bool:
        adj = self._adjacency()
        state = [0] * (self.n + 1)

        def visit(u):
            state[u] = 1
            for w in adj[u]:
                if state[w] == 1 or (state[w] == 0 and visit(w)):
                    return True
            state[u] = 2
            return False

        return any(state[v] == 0 and visit(v) for v in range(1, self.n + 1))

    def _connected(self) -> bool:
        und = [set() for _ in range(self.n + 1)]
        for (u, v) in self.edges:
            und[u].add(v)
            und[v].add(u)
        seen = {1}
        stack = [1]
        while stack:
            u = stack.pop()
            for w in und[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n


@dataclass(frozen=True)
class Classification:
    k: int
    r: int
    tree_child: bool
    leaf_count: int


def classify(net: Network) -> Classification:
    """Degree-type census of a validated network."""
    net.validate()
    indeg = Counter()
    outdeg = Counter()
    children = [[] for _ in range(net.n + 1)]
    for (u, v) in net.edges:
        indeg[v] += 1
        outdeg[u] += 1
        children[u].append(v)
    retic = {v for v in range(1, net.n + 1) if indeg[v] == 2}
    leaves = {v for v in range(1, net.n + 1) if outdeg[v] == 0}
    r = sum(1 for (e, m) in Counter(net.edges).items() if m == 2)
    tc = r == 0
    if tc:
        for v in range(1, net.n + 1):
            if v in leaves:
                continue
            if all(c in retic for c in children[v]):
                tc = False
                break
    return Classification(k=len(retic), r=r, tree_child=tc, leaf_count=len(leaves))


# ---------------------------------------------------------------------------
# Typed backtracking search
# ---------------------------------------------------------------------------

class _Deadline:
    def __init__(self, budget):
        self.t_end = None if budget is None else time.monotonic() + budget

    def check(self):
        if self.t_end is not None and time.monotonic() > self.t_end:
            raise BudgetExceeded()


def _typed_structures(n: int, k: int, deadline: _Deadline):
    """Yield edge tuples of all networks on the fixed typed layout.

    Layout: vertex 0 is the root, 1..t are tree vertices, t+1..t+k are
    reticulations, the rest are leaves.  Each non-root vertex chooses its
    parents from the out-capacity holders, in increasing label order, with
    incremental ancestor bitmasks pruning anything that would close a
    cycle.
    """
    prof = degree_profile(n, k)
    if prof is None:
        return
    t, l = prof
    first_leaf = 1 + t + k
    cap = [2] * (1 + t) + [1] * k + [0] * l
    anc = [0] * n
    children = [[] for _ in range(n)]
    edges = []
    parents_of = list(range(1 + t + k))  # candidate parents, in order

    def attach(p, v):
        # Refuse self-loops and anything that would make v its own ancestor.
        if p == v or (anc[p] >> v) & 1:
            return None
        rollback = []
        bits = anc[p] | (1 << p)
        stack = [v]
        while stack:
            u = stack.pop()
            new = anc[u] | bits
            if new != anc[u]:
                rollback.append((u, anc[u]))
                anc[u] = new
                stack.extend(children[u])
        children[p].append(v)
        cap[p] -= 1
        edges.append((p, v))
        return rollback

    def detach(p, v, rollback):
        for u, old in reversed(rollback):
            anc[u] = old
        children[p].pop()
        cap[p] += 1
        edges.pop()

    def rec(v):
        deadline.check()
        if v == n:
            yield tuple(sorted(edges))
            return
        if v < first_leaf and v > t:  # reticulation: two parents, repeats allowed
            for p1 in parents_of:
                if cap[p1] == 0:
                    continue
                r1 = attach(p1, v)
                if r1 is None:
                    continue
                for p2 in parents_of[p1:]:
                    if cap[p2] == 0:
                        continue
                    r2 = attach(p2, v)
                    if r2 is None:
                        continue
                    yield from rec(v + 1)
                    detach(p2, v, r2)
                detach(p1, v, r1)
        else:  # tree vertex or leaf: one parent
            for p in parents_of:
                if cap[p] == 0:
                    continue
                rb = attach(p, v)
                if rb is None:
                    continue
                yield from rec(v + 1)
                detach(p, v, rb)

    yield from rec(1)


def _typed_classify(n, k, edges):
    """(r, tree_child) for a typed structure, cheaper than full classify()."""
    prof = degree_profile(n, k)
    t, l = prof
    first_leaf = 1 + t + k
    mult = Counter(edges)
    r = sum(1 for m in mult.values() if m == 2)
    if r:
        return r, False
    children = [[] for _ in range(n)]
    for (u, v) in edges:
        children[u].append(v)
    for v in range(first_leaf):
        kids = children[v]
        if kids and all(t < c < first_leaf for c in kids):
            return r, False
    return r, True


# ---------------------------------------------------------------------------
# Count tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CountRow:
    k: int
    size_kind: str  # "n" (vertex-labeled) or "l" (leaf-labeled)
    size: int
    stratum: str  # "all" | "no-mult" | "mult" | "tree-child"
    count: int
    provenance: str


@dataclass
class CountTable:
    rows: list = field(default_factory=list)

    def add(self, row: CountRow):
        self.rows.append(row)

    def get(self, k, size_kind, size, stratum):
        for row in self.rows:
            if (row.k, row.size_kind, row.size, row.stratum) == (k, size_kind, size, stratum):
                return row.count
        raise KeyError((k, size_kind, size, stratum))

    def to_json_obj(self):
        return [
            {
                "k": r.k,
                "size_kind": r.size_kind,
                "size": r.size,
                "stratum": r.stratum,
                "count": str(r.count),
                "provenance": r.provenance,
            }
            for r in self.rows
        ]


def census(n: int, budget: float | None = None, max_n: int = DEFAULT_MAX_N) -> CountTable:
    """Exact counts of all vertex-labeled networks with n vertices.

    Returns rows per k for the strata all / no-mult / mult / tree-child.
    Raises BudgetExceeded if the time budget runs out (no partial counts).
    """
    if n > max_n:
        raise ValueError(f"n={n} above configured maximum {max_n}")
    deadline = _Deadline(budget)
    table = CountTable()
    if n % 2 == 0 or n < 3:
        for k in range(0, max(1, (n + 1) // 2)):
            table.add(CountRow(k, "n", n, "all", 0, "oracle"))
        return table
    for k in range(0, (n - 1) // 2 + 1):
        prof = degree_profile(n, k)
        if prof is None:
            continue
        t, l = prof
        mult_factor = _multinomial(n, t, k, l)
        by_r = Counter()
        tc_typed = 0
        for edges in _typed_structures(n, k, deadline):
            r, tc = _typed_classify(n, k, edges)
            by_r[r] += 1
            if tc:
                tc_typed += 1
        no_mult = by_r[0] * mult_factor
        with_mult = sum(c for r, c in by_r.items() if r > 0) * mult_factor
        table.add(CountRow(k, "n", n, "all", no_mult + with_mult, "oracle"))
        table.add(CountRow(k, "n", n, "no-mult", no_mult, "oracle"))
        table.add(CountRow(k, "n", n, "mult", with_mult, "oracle"))
        table.add(CountRow(k, "n", n, "tree-child", tc_typed * mult_factor, "oracle"))
    return table


def networks(n: int, k: int | None = None, budget: float | None = None):
    """Yield every vertex-labeled Network with n vertices (and given k).

    Expands typed representatives over all assignments of labels to degree
    types; intended for emission and cross-checks at small n.
    """
    deadline = _Deadline(budget)
    if n % 2 == 0 or n < 3:
        return
    ks = range(0, (n - 1) // 2 + 1) if k is None else [k]
    labels = list(range(1, n + 1))
    for kk in ks:
        prof = degree_profile(n, kk)
        if prof is None:
            continue
        t, l = prof
        structures = list(_typed_structures(n, kk, deadline))
        # Assign actual labels to the typed slots: choose which labels are
        # tree vertices / reticulations / leaves (root gets the remaining one).
        from itertools import combinations

        for tree_set in combinations(labels, t):
            rest1 = [x for x in labels if x not in tree_set]
            for ret_set in combinations(rest1, kk):
                rest2 = [x for x in rest1 if x not in ret_set]
                for root in rest2:
                    leaf_list = [x for x in rest2 if x != root]
                    relab = [root] + list(tree_set) + list(ret_set) + leaf_list
                    for edges in structures:
                        yield Network(
                            n, tuple(sorted((relab[u], relab[v]) for (u, v) in edges))
                        )


# ---------------------------------------------------------------------------
# Second, independent enumerator (generate and filter)
# ---------------------------------------------------------------------------

def brute_force_census(n: int) -> Counter:
    """Count networks by filtering all plausible raw edge multisets.

    Completely independent of the typed search: builds every multiset of
    directed edges (multiplicity <= 2) of every feasible size and keeps
    the ones that validate.  Only usable for n <= 5.

    Returns Counter mapping (k, r, tree_child) -> count.
    """
    if n > 5:
        raise ValueError("brute force reference is for n <= 5 only")
    out = Counter()
    if n % 2 == 0 or n < 3:
        return out
    all_edges = [(u, v) for u in range(1, n + 1) for v in range(1, n + 1) if u != v]
    sizes = set()
    for k in range(0, (n - 1) // 2 + 1):
        prof = degree_profile(n, k)
        if prof:
            t, l = prof
            sizes.add(2 + 2 * t + k)
    for m in sorted(sizes):
        for combo in combinations_with_replacement(all_edges, m):
            if any(combo.count(e) > 2 for e in set(combo)):
                continue
            net = Network(n, tuple(sorted(combo)))
            try:
                c = classify(net)
            except InvalidNetwork:
                continue
            out[(c.k, c.r, c.tree_child)] += 1
    return out


# ---------------------------------------------------------------------------
# Leaf-labeled counting via canonical forms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LeafClass:
    """One isomorphism class of networks with pointwise-fixed leaf labels."""

    canon: tuple
    aut_order: int
    r: int
    tree_child: bool


def _refinement_cells(n, t, k, edges):
    """Partition internal vertices by a label-invariant signature.

    The signature of a vertex is (degree kind, set of descendant leaf
    labels); both are preserved by any isomorphism that fixes the leaves
    pointwise, and the leaf labels themselves are shared by all members
    of an orbit, so signature values compare meaningfully *across*
    structures.  Exactness does not depend on the signature being a
    complete invariant: ties are broken by brute force within cells.
    """
    first_leaf = 1 + t + k
    children = [[] for _ in range(n)]
    for (u, v) in edges:
        children[u].append(v)
    below = [None] * n

    def leafset(v):
        if below[v] is None:
            if v >= first_leaf:
                below[v] = frozenset([v])
            else:
                below[v] = frozenset().union(*(leafset(c) for c in children[v]))
        return below[v]

    cells = {}
    for v in range(1, first_leaf):
        kind = 0 if v <= t else 1  # tree first, then reticulations
        cells.setdefault((kind, tuple(sorted(leafset(v)))), []).append(v)
    return sorted(cells.items())


def _product_perms(pools):
    if not pools:
        yield ()
        return
    for head in pools[0]:
        for tail in _product_perms(pools[1:]):
            yield (head,) + tail


def _canonical(n, t, k, edges):
    """Canonical edge tuple + |Aut| under leaf-fixing internal relabeling.

    Target labels are dealt out block-wise in signature order (tree labels
    to tree cells, reticulation labels to reticulation cells), so the
    candidate relabelings are exactly the type- and signature-compatible
    ones; the minimum image over them is a true canonical form, and the
    number of relabelings attaining it equals the automorphism group
    order (two attainers differ by an automorphism).
    """
    cells = _refinement_cells(n, t, k, edges)
    next_tree, next_ret = 1, 1 + t
    targets = []  # per cell, the block of labels its vertices receive
    for (kind, _), members in cells:
        m = len(members)
        if kind == 0:
            targets.append(list(range(next_tree, next_tree + m)))
            next_tree += m
        else:
            targets.append(list(range(next_ret, next_ret + m)))
            next_ret += m
    best = None
    attained = 0
    pools = [list(permutations(members)) for (_, members) in cells]
    for combo in _product_perms(pools):
        mapping = list(range(n))
        for perm, block in zip(combo, targets):
            for src, dst in zip(perm, block):
                mapping[src] = dst
        img = tuple(sorted((mapping[u], mapping[v]) for (u, v) in edges))
        if best is None or img < best:
            best = img
            attained = 1
        elif img == best:
            attained += 1
    return best, attained


def leaf_classes(l: int, k: int, budget: float | None = None, max_n: int = DEFAULT_MAX_N):
    """All leaf-labeled classes with l labeled leaves and k reticulations.

    Works on the typed layout (leaves carry the last l labels, fixed
    pointwise); two typed structures are equivalent iff some permutation of
    the internal labels maps one edge multiset to the other.
    """
    n = 2 * l + 2 * k - 1
    if n > max_n:
        raise ValueError(f"n={n} above configured maximum {max_n}")
    prof = degree_profile(n, k)
    if prof is None:
        return []
    t, _ = prof
    deadline = _Deadline(budget)
    seen = {}
    total_typed = 0
    for edges in _typed_structures(n, k, deadline):
        total_typed += 1
        canon, aut = _canonical(n, t, k, edges)
        if canon not in seen:
            r, tc = _typed_classify(n, k, edges)
            seen[canon] = LeafClass(canon=canon, aut_order=aut, r=r, tree_child=tc)
    # Orbit-stabilizer consistency: each class accounts for t!k!/|Aut| typed
    # structures, and together they must account for all of them.
    accounted = sum(
        math.factorial(t) * math.factorial(k) // c.aut_order for c in seen.values()
    )
    assert accounted == total_typed, "orbit bookkeeping broke"
    return sorted(seen.values(), key=lambda c: c.canon)


def _stratum_match(cls: LeafClass, stratum: str) -> bool:
    if stratum == "all":
        return True
    if stratum == "no-mult":
        return cls.r == 0
    if stratum == "mult":
        return cls.r > 0
    if stratum == "tree-child":
        return cls.tree_child
    raise ValueError(f"unknown stratum {stratum!r}")


def count_leaf_labeled(l: int, k: int, stratum: str = "all",
                       budget: float | None = None, max_n: int = DEFAULT_MAX_N) -> int:
    """Number of leaf-labeled networks with l leaves and k reticulations."""
    return sum(
        1 for c in leaf_classes(l, k, budget, max_n) if _stratum_match(c, stratum)
    )


def symmetry_census(n: int, k: int, budget: float | None = None,
                    max_n: int = DEFAULT_MAX_N):
    """Histogram of automorphism-group orders over leaf-labeled classes.

    Returns dict mapping stratum -> Counter {aut_order: class count}; the
    "networks" entry counts vertex-labeled networks instead of classes
    (each class contributes binom(n,l)(n-l)!/|Aut| networks).
    """
    prof_l = None
    for kk in [k]:
        prof = degree_profile(n, kk)
        if prof is None:
            return {"no-mult": Counter(), "mult": Counter(), "networks": Counter()}
        _, prof_l = prof
    classes = leaf_classes(prof_l, k, budget, max_n)
    hist = {"no-mult": Counter(), "mult": Counter(), "networks": Counter()}
    per_class = math.factorial(n) // math.factorial(prof_l)
    for c in classes:
        hist["mult" if c.r else "no-mult"][c.aut_order] += 1
        hist["networks"][c.aut_order] += per_class // c.aut_order
    return hist


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------

def write_edge_lists(path, n: int, k: int | None = None, budget: float | None = None):
    """Write enumerated networks as line-oriented edge lists.

    Each network: header line "n k r" followed by one "u v" line per edge
    (double edges repeated) and a blank line.
    """
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for net in networks(n, k, budget):
            c = classify(net)
            fh.write(f"{net.n} {c.k} {c.r}\n")
            for (u, v) in net.edges:
                fh.write(f"{u} {v}\n")
            fh.write("\n")
            count += 1
    return count

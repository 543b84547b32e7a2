"""Duplicator strategy machinery for the bijective walk pebble game.

Walls, components and twisted components are computed on the base graph
with respect to pebbled base vertices (pebble-respecting automorphisms fix
whole gadgets, so pebbles are tracked by origin).  The central object is
the tuple bijection f^v_{e1,e2}: entries of a Spoiler walk that do not
originate from the chosen degree-3 vertex v map through a pebble-respecting
map phi that relocates the twist defect onto e1; entries originating from v
get an extra gadget-local correction psi that shifts the defect to an edge
chosen per walk run, so that no two consecutive pebble pairs ever straddle
the defect.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cfi import (
    BaseGraph,
    CfiGraph,
    _norm_edge,
    apply_flip_masks,
    edge_path,
    flip_masks_for_path,
)

TUPLE_BUDGET = 10**7


@dataclass(frozen=True)
class PebblePlacement:
    """The two surviving consecutive pebble pairs, by base-vertex origin."""

    u1: int
    u2: int
    k: int

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("the walk game needs k >= 2")

    @property
    def vertices(self):
        return frozenset((self.u1, self.u2))


@dataclass(frozen=True)
class Component:
    edges: frozenset
    contained: frozenset  # base vertices with all incident edges inside
    twisted: bool

    @property
    def size(self) -> int:
        return len(self.contained)

    @property
    def nontrivial(self) -> bool:
        return self.size > 0


@dataclass
class ComponentStructure:
    components: list
    pebbled: frozenset
    twist: tuple

    @property
    def twisted_component(self) -> Component:
        return next(c for c in self.components if c.twisted)

    def component_of_edge(self, e) -> Component:
        e = _norm_edge(e)
        return next(c for c in self.components if e in c.edges)


def twisted_components(base: BaseGraph, pebbled, twist) -> ComponentStructure:
    """Components of the base graph w.r.t. pebbled vertices.

    Two base edges share a component iff they are linked by a walk whose
    interior vertices are unpebbled; the component reachable that way from
    the twist is exactly the set of edges Duplicator can move the twist to.
    """
    twist = _norm_edge(twist)
    if twist not in base.graph.edges:
        raise ValueError(f"twist {twist} is not a base edge")
    pebbled = frozenset(pebbled)
    parent = {e: e for e in base.edges}

    def find(e):
        while parent[e] != e:
            parent[e] = parent[parent[e]]
            e = parent[e]
        return e

    for v in range(base.n):
        if v in pebbled:
            continue
        inc = base.incident[v]
        for f in inc[1:]:
            parent[find(f)] = find(inc[0])
    groups = {}
    for e in base.edges:
        groups.setdefault(find(e), set()).add(e)
    components = []
    for edges in groups.values():
        contained = frozenset(
            v
            for v in range(base.n)
            if base.degree(v) > 0 and set(base.incident[v]) <= edges
        )
        components.append(
            Component(frozenset(edges), contained, twist in edges)
        )
    components.sort(key=lambda c: min(c.edges))
    return ComponentStructure(components, pebbled, twist)


def is_wall(base: BaseGraph, pebbled) -> bool:
    """True iff the pebbled origins are a separator of the base graph."""
    pebbled = set(pebbled)
    remaining = [v for v in range(base.n) if v not in pebbled]
    if len(remaining) <= 1:
        return False
    seen = {remaining[0]}
    stack = [remaining[0]]
    while stack:
        u = stack.pop()
        for e in base.incident[u]:
            w = e[0] if e[1] == u else e[1]
            if w not in pebbled and w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) < len(remaining)


# ---------------------------------------------------------------------------
# the tuple bijection


@dataclass
class DuplicatorBijection:
    """Pointwise realization of f^v_{e1,e2} on (k-1)-tuples."""

    g_plain: CfiGraph
    g_twisted: CfiGraph
    pebbles: PebblePlacement
    v: int
    e1: tuple
    e2: tuple
    phi: np.ndarray = field(repr=False)          # plain -> twisted, defect {e1}
    psi_by_edge: dict = field(repr=False)        # chosen e -> permutation

    def chosen_edge(self, left_origin: int, right_origin: int) -> tuple:
        """Edge the defect is parked on for a run of origin-v entries
        bounded by the given neighbor origins (case 2 of the construction)."""
        base = self.g_plain.base
        used = []
        for x in (left_origin, right_origin):
            pair = _norm_edge((x, self.v))
            if x != self.v and pair in base.graph.edges:
                used.append(pair)
        if len(used) == 2 and used[0] != used[1]:
            # 2(a): passed through v on two distinct edges; park on the third
            return next(
                e for e in base.incident[self.v] if e not in used
            )
        # 2(b): at most one incident edge used; park on the smallest free
        # one of {e1, e2} in the incident-edge order at v
        free = [e for e in (self.e1, self.e2) if e not in used]
        order = base.incident[self.v]
        return min(free, key=order.index)

    def map_tuple(self, walk):
        return self.map_tuple_with_edges(walk)[0]

    def map_tuple_with_edges(self, walk):
        """Image tuple plus, per position, the edge holding the defect for
        the consecutive pair starting there (positions 0..k-1, anchored)."""
        origin = self.g_plain.vertex_origin
        k = self.pebbles.k
        if len(walk) != k - 1:
            raise ValueError(f"expected a {k - 1}-tuple")
        origins = (
            [self.pebbles.u1] + [origin[x][0] for x in walk] + [self.pebbles.u2]
        )
        image = []
        run_edge = {}  # position (1-based) -> chosen edge for origin-v runs
        i = 1
        while i <= k - 1:
            if origins[i] != self.v:
                image.append(int(self.phi[walk[i - 1]]))
                i += 1
                continue
            j = i
            while j <= k - 1 and origins[j] == self.v:
                j += 1
            e = self.chosen_edge(origins[i - 1], origins[j])
            psi = self.psi_by_edge[e]
            for pos in range(i, j):
                run_edge[pos] = e
                image.append(int(psi[self.phi[walk[pos - 1]]]))
            i = j
        pair_edges = []
        for pos in range(k):  # pair (pos, pos+1)
            if pos in run_edge:
                pair_edges.append(run_edge[pos])
            elif pos + 1 in run_edge:
                pair_edges.append(run_edge[pos + 1])
            else:
                pair_edges.append(self.e1)
        return tuple(image), pair_edges


def duplicator_bijection(
    g_plain: CfiGraph,
    g_twisted: CfiGraph,
    pebbles: PebblePlacement,
    v: int,
    e1,
    e2,
) -> DuplicatorBijection:
    """Build f^v_{e1,e2} for the given pebble placement.

    Requires v to be a degree-3 base vertex contained in the twisted
    component, with e1 != e2 incident to v, and a pebble-respecting map
    parking the defect on e1 (guaranteed by the former, found by routing
    the twist around the pebbled gadgets).
    """
    base = g_plain.base
    if g_twisted.twist is None:
        raise ValueError("the second graph must carry a twist")
    e1, e2 = _norm_edge(e1), _norm_edge(e2)
    if base.degree(v) != 3:
        raise ValueError(f"base vertex {v} must have degree 3")
    if e1 == e2 or v not in e1 or v not in e2:
        raise ValueError("e1, e2 must be distinct edges incident to v")
    comps = twisted_components(base, pebbles.vertices, g_twisted.twist)
    if v not in comps.twisted_component.contained:
        raise ValueError(f"vertex {v} is not in the twisted component")
    path = edge_path(base, g_twisted.twist, e1, forbidden=pebbles.vertices)
    phi = apply_flip_masks(g_plain, flip_masks_for_path(base, path))
    psi_by_edge = {}
    pos_e1 = base.edge_position(v, e1)
    for e in base.incident[v]:
        if e == e1:
            psi_by_edge[e] = np.arange(g_plain.n, dtype=np.int64)
        else:
            mask = [0, 0, 0]
            mask[pos_e1] ^= 1
            mask[base.edge_position(v, e)] ^= 1
            psi_by_edge[e] = apply_flip_masks(g_plain, {v: tuple(mask)})
    return DuplicatorBijection(
        g_plain, g_twisted, pebbles, v, e1, e2, phi, psi_by_edge
    )


# ---------------------------------------------------------------------------
# exhaustive verification


def _anchor_pairs(bij: DuplicatorBijection):
    """All (plain anchor, twisted anchor) gadget-vertex choices for u1/u2."""
    g, phi = bij.g_plain, bij.phi
    firsts = [(x, int(phi[x])) for x in g.gadget(bij.pebbles.u1)]
    lasts = [(x, int(phi[x])) for x in g.gadget(bij.pebbles.u2)]
    return firsts, lasts


def verify_round_safe(
    bij: DuplicatorBijection,
    g_plain: CfiGraph,
    g_twisted: CfiGraph,
    pebbles: PebblePlacement,
    budget: int = TUPLE_BUDGET,
    return_counterexample: bool = False,
) -> bool:
    """Exhaustively check that Spoiler cannot win this round.

    Enumerates every (k-1)-tuple and every anchor gadget-vertex choice and
    checks that each consecutive pebble pair (anchors included) covers
    isomorphic two-vertex subgraphs: equality and adjacency both agree.
    Also confirms injectivity of the tuple map along the way.  With
    ``return_counterexample`` returns (ok, failing tuple or None) instead
    of the bare verdict.
    """
    n, k = g_plain.n, pebbles.k
    firsts, lasts = _anchor_pairs(bij)
    cost = n ** (k - 1)
    if cost > budget:
        raise ValueError(f"{cost} tuples exceed the budget of {budget}")
    a_plain = g_plain.graph.adjacency()
    a_tw = g_twisted.graph.adjacency()
    seen = set()
    import itertools

    def pair_ok(x, y, ix, iy):
        return (x == y) == (ix == iy) and a_plain[x, y] == a_tw[ix, iy]

    def verdict(ok, walk=None):
        return (ok, walk) if return_counterexample else ok

    for walk in itertools.product(range(n), repeat=k - 1):
        image = bij.map_tuple(walk)
        if image in seen:
            return verdict(False, walk)
        seen.add(image)
        for i in range(k - 2):  # interior consecutive pairs
            if not pair_ok(walk[i], walk[i + 1], image[i], image[i + 1]):
                return verdict(False, walk)
        # anchor pairs: must hold for every gadget-vertex pebble choice,
        # and the first/last choices are independent of each other
        if not all(pair_ok(x0, walk[0], y0, image[0]) for x0, y0 in firsts):
            return verdict(False, walk)
        if not all(pair_ok(walk[-1], xk, image[-1], yk) for xk, yk in lasts):
            return verdict(False, walk)
    return verdict(True)


def verify_component_bound(
    bij: DuplicatorBijection, ell: int
) -> bool:
    """Check the post-round twisted-component size bound min{l, 2n-l-2}.

    For every walk (enumerated at origin level, which determines the defect
    edges) and every consecutive pebble pair Spoiler may keep, recompute
    the twisted component for the surviving pebbles and defect location.
    """
    base = bij.g_plain.base
    grid_n = (base.n - 1) // 2
    bound = min(ell, 2 * grid_n - ell - 2)
    k = bij.pebbles.k
    import itertools

    cache = {}
    for origins in itertools.product(range(base.n), repeat=k - 1):
        # one representative gadget vertex per origin reproduces the runs
        walk = tuple(bij.g_plain.gadget(o)[0] for o in origins)
        _, pair_edges = bij.map_tuple_with_edges(walk)
        full = (bij.pebbles.u1, *origins, bij.pebbles.u2)
        for i in range(k):
            key = (full[i], full[i + 1], pair_edges[i])
            if key not in cache:
                comps = twisted_components(
                    base, {full[i], full[i + 1]}, pair_edges[i]
                )
                cache[key] = comps.twisted_component.size
            if cache[key] < bound:
                return False
    return True


# ---------------------------------------------------------------------------
# strategy scenarios


@dataclass(frozen=True)
class Scenario:
    """One strategy situation: pebbles plus Duplicator's (v, e1, e2)."""

    pebbles: PebblePlacement
    v: int
    e1: tuple
    e2: tuple
    ell: int  # smaller-side vertex count of the e2 separator


def _separator_side_sizes(base: BaseGraph, sep, w: int):
    """Vertex counts (|G1|, |G2|) of base minus the separator pair, with
    w on the G1 side."""
    sep = set(sep)
    comp = {}
    for s in range(base.n):
        if s in sep or s in comp:
            continue
        stack, members = [s], {s}
        while stack:
            u = stack.pop()
            for e in base.incident[u]:
                x = e[0] if e[1] == u else e[1]
                if x not in sep and x not in members:
                    members.add(x)
                    stack.append(x)
        for m in members:
            comp[m] = s
    g1 = sum(1 for x, root in comp.items() if root == comp[w])
    return g1, base.n - len(sep) - g1


def strategy_scenario(base: BaseGraph, twist, u1: int, u2: int, k: int) -> Scenario:
    """Duplicator's choice of (v, e1, e2) for a wall at pebbles {u1, u2}."""
    twist = _norm_edge(twist)
    comps = twisted_components(base, {u1, u2}, twist)
    contained = comps.twisted_component.contained
    if base.graph.has_edge(u1, u2):
        v = _neighbor_in(base, u1, contained, degree=3)
        vp = next(
            x
            for x in _neighbors(base, v)
            if x != u1 and base.graph.has_edge(x, u2)
        )
        e1, e2 = _norm_edge((u1, v)), _norm_edge((v, vp))
    else:
        v = next(
            x
            for x in sorted(contained)
            if base.degree(x) == 3
            and base.graph.has_edge(x, u1)
            and base.graph.has_edge(x, u2)
        )
        if not _is_separator_pair(base, (u2, v)):
            u1, u2 = u2, u1
        if not _is_separator_pair(base, (u2, v)):
            raise ValueError("no orientation makes {u2, v} a separator")
        e1, e2 = _norm_edge((u1, v)), _norm_edge((u2, v))
    w = next(x for x in e1 if x != v)
    _, ell = _separator_side_sizes(base, set(e2), w)
    return Scenario(PebblePlacement(u1, u2, k), v, e1, e2, ell)


def wall_adjacent_scenario(base: BaseGraph, twist, column: int, k: int) -> Scenario:
    """Pebbles on a vertical grid pair forming a wall next to the twist."""
    grid_n = (base.n - 1) // 2
    u1, u2 = column, grid_n + column
    return strategy_scenario(base, twist, u1, u2, k)


def wall_nonadjacent_scenario(base: BaseGraph, twist, column: int, k: int) -> Scenario:
    """Pebbles on a diagonal pair whose common neighbor closes the wall."""
    grid_n = (base.n - 1) // 2
    u1, u2 = grid_n + column + 1, column  # (1, c+1) and (0, c)
    return strategy_scenario(base, twist, u1, u2, k)


def opening_scenario(base: BaseGraph, twist, k: int) -> Scenario:
    """Start-of-game choice: pretend pebbles sit on a middle separator edge
    whose sides both keep at least n-2 vertices."""
    grid_n = (base.n - 1) // 2
    column = grid_n // 2
    return wall_adjacent_scenario(base, twist, column, k)


def _neighbors(base: BaseGraph, u: int):
    return [e[0] if e[1] == u else e[1] for e in base.incident[u]]


def _neighbor_in(base: BaseGraph, u: int, allowed, degree=None) -> int:
    for x in sorted(_neighbors(base, u)):
        if x in allowed and (degree is None or base.degree(x) == degree):
            return x
    raise ValueError(f"no suitable neighbor of {u} in the twisted component")


def _is_separator_pair(base: BaseGraph, pair) -> bool:
    return is_wall(base, set(pair))


__all__ = [
    "TUPLE_BUDGET",
    "PebblePlacement",
    "Component",
    "ComponentStructure",
    "DuplicatorBijection",
    "Scenario",
    "twisted_components",
    "is_wall",
    "duplicator_bijection",
    "verify_round_safe",
    "verify_component_bound",
    "strategy_scenario",
    "wall_adjacent_scenario",
    "wall_nonadjacent_scenario",
    "opening_scenario",
]

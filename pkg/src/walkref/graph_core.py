"""Graphs, colorings of the complete pair universe, and pair partitions."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .interner import ColorInterner, EDGE, LOOP, NONEDGE


@dataclass(frozen=True)
class SimpleGraph:
    """Undirected simple graph on vertices 0..n-1."""

    n: int
    edges: frozenset

    def __post_init__(self):
        for e in self.edges:
            u, v = e
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge {e} out of range for n={self.n}")
            if u == v:
                raise ValueError(f"self-loop {e} not allowed")
            if (v, u) in self.edges and u > v:
                raise ValueError(f"edge {e} duplicates {(v, u)}")
            if u > v:
                raise ValueError(f"edge {e} must be stored as (min, max)")

    @staticmethod
    def from_edges(n: int, edges) -> "SimpleGraph":
        norm = set()
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop ({u},{v}) not allowed")
            key = (min(u, v), max(u, v))
            if key in norm:
                raise ValueError(f"duplicate edge {key}")
            norm.add(key)
        return SimpleGraph(n, frozenset(norm))

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.int64)
        for u, v in self.edges:
            a[u, v] = 1
            a[v, u] = 1
        return a

    def neighbors(self, u: int):
        return sorted(v for v in range(self.n) if self.has_edge(u, v))

    def relabel(self, perm) -> "SimpleGraph":
        """Apply a vertex permutation (perm[v] = new label of v)."""
        return SimpleGraph.from_edges(
            self.n, [(perm[u], perm[v]) for u, v in self.edges]
        )

    def to_json_dict(self) -> dict:
        return {"n": self.n, "edges": sorted(map(list, self.edges))}


def load_graph_json(text_or_dict) -> SimpleGraph:
    """Parse the {"n": int, "edges": [[u,v], ...]} wire format."""
    obj = text_or_dict
    if isinstance(obj, (str, bytes)):
        obj = json.loads(obj)
    if not isinstance(obj, dict) or "n" not in obj or "edges" not in obj:
        raise ValueError("graph JSON must be an object with 'n' and 'edges'")
    n = obj["n"]
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"invalid vertex count {n!r}")
    return SimpleGraph.from_edges(n, [tuple(e) for e in obj["edges"]])


@dataclass
class ColoredCompleteGraph:
    """Complete directed graph with an n x n table of interned color ids."""

    n: int
    color: np.ndarray
    converse_equivalent: bool = True

    def __post_init__(self):
        self.color = np.asarray(self.color, dtype=np.int64)
        if self.color.shape != (self.n, self.n):
            raise ValueError("color table shape mismatch")

    def copy(self) -> "ColoredCompleteGraph":
        return ColoredCompleteGraph(self.n, self.color.copy(), self.converse_equivalent)


def initial_coloring(g: SimpleGraph) -> ColoredCompleteGraph:
    """Three-color table: loops, edges, and non-adjacent distinct pairs."""
    table = np.full((g.n, g.n), NONEDGE, dtype=np.int64)
    np.fill_diagonal(table, LOOP)
    for u, v in g.edges:
        table[u, v] = EDGE
        table[v, u] = EDGE
    return ColoredCompleteGraph(g.n, table, converse_equivalent=True)


@dataclass
class InvariantReport:
    loop_disjoint: bool
    converse_equivalent: bool
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.loop_disjoint and self.converse_equivalent


def check_invariants(c: ColoredCompleteGraph) -> InvariantReport:
    """Exhaustively verify loop/non-loop color disjointness and converse
    equivalence (the stored flag is not trusted)."""
    n = c.n
    loop_colors = set(np.diag(c.color).tolist())
    off = c.color[~np.eye(n, dtype=bool)]
    offdiag_colors = set(off.tolist()) if n > 1 else set()
    violations = []
    bad = loop_colors & offdiag_colors
    loop_disjoint = not bad
    if bad:
        violations.append(("loop_color_reused_offdiagonal", sorted(bad)))

    # converse equivalence: color(u,v) must determine color(v,u)
    forward = c.color.ravel()
    backward = c.color.T.ravel()
    conv = {}
    converse_ok = True
    for f, b in zip(forward.tolist(), backward.tolist()):
        prev = conv.setdefault(f, b)
        if prev != b:
            converse_ok = False
            violations.append(("converse_violation", f, prev, b))
            break
    return InvariantReport(loop_disjoint, converse_ok, violations)


class PartitionOrder(Enum):
    EQUAL = "equal"
    FINER = "finer"
    COARSER = "coarser"
    INCOMPARABLE = "incomparable"


class PairPartition:
    """Canonical partition of the pair universe of one or two graphs.

    The universe is the concatenation, graph by graph, of all ordered pairs
    (u, v) in row-major order.  Class ids are renumbered by first occurrence
    in that order, so two PairPartition objects over the same universe are
    equal iff their labels arrays match elementwise.
    """

    def __init__(self, sizes, labels):
        self.sizes = tuple(sizes)
        flat = np.asarray(labels, dtype=np.int64).ravel()
        if flat.shape[0] != sum(s * s for s in self.sizes):
            raise ValueError("label array does not match universe size")
        self.labels = _canonicalize(flat)
        self.num_classes = int(self.labels.max()) + 1 if flat.size else 0

    @staticmethod
    def from_colorings(graphs) -> "PairPartition":
        sizes = [g.n for g in graphs]
        flat = np.concatenate([g.color.ravel() for g in graphs])
        return PairPartition(sizes, flat)

    def block(self, tag: int) -> np.ndarray:
        """Class ids of graph ``tag`` as an n x n array."""
        start = sum(s * s for s in self.sizes[:tag])
        n = self.sizes[tag]
        return self.labels[start : start + n * n].reshape(n, n)

    def class_of(self, tag: int, u: int, v: int) -> int:
        return int(self.block(tag)[u, v])

    def color_multiset(self, tag: int):
        """Sorted (class, count) pairs for one graph's block."""
        ids, counts = np.unique(self.block(tag), return_counts=True)
        return list(zip(ids.tolist(), counts.tolist()))

    def __eq__(self, other):
        return (
            isinstance(other, PairPartition)
            and self.sizes == other.sizes
            and np.array_equal(self.labels, other.labels)
        )

    def __hash__(self):
        return hash((self.sizes, self.labels.tobytes()))

    def __repr__(self):
        return f"PairPartition(sizes={self.sizes}, classes={self.num_classes})"


def _canonicalize(flat: np.ndarray) -> np.ndarray:
    """Renumber labels by first occurrence."""
    _, first_idx, inverse = np.unique(flat, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first_idx))
    return order[inverse].astype(np.int64)


def partition_of(c: ColoredCompleteGraph) -> PairPartition:
    return PairPartition.from_colorings([c])


def compare_partitions(p: PairPartition, q: PairPartition) -> PartitionOrder:
    """Lattice comparison of two partitions of the same universe."""
    if p.sizes != q.sizes:
        raise ValueError(f"universe mismatch: {p.sizes} vs {q.sizes}")
    if np.array_equal(p.labels, q.labels):
        return PartitionOrder.EQUAL
    p_refines_q = _refines(p.labels, q.labels)
    q_refines_p = _refines(q.labels, p.labels)
    if p_refines_q:
        return PartitionOrder.FINER
    if q_refines_p:
        return PartitionOrder.COARSER
    return PartitionOrder.INCOMPARABLE


def _refines(a: np.ndarray, b: np.ndarray) -> bool:
    """True iff each a-class is contained in a single b-class."""
    combined = a * (int(b.max()) + 1 if b.size else 1) + b
    return np.unique(combined).size == np.unique(a).size


__all__ = [
    "SimpleGraph",
    "ColoredCompleteGraph",
    "ColorInterner",
    "PairPartition",
    "PartitionOrder",
    "InvariantReport",
    "initial_coloring",
    "partition_of",
    "compare_partitions",
    "check_invariants",
    "load_graph_json",
]

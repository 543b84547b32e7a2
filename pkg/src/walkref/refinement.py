"""Iterated pair refinements: 2-walk (Weisfeiler-Leman), k-walk, and walk.

All three refinements act on a ``Workspace`` of one or two colored complete
graphs sharing a color interner, so that class ids stay comparable across
the joint universe.  The k-walk partition of a coloring equals the
coordinate-equality partition of the span of products of its color
adjacency matrices with at most k factors (stationary walks on loop colors
embed every shorter length), which gives an exact linear-algebra route in
addition to the naive walk-enumeration oracle; the walk refinement is the
k -> infinity limit, realized by closing the span completely.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    PRIME_1,
    PRIME_2,
    AlgebraCrossCheckError,
    MatrixSpanBasis,
    PrimeField,
    RationalDomain,
    block_color_table,
    color_matrices,
    grow_products,
    partition_from_span,
    sampled_span_profile,
)
from .graph_core import ColoredCompleteGraph, PairPartition, initial_coloring
from .interner import ColorInterner

NAIVE_WALK_BUDGET = 10**7
EXACT_METHOD_MAX_VERTICES = 40  # auto switches to sampling above this
ARITH_MODES = ("prime", "prime2", "rational")


@dataclass(frozen=True)
class RefinementKind:
    """One of the three refinement operators."""

    name: str  # "wl" | "kwalk" | "walk"
    k: int | None = None

    def __post_init__(self):
        if self.name not in ("wl", "kwalk", "walk"):
            raise ValueError(f"unknown refinement kind {self.name!r}")
        if self.name == "kwalk":
            if self.k is None or self.k < 2:
                raise ValueError("k-walk refinement requires k >= 2")
        elif self.k is not None:
            raise ValueError(f"{self.name} refinement takes no k")

    @staticmethod
    def wl() -> "RefinementKind":
        return RefinementKind("wl")

    @staticmethod
    def kwalk(k: int) -> "RefinementKind":
        return RefinementKind("kwalk", k)

    @staticmethod
    def walk() -> "RefinementKind":
        return RefinementKind("walk")

    def __str__(self):
        return f"kwalk[{self.k}]" if self.name == "kwalk" else self.name


@dataclass
class Workspace:
    """One or two colorings under joint refinement, sharing an interner."""

    colorings: list
    interner: ColorInterner = field(default_factory=ColorInterner)

    def __post_init__(self):
        if not 1 <= len(self.colorings) <= 2:
            raise ValueError("workspace holds one or two colorings")

    @staticmethod
    def from_graphs(graphs) -> "Workspace":
        if not isinstance(graphs, (list, tuple)):
            graphs = [graphs]
        return Workspace([initial_coloring(g) for g in graphs])

    @property
    def sizes(self):
        return tuple(c.n for c in self.colorings)

    @property
    def total_vertices(self) -> int:
        return sum(self.sizes)

    def partition(self) -> PairPartition:
        return PairPartition.from_colorings(self.colorings)

    def universe_coords(self) -> np.ndarray:
        """Flat indices of the in-block coordinates of the joint matrix."""
        n_tot = self.total_vertices
        out, off = [], 0
        for n in self.sizes:
            rows = (off + np.arange(n))[:, None] * n_tot + (off + np.arange(n))
            out.append(rows.ravel())
            off += n
        return np.concatenate(out)


@dataclass
class WalkRecord:
    """Per-iteration walk-count bookkeeping used by formula synthesis.

    ``class_multisets[c]`` maps each k-step color sequence (a tuple of
    previous-iteration color ids) to its walk count, for any pair of the
    new class ``c``; ``prev_tables``/``new_tables`` are the color tables
    before and after the iteration.
    """

    k: int
    prev_tables: list
    new_tables: list
    class_multisets: dict


@dataclass
class RefinementHistory:
    kind: RefinementKind
    partitions: list               # partitions[i] after i iterations
    dims: list | None = None       # induced-algebra rank per iteration
    walk_records: list | None = None
    distinguished_at: int | None = None

    @property
    def iterations(self) -> int:
        return len(self.partitions) - 1

    @property
    def classes_per_iteration(self):
        return [p.num_classes for p in self.partitions]

    @property
    def stable_partition(self) -> PairPartition:
        return self.partitions[-1]

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind.name,
            "k": self.kind.k,
            "iterations": self.iterations,
            "classes_per_iteration": self.classes_per_iteration,
            "distinguished_at": self.distinguished_at,
        }


# ---------------------------------------------------------------------------
# single steps


def wl_step(ws: Workspace) -> None:
    """One 2-dim Weisfeiler-Leman step: recolor each pair (u, v) by the
    multiset over w of color pairs (chi(u, w), chi(w, v))."""
    shift = int(max(c.color.max() for c in ws.colorings)) + 1
    rows = []
    for c in ws.colorings:
        s = c.color[:, None, :] * shift + c.color.T[None, :, :]
        s.sort(axis=2)
        rows.append(s.reshape(c.n * c.n, c.n))
    labels = _joint_row_labels(rows)
    _install_labels(ws, labels)


def k_walk_step(ws: Workspace, k: int, method: str = "auto", seed: int = 0,
                arith: str = "prime2") -> None:
    """One k-walk step: recolor each pair by the multiset of color
    sequences of all k-step walks between its endpoints."""
    if k < 2:
        raise ValueError("k-walk refinement requires k >= 2")
    labels, _ = _span_labels(ws, max_length=k, method=method, seed=seed,
                             arith=arith)
    _install_labels(ws, labels)


def walk_step(ws: Workspace, method: str = "auto", seed: int = 0,
              want_dim: bool = False, arith: str = "prime2"):
    """One walk-refinement step: the finest k-walk step (k = n^2 always
    suffices).  Returns the induced-algebra dimension if requested."""
    n_tot = ws.total_vertices
    labels, dim = _span_labels(
        ws,
        max_length=n_tot * n_tot,
        method=method,
        seed=seed,
        want_dim=want_dim,
        early_stop=True,
        arith=arith,
    )
    _install_labels(ws, labels)
    return dim


def naive_k_walk_step(ws: Workspace, k: int, budget: int = NAIVE_WALK_BUDGET):
    """Oracle k-walk step by brute-force walk enumeration.

    Returns a WalkRecord of the walk-count multisets.  Refuses to touch
    more than ``budget`` walk steps in total.
    """
    if k < 2:
        raise ValueError("k-walk refinement requires k >= 2")
    cost = sum(c.n ** (k + 1) for c in ws.colorings) * k
    if cost > budget:
        raise ValueError(f"naive enumeration needs {cost} steps > budget {budget}")
    prev_tables = [c.color.copy() for c in ws.colorings]
    per_pair = []  # aligned with universe order: dict seq -> count
    for c in ws.colorings:
        table = c.color
        n = c.n
        for u in range(n):
            for v in range(n):
                counts = {}
                for mids in itertools.product(range(n), repeat=k - 1):
                    walk = (u, *mids, v)
                    seq = tuple(
                        int(table[walk[i], walk[i + 1]]) for i in range(k)
                    )
                    counts[seq] = counts.get(seq, 0) + 1
                per_pair.append(counts)
    sigs = [tuple(sorted(d.items())) for d in per_pair]
    seen = {}
    labels = np.array([seen.setdefault(s, len(seen)) for s in sigs], dtype=np.int64)
    labels = _install_labels(ws, labels)
    class_multisets = {}
    for lab, counts in zip(labels.tolist(), per_pair):
        class_multisets.setdefault(lab, counts)
    return WalkRecord(
        k=k,
        prev_tables=prev_tables,
        new_tables=[c.color.copy() for c in ws.colorings],
        class_multisets=class_multisets,
    )


def _span_labels(ws, *, max_length, method, seed, want_dim=False,
                 early_stop=False, arith="prime2"):
    if arith not in ARITH_MODES:
        raise ValueError(f"unknown arithmetic mode {arith!r}")
    if arith == "rational":
        if method == "sampled" or (
            method == "auto" and ws.total_vertices > EXACT_METHOD_MAX_VERTICES
        ):
            raise ValueError(
                "rational arithmetic requires the exact method "
                f"(<= {EXACT_METHOD_MAX_VERTICES} total vertices)"
            )
        method = "exact"
    if method == "auto":
        method = "exact" if ws.total_vertices <= EXACT_METHOD_MAX_VERTICES else "sampled"
    coords = ws.universe_coords()
    if method == "exact":
        domain = RationalDomain() if arith == "rational" else PrimeField(PRIME_1)
        gens = color_matrices(ws.colorings)
        basis = MatrixSpanBasis(gens.n, domain)
        basis, _ = grow_products(basis, gens, max_length)
        if want_dim and arith == "prime2":
            check = MatrixSpanBasis(gens.n, PrimeField(PRIME_2))
            check, _ = grow_products(check, gens, max_length)
            if check.rank != basis.rank:
                raise AlgebraCrossCheckError(
                    f"exact ranks disagree across primes: "
                    f"{basis.rank} vs {check.rank}"
                )
        return partition_from_span(basis, coords), basis.rank
    if method != "sampled":
        raise ValueError(f"unknown method {method!r}")
    prof = sampled_span_profile(
        block_color_table(ws.colorings),
        coords=coords,
        max_length=max_length,
        seed=seed,
        primes=(PRIME_1,) if arith == "prime" else (PRIME_1, PRIME_2),
        want_rank=want_dim,
        # without the rank's dimension-freeze certificate, stop only after
        # a generous window of unchanged coordinate signatures
        stop_window=(8 if want_dim else 24) if early_stop else max_length + 1,
        base_samples=16 if want_dim else 3,
    )
    return prof.labels, prof.rank


def _joint_row_labels(rows_per_graph):
    """Labels for per-pair signature rows, shared across equal-width groups."""
    labels = [None] * len(rows_per_graph)
    offset = 0
    widths = sorted({r.shape[1] for r in rows_per_graph})
    for w in widths:
        tags = [t for t, r in enumerate(rows_per_graph) if r.shape[1] == w]
        stacked = np.vstack([rows_per_graph[t] for t in tags])
        _, inverse = np.unique(stacked, axis=0, return_inverse=True)
        inverse = inverse + offset
        offset = int(inverse.max()) + 1
        pos = 0
        for t in tags:
            m = rows_per_graph[t].shape[0]
            labels[t] = inverse[pos : pos + m]
            pos += m
    return np.concatenate([labels[t] for t in range(len(rows_per_graph))])


def _install_labels(ws: Workspace, labels: np.ndarray) -> np.ndarray:
    """Mint fresh interned class colors for canonical labels and write the
    new color tables.  Returns the canonical labels."""
    flat = PairPartition(ws.sizes, labels).labels
    base = ws.interner.fresh_class_block(int(flat.max()) + 1)
    off = 0
    for c in ws.colorings:
        c.color = (flat[off : off + c.n * c.n] + base).reshape(c.n, c.n)
        off += c.n * c.n
    return flat


# ---------------------------------------------------------------------------
# iteration drivers


def stabilize(
    ws: Workspace,
    kind: RefinementKind,
    *,
    max_iterations: int | None = None,
    method: str = "auto",
    seed: int = 0,
    arith: str = "prime2",
    record_dims: bool = False,
    record_walk_multisets: bool = False,
) -> RefinementHistory:
    """Iterate one refinement kind until the partition stops changing."""
    if record_walk_multisets and kind.name != "kwalk":
        raise ValueError("walk multiset recording needs an explicit k")
    if max_iterations is None:
        max_iterations = ws.total_vertices ** 2 + 1
    partitions = [ws.partition()]
    dims = [] if record_dims else None
    walk_records = [] if record_walk_multisets else None
    for it in range(1, max_iterations + 1):
        # dims[i-1] is the induced-algebra dimension of the coloring
        # *entering* iteration i
        if kind.name == "wl":
            if record_dims:
                dims.append(
                    _algebra_dim(ws, method, _iter_seed(seed, it) + 1, arith)
                )
            wl_step(ws)
        elif kind.name == "kwalk":
            if record_dims:
                dims.append(
                    _algebra_dim(ws, method, _iter_seed(seed, it) + 1, arith)
                )
            if record_walk_multisets:
                walk_records.append(naive_k_walk_step(ws, kind.k))
            else:
                k_walk_step(ws, kind.k, method=method,
                            seed=_iter_seed(seed, it), arith=arith)
        else:
            dim = walk_step(
                ws, method=method, seed=_iter_seed(seed, it),
                want_dim=record_dims, arith=arith,
            )
            if record_dims:
                dims.append(dim)
        part = ws.partition()
        partitions.append(part)
        if part == partitions[-2]:
            break
    return RefinementHistory(
        kind=kind,
        partitions=partitions,
        dims=dims,
        walk_records=walk_records,
        distinguished_at=_distinguished_at(partitions, ws.sizes),
    )


def _algebra_dim(ws, method, seed, arith="prime2"):
    _, dim = _span_labels(
        ws,
        max_length=ws.total_vertices ** 2,
        method=method,
        seed=seed,
        want_dim=True,
        early_stop=True,
        arith=arith,
    )
    return dim


def _iter_seed(seed: int, iteration: int) -> int:
    return seed * 1_000_003 + iteration * 97


def _distinguished_at(partitions, sizes):
    if len(sizes) != 2:
        return None
    for i, p in enumerate(partitions):
        if p.color_multiset(0) != p.color_multiset(1):
            return i
    return None


def iterations_to_distinguish(
    g1,
    g2,
    kind: RefinementKind,
    *,
    max_iterations: int | None = None,
    method: str = "auto",
    seed: int = 0,
    arith: str = "prime2",
) -> int | None:
    """Iterations of joint refinement until the two graphs get different
    color multisets; 0 if they differ before refining, None if never."""
    if g1.n != g2.n:
        return 0
    ws = Workspace.from_graphs([g1, g2])
    hist = stabilize(
        ws, kind, max_iterations=max_iterations, method=method, seed=seed,
        arith=arith,
    )
    return hist.distinguished_at


__all__ = [
    "NAIVE_WALK_BUDGET",
    "ARITH_MODES",
    "RefinementKind",
    "Workspace",
    "WalkRecord",
    "RefinementHistory",
    "wl_step",
    "k_walk_step",
    "walk_step",
    "naive_k_walk_step",
    "stabilize",
    "iterations_to_distinguish",
]

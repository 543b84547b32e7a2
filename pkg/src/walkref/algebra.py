"""Exact linear algebra on vectorized n x n matrices.

Two engines live here:

* an exact, deterministic echelon-basis closure (``MatrixSpanBasis`` /
  ``grow_products``) over a prime field or the rationals, used as the
  ground-truth route at desk scale, and
* a seeded randomized closure (``sampled_span_profile``) that profiles the
  span of all products of the color adjacency matrices through random
  products evaluated modulo two independent primes.  Equal walk counts give
  equal sample entries unconditionally, so the sampled partition can only
  err by merging (probability ~ p^-6 per coordinate pair); ranks are
  computed per prime and must agree.

Primes default to ~2^22 so that every inner product fits exactly in float64
BLAS with 512-row chunking (p^2 * 512 < 2^53).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

PRIME_1 = 4194301
PRIME_2 = 4194287
_CHUNK = 512  # rows per exact float64 accumulation chunk

_HASH_MULT = np.uint64(0x9E3779B97F4A7C15)
_HASH_OFFS = np.uint64(0x2545F4914F6CDD1D)


class AlgebraCrossCheckError(RuntimeError):
    """Raised when the two prime-field runs disagree."""


# ---------------------------------------------------------------------------
# arithmetic domains


class PrimeField:
    def __init__(self, p: int = PRIME_1):
        if p < 2:
            raise ValueError("p must be a prime >= 2")
        if p * p * _CHUNK >= 2**53:
            raise ValueError(f"p={p} too large for exact float64 accumulation")
        self.p = p

    def vec(self, v: np.ndarray) -> np.ndarray:
        return np.mod(np.asarray(v, dtype=np.int64), self.p)

    def is_zero(self, v: np.ndarray) -> bool:
        return not v.any()

    def first_nonzero(self, v: np.ndarray) -> int:
        return int(np.nonzero(v)[0][0])

    def normalize(self, v: np.ndarray, pivot: int) -> np.ndarray:
        inv = pow(int(v[pivot]), -1, self.p)
        return (v * inv) % self.p

    def reduce(self, v, rows, pivots):
        """Fully reduce v against an RREF row list (any order is valid)."""
        v = v.copy()
        for start in range(0, len(rows), _CHUNK):
            chunk = rows[start : start + _CHUNK]
            coeffs = v[pivots[start : start + _CHUNK]]
            if coeffs.any():
                v = (v - coeffs @ np.asarray(chunk)) % self.p
        return v

    def eliminate(self, rows, new_row, pivot):
        """Clear the new pivot column from existing RREF rows, in place."""
        for i, r in enumerate(rows):
            c = r[pivot]
            if c:
                rows[i] = (r - c * new_row) % self.p

    def __repr__(self):
        return f"PrimeField({self.p})"


class RationalDomain:
    """Exact rationals via Fraction object arrays.  Desk scale only."""

    def vec(self, v: np.ndarray) -> np.ndarray:
        return np.array([Fraction(int(x)) for x in np.asarray(v).ravel()], dtype=object)

    def is_zero(self, v) -> bool:
        return all(x == 0 for x in v)

    def first_nonzero(self, v) -> int:
        for i, x in enumerate(v):
            if x != 0:
                return i
        raise ValueError("zero vector")

    def normalize(self, v, pivot):
        return v / v[pivot]

    def reduce(self, v, rows, pivots):
        v = v.copy()
        for r, piv in zip(rows, pivots):
            c = v[piv]
            if c != 0:
                v = v - c * r
        return v

    def eliminate(self, rows, new_row, pivot):
        for i, r in enumerate(rows):
            c = r[pivot]
            if c != 0:
                rows[i] = r - c * new_row

    def __repr__(self):
        return "RationalDomain()"


# ---------------------------------------------------------------------------
# exact span basis


class MatrixSpanBasis:
    """Reduced-echelon basis of vectorized n x n matrices.

    Vectorization is row-major; pivots are first nonzero coordinates and
    strictly increase along insertion history only in the sense of RREF
    (each row's pivot column is zero in every other row).
    """

    def __init__(self, n: int, domain=None):
        self.n = n
        self.domain = domain if domain is not None else PrimeField()
        self._prime = isinstance(self.domain, PrimeField)
        if self._prime:
            self._mat = np.zeros((16, n * n), dtype=np.int64)
            self._piv = np.zeros(16, dtype=np.int64)
            self._rank = 0
        else:
            self.rows = []
            self.pivots = []

    @property
    def rank(self) -> int:
        return self._rank if self._prime else len(self.rows)

    def insert_matrix(self, m: np.ndarray) -> bool:
        return self.insert(np.asarray(m).ravel())

    def insert(self, vec) -> bool:
        """Insert a vector; returns True iff it increased the rank."""
        if self._prime:
            return self._insert_prime(vec)
        d = self.domain
        v = d.reduce(d.vec(vec), self.rows, self.pivots)
        if d.is_zero(v):
            return False
        piv = d.first_nonzero(v)
        v = d.normalize(v, piv)
        d.eliminate(self.rows, v, piv)
        self.rows.append(v)
        self.pivots.append(piv)
        return True

    def _insert_prime(self, vec) -> bool:
        p = self.domain.p
        r = self._rank
        v = np.mod(np.asarray(vec, dtype=np.int64).ravel(), p)
        for start in range(0, r, _CHUNK):
            stop = min(start + _CHUNK, r)
            coeffs = v[self._piv[start:stop]]
            if coeffs.any():
                v = (v - coeffs @ self._mat[start:stop]) % p
        nz = np.nonzero(v)[0]
        if nz.size == 0:
            return False
        piv = int(nz[0])
        v = (v * pow(int(v[piv]), -1, p)) % p
        col = self._mat[:r, piv]
        hit = np.nonzero(col)[0]
        if hit.size:
            self._mat[hit] = (self._mat[hit] - np.outer(col[hit], v)) % p
        if r == self._mat.shape[0]:
            self._mat = np.vstack([self._mat, np.zeros_like(self._mat)])
            self._piv = np.append(self._piv, np.zeros_like(self._piv))
        self._mat[r] = v
        self._piv[r] = piv
        self._rank = r + 1
        return True

    def row_vectors(self):
        """Basis rows as a 2-D array (prime field) or list (rationals)."""
        if self._prime:
            return self._mat[: self._rank]
        return self.rows

    def row_matrices(self):
        return [np.asarray(r).reshape(self.n, self.n) for r in self.row_vectors()]

    def signature_columns(self, coords=None):
        """Per-coordinate entry tuples across all basis rows."""
        stacked = np.array(list(self.row_vectors()), dtype=object)
        if coords is not None:
            stacked = stacked[:, coords]
        return stacked


# ---------------------------------------------------------------------------
# color adjacency matrices


@dataclass
class ColorMatrices:
    """0/1 adjacency matrix per color id present in a coloring.

    For a joint pair of graphs the matrices are block diagonal with zero
    off-diagonal blocks, and the partition-of-unity invariant holds within
    each diagonal block.
    """

    n: int
    colors: list
    mats: list = field(repr=False)

    def __iter__(self):
        return iter(self.mats)


def block_color_table(colorings) -> np.ndarray:
    """Block-diagonal color table; off-block entries are -1 (no color)."""
    n_tot = sum(c.n for c in colorings)
    table = np.full((n_tot, n_tot), -1, dtype=np.int64)
    off = 0
    for c in colorings:
        table[off : off + c.n, off : off + c.n] = c.color
        off += c.n
    return table


def color_matrices(colorings) -> ColorMatrices:
    """Color adjacency matrices of one coloring or a joint pair."""
    if not isinstance(colorings, (list, tuple)):
        colorings = [colorings]
    table = block_color_table(colorings)
    colors = sorted(set(table.ravel().tolist()) - {-1})
    mats = [(table == c).astype(np.int64) for c in colors]
    return ColorMatrices(table.shape[0], colors, mats)


def span_basis_from(generators: ColorMatrices, domain=None) -> MatrixSpanBasis:
    basis = MatrixSpanBasis(generators.n, domain)
    for m in generators:
        basis.insert_matrix(m)
    return basis


def grow_products(basis: MatrixSpanBasis, generators: ColorMatrices, max_length: int):
    """Grow the basis by right-multiplication with the generators.

    After processing length j the basis spans all products of length <= j.
    Returns (basis, stabilized_at): the first length whose increment added
    no rank, or max_length + 1 if growth never stalled.
    """
    if basis.rank == 0:
        frontier = []
        for m in generators:
            if basis.insert_matrix(m):
                frontier.append(np.asarray(m, dtype=np.int64))
    else:
        frontier = basis.row_matrices()

    stabilized_at = max_length + 1
    for length in range(2, max_length + 1):
        new_frontier = []
        for m in frontier:
            for g in generators:
                prod = _mat_product(m, g, basis.domain)
                if basis.insert_matrix(prod):
                    new_frontier.append(prod)
        if not new_frontier:
            stabilized_at = length
            break
        frontier = new_frontier
    return basis, stabilized_at


def _mat_product(m, g, domain):
    if isinstance(domain, PrimeField):
        # g is 0/1, entries of m are < p, so sums stay below n * p < 2^63
        return (np.asarray(m, dtype=np.int64) @ np.asarray(g, dtype=np.int64)) % domain.p
    n = int(np.sqrt(np.asarray(m).size)) if np.asarray(m).ndim == 1 else m.shape[0]
    mm = np.asarray(m, dtype=object).reshape(n, n)
    return mm @ np.asarray(g, dtype=object)


def partition_from_span(basis: MatrixSpanBasis, coords=None) -> np.ndarray:
    """Coordinate-equality partition of the span: labels per coordinate.

    Two coordinates share a class iff every basis row has equal entries at
    both.  Labels are canonical by first occurrence in coordinate order.
    """
    if basis.rank == 0:
        raise ValueError("empty basis has no coordinate partition")
    if isinstance(basis.domain, PrimeField):
        stacked = basis.row_vectors()
        if coords is not None:
            stacked = stacked[:, coords]
        return _labels_from_columns(stacked)
    cols = basis.signature_columns(coords)
    seen = {}
    labels = np.empty(cols.shape[1], dtype=np.int64)
    for j in range(cols.shape[1]):
        key = tuple(cols[:, j])
        labels[j] = seen.setdefault(key, len(seen))
    return labels


def _labels_from_columns(stacked: np.ndarray) -> np.ndarray:
    """Canonical first-occurrence labels for the columns of a 2-D array."""
    cols = np.ascontiguousarray(stacked.T)
    _, first_idx, inverse = np.unique(
        cols.view([("", cols.dtype)] * cols.shape[1]).ravel(),
        return_index=True,
        return_inverse=True,
    )
    order = np.argsort(np.argsort(first_idx))
    return order[inverse].astype(np.int64)


def algebra_dimension(coloring, domain=None, max_length=None) -> int:
    """Rank of the fully closed product span of one coloring's matrices."""
    gens = color_matrices(coloring)
    if max_length is None:
        max_length = gens.n * gens.n
    basis = MatrixSpanBasis(gens.n, domain)
    basis, _ = grow_products(basis, gens, max_length)
    return basis.rank


# ---------------------------------------------------------------------------
# randomized sampled closure


@dataclass
class SpanProfile:
    """Result of profiling the product span by random sampling."""

    labels: np.ndarray          # canonical class labels over requested coords
    num_classes: int
    rank: int | None            # agreed rank across primes (None if not asked)
    stabilized_length: int      # last length that still changed something
    lengths_used: int


def sampled_span_profile(
    color_table: np.ndarray,
    *,
    coords: np.ndarray,
    max_length: int,
    seed: int,
    primes=(PRIME_1, PRIME_2),
    want_rank: bool = False,
    base_samples: int = 3,
    max_samples: int = 64,
    stop_window: int = 8,
) -> SpanProfile:
    """Profile the span of products of the color adjacency matrices.

    ``color_table`` is the (possibly block-diagonal joint) table with -1 for
    coordinates outside the universe; ``coords`` are the flat indices whose
    partition is wanted.  Each length multiplies every running chain by a
    fresh random linear combination of the generators, so chain entries are
    random linear functionals of the exact-length walk counts.  Growth stops
    once neither the per-coordinate signatures nor (if tracked) the rank
    changed for ``stop_window`` consecutive lengths, which the dimension
    argument makes safe: equal consecutive span dimensions freeze the span.
    """
    table = np.asarray(color_table, dtype=np.int64)
    n_tot = table.shape[0]
    mask = table >= 0
    local = np.zeros_like(table)
    uniq = np.unique(table[mask])
    local[mask] = np.searchsorted(uniq, table[mask])
    num_colors = uniq.size
    maskf = mask.astype(np.float64)

    flat_coords = np.asarray(coords, dtype=np.int64)
    hashes = [np.full(flat_coords.size, _HASH_OFFS, dtype=np.uint64) for _ in primes]
    ranks = [_SampledRank(p) if want_rank else None for p in primes]
    rngs = [np.random.default_rng((seed, p)) for p in primes]

    def fresh_factors(i: int, count: int) -> np.ndarray:
        """Stack of ``count`` random generator combinations, shape (s, n, n)."""
        r = rngs[i].integers(1, primes[i], size=(count, num_colors))
        return r[:, local] * maskf

    num_chains = base_samples
    chains = [fresh_factors(i, num_chains) for i in range(len(primes))]

    stable_for = 0
    stabilized_length = 1
    length = 0
    prev_count = -1
    while length < max_length:
        length += 1
        changed = False
        saturated = want_rank
        for i, p in enumerate(primes):
            if length > 1:
                chains[i] = _matmul_mod(chains[i], fresh_factors(i, num_chains), p, n_tot)
            samples = chains[i].reshape(num_chains, n_tot * n_tot)
            picked = samples[:, flat_coords].astype(np.uint64)
            for row in picked:
                hashes[i] = hashes[i] * _HASH_MULT + row
            if ranks[i] is not None:
                added = ranks[i].insert_batch(samples)
                changed |= added > 0
                saturated &= added == num_chains
        sig = np.stack(hashes, axis=1)
        count = np.unique(sig.view([("", np.uint64)] * sig.shape[1]).ravel()).size
        # signature partition can only refine over time; track class count
        if count != prev_count:
            changed = True
        prev_count = count
        if changed:
            stable_for = 0
            stabilized_length = length
            # if every sample added rank this length, sampling is the
            # bottleneck: widen the chain pool to catch up faster
            if saturated and num_chains < max_samples:
                extra = min(max_samples, num_chains * 2) - num_chains
                for i, p in enumerate(primes):
                    derived = _matmul_mod(
                        chains[i][:extra], fresh_factors(i, extra), p, n_tot
                    )
                    chains[i] = np.concatenate([chains[i], derived])
                num_chains += extra
        else:
            stable_for += 1
            if stable_for >= stop_window:
                break

    rank = None
    if want_rank:
        got = [r.rank for r in ranks]
        if len(set(got)) != 1:
            raise AlgebraCrossCheckError(
                f"prime-field ranks disagree: {dict(zip(primes, got))}"
            )
        rank = got[0]

    # combine input colors with the hash signatures so the result is a
    # structural refinement of the input partition, not merely whp
    sig = np.stack(
        [table.ravel()[flat_coords].astype(np.uint64)] + hashes, axis=1
    )
    labels = _labels_from_columns(sig.T)
    return SpanProfile(
        labels=labels,
        num_classes=int(labels.max()) + 1,
        rank=rank,
        stabilized_length=stabilized_length,
        lengths_used=length,
    )


def _matmul_mod(a: np.ndarray, b: np.ndarray, p: int, n: int) -> np.ndarray:
    """Exact (a @ b) mod p in float64 (batched ok); chunks if n p^2 >= 2^53."""
    if n * p * p < 2**53:
        return np.mod(a @ b, p)
    out = np.zeros(np.broadcast_shapes(a.shape[:-1] + b.shape[-1:]), dtype=np.float64)
    for start in range(0, n, _CHUNK):
        out += a[..., :, start : start + _CHUNK] @ b[..., start : start + _CHUNK, :]
        out %= p
    return out


class _SampledRank:
    """Incremental RREF rank tracker over one prime, float64 storage.

    Batched: a whole length's samples are reduced against the basis with
    one BLAS product per 512-row chunk (keeping every accumulation exact in
    float64), then eliminated among themselves and folded back in.
    """

    def __init__(self, p: int):
        self.p = p
        self.basis = None       # (rank, N) float64, RREF, pivot entries 1
        self.pivots = np.empty(0, dtype=np.int64)

    @property
    def rank(self) -> int:
        return 0 if self.basis is None else self.basis.shape[0]

    def insert_batch(self, batch: np.ndarray) -> int:
        """Insert sample rows (s, N); returns how many increased the rank."""
        p = self.p
        v = np.mod(np.atleast_2d(batch).astype(np.float64), p)
        if self.basis is not None:
            for start in range(0, self.basis.shape[0], _CHUNK):
                blk = self.basis[start : start + _CHUNK]
                coeffs = v[:, self.pivots[start : start + _CHUNK]]
                if coeffs.any():
                    v = np.mod(v - coeffs @ blk, p)
        new_rows, new_pivs = [], []
        for row in v:
            for r, piv in zip(new_rows, new_pivs):
                c = row[piv]
                if c:
                    row = np.mod(row - c * r, p)
            nz = np.nonzero(row)[0]
            if nz.size == 0:
                continue
            piv = int(nz[0])
            row = np.mod(row * pow(int(row[piv]), -1, p), p)
            for j, r in enumerate(new_rows):
                c = r[piv]
                if c:
                    new_rows[j] = np.mod(r - c * row, p)
            new_rows.append(row)
            new_pivs.append(piv)
        if not new_rows:
            return 0
        vn = np.array(new_rows)
        pv = np.array(new_pivs, dtype=np.int64)
        if self.basis is None:
            self.basis = vn
            self.pivots = pv
        else:
            coeffs = self.basis[:, pv]  # inner dim <= batch size, exact
            if coeffs.any():
                self.basis = np.mod(self.basis - coeffs @ vn, p)
            self.basis = np.vstack([self.basis, vn])
            self.pivots = np.concatenate([self.pivots, pv])
        return len(new_rows)


__all__ = [
    "PRIME_1",
    "PRIME_2",
    "PrimeField",
    "RationalDomain",
    "MatrixSpanBasis",
    "ColorMatrices",
    "SpanProfile",
    "AlgebraCrossCheckError",
    "color_matrices",
    "block_color_table",
    "span_basis_from",
    "grow_products",
    "partition_from_span",
    "algebra_dimension",
    "sampled_span_profile",
]

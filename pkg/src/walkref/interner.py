"""Deterministic interning of structured color signatures into dense ids.

Colors are represented everywhere else as dense nonnegative ints.  The
interner owns the bijection between those ints and the structured
signatures they stand for, so that two colorings sharing one interner are
directly comparable (equal id <=> same abstract color history).

Signature encoding (plain hashable tuples):
  ("atom", name)                       -- the three base colors
  ("mset", child, child, ...)          -- children sorted, multiset semantics
  ("seq", child, child, ...)           -- ordered
  ("cls", generation, class_index)     -- opaque fresh color minted for a
                                          partition class (walk refinement
                                          canonicalizes classes, not literal
                                          walk-color multisets)
"""

from __future__ import annotations

LOOP = 0
EDGE = 1
NONEDGE = 2

_ATOMS = (("atom", "loop"), ("atom", "edge"), ("atom", "nonedge"))


class ColorInterner:
    """Bijection between color signatures and dense integer ids.

    The three atoms always occupy ids 0, 1, 2.  Interning is deterministic:
    multiset children must be pre-sorted by the caller (use ``mset``), so the
    same abstract signature always maps to the same id for the same sequence
    of interner operations.
    """

    def __init__(self):
        self._by_sig = {}
        self._by_id = []
        for sig in _ATOMS:
            self.intern(sig)

    def __len__(self):
        return len(self._by_id)

    def intern(self, sig) -> int:
        cid = self._by_sig.get(sig)
        if cid is None:
            cid = len(self._by_id)
            self._by_sig[sig] = cid
            self._by_id.append(sig)
        return cid

    def signature(self, cid: int):
        return self._by_id[cid]

    def mset(self, children) -> int:
        """Intern a multiset of already-interned child ids."""
        return self.intern(("mset",) + tuple(sorted(children)))

    def seq(self, children) -> int:
        """Intern an ordered tuple of already-interned child ids."""
        return self.intern(("seq",) + tuple(children))

    def fresh_class_block(self, num_classes: int) -> int:
        """Mint ``num_classes`` consecutive ids for partition classes.

        Returns the first id of the block; class ``i`` gets id ``base + i``.
        The generation tag makes the block distinct from every earlier one
        while keeping the whole run deterministic.
        """
        generation = len(self._by_id)
        base = self.intern(("cls", generation, 0))
        for i in range(1, num_classes):
            self.intern(("cls", generation, i))
        return base

"""Computably enumerable equivalence relations as monotone pair streams."""
from __future__ import annotations

from typing import Iterable


class CeerBuilder:
    """Reflexive-symmetric-transitive closure of an append-only pair list.

    Reflexivity is implicit: every natural is related to itself without
    being stored.  Unions keep the least element of the merged class as its
    representative, so representatives are stable across runs.
    """

    def __init__(self, pairs: Iterable[tuple[int, int]] = ()):
        self.pairs: list[tuple[int, int]] = []
        self._parent: dict[int, int] = {}
        for p, q in pairs:
            self.add_pair(p, q)

    def _find(self, p: int) -> int:
        parent = self._parent
        if p not in parent:
            return p
        root = p
        while parent[root] != root:
            root = parent[root]
        while parent[p] != root:
            parent[p], p = root, parent[p]
        return root

    def add_pair(self, p: int, q: int) -> "CeerBuilder":
        if p < 0 or q < 0:
            raise ValueError("ceer elements are naturals")
        self.pairs.append((p, q))
        for x in (p, q):
            self._parent.setdefault(x, x)
        a, b = self._find(p), self._find(q)
        if a != b:
            lo, hi = (a, b) if a < b else (b, a)
            self._parent[hi] = lo
        return self

    def related(self, p: int, q: int) -> bool:
        return p == q or self._find(p) == self._find(q)

    def representative(self, p: int) -> int:
        return self._find(p)

    def mentioned(self) -> set[int]:
        return set(self._parent)

    def class_members(self, p: int) -> set[int]:
        """Every mentioned element related to ``p`` (just ``{p}`` if unmentioned)."""
        r = self._find(p)
        out = {x for x in self._parent if self._find(x) == r}
        out.add(p)
        return out

    def classes_among(self, programs: Iterable[int]) -> list[frozenset[int]]:
        """Intersections of classes with ``programs``, ordered by least element."""
        blocks: dict[int, set[int]] = {}
        for p in programs:
            blocks.setdefault(self._find(p), set()).add(p)
        return sorted((frozenset(b) for b in blocks.values()), key=min)

    def copy(self) -> "CeerBuilder":
        c = CeerBuilder()
        c.pairs = list(self.pairs)
        c._parent = dict(self._parent)
        return c

    def prefix(self, n: int) -> "CeerBuilder":
        """The relation generated by the first ``n`` committed pairs."""
        return CeerBuilder(self.pairs[:n])

    def to_lines(self) -> list[str]:
        return [f"P {p} {q}" for p, q in self.pairs]

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "CeerBuilder":
        b = cls()
        for lineno, raw in enumerate(lines, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3 or parts[0] != "P" or not all(t.isdigit() for t in parts[1:]):
                raise ValueError(f"line {lineno}: expected 'P <p> <q>', got {raw!r}")
            b.add_pair(int(parts[1]), int(parts[2]))
        return b

    def __repr__(self) -> str:
        return f"CeerBuilder({len(self.pairs)} pairs)"


def rst_closure(pairs: Iterable[tuple[int, int]]) -> CeerBuilder:
    """The least equivalence relation containing ``pairs``."""
    return CeerBuilder(pairs)

"""Infinite sets of naturals with cheap membership, rank and select.

``Progression`` backs the unused-program pool: an arithmetic progression
that only ever loses a prefix (``take``), its even-ranked elements
(``thin``), or the even-ranked elements of a prefix (``thin_prefix``).  ``Cofinite`` backs the unused-aux-index pool: all naturals
minus a finite set.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional


@dataclass(frozen=True)
class Progression:
    step: int
    offset: int
    layers: tuple = ()   # ("drop", n) | ("thin",) | ("thinp", n)

    def rank(self, p: int) -> Optional[int]:
        """Position of ``p`` in increasing order, or ``None`` if absent."""
        if p < self.offset or (p - self.offset) % self.step:
            return None
        r = (p - self.offset) // self.step
        for layer in self.layers:
            if layer[0] == "drop":
                if r < layer[1]:
                    return None
                r -= layer[1]
            elif layer[0] == "thin":
                if r % 2 == 0:
                    return None
                r //= 2
            else:
                n = layer[1]
                if r < 2 * n:
                    if r % 2 == 0:
                        return None
                    r //= 2
                else:
                    r -= n
        return r

    def __contains__(self, p: int) -> bool:
        return self.rank(p) is not None

    def select(self, r: int) -> int:
        if r < 0:
            raise IndexError(r)
        for layer in reversed(self.layers):
            if layer[0] == "drop":
                r += layer[1]
            elif layer[0] == "thin":
                r = 2 * r + 1
            else:
                r = 2 * r + 1 if r < layer[1] else r + layer[1]
        return self.step * r + self.offset

    def min(self) -> int:
        return self.select(0)

    def first(self, n: int) -> list[int]:
        return [self.select(r) for r in range(n)]

    def __iter__(self) -> Iterator[int]:
        r = 0
        while True:
            yield self.select(r)
            r += 1

    def take(self, n: int) -> "Progression":
        """Drop the ``n`` least elements."""
        if n <= 0:
            return self
        if self.layers and self.layers[-1][0] == "drop":
            return Progression(self.step, self.offset, self.layers[:-1] + (("drop", self.layers[-1][1] + n),))
        return Progression(self.step, self.offset, self.layers + (("drop", n),))

    def thin(self) -> "Progression":
        """Drop the even-ranked elements (ranks 0, 2, 4, ...)."""
        return Progression(self.step, self.offset, self.layers + (("thin",),))

    def thin_prefix(self, n: int) -> "Progression":
        """Drop the even ranks below ``2 * n`` only."""
        if n <= 0:
            return self
        return Progression(self.step, self.offset, self.layers + (("thinp", n),))

    def to_text(self) -> str:
        parts = [f"{self.step},{self.offset}"]
        for layer in self.layers:
            parts.append("thin" if layer[0] == "thin" else f"{layer[0]}:{layer[1]}")
        return "|".join(parts)

    @classmethod
    def from_text(cls, text: str) -> "Progression":
        head, *rest = text.split("|")
        step, offset = (int(t) for t in head.split(","))
        layers = []
        for part in rest:
            if part == "thin":
                layers.append(("thin",))
            elif part.startswith(("drop:", "thinp:")):
                kind, n = part.split(":")
                layers.append((kind, int(n)))
            else:
                raise ValueError(f"bad progression layer {part!r}")
        return cls(step, offset, tuple(layers))


@dataclass(frozen=True)
class Cofinite:
    removed: frozenset = frozenset()

    def __contains__(self, x: int) -> bool:
        return x >= 0 and x not in self.removed

    def without(self, values) -> "Cofinite":
        return Cofinite(self.removed | frozenset(values))

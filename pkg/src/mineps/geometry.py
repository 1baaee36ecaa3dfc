"""Program layout for the block-structured constructions.

A *row* is the run of even programs a construction hands to one family of
finite constants: row ``(i, j)`` for the three-index construction, row
``i`` for the two-index one.  A row has ``2**(i+1)`` positions; at height
``h`` it splits into ``2**(i-h)`` blocks of ``2**(h+1)`` positions, the
lower half of each block being the E-side and the upper half the
E-bar-side.
"""
from __future__ import annotations

from .kernel import pair, unpair


def grid_program(i: int, j: int, k: int) -> int:
    return 2 * pair(i, j * 2 ** (i + 1) + k)


def locate_grid(p: int) -> tuple[int, int, int] | None:
    """``(i, j, pos)`` with ``grid_program(i, j, pos) == p``, or ``None`` for odd ``p``."""
    if p % 2:
        return None
    i, m = unpair(p // 2)
    return i, m >> (i + 1), m & ((1 << (i + 1)) - 1)


def ladder_program(i: int, k: int) -> int:
    return 2 * (2 ** (i + 1) + k - 2)


def locate_ladder(p: int) -> tuple[int, int] | None:
    if p % 2:
        return None
    c = p // 2 + 2
    i = c.bit_length() - 2
    return i, c - (1 << (i + 1))


def row_size(i: int) -> int:
    return 1 << (i + 1)


def num_blocks(i: int, h: int) -> int:
    return 1 << (i - h)


def block_of(pos: int, h: int) -> tuple[int, bool]:
    """``(k, on_bar_side)`` for a row position at height ``h``."""
    return pos >> (h + 1), bool((pos >> h) & 1)


def block_positions(h: int, k: int) -> tuple[range, range]:
    lo = k << (h + 1)
    mid = lo + (1 << h)
    return range(lo, mid), range(mid, lo + (1 << (h + 1)))


def block_length(pos: int, h: int) -> int:
    """Prefix length held by every program of ``pos``'s block at height ``h``."""
    return ((pos >> (h + 1)) + 1) << h

"""One-to-one auxiliary numberings avoiding a reserved family of constants.

Even indices (the stream the constructions draw from) are closed-form.
Index ``k = 2m`` with ``untriple(m) = (c, n - 1, u)`` denotes the function
that is ``c`` on ``[0, n)``, takes the tag ``c + 1 + m`` at ``n`` and
diverges after.  The tag differs from ``c`` and determines ``k``, so the
even stream is one-to-one, and no even-stream function is constant on its
domain, which keeps it clear of every reserved family (all of whose members
are constant where defined).

Odd indices ``k = 2e + 1`` wrap the machine: ``alpha_k(0) = k`` and
``alpha_k(x + 1) = pair(k, phi_e(x))``.  They are best-effort coverage
only; nothing here relies on them being one-to-one.
"""
from __future__ import annotations

from typing import Iterator

from .kernel import (BudgetExhausted, Converges, Descriptor, EqVerdict,
                     EvalEnvironment, EvalOutcome, FiniteConstant, ProvedDivergent,
                     TotalConstant, even_shape_verdict, pair, prefix_shape,
                     probe, triple, unpair, untriple, AuxIndex)

FAMILIES = ("grid", "ladder", "grown")


class NotFoundWithinBudget(LookupError):
    pass


class AuxContractError(ValueError):
    pass


def in_reserved_family(family: str, d: Descriptor) -> bool:
    """Membership of a prefix-constant or total-constant descriptor."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if isinstance(d, TotalConstant):
        return family == "grown"
    if not isinstance(d, FiniteConstant):
        return False
    if family == "grown":
        return True
    i = unpair(d.value)[0] if family == "grid" else d.value
    return d.length <= 2 ** i


def even_index(c: int, n: int, u: int = 0) -> int:
    """The even index whose function is ``c`` below ``n`` (``n >= 1``), variant ``u``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return 2 * triple(c, n - 1, u)


def decode_even(k: int) -> tuple[int, int, int]:
    """``(c, n, tag)`` for an even index."""
    m = k // 2
    c, n0, _ = untriple(m)
    return c, n0 + 1, c + 1 + m


class AuxNumbering:
    def __init__(self, family: str, phi=None):
        if family not in FAMILIES:
            raise ValueError(f"unknown family {family!r}")
        self.family = family
        self.phi = phi

    def even_shape(self, k: int) -> tuple[int, int, int] | None:
        return decode_even(k) if k % 2 == 0 else None

    def alpha_eval(self, k: int, x: int, budget: int) -> EvalOutcome:
        if k % 2 == 0:
            c, n, tag = decode_even(k)
            if x < n:
                return Converges(c)
            return Converges(tag) if x == n else ProvedDivergent()
        if x == 0:
            return Converges(k)
        if self.phi is None:
            return BudgetExhausted(budget)
        out = self.phi.step_eval(k // 2, x - 1, budget)
        if isinstance(out, Converges):
            return Converges(pair(k, out.value))
        return BudgetExhausted(budget)

    def separate(self, k: int, k2: int, budget: int) -> EqVerdict:
        if k == k2:
            raise AuxContractError("separate needs two different indices")
        if k % 2 == 0 and k2 % 2 == 0:
            return even_shape_verdict(decode_even(k), decode_even(k2))
        env = EvalEnvironment(machine=self.phi, aux={self.family: self})
        return probe(AuxIndex(self.family, k), AuxIndex(self.family, k2), budget, env)

    def realizes_reserved(self, k: int) -> bool:
        """Whether ``alpha_k`` is a member of the reserved family (even stream only)."""
        if k % 2:
            raise AuxContractError("exclusion is only guaranteed on the even stream")
        return False

    def extender_candidates(self, prefix: Descriptor) -> Iterator[int]:
        """Even indices whose function extends ``prefix``, in increasing order."""
        shape = prefix_shape(prefix)
        if shape is None:
            raise ValueError("prefix must be a FiniteConstant or EMPTY")
        value, length = shape
        if length == 0:
            k = 0
            while True:
                yield k
                k += 2
        # k = 2 * pair(value, pair(n0, u)) with n0 >= length - 1; pair is
        # monotone in each argument, so walking pair(n0, u) upward by
        # diagonals walks k upward.
        lo = length - 1
        d = lo
        while True:
            for n0 in range(lo, d + 1):
                yield 2 * pair(value, pair(n0, d - n0))
            d += 1

    def find_extenders(self, prefix: Descriptor, src, count: int, search_budget: int) -> list[int]:
        """The ``count`` least even indices in ``src`` extending ``prefix``."""
        if count < 1:
            raise ValueError("count must be at least 1")
        found: list[int] = []
        for tried, k in enumerate(self.extender_candidates(prefix)):
            if tried >= search_budget:
                break
            if k in src:
                found.append(k)
                if len(found) == count:
                    return found
        raise NotFoundWithinBudget(
            f"{len(found)} of {count} extenders of {prefix} within {search_budget} candidates")

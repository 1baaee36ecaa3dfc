"""Number encodings and the symbolic partial-function descriptors.

Every function an engine hands to a program is one of a handful of
descriptor kinds.  Keeping them symbolic (rather than as graphs) is what
lets program equivalence be decided for engine-built numberings, even when
the descriptors involve lengths like ``2**140``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import isqrt
from typing import Protocol, Union


# --------------------------------------------------------------------------
# Pairing

def pair(x: int, y: int) -> int:
    """Cantor pairing ``(x+y)(x+y+1)/2 + x``."""
    if x < 0 or y < 0:
        raise ValueError("pair is defined on naturals only")
    d = x + y
    return d * (d + 1) // 2 + x


def unpair(z: int) -> tuple[int, int]:
    if z < 0:
        raise ValueError("unpair is defined on naturals only")
    d = (isqrt(8 * z + 1) - 1) // 2
    x = z - d * (d + 1) // 2
    return x, d - x


def triple(x: int, y: int, z: int) -> int:
    return pair(x, pair(y, z))


def untriple(n: int) -> tuple[int, int, int]:
    x, rest = unpair(n)
    y, z = unpair(rest)
    return x, y, z


# --------------------------------------------------------------------------
# Descriptors

@dataclass(frozen=True)
class Empty:
    """The everywhere-divergent function."""

    def __str__(self) -> str:
        return "EMPTY"


EMPTY = Empty()


@dataclass(frozen=True)
class FiniteConstant:
    """``value`` on every input below ``length``, divergent elsewhere.

    ``length`` is at least 1; build through :func:`const_prefix` to get the
    ``Empty`` normalization for length 0.
    """

    value: int
    length: int

    def __post_init__(self) -> None:
        if self.length < 1:
            raise ValueError("FiniteConstant of length 0 must be normalized to EMPTY")
        if self.value < 0:
            raise ValueError("negative value")

    def __str__(self) -> str:
        return f"FC:{self.value}:{self.length}"


@dataclass(frozen=True)
class TotalConstant:
    value: int

    def __str__(self) -> str:
        return f"TC:{self.value}"


@dataclass(frozen=True)
class AuxIndex:
    family: str
    k: int

    def __str__(self) -> str:
        return f"A:{self.family}:{self.k}"


@dataclass(frozen=True)
class MachineIndex:
    e: int

    def __str__(self) -> str:
        return f"M:{self.e}"


Descriptor = Union[Empty, FiniteConstant, TotalConstant, AuxIndex, MachineIndex]


def const_prefix(value: int, length: int) -> Descriptor:
    """``value`` below ``length``; normalizes length 0 to ``EMPTY``."""
    if length <= 0:
        return EMPTY
    return FiniteConstant(value, length)


def parse_descriptor(text: str) -> Descriptor:
    parts = text.split(":")
    try:
        if parts == ["EMPTY"]:
            return EMPTY
        if parts[0] == "FC" and len(parts) == 3:
            return const_prefix(int(parts[1]), int(parts[2]))
        if parts[0] == "TC" and len(parts) == 2:
            return TotalConstant(int(parts[1]))
        if parts[0] == "A" and len(parts) == 3:
            return AuxIndex(parts[1], int(parts[2]))
        if parts[0] == "M" and len(parts) == 2:
            return MachineIndex(int(parts[1]))
    except ValueError as exc:
        raise ValueError(f"bad descriptor {text!r}") from exc
    raise ValueError(f"bad descriptor {text!r}")


def prefix_shape(d: Descriptor) -> tuple[int, int] | None:
    """``(value, length)`` for prefix-constant kinds, ``None`` otherwise.

    ``Empty`` reports length 0 and value -1.
    """
    if isinstance(d, Empty):
        return (-1, 0)
    if isinstance(d, FiniteConstant):
        return (d.value, d.length)
    return None


# --------------------------------------------------------------------------
# Outcomes and verdicts

@dataclass(frozen=True)
class Converges:
    value: int


@dataclass(frozen=True)
class ProvedDivergent:
    pass


@dataclass(frozen=True)
class BudgetExhausted:
    budget: int


EvalOutcome = Union[Converges, ProvedDivergent, BudgetExhausted]


@dataclass(frozen=True)
class Equal:
    pass


@dataclass(frozen=True)
class Distinct:
    witness: int


@dataclass(frozen=True)
class Unknown:
    budget: int


EqVerdict = Union[Equal, Distinct, Unknown]


class MisconfiguredEnvironment(LookupError):
    """An ``AuxIndex`` names a family the environment does not serve."""


class PhiBackend(Protocol):
    def step_eval(self, e: int, x: int, s: int) -> EvalOutcome: ...


class AuxBackend(Protocol):
    family: str

    def alpha_eval(self, k: int, x: int, budget: int) -> EvalOutcome: ...

    def even_shape(self, k: int) -> tuple[int, int, int] | None: ...

    def separate(self, k: int, k2: int, budget: int) -> EqVerdict: ...


@dataclass
class EvalEnvironment:
    """Backends for the two non-closed-form descriptor kinds."""

    machine: PhiBackend | None = None
    aux: dict[str, AuxBackend] | None = None

    def aux_for(self, family: str) -> AuxBackend:
        if not self.aux or family not in self.aux:
            raise MisconfiguredEnvironment(f"no aux numbering for family {family!r}")
        return self.aux[family]


# --------------------------------------------------------------------------
# Evaluation and comparison

def evaluate(d: Descriptor, x: int, budget: int, env: EvalEnvironment | None = None) -> EvalOutcome:
    if isinstance(d, Empty):
        return ProvedDivergent()
    if isinstance(d, FiniteConstant):
        return Converges(d.value) if x < d.length else ProvedDivergent()
    if isinstance(d, TotalConstant):
        return Converges(d.value)
    if isinstance(d, AuxIndex):
        if env is None:
            raise MisconfiguredEnvironment("AuxIndex evaluation needs an environment")
        return env.aux_for(d.family).alpha_eval(d.k, x, budget)
    if isinstance(d, MachineIndex):
        if env is None or env.machine is None:
            raise MisconfiguredEnvironment("MachineIndex evaluation needs a machine")
        return env.machine.step_eval(d.e, x, budget)
    raise TypeError(f"not a descriptor: {d!r}")


def _outcomes_differ(a: EvalOutcome, b: EvalOutcome) -> bool:
    if isinstance(a, Converges) and isinstance(b, Converges):
        return a.value != b.value
    if isinstance(a, Converges) and isinstance(b, ProvedDivergent):
        return True
    if isinstance(a, ProvedDivergent) and isinstance(b, Converges):
        return True
    return False


def probe(a: Descriptor, b: Descriptor, budget: int, env: EvalEnvironment | None,
          inputs: range | None = None) -> EqVerdict:
    """Input-by-input search for a provable difference."""
    for x in inputs if inputs is not None else range(budget):
        if _outcomes_differ(evaluate(a, x, budget, env), evaluate(b, x, budget, env)):
            return Distinct(x)
    return Unknown(budget)


def _even_aux_shape(d: Descriptor, env: EvalEnvironment | None) -> tuple[int, int, int] | None:
    if isinstance(d, AuxIndex) and env is not None:
        return env.aux_for(d.family).even_shape(d.k)
    return None


def extends(d: Descriptor, prefix: Descriptor, budget: int,
            env: EvalEnvironment | None = None) -> EqVerdict:
    """Does ``d`` agree with the prefix-constant ``prefix`` wherever it is defined?

    ``Equal`` is read as "superset".  ``Distinct`` carries the least input
    that breaks the containment.
    """
    shape = prefix_shape(prefix)
    if shape is None:
        raise ValueError("extends needs a FiniteConstant (or EMPTY) prefix")
    value, length = shape
    if length == 0:
        return Equal()
    own = prefix_shape(d)
    if own is not None:
        v, n = own
        if n == 0 or v != value:
            return Distinct(0)
        return Equal() if n >= length else Distinct(n)
    if isinstance(d, TotalConstant):
        return Equal() if d.value == value else Distinct(0)
    even = _even_aux_shape(d, env)
    if even is not None:
        c, n, tag = even
        if c != value:
            return Distinct(0)
        return Equal() if n >= length else Distinct(n)
    # machine-backed: only finitely many inputs can be looked at
    for x in range(min(length, budget)):
        out = evaluate(d, x, budget, env)
        if isinstance(out, Converges):
            if out.value != value:
                return Distinct(x)
        elif isinstance(out, ProvedDivergent):
            return Distinct(x)
        else:
            return Unknown(budget)
    return Equal() if length <= budget else Unknown(budget)


def _prefixlike(d: Descriptor) -> tuple[int, int | None] | None:
    # (value, length) with length None for total constants
    shape = prefix_shape(d)
    if shape is not None:
        return shape
    if isinstance(d, TotalConstant):
        return (d.value, None)
    return None


def _compare_prefixlike(a: tuple[int, int | None], b: tuple[int, int | None]) -> EqVerdict:
    va, na = a
    vb, nb = b
    if na == 0 and nb == 0:
        return Equal()
    if na != 0 and nb != 0 and va != vb:
        return Distinct(0)
    if na == 0 or nb == 0:
        return Distinct(0)
    if na == nb:
        return Equal()
    if na is None:
        return Distinct(nb)
    if nb is None:
        return Distinct(na)
    return Distinct(min(na, nb))


def _even_vs_prefixlike(shape: tuple[int, int, int], other: tuple[int, int | None]) -> Distinct:
    c, n, tag = shape
    v, length = other
    if length == 0 or v != c:
        return Distinct(0)
    # agree with c below n; at n the aux function gives tag != c
    return Distinct(n)


def even_shape_verdict(a: tuple[int, int, int], b: tuple[int, int, int]) -> EqVerdict:
    """Compare two constant-then-tag functions given as ``(c, n, tag)``."""
    if a == b:
        return Equal()
    (c, n, _), (c2, n2, _) = a, b
    if c != c2:
        return Distinct(0)
    return Distinct(min(n, n2))


def ext_equal(a: Descriptor, b: Descriptor, budget: int,
              env: EvalEnvironment | None = None) -> EqVerdict:
    """Three-valued extensional equality."""
    if a == b:
        return Equal()
    pa, pb = _prefixlike(a), _prefixlike(b)
    if pa is not None and pb is not None:
        return _compare_prefixlike(pa, pb)
    if isinstance(a, AuxIndex) and isinstance(b, AuxIndex) and a.family == b.family:
        return env.aux_for(a.family).separate(a.k, b.k, budget) if env else Unknown(budget)
    ea, eb = _even_aux_shape(a, env), _even_aux_shape(b, env)
    if ea is not None and eb is not None:
        return even_shape_verdict(ea, eb)
    if ea is not None and pb is not None:
        return _even_vs_prefixlike(ea, pb)
    if eb is not None and pa is not None:
        return _even_vs_prefixlike(eb, pa)
    return probe(a, b, budget, env)

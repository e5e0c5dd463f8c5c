"""Complete-lattice abstraction and the three shipped lattices.

A :class:`Lattice` bundles the ordering, bounds, join/meet, an optional
anti-monotone complement, and the representation function mapping a universe
atom to the most precise property describing it.  Shipped constructors:
finite powersets, the sign powerset, and bounded integer intervals.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import product
from typing import Any, Callable, Optional, Sequence

from .errors import LatticeError, MonotonicityError, RegistryError

Atom = Any  # universe atoms are identifiers (str) or integers

NEG_INF = float("-inf")
POS_INF = float("inf")


def atom_sort_key(a: Atom):
    """Deterministic ordering across mixed int/str atoms (ints first)."""
    return (0, a, "") if isinstance(a, int) else (1, 0, str(a))


def render_atom(a: Atom) -> str:
    return str(a)


# ---------------------------------------------------------------------------
# Intervals


@dataclass(frozen=True)
class IntervalValue:
    """Closed integer interval with extended endpoints.

    The empty interval is canonically ``(+inf, -inf)``; with that encoding the
    lower endpoint of the empty interval is +inf and the upper is -inf, which
    makes the ordering and join/meet formulas below uniform.
    """

    lo: int | float
    hi: int | float

    @property
    def is_empty(self) -> bool:
        return self.lo > self.hi

    def contains(self, n: int) -> bool:
        return self.lo <= n <= self.hi

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return "interval(empty)" if self.is_empty else f"interval[{self.lo},{self.hi}]"


EMPTY_INTERVAL = IntervalValue(POS_INF, NEG_INF)
FULL_INTERVAL = IntervalValue(NEG_INF, POS_INF)


def _norm_endpoint(z):
    if z == NEG_INF or z == POS_INF:
        return z
    return int(z)


def interval(lo, hi) -> IntervalValue:
    """Raw interval constructor; collapses inverted bounds to empty."""
    if lo > hi:
        return EMPTY_INTERVAL
    return IntervalValue(_norm_endpoint(lo), _norm_endpoint(hi))


def interval_inf(i: IntervalValue):
    """Lower endpoint; +inf for the empty interval."""
    return i.lo


def interval_sup(i: IntervalValue):
    """Upper endpoint; -inf for the empty interval."""
    return i.hi


def interval_leq(i1: IntervalValue, i2: IntervalValue) -> bool:
    """Containment ordering: i1 is inside i2."""
    return interval_inf(i2) <= interval_inf(i1) and interval_sup(i1) <= interval_sup(i2)


def interval_join(i1: IntervalValue, i2: IntervalValue) -> IntervalValue:
    return interval(min(i1.lo, i2.lo), max(i1.hi, i2.hi))


def interval_meet(i1: IntervalValue, i2: IntervalValue) -> IntervalValue:
    return interval(max(i1.lo, i2.lo), min(i1.hi, i2.hi))


def _xmul(a, b):
    # 0 * +-inf is 0 here, keeping multiplication an over-approximation.
    if a == 0 or b == 0:
        return 0
    return a * b


def interval_arithmetic(op: str, i1: IntervalValue, i2: IntervalValue,
                        snap: Callable[[Any, Any], IntervalValue] | None = None) -> IntervalValue:
    """Endpoint-combination transfer for add/sub/mul, strict in the empty interval."""
    if i1.is_empty or i2.is_empty:
        return EMPTY_INTERVAL
    if op == "add":
        lo, hi = i1.lo + i2.lo, i1.hi + i2.hi
    elif op == "sub":
        lo, hi = i1.lo - i2.hi, i1.hi - i2.lo
    elif op == "mul":
        corners = [_xmul(a, b) for a in (i1.lo, i1.hi) for b in (i2.lo, i2.hi)]
        lo, hi = min(corners), max(corners)
    else:
        raise LatticeError(f"unknown interval operation {op!r}")
    if snap is not None:
        return snap(lo, hi)
    return interval(lo, hi)


# ---------------------------------------------------------------------------
# Lattice handle


@dataclass(frozen=True)
class Lattice:
    """A complete lattice packaged with the operations the solver needs.

    ``represent`` maps a universe atom to its most precise description and
    never returns bottom.  ``complement`` is present only when anti-monotone
    (negation over a complement-free lattice is rejected at validation).
    ``enumerate_elements``/``element_count`` are needed only by the reference
    evaluators and by exhaustive monotonicity checks; ``sample_element``
    backs randomized monotonicity spot checks on large lattices.

    Values are immutable and all operations pure, so handles and values can
    be shared freely across threads.
    """

    name: str
    kind: str
    bottom: Any
    top: Any
    leq: Callable[[Any, Any], bool]
    join: Callable[[Any, Any], Any]
    meet: Callable[[Any, Any], Any]
    represent: Callable[[Atom], Any]
    complement: Optional[Callable[[Any], Any]] = None
    enumerate_elements: Optional[Callable[[], Sequence[Any]]] = None
    element_count: Optional[int] = None
    sample_element: Optional[Callable[[random.Random], Any]] = None
    render: Callable[[Any], str] = repr
    atoms: Optional[tuple] = None       # carrier of set-based lattices
    zvalues: Optional[tuple] = None     # integer grid of the interval lattice
    make_interval: Optional[Callable[[Any, Any], IntervalValue]] = None

    def is_bottom(self, v) -> bool:
        return v == self.bottom

    def nonbottom_elements(self) -> list:
        if self.enumerate_elements is None:
            raise LatticeError(f"lattice {self.name!r} is not enumerable")
        return [v for v in self.enumerate_elements() if v != self.bottom]


# ---------------------------------------------------------------------------
# Set-based lattices (finite powerset, signs)

SIGNS = ("-", "0", "+")


def _set_render(carrier_order: dict) -> Callable[[frozenset], str]:
    def render(v: frozenset) -> str:
        if not v:
            return "bot"
        items = sorted(v, key=lambda a: carrier_order[a])
        return "{" + ",".join(render_atom(a) for a in items) + "}"

    return render


def _build_set_lattice(name: str, kind: str, carrier: tuple,
                       represent: Callable[[Atom], frozenset]) -> Lattice:
    top = frozenset(carrier)
    order = {a: i for i, a in enumerate(carrier)}

    def enumerate_elements():
        elems = [frozenset()]
        for a in carrier:
            elems += [e | {a} for e in elems]
        return sorted(elems, key=lambda s: (len(s), sorted(order[a] for a in s)))

    # enumeration only stays available while it is actually materializable
    if len(carrier) > 20:
        enumerate_elements = None

    def sample_element(rng: random.Random) -> frozenset:
        return frozenset(a for a in carrier if rng.random() < 0.5)

    return Lattice(
        name=name,
        kind=kind,
        bottom=frozenset(),
        top=top,
        leq=frozenset.issubset,
        join=frozenset.union,
        meet=frozenset.intersection,
        complement=lambda v: top - v,
        represent=represent,
        enumerate_elements=enumerate_elements,
        element_count=2 ** len(carrier),
        sample_element=sample_element,
        render=_set_render(order),
        atoms=carrier,
    )


def powerset_lattice(universe) -> Lattice:
    """Subset lattice over a finite atom set; an atom is described by its singleton."""
    carrier = tuple(sorted(set(universe), key=atom_sort_key))
    if not carrier:
        raise LatticeError("powerset lattice needs a non-empty universe")

    def represent(a: Atom) -> frozenset:
        if a not in carrier_set:
            raise LatticeError(f"atom {a!r} is not in the powerset universe")
        return frozenset((a,))

    carrier_set = set(carrier)
    return _build_set_lattice("powerset", "powerset", carrier, represent)


def sign_of(n: int) -> str:
    return "-" if n < 0 else "0" if n == 0 else "+"


def sign_lattice() -> Lattice:
    """Powerset of {-,0,+}; an integer atom is described by its sign singleton.

    Atoms that are not integers (state or variable names) carry no sign
    information and map to top.
    """

    def represent(a: Atom) -> frozenset:
        if isinstance(a, int):
            return frozenset((sign_of(a),))
        return frozenset(SIGNS)

    return _build_set_lattice("signs", "signs", SIGNS, represent)


# ---------------------------------------------------------------------------
# Interval lattice


def interval_lattice(zvalues) -> Lattice:
    """Bounded-interval lattice over a finite integer grid.

    Endpoints of every constructed value are snapped outward onto the grid
    (below the grid to -inf, above to +inf), which keeps the element set
    finite and every ascending chain stabilizing.
    """
    grid = tuple(sorted(set(int(z) for z in zvalues)))
    if not grid:
        raise LatticeError("interval lattice needs a non-empty integer grid")

    def snap_lo(lo):
        if lo == NEG_INF:
            return NEG_INF
        if lo < grid[0]:
            return NEG_INF
        best = None
        for z in grid:
            if z <= lo:
                best = z
        return best

    def snap_hi(hi):
        if hi == POS_INF:
            return POS_INF
        if hi > grid[-1]:
            return POS_INF
        for z in grid:
            if z >= hi:
                return z
        return POS_INF

    def make(lo, hi) -> IntervalValue:
        if lo > hi:
            return EMPTY_INTERVAL
        return interval(snap_lo(lo), snap_hi(hi))

    def represent(a: Atom) -> IntervalValue:
        if isinstance(a, int):
            return make(a, a)
        return FULL_INTERVAL

    los = (NEG_INF,) + grid
    his = grid + (POS_INF,)

    def enumerate_elements():
        elems = [EMPTY_INTERVAL]
        elems += [IntervalValue(lo, hi) for lo in los for hi in his if lo <= hi]
        return elems

    count = 1 + sum(1 for lo in los for hi in his if lo <= hi)

    def sample_element(rng: random.Random) -> IntervalValue:
        if rng.random() < 0.1:
            return EMPTY_INTERVAL
        lo = rng.choice(los)
        hi = rng.choice(his)
        if lo > hi:
            lo, hi = hi, lo
        return interval(lo, hi)

    def render(v: IntervalValue) -> str:
        if v.is_empty:
            return "bot"
        lo = "-inf" if v.lo == NEG_INF else str(v.lo)
        hi = "inf" if v.hi == POS_INF else str(v.hi)
        return f"[{lo},{hi}]"

    return Lattice(
        name="interval",
        kind="interval",
        bottom=EMPTY_INTERVAL,
        top=FULL_INTERVAL,
        leq=interval_leq,
        join=interval_join,
        meet=interval_meet,
        complement=None,
        represent=represent,
        enumerate_elements=enumerate_elements,
        element_count=count,
        sample_element=sample_element,
        render=render,
        zvalues=grid,
        make_interval=make,
    )


# ---------------------------------------------------------------------------
# Sign transfer tables

_SIGN_NEG = {"-": "+", "0": "0", "+": "-"}
_SIGN_ADD = {
    ("-", "-"): ("-",),
    ("-", "0"): ("-",),
    ("-", "+"): ("-", "0", "+"),
    ("0", "0"): ("0",),
    ("0", "+"): ("+",),
    ("+", "+"): ("+",),
}
_SIGN_MUL = {
    ("-", "-"): ("+",),
    ("-", "0"): ("0",),
    ("-", "+"): ("-",),
    ("0", "0"): ("0",),
    ("0", "+"): ("0",),
    ("+", "+"): ("+",),
}


def _sign_pair(table, s1: str, s2: str) -> tuple:
    return table.get((s1, s2)) or table[(s2, s1)]


def sign_transfer(op: str) -> Callable[[frozenset, frozenset], frozenset]:
    """Pointwise-joined sign table for add/sub/mul over sign sets."""
    if op not in ("add", "sub", "mul"):
        raise LatticeError(f"unknown sign operation {op!r}")

    def fn(s1: frozenset, s2: frozenset) -> frozenset:
        out = set()
        for a in s1:
            for b in s2:
                b2 = _SIGN_NEG[b] if op == "sub" else b
                table = _SIGN_MUL if op == "mul" else _SIGN_ADD
                out.update(_sign_pair(table, a, b2))
        return frozenset(out)

    return fn


# ---------------------------------------------------------------------------
# Function registry


class FunctionRegistry:
    """Named monotone operations usable as function terms.

    Registration validates monotonicity in each argument: exhaustively when
    the lattice enumerates fewer than ``exhaustive_limit`` elements, otherwise
    by ``spot_checks`` sampled ordered pairs.  Register everything up front;
    the registry must not change during a solve run.
    """

    def __init__(self, lattice: Lattice, exhaustive_limit: int = 64, spot_checks: int = 1000):
        self.lattice = lattice
        self.exhaustive_limit = exhaustive_limit
        self.spot_checks = spot_checks
        self._fns: dict[tuple[str, int], Callable] = {}

    def register(self, name: str, arity: int, fn: Callable) -> None:
        key = (name, arity)
        if key in self._fns:
            raise RegistryError(f"function {name}/{arity} already registered")
        self._validate_monotone(name, arity, fn)
        self._fns[key] = fn

    def has(self, name: str, arity: int) -> bool:
        return (name, arity) in self._fns

    def apply(self, name: str, args: tuple):
        try:
            fn = self._fns[(name, len(args))]
        except KeyError:
            raise RegistryError(f"unknown function {name}/{len(args)}") from None
        return fn(*args)

    def names(self) -> list[tuple[str, int]]:
        return sorted(self._fns)

    def _validate_monotone(self, name: str, arity: int, fn: Callable) -> None:
        if arity == 0:
            fn()  # constants are trivially monotone; just probe once
            return
        lat = self.lattice
        count = lat.element_count
        if (count is not None and count < self.exhaustive_limit
                and lat.enumerate_elements is not None
                and count ** (arity + 1) * arity <= 2_000_000):
            self._check_exhaustive(name, arity, fn)
        else:
            self._check_sampled(name, arity, fn)

    def _check_exhaustive(self, name, arity, fn):
        lat = self.lattice
        elems = list(lat.enumerate_elements())
        pairs = [(a, b) for a in elems for b in elems if a != b and lat.leq(a, b)]
        for pos in range(arity):
            for others in product(elems, repeat=arity - 1):
                for lo, hi in pairs:
                    args_lo = others[:pos] + (lo,) + others[pos:]
                    args_hi = others[:pos] + (hi,) + others[pos:]
                    if not lat.leq(fn(*args_lo), fn(*args_hi)):
                        raise MonotonicityError(name, pos, lo, hi, fn(*args_lo), fn(*args_hi))

    def _check_sampled(self, name, arity, fn):
        lat = self.lattice
        if lat.sample_element is None:
            raise RegistryError(
                f"cannot validate {name}/{arity}: lattice {lat.name!r} has no "
                "element sampler and is too large to enumerate")
        rng = random.Random(f"monotone:{name}/{arity}")
        extremes = [lat.bottom, lat.top]

        def sample():
            if rng.random() < 0.15:
                return rng.choice(extremes)
            return lat.sample_element(rng)

        for _ in range(self.spot_checks):
            pos = rng.randrange(arity)
            others = tuple(sample() for _ in range(arity - 1))
            hi = sample()
            lo = lat.meet(hi, sample())
            args_lo = others[:pos] + (lo,) + others[pos:]
            args_hi = others[:pos] + (hi,) + others[pos:]
            if not lat.leq(fn(*args_lo), fn(*args_hi)):
                raise MonotonicityError(name, pos, lo, hi, fn(*args_lo), fn(*args_hi))


def standard_registry(lattice: Lattice) -> FunctionRegistry:
    """Registry pre-populated with the builtin transfer functions of a lattice."""
    reg = FunctionRegistry(lattice)
    if lattice.kind == "interval":
        for op in ("add", "sub", "mul"):
            reg.register(f"f_{op}", 2,
                         lambda i1, i2, _op=op: interval_arithmetic(_op, i1, i2, lattice.make_interval))
    elif lattice.kind == "signs":
        for op in ("add", "sub", "mul"):
            reg.register(f"s_{op}", 2, sign_transfer(op))
    return reg

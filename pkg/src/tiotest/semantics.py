"""Timed semantics: traces, symbolic state sets, observations and oracles.

States are handled symbolically as ``(location, zone)`` pairs.  Delays are
tracked with an auxiliary clock ``#t`` that is reset at the start of each
delay step, so rational delays are computed exactly.  Observed clocks may be
reset arbitrarily by any move.

The conformance and refinement checkers are bounded oracles: they explore
traces with at most ``depth`` observable actions and delays on a grid.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .errors import TiotestError
from .model import Edge, Otaio
from .zones import (
    INF,
    INF_BOUND,
    Bound,
    Dbm,
    Number,
    fed_includes,
    fed_reduce,
    le,
)

TIME = "#t"


# traces ---------------------------------------------------------------------


def _frac(v: Number | str) -> Fraction:
    f = Fraction(v)
    if f < 0:
        raise TiotestError("PARSE_ERROR", f"negative delay {v}")
    return f


def format_delay(d: Fraction) -> str:
    d = Fraction(d)
    if d.denominator == 1:
        return str(d.numerator)
    den = d.denominator
    while den % 2 == 0:
        den //= 2
    while den % 5 == 0:
        den //= 5
    if den == 1:
        return format(Decimal(d.numerator) / Decimal(d.denominator), "f")
    return f"{d.numerator}/{d.denominator}"


def _is_number(tok: str) -> bool:
    return bool(tok) and all(ch.isdigit() or ch == "/" for ch in tok) and tok[0].isdigit()


@dataclass(frozen=True)
class Trace:
    """Observable timed word ``d0.a1.d1...an.dn``; always ends with a delay."""

    delays: tuple[Fraction, ...]
    actions: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.delays) != len(self.actions) + 1:
            raise ValueError("a trace has one more delay than actions")
        object.__setattr__(self, "delays", tuple(_frac(d) for d in self.delays))
        object.__setattr__(self, "actions", tuple(self.actions))

    @staticmethod
    def empty() -> Trace:
        return Trace((Fraction(0),), ())

    @staticmethod
    def of(*items: Number | str) -> Trace:
        """Build from delays and action names; adjacent delays add up."""
        return trace_of(items)

    @staticmethod
    def parse(text: str) -> Trace:
        text = text.strip()
        if not text:
            return Trace.empty()
        toks = text.split(".")
        items: list[Number | str] = []
        i = 0
        while i < len(toks):
            tok = toks[i]
            if not tok:
                raise TiotestError("PARSE_ERROR", f"empty token in trace {text!r}")
            if _is_number(tok):
                if "/" not in tok and i + 1 < len(toks) and toks[i + 1].isdigit():
                    items.append(Fraction(Decimal(f"{tok}.{toks[i + 1]}")))
                    i += 2
                    continue
                try:
                    items.append(_frac(tok))
                except (ValueError, ZeroDivisionError) as exc:
                    raise TiotestError("PARSE_ERROR", f"bad delay {tok!r}") from exc
            else:
                items.append(tok)
            i += 1
        return trace_of(items)

    def __str__(self) -> str:
        parts = []
        for d, a in zip(self.delays, self.actions):
            parts += [format_delay(d), a]
        if not self.actions or self.delays[-1] != 0:
            parts.append(format_delay(self.delays[-1]))
        return ".".join(parts)

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def duration(self) -> Fraction:
        return sum(self.delays, Fraction(0))

    def then(self, action: str, delay: Number = 0) -> Trace:
        return Trace(self.delays + (Fraction(delay),), self.actions + (action,))

    def wait(self, delay: Number) -> Trace:
        return Trace(self.delays[:-1] + (self.delays[-1] + Fraction(delay),), self.actions)

    def is_prefix_of(self, other: Trace) -> bool:
        n = len(self.actions)
        if n > len(other.actions) or self.actions != other.actions[:n]:
            return False
        if self.delays[:-1] != other.delays[:n]:
            return False
        return self.delays[-1] <= other.delays[n]


def trace_of(seq: Iterable[Number | str], internals: Iterable[str] = ()) -> Trace:
    """Trace of a sequence of delays and actions: internal actions vanish and delays add up."""
    hidden = set(internals)
    delays = [Fraction(0)]
    actions: list[str] = []
    for item in seq:
        if isinstance(item, str):
            if item in hidden:
                continue
            actions.append(item)
            delays.append(Fraction(0))
        else:
            delays[-1] += _frac(item)
    return Trace(tuple(delays), tuple(actions))


def concat(s1: Trace, s2: Trace) -> Trace:
    mid = s1.delays[-1] + s2.delays[0]
    return Trace(s1.delays[:-1] + (mid,) + s2.delays[1:], s1.actions + s2.actions)


# symbolic state sets --------------------------------------------------------


@dataclass(frozen=True)
class SymbolicStateSet:
    clocks: tuple[str, ...]
    items: frozenset[tuple[str, Dbm]]

    @staticmethod
    def of(clocks: Sequence[str], pairs: Iterable[tuple[str, Dbm]]) -> SymbolicStateSet:
        by_loc: dict[str, list[Dbm]] = {}
        for loc, z in pairs:
            if not z.is_empty():
                by_loc.setdefault(loc, []).append(z)
        items = frozenset((loc, z) for loc, zs in by_loc.items() for z in fed_reduce(zs))
        return SymbolicStateSet(tuple(clocks), items)

    def is_empty(self) -> bool:
        return not self.items

    def __bool__(self) -> bool:
        return bool(self.items)

    def __iter__(self) -> Iterator[tuple[str, Dbm]]:
        return iter(sorted(self.items, key=lambda p: (p[0], str(p[1]))))

    def locations(self) -> set[str]:
        return {loc for loc, _ in self.items}

    def zones(self, loc: str) -> list[Dbm]:
        return [z for l2, z in self.items if l2 == loc]

    def contains(self, loc: str, valuation: Mapping[str, Number]) -> bool:
        return any(z.contains_point(valuation) for z in self.zones(loc))

    def includes(self, other: SymbolicStateSet) -> bool:
        return all(fed_includes(self.zones(loc), other.zones(loc)) for loc in other.locations())

    def same_as(self, other: SymbolicStateSet) -> bool:
        return self.includes(other) and other.includes(self)

    def describe(self) -> list[tuple[str, str]]:
        return [(loc, str(z)) for loc, z in self]


# compiled view of an automaton ----------------------------------------------


class _Ctx:
    """Zones of guards and invariants over a fixed clock list, with post/pre."""

    def __init__(self, a: Otaio, clocks: tuple[str, ...]) -> None:
        self.a = a
        self.clocks = clocks
        self.universe = Dbm.universe(clocks)
        self.inv = {loc: a.inv(loc).zone(clocks) for loc in a.locations}
        self.enabled_guard = {
            e: e.guard.zone(clocks).intersect(self.inv[e.source]) for e in a.edges
        }
        obs = a.observed_clocks
        self.extra_resets = [
            frozenset(c) for k in range(len(obs) + 1) for c in itertools.combinations(obs, k)
        ]
        self.into: dict[str, list[Edge]] = {}
        for e in a.edges:
            self.into.setdefault(e.target, []).append(e)
        self.k = {c: a.max_const for c in a.clocks}

    def resets(self, e: Edge) -> list[frozenset[str]]:
        return list(dict.fromkeys(e.resets | s for s in self.extra_resets))

    def post(self, e: Edge, z: Dbm) -> list[Dbm]:
        src = z.intersect(self.enabled_guard[e])
        if src.is_empty():
            return []
        out = []
        for r in self.resets(e):
            t = src.reset(r).intersect(self.inv[e.target])
            if not t.is_empty():
                out.append(t)
        return out

    def pre(self, e: Edge, z: Dbm) -> list[Dbm]:
        """Valuations at the source from which ``e`` leads into ``z``."""
        tgt = z.intersect(self.inv[e.target])
        out = []
        for r in self.resets(e):
            t = tgt
            for c in r:
                t = t.constrain(c, None, le(0)).constrain(None, c, le(0))
            if t.is_empty():
                continue
            p = t.free(r).intersect(self.enabled_guard[e])
            if not p.is_empty():
                out.append(p)
        return out

    def enabled(self, e: Edge) -> list[Dbm]:
        return self.pre(e, self.universe)


def _ctx(a: Otaio, timed: bool) -> _Ctx:
    key = ("ctx", timed)
    if key not in a._cache:
        clocks = a.clocks + ((TIME,) if timed else ())
        a._cache[key] = _Ctx(a, clocks)
    return a._cache[key]


_MEMO_LIMIT = 200_000


def _memo(a: Otaio, key: tuple, compute: Callable[[], object]):
    """Per-automaton result cache for the pure state-set operations."""
    table = a._cache.setdefault("memo", {})
    if key in table:
        return table[key]
    if len(table) >= _MEMO_LIMIT:
        table.clear()
    table[key] = value = compute()
    return value


def _add(passed: dict[str, list[Dbm]], loc: str, z: Dbm) -> bool:
    zs = passed.setdefault(loc, [])
    if any(w.includes(z) for w in zs):
        return False
    zs[:] = [w for w in zs if not z.includes(w)] + [z]
    return True


def _delay_closure(
    ctx: _Ctx, start: Iterable[tuple[str, Dbm]], horizon: Bound | None
) -> dict[str, list[Dbm]]:
    """Internal moves and delays from ``start`` with the time clock below ``horizon``."""
    a = ctx.a
    k = dict(ctx.k)
    if horizon is not None:
        k[TIME] = math.ceil(horizon[0])
    passed: dict[str, list[Dbm]] = {}
    waiting = deque(start)
    while waiting:
        loc, z = waiting.popleft()
        inv = ctx.inv[loc]
        z = z.up().intersect(inv)
        if horizon is not None:
            z = z.constrain(TIME, None, horizon)
        z = z.extrapolate(k).intersect(inv)
        if horizon is not None:
            z = z.constrain(TIME, None, horizon)
        if z.is_empty() or not _add(passed, loc, z):
            continue
        for e in a.out_edges(loc):
            if e.action in a.internals:
                for z2 in ctx.post(e, z):
                    waiting.append((e.target, z2))
    return passed


def _timed(ctx: _Ctx, s: SymbolicStateSet) -> list[tuple[str, Dbm]]:
    return [(loc, z.embed(ctx.clocks).reset([TIME])) for loc, z in s.items]


def initial_states(a: Otaio) -> SymbolicStateSet:
    """The initial state with all clocks at zero (empty if the invariant forbids it)."""
    z = Dbm.zero(a.clocks).intersect(a.inv(a.initial).zone(a.clocks))
    return SymbolicStateSet.of(a.clocks, [(a.initial, z)])


def advance(a: Otaio, s: SymbolicStateSet, delay: Number) -> SymbolicStateSet:
    """States reached from ``s`` by letting exactly ``delay`` elapse, internal moves allowed."""
    d = Fraction(delay)
    return _memo(a, ("advance", s, d), lambda: _advance(a, s, d))


def _advance(a: Otaio, s: SymbolicStateSet, d: Fraction) -> SymbolicStateSet:
    ctx = _ctx(a, True)
    passed = _delay_closure(ctx, _timed(ctx, s), le(d))
    pairs = []
    for loc, zs in passed.items():
        for z in zs:
            z = z.constrain(None, TIME, le(-d))
            if not z.is_empty():
                pairs.append((loc, z.project(a.clocks)))
    return SymbolicStateSet.of(a.clocks, pairs)


def fire(a: Otaio, s: SymbolicStateSet, action: str) -> SymbolicStateSet:
    """Successors of ``s`` by one ``action`` edge, without any delay."""
    return _memo(a, ("fire", s, action), lambda: _fire(a, s, action))


def _fire(a: Otaio, s: SymbolicStateSet, action: str) -> SymbolicStateSet:
    ctx = _ctx(a, False)
    pairs = []
    for loc, z in s.items:
        for e in a.out_edges(loc):
            if e.action == action:
                pairs.extend((e.target, z2) for z2 in ctx.post(e, z))
    return SymbolicStateSet.of(a.clocks, pairs)


def after(a: Otaio, trace: Trace) -> SymbolicStateSet:
    """All states where ``a`` can be after observing ``trace``."""
    s = initial_states(a)
    for i, d in enumerate(trace.delays):
        if s.is_empty():
            break
        s = advance(a, s, d)
        if i < len(trace.actions):
            s = fire(a, s, trace.actions[i])
    return s


def accepts_trace(a: Otaio, trace: Trace) -> bool:
    return not after(a, trace).is_empty()


# observations ---------------------------------------------------------------


@dataclass(frozen=True)
class ObsSet:
    """Outputs, inputs and the supremum of pure delays observable from a state set."""

    outputs: frozenset[str]
    inputs: frozenset[str]
    delay_sup: Fraction | float
    delay_sup_included: bool

    @property
    def delay_bound(self) -> Bound:
        if self.delay_sup == INF:
            return INF_BOUND
        return (self.delay_sup, int(self.delay_sup_included))

    def allows_delay(self, t: Number) -> bool:
        return le(Fraction(t)) <= self.delay_bound

    def out_within(self, other: ObsSet) -> bool:
        return self.outputs <= other.outputs and self.delay_bound <= other.delay_bound

    def describe_delays(self) -> str:
        if self.delay_sup == INF:
            return "[0,inf)"
        if self.delay_bound < le(0):
            return "{}"
        close = "]" if self.delay_sup_included else ")"
        return f"[0,{format_delay(self.delay_sup)}{close}"


def default_horizon(*autos: Otaio) -> int:
    """Delay beyond which a pure delay is deemed unbounded."""
    return max((a.max_const + 1) * (len(a.locations) + 1) for a in autos)


def _enabled_actions(a: Otaio, s: SymbolicStateSet, kinds: frozenset[str]) -> frozenset[str]:
    return _memo(a, ("enabled", s, kinds), lambda: _enabled_now(a, s, kinds))


def _enabled_now(a: Otaio, s: SymbolicStateSet, kinds: frozenset[str]) -> frozenset[str]:
    ctx = _ctx(a, False)
    found = set()
    for loc, z in s.items:
        for e in a.out_edges(loc):
            if e.action in kinds and e.action not in found and ctx.post(e, z):
                found.add(e.action)
    return frozenset(found)


def elapse_bound(a: Otaio, s: SymbolicStateSet, horizon: int | None = None) -> Bound:
    """Supremum of delays possible from ``s`` without observable actions."""
    if s.is_empty():
        return (0, 0)
    h = default_horizon(a) if horizon is None else horizon
    return _memo(a, ("elapse", s, h), lambda: _elapse_bound(a, s, h))


def _elapse_bound(a: Otaio, s: SymbolicStateSet, h: int) -> Bound:
    ctx = _ctx(a, True)
    best: Bound = le(0)
    for zs in _delay_closure(ctx, _timed(ctx, s), le(h)).values():
        for z in zs:
            b = z.upper(TIME)
            if b >= le(h):
                return INF_BOUND
            best = max(best, b)
    return best


def obs(a: Otaio, s: SymbolicStateSet, horizon: int | None = None) -> ObsSet:
    b = elapse_bound(a, s, horizon)
    return ObsSet(
        outputs=_enabled_actions(a, s, a.outputs),
        inputs=_enabled_actions(a, s, a.inputs),
        delay_sup=b[0] if b[0] == INF else Fraction(b[0]),
        delay_sup_included=bool(b[1]) if b[0] != INF else False,
    )


# reachability ---------------------------------------------------------------


def reach(a: Otaio) -> SymbolicStateSet:
    """Reachable states (zone graph with extrapolation)."""
    ctx = _ctx(a, False)
    passed: dict[str, list[Dbm]] = {}
    waiting = deque(initial_states(a).items)
    while waiting:
        loc, z = waiting.popleft()
        inv = ctx.inv[loc]
        z = z.up().intersect(inv).extrapolate(ctx.k).intersect(inv)
        if z.is_empty() or not _add(passed, loc, z):
            continue
        for e in a.out_edges(loc):
            for z2 in ctx.post(e, z):
                waiting.append((e.target, z2))
    return SymbolicStateSet.of(a.clocks, ((l, z) for l, zs in passed.items() for z in zs))


def coreach(a: Otaio, target: SymbolicStateSet) -> SymbolicStateSet:
    """States from which some run reaches ``target``."""
    ctx = _ctx(a, False)
    passed: dict[str, list[Dbm]] = {}
    waiting = deque(target.items)
    while waiting:
        loc, z = waiting.popleft()
        inv = ctx.inv[loc]
        z = z.intersect(inv).down().intersect(inv).extrapolate(ctx.k).intersect(inv)
        if z.is_empty() or not _add(passed, loc, z):
            continue
        for e in ctx.into.get(loc, []):
            for z2 in ctx.pre(e, z):
                waiting.append((e.source, z2))
    return SymbolicStateSet.of(a.clocks, ((l, z) for l, zs in passed.items() for z in zs))


# hygiene predicates -------------------------------------------------------


def _enabled_union(a: Otaio, loc: str, kinds: frozenset[str]) -> list[Dbm]:
    ctx = _ctx(a, False)
    out: list[Dbm] = []
    for e in a.out_edges(loc):
        if e.action in kinds:
            out.extend(ctx.enabled(e))
    return out


def input_incomplete_states(a: Otaio) -> list[tuple[str, str, str]]:
    """Reachable ``(location, zone, input)`` triples where the input is refused."""
    bad = []
    for loc, z in reach(a):
        for i in sorted(a.inputs):
            en = [
                w
                for e in a.out_edges(loc)
                if e.action == i
                for w in _ctx(a, False).enabled(e)
            ]
            if not fed_includes(en, [z]):
                bad.append((loc, str(z), i))
    return bad


def is_input_complete(a: Otaio) -> bool:
    return not input_incomplete_states(a)


def blocking_states(a: Otaio) -> list[tuple[str, str]]:
    """Reachable states under a non-trivial invariant that cannot escape by an output or internal move."""
    bad = []
    for loc, z in reach(a):
        if a.inv(loc).is_true:
            continue
        inv = _ctx(a, False).inv[loc]
        escape = [w.down().intersect(inv) for w in _enabled_union(a, loc, a.outputs | a.internals)]
        if not fed_includes(escape, [z]):
            bad.append((loc, str(z)))
    return bad


def is_non_blocking(a: Otaio) -> bool:
    return not blocking_states(a)


def is_repeatedly_observable(a: Otaio) -> bool:
    ctx = _ctx(a, False)
    target = [
        (e.source, z) for e in a.edges if e.action in a.observable for z in ctx.enabled(e)
    ]
    co = coreach(a, SymbolicStateSet.of(a.clocks, target))
    return co.includes(reach(a))


# bounded oracles ----------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    """Outcome of a bounded trace-family check; ``witness`` is set on failure."""

    holds: bool
    witness: Trace | None = None
    offending: str | None = None
    clause: str | None = None
    traces_checked: int = 0
    bounded: bool = True

    def to_json(self) -> dict:
        return {
            "verdict": "Conforms" if self.holds else "Violation",
            "witness": None if self.witness is None else str(self.witness),
            "offending": self.offending,
            "clause": self.clause,
            "traces_checked": self.traces_checked,
            "bounded": self.bounded,
        }


def grid_delays(max_delay: Number, grid: Number) -> list[Fraction]:
    g = Fraction(grid)
    if g <= 0:
        raise TiotestError("BAD_ARGUMENT", "grid must be positive")
    n = math.floor(Fraction(max_delay) / g)
    return [g * i for i in range(n + 1)]


Check = Callable[[Trace, SymbolicStateSet, SymbolicStateSet], str | None]


def _walk(
    driver: Otaio,
    follower: Otaio,
    depth: int,
    delays: Sequence[Fraction],
    check: Check,
) -> CheckResult:
    """Depth-first walk over the driver's traces, following them in ``follower``."""
    actions = sorted(driver.observable)
    count = 0

    def rec(prefix: Trace, sd: SymbolicStateSet, sf: SymbolicStateSet) -> CheckResult | None:
        nonlocal count
        for d in delays:
            sd_d = advance(driver, sd, d)
            if sd_d.is_empty():
                break
            sf_d = advance(follower, sf, d)
            sigma = prefix.wait(d)
            count += 1
            bad = check(sigma, sd_d, sf_d)
            if bad is not None:
                return CheckResult(False, sigma, bad)
            if len(sigma) >= depth:
                continue
            for act in actions:
                sd_a = fire(driver, sd_d, act)
                if sd_a.is_empty():
                    continue
                res = rec(sigma.then(act), sd_a, fire(follower, sf_d, act))
                if res is not None:
                    return res
        return None

    res = rec(Trace.empty(), initial_states(driver), initial_states(follower))
    if res is None:
        return CheckResult(True, traces_checked=count)
    return CheckResult(False, res.witness, res.offending, traces_checked=count)


def _same_observables(a: Otaio, b: Otaio) -> None:
    if a.inputs != b.inputs or a.outputs != b.outputs:
        raise TiotestError("INCOMPATIBLE", f"{a.name} and {b.name} have different observable alphabets")


def _out_check(spec_side: Otaio, other: Otaio, horizon: int, spec_is_driver: bool) -> Check:
    def check(sigma: Trace, sd: SymbolicStateSet, sf: SymbolicStateSet) -> str | None:
        s_spec, s_other = (sd, sf) if spec_is_driver else (sf, sd)
        o_spec = obs(spec_side, s_spec, horizon)
        o_other = obs(other, s_other, horizon)
        extra = o_other.outputs - o_spec.outputs
        if extra:
            return min(extra)
        if o_other.delay_bound > o_spec.delay_bound:
            return f"delay {o_other.describe_delays()} exceeds {o_spec.describe_delays()}"
        return None

    return check


def tioco_check(imp: Otaio, spec: Otaio, depth: int = 2, grid: Number = Fraction(1, 2)) -> CheckResult:
    """Bounded check that ``imp`` conforms to ``spec``."""
    _same_observables(imp, spec)
    if not is_input_complete(imp):
        raise TiotestError("PRECONDITION_FAILED", f"{imp.name} is not input-complete")
    if not is_non_blocking(imp):
        raise TiotestError("PRECONDITION_FAILED", f"{imp.name} is not non-blocking")
    m = max(imp.max_const, spec.max_const)
    horizon = default_horizon(imp, spec)
    return _walk(spec, imp, depth, grid_delays(m + 1, grid), _out_check(spec, imp, horizon, True))


def io_refines_check(a: Otaio, b: Otaio, depth: int = 2, grid: Number = Fraction(1, 2)) -> CheckResult:
    """Bounded check that ``a`` refines ``b``: more inputs, fewer outputs and delays."""
    _same_observables(a, b)
    m = max(a.max_const, b.max_const)
    horizon = default_horizon(a, b)
    delays = grid_delays(m + 1, grid)
    res = _walk(b, a, depth, delays, _out_check(b, a, horizon, True))
    if not res.holds:
        return CheckResult(False, res.witness, res.offending, "outputs", res.traces_checked)

    def in_check(sigma: Trace, sa: SymbolicStateSet, sb: SymbolicStateSet) -> str | None:
        missing = obs(b, sb, horizon).inputs - obs(a, sa, horizon).inputs
        return min(missing) if missing else None

    res2 = _walk(a, b, depth, delays, in_check)
    total = res.traces_checked + res2.traces_checked
    if not res2.holds:
        return CheckResult(False, res2.witness, res2.offending, "inputs", total)
    return CheckResult(True, traces_checked=total)


def enumerate_traces(
    a: Otaio, depth: int, delays: Sequence[Fraction], actions: Sequence[str] | None = None
) -> list[Trace]:
    """Traces of ``a`` with at most ``depth`` actions and delays from ``delays``."""
    acts = sorted(a.observable) if actions is None else list(actions)
    out: list[Trace] = []

    def rec(prefix: Trace, s: SymbolicStateSet) -> None:
        for d in delays:
            sd = advance(a, s, d)
            if sd.is_empty():
                break
            sigma = prefix.wait(d)
            out.append(sigma)
            if len(sigma) >= depth:
                continue
            for act in acts:
                sa = fire(a, sd, act)
                if not sa.is_empty():
                    rec(sigma.then(act), sa)

    rec(Trace.empty(), initial_states(a))
    return out

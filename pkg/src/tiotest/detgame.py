"""Determinization of timed automata as a Spoiler/Determinizator safety game.

Spoiler states are estimates of the source automaton's state, given as
configurations ``(location, relation, marker, region)``.  The relation ties
the automaton clocks to ``k`` fresh clocks; the region is the value of the
fresh clocks at which the configuration lives.  Each state carries an exact
part (``under``) and an approximated part (``over``); unsafe states are those
where the approximation may lose behaviours.

Spoiler picks an observable action and a region of the fresh clocks;
Determinizator answers with the set of fresh clocks to reset.  A strategy
for Determinizator yields a deterministic automaton over the fresh clocks.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import TiotestError
from .model import Edge, Otaio, guard_of_zone, make_otaio
from .zones import (
    INF,
    Dbm,
    Relation,
    fed_includes,
    hull_relation,
    le,
    time_successor_regions,
)

DEFAULT_BUDGET = 200_000


def fresh_clocks(k: int) -> tuple[str, ...]:
    return ("y",) if k == 1 else tuple(f"y{i}" for i in range(1, k + 1))


@dataclass(frozen=True)
class Configuration:
    location: str
    relation: Relation
    marker: bool
    region: Dbm

    def __str__(self) -> str:
        mark = "T" if self.marker else "F"
        return f"({self.location}, {self.relation}, {mark}, {self.region})"


@dataclass(frozen=True)
class SpoilerState:
    under: frozenset[Configuration]
    over: frozenset[Configuration]
    base_region: Dbm
    invariant: Dbm
    inv_marker: bool

    def configurations(self) -> list[Configuration]:
        return sorted(self.over, key=str)

    def is_bad(self) -> bool:
        return not self.inv_marker or not any(c.marker for c in self.over)

    def locations(self) -> set[str]:
        return {c.location for c in self.over}


@dataclass(frozen=True)
class DetState:
    parent: SpoilerState
    action: str
    region: Dbm


def _reset_key(r: frozenset[str]) -> tuple:
    return (len(r), sorted(r))


@dataclass
class GameArena:
    source: Otaio
    fresh: tuple[str, ...]
    max_const: int
    initial: SpoilerState
    spoiler_states: list[SpoilerState]
    det_states: list[DetState]
    spoiler_moves: dict[SpoilerState, list[DetState]]
    det_moves: dict[DetState, dict[frozenset[str], SpoilerState]]
    bad: set[SpoilerState]

    @property
    def resources(self) -> tuple[int, int]:
        return (len(self.fresh), self.max_const)

    def index(self) -> dict[SpoilerState, int]:
        return {s: i for i, s in enumerate(self.spoiler_states)}

    def size(self) -> int:
        return len(self.spoiler_states) + len(self.det_states)


@dataclass(frozen=True)
class Strategy:
    choice: dict = field(hash=False)
    name: str = "strategy"

    def __call__(self, d: DetState) -> frozenset[str]:
        return self.choice[d]


# --- construction ----------------------------------------------------------


class GameBuilder:
    """Successor, closure and invariant computations for one source automaton."""

    def __init__(self, a: Otaio, k: int, mb: int, testing: bool = True) -> None:
        if a.observed_clocks:
            raise TiotestError("INCOMPATIBLE", "determinization needs an automaton without observed clocks")
        if k < 1:
            raise TiotestError("BAD_ARGUMENT", "at least one fresh clock is needed")
        self.a = a
        self.mb = mb
        self.exact_inputs = a.inputs if testing else frozenset()
        self.ys = fresh_clocks(k)
        self.xs = a.clocks
        clash = set(self.ys) & set(self.xs)
        if clash:
            raise TiotestError("CLOCK_CLASH", f"fresh clock names {sorted(clash)} already used")
        self.xy = self.xs + self.ys
        self.m = max(a.max_const, mb)
        self.k_extra = {**{x: a.max_const for x in self.xs}, **{y: mb for y in self.ys}}
        self.inv = {loc: a.inv(loc).zone(self.xy) for loc in a.locations}
        self.guard_xy: dict[Edge, Dbm] = {}
        self.guard_x: dict[Edge, Dbm] = {}
        for e in a.edges:
            tgt = a.inv(e.target).zone(self.xs)
            for c in e.resets:
                tgt = tgt.constrain(c, None, le(0)).constrain(None, c, le(0))
            pre = tgt.free(e.resets)
            gx = e.guard.zone(self.xs).intersect(pre)
            # the source invariant counts as part of the guard for exactness
            self.guard_x[e] = gx.intersect(a.inv(e.source).zone(self.xs))
            self.guard_xy[e] = gx.embed(self.xy).intersect(self.inv[e.source])
        self.subsets = sorted(
            (frozenset(c) for n in range(k + 1) for c in itertools.combinations(self.ys, n)),
            key=_reset_key,
        )
        self._steps: dict = {}
        self._elem: dict = {}
        self._taus: dict[Configuration, list[tuple[Configuration, bool]]] = {}
        self._invs: dict[Configuration, Dbm] = {}
        self._states: dict[SpoilerState, SpoilerState] = {}

    def successors_in_time(self, r: Dbm) -> tuple[Dbm, ...]:
        return time_successor_regions(r, self.mb)

    def step(self, c: Configuration, e: Edge, r2: Dbm):
        """Exact target zone of ``e`` from ``c`` at fresh-clock region ``r2`` (before fresh resets)."""
        key = (c.location, c.relation, c.region, e, r2)
        if key in self._steps:
            return self._steps[key]
        out = None
        if r2 in self.successors_in_time(c.region):
            z = c.relation.to_dbm().intersect(r2.embed(self.xy))
            f = z.intersect(self.guard_xy[e])
            if not f.is_empty():
                exact_guard = self.guard_x[e].includes(z.project(self.xs))
                tgt = f.reset(e.resets).intersect(self.inv[e.target])
                if not tgt.is_empty():
                    out = (tgt, exact_guard)
        self._steps[key] = out
        return out

    def elementary_successors(
        self, c: Configuration, action: str, r2: Dbm, resets: frozenset[str]
    ) -> list[Configuration]:
        key = (c, action, r2, resets)
        if key in self._elem:
            return self._elem[key]
        out = []
        for e in self.a.out_edges(c.location):
            if e.action != action:
                continue
            st = self.step(c, e, r2)
            if st is None:
                continue
            z, exact_guard = st
            z = z.reset(resets)
            out.append(
                Configuration(e.target, hull_relation(z, self.m), c.marker and exact_guard, r2.reset(resets))
            )
        self._elem[key] = out
        return out

    def tau_successors(self, c: Configuration) -> list[tuple[Configuration, bool]]:
        if c in self._taus:
            return self._taus[c]
        out = []
        for e in self.a.out_edges(c.location):
            if e.action not in self.a.internals:
                continue
            for r2 in self.successors_in_time(c.region):
                st = self.step(c, e, r2)
                if st is None:
                    continue
                z, exact_guard = st
                rel = hull_relation(z, self.m)
                kept = rel.to_dbm().intersect(r2.embed(self.xy))
                widened = not z.extrapolate(self.k_extra).includes(kept)
                cfg = Configuration(e.target, rel, c.marker and exact_guard and not widened, r2)
                out.append((cfg, widened))
        self._taus[c] = out
        return out

    def close(self, under: Iterable[Configuration], over: Iterable[Configuration]):
        u, o = set(under), set(over) | set(under)
        work = deque([(c, True) for c in u] + [(c, False) for c in o - u])
        while work:
            c, exact = work.popleft()
            for cfg, widened in self.tau_successors(c):
                if exact and not widened:
                    if cfg not in u:
                        u.add(cfg)
                        o.add(cfg)
                        work.append((cfg, True))
                elif cfg not in o:
                    o.add(cfg)
                    work.append((cfg, False))
        return frozenset(u), frozenset(o)

    def induced_invariant(self, c: Configuration) -> Dbm:
        if c not in self._invs:
            z = c.relation.to_dbm().intersect(self.inv[c.location])
            self._invs[c] = z.intersect(c.region.up().embed(self.xy)).project(self.ys)
        return self._invs[c]

    def aggregate(self, under, over, base: Dbm) -> tuple[Dbm, bool]:
        over_inv = [self.induced_invariant(c) for c in over]
        inv = Dbm.universe(self.ys)
        for y in self.ys:
            b = max((z.upper(y) for z in over_inv if not z.is_empty()), default=le(0))
            if b[0] != INF and b <= le(self.mb):
                inv = inv.constrain(y, None, b)
        need = inv.intersect(base.up())
        under_inv = [self.induced_invariant(c) for c in under]
        return inv, fed_includes(under_inv, [need])

    def make_state(self, under, over, base: Dbm) -> SpoilerState:
        u, o = self.close(under, over)
        inv, marker = self.aggregate(u, o, base)
        s = SpoilerState(u, o, base, inv, marker)
        return self._states.setdefault(s, s)

    def initial(self) -> SpoilerState:
        rel = hull_relation(Dbm.zero(self.xy), self.m)
        base = Dbm.zero(self.ys)
        c = Configuration(self.a.initial, rel, True, base)
        return self.make_state([c], [c], base)

    def challenges(self, s: SpoilerState) -> list[tuple[str, Dbm]]:
        out = []
        regions = [r for r in self.successors_in_time(s.base_region) if s.invariant.includes(r)]
        for act in sorted(self.a.observable):
            is_input = act in self.exact_inputs
            for r2 in regions:
                if is_input:
                    succ = [n for c in s.under for n in self.elementary_successors(c, act, r2, frozenset())]
                    if succ and all(n.marker for n in succ):
                        out.append((act, r2))
                else:
                    if any(self.elementary_successors(c, act, r2, frozenset()) for c in s.over):
                        out.append((act, r2))
        return out

    def answer(self, s: SpoilerState, act: str, r2: Dbm, resets: frozenset[str]) -> SpoilerState | None:
        under = [n for c in s.under for n in self.elementary_successors(c, act, r2, resets)]
        src = s.under if act in self.exact_inputs else s.over
        over = [n for c in src for n in self.elementary_successors(c, act, r2, resets)]
        if not over:
            return None
        return self.make_state(under, over, r2.reset(resets))


def elementary_successor(
    a: Otaio, k: int, max_const: int, cfg: Configuration, action: str, region: Dbm, resets: Iterable[str] = ()
) -> list[Configuration]:
    return GameBuilder(a, k, max_const).elementary_successors(cfg, action, region, frozenset(resets))


def tau_closure(a: Otaio, k: int, max_const: int, state: SpoilerState) -> SpoilerState:
    b = GameBuilder(a, k, max_const)
    return b.make_state(state.under, state.over, state.base_region)


def aggregate_invariant(a: Otaio, k: int, max_const: int, state: SpoilerState) -> tuple[Dbm, bool]:
    return GameBuilder(a, k, max_const).aggregate(state.under, state.over, state.base_region)


def initial_configuration(a: Otaio, k: int, max_const: int) -> Configuration:
    ys = fresh_clocks(k)
    m = max(a.max_const, max_const)
    return Configuration(a.initial, hull_relation(Dbm.zero(a.clocks + ys), m), True, Dbm.zero(ys))


def build_game(
    a: Otaio, k: int, max_const: int, budget: int = DEFAULT_BUDGET, testing: bool = True
) -> GameArena:
    """Explore the game arena for ``k`` fresh clocks and maximal constant ``max_const``.

    With ``testing`` set, input challenges are computed from exact
    configurations only and are not offered when they would be approximate.
    Otherwise every action is treated like an output.
    """
    b = GameBuilder(a, k, max_const, testing)
    init = b.initial()
    seen = {init: None}
    queue = deque([init])
    dets: list[DetState] = []
    s_moves: dict[SpoilerState, list[DetState]] = {}
    d_moves: dict[DetState, dict[frozenset[str], SpoilerState]] = {}
    while queue:
        s = queue.popleft()
        s_moves[s] = []
        for act, r2 in b.challenges(s):
            d = DetState(s, act, r2)
            answers = {}
            for rs in b.subsets:
                t = b.answer(s, act, r2, rs)
                if t is None:
                    continue
                answers[rs] = t
                if t not in seen:
                    seen[t] = None
                    queue.append(t)
            if not answers:
                continue
            dets.append(d)
            s_moves[s].append(d)
            d_moves[d] = answers
            if len(seen) + len(dets) > budget:
                raise TiotestError("ARENA_BUDGET_EXCEEDED", f"arena exceeds {budget} states")
    states = list(seen)
    return GameArena(
        source=a,
        fresh=b.ys,
        max_const=max_const,
        initial=init,
        spoiler_states=states,
        det_states=dets,
        spoiler_moves=s_moves,
        det_moves=d_moves,
        bad={s for s in states if s.is_bad()},
    )


# --- solving -----------------------------------------------------------------


def attractor_ranks(g: GameArena) -> tuple[dict[SpoilerState, int], dict[DetState, int]]:
    """Rank of each state in Spoiler's attractor to the bad states (absent means safe)."""
    rs: dict[SpoilerState, int] = {s: 0 for s in g.bad}
    rd: dict[DetState, int] = {}
    level = 0
    while True:
        level += 1
        new_d = {
            d: level
            for d in g.det_states
            if d not in rd and all(t in rs for t in g.det_moves[d].values())
        }
        rd.update(new_d)
        new_s = {}
        for s in g.spoiler_states:
            if s in rs:
                continue
            ranks = [rd[d] for d in g.spoiler_moves[s] if d in rd]
            if ranks:
                new_s[s] = min(ranks)
        rs.update(new_s)
        if not new_d and not new_s:
            return rs, rd


def _reachable_choice(g: GameArena, pick) -> dict[DetState, frozenset[str]]:
    choice: dict[DetState, frozenset[str]] = {}
    seen = {g.initial}
    queue = deque([g.initial])
    while queue:
        s = queue.popleft()
        for d in g.spoiler_moves[s]:
            rs = pick(d)
            choice[d] = rs
            t = g.det_moves[d][rs]
            if t not in seen:
                seen.add(t)
                queue.append(t)
    return choice


@dataclass(frozen=True)
class Solution:
    winning: bool
    losing_spoiler: frozenset[SpoilerState]
    losing_det: frozenset[DetState]
    strategy: Strategy | None


def solve_safety(g: GameArena) -> Solution:
    """Decide the game; the strategy avoids the attractor with the fewest resets."""
    rs, rd = attractor_ranks(g)
    winning = g.initial not in rs
    strategy = None
    if winning:

        def pick(d: DetState) -> frozenset[str]:
            safe = [r for r, t in g.det_moves[d].items() if t not in rs]
            return min(safe, key=_reset_key)

        strategy = Strategy(_reachable_choice(g, pick), "winning")
    return Solution(winning, frozenset(rs), frozenset(rd), strategy)


def late_losing_strategy(g: GameArena) -> Strategy:
    """Delay reaching bad states as long as possible; ties prefer more resets."""
    rs, _ = attractor_ranks(g)
    top = float("inf")

    def pick(d: DetState) -> frozenset[str]:
        opts = g.det_moves[d]
        return min(opts, key=lambda r: (-rs.get(opts[r], top), -len(r), sorted(r)))

    return Strategy(_reachable_choice(g, pick), "late")


def reset_fresh_strategy(g: GameArena) -> Strategy:
    """Always reset the fresh clock holding the largest value."""

    def pick(d: DetState) -> frozenset[str]:
        v = d.region.sample()
        y = min(g.fresh, key=lambda c: (-v[c], c))
        rs = frozenset([y])
        if rs in g.det_moves[d]:
            return rs
        return min(g.det_moves[d], key=_reset_key)

    return Strategy(_reachable_choice(g, pick), "reset-fresh")


def choose_strategy(g: GameArena, name: str = "auto") -> Strategy:
    if name == "auto":
        sol = solve_safety(g)
        return sol.strategy if sol.winning else late_losing_strategy(g)
    if name == "winning":
        sol = solve_safety(g)
        if not sol.winning:
            raise TiotestError("NO_WINNING_STRATEGY", "Determinizator has no winning strategy")
        return sol.strategy
    if name == "late":
        return late_losing_strategy(g)
    if name == "reset-fresh":
        return reset_fresh_strategy(g)
    raise TiotestError("BAD_ARGUMENT", f"unknown strategy {name!r}")


# --- extraction ----------------------------------------------------------------


@dataclass(frozen=True)
class Extraction:
    automaton: Otaio
    state_of: dict = field(hash=False)
    exact: bool


def extract_automaton(g: GameArena, strategy: Strategy, name: str | None = None) -> Extraction:
    """Deterministic automaton over the fresh clocks following ``strategy``."""
    order = [g.initial]
    ids = {g.initial: "q0"}
    edges = []
    i = 0
    while i < len(order):
        s = order[i]
        i += 1
        for d in g.spoiler_moves[s]:
            rs = strategy(d)
            t = g.det_moves[d][rs]
            if t not in ids:
                ids[t] = f"q{len(order)}"
                order.append(t)
            edges.append(Edge(ids[s], guard_of_zone(d.region), d.action, rs, ids[t]))
    a = g.source
    invariants = {ids[s]: guard_of_zone(s.invariant) for s in order}
    accept = None
    if a.accept is not None:
        accept = [ids[s] for s in order if s.locations() & a.accept]
    aut = make_otaio(
        name or f"Det({a.name})",
        [ids[s] for s in order],
        "q0",
        inputs=a.inputs,
        outputs=a.outputs,
        proper=g.fresh,
        max_const=g.max_const,
        invariants={k: v for k, v in invariants.items() if not v.is_true},
        edges=edges,
        accept=accept,
    )
    exact = not any(s.is_bad() for s in order)
    return Extraction(aut, {ids[s]: s for s in order}, exact)


def determinize(
    a: Otaio, k: int, max_const: int, strategy: str = "auto", budget: int = DEFAULT_BUDGET
) -> Extraction:
    g = build_game(a, k, max_const, budget)
    return extract_automaton(g, choose_strategy(g, strategy))


def is_deterministic(a: Otaio) -> bool:
    """No internal actions, and per location and action the guards are pairwise disjoint."""
    if a.internals and any(e.action in a.internals for e in a.edges):
        return False
    for loc in a.locations:
        by_act: dict[str, list[Dbm]] = {}
        for e in a.out_edges(loc):
            by_act.setdefault(e.action, []).append(e.guard.zone(a.clocks).intersect(a.inv(loc).zone(a.clocks)))
        for zs in by_act.values():
            for z1, z2 in itertools.combinations(zs, 2):
                if not z1.intersect(z2).is_empty():
                    return False
    return True


# --- output ----------------------------------------------------------------------


def _box(s: SpoilerState) -> str:
    lines = []
    for c in s.configurations():
        tag = "" if c in s.under else " +"
        lines.append(f"{c}{tag}")
    lines.append(f"inv {s.invariant} {'T' if s.inv_marker else 'F'}")
    return "\\n".join(lines)


def arena_to_dot(g: GameArena) -> str:
    idx = g.index()
    out = ["digraph game {", "  rankdir=LR;"]
    for s in g.spoiler_states:
        style = ', style=filled, fillcolor="gray"' if s in g.bad else ""
        out.append(f'  s{idx[s]} [shape=box, label="{_box(s)}"{style}];')
    for j, d in enumerate(g.det_states):
        out.append(f'  d{j} [shape=ellipse, label="{d.action}, {d.region}"];')
        out.append(f"  s{idx[d.parent]} -> d{j};")
        for rs, t in sorted(g.det_moves[d].items(), key=lambda p: _reset_key(p[0])):
            out.append(f'  d{j} -> s{idx[t]} [label="{{{",".join(sorted(rs))}}}"];')
    out.append("}")
    return "\n".join(out) + "\n"


def strategy_to_json(g: GameArena, strategy: Strategy) -> str:
    idx = g.index()
    rows = [
        {
            "state": f"s{idx[d.parent]}",
            "action": d.action,
            "region": str(d.region),
            "resets": sorted(rs),
        }
        for d, rs in strategy.choice.items()
    ]
    rows.sort(key=lambda r: (int(r["state"][1:]), r["action"], r["region"]))
    return json.dumps({"strategy": strategy.name, "moves": rows}, indent=2)


__all__: Sequence[str] = [
    "Configuration",
    "GameBuilder",
    "aggregate_invariant",
    "elementary_successor",
    "initial_configuration",
    "tau_closure",
    "DetState",
    "Extraction",
    "GameArena",
    "Solution",
    "SpoilerState",
    "Strategy",
    "arena_to_dot",
    "attractor_ranks",
    "build_game",
    "choose_strategy",
    "determinize",
    "extract_automaton",
    "fresh_clocks",
    "is_deterministic",
    "late_losing_strategy",
    "reset_fresh_strategy",
    "solve_safety",
    "strategy_to_json",
]

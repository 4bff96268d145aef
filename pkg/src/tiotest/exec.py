"""Running test cases against implementation models.

The harness simulates the closed system made of a test case and an
implementation on a discrete time grid.  The test case is deterministic;
implementation non-determinism is resolved by a seeded random generator.
"""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .errors import TiotestError
from .model import Edge, Otaio
from .semantics import (
    SymbolicStateSet,
    Trace,
    advance,
    fire,
    format_delay,
    grid_delays,
    initial_states,
    is_input_complete,
    is_non_blocking,
)
from .testgen import FAIL, NONE, TestCase, verdict_of_trace

DELAY_POLICIES = ("earliest", "random-on-grid", "latest-safe")


@dataclass(frozen=True)
class SchedulerPolicy:
    delay_choice: str = "earliest"
    output_choice: tuple[str, ...] = ()
    seed: int = 0
    grid: Fraction = Fraction(1, 2)
    max_steps: int = 1000
    internal_budget: int = 64

    def __post_init__(self) -> None:
        if self.delay_choice not in DELAY_POLICIES:
            raise TiotestError("BAD_ARGUMENT", f"unknown delay policy {self.delay_choice!r}")
        object.__setattr__(self, "grid", Fraction(self.grid))
        if self.grid <= 0:
            raise TiotestError("BAD_ARGUMENT", "grid must be positive")

    def with_seed(self, seed: int) -> SchedulerPolicy:
        return SchedulerPolicy(
            self.delay_choice, self.output_choice, seed, self.grid, self.max_steps, self.internal_budget
        )


@dataclass(frozen=True)
class ExecutionLog:
    trace: Trace
    verdict: str
    steps: tuple[tuple[str, str], ...]
    diagnostics: tuple[str, ...] = ()

    def to_lines(self) -> str:
        rows = [json.dumps({"chooser": who, "event": ev}) for who, ev in self.steps]
        rows += [json.dumps({"diagnostic": d}) for d in self.diagnostics]
        rows.append(json.dumps({"trace": str(self.trace), "verdict": self.verdict}))
        return "\n".join(rows) + "\n"


Valuation = dict


def _enabled(a: Otaio, e: Edge, v: Mapping[str, Fraction]) -> bool:
    if not e.guard.zone(a.clocks).contains_point(v):
        return False
    if not a.inv(e.source).zone(a.clocks).contains_point(v):
        return False
    return a.inv(e.target).zone(a.clocks).contains_point(_apply(v, e.resets))


def _apply(v: Mapping[str, Fraction], resets) -> Valuation:
    return {c: (Fraction(0) if c in resets else x) for c, x in v.items()}


def _shift(v: Mapping[str, Fraction], d: Fraction) -> Valuation:
    return {c: x + d for c, x in v.items()}


def check_pair(tc: TestCase, imp: Otaio) -> None:
    a = tc.automaton
    if imp.inputs != a.outputs or imp.outputs != a.inputs:
        raise TiotestError("INCOMPATIBLE", "implementation alphabet does not mirror the test case")
    if not is_input_complete(imp):
        raise TiotestError("PRECONDITION_FAILED", f"{imp.name} is not input-complete")
    if not is_non_blocking(imp):
        raise TiotestError("PRECONDITION_FAILED", f"{imp.name} is not non-blocking")


def execute_once(tc: TestCase, imp: Otaio, policy: SchedulerPolicy, checked: bool = False) -> ExecutionLog:
    """One run of ``tc`` against ``imp`` until a verdict other than None."""
    if not checked:
        check_pair(tc, imp)
    a = tc.automaton
    rng = random.Random(policy.seed)
    script = list(policy.output_choice)
    tl, tv = a.initial, {c: Fraction(0) for c in a.clocks}
    il, iv = imp.initial, {c: Fraction(0) for c in imp.clocks}
    items: list = [Fraction(0)]
    steps: list[tuple[str, str]] = []
    diags: list[str] = []
    internal_here = 0
    verdict = tc.verdict_at(tl, tv)
    for _ in range(policy.max_steps):
        if verdict != NONE:
            break
        tester = []
        for e in a.out_edges(tl):
            if e.action in a.outputs and _enabled(a, e, tv):
                answers = [f for f in imp.out_edges(il) if f.action == e.action and _enabled(imp, f, iv)]
                if answers:
                    tester.append((e, answers))
        outputs = []
        for f in imp.out_edges(il):
            if f.action in imp.outputs and _enabled(imp, f, iv):
                catch = [e for e in a.out_edges(tl) if e.action == f.action and _enabled(a, e, tv)]
                if catch:
                    outputs.append((f, catch[0]))
        internal = []
        if internal_here < policy.internal_budget:
            internal = [f for f in imp.out_edges(il) if f.action in imp.internals and _enabled(imp, f, iv)]
        elif not diags or diags[-1] != "internal budget":
            diags.append("internal budget")
        nv = _shift(iv, policy.grid)
        can_tick = imp.inv(il).zone(imp.clocks).contains_point(nv)

        events: list[tuple[str, object]] = [("tester", t) for t in tester] + [("imp", o) for o in outputs]
        kind = policy.delay_choice
        choice = None
        if kind == "random-on-grid":
            pool = events + [("imp", ("tau", f)) for f in internal]
            if can_tick:
                pool.append(("tick", None))
            if pool:
                choice = pool[rng.randrange(len(pool))]
        else:
            if kind == "latest-safe" and can_tick:
                if tc.verdict_at(tl, _shift(tv, policy.grid)) == NONE:
                    choice = ("tick", None)
            if choice is None and events:
                scripted = [ev for ev in events if ev[0] == "tester" and script and ev[1][0].action == script[0]]
                if scripted:
                    choice = scripted[0]
                    script.pop(0)
                else:
                    choice = events[rng.randrange(len(events))]
            if choice is None and internal:
                choice = ("imp", ("tau", internal[rng.randrange(len(internal))]))
            if choice is None and can_tick:
                choice = ("tick", None)
        if choice is None:
            raise TiotestError("DEADLOCK", f"no move at {tl}/{il} after {Trace.of(*items)}")

        who, ev = choice
        if who == "tick":
            tv, iv = _shift(tv, policy.grid), nv
            items.append(policy.grid)
            steps.append(("tester", f"delay {format_delay(policy.grid)}"))
            internal_here = 0
        elif who == "tester":
            e, answers = ev
            f = answers[rng.randrange(len(answers))]
            tl, tv = e.target, _apply(tv, e.resets)
            il, iv = f.target, _apply(iv, f.resets)
            items.append(e.action)
            steps.append(("tester", f"{e.action}!"))
        elif isinstance(ev, tuple) and ev[0] == "tau":
            f = ev[1]
            il, iv = f.target, _apply(iv, f.resets)
            steps.append(("implementation", f.action))
            internal_here += 1
        else:
            f, e = ev
            il, iv = f.target, _apply(iv, f.resets)
            tl, tv = e.target, _apply(tv, e.resets)
            items.append(f.action)
            steps.append(("implementation", f"{f.action}!"))
        verdict = tc.verdict_at(tl, tv)
    else:
        if verdict == NONE:
            diags.append("step limit")
    return ExecutionLog(Trace.of(*items), verdict, tuple(steps), tuple(diags))


def derive_seed(seed: int, i: int) -> int:
    return random.Random(seed * 1_000_003 + i).getrandbits(64)


def execute_batch(tc: TestCase, imp: Otaio, policy: SchedulerPolicy, n: int) -> dict[str, int]:
    """Verdict histogram over ``n`` runs with seeds derived from the policy seed."""
    if n <= 0:
        return {}
    check_pair(tc, imp)
    counts: Counter[str] = Counter()
    for i in range(n):
        log = execute_once(tc, imp, policy.with_seed(derive_seed(policy.seed, i)), checked=True)
        counts[log.verdict] += 1
    return dict(sorted(counts.items()))


@dataclass(frozen=True)
class FailsResult:
    found: bool
    witness: Trace | None = None
    explored: int = 0


def fails_check(tc: TestCase, imp: Otaio, depth: int = 3, grid=Fraction(1, 2)) -> FailsResult:
    """Search traces of both ``imp`` and ``tc`` (bounded) that end in a Fail verdict."""
    check_pair(tc, imp)
    a = tc.automaton
    horizon = max(a.max_const, imp.max_const) + 1
    delays = grid_delays(horizon, grid)
    count = 0

    def rec(prefix: Trace, tl: str, tv: Valuation, s: SymbolicStateSet) -> Trace | None:
        nonlocal count
        for d in delays:
            sd = advance(imp, s, d)
            if sd.is_empty():
                break
            sigma = prefix.wait(d)
            vd = _shift(tv, d)
            count += 1
            verdict = tc.verdict_at(tl, vd)
            if verdict == FAIL:
                return sigma
            if verdict != NONE or len(sigma) >= depth:
                continue
            for e in sorted(a.out_edges(tl), key=lambda e: (e.action, str(e.guard))):
                if not _enabled(a, e, vd):
                    continue
                si = fire(imp, sd, e.action)
                if si.is_empty():
                    continue
                w = rec(sigma.then(e.action), e.target, _apply(vd, e.resets), si)
                if w is not None:
                    return w
        return None

    w = rec(Trace.empty(), a.initial, {c: Fraction(0) for c in a.clocks}, initial_states(imp))
    if w is not None:
        assert verdict_of_trace(tc, w) == FAIL
    return FailsResult(w is not None, w, count)

"""Test generation: product with a test purpose, determinization, verdicts, selection.

The pipeline is

    spec x TP  ->  DP (deterministic, via the game)  ->  verdicts
               ->  TC' (mirrored, invariants moved to guards, fail edges)
               ->  TC  (edges pruned to states that can still reach Pass)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .compose import product
from .detgame import DEFAULT_BUDGET, build_game, choose_strategy, extract_automaton, is_deterministic, solve_safety
from .errors import TiotestError
from .model import (
    Edge,
    Issue,
    Otaio,
    ValidationReport,
    complement_guards,
    covers,
    guard_of_zone,
    is_trap,
    make_otaio,
    validate_otaio,
)
from .semantics import SymbolicStateSet, Trace, coreach
from .zones import Dbm, Number, fed_disjoint, fed_includes, fed_intersect, fed_subtract, le

PASS = "Pass"
FAIL = "Fail"
INCONC = "Inconc"
NONE = "None"
VERDICTS = (PASS, NONE, FAIL, INCONC)
FAIL_LOCATION = "fail"


# --- test purposes ----------------------------------------------------------


@dataclass(frozen=True)
class TestPurpose:
    automaton: Otaio
    accept: frozenset[str]

    __test__ = False

    @staticmethod
    def of(a: Otaio) -> TestPurpose:
        return TestPurpose(a, a.accept or frozenset())


def validate_test_purpose(tp: TestPurpose | Otaio, spec: Otaio) -> ValidationReport:
    tp = tp if isinstance(tp, TestPurpose) else TestPurpose.of(tp)
    a = tp.automaton
    base = validate_otaio(a)
    errors = list(base.errors)
    warnings = [w for w in base.warnings if w.code != "ACCEPT_NOT_TRAP"]
    if any(not g.is_true for _, g in a.invariants):
        errors.append(Issue("NOT_COMPLETE", "test purpose invariants must be true"))
    else:
        for loc in a.locations:
            for act in sorted(a.actions):
                zs = [e.guard.zone(a.clocks) for e in a.out_edges(loc) if e.action == act]
                if not covers(zs, a.clocks):
                    errors.append(Issue("NOT_COMPLETE", f"action {act} not always enabled", loc))
    if (a.inputs, a.outputs, a.internals) != (spec.inputs, spec.outputs, spec.internals):
        errors.append(Issue("ALPHABET_MISMATCH", "test purpose must use the specification's actions"))
    if set(a.observed_clocks) != set(spec.proper_clocks):
        errors.append(Issue("OBSERVED_CLOCKS", "test purpose must observe exactly the specification's clocks"))
    if set(a.proper_clocks) & set(spec.proper_clocks):
        errors.append(Issue("CLOCK_OVERLAP", "test purpose proper clocks clash with the specification"))
    if not tp.accept:
        errors.append(Issue("NO_ACCEPT", "test purpose has no accept location"))
    for loc in sorted(tp.accept):
        if loc not in a.locations:
            errors.append(Issue("UNKNOWN_LOCATION", f"accept location {loc} is not declared", loc))
        elif not is_trap(a, loc):
            errors.append(Issue("ACCEPT_NOT_TRAP", "accept location has an edge leaving it", loc))
    return ValidationReport(tuple(errors), tuple(warnings))


def build_pipeline_product(spec: Otaio, tp: TestPurpose | Otaio) -> Otaio:
    tp = tp if isinstance(tp, TestPurpose) else TestPurpose.of(tp)
    report = validate_test_purpose(tp, spec)
    if not report.ok:
        codes = ", ".join(sorted(report.codes()))
        raise TiotestError("PRECONDITION_FAILED", f"invalid test purpose: {codes}")
    p = product(spec, tp.automaton.replace(accept=tp.accept))
    return p.replace(proper_clocks=p.clocks, observed_clocks=())


# --- determinization ---------------------------------------------------------


@dataclass(frozen=True)
class Determinized:
    automaton: Otaio
    report: dict = field(hash=False)


def determinize_for_testing(
    p: Otaio, k: int, max_const: int, strategy: str = "auto", budget: int = DEFAULT_BUDGET
) -> Determinized:
    """Deterministic automaton with accept marking, plus a report on exactness."""
    if is_deterministic(p):
        dp = p.replace(name=f"D{p.name}", internals=frozenset())
        return Determinized(dp, {"deterministic_input": True, "winning": True, "exact": True, "approximate": {}})
    g = build_game(p, k, max_const, budget)
    sol = solve_safety(g)
    chosen = choose_strategy(g, strategy)
    ex = extract_automaton(g, chosen, f"DP({p.name})")
    approx = {}
    for q, s in ex.state_of.items():
        if s.is_bad():
            approx[q] = {
                "invariant_exact": s.inv_marker,
                "configurations": [
                    {"configuration": str(c), "exact": c in s.under} for c in s.configurations() if not c.marker
                ],
            }
    report = {
        "deterministic_input": False,
        "resources": {"clocks": k, "max_const": max_const},
        "winning": sol.winning,
        "strategy": chosen.name,
        "exact": not approx,
        "arena": {"spoiler_states": len(g.spoiler_states), "det_states": len(g.det_states)},
        "approximate": approx,
    }
    return Determinized(ex.automaton, report)


# --- verdicts -----------------------------------------------------------------


@dataclass(frozen=True)
class VerdictMap:
    """Per location, disjoint zones covering all valuations, each with a verdict."""

    clocks: tuple[str, ...]
    entries: tuple[tuple[str, tuple[tuple[Dbm, str], ...]], ...]

    def table(self) -> dict[str, tuple[tuple[Dbm, str], ...]]:
        return dict(self.entries)

    def locations(self) -> list[str]:
        return [loc for loc, _ in self.entries]

    def zones(self, loc: str, kind: str) -> list[Dbm]:
        return [z for z, k in self.table().get(loc, ()) if k == kind]

    def verdict_at(self, loc: str, valuation: Mapping[str, Number]) -> str:
        for z, k in self.table()[loc]:
            if z.contains_point(valuation):
                return k
        raise TiotestError("INTERNAL", f"no verdict covers {loc} at {dict(valuation)}")

    def restrict(self, locs: Iterable[str]) -> VerdictMap:
        keep = set(locs)
        return VerdictMap(self.clocks, tuple((l, e) for l, e in self.entries if l in keep))

    def is_partition(self) -> bool:
        universe = [Dbm.universe(self.clocks)]
        for _, items in self.entries:
            zs = [z for z, _ in items]
            for i, z1 in enumerate(zs):
                if any(not z1.intersect(z2).is_empty() for z2 in zs[i + 1 :]):
                    return False
            if not fed_includes(zs, universe):
                return False
        return True

    def describe(self) -> dict[str, dict[str, list[str]]]:
        out: dict[str, dict[str, list[str]]] = {}
        for loc, items in self.entries:
            d: dict[str, list[str]] = {}
            for z, k in items:
                d.setdefault(k, []).append(str(z))
            out[loc] = {k: sorted(v) for k, v in sorted(d.items())}
        return out


def _tag(zs: Sequence[Dbm], kind: str) -> list[tuple[Dbm, str]]:
    return [(z, kind) for z in fed_disjoint(zs)]


def compute_verdicts(dp: Otaio, accept: Iterable[str] | None = None, fail_location: str | None = None) -> VerdictMap:
    acc = set(dp.accept or ()) if accept is None else set(accept)
    clocks = dp.clocks
    universe = Dbm.universe(clocks)
    inv = {loc: dp.inv(loc).zone(clocks) for loc in dp.locations}
    pass_set = SymbolicStateSet.of(clocks, [(loc, inv[loc]) for loc in dp.locations if loc in acc])
    co = coreach(dp, pass_set)
    entries = []
    for loc in dp.locations:
        passed = [inv[loc]] if loc in acc else []
        undecided = fed_subtract(co.zones(loc), passed)
        fail = universe.subtract(inv[loc])
        inconc = fed_subtract([universe], passed + undecided + fail)
        items = _tag(passed, PASS) + _tag(undecided, NONE) + _tag(fail, FAIL) + _tag(inconc, INCONC)
        entries.append((loc, tuple(items)))
    if fail_location is not None:
        entries.append((fail_location, ((universe, FAIL),)))
    return VerdictMap(clocks, tuple(entries))


# --- test cases ----------------------------------------------------------------


@dataclass(frozen=True)
class TestCase:
    automaton: Otaio
    verdicts: VerdictMap
    fail_location: str = FAIL_LOCATION

    __test__ = False

    def verdict_at(self, loc: str, valuation: Mapping[str, Number]) -> str:
        return self.verdicts.verdict_at(loc, valuation)


def _fresh_name(base: str, taken: Iterable[str]) -> str:
    taken = set(taken)
    name = base
    while name in taken:
        name += "_"
    return name


def build_tc_prime(dp: Otaio, accept: Iterable[str] | None = None) -> TestCase:
    """Mirror ``dp``, move invariants into guards and add fail edges for unexpected outputs."""
    clocks = dp.clocks
    fail = _fresh_name(FAIL_LOCATION, dp.locations)
    edges: list[Edge] = []
    for loc in dp.locations:
        inv = dp.inv(loc).zone(clocks)
        for e in dp.out_edges(loc):
            z = e.guard.zone(clocks).intersect(inv)
            if not z.is_empty():
                edges.append(Edge(loc, guard_of_zone(z), e.action, e.resets, e.target))
        for act in sorted(dp.outputs):
            guards = [e.guard for e in dp.out_edges(loc) if e.action == act]
            for g in complement_guards(guards, clocks):
                z = g.zone(clocks).intersect(inv)
                if not z.is_empty():
                    edges.append(Edge(loc, guard_of_zone(z), act, frozenset(clocks), fail))
    tc = make_otaio(
        f"TC'({dp.name})",
        list(dp.locations) + [fail],
        dp.initial,
        inputs=dp.outputs,
        outputs=dp.inputs,
        proper=clocks,
        max_const=dp.max_const,
        edges=edges,
        accept=dp.accept if accept is None else accept,
    )
    verdicts = compute_verdicts(dp, accept, fail)
    result = TestCase(tc, verdicts, fail)
    _check_input_complete_at_none(result)
    return result


def _check_input_complete_at_none(tc: TestCase) -> None:
    a = tc.automaton
    for loc in a.locations:
        undecided = tc.verdicts.zones(loc, NONE)
        if not undecided:
            continue
        for act in a.inputs:
            en = [e.guard.zone(a.clocks) for e in a.out_edges(loc) if e.action == act]
            if not fed_includes(en, undecided):
                raise TiotestError("INTERNAL", f"test case refuses {act} in a None state of {loc}")


def _preimage(e: Edge, target: Sequence[Dbm]) -> list[Dbm]:
    out = []
    for z in target:
        for c in e.resets:
            z = z.constrain(c, None, le(0)).constrain(None, c, le(0))
        if not z.is_empty():
            out.append(z.free(e.resets))
    return out


def select_tc(tc: TestCase) -> TestCase:
    """Keep only moves made from None states; tester outputs must lead to None or Pass."""
    a, vm = tc.automaton, tc.verdicts
    clocks = a.clocks
    edges: list[Edge] = []
    for e in a.edges:
        if e.source == tc.fail_location:
            edges.append(e)
            continue
        zs = fed_intersect([e.guard.zone(clocks)], vm.zones(e.source, NONE))
        if e.action in a.outputs:
            good = vm.zones(e.target, NONE) + vm.zones(e.target, PASS)
            zs = fed_intersect(zs, _preimage(e, good))
        for z in fed_disjoint(zs):
            edges.append(Edge(e.source, guard_of_zone(z), e.action, e.resets, e.target))
    reach = {a.initial}
    frontier = [a.initial]
    while frontier:
        loc = frontier.pop()
        for e in edges:
            if e.source == loc and e.target not in reach:
                reach.add(e.target)
                frontier.append(e.target)
    locs = [l for l in a.locations if l in reach]
    edges = [e for e in edges if e.source in reach]
    sel = a.replace(
        name=a.name.replace("TC'", "TC", 1),
        locations=tuple(locs),
        edges=tuple(edges),
        accept=None if a.accept is None else frozenset(a.accept) & reach,
    )
    return TestCase(sel, vm.restrict(locs), tc.fail_location)


def verdict_of_trace(tc: TestCase, trace: Trace) -> str:
    """Replay ``trace`` on the deterministic test case and return the verdict reached."""
    a = tc.automaton
    loc = a.initial
    v = {c: Fraction(0) for c in a.clocks}
    for i, d in enumerate(trace.delays):
        v = {c: x + d for c, x in v.items()}
        if i == len(trace.actions):
            break
        act = trace.actions[i]
        nxt = [e for e in a.out_edges(loc) if e.action == act and e.guard.zone(a.clocks).contains_point(v)]
        if not nxt:
            raise TiotestError("TRACE_NOT_IN_TC", f"{trace} leaves the test case at {loc} on {act}")
        e = nxt[0]
        loc = e.target
        v = {c: (Fraction(0) if c in e.resets else x) for c, x in v.items()}
    return tc.verdict_at(loc, v)


# --- pipeline -------------------------------------------------------------------


@dataclass(frozen=True)
class Pipeline:
    product: Otaio
    dp: Otaio
    tc_prime: TestCase
    tc: TestCase
    report: dict = field(hash=False)


def generate_test_case(
    spec: Otaio,
    tp: TestPurpose | Otaio,
    k: int,
    max_const: int,
    strategy: str = "auto",
    budget: int = DEFAULT_BUDGET,
) -> Pipeline:
    p = build_pipeline_product(spec, tp)
    det = determinize_for_testing(p, k, max_const, strategy, budget)
    tc_prime = build_tc_prime(det.automaton)
    tc = select_tc(tc_prime)
    report = dict(det.report)
    # the determinized automaton over-approximates the product, so the
    # test case is always sound; strictness and precision need exactness
    report["soundness"] = "sound"
    report["strict_and_precise"] = bool(det.report.get("exact"))
    return Pipeline(p, det.automaton, tc_prime, tc, report)

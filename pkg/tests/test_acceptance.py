"""The twelve acceptance criteria, one test each.

Every test records a PASS/FAIL line that is repeated in the terminal summary.
"""

from __future__ import annotations

import random
import time
from fractions import Fraction

import pytest

from randgen import (
    brute_force_verdict,
    conformant_mutant,
    grid,
    product_trace_mismatch,
    random_compatible_pair,
    random_dp,
    random_resetting_spec,
    random_spec,
    two_step_purpose,
    widening_mutants,
    witness_violates,
)
from tiotest.catalog import imp1, imp2, imps_spec, running_spec, running_tp
from tiotest.compose import parallel_product
from tiotest.detgame import Configuration, build_game, solve_safety
from tiotest.errors import TiotestError
from tiotest.exec import SchedulerPolicy, execute_batch, fails_check
from tiotest.model import Otaio, edge, make_otaio, parse_guard
from tiotest.semantics import Trace, after, initial_states, io_refines_check, tioco_check, trace_of
from tiotest.testgen import FAIL, INCONC, NONE, PASS, build_pipeline_product, compute_verdicts, generate_test_case, verdict_of_trace
from tiotest.zones import Dbm, fed_equal, fed_includes, hull_relation, induced_guard, le, lt

SEED = 20240611
N_SPECS = 20
N_FAMILY = 8
RUNS = 200


def _run(record, number: int, title: str, check) -> None:
    try:
        ok, detail = check()
    except Exception as exc:  # recorded, then re-raised for pytest
        record(number, title, False, f"{type(exc).__name__}: {exc}")
        raise
    record(number, title, ok, detail)
    assert ok, detail


def _zone(text: str, clocks: tuple[str, ...]) -> Dbm:
    return parse_guard(text).zone(clocks)


# 1 ----------------------------------------------------------------------------


def test_01_trace_algebra(acceptance_line):
    def check():
        first = trace_of([1, "tau", 2, "a", 2, "tau"], ["tau"])
        second = trace_of([1, "tau", 2, "a"], ["tau"])
        ok = (
            first == Trace((3, 2), ("a",))
            and second == Trace((3, 0), ("a",))
            and str(first) == "3.a.2"
            and first == Trace.parse("3.a.2")
        )
        return ok, f"{first} and {second}"

    _run(acceptance_line, 1, "trace algebra", check)


# 2 ----------------------------------------------------------------------------


def _hand_product() -> Otaio:
    """Product of the running example, transcribed by hand with primed location names."""
    return make_otaio(
        "expected",
        ["l0p0", "l1p1", "l2p4", "l3p4", "l4p4", "l5p1", "l6p2", "l7p3", "l8Acc"],
        "l0p0",
        inputs=["a"],
        outputs=["b"],
        internals=["tau"],
        proper=["x"],
        max_const=2,
        invariants={"l0p0": "x<=1", "l2p4": "x<=1", "l3p4": "x<=1", "l6p2": "x=0", "l7p3": "x=0"},
        edges=[
            edge("l0p0", "x=1", "tau", [], "l1p1"),
            edge("l1p1", "x>1 && x<2", "a", ["x"], "l2p4"),
            edge("l2p4", "x=0", "b", [], "l3p4"),
            edge("l3p4", "true", "b", [], "l4p4"),
            edge("l2p4", "x=1", "tau", ["x"], "l2p4"),
            edge("l0p0", "x=1", "tau", ["x"], "l5p1"),
            edge("l5p1", "x<1", "a", ["x"], "l6p2"),
            edge("l6p2", "true", "b", [], "l7p3"),
            edge("l7p3", "true", "b", [], "l8Acc"),
        ],
        accept=["l8Acc"],
    )


def _canonical(a: Otaio) -> tuple:
    """Name-free form: locations numbered in BFS order over sorted edge labels."""

    def label(e) -> tuple:
        return (str(e.guard), e.action, tuple(sorted(e.resets)))

    order = {a.initial: 0}
    queue = [a.initial]
    while queue:
        loc = queue.pop(0)
        for e in sorted(a.out_edges(loc), key=label):
            if e.target not in order:
                order[e.target] = len(order)
                queue.append(e.target)
    edges = sorted((order[e.source], label(e), order[e.target]) for e in a.edges)
    invs = sorted((order[loc], str(g)) for loc, g in a.invariants)
    acc = sorted(order[loc] for loc in a.accept or ())
    return len(order), len(a.locations), edges, invs, acc


def test_02_product_golden(acceptance_line):
    def check():
        p = build_pipeline_product(running_spec(), running_tp())
        expected = _hand_product()
        same = _canonical(p) == _canonical(expected)
        acc_names = sorted(p.accept)
        return same and len(p.locations) == 9 and len(acc_names) == 1, f"{len(p.locations)} locations, accept {acc_names}"

    _run(acceptance_line, 2, "product golden", check)


# 3 ----------------------------------------------------------------------------


def test_03_game_golden(acceptance_line):
    def check():
        p = build_pipeline_product(running_spec(), running_tp())
        g = build_game(p, 1, 2)
        ys = ("y",)

        def cfg(loc, rel, marker, region):
            return Configuration(loc, hull_relation(_diff(rel), 2), marker, _zone(region, ys))

        init = {
            cfg("l0|p0", "x-y=0", True, "y=0"),
            cfg("l1|p1", "x-y=0", True, "y=1"),
            cfg("l5|p1", "x-y=-1", True, "y=1"),
        }
        ok_init = set(g.initial.over) == init and set(g.initial.under) == init
        gray = None
        for d in g.spoiler_moves[g.initial]:
            if d.action == "a" and d.region == _zone("y>1 && y<2", ys):
                gray = g.det_moves[d].get(frozenset({"y"}))
        approx = Configuration("l2|p4", hull_relation(_diff("x-y<-2"), 2), False, _zone("y>2", ys))
        ok_gray = gray is not None and approx in gray.over and approx not in gray.under
        exact_part = {
            cfg("l6|p2", "x-y=0", True, "y=0"),
            cfg("l2|p4", "x-y=0", True, "y=0"),
            cfg("l2|p4", "x-y=-1", True, "y=1"),
            cfg("l2|p4", "x-y=-2", True, "y=2"),
        }
        ok_gray = ok_gray and set(gray.under) == exact_part and not gray.inv_marker
        winning = solve_safety(g).winning
        detail = f"initial {len(g.initial.over)} configurations, gray state found {ok_gray}, winning {winning}"
        return ok_init and ok_gray and not winning, detail

    _run(acceptance_line, 3, "game golden", check)


def _diff(text: str) -> Dbm:
    """Zone over (x, y) from ``x-y<c``, ``x-y=c`` or ``lo<x-y<hi``."""
    z = Dbm.universe(("x", "y"))
    body = text.replace(" ", "")
    if "=" in body and "<" not in body:
        c = int(body.split("=")[1])
        return z.constrain("x", "y", le(c)).constrain("y", "x", le(-c))
    parts = body.split("x-y")
    if parts[0]:
        lo = int(parts[0].rstrip("<="))
        z = z.constrain("y", "x", le(-lo) if parts[0].endswith("<=") else lt(-lo))
    if parts[1]:
        hi = int(parts[1].lstrip("<="))
        z = z.constrain("x", "y", le(hi) if parts[1].startswith("<=") else lt(hi))
    return z


# 4, 5 ---------------------------------------------------------------------------


def test_04_induced_guard(acceptance_line):
    def check():
        region = _zone("y>0 && y<1", ("y",))
        rel = hull_relation(_diff("0<x-y<1"), 2)
        got = induced_guard(region, rel, ("x",))
        want = _zone("x>0 && x<2", ("x",))
        return got == want, f"induced guard {got}"

    _run(acceptance_line, 4, "induced guard", check)


def test_05_hull(acceptance_line):
    def check():
        far = hull_relation(_diff("x-y=-3"), 2)
        near = hull_relation(_zone("y=0 && x>0 && x<1", ("x", "y")), 1)
        ok = far.to_dbm() == _diff("x-y<-2") and near.to_dbm() == _diff("0<x-y<1")
        return ok, f"{far} and {near}"

    _run(acceptance_line, 5, "hull", check)


# 6 ----------------------------------------------------------------------------


def test_06_pipeline_golden(acceptance_line):
    def check():
        pl = generate_test_case(running_spec(), running_tp(), 1, 2)
        tc = pl.tc
        ys = tc.automaton.clocks

        def loc(text: str) -> str:
            (name,) = after(tc.automaton, Trace.parse(text)).locations()
            return name

        names = {
            "l0": loc("0"),
            "l1": loc("1.5.a"),
            "l2": loc("1.5.a.0.b"),
            "l3": loc("1.a"),
            "l4": loc("1.a.0.b"),
            "acc1": loc("1.a.0.b.0.b"),
            "acc2": loc("1.5.a.0.b.0.b"),
        }
        vm = tc.verdicts
        every = [_zone("true", ys)]
        pos = [_zone("y>0", ys)]

        def zones(key: str, kind: str):
            return vm.zones(names[key], kind)

        checks = {
            "pass": all(fed_equal(zones(k, PASS), every) for k in ("acc1", "acc2")),
            "pass only there": all(
                not vm.zones(l, PASS) for l in vm.locations() if l not in (names["acc1"], names["acc2"])
            ),
            "inconc l0": fed_equal(zones("l0", INCONC), [_zone("y>=2", ys)]),
            "inconc l1": fed_equal(zones("l1", INCONC), pos),
            "inconc l2": fed_equal(zones("l2", INCONC), [_zone("y>0 && y<=1", ys)]),
            "inconc elsewhere": all(
                not vm.zones(l, INCONC) for l in vm.locations() if l not in (names["l0"], names["l1"], names["l2"])
            ),
            "fail l3 l4": all(fed_includes(zones(k, FAIL), pos) for k in ("l3", "l4")),
            "fail l2": fed_includes(zones("l2", FAIL), [_zone("y>1", ys)]),
            "fail location": fed_equal(vm.zones(tc.fail_location, FAIL), every),
            "partition": vm.is_partition(),
        }
        bad = [k for k, v in checks.items() if not v]
        return not bad, "all verdict sets equal" if not bad else f"mismatch: {bad}"

    _run(acceptance_line, 6, "verdict sets of the final test case", check)


# 7 ----------------------------------------------------------------------------


def test_07_conformance_oracle(acceptance_line):
    def check():
        good = tioco_check(imp1(), imps_spec(), 2, Fraction(1, 2))
        bad = tioco_check(imp2(), imps_spec(), 2, Fraction(1, 2))
        off = bad.offending or ""
        ok = good.holds and not bad.holds and (off == "c" or off == "b" or off.startswith("delay"))
        return ok, f"Imp1 {good.to_json()['verdict']}, Imp2 {bad.to_json()['verdict']} on {bad.witness} with {off}"

    _run(acceptance_line, 7, "tioco oracle on Imp1/Imp2", check)


# 8 ----------------------------------------------------------------------------


def test_08_parallel_product_traces(acceptance_line):
    def check():
        rng = random.Random(SEED)
        bad, total = [], 0
        for i in range(50):
            a1, a2 = random_compatible_pair(rng)
            p = parallel_product(a1, a2)
            m = max(a1.max_const, a2.max_const)
            w, n = product_trace_mismatch(p, a1, a2, 3, grid(m + 1))
            total += n
            if w is not None:
                bad.append((i, str(w)))
        return not bad, f"50 pairs, {total} traces, counterexamples {bad[:3]}"

    _run(acceptance_line, 8, "parallel product trace intersection", check)


# 9 to 11 ------------------------------------------------------------------------


def _pipelines():
    """Twenty random specifications whose test case is not trivially decided at time 0."""
    rng = random.Random(SEED + 9)
    out, skipped = [], 0
    while len(out) < N_SPECS:
        spec = random_spec(rng, f"S{len(out)}")
        try:
            pl = generate_test_case(spec, two_step_purpose(spec), 1, spec.max_const, budget=5000)
        except TiotestError as err:
            assert err.code == "ARENA_BUDGET_EXCEEDED"
            skipped += 1
            continue
        a = pl.tc.automaton
        if pl.tc.verdict_at(a.initial, {c: 0 for c in a.clocks}) != NONE:
            skipped += 1
            continue
        out.append((spec, pl, rng.random()))
    return out, skipped


@pytest.fixture(scope="module")
def soundness_pipelines():
    return _pipelines()


@pytest.fixture(scope="module")
def family_pipelines():
    rng = random.Random(SEED + 10)
    out = []
    for i in range(N_FAMILY):
        spec = random_resetting_spec(rng, f"R{i}")
        k = len(spec.proper_clocks)
        pl = generate_test_case(spec, two_step_purpose(spec), k, spec.max_const, strategy="reset-fresh")
        out.append((spec, pl))
    return out


def test_09_soundness(acceptance_line, soundness_pipelines):
    def check():
        pipelines, skipped = soundness_pipelines
        problems = []
        fails = runs = witnesses = 0
        for n, (spec, pl, salt) in enumerate(pipelines):
            rng = random.Random(salt)
            for i in range(5):
                imp = conformant_mutant(rng, spec, i)
                if not tioco_check(imp, spec, 2).holds:
                    problems.append(f"{spec.name}/{imp.name} not conformant")
                    continue
                policy = SchedulerPolicy("random-on-grid", seed=n * 10 + i, max_steps=100)
                hist = execute_batch(pl.tc, imp, policy, RUNS)
                runs += RUNS
                fails += hist.get(FAIL, 0)
            for imp in widening_mutants(rng, spec):
                res = fails_check(pl.tc, imp, 3)
                if res.found and witness_violates(spec, imp, res.witness):
                    witnesses += 1
                else:
                    problems.append(f"{spec.name}/{imp.name} missed")
        ok = not problems and fails == 0
        detail = f"{runs} runs with {fails} Fail, {witnesses}/100 violations caught, {skipped} specs skipped"
        return ok, detail + (f", {problems[:3]}" if problems else "")

    _run(acceptance_line, 9, "soundness", check)


def _tc_traces(tc, depth: int, delays: list[Fraction]):
    """Traces of the deterministic test case, stopping where a verdict is reached."""
    a = tc.automaton
    out = []

    def rec(prefix: Trace, loc: str, v: dict):
        for d in delays:
            vd = {c: x + d for c, x in v.items()}
            sigma = prefix.wait(d)
            out.append(sigma)
            if tc.verdict_at(loc, vd) != NONE or len(sigma) >= depth:
                continue
            for e in a.out_edges(loc):
                if e.guard.zone(a.clocks).contains_point(vd):
                    nv = {c: (Fraction(0) if c in e.resets else x) for c, x in vd.items()}
                    rec(sigma.then(e.action), e.target, nv)

    rec(Trace.empty(), a.initial, {c: Fraction(0) for c in a.clocks})
    return out


def test_10_exactness_and_precision(acceptance_line, family_pipelines):
    def check():
        problems, checked = [], 0
        for spec, pl in family_pipelines:
            if not (pl.report["winning"] and pl.report["exact"]):
                problems.append(f"{spec.name} not exact")
                continue
            accept = pl.product.accept
            for sigma in _tc_traces(pl.tc, 4, grid(spec.max_const + 1)):
                checked += 1
                passed = verdict_of_trace(pl.tc, sigma) == PASS
                accepted = bool(after(pl.product, sigma).locations() & accept)
                if passed != accepted:
                    problems.append(f"{spec.name} {sigma}: Pass {passed}, accepted {accepted}")
        return not problems, f"{len(family_pipelines)} specs, {checked} traces" + (
            f", {problems[:3]}" if problems else ""
        )

    _run(acceptance_line, 10, "exactness and precision", check)


def test_11_io_refinement(acceptance_line, soundness_pipelines, family_pipelines):
    def check():
        pls = [pl for _, pl, _ in soundness_pipelines[0]] + [pl for _, pl in family_pipelines]
        bad = []
        for pl in pls:
            res = io_refines_check(pl.product, pl.dp, 3)
            if not res.holds:
                bad.append(f"{pl.product.name}: {res.clause} {res.offending} after {res.witness}")
        return not bad, f"{len(pls)} pipelines" + (f", {bad[:3]}" if bad else "")

    _run(acceptance_line, 11, "product refines the determinized automaton", check)


# 12 ---------------------------------------------------------------------------


def test_12_verdict_complexity(acceptance_line):
    def check():
        rng = random.Random(SEED + 12)
        worst, wrong = 0.0, 0
        for n in (10, 20, 30, 40, 50, 50, 50):
            dp = random_dp(rng, n)
            t0 = time.perf_counter()
            vm = compute_verdicts(dp)
            worst = max(worst, time.perf_counter() - t0)
            for loc in dp.locations[:5]:
                for y in grid(3):
                    if vm.verdict_at(loc, {"y": y}) != brute_force_verdict(dp, loc, y, 3):
                        wrong += 1
        return worst < 1.0 and wrong == 0, f"slowest {worst:.3f}s, {wrong} disagreements with explicit search"

    _run(acceptance_line, 12, "verdict computation under 1 s", check)

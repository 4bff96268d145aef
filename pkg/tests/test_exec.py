from __future__ import annotations

import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiotest.catalog import (
    imp1,
    running_impl_c_mutant,
    running_impl_lower,
    running_impl_silent,
    running_spec_with_c,
    running_tp_with_c,
)
from tiotest.errors import TiotestError
from tiotest.exec import DELAY_POLICIES, SchedulerPolicy, derive_seed, execute_batch, execute_once, fails_check
from tiotest.semantics import Trace, tioco_check
from tiotest.testgen import FAIL, PASS, generate_test_case, verdict_of_trace

TC = generate_test_case(running_spec_with_c(), running_tp_with_c(), 1, 2).tc


def test_conformant_implementation_passes():
    log = execute_once(TC, running_impl_lower(), SchedulerPolicy())
    assert log.verdict == PASS
    assert log.trace == Trace.parse("1.a.0.b.0.b")
    assert [ev for _, ev in log.steps] == ["delay 0.5", "delay 0.5", "a!", "b!", "b!"]


def test_mutant_emitting_c_fails():
    log = execute_once(TC, running_impl_c_mutant(), SchedulerPolicy())
    assert log.verdict == FAIL and log.trace == Trace.parse("1.a.0.b.0.c")


def test_silent_implementation_fails_on_quiescence():
    # the specification forces an immediate b after a, so waiting is a failure
    assert not tioco_check(running_impl_silent(), running_spec_with_c(), 3).holds
    for policy in DELAY_POLICIES:
        log = execute_once(TC, running_impl_silent(), SchedulerPolicy(policy))
        assert log.verdict == FAIL and log.trace.actions == ("a",)


def test_log_lines_are_json():
    rows = [json.loads(r) for r in execute_once(TC, running_impl_lower(), SchedulerPolicy()).to_lines().splitlines()]
    assert rows[-1] == {"trace": "1.a.0.b.0.b", "verdict": PASS}
    assert {r["chooser"] for r in rows[:-1]} == {"tester", "implementation"}


def test_batch_of_zero_runs_is_empty():
    assert execute_batch(TC, running_impl_lower(), SchedulerPolicy(), 0) == {}


def test_alphabet_mismatch_is_rejected():
    with pytest.raises(TiotestError) as info:
        execute_once(TC, imp1(), SchedulerPolicy())
    assert info.value.code == "INCOMPATIBLE"


def test_bad_policy_arguments():
    with pytest.raises(TiotestError):
        SchedulerPolicy("soonest")
    with pytest.raises(TiotestError):
        SchedulerPolicy(grid=0)


def test_earliest_policy_is_deterministic():
    p = SchedulerPolicy()
    runs = {execute_once(TC, running_impl_lower(), p.with_seed(s)) for s in range(5)}
    assert len(runs) == 1


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(DELAY_POLICIES))
def test_runs_are_reproducible_and_replayable(seed, delay):
    p = SchedulerPolicy(delay, seed=seed, grid=Fraction(1, 4))
    for imp in (running_impl_lower(), running_impl_c_mutant()):
        first, second = execute_once(TC, imp, p), execute_once(TC, imp, p)
        assert first == second
        assert verdict_of_trace(TC, first.trace) == first.verdict


def test_batch_is_reproducible_and_never_fails_a_conformant_implementation():
    p = SchedulerPolicy("random-on-grid", seed=11)
    a = execute_batch(TC, running_impl_lower(), p, 40)
    assert a == execute_batch(TC, running_impl_lower(), p, 40)
    assert sum(a.values()) == 40 and FAIL not in a
    assert derive_seed(11, 0) != derive_seed(11, 1)


def test_fails_check():
    bad = fails_check(TC, running_impl_c_mutant())
    assert bad.found and bad.witness == Trace.parse("1.a.0.b.0.c.0")
    assert verdict_of_trace(TC, bad.witness) == FAIL
    good = fails_check(TC, running_impl_lower())
    assert not good.found and good.explored > 0

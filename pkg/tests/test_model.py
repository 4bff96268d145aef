from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tiotest.catalog import running_spec, running_tp
from tiotest.errors import TiotestError
from tiotest.model import (
    Guard,
    complement_guards,
    edge,
    guard_of_zone,
    is_complete,
    lift,
    make_otaio,
    mirror_alphabets,
    parse_guard,
    parse_invariant,
    validate_otaio,
)
from tiotest.zones import fed_equal


def _loop(resets=(), guard="true", invariant=None, observed=()):
    return make_otaio(
        "L",
        ["q"],
        "q",
        inputs=["a"],
        outputs=["b"],
        proper=["x"],
        observed=list(observed),
        max_const=2,
        invariants={"q": invariant} if invariant else None,
        edges=[edge("q", guard, "a", resets, "q"), edge("q", "true", "b", [], "q")],
    )


# parsing ---------------------------------------------------------------------


def test_parse_guard_forms():
    g = parse_guard("x<=2 && y>1")
    assert str(g) == "x<=2 && y>1"
    assert parse_guard("true") == parse_guard("") == Guard()
    assert parse_guard("x==1") == parse_guard("x=1")


def test_parse_guard_rejects_garbage():
    with pytest.raises(TiotestError) as info:
        parse_guard("x ~ 2")
    assert info.value.code == "PARSE_ERROR"


def test_invariant_equality_to_zero_is_upper_bound():
    assert str(parse_invariant("x=0")) == "x<=0"


OPS = ["<", "<=", "=", ">=", ">"]
atoms = st.tuples(st.sampled_from(["x", "y", "z1"]), st.sampled_from(OPS), st.integers(0, 9))


@given(st.lists(atoms, max_size=4))
def test_guard_print_parse_round_trip(parts):
    text = " && ".join(f"{c}{op}{k}" for c, op, k in parts) or "true"
    g = parse_guard(text)
    assert parse_guard(str(g)) == g


@given(st.lists(atoms, max_size=4))
def test_guard_of_zone_denotes_same_zone(parts):
    clocks = ("x", "y", "z1")
    g = parse_guard(" && ".join(f"{c}{op}{k}" for c, op, k in parts) or "true")
    zone = g.zone(clocks)
    if zone.is_empty():
        return
    assert guard_of_zone(zone).zone(clocks) == zone


# validation --------------------------------------------------------------------


def test_running_spec_is_valid():
    report = validate_otaio(running_spec())
    assert report.ok, report.errors
    assert running_spec().resources == (1, 2)


def test_reset_of_observed_clock_is_rejected():
    a = make_otaio(
        "R",
        ["q"],
        "q",
        inputs=["a"],
        proper=["x"],
        observed=["y"],
        max_const=1,
        edges=[edge("q", "true", "a", ["y"], "q")],
    )
    assert "RESET_OBSERVED" in validate_otaio(a).codes()


def test_constant_above_maximum_is_rejected():
    assert "CONSTANT_EXCEEDS_M" in validate_otaio(_loop(guard="x<=3")).codes()


def test_other_validation_codes():
    a = _loop().replace(initial="nowhere")
    assert "UNKNOWN_LOCATION" in validate_otaio(a).codes()
    b = _loop().replace(outputs=frozenset({"a"}))
    assert "ALPHABET_OVERLAP" in validate_otaio(b).codes()
    c = _loop(invariant="x<=1").replace(invariants=(("q", parse_guard("x>=1")),))
    assert "BAD_INVARIANT" in validate_otaio(c).codes()


def test_diagonal_guard_is_a_warning():
    a = make_otaio(
        "D", ["q"], "q", inputs=["a"], proper=["x", "y"], max_const=1,
        edges=[edge("q", "x-y<1", "a", [], "q")],
    )
    report = validate_otaio(a)
    assert report.ok
    assert [w.code for w in report.warnings] == ["DIAGONAL_GUARD"]


def test_accept_not_trap_warns():
    a = _loop().replace(locations=("q", "r"), accept=frozenset({"q"}),
                        edges=_loop().edges + (edge("q", "true", "a", [], "r"),))
    assert "ACCEPT_NOT_TRAP" in {w.code for w in validate_otaio(a).warnings}


# predicates and transformations ---------------------------------------------------


def test_completeness():
    assert is_complete(running_tp())
    assert not is_complete(running_spec())
    assert is_complete(_loop())
    assert not is_complete(_loop(guard="x<1"))


def test_mirror():
    a = _loop()
    m = mirror_alphabets(a)
    assert (m.inputs, m.outputs) == (frozenset({"b"}), frozenset({"a"}))
    assert mirror_alphabets(m) == a
    silent = a.replace(inputs=frozenset(), outputs=frozenset(), internals=frozenset({"a", "b"}))
    assert mirror_alphabets(silent) == silent


def test_lift():
    a = _loop()
    assert lift(a, [], []) == a
    lifted = lift(a, ["y"], [])
    assert lifted.observed_clocks == ("y",)
    assert lifted.edges == a.edges
    with pytest.raises(TiotestError):
        lift(a, ["x"], [])


def test_complement_guards():
    clocks = ("x",)

    def zones(gs):
        return [g.zone(clocks) for g in gs]

    assert fed_equal(zones(complement_guards([parse_guard("x=1")], clocks)), zones([parse_guard("x<1"), parse_guard("x>1")]))
    assert complement_guards([], clocks) == [Guard()]
    assert [str(g) for g in complement_guards([parse_guard("y=0")], ("y",))] == ["y>0"]
    assert complement_guards([Guard()], clocks) == []

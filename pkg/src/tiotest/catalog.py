"""Hand-built automata used by the test suite, the CLI fixtures and the README."""

from __future__ import annotations

from .compose import OTHW, expand_othw
from .model import Otaio, edge, make_otaio


def running_spec() -> Otaio:
    """Specification with one clock ``x``, input ``a``, output ``b`` and internal ``tau``."""
    return make_otaio(
        "A",
        [f"l{i}" for i in range(9)],
        "l0",
        inputs=["a"],
        outputs=["b"],
        internals=["tau"],
        proper=["x"],
        max_const=2,
        invariants={"l0": "x<=1", "l2": "x<=1", "l3": "x<=1", "l6": "x=0", "l7": "x=0"},
        edges=[
            edge("l0", "x=1", "tau", [], "l1"),
            edge("l0", "x=1", "tau", ["x"], "l5"),
            edge("l1", "x>1 && x<2", "a", ["x"], "l2"),
            edge("l2", "x=0", "b", [], "l3"),
            edge("l2", "x=1", "tau", ["x"], "l2"),
            edge("l3", "true", "b", [], "l4"),
            edge("l5", "x<1", "a", ["x"], "l6"),
            edge("l6", "true", "b", [], "l7"),
            edge("l7", "true", "b", [], "l8"),
        ],
    )


def running_tp_sketch() -> Otaio:
    spec = running_spec()
    loops = [edge(loc, "true", act, [], loc) for loc in ("p4", "Acc") for act in sorted(spec.actions)]
    return make_otaio(
        "TP",
        ["p0", "p1", "p2", "p3", "p4", "Acc"],
        "p0",
        inputs=spec.inputs,
        outputs=spec.outputs,
        internals=spec.internals,
        observed=["x"],
        max_const=2,
        edges=[
            edge("p0", "x=1", "tau", [], "p1"),
            edge("p1", "x<1", "a", [], "p2"),
            edge("p2", "true", "b", [], "p3"),
            edge("p3", "true", "b", [], "Acc"),
            *[edge(f"p{i}", "true", OTHW, [], "p4") for i in range(4)],
            *loops,
        ],
        accept=["Acc"],
    )


def running_tp() -> Otaio:
    """Test purpose selecting the lower branch of ``running_spec``."""
    return expand_othw(running_tp_sketch())


def ex_ta() -> Otaio:
    """Small non-deterministic automaton used to illustrate the game."""
    return make_otaio(
        "ExTA",
        ["l0", "l1", "l2", "l3"],
        "l0",
        inputs=["a", "b"],
        proper=["x"],
        max_const=1,
        edges=[
            edge("l0", "x>0 && x<1", "a", [], "l0"),
            edge("l0", "x>0 && x<1", "a", [], "l1"),
            edge("l0", "x>0 && x<1", "a", ["x"], "l2"),
            edge("l1", "x>0 && x<1", "b", ["x"], "l3"),
            edge("l2", "x=0", "b", [], "l3"),
        ],
    )


def _imp_base(name: str, edges, locs) -> Otaio:
    return make_otaio(
        name,
        locs,
        "s0",
        inputs=["a", "d"],
        outputs=["b", "c"],
        proper=["x"],
        max_const=8,
        edges=edges,
    )


def _loops(locs, inputs, skip=()) -> list:
    return [edge(loc, "true", i, [], loc) for loc in locs for i in inputs if (loc, i) not in skip]


def imps_spec() -> Otaio:
    """Specification: after ``a``, output ``b`` between 2 and 8 time units."""
    return _imp_base(
        "Aimps",
        [edge("s0", "true", "a", ["x"], "s1"), edge("s1", "x>=2 && x<=8", "b", [], "s2")],
        ["s0", "s1", "s2"],
    )


def imp1() -> Otaio:
    """Conformant: emits ``b`` in a narrower window, accepts an extra input ``d``."""
    locs = ["s0", "s1", "s2", "s3"]
    return _imp_base(
        "Imp1",
        [
            edge("s0", "true", "a", ["x"], "s1"),
            edge("s1", "x>=4 && x<=5", "b", [], "s2"),
            edge("s0", "true", "d", [], "s3"),
            *_loops(locs, ["a", "d"], skip={("s0", "a"), ("s0", "d")}),
        ],
        locs,
    )


def imp2() -> Otaio:
    """Non-conformant: emits ``b`` too early and an unspecified output ``c``."""
    locs = ["s0", "s1", "s2", "s3"]
    return _imp_base(
        "Imp2",
        [
            edge("s0", "true", "a", ["x"], "s1"),
            edge("s1", "x>=1 && x<=5", "b", [], "s2"),
            edge("s1", "true", "c", [], "s3"),
            *_loops(locs, ["a", "d"], skip={("s0", "a")}),
        ],
        locs,
    )


def prodpar_pair() -> tuple[Otaio, Otaio]:
    """Two automata whose communication product accepts the prefixes of ``1.a.1.b``."""
    a1 = make_otaio(
        "A1",
        ["m0", "m1", "m2", "m3"],
        "m0",
        inputs=["a", "c"],
        outputs=["b"],
        proper=["y"],
        max_const=1,
        invariants={"m1": "y<=1", "m2": "y<=1"},
        edges=[
            edge("m0", "y>=1", "a", ["y"], "m1"),
            edge("m0", "y>=1", "c", [], "m3"),
            edge("m1", "y<=1", "b", [], "m2"),
        ],
    )
    a2 = make_otaio(
        "A2",
        ["n0", "n1", "n2", "n3"],
        "n0",
        inputs=["b"],
        outputs=["a", "c"],
        proper=["x"],
        max_const=1,
        invariants={"n0": "x<=1"},
        edges=[
            edge("n0", "x=1", "a", ["x"], "n1"),
            edge("n1", "x>=1", "b", [], "n2"),
            edge("n1", "x>=1", "c", [], "n3"),
        ],
    )
    return a1, a2


def prod_pair() -> tuple[Otaio, Otaio]:
    """Two automata observing each other's clocks."""
    common = dict(inputs=["a"], outputs=["b"], max_const=2)
    a1 = make_otaio(
        "P1",
        ["u0", "u1", "u2"],
        "u0",
        proper=["z"],
        observed=["x", "y"],
        edges=[
            edge("u0", "z=1 && y>=1 && x<=1", "a", ["z"], "u1"),
            edge("u1", "z<=1 && y>=1 && x=2", "b", [], "u2"),
        ],
        **common,
    )
    a2 = make_otaio(
        "P2",
        ["w0", "w1", "w2"],
        "w0",
        proper=["x"],
        observed=["y", "z"],
        edges=[edge("w0", "x=1", "a", ["x"], "w1"), edge("w1", "y>=1", "b", [], "w2")],
        **common,
    )
    return a1, a2


def refinement_counter_pair() -> tuple[Otaio, Otaio]:
    """``B`` accepts input ``a`` initially while ``A`` does not."""
    common = dict(inputs=["a"], outputs=["b"], max_const=0)
    a = make_otaio("CA", ["q0"], "q0", edges=[edge("q0", "true", "b", [], "q0")], **common)
    b = make_otaio(
        "CB",
        ["q0", "q1"],
        "q0",
        edges=[
            edge("q0", "true", "b", [], "q0"),
            edge("q0", "true", "a", [], "q1"),
            edge("q1", "true", "b", [], "q1"),
        ],
        **common,
    )
    return a, b


def running_impl_lower() -> Otaio:
    """Input-complete implementation of the lower branch of ``running_spec``.

    Outputs include ``c`` so it shares the alphabet of ``running_spec_with_c``.
    """
    locs = ["i0", "i5", "i6", "i7", "i8"]
    return make_otaio(
        "ImpLow",
        locs,
        "i0",
        inputs=["a"],
        outputs=["b", "c"],
        internals=["tau"],
        proper=["x"],
        max_const=2,
        invariants={"i0": "x<=1", "i6": "x=0", "i7": "x=0"},
        edges=[
            edge("i0", "x=1", "tau", ["x"], "i5"),
            edge("i0", "x=1", "a", ["x"], "i6"),
            edge("i0", "x<1", "a", [], "i0"),
            edge("i5", "x<1", "a", ["x"], "i6"),
            edge("i5", "x>=1", "a", [], "i5"),
            edge("i6", "true", "b", [], "i7"),
            edge("i7", "true", "b", [], "i8"),
            *_loops(["i6", "i7", "i8"], ["a"]),
        ],
    )


def running_impl_c_mutant() -> Otaio:
    """Emits ``c`` where the specification expects the second ``b``."""
    base = running_impl_lower()
    edges = [e for e in base.edges if not (e.source == "i7" and e.action == "b")]
    edges.append(edge("i7", "true", "c", [], "i8"))
    return base.replace(name="ImpC", edges=tuple(edges))


def running_impl_silent() -> Otaio:
    """Never answers: idles after the internal step."""
    return make_otaio(
        "ImpSilent",
        ["i0", "i5"],
        "i0",
        inputs=["a"],
        outputs=["b", "c"],
        internals=["tau"],
        proper=["x"],
        max_const=2,
        invariants={"i0": "x<=1"},
        edges=[
            edge("i0", "x=1", "tau", ["x"], "i5"),
            edge("i0", "true", "a", [], "i0"),
            edge("i5", "true", "a", [], "i5"),
        ],
    )


def running_spec_with_c() -> Otaio:
    """``running_spec`` with an extra declared output ``c`` that is never emitted."""
    a = running_spec()
    return a.replace(outputs=a.outputs | {"c"})


def running_tp_with_c() -> Otaio:
    a = running_spec_with_c()
    sk = running_tp_sketch()
    loops = [edge(loc, "true", "c", [], loc) for loc in ("p4", "Acc")]
    sk = sk.replace(outputs=a.outputs, edges=sk.edges + tuple(loops))
    return expand_othw(sk)

"""Parallel product, synchronous product, and the ``othw`` shorthand."""

from __future__ import annotations

from collections import deque
from typing import Callable, Iterable

from .errors import TiotestError
from .model import Edge, Guard, Otaio, complement_guards, guard_of_zone, make_otaio

OTHW = "othw"
SEP = "|"


def pair_name(l1: str, l2: str) -> str:
    return f"{l1}{SEP}{l2}"


def _explore(
    init: tuple[str, str],
    clocks: tuple[str, ...],
    step: Callable[[tuple[str, str]], Iterable[tuple[Guard, str, frozenset[str], tuple[str, str]]]],
) -> tuple[list[tuple[str, str]], list[tuple[tuple[str, str], Guard, str, frozenset[str], tuple[str, str]]]]:
    seen = {init: None}
    queue = deque([init])
    edges = []
    while queue:
        src = queue.popleft()
        for g, a, r, tgt in step(src):
            z = g.zone(clocks)
            if z.is_empty():
                continue
            g = guard_of_zone(z)
            edges.append((src, g, a, r, tgt))
            if tgt not in seen:
                seen[tgt] = None
                queue.append(tgt)
    return list(seen), edges


def _accept_pairs(a1: Otaio, a2: Otaio, locs: list[tuple[str, str]]) -> list[str] | None:
    if a1.accept is None and a2.accept is None:
        return None
    f1 = a1.accept if a1.accept is not None else set(a1.locations)
    f2 = a2.accept if a2.accept is not None else set(a2.locations)
    return [pair_name(p, q) for p, q in locs if p in f1 and q in f2]


def _assemble(name, a1, a2, locs, raw_edges, **kw) -> Otaio:
    invariants = {}
    for p, q in locs:
        g = a1.inv(p).conj(a2.inv(q))
        if not g.is_true:
            g = guard_of_zone(g.zone(a1.clocks + a2.clocks))
            invariants[pair_name(p, q)] = g
    edges = [
        Edge(pair_name(*s), g, a, r, pair_name(*t)) for s, g, a, r, t in raw_edges
    ]
    return make_otaio(
        name,
        [pair_name(p, q) for p, q in locs],
        pair_name(a1.initial, a2.initial),
        max_const=max(a1.max_const, a2.max_const),
        invariants=invariants,
        edges=edges,
        accept=_accept_pairs(a1, a2, locs),
        **kw,
    )


def parallel_product(a1: Otaio, a2: Otaio) -> Otaio:
    """Communication product: complementary observable actions synchronize.

    Internal actions interleave. Action directions are those of ``a1``.
    """
    if a1.observed_clocks or a2.observed_clocks:
        raise TiotestError("INCOMPATIBLE", "parallel product needs automata without observed clocks")
    if a1.outputs != a2.inputs or a1.inputs != a2.outputs:
        raise TiotestError("INCOMPATIBLE", "outputs of each side must be the inputs of the other")
    if a1.internals & a2.internals:
        raise TiotestError("INCOMPATIBLE", "internal alphabets overlap")
    if set(a1.proper_clocks) & set(a2.proper_clocks):
        raise TiotestError("INCOMPATIBLE", "proper clocks overlap")

    def step(s):
        p, q = s
        for e1 in a1.out_edges(p):
            if e1.action in a1.internals:
                yield e1.guard, e1.action, e1.resets, (e1.target, q)
                continue
            for e2 in a2.out_edges(q):
                if e2.action == e1.action:
                    yield e1.guard.conj(e2.guard), e1.action, e1.resets | e2.resets, (e1.target, e2.target)
        for e2 in a2.out_edges(q):
            if e2.action in a2.internals:
                yield e2.guard, e2.action, e2.resets, (p, e2.target)

    locs, raw = _explore((a1.initial, a2.initial), a1.clocks + a2.clocks, step)
    return _assemble(
        f"{a1.name}||{a2.name}",
        a1,
        a2,
        locs,
        raw,
        inputs=a1.inputs,
        outputs=a1.outputs,
        internals=a1.internals | a2.internals,
        proper=a1.proper_clocks + a2.proper_clocks,
    )


def product(a1: Otaio, a2: Otaio) -> Otaio:
    """Synchronous product on every action, internal ones included.

    Proper clocks are the union of both sides; a clock observed by one side
    and proper on the other becomes proper.
    """
    if (a1.inputs, a1.outputs, a1.internals) != (a2.inputs, a2.outputs, a2.internals):
        raise TiotestError("INCOMPATIBLE", "product needs identical alphabets")
    if set(a1.proper_clocks) & set(a2.proper_clocks):
        raise TiotestError("INCOMPATIBLE", "proper clocks overlap")
    proper = a1.proper_clocks + a2.proper_clocks
    observed = []
    for c in a1.observed_clocks + a2.observed_clocks:
        if c not in proper and c not in observed:
            observed.append(c)

    def step(s):
        p, q = s
        for e1 in a1.out_edges(p):
            for e2 in a2.out_edges(q):
                if e1.action == e2.action:
                    yield e1.guard.conj(e2.guard), e1.action, e1.resets | e2.resets, (e1.target, e2.target)

    locs, raw = _explore((a1.initial, a2.initial), proper + tuple(observed), step)
    return _assemble(
        f"{a1.name}x{a2.name}",
        a1,
        a2,
        locs,
        raw,
        inputs=a1.inputs,
        outputs=a1.outputs,
        internals=a1.internals,
        proper=proper,
        observed=tuple(observed),
    )


def expand_othw(sketch: Otaio) -> Otaio:
    """Replace each ``othw`` pseudo-edge by the complement of the explicit edges.

    For every action, the location gets edges to the ``othw`` target guarded
    by the complement of the union of that action's explicit guards.
    """
    clocks = sketch.clocks
    edges: list[Edge] = []
    for loc in sketch.locations:
        out = sketch.out_edges(loc)
        explicit = [e for e in out if e.action != OTHW]
        edges.extend(explicit)
        targets = [e.target for e in out if e.action == OTHW]
        if len(targets) > 1:
            raise TiotestError("PARSE_ERROR", f"location {loc} has several othw edges")
        if not targets:
            continue
        for act in sorted(sketch.actions):
            guards = [e.guard for e in explicit if e.action == act]
            for g in complement_guards(guards, clocks):
                edges.append(Edge(loc, g, act, frozenset(), targets[0]))
    return sketch.replace(edges=tuple(edges))

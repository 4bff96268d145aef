"""Open timed automata with inputs/outputs: syntax and well-formedness.

Clocks and actions are plain identifiers; their kind is given by the
partition they belong to on the owning automaton (proper/observed clocks,
input/output/internal actions).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .errors import TiotestError
from .zones import Dbm, fed_subtract, le

OPS = ("<", "<=", "=", ">=", ">")
INVARIANT_OPS = ("<", "<=")
_OP_RANK = {">": 0, ">=": 1, "=": 2, "<=": 3, "<": 4}
_IDENT = re.compile(r"^\S+$")


@dataclass(frozen=True)
class Constraint:
    """``clock op constant``, or ``clock - other op constant`` when ``other`` is set.

    Difference atoms never appear in hand-written models; they are produced
    only for region guards of determinized automata with several clocks.
    """

    clock: str
    op: str
    constant: int
    other: str | None = None

    def __post_init__(self) -> None:
        if self.op not in OPS:
            raise ValueError(f"unknown operator {self.op!r}")

    def restrict(self, z: Dbm) -> Dbm:
        x, y, c = self.clock, self.other, self.constant
        if self.op in ("<", "<="):
            return z.constrain(x, y, (c, int(self.op == "<=")))
        if self.op in (">", ">="):
            return z.constrain(y, x, (-c, int(self.op == ">=")))
        return z.constrain(x, y, le(c)).constrain(y, x, le(-c))

    def __str__(self) -> str:
        lhs = self.clock if self.other is None else f"{self.clock}-{self.other}"
        return f"{lhs}{self.op}{self.constant}"


@dataclass(frozen=True)
class Guard:
    """Conjunction of constraints; no atoms means ``true``."""

    atoms: frozenset[Constraint] = frozenset()

    @staticmethod
    def of(*atoms: Constraint) -> Guard:
        return Guard(frozenset(atoms))

    @property
    def is_true(self) -> bool:
        return not self.atoms

    def clocks(self) -> set[str]:
        out = {a.clock for a in self.atoms}
        out.update(a.other for a in self.atoms if a.other is not None)
        return out

    def zone(self, clocks: Sequence[str]) -> Dbm:
        z = Dbm.universe(clocks)
        for a in self.ordered():
            z = a.restrict(z)
        return z

    def conj(self, other: Guard) -> Guard:
        return Guard(self.atoms | other.atoms)

    def ordered(self) -> list[Constraint]:
        return sorted(self.atoms, key=lambda a: (a.clock, a.other or "", _OP_RANK[a.op], a.constant))

    def __str__(self) -> str:
        if not self.atoms:
            return "true"
        return " && ".join(str(a) for a in self.ordered())


TRUE = Guard()


def parse_guard(text: str) -> Guard:
    """Parse ``x<=2 && y>1`` (``true`` or empty for the empty conjunction)."""
    text = text.strip()
    if text in ("", "true"):
        return TRUE
    atoms = []
    for part in text.split("&&"):
        m = re.fullmatch(r"\s*([^\s<>=!&-]+)\s*(?:-\s*([^\s<>=!&-]+)\s*)?(<=|>=|<|>|==|=)\s*(-?\d+)\s*", part)
        if not m:
            raise TiotestError("PARSE_ERROR", f"bad constraint {part.strip()!r}")
        op = "=" if m.group(3) == "==" else m.group(3)
        atoms.append(Constraint(m.group(1), op, int(m.group(4)), m.group(2)))
    return Guard(frozenset(atoms))


def parse_invariant(text: str) -> Guard:
    """Invariants accept ``x=c`` as shorthand for ``x<=c`` when ``c == 0``."""
    return normalize_invariant(parse_guard(text))


def normalize_invariant(g: Guard) -> Guard:
    atoms = []
    for a in g.atoms:
        if a.op == "=" and a.constant == 0 and a.other is None:
            a = Constraint(a.clock, "<=", 0)
        atoms.append(a)
    return Guard(frozenset(atoms))


def guard_of_zone(z: Dbm) -> Guard:
    """A conjunction equivalent to the (nonempty) zone ``z``."""
    atoms = []
    for x, y, op, c in z.atoms():
        atoms.append(Constraint(x, op, int(c), y))
    return Guard(frozenset(atoms))


@dataclass(frozen=True)
class Edge:
    source: str
    guard: Guard
    action: str
    resets: frozenset[str]
    target: str

    def __str__(self) -> str:
        r = ",".join(sorted(self.resets))
        return f"{self.source} --[{self.guard}, {self.action}, {{{r}}}]--> {self.target}"


def edge(source: str, guard: str | Guard, action: str, resets: Iterable[str], target: str) -> Edge:
    g = parse_guard(guard) if isinstance(guard, str) else guard
    return Edge(source, g, action, frozenset(resets), target)


@dataclass(frozen=True)
class Otaio:
    name: str
    locations: tuple[str, ...]
    initial: str
    inputs: frozenset[str]
    outputs: frozenset[str]
    internals: frozenset[str]
    proper_clocks: tuple[str, ...]
    observed_clocks: tuple[str, ...]
    max_const: int
    invariants: tuple[tuple[str, Guard], ...]
    edges: tuple[Edge, ...]
    accept: frozenset[str] | None = None
    _inv: dict = field(default=None, init=False, repr=False, compare=False, hash=False)
    _out: dict = field(default=None, init=False, repr=False, compare=False, hash=False)
    _cache: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_cache", {})
        object.__setattr__(self, "_inv", dict(self.invariants))
        out: dict[str, list[Edge]] = {}
        for e in self.edges:
            out.setdefault(e.source, []).append(e)
        object.__setattr__(self, "_out", out)

    @property
    def clocks(self) -> tuple[str, ...]:
        return self.proper_clocks + self.observed_clocks

    @property
    def observable(self) -> frozenset[str]:
        return self.inputs | self.outputs

    @property
    def actions(self) -> frozenset[str]:
        return self.inputs | self.outputs | self.internals

    @property
    def resources(self) -> tuple[int, int]:
        return (len(self.clocks), self.max_const)

    def inv(self, loc: str) -> Guard:
        return self._inv.get(loc, TRUE)

    def out_edges(self, loc: str) -> list[Edge]:
        return self._out.get(loc, [])

    def action_kind(self, a: str) -> str:
        if a in self.inputs:
            return "input"
        if a in self.outputs:
            return "output"
        if a in self.internals:
            return "internal"
        raise KeyError(a)

    def replace(self, **changes) -> Otaio:
        return replace(self, **changes)


def make_otaio(
    name: str,
    locations: Sequence[str],
    initial: str,
    *,
    inputs: Iterable[str] = (),
    outputs: Iterable[str] = (),
    internals: Iterable[str] = (),
    proper: Sequence[str] = (),
    observed: Sequence[str] = (),
    max_const: int,
    invariants: Mapping[str, str | Guard] | None = None,
    edges: Iterable[Edge] = (),
    accept: Iterable[str] | None = None,
) -> Otaio:
    invs = []
    for loc, g in (invariants or {}).items():
        g = parse_invariant(g) if isinstance(g, str) else normalize_invariant(g)
        if not g.is_true:
            invs.append((loc, g))
    return Otaio(
        name=name,
        locations=tuple(locations),
        initial=initial,
        inputs=frozenset(inputs),
        outputs=frozenset(outputs),
        internals=frozenset(internals),
        proper_clocks=tuple(proper),
        observed_clocks=tuple(observed),
        max_const=max_const,
        invariants=tuple(sorted(invs, key=lambda p: p[0])),
        edges=tuple(edges),
        accept=None if accept is None else frozenset(accept),
    )


# validation -----------------------------------------------------------------


@dataclass(frozen=True)
class Issue:
    code: str
    message: str
    element: str = ""


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[Issue, ...] = ()
    warnings: tuple[Issue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors

    def codes(self) -> set[str]:
        return {i.code for i in self.errors}

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "errors": [i.__dict__ for i in self.errors],
            "warnings": [i.__dict__ for i in self.warnings],
        }


def is_trap(a: Otaio, loc: str) -> bool:
    return all(e.target == loc for e in a.out_edges(loc))


def validate_otaio(a: Otaio) -> ValidationReport:
    errors: list[Issue] = []
    warnings: list[Issue] = []

    def err(code: str, msg: str, elem: object = "") -> None:
        errors.append(Issue(code, msg, str(elem)))

    locs = set(a.locations)
    for ident in [*a.locations, *a.actions, *a.clocks]:
        if not isinstance(ident, str) or not _IDENT.match(ident):
            err("BAD_IDENTIFIER", f"identifier {ident!r} is empty or has whitespace", ident)
    if len(locs) != len(a.locations):
        err("DUPLICATE", "duplicate location names")
    if a.initial not in locs:
        err("UNKNOWN_LOCATION", f"initial location {a.initial} is not declared", a.initial)
    for p, q, what in (
        (a.inputs, a.outputs, "inputs/outputs"),
        (a.inputs, a.internals, "inputs/internals"),
        (a.outputs, a.internals, "outputs/internals"),
    ):
        if p & q:
            err("ALPHABET_OVERLAP", f"{what} share {sorted(p & q)}")
    if set(a.proper_clocks) & set(a.observed_clocks):
        err("CLOCK_OVERLAP", "a clock is both proper and observed")
    if len(set(a.clocks)) != len(a.clocks):
        err("DUPLICATE", "duplicate clock names")
    if a.max_const < 0:
        err("CONSTANT_EXCEEDS_M", "negative maximal constant")
    clocks = set(a.clocks)

    def check_guard(g: Guard, where: object, invariant: bool) -> None:
        for atom in g.atoms:
            for c in (atom.clock, atom.other):
                if c is not None and c not in clocks:
                    err("UNKNOWN_CLOCK", f"clock {c} is not declared", where)
            if abs(atom.constant) > a.max_const or (atom.other is None and atom.constant < 0):
                err("CONSTANT_EXCEEDS_M", f"constant in {atom} outside [0, {a.max_const}]", where)
            if atom.other is not None:
                warnings.append(Issue("DIAGONAL_GUARD", f"difference atom {atom}", str(where)))
            if invariant and (atom.op not in INVARIANT_OPS or atom.other is not None):
                err("BAD_INVARIANT", f"invariant atom {atom} is not an upper bound", where)

    for loc, g in a.invariants:
        if loc not in locs:
            err("UNKNOWN_LOCATION", f"invariant on undeclared location {loc}", loc)
        check_guard(g, loc, True)
    for e in a.edges:
        for loc in (e.source, e.target):
            if loc not in locs:
                err("UNKNOWN_LOCATION", f"edge endpoint {loc} is not declared", e)
        if e.action not in a.actions:
            err("UNKNOWN_ACTION", f"action {e.action} is not declared", e)
        check_guard(e.guard, e, False)
        for c in e.resets:
            if c in a.observed_clocks:
                err("RESET_OBSERVED", f"edge resets observed clock {c}", e)
            elif c not in a.proper_clocks:
                err("UNKNOWN_CLOCK", f"reset of undeclared clock {c}", e)
    if a.accept is not None:
        for loc in sorted(a.accept):
            if loc not in locs:
                err("UNKNOWN_LOCATION", f"accept location {loc} is not declared", loc)
            elif not is_trap(a, loc):
                warnings.append(Issue("ACCEPT_NOT_TRAP", f"accept location {loc} is not a trap", loc))
    return ValidationReport(tuple(errors), tuple(warnings))


def check_resets(a: Otaio) -> None:
    """Raise unless every reset targets a proper clock."""
    proper = set(a.proper_clocks)
    for e in a.edges:
        if not e.resets <= proper:
            raise TiotestError("RESET_OBSERVED", f"{e} resets a non-proper clock")


# syntactic predicates and transformations ---------------------------------


def covers(zones: Sequence[Dbm], clocks: Sequence[str]) -> bool:
    return not fed_subtract([Dbm.universe(clocks)], zones)


def is_complete(a: Otaio) -> bool:
    """Invariants are all true and every action is enabled from every valuation."""
    if any(not g.is_true for _, g in a.invariants):
        return False
    clocks = a.clocks
    for loc in a.locations:
        for act in a.actions:
            zs = [e.guard.zone(clocks) for e in a.out_edges(loc) if e.action == act]
            if not covers(zs, clocks):
                return False
    return True


def mirror_alphabets(a: Otaio) -> Otaio:
    return a.replace(inputs=a.outputs, outputs=a.inputs)


def lift(a: Otaio, extra_proper: Iterable[str], extra_observed: Iterable[str]) -> Otaio:
    """Add clocks that ``a`` neither reads nor resets, as observed clocks."""
    extra_proper, extra_observed = set(extra_proper), set(extra_observed)
    clash = extra_proper & set(a.proper_clocks)
    if clash:
        raise TiotestError("CLOCK_CLASH", f"clocks {sorted(clash)} are already proper")
    added = sorted((extra_proper | extra_observed) - set(a.clocks))
    if not added:
        return a
    return a.replace(observed_clocks=a.observed_clocks + tuple(added))


def complement_guards(guards: Iterable[Guard], clocks: Sequence[str]) -> list[Guard]:
    """Disjoint conjunctions whose union is the complement of the union of ``guards``."""
    zones = [g.zone(clocks) for g in guards]
    rest = fed_subtract([Dbm.universe(clocks)], zones)
    return [guard_of_zone(z) for z in rest]


def zone_of(g: Guard, clocks: Sequence[str]) -> Dbm:
    return g.zone(clocks)


__all__ = [
    "Constraint",
    "Guard",
    "TRUE",
    "Edge",
    "Otaio",
    "Issue",
    "ValidationReport",
    "edge",
    "make_otaio",
    "parse_guard",
    "parse_invariant",
    "guard_of_zone",
    "validate_otaio",
    "check_resets",
    "is_trap",
    "is_complete",
    "mirror_alphabets",
    "lift",
    "complement_guards",
    "covers",
    "zone_of",
]

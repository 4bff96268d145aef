"""JSON model documents and Graphviz export."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from . import __version__
from .errors import TiotestError
from .model import Edge, Otaio, make_otaio, parse_guard
from .testgen import FAIL, INCONC, NONE, PASS, TestCase, VerdictMap

FORMAT_VERSION = 1


def automaton_to_json(a: Otaio) -> dict[str, Any]:
    inv = dict(a.invariants)
    locs = []
    for loc in a.locations:
        row: dict[str, Any] = {"name": loc, "invariant": str(inv[loc]) if loc in inv else "true"}
        if a.accept is not None:
            row["accept"] = loc in a.accept
        locs.append(row)
    return {
        "name": a.name,
        "initial": a.initial,
        "locations": locs,
        "inputs": sorted(a.inputs),
        "outputs": sorted(a.outputs),
        "internals": sorted(a.internals),
        "proper_clocks": list(a.proper_clocks),
        "observed_clocks": list(a.observed_clocks),
        "max_constant": a.max_const,
        "edges": [
            {
                "source": e.source,
                "guard": str(e.guard),
                "action": e.action,
                "resets": sorted(e.resets),
                "target": e.target,
            }
            for e in a.edges
        ],
    }


def _need(d: dict, key: str) -> Any:
    if key not in d:
        raise TiotestError("PARSE_ERROR", f"missing field {key!r}")
    return d[key]


def automaton_from_json(d: dict[str, Any]) -> Otaio:
    try:
        locs = _need(d, "locations")
        names = [_need(l, "name") for l in locs]
        accept = None
        if any("accept" in l for l in locs):
            accept = [l["name"] for l in locs if l.get("accept")]
        edges = [
            Edge(
                _need(e, "source"),
                parse_guard(_need(e, "guard")),
                _need(e, "action"),
                frozenset(e.get("resets", [])),
                _need(e, "target"),
            )
            for e in _need(d, "edges")
        ]
        return make_otaio(
            _need(d, "name"),
            names,
            _need(d, "initial"),
            inputs=d.get("inputs", []),
            outputs=d.get("outputs", []),
            internals=d.get("internals", []),
            proper=d.get("proper_clocks", []),
            observed=d.get("observed_clocks", []),
            max_const=int(_need(d, "max_constant")),
            invariants={l["name"]: l["invariant"] for l in locs if l.get("invariant", "true") != "true"},
            edges=edges,
            accept=accept,
        )
    except (TypeError, AttributeError) as exc:
        raise TiotestError("PARSE_ERROR", f"malformed automaton: {exc}") from exc


def verdicts_to_json(vm: VerdictMap) -> dict[str, list[dict[str, str]]]:
    out = {}
    for loc, items in vm.entries:
        out[loc] = [{"zone": str(z), "verdict": k} for z, k in items]
    return out


def verdicts_from_json(d: dict[str, list[dict[str, str]]], clocks: tuple[str, ...]) -> VerdictMap:
    entries = []
    for loc, items in d.items():
        entries.append((loc, tuple((parse_guard(i["zone"]).zone(clocks), i["verdict"]) for i in items)))
    return VerdictMap(clocks, tuple(entries))


def document(a: Otaio, **extra: Any) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "tool": {"name": "tiotest", "version": __version__},
        "automaton": automaton_to_json(a),
    }
    doc.update({k: v for k, v in extra.items() if v is not None})
    return doc


def tc_document(tc: TestCase, **extra: Any) -> dict[str, Any]:
    return document(
        tc.automaton, fail_location=tc.fail_location, verdicts=verdicts_to_json(tc.verdicts), **extra
    )


def dumps(doc: dict[str, Any]) -> str:
    return json.dumps(doc, indent=2) + "\n"


def loads(text: str) -> dict[str, Any]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TiotestError("PARSE_ERROR", f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "automaton" not in doc:
        raise TiotestError("PARSE_ERROR", "document has no automaton block")
    if doc.get("format_version") != FORMAT_VERSION:
        raise TiotestError("PARSE_ERROR", f"unsupported format_version {doc.get('format_version')!r}")
    return doc


def load_automaton(path: str | Path) -> Otaio:
    return automaton_from_json(loads(Path(path).read_text())["automaton"])


def load_tc(path: str | Path) -> TestCase:
    doc = loads(Path(path).read_text())
    a = automaton_from_json(doc["automaton"])
    if "verdicts" not in doc:
        raise TiotestError("PARSE_ERROR", "test case document has no verdicts block")
    return TestCase(a, verdicts_from_json(doc["verdicts"], a.clocks), doc.get("fail_location", "fail"))


def save(doc: dict[str, Any], path: str | Path) -> None:
    Path(path).write_text(dumps(doc))


# --- Graphviz ------------------------------------------------------------------

_COLORS = {PASS: "palegreen", FAIL: "lightcoral", INCONC: "khaki", NONE: "white"}


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def automaton_to_dot(a: Otaio, verdicts: VerdictMap | None = None) -> str:
    table = verdicts.table() if verdicts is not None else {}
    inv = dict(a.invariants)
    out = [f"digraph {_q(a.name)} {{", "  rankdir=LR;", '  __init [shape=point, label=""];']
    for loc in a.locations:
        label = loc if loc not in inv else f"{loc}\n{inv[loc]}"
        attrs = ["shape=" + ("doublecircle" if a.accept and loc in a.accept else "circle")]
        items = table.get(loc, ())
        if items:
            kinds = {k for _, k in items}
            dominant = next(k for k in (NONE, PASS, FAIL, INCONC) if k in kinds)
            attrs.append(f'style=filled, fillcolor="{_COLORS[dominant]}"')
            if len(kinds) > 1:
                parts = [f"{k}: {z}" for z, k in items]
                attrs.append("xlabel=" + _q("\n".join(parts)))
        attrs.append("label=" + _q(label))
        out.append(f"  {_q(loc)} [{', '.join(attrs)}];")
    out.append(f"  __init -> {_q(a.initial)};")
    for e in a.edges:
        mark = "?" if e.action in a.inputs else "!" if e.action in a.outputs else ""
        resets = ",".join(sorted(e.resets))
        lab = f"{e.guard}, {e.action}{mark}, {{{resets}}}"
        out.append(f"  {_q(e.source)} -> {_q(e.target)} [label={_q(lab)}];")
    out.append("}")
    return "\n".join(out) + "\n"

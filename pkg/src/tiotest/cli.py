"""Command-line interface.

Exit codes: 0 success, 1 invalid input or a negative check result,
2 resource or precondition failure.  Errors are printed to standard error
as JSON objects ``{"error": CODE, "message": ...}``.
"""

from __future__ import annotations

import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Callable

import click

from .compose import parallel_product, product
from .detgame import arena_to_dot, build_game, choose_strategy, extract_automaton, solve_safety, strategy_to_json
from .errors import TiotestError
from .exec import SchedulerPolicy, execute_batch, execute_once
from .formats import automaton_to_dot, document, dumps, load_automaton, load_tc, loads, save, tc_document
from .model import Otaio, validate_otaio
from .semantics import Trace, tioco_check
from .testgen import generate_test_case, verdict_of_trace

INPUT_ERRORS = {"PARSE_ERROR", "INCOMPATIBLE", "CLOCK_CLASH", "BAD_ARGUMENT", "TRACE_NOT_IN_TC", "INVALID_MODEL"}


def _fail(err: TiotestError) -> None:
    click.echo(json.dumps(err.to_json()), err=True)
    sys.exit(1 if err.code in INPUT_ERRORS else 2)


def _guarded(fn: Callable) -> Callable:
    def run(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except TiotestError as err:
            _fail(err)

    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


def _load(path: str) -> Otaio:
    a = load_automaton(path)
    report = validate_otaio(a)
    if not report.ok:
        raise TiotestError("INVALID_MODEL", f"{path}: " + ", ".join(sorted(report.codes())))
    return a


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise TiotestError("BAD_ARGUMENT", f"not a rational number: {text!r}") from exc


def _emit(doc: dict, out: str | None) -> None:
    if out:
        save(doc, out)
    else:
        click.echo(dumps(doc), nl=False)


@click.group()
@click.version_option(package_name="artifact")
def main() -> None:
    """Timed automata test generation toolkit."""


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@_guarded
def validate(file: str) -> None:
    """Check well-formedness of a model document."""
    report = validate_otaio(load_automaton(file))
    click.echo(json.dumps(report.to_json(), indent=2))
    sys.exit(0 if report.ok else 1)


@main.command()
@click.argument("first", type=click.Path(exists=True, dir_okay=False))
@click.argument("second", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False))
@_guarded
def parallel(first: str, second: str, output: str | None) -> None:
    """Communication product of two automata."""
    _emit(document(parallel_product(_load(first), _load(second))), output)


@main.command(name="product")
@click.argument("first", type=click.Path(exists=True, dir_okay=False))
@click.argument("second", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False))
@click.option("--lift-accept/--no-accept", default=True, help="Lift accept locations to the product.")
@_guarded
def product_cmd(first: str, second: str, output: str | None, lift_accept: bool) -> None:
    """Synchronous product of two automata."""
    p = product(_load(first), _load(second))
    if not lift_accept:
        p = p.replace(accept=None)
    _emit(document(p), output)


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--clocks", "k", type=int, required=True)
@click.option("--max-const", "m", type=int, required=True)
@click.option("--strategy", type=click.Choice(["auto", "winning", "late", "reset-fresh"]), default="auto")
@click.option("--budget", type=int, default=200_000)
@click.option("--dump-game", type=click.Path(dir_okay=False))
@click.option("--dump-strategy", type=click.Path(dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False))
@_guarded
def determinize(file, k, m, strategy, budget, dump_game, dump_strategy, output) -> None:
    """Determinize an automaton with k clocks and maximal constant M."""
    a = _load(file)
    g = build_game(a, k, m, budget)
    sol = solve_safety(g)
    st = choose_strategy(g, strategy)
    ex = extract_automaton(g, st)
    if dump_game:
        Path(dump_game).write_text(arena_to_dot(g))
    if dump_strategy:
        Path(dump_strategy).write_text(strategy_to_json(g, st) + "\n")
    report = {"winning": sol.winning, "strategy": st.name, "exact": ex.exact}
    _emit(document(ex.automaton, resources={"clocks": k, "max_const": m}, report=report), output)
    click.echo(json.dumps(report), err=True)


@main.command()
@click.option("--spec", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--tp", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--clocks", "k", type=int, required=True)
@click.option("--max-const", "m", type=int, required=True)
@click.option("--strategy", type=click.Choice(["auto", "winning", "late", "reset-fresh"]), default="auto")
@click.option("--budget", type=int, default=200_000)
@click.option("-o", "--output", type=click.Path(dir_okay=False))
@_guarded
def testgen(spec, tp, k, m, strategy, budget, output) -> None:
    """Generate a test case from a specification and a test purpose."""
    res = generate_test_case(load_automaton(spec), load_automaton(tp), k, m, strategy, budget)
    doc = tc_document(res.tc, resources={"clocks": k, "max_const": m}, report=res.report)
    _emit(doc, output)
    if output:
        click.echo(json.dumps(res.report, indent=2))


@main.command(name="exec")
@click.option("--tc", "tc_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--impl", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--runs", type=int, default=1)
@click.option("--seed", type=int, default=0)
@click.option("--policy", type=click.Choice(["earliest", "random-on-grid", "latest-safe"]), default="earliest")
@click.option("--grid", default="1/2")
@click.option("--log", "log_path", type=click.Path(dir_okay=False), help="Line-JSON log of the first run.")
@_guarded
def exec_cmd(tc_path, impl, runs, seed, policy, grid, log_path) -> None:
    """Run a test case against an implementation model."""
    tc, imp = load_tc(tc_path), _load(impl)
    pol = SchedulerPolicy(policy, seed=seed, grid=_fraction(grid))
    if log_path:
        Path(log_path).write_text(execute_once(tc, imp, pol).to_lines())
    click.echo(json.dumps(execute_batch(tc, imp, pol, runs)))


@main.command()
@click.option("--tc", "tc_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--trace", "trace_text", required=True)
@_guarded
def replay(tc_path: str, trace_text: str) -> None:
    """Verdict reached by a trace on a test case."""
    click.echo(verdict_of_trace(load_tc(tc_path), Trace.parse(trace_text)))


@main.command()
@click.option("--spec", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--impl", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--depth", type=int, default=2)
@click.option("--grid", default="1/2")
@_guarded
def tioco(spec: str, impl: str, depth: int, grid: str) -> None:
    """Bounded conformance check of an implementation model."""
    res = tioco_check(_load(impl), _load(spec), depth, _fraction(grid))
    click.echo(json.dumps(res.to_json()))
    sys.exit(0 if res.holds else 1)


@main.command(name="export-dot")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False))
@_guarded
def export_dot(file: str, output: str | None) -> None:
    """Graphviz rendering of a model or test case document."""
    doc = loads(Path(file).read_text())
    if "verdicts" in doc:
        tc = load_tc(file)
        text = automaton_to_dot(tc.automaton, tc.verdicts)
    else:
        text = automaton_to_dot(load_automaton(file))
    if output:
        Path(output).write_text(text)
    else:
        click.echo(text, nl=False)


if __name__ == "__main__":
    main()

"""Command-line entry points: evaluate programs, check derivations, and run
the soundness harness.

Exit codes for `check` and `soundness`: 0 verified / all rows pass,
1 refuted / a row fails, 2 unknown (bounded oracle ran out of fuel),
3 structural or input error.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Optional

import click

from . import checker as ck
from . import index as ix
from . import machine
from . import pcf
from .fuel import DEFAULT_BOUND, DEFAULT_FUEL, FuelExhausted
from .index import (EquationError, IndexUndefined, Refuted, Unknown, Verified,
                    eval_index, subst_index)
from .types import LinArrow, NatI, show_type

__all__ = ["main", "RunReport", "eval_report", "check_program",
           "soundness_rows", "SoundnessError"]


@dataclass(frozen=True)
class RunReport:
    program: str
    value: int
    steps: int
    size: int
    max_config_size: int
    derivation: Optional[str] = None
    weight_value: Optional[int] = None
    step_bound: Optional[int] = None
    bound_ok: Optional[bool] = None
    value_lo: Optional[int] = None
    value_hi: Optional[int] = None
    interval_ok: Optional[bool] = None


class SoundnessError(Exception):
    pass


# ---------------------------------------------------------------------------
# Pure command cores (importable without click)

def load_program(path: str) -> pcf.Term:
    with open(path, "r", encoding="utf-8") as fh:
        return pcf.parse_term(fh.read())


def eval_report(path: str, fuel: int, args: tuple[int, ...] = (),
                trace=None, debug: bool = False) -> RunReport:
    """Run both the machine and the reducer on the program (applied to the
    given numerals) and insist they agree."""
    term = load_program(path)
    for n in args:
        term = pcf.App(term, pcf.Const(n))
    ty = pcf.pcf_typecheck((), term)
    if ty != pcf.NAT:
        raise pcf.PcfTypeError(
            f"programs must have type Nat, got {pcf.show_pcf_type(ty)}")
    result = machine.run(term, fuel, trace=trace, debug=debug)
    value, _ = pcf.wh_eval(term, fuel)
    if value != result.value:
        raise AssertionError(
            f"machine produced {result.value}, reducer {value}")
    return RunReport(path, result.value, result.steps, pcf.size(term),
                     result.max_config_size)


def check_program(deriv_path: str, program_path: str, eqprog_path: str,
                  bound: int, fuel: int, precise: bool) -> ck.CheckReport:
    program = ix.load_equations(eqprog_path)
    term = load_program(program_path)
    deriv = ck.bind(ck.load_derivation(deriv_path), term)
    return ck.check(deriv, program, bound, fuel, precise)


def soundness_rows(deriv: ck.Derivation, term: pcf.Term,
                   program: ix.EquationalProgram,
                   instantiations: tuple[int, ...], fuel: int,
                   program_path: str = "<program>",
                   deriv_path: str = "<derivation>") -> list[RunReport]:
    """Instantiate the root judgement and compare its bounds with a real
    machine run: steps <= size * (weight + 1), and the value inside the
    declared interval."""
    weight, ty = ck.root_bounds(deriv)

    def row(term_n, w, lo, hi, label):
        size_n = pcf.size(term_n)
        try:
            w_v = eval_index(w, {}, program, fuel)
            lo_v = eval_index(lo, {}, program, fuel)
            hi_v = eval_index(hi, {}, program, fuel)
        except (IndexUndefined, FuelExhausted) as e:
            raise SoundnessError(f"{label}: cannot evaluate the root bounds: {e}")
        result = machine.run(term_n, fuel)
        step_bound = size_n * (w_v + 1)
        return RunReport(
            program=label, value=result.value, steps=result.steps,
            size=size_n, max_config_size=result.max_config_size,
            derivation=deriv_path, weight_value=w_v, step_bound=step_bound,
            bound_ok=result.steps <= step_bound, value_lo=lo_v, value_hi=hi_v,
            interval_ok=lo_v <= result.value <= hi_v)

    if isinstance(ty, NatI):
        return [row(term, weight, ty.lo, ty.hi, program_path)]
    if not isinstance(ty, LinArrow) or not isinstance(ty.cod, NatI):
        raise SoundnessError(
            "the root type must be Nat[I,J] or a first-order arrow into it, "
            f"got {show_type(ty)}")
    dom = ty.dom
    if not isinstance(dom.body, NatI):
        raise SoundnessError("the arrow argument must be a Nat interval")
    lo, hi = dom.body.lo, dom.body.hi
    if not (isinstance(lo, ix.Var) and lo == hi):
        raise SoundnessError(
            "the arrow argument must be Nat[x] for an index variable x")
    var = lo.name
    if deriv.ctx.variables != (var,) or deriv.ctx.constraints:
        raise SoundnessError(
            f"the root judgement must quantify exactly over {var!r}")
    rows = []
    for n in instantiations:
        term_n = pcf.App(term, pcf.Const(n))
        w_n = subst_index(weight, var, ix.Lit(n))
        lo_n = subst_index(ty.cod.lo, var, ix.Lit(n))
        hi_n = subst_index(ty.cod.hi, var, ix.Lit(n))
        rows.append(row(term_n, w_n, lo_n, hi_n,
                        f"{program_path} {var}:={n}"))
    return rows


# ---------------------------------------------------------------------------
# Rendering

def _verdict_str(v) -> str:
    match v:
        case Verified(bound):
            return f"verified up to bound {bound}"
        case Refuted(witness):
            inside = ", ".join(f"{k}={n}" for k, n in witness)
            return f"refuted at {{{inside}}}"
        case Unknown(reason, witness):
            at = ""
            if witness:
                at = " at {" + ", ".join(f"{k}={n}" for k, n in witness) + "}"
            return f"unknown ({reason}{at})"
    return str(v)


def _verdict_code(v) -> int:
    match v:
        case Verified():
            return 0
        case Refuted():
            return 1
    return 2


def render_check_report(report: ck.CheckReport, fmt: str) -> str:
    lines = []
    if fmt == "tsv":
        for ob in report.obligations:
            lines.append("\t".join((ck.path_str(ob.path), ob.kind,
                                    _verdict_str(ob.verdict), ob.payload)))
        lines.append("\t".join(("overall", _verdict_str(report.overall),
                                f"bound={report.bound}", f"fuel={report.fuel}")))
        return "\n".join(lines)
    width = max((len(ck.path_str(ob.path)) for ob in report.obligations),
                default=4)
    for ob in report.obligations:
        mark = {0: "ok", 1: "XX", 2: "??"}[_verdict_code(ob.verdict)]
        lines.append(f"{mark}  {ck.path_str(ob.path):<{width}}  "
                     f"{ob.kind:<16}  {ob.payload}")
        if _verdict_code(ob.verdict) != 0:
            lines.append(f"      -> {_verdict_str(ob.verdict)}")
    lines.append(f"overall: {_verdict_str(report.overall)} "
                 f"(bound {report.bound}, fuel {report.fuel})")
    return "\n".join(lines)


def render_rows(rows: list[RunReport], fmt: str) -> str:
    if fmt == "tsv":
        out = []
        for r in rows:
            out.append("\t".join(str(x) for x in (
                r.program, r.value, r.steps, r.size, r.weight_value,
                r.step_bound, _pf(r.bound_ok), r.value_lo, r.value_hi,
                _pf(r.interval_ok))))
        return "\n".join(out)
    header = (f"{'program':<24} {'value':>5} {'steps':>6} {'size':>4} "
              f"{'weight':>7} {'steps<=size*(w+1)':>18} {'interval':>12}")
    out = [header]
    for r in rows:
        bound_part = f"{r.steps} <= {r.step_bound}: {_pf(r.bound_ok)}"
        iv = f"[{r.value_lo},{r.value_hi}]: {_pf(r.interval_ok)}"
        out.append(f"{r.program:<24} {r.value:>5} {r.steps:>6} {r.size:>4} "
                   f"{r.weight_value!s:>7} {bound_part:>18} {iv:>12}")
    return "\n".join(out)


def _pf(flag: Optional[bool]) -> str:
    return "-" if flag is None else ("pass" if flag else "FAIL")


# ---------------------------------------------------------------------------
# Click wiring

_INPUT_ERRORS = (ix.IndexSyntaxError, pcf.PcfSyntaxError, pcf.PcfTypeError,
                 ck.DerivationSyntaxError, EquationError, OSError, ValueError)


@click.group()
def main() -> None:
    """Toolchain for cost-annotated PCF: run programs on the counting
    machine, check weighted derivations, confirm the soundness bounds."""


@main.command("eval")
@click.argument("program", type=click.Path(exists=True, dir_okay=False))
@click.option("--fuel", default=DEFAULT_FUEL, show_default=True)
@click.option("--arg", "args", multiple=True, type=int,
              help="Apply the program to this numeral (repeatable).")
@click.option("--trace", type=click.Path(dir_okay=False), default=None,
              help="Write one line per machine step to this path.")
@click.option("--debug", is_flag=True,
              help="Assert the environment-size invariant at every step.")
@click.option("--format", "fmt", type=click.Choice(["human", "tsv"]),
              default="human", show_default=True)
def eval_cmd(program, fuel, args, trace, debug, fmt) -> None:
    """Run a program on both the machine and the reducer."""
    try:
        if trace is not None:
            with open(trace, "w", encoding="utf-8") as fh:
                report = eval_report(program, fuel, tuple(args), trace=fh,
                                     debug=debug)
        else:
            report = eval_report(program, fuel, tuple(args), debug=debug)
    except FuelExhausted as e:
        click.echo(f"fuel exhausted: {e}", err=True)
        sys.exit(1)
    except _INPUT_ERRORS as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(3)
    if fmt == "tsv":
        click.echo("\t".join(str(x) for x in (
            report.program, report.value, report.steps, report.size,
            report.max_config_size)))
    else:
        click.echo(f"value {report.value} in {report.steps} steps "
                   f"(program size {report.size}, peak configuration size "
                   f"{report.max_config_size})")


_eqprog_option = click.option(
    "--eqprog", envvar="DLPCF_EQPROG", required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Equational program (.eqs); DLPCF_EQPROG is the default.")


@main.command("check")
@click.argument("derivation", type=click.Path(exists=True, dir_okay=False))
@click.argument("program", type=click.Path(exists=True, dir_okay=False))
@_eqprog_option
@click.option("--bound", default=DEFAULT_BOUND, show_default=True)
@click.option("--fuel", default=DEFAULT_FUEL, show_default=True)
@click.option("--precise", is_flag=True,
              help="Require every inequality premise to hold as an equality.")
@click.option("--format", "fmt", type=click.Choice(["human", "tsv"]),
              default="human", show_default=True)
def check_cmd(derivation, program, eqprog, bound, fuel, precise, fmt) -> None:
    """Check a derivation file against a program."""
    try:
        report = check_program(derivation, program, eqprog, bound, fuel,
                               precise)
    except ck.StructuralError as e:
        click.echo(f"structural error: {e}", err=True)
        sys.exit(3)
    except _INPUT_ERRORS as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(3)
    click.echo(render_check_report(report, fmt))
    sys.exit(_verdict_code(report.overall))


@main.command("soundness")
@click.argument("derivation", type=click.Path(exists=True, dir_okay=False))
@click.argument("program", type=click.Path(exists=True, dir_okay=False))
@_eqprog_option
@click.option("--bound", default=DEFAULT_BOUND, show_default=True,
              help="Bound for the derivation check that gates the harness.")
@click.option("--fuel", default=DEFAULT_FUEL, show_default=True)
@click.option("-n", "instantiations", multiple=True, type=int,
              help="Instantiate the root index variable here (repeatable).")
@click.option("--format", "fmt", type=click.Choice(["human", "tsv"]),
              default="human", show_default=True)
def soundness_cmd(derivation, program, eqprog, bound, fuel, instantiations,
                  fmt) -> None:
    """Check the derivation, then confirm its bounds on machine runs."""
    try:
        eqs = ix.load_equations(eqprog)
        term = load_program(program)
        deriv = ck.bind(ck.load_derivation(derivation), term)
        report = ck.check(deriv, eqs, bound, fuel)
    except ck.StructuralError as e:
        click.echo(f"structural error: {e}", err=True)
        sys.exit(3)
    except _INPUT_ERRORS as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(3)
    code = _verdict_code(report.overall)
    click.echo(f"derivation: {_verdict_str(report.overall)} "
               f"(bound {report.bound}, fuel {report.fuel})")
    if code != 0:
        sys.exit(code)
    try:
        rows = soundness_rows(deriv, term, eqs, tuple(instantiations), fuel,
                              program_path=program, deriv_path=derivation)
    except (SoundnessError, FuelExhausted) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(3)
    if not rows:
        click.echo("error: an arrow-typed root needs at least one -n "
                   "instantiation", err=True)
        sys.exit(3)
    click.echo(render_rows(rows, fmt))
    if not all(r.bound_ok and r.interval_ok for r in rows):
        sys.exit(1)


if __name__ == "__main__":
    main()

"""Command line entry point.

Exit status: 0 for a positive verdict, 1 for a negative or Unknown one,
2 for malformed input.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from . import evalsem as ev
from . import findom as fd
from . import generate as gen
from .checker import (CheckOptions, Derivable, IllTyped, Judgment, Unknown, check_normal,
                      eta_expand, normalize_goal, normalize_hyp, render_trace, show_judgment)
from .logic import (FormulaError, NormalFormTooLarge, Up, check_formula, classify,
                    cnf_elements, compile_formula, dnf_elements, entail_fin, is_conjunctive,
                    is_schema_free, push_modalities, show_formula, truncate)
from .parser import ParseError, parse_formula, parse_judgment_file, parse_type, parse_typed_term, split_top
from .syntax import DEFAULT_REGISTRY, PureTypeError, RegistryError, annotate, parse_bases, show_type


class InputError(Exception):
    """Malformed input; reported with exit status 2."""


def _emit(args, human: str, payload: dict):
    if args.json:
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        print(human)


def _registry(args):
    if not args.bases:
        return DEFAULT_REGISTRY
    try:
        return parse_bases(Path(args.bases).read_text(), DEFAULT_REGISTRY)
    except OSError as exc:
        raise InputError(f"{args.bases}: {exc.strerror}") from None


def _input_text(args) -> tuple[str, Path | None]:
    if args.expr is not None:
        return args.expr, None
    if args.input is None:
        raise InputError("give an input file or -e TEXT")
    path = Path(args.input)
    try:
        return path.read_text(), path
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def _strip_comments(text: str) -> str:
    return "\n".join(line for line in text.splitlines() if not line.strip().startswith("--"))


def _formula_at(tau, text, reg):
    phi = parse_formula(text, reg)
    check_formula(tau, phi, reg)
    return phi


def _parts(args, reg, n):
    text, _ = _input_text(args)
    parts = split_top(_strip_comments(text), ";")
    if len(parts) != n:
        raise InputError(f"expected {n} parts separated by ';', found {len(parts)}")
    tau = parse_type(parts[0], reg)
    return tau, [_formula_at(tau, p, reg) for p in parts[1:]]


# ------------------------------------------------------------ commands


def cmd_entail(args) -> int:
    reg = _registry(args)
    tau, (psi, phi) = _parts(args, reg, 3)
    psi_t, phi_t = truncate(psi, args.k), truncate(phi, args.k)
    left = dnf_elements(push_modalities(psi_t))
    right = cnf_elements(push_modalities(phi_t))
    holds = entail_fin(psi_t, phi_t)
    verdict = "ENTAILS" if holds else "NOT-ENTAILS"
    human = "\n".join([verdict,
                       "left: " + (" | ".join(fd.sexpr(d) for d in left) or "empty"),
                       "right: " + (" & ".join("(" + " | ".join(fd.sexpr(c) for c in cl) + ")"
                                                for cl in right) or "true")])
    _emit(args, human, {"verdict": verdict, "k": args.k,
                        "left": [fd.sexpr(d) for d in left],
                        "right": [[fd.sexpr(c) for c in cl] for cl in right]})
    return 0 if holds else 1


def cmd_consistent(args) -> int:
    reg = _registry(args)
    tau, (phi,) = _parts(args, reg, 2)
    phi_t = truncate(phi, args.k)
    if not is_conjunctive(phi_t):
        raise InputError(f"not a conjunctive formula after truncation: {show_formula(phi_t)}")
    c = compile_formula(phi_t)
    if isinstance(c, Up):
        _emit(args, f"CONSISTENT d={fd.sexpr(c.elt)}", {"verdict": "CONSISTENT", "witness": fd.sexpr(c.elt)})
        return 0
    _emit(args, "INCONSISTENT", {"verdict": "INCONSISTENT", "witness": None})
    return 1


def cmd_compile(args) -> int:
    reg = _registry(args)
    tau, (phi,) = _parts(args, reg, 2)
    phi_t = truncate(phi, args.k)
    cls = classify(phi_t).value
    if is_conjunctive(phi_t):
        c = compile_formula(phi_t)
        out = fd.sexpr(c.elt) if isinstance(c, Up) else "empty"
        _emit(args, f"{cls}: {out}", {"class": cls, "compiled": out})
        return 0
    elts = dnf_elements(push_modalities(phi_t))
    _emit(args, f"{cls}: " + (" | ".join(fd.sexpr(d) for d in elts) or "empty"),
          {"class": cls, "minimal": [fd.sexpr(d) for d in elts]})
    return 0


def _options(args, stanza_options: dict) -> CheckOptions:
    base = dict(k=args.k, n_fix=args.nfix, fuel=args.fuel)
    base.update(stanza_options)
    return CheckOptions(**base)


def _judgments(args, reg):
    text, path = _input_text(args)
    base_dir = path.parent if path else Path.cwd()
    jf = parse_judgment_file(text, reg, base_dir)
    return jf


def cmd_check(args) -> int:
    jf = _judgments(args, _registry(args))
    return _run_stanzas(args, jf)


def _run_stanzas(args, jf, prefix: str = "") -> int:
    status = 0
    reports = []
    lines = []
    for st in jf.stanzas:
        opts = _options(args, st.options)
        v = check_normal(st.judgment, opts, jf.registry)
        name = prefix + st.label
        resources_ = f"k={opts.k} wide={opts.wide_depth} n_fix={opts.n_fix} fuel={opts.fuel}"
        report = {"label": name, "judgment": show_judgment(st.judgment), "verdict": type(v).__name__,
                  "k": opts.k, "wide": opts.wide_depth, "n_fix": opts.n_fix, "fuel": opts.fuel}
        match v:
            case Derivable(trace=trace):
                lines.append(f"{name}: Derivable ({resources_}, {len(trace)} steps)")
                if args.trace:
                    lines.append(_indent(render_trace(trace)))
                report["steps"] = len(trace)
                if args.trace:
                    report["trace"] = [[s.rule, s.subject, s.goal, list(s.premises)] for s in trace]
            case Unknown(reason=reason, subgoal=subgoal):
                status = max(status, 1)
                lines.append(f"{name}: Unknown ({resources_})")
                lines.append(f"  reason: {reason}")
                lines.append(f"  subgoal: {subgoal}")
                report.update(reason=reason, subgoal=subgoal)
                refuted = _oracle_refute(st.judgment, opts, args.rank, jf.registry)
                if refuted:
                    lines.append(f"  oracle: {refuted}")
                    report["oracle"] = refuted
            case IllTyped(error=error):
                status = 2
                lines.append(f"{name}: IllTyped: {error}")
                report["error"] = error
        reports.append(report)
    _emit(args, "\n".join(lines), {"results": reports})
    return status


def _indent(text: str) -> str:
    return "\n".join("  " + line for line in text.splitlines())


def _oracle_refute(j: Judgment, opts: CheckOptions, rank: int, reg) -> str | None:
    """Look for a finite counterexample to a judgment the checker left open."""
    try:
        parts = eta_expand(j, opts)
    except ValueError:
        return None
    for part in parts:
        ctx = []
        for x, t in part.ctx:
            ty, phi = normalize_hyp(t, opts)
            ctx.append((x, ty, phi))
        tau, goal = normalize_goal(part.goal, opts)
        if not all(is_schema_free(f) for _, _, f in ctx) or not is_schema_free(goal):
            return None
        fj = gen.FiniteJudgment(tuple(ctx), part.term, tau, goal)
        space = 1
        for _, ty, _ in ctx:
            space *= len(fd.enumerate_elements(ty, rank, reg))
        if space > 20000:
            return None
        try:
            bad = gen.oracle_violation(fj, rank, opts.fuel, reg)
        except (ev.EvalBudgetExceeded, fd.ShapeError):
            return None
        if bad is not None:
            inst, value = bad
            where = ", ".join(f"{x}={fd.sexpr(d)}" for x, d in inst.items()) or "empty context"
            return f"unsound: with {where} the value {fd.sexpr(value)} misses the goal"
    return None


def cmd_eval(args) -> int:
    reg = _registry(args)
    text, _ = _input_text(args)
    term, ty = parse_typed_term(_strip_comments(text).strip(), reg)
    try:
        typing = annotate([], term, reg, expected=ty)
    except PureTypeError as exc:
        raise InputError(str(exc)) from None
    tau = typing.type
    value = ev.deep(_lower, term, args.fuel, tau, args.rank, reg)
    payload = {"type": show_type(tau), "fuel": args.fuel, "rank": args.rank, "value": fd.sexpr(value)}
    human = fd.sexpr(value)
    status = 0
    if args.member is not None:
        phi = _formula_at(tau, args.member, reg)
        m = ev.deep(_member, term, args.fuel, truncate(phi, args.k))
        payload["member"] = m.value
        human += f"\nmember: {m.value}"
        status = 0 if m is ev.Membership.HOLDS else 1
    _emit(args, human, payload)
    return status


def _lower(term, fuel, tau, rank, reg):
    with ev.step_budget():
        return ev.lower(ev.evaluate(term, {}, fuel), tau, fuel, rank, reg)


def _member(term, fuel, phi):
    return ev.member(ev.evaluate(term, {}, fuel), phi)


def cmd_oracle(args) -> int:
    reg = _registry(args)
    if args.rank > gen.MAX_ORACLE_RANK:
        raise InputError(f"oracle rank is capped at {gen.MAX_ORACLE_RANK}")
    if args.mode == "sweep":
        tau = parse_type(args.type, reg)
        res = gen.oracle_sweep(tau, args.size, args.rank, reg)
        human = [f"formulas: {res.formulas}", f"agree: {res.agree}/{res.total}"]
        human += ["disagree: " + " ; ".join(d) for d in res.disagreements]
        _emit(args, "\n".join(human), {"type": show_type(tau), "size": args.size, "rank": args.rank,
                                       "formulas": res.formulas, "agree": res.agree, "total": res.total,
                                       "disagreements": [list(d) for d in res.disagreements]})
        return 0 if res.ok else 1
    tau, (psi, phi) = _parts(args, reg, 3)
    psi_t, phi_t = truncate(psi, args.k), truncate(phi, args.k)
    holds = ev.oracle_entail(tau, psi_t, phi_t, args.rank, reg)
    verdict = "ENTAILS" if holds else "NOT-ENTAILS"
    _emit(args, verdict, {"verdict": verdict, "rank": args.rank, "k": args.k})
    return 0 if holds else 1


def corpus_dir():
    return resources.files("dtlf") / "corpus"


def corpus_files() -> list[str]:
    return sorted(p.name for p in corpus_dir().iterdir()
                  if p.name.endswith(".dtlf") and p.name != "prelude.dtlf")


def cmd_corpus(args) -> int:
    names = corpus_files()
    if args.list:
        print("\n".join(names))
        return 0
    chosen = args.names or names
    status = 0
    results = []
    for name in chosen:
        if not name.endswith(".dtlf"):
            name += ".dtlf"
        if name not in names:
            raise InputError(f"no corpus file {name}; try --list")
        with resources.as_file(corpus_dir() / name) as path:
            jf = parse_judgment_file(path.read_text(), _registry(args), path.parent)
        if args.json:
            results.append((name, jf))
            continue
        status = max(status, _run_stanzas(args, jf, prefix=f"{name}: "))
    if args.json:
        merged = type(results[0][1])(registry=DEFAULT_REGISTRY) if results else None
        if merged is not None:
            for name, jf in results:
                for st in jf.stanzas:
                    st.label = f"{name}: {st.label}"
                    merged.stanzas.append(st)
                merged.registry = jf.registry
            status = _run_stanzas(args, merged)
    return status


# ---------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--k", type=_nonneg, default=2, help="truncation depth for schemas (default 2)")
    common.add_argument("--nfix", type=_nonneg, default=4, help="longest fixpoint invariant chain (default 4)")
    common.add_argument("--fuel", type=_nonneg, default=16, help="evaluation fuel (default 16)")
    common.add_argument("--rank", type=_nonneg, default=2, help="rank of enumerated finite elements (default 2)")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--bases", metavar="FILE", help="file of `base Name = c1 ... cn` lines")

    def with_input(p):
        p.add_argument("input", nargs="?", help="input file")
        p.add_argument("-e", dest="expr", metavar="TEXT", help="inline input instead of a file")

    top = argparse.ArgumentParser(prog="dtlf", description=__doc__.splitlines()[0])
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("entail", parents=[common], help="decide `tau ; psi ; phi` entailment")
    with_input(p)
    p.set_defaults(fn=cmd_entail)
    p = sub.add_parser("consistent", parents=[common], help="decide consistency of `tau ; phi`")
    with_input(p)
    p.set_defaults(fn=cmd_consistent)
    p = sub.add_parser("compile", parents=[common], help="compile `tau ; phi` to finite elements")
    with_input(p)
    p.set_defaults(fn=cmd_compile)
    p = sub.add_parser("check", parents=[common], help="check a judgment file")
    with_input(p)
    p.add_argument("--trace", action="store_true", help="print derivations")
    p.set_defaults(fn=cmd_check)
    p = sub.add_parser("eval", parents=[common], help="evaluate `term` or `term : type`")
    with_input(p)
    p.add_argument("--member", metavar="FORMULA", help="also test membership in a formula")
    p.set_defaults(fn=cmd_eval)
    p = sub.add_parser("oracle", parents=[common], help="brute-force oracle")
    p.add_argument("mode", choices=["sweep", "query"])
    with_input(p)
    p.add_argument("--type", default="Bool", help="type for sweep (default Bool)")
    p.add_argument("--size", type=_nonneg, default=6, help="largest formula size for sweep (default 6)")
    p.set_defaults(fn=cmd_oracle)
    p = sub.add_parser("corpus", parents=[common], help="check the bundled judgment corpus")
    p.add_argument("names", nargs="*", help="corpus files (default all)")
    p.add_argument("--list", action="store_true", help="list corpus files")
    p.add_argument("--trace", action="store_true", help="print derivations")
    p.set_defaults(fn=cmd_corpus)
    return top


def _nonneg(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text}") from None
    if n < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return n


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.fn(args)
    except (InputError, ParseError, FormulaError, RegistryError, PureTypeError,
            NormalFormTooLarge, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

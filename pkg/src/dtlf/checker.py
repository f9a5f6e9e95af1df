"""Refinement type checking.

A judgment is brought to the shape the rules need in three moves: goal and
context types become formulas over their pure types, schemas are cut at a
finite depth, and the formulas are split. The goal splits into clauses
(conjunction introduction) and each context entry into its disjuncts
(disjunction elimination). What is left are judgments whose context
entries and goal are single finite elements, and these are derived by
the term-directed rules.

The rules that need an intermediate element (application, fixpoints,
case) find it by running the evaluator: the argument of an application
is refined by exactly what the function inspects of it, and a fixpoint
gets its invariant chain by walking the Kleene iterates backwards from
the goal.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Union

from . import evalsem as ev
from . import findom as fd
from .findom import BOT, FinElt
from .logic import (Formula, NormalFormTooLarge, Up, char_formula, cnf_elements, compile_formula,
                    dnf_elements, entail_conj, is_conjunctive, is_normal, push_modalities,
                    show_formula, truncate_polar)
from .subtype import ArrowT, ProdT, PureT, Refine, RefType, char_type, show_ref_type, underlying
from .syntax import (App, Arrow, Ascribe, Base, BaseRegistry, Case, Const, DEFAULT_REGISTRY, Fix,
                     FixAnnotated, Fold, Lam, Pair, Proj, Prod, PureType, PureTypeError, Rec, Term,
                     Typing, Unfold, Var, annotate, free_vars, show_term, unroll)


@dataclass(frozen=True)
class Judgment:
    ctx: tuple[tuple[str, RefType], ...]
    term: Term
    goal: RefType


def show_judgment(j: Judgment) -> str:
    ctx = ", ".join(f"{x} : {show_ref_type(t)}" for x, t in j.ctx)
    return f"{ctx} |- {show_term(j.term)} : {show_ref_type(j.goal)}".lstrip()


@dataclass
class CheckOptions:
    k: int = 2
    n_fix: int = 4
    fuel: int = 16
    use_semantic_fallback: bool = True
    disjunct_limit: int = 64
    wide: int | None = None
    steps: int = ev.DEFAULT_STEPS

    def __post_init__(self):
        for name in ("k", "n_fix", "fuel", "disjunct_limit", "steps"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.wide is not None and self.wide < self.k:
            raise ValueError("wide must be at least k")

    @property
    def wide_depth(self) -> int:
        return self.k + 1 if self.wide is None else self.wide


@dataclass(frozen=True)
class Step:
    """One rule application; premises index earlier steps of the trace."""

    rule: str
    subject: str
    goal: str
    premises: tuple[int, ...] = ()


@dataclass
class Derivable:
    trace: list[Step]
    k: int
    wide: int


@dataclass
class Unknown:
    reason: str
    subgoal: str


@dataclass
class IllTyped:
    error: str


Verdict = Union[Derivable, Unknown, IllTyped]


class Stuck(Exception):
    def __init__(self, reason: str, subgoal: str):
        super().__init__(reason)
        self.reason = reason
        self.subgoal = subgoal


class NotFonf(ValueError):
    """The goal is not first order over normal forms."""


# ------------------------------------------------------- normalization


def normalize_goal(goal: RefType, opts: CheckOptions) -> tuple[PureType, Formula]:
    tau, phi = char_type(goal)
    return tau, truncate_polar(phi, opts.k, opts.wide_depth, positive=True)


def normalize_hyp(t: RefType, opts: CheckOptions) -> tuple[PureType, Formula]:
    tau, phi = char_type(t)
    return tau, truncate_polar(phi, opts.k, opts.wide_depth, positive=False)


def _short(s: str, n: int = 120) -> str:
    return s if len(s) <= n else s[: n - 3] + "..."


# ------------------------------------------------------------- rules


class _Deriver:
    def __init__(self, typing: Typing, opts: CheckOptions, reg: BaseRegistry):
        self.typing = typing
        self.opts = opts
        self.reg = reg
        self.trace: list[Step] = []

    def emit(self, rule: str, t: Term, d: FinElt, premises=()) -> int:
        self.trace.append(Step(rule, _short(show_term(t)), fd.sexpr(d), tuple(premises)))
        return len(self.trace) - 1

    def type_of(self, t: Term) -> PureType:
        return self.typing.of(t)

    def stuck(self, reason: str, t: Term, d: FinElt):
        raise Stuck(reason, f"{_short(show_term(t))} : {fd.sexpr(d)}")

    def session(self):
        return ev.step_budget(self.opts.steps)

    def derive(self, ctx: dict, t: Term, tau: PureType, d: FinElt) -> int:
        """Derive ctx |- t : {tau | char(d)}; ctx maps variables to (type, element)."""
        if d == BOT:
            return self.emit("true-right", t, d)
        match t:
            case Var(x):
                if fd.leq(d, ctx[x][1]):
                    return self.emit("var", t, d)
                self.stuck(f"hypothesis on {x} is too weak", t, d)
            case Const(_, c):
                if fd.leq(d, fd.Atom(c)):
                    return self.emit("const", t, d)
                self.stuck(f"constant {c} does not satisfy the goal", t, d)
            case Ascribe(a, _):
                return self.emit("ascribe", t, d, [self.derive(ctx, a, tau, d)])
            case Lam(x, body):
                if not isinstance(d, fd.Fun):
                    self.stuck("function goal expected", t, d)
                prem = [self.derive({**ctx, x: (tau.dom, a)}, body, tau.cod, r) for a, r in d.steps]
                return self.emit("lam", t, d, prem)
            case Pair(a, b):
                prem = [self.derive(ctx, a, tau.left, fd.left(d)),
                        self.derive(ctx, b, tau.right, fd.right(d))]
                return self.emit("pair", t, d, prem)
            case Proj(i, a):
                pt = self.type_of(a)
                target = fd.mk_pair(d, BOT) if i == 1 else fd.mk_pair(BOT, d)
                return self.emit(f"pi{i}", t, d, [self.derive(ctx, a, pt, target)])
            case Fold(a):
                return self.emit("fold", t, d, [self.derive(ctx, a, unroll(tau), fd.inner(d))])
            case Unfold(a):
                rt = self.type_of(a)
                return self.emit("unfold", t, d, [self.derive(ctx, a, rt, fd.mk_fold(d))])
            case Case(s, _):
                return self.case_rule(ctx, t, tau, d)
            case App(f, a):
                return self.app_rule(ctx, t, tau, d)
            case Fix(x, body):
                chain = self.fix_chain(ctx, t, tau, d)
                if chain is None:
                    self.stuck(f"no invariant chain within {self.opts.n_fix} iterations", t, d)
                return self.fix_links(ctx, t, tau, chain, d, "fix")
            case FixAnnotated(x, body, formulas):
                chain = [BOT]
                for f in formulas:
                    c = compile_formula(f) if is_conjunctive(f) else None
                    if not isinstance(c, Up):
                        self.stuck(f"invariant {show_formula(f)} is not a consistent conjunctive formula", t, d)
                    chain.append(c.elt)
                if not fd.leq(d, chain[-1]):
                    self.stuck("last invariant does not entail the goal", t, d)
                return self.fix_links(ctx, t, tau, chain, d, "fix-annotated")
        raise TypeError(f"not a term: {t!r}")

    def env(self, ctx: dict) -> dict:
        return {x: ev.Approx(e) for x, (_, e) in ctx.items()}

    def case_rule(self, ctx, t: Case, tau, d) -> int:
        try:
            with self.session():
                c = ev.scrutinize(ev.evaluate(t.scrutinee, self.env(ctx), self.opts.fuel))
        except ev.EvalBudgetExceeded:
            c = None
        if c is None:
            self.stuck("scrutinee does not evaluate to a constant", t, d)
        st = self.type_of(t.scrutinee)
        prem = [self.derive(ctx, t.scrutinee, st, fd.Atom(c)),
                self.derive(ctx, t.branch(c), tau, d)]
        return self.emit(f"case-{c}", t, d, prem)

    def app_rule(self, ctx, t: App, tau, d) -> int:
        env = self.env(ctx)
        node = ev.ObsNode()
        try:
            with self.session():
                fval = ev.evaluate(t.fun, env, self.opts.fuel)
                arg = ev.Tracked(ev.delay(t.arg, env, self.opts.fuel), node)
                reached = ev.value_geq(ev.apply_value(fval, arg), d)
        except ev.EvalBudgetExceeded:
            reached = False
        if not reached:
            self.stuck(f"application does not reach the goal with fuel {self.opts.fuel}", t, d)
        e = node.snapshot()
        dom = self.type_of(t.arg)
        prem = [self.derive(ctx, t.arg, dom, e),
                self.derive(ctx, t.fun, Arrow(dom, tau), fd.mk_fun([(e, d)]))]
        return self.emit("app", t, d, prem)

    def fix_chain(self, ctx, t, tau, d) -> list[FinElt] | None:
        """Elements d_0 = bot, ..., d_m = d with body mapping each d_j above d_{j+1}.

        The m-th Kleene iterate is found first; then each earlier element is
        what the body inspects of the previous iterate while producing the
        later one.
        """
        x, body = t.var, t.body
        env = self.env(ctx)
        fuel = self.opts.fuel
        iterates = [ev.Approx(BOT)]
        try:
            with self.session():
                m = None
                for j in range(self.opts.n_fix + 1):
                    if ev.value_geq(iterates[j], d):
                        m = j
                        break
                    prev = iterates[j]
                    iterates.append(ev.Thunk(lambda prev=prev: ev.evaluate(body, {**env, x: prev}, fuel)))
                if m is None:
                    return None
                chain = [d]
                for j in range(m, 0, -1):
                    node = ev.ObsNode()
                    res = ev.evaluate(body, {**env, x: ev.Tracked(iterates[j - 1], node)}, fuel)
                    if not ev.value_geq(res, chain[0]):
                        return None
                    chain.insert(0, node.snapshot())
        except ev.EvalBudgetExceeded:
            return None
        return chain

    def fix_links(self, ctx, t, tau, chain, d, rule) -> int:
        x, body = t.var, t.body
        prem = [self.derive({**ctx, x: (tau, chain[j])}, body, tau, chain[j + 1])
                for j in range(len(chain) - 1)]
        return self.emit(rule, t, d, prem)


def fix_iterate(ctx: dict, x: str, body: Term, tau: PureType, target: Formula, n: int,
                fuel: int = 16, reg: BaseRegistry = DEFAULT_REGISTRY) -> list[Formula] | None:
    """Invariant chain true = psi_0, ..., psi_m for `fix x. body` reaching
    the conjunctive `target`, with every link re-derived; None if no
    m <= n works. `ctx` maps variables to (type, element)."""
    compiled = compile_formula(target)
    if not isinstance(compiled, Up):
        return None
    t = Fix(x, body)
    typing = annotate([(y, ty) for y, (ty, _) in ctx.items()], t, reg, expected=tau)
    der = _Deriver(typing, CheckOptions(n_fix=n, fuel=fuel), reg)

    def run():
        if compiled.elt == BOT:
            return [BOT]
        chain = der.fix_chain(ctx, t, tau, compiled.elt)
        if chain is None:
            return None
        try:
            der.fix_links(ctx, t, tau, chain, compiled.elt, "fix")
        except Stuck:
            return None
        return chain

    chain = ev.deep(run)
    return None if chain is None else [char_formula(c) for c in chain]


# ------------------------------------------------------------ entry points


def check(j: Judgment, opts: CheckOptions | None = None,
          reg: BaseRegistry = DEFAULT_REGISTRY) -> Verdict:
    opts = opts or CheckOptions()
    return ev.deep(_check, j, opts, reg)


def _check(j: Judgment, opts: CheckOptions, reg: BaseRegistry) -> Verdict:
    pure_ctx = [(x, underlying(t)) for x, t in j.ctx]
    try:
        typing = annotate(pure_ctx, j.term, reg, expected=underlying(j.goal))
    except PureTypeError as exc:
        return IllTyped(str(exc))
    der = _Deriver(typing, opts, reg)
    tau, goal = normalize_goal(j.goal, opts)
    try:
        per_var = []
        for x, t in j.ctx:
            ty, phi = normalize_hyp(t, opts)
            elts = dnf_elements(push_modalities(phi), opts.disjunct_limit)
            if not elts:
                idx = der.emit("false-left", j.term, BOT)
                der.trace[idx] = Step("false-left", f"{x} has an empty refinement", "", ())
                return Derivable(der.trace, opts.k, opts.wide_depth)
            per_var.append([(x, ty, e) for e in elts])
        cases = 1
        for choices in per_var:
            cases *= len(choices)
        if cases > opts.disjunct_limit:
            return Unknown(f"context splits into {cases} cases, more than the limit "
                           f"{opts.disjunct_limit}", show_judgment(j))
        clauses = cnf_elements(push_modalities(goal), 4096)
    except NormalFormTooLarge as exc:
        return Unknown(str(exc), show_judgment(j))

    tops = []
    for combo in itertools.product(*per_var):
        ctx = {x: (ty, e) for x, ty, e in combo}
        value = None
        clause_steps = []
        for clause in clauses:
            if not clause:
                return Unknown("the goal is unsatisfiable", show_judgment(j))
            if value is None:
                value = ev.evaluate(j.term, der.env(ctx), opts.fuel)
            ordered = _order_candidates(value, clause, opts)
            last: Stuck | None = None
            for c in ordered:
                mark = len(der.trace)
                try:
                    clause_steps.append(der.derive(ctx, j.term, tau, c))
                    break
                except Stuck as exc:
                    del der.trace[mark:]
                    last = last or exc
            else:
                if last is None:
                    last = Stuck("no disjunct of the goal holds semantically",
                                 f"{_short(show_term(j.term))} : {' or '.join(fd.sexpr(c) for c in clause)}")
                return Unknown(last.reason, last.subgoal)
        label = ", ".join(f"{x}:{fd.sexpr(e)}" for x, (_, e) in ctx.items())
        tops.append(der.emit("and-right", j.term, BOT, clause_steps))
        der.trace[-1] = Step("and-right", _short(show_term(j.term)), label or "(empty context)",
                             tuple(clause_steps))
    if len(tops) != 1:
        der.trace.append(Step("or-left", _short(show_term(j.term)), show_ref_type(j.goal), tuple(tops)))
    return Derivable(der.trace, opts.k, opts.wide_depth)


def _order_candidates(value, clause, opts: CheckOptions) -> list[FinElt]:
    holds, rest = [], []
    for c in clause:
        try:
            with ev.step_budget(opts.steps):
                ok = ev.value_geq(value, c)
        except ev.EvalBudgetExceeded:
            ok = False
        (holds if ok else rest).append(c)
    return holds + rest if opts.use_semantic_fallback else holds


def _fresh(avoid: set[str], base: str = "x") -> str:
    for i in itertools.count(1):
        if f"{base}{i}" not in avoid:
            return f"{base}{i}"
    raise AssertionError


def _normal_after_cut(t: RefType, opts: CheckOptions, positive: bool) -> bool:
    _, phi = (normalize_goal if positive else normalize_hyp)(t, opts)
    return is_normal(push_modalities(phi))


def eta_expand(j: Judgment, opts: CheckOptions | None = None) -> list[Judgment]:
    """Split product goals into projections and move arrow domains into the
    context, until every goal is a normal refinement."""
    opts = opts or CheckOptions()
    match j.goal:
        case ProdT(a, b):
            return (eta_expand(Judgment(j.ctx, Proj(1, j.term), a), opts)
                    + eta_expand(Judgment(j.ctx, Proj(2, j.term), b), opts))
        case ArrowT(a, b):
            if not _normal_after_cut(a, opts, positive=False):
                raise NotFonf(f"domain {show_ref_type(a)} is not a normal form")
            avoid = {x for x, _ in j.ctx} | free_vars(j.term) | _binders(j.term)
            x = _fresh(avoid)
            return eta_expand(Judgment(j.ctx + ((x, a),), App(j.term, Var(x)), b), opts)
        case PureT() | Refine():
            if not _normal_after_cut(j.goal, opts, positive=True):
                raise NotFonf(f"goal {show_ref_type(j.goal)} is not a normal form")
            return [j]
    raise TypeError(f"not a refinement type: {j.goal!r}")


def _binders(t: Term) -> set[str]:
    match t:
        case Lam(x, b) | Fix(x, b) | FixAnnotated(x, b, _):
            return {x} | _binders(b)
        case App(a, b) | Pair(a, b):
            return _binders(a) | _binders(b)
        case Fold(a) | Unfold(a) | Proj(_, a) | Ascribe(a, _):
            return _binders(a)
        case Case(s, branches):
            out = _binders(s)
            for _, b in branches:
                out |= _binders(b)
            return out
    return set()


def check_normal(j: Judgment, opts: CheckOptions | None = None,
                 reg: BaseRegistry = DEFAULT_REGISTRY) -> Verdict:
    """Eta-expand, then check every resulting judgment."""
    opts = opts or CheckOptions()
    try:
        parts = eta_expand(j, opts)
    except NotFonf as exc:
        return Unknown(str(exc), show_judgment(j))
    trace: list[Step] = []
    roots = []
    for part in parts:
        v = check(part, opts, reg)
        if not isinstance(v, Derivable):
            return v
        offset = len(trace)
        trace.extend(Step(s.rule, s.subject, s.goal, tuple(p + offset for p in s.premises))
                     for s in v.trace)
        roots.append(len(trace) - 1)
    if len(parts) > 1 or parts[0] is not j:
        trace.append(Step("eta", _short(show_term(j.term)), show_ref_type(j.goal), tuple(roots)))
    return Derivable(trace, opts.k, opts.wide_depth)


def render_trace(trace: list[Step]) -> str:
    """Indented derivation tree rooted at the last step."""
    if not trace:
        return ""
    lines = []

    def walk(i, depth):
        s = trace[i]
        lines.append(f"{'  ' * depth}{s.rule}: {s.subject} : {s.goal}")
        for p in s.premises:
            walk(p, depth + 1)

    walk(len(trace) - 1, 0)
    return "\n".join(lines)

"""Generators for formulas, terms and judgments used by the oracle sweeps
and the test harnesses. Everything is deterministic given a seed."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from functools import lru_cache

from . import evalsem as ev
from . import findom as fd
from .logic import (FALSE, TOP, AndF, ArrowF, AtomF, Formula, Mod, OrF, char_formula, mk_or,
                    show_formula)
from .subtype import Refine
from .syntax import (BOOL, App, Arrow, Base, BaseRegistry, Case, Const, DEFAULT_REGISTRY, Fix, Fold,
                     Lam, Pair, Proj, Prod, PureType, Rec, Term, Unfold, Var, stream_of, term_size,
                     unroll)

STREAM_BOOL = stream_of(BOOL)
SWEEP_TYPES = {
    "Bool": BOOL,
    "Bool * Bool": Prod(BOOL, BOOL),
    "Bool -> Bool": Arrow(BOOL, BOOL),
    "Stream Bool": STREAM_BOOL,
}


# ------------------------------------------------------------ formulas


def conjunctive_formulas(tau: PureType, max_size: int,
                         reg: BaseRegistry = DEFAULT_REGISTRY) -> list[Formula]:
    """Every conjunctive formula at `tau` of size at most `max_size`.

    Conjunctions are generated binary and right-nested with the left
    operand not itself a conjunction, so each flat conjunction appears
    once per ordering of its items.
    """
    out = []
    for n in range(1, max_size + 1):
        out.extend(_conj_exact(tau, n, reg))
    return out


@lru_cache(maxsize=None)
def _conj_exact(tau: PureType, n: int, reg: BaseRegistry) -> tuple[Formula, ...]:
    out: list[Formula] = []
    if n == 1:
        out += [TOP, FALSE]
        if isinstance(tau, Base):
            out += [AtomF(c) for c in reg.carrier(tau.name)]
        return tuple(out)
    match tau:
        case Prod(a, b):
            out += [Mod("pi1", f) for f in _conj_exact(a, n - 1, reg)]
            out += [Mod("pi2", f) for f in _conj_exact(b, n - 1, reg)]
        case Rec():
            out += [Mod("fold", f) for f in _conj_exact(unroll(tau), n - 1, reg)]
        case Arrow(a, b):
            for i in range(1, n - 1):
                for x in _conj_exact(a, i, reg):
                    out += [ArrowF(x, y) for y in _conj_exact(b, n - 1 - i, reg)]
    for i in range(1, n - 1):
        for x in _conj_exact(tau, i, reg):
            if isinstance(x, AndF):
                continue
            out += [AndF((x, y)) for y in _conj_exact(tau, n - 1 - i, reg)]
    return tuple(out)


def random_conjunctive(rng: random.Random, tau: PureType, size: int,
                       reg: BaseRegistry = DEFAULT_REGISTRY) -> Formula:
    pool = _conj_exact(tau, rng.randint(1, size), reg) or (TOP,)
    return rng.choice(pool)


def random_normal(rng: random.Random, tau: PureType, rank: int = 2,
                  reg: BaseRegistry = DEFAULT_REGISTRY) -> Formula:
    """A disjunction of one to three characteristic formulas of elements."""
    elts = fd.enumerate_elements(tau, rank, reg)
    return mk_or(char_formula(rng.choice(elts)) for _ in range(rng.randint(1, 3)))


# --------------------------------------------------------------- terms


TERM_TYPES = (BOOL, Prod(BOOL, BOOL), Arrow(BOOL, BOOL), STREAM_BOOL)


class _Names:
    def __init__(self):
        self.n = 0

    def fresh(self, base: str) -> str:
        self.n += 1
        return f"{base}{self.n}"


def random_term(rng: random.Random, tau: PureType, ctx: dict[str, PureType], size: int = 8,
                allow_fix: bool = True) -> Term:
    """A term of pure type `tau` over `ctx` whose size is at most `size`."""
    names = _Names()
    names.n = len(ctx)
    for _ in range(50):
        t = _gen(rng, tau, dict(ctx), size, names, allow_fix)
        if t is not None and term_size(t) <= size:
            return t
    return _fallback(tau, ctx)


def _fallback(tau: PureType, ctx: dict) -> Term:
    for x, s in ctx.items():
        if s == tau:
            return Var(x)
    match tau:
        case Base():
            return Const("Bool", "tt")
        case Prod(a, b):
            return Pair(_fallback(a, ctx), _fallback(b, ctx))
        case Arrow(a, b):
            return Lam("z0", _fallback(b, {**ctx, "z0": a}))
        case Rec():
            return Fix("s0", Fold(Pair(Const("Bool", "tt"), Var("s0"))))
    raise TypeError(tau)


def _gen(rng, tau, ctx, size, names, allow_fix) -> Term | None:
    if size <= 0:
        return None
    options = []
    for x, s in ctx.items():
        # eliminations of context variables are weighted up so that terms
        # depend on their context more often than not
        if s == tau:
            options += [("var", x)] * 3
        if isinstance(s, Prod) and size >= 2 and tau in (s.left, s.right):
            options += [("proj", x)] * 2
        if isinstance(s, Arrow) and s.cod == tau and size >= 3:
            options += [("app", x)] * 2
        if s == STREAM_BOOL and size >= 3 and tau in (BOOL, STREAM_BOOL):
            options += [("stream", x)] * 2
    if isinstance(tau, Base):
        options.append(("const", None))
    if size >= 4:
        options.append(("if", None))
    match tau:
        case Prod():
            if size >= 3:
                options.append(("pair", None))
        case Arrow():
            if size >= 2:
                options.append(("lam", None))
            if allow_fix and size >= 4:
                options.append(("fix", None))
        case Rec():
            if size >= 4:
                options.append(("cons", None))
            if allow_fix and size >= 5:
                options.append(("fix", None))
    if not options:
        return None
    kind, x = rng.choice(options)
    match kind:
        case "var":
            return Var(x)
        case "const":
            return Const("Bool", rng.choice(("tt", "ff")))
        case "proj":
            s = ctx[x]
            i = rng.choice([i for i, part in ((1, s.left), (2, s.right)) if part == tau])
            return Proj(i, Var(x))
        case "app":
            a = _gen(rng, ctx[x].dom, ctx, size - 2, names, allow_fix)
            return None if a is None else App(Var(x), a)
        case "stream":
            u = Unfold(Var(x))
            return Proj(1, u) if tau == BOOL else Proj(2, u)
        case "if":
            budget = size - 1
            c = _gen(rng, BOOL, ctx, rng.randint(1, max(1, budget - 2)), names, allow_fix)
            rest = (budget - term_size(c)) // 2 if c is not None else 0
            a = _gen(rng, tau, ctx, rest, names, allow_fix)
            b = _gen(rng, tau, ctx, rest, names, allow_fix)
            if None in (c, a, b):
                return None
            return Case(c, (("tt", a), ("ff", b)))
        case "pair":
            a = _gen(rng, tau.left, ctx, (size - 1) // 2, names, allow_fix)
            b = _gen(rng, tau.right, ctx, (size - 1) // 2, names, allow_fix)
            return None if None in (a, b) else Pair(a, b)
        case "lam":
            y = names.fresh("x")
            body = _gen(rng, tau.cod, {**ctx, y: tau.dom}, size - 1, names, allow_fix)
            return None if body is None else Lam(y, body)
        case "cons":
            h = _gen(rng, BOOL, ctx, (size - 2) // 2, names, allow_fix)
            tl = _gen(rng, tau, ctx, (size - 2) // 2, names, allow_fix)
            return None if None in (h, tl) else Fold(Pair(h, tl))
        case "fix":
            f = names.fresh("f")
            body = _gen(rng, tau, {**ctx, f: tau}, size - 1, names, allow_fix=False)
            return None if body is None else Fix(f, body)
    raise AssertionError(kind)


# ----------------------------------------------------------- judgments


@dataclass(frozen=True)
class FiniteJudgment:
    """A judgment whose context and goal carry schema-free formulas."""

    ctx: tuple[tuple[str, PureType, Formula], ...]
    term: Term
    tau: PureType
    goal: Formula

    def as_judgment(self):
        from .checker import Judgment

        return Judgment(tuple((x, Refine(t, f)) for x, t, f in self.ctx), self.term,
                        Refine(self.tau, self.goal))

    def show(self) -> str:
        from .checker import show_judgment

        return show_judgment(self.as_judgment())


def _random_ctx(rng, n_vars):
    types = [rng.choice(TERM_TYPES) for _ in range(n_vars)]
    return {f"v{i}": t for i, t in enumerate(types)}


def random_judgment(rng: random.Random, size: int = 8, rank: int = 2,
                    reg: BaseRegistry = DEFAULT_REGISTRY) -> FiniteJudgment:
    """A judgment with arbitrary normal hypotheses and goal; about half the
    goals are read off the term's value so that they hold."""
    ctx = _random_ctx(rng, rng.randint(0, 2))
    tau = rng.choice(TERM_TYPES)
    term = random_term(rng, tau, ctx, size)
    hyps = tuple((x, t, random_normal(rng, t, rank, reg)) for x, t in ctx.items())
    if rng.random() < 0.5:
        env = {x: ev.Approx(rng.choice(_dnf_or_bot(f))) for x, _, f in hyps}
        d = ev.deep(_lower_value, term, env, tau, 16, rank, reg)
        below = [e for e in fd.enumerate_elements(tau, rank, reg) if fd.leq(e, d) and e != fd.BOT]
        goal = char_formula(rng.choice(below)) if below else random_normal(rng, tau, rank, reg)
    elif rng.random() < 0.5:
        goal = random_normal(rng, tau, rank, reg)
    else:
        goal = random_conjunctive(rng, tau, 5, reg)
    return FiniteJudgment(hyps, term, tau, goal)


def _dnf_or_bot(f):
    from .logic import dnf_elements

    return dnf_elements(f) or [fd.BOT]


def _lower_value(term, env, tau, fuel, rank, reg):
    with ev.step_budget():
        return ev.lower(ev.evaluate(term, env, fuel), tau, fuel, rank, reg)


def true_finite_judgment(rng: random.Random, size: int = 8, n_fix: int = 4, rank: int = 2,
                         reg: BaseRegistry = DEFAULT_REGISTRY) -> FiniteJudgment:
    """A judgment with conjunctive hypotheses whose goal is below the value
    of the term computed with `n_fix` unrollings, so it holds."""
    ctx = _random_ctx(rng, rng.randint(0, 2))
    tau = rng.choice(TERM_TYPES)
    term = random_term(rng, tau, ctx, size)
    elems = {x: rng.choice(fd.enumerate_elements(t, rank, reg)) for x, t in ctx.items()}
    hyps = tuple((x, t, char_formula(elems[x])) for x, t in ctx.items())
    env = {x: ev.Approx(e) for x, e in elems.items()}
    d = ev.deep(_lower_value, term, env, tau, n_fix, rank, reg)
    below = [e for e in fd.enumerate_elements(tau, rank, reg) if fd.leq(e, d)]
    nonbot = [e for e in below if e != fd.BOT]
    goal = char_formula(rng.choice(nonbot or below))
    return FiniteJudgment(hyps, term, tau, goal)


# -------------------------------------------------------------- oracle


def oracle_violation(j: FiniteJudgment, rank: int = 2, fuel: int = 16,
                     reg: BaseRegistry = DEFAULT_REGISTRY):
    """A context instantiation by rank-`rank` elements satisfying the
    hypotheses under which the term's value misses the goal, or None."""
    return ev.deep(_violation, j, rank, fuel, reg)


def _violation(j, rank, fuel, reg):
    choices = []
    for x, t, f in j.ctx:
        choices.append([(x, d) for d in fd.enumerate_elements(t, rank, reg) if ev.sat(t, d, f, rank, reg)])
    for combo in itertools.product(*choices):
        env = {x: ev.Approx(d) for x, d in combo}
        with ev.step_budget():
            value = ev.lower(ev.evaluate(j.term, env, fuel), j.tau, fuel, rank, reg)
        if not ev.sat(j.tau, value, j.goal, rank, reg):
            return dict(combo), value
    return None


def describe(f: Formula) -> str:
    return show_formula(f)


# --------------------------------------------------------------- sweeps


MAX_ORACLE_RANK = 3


@dataclass
class SweepResult:
    formulas: int
    agree: int
    total: int
    disagreements: list

    @property
    def ok(self) -> bool:
        return self.agree == self.total


def oracle_sweep(tau: PureType, max_size: int, rank: int,
                 reg: BaseRegistry = DEFAULT_REGISTRY, keep: int = 20) -> SweepResult:
    """Compare the compiler-based consistency and entailment tests with the
    oracle on every pair of conjunctive formulas up to `max_size`.

    Both sides depend only on (compiled element, extension), so formulas
    are grouped by that key and each pair of groups is compared once.
    """
    from .logic import compile_formula, consistent_f, entail_conj

    if rank > MAX_ORACLE_RANK:
        raise ValueError(f"oracle rank is capped at {MAX_ORACLE_RANK}")
    groups: dict = {}
    formulas = conjunctive_formulas(tau, max_size, reg)
    for f in formulas:
        key = (compile_formula(f), ev.extension(tau, f, rank, reg))
        if key in groups:
            groups[key][1] += 1
        else:
            groups[key] = [f, 1]
    agree = total = 0
    bad = []
    for (_, ext), (f, n) in groups.items():
        total += n
        if consistent_f(f) == bool(ext):
            agree += n
        elif len(bad) < keep:
            bad.append(("consistent", show_formula(f)))
    for (_, ext_a), (fa, na) in groups.items():
        for (_, ext_b), (fb, nb) in groups.items():
            total += na * nb
            if entail_conj(fa, fb) == (ext_a <= ext_b):
                agree += na * nb
            elif len(bad) < keep:
                bad.append(("entail", show_formula(fa), show_formula(fb)))
    return SweepResult(len(formulas), agree, total, bad)

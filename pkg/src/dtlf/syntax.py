"""Pure types, terms, base-type registry and the unrefined type system.

Types are iso-recursive: `fold` and `unfold` are the only way across a
`rec` binder, and two recursive types are equal only up to renaming of
their binders.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Union


# ---------------------------------------------------------------- types


@dataclass(frozen=True)
class Base:
    name: str


@dataclass(frozen=True)
class Prod:
    left: "PureType"
    right: "PureType"


@dataclass(frozen=True)
class Arrow:
    dom: "PureType"
    cod: "PureType"


@dataclass(frozen=True)
class TVar:
    name: str


@dataclass(frozen=True)
class Rec:
    binder: str
    body: "PureType"


PureType = Union[Base, Prod, Arrow, TVar, Rec]

BOOL = Base("Bool")


def free_tvars(t: PureType) -> set[str]:
    match t:
        case Base():
            return set()
        case TVar(name):
            return {name}
        case Prod(a, b) | Arrow(a, b):
            return free_tvars(a) | free_tvars(b)
        case Rec(x, body):
            return free_tvars(body) - {x}
    raise TypeError(f"not a type: {t!r}")


def subst_type(body: PureType, var: str, replacement: PureType) -> PureType:
    """Capture-free substitution of `replacement` for `var` in `body`."""
    match body:
        case Base():
            return body
        case TVar(name):
            return replacement if name == var else body
        case Prod(a, b):
            return Prod(subst_type(a, var, replacement), subst_type(b, var, replacement))
        case Arrow(a, b):
            return Arrow(subst_type(a, var, replacement), subst_type(b, var, replacement))
        case Rec(x, inner):
            if x == var:
                return body
            if x in free_tvars(replacement):
                fresh = _fresh_tvar(x, free_tvars(replacement) | free_tvars(inner))
                inner = subst_type(inner, x, TVar(fresh))
                x = fresh
            return Rec(x, subst_type(inner, var, replacement))
    raise TypeError(f"not a type: {body!r}")


def _fresh_tvar(base: str, avoid: set[str]) -> str:
    for i in itertools.count(1):
        cand = f"{base}{i}"
        if cand not in avoid:
            return cand
    raise AssertionError


def unroll(t: Rec) -> PureType:
    """One-step unfolding tau[rec X.tau / X]."""
    return subst_type(t.body, t.binder, t)


def type_eq(a: PureType, b: PureType) -> bool:
    """Equality up to renaming of rec binders."""
    return _alpha(a, b, {}, {})


def _alpha(a, b, env_a, env_b) -> bool:
    match a, b:
        case Base(x), Base(y):
            return x == y
        case TVar(x), TVar(y):
            return env_a.get(x, ("free", x)) == env_b.get(y, ("free", y))
        case Prod(a1, a2), Prod(b1, b2):
            return _alpha(a1, b1, env_a, env_b) and _alpha(a2, b2, env_a, env_b)
        case Arrow(a1, a2), Arrow(b1, b2):
            return _alpha(a1, b1, env_a, env_b) and _alpha(a2, b2, env_a, env_b)
        case Rec(x, ba), Rec(y, bb):
            level = len(env_a)
            return _alpha(ba, bb, {**env_a, x: level}, {**env_b, y: level})
    return False


def stream_of(t: PureType) -> Rec:
    return Rec("X", Prod(t, TVar("X")))


def tree_of(t: PureType) -> Rec:
    return Rec("X", Prod(t, Prod(TVar("X"), TVar("X"))))


def rou_of(t: PureType) -> Rec:
    return Rec("X", Arrow(Arrow(TVar("X"), t), t))


def stream_element(t: PureType) -> PureType | None:
    """The element type if `t` has the shape rec X. s * X, else None."""
    if isinstance(t, Rec):
        u = t.body
        if isinstance(u, Prod) and u.right == TVar(t.binder) and t.binder not in free_tvars(u.left):
            return u.left
    return None


def tree_element(t: PureType) -> PureType | None:
    """The label type if `t` has the shape rec X. s * (X * X), else None."""
    if isinstance(t, Rec):
        u = t.body
        x = TVar(t.binder)
        if (isinstance(u, Prod) and u.right == Prod(x, x)
                and t.binder not in free_tvars(u.left)):
            return u.left
    return None


def show_type(t: PureType) -> str:
    """Print a type in the surface grammar, recovering the sugar forms."""
    return _show_type(t, 0)


def _show_type(t: PureType, prec: int) -> str:
    # prec 0: arrow position, 1: product operand, 2: argument of a sugar head
    if (el := stream_element(t)) is not None:
        s = f"Stream {_show_type(el, 2)}"
        return f"({s})" if prec >= 2 else s
    if (el := tree_element(t)) is not None:
        s = f"Tree {_show_type(el, 2)}"
        return f"({s})" if prec >= 2 else s
    if isinstance(t, Rec):
        u = t.body
        x = TVar(t.binder)
        if (isinstance(u, Arrow) and isinstance(u.dom, Arrow) and u.dom.dom == x
                and u.dom.cod == u.cod and t.binder not in free_tvars(u.cod)):
            s = f"Rou {_show_type(u.cod, 2)}"
            return f"({s})" if prec >= 2 else s
    match t:
        case Base(name):
            return name
        case TVar(name):
            return name
        case Prod(a, b):
            s = f"{_show_type(a, 2)} * {_show_type(b, 2)}"
            return f"({s})" if prec >= 1 else s
        case Arrow(a, b):
            s = f"{_show_type(a, 1)} -> {_show_type(b, 0)}"
            return f"({s})" if prec >= 1 else s
        case Rec(x, body):
            s = f"rec {x}. {_show_type(body, 0)}"
            return f"({s})" if prec >= 1 else s
    raise TypeError(f"not a type: {t!r}")


# ------------------------------------------------------------- registry


class RegistryError(ValueError):
    pass


@dataclass(frozen=True)
class BaseRegistry:
    """Finite carriers of the base types. Constant names are global."""

    carriers: tuple[tuple[str, tuple[str, ...]], ...] = (("Bool", ("tt", "ff")),)

    def __post_init__(self):
        seen: dict[str, str] = {}
        names = set()
        for name, consts in self.carriers:
            if name in names:
                raise RegistryError(f"base type {name} declared twice")
            names.add(name)
            if not consts:
                raise RegistryError(f"base type {name} has an empty carrier")
            for c in consts:
                if c in seen:
                    raise RegistryError(f"constant {c} declared in both {seen[c]} and {name}")
                seen[c] = name
        if dict(self.carriers).get("Bool") != ("tt", "ff"):
            raise RegistryError("Bool must be declared with carrier tt ff")

    def carrier(self, name: str) -> tuple[str, ...]:
        for n, consts in self.carriers:
            if n == name:
                return consts
        raise RegistryError(f"unknown base type {name}")

    def has_base(self, name: str) -> bool:
        return any(n == name for n, _ in self.carriers)

    def base_of(self, const: str) -> str | None:
        for n, consts in self.carriers:
            if const in consts:
                return n
        return None

    def extend(self, name: str, consts) -> "BaseRegistry":
        consts = tuple(consts)
        if self.has_base(name):
            if self.carrier(name) == consts:
                return self
            raise RegistryError(f"base type {name} redeclared with a different carrier")
        return BaseRegistry(self.carriers + ((name, consts),))


DEFAULT_REGISTRY = BaseRegistry()


def parse_bases(text: str, reg: BaseRegistry = DEFAULT_REGISTRY) -> BaseRegistry:
    """Read `base Name = c1 c2 ...` lines; blank lines and `--` comments are skipped."""
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("--", 1)[0].strip()
        if not line:
            continue
        reg = _base_line(line, reg, lineno)
    return reg


def _base_line(line: str, reg: BaseRegistry, lineno: int) -> BaseRegistry:
    head, sep, rest = line.partition("=")
    words = head.split()
    if not sep or len(words) != 2 or words[0] != "base":
        raise RegistryError(f"line {lineno}: expected `base Name = c1 ... cn`")
    consts = rest.split()
    if len(set(consts)) != len(consts):
        raise RegistryError(f"line {lineno}: duplicate constant in carrier of {words[1]}")
    for c in consts:
        if not c.isidentifier():
            raise RegistryError(f"line {lineno}: bad constant name {c!r}")
    return reg.extend(words[1], consts)


# ---------------------------------------------------------------- terms


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Lam:
    var: str
    body: "Term"


@dataclass(frozen=True)
class App:
    fun: "Term"
    arg: "Term"


@dataclass(frozen=True)
class Fix:
    var: str
    body: "Term"


@dataclass(frozen=True)
class FixAnnotated:
    """A fixpoint carrying the invariant chain psi_1 ... psi_m (psi_0 is true)."""

    var: str
    body: "Term"
    chain: tuple


@dataclass(frozen=True)
class Fold:
    term: "Term"


@dataclass(frozen=True)
class Unfold:
    term: "Term"


@dataclass(frozen=True)
class Pair:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Proj:
    index: int
    term: "Term"


@dataclass(frozen=True)
class Const:
    base: str
    name: str


@dataclass(frozen=True)
class Case:
    scrutinee: "Term"
    branches: tuple[tuple[str, "Term"], ...]

    def branch(self, const: str) -> "Term":
        for c, t in self.branches:
            if c == const:
                return t
        raise KeyError(const)


@dataclass(frozen=True)
class Ascribe:
    term: "Term"
    type: PureType


Term = Union[Var, Lam, App, Fix, FixAnnotated, Fold, Unfold, Pair, Proj, Const, Case, Ascribe]


def free_vars(t: Term) -> set[str]:
    match t:
        case Var(x):
            return {x}
        case Lam(x, body) | Fix(x, body) | FixAnnotated(x, body, _):
            return free_vars(body) - {x}
        case App(a, b) | Pair(a, b):
            return free_vars(a) | free_vars(b)
        case Fold(a) | Unfold(a) | Proj(_, a) | Ascribe(a, _):
            return free_vars(a)
        case Const():
            return set()
        case Case(s, branches):
            out = free_vars(s)
            for _, b in branches:
                out |= free_vars(b)
            return out
    raise TypeError(f"not a term: {t!r}")


def subst_closed(t: Term, name: str, closed: Term) -> Term:
    """Replace free `name` by a closed term (no capture is possible)."""
    match t:
        case Var(x):
            return closed if x == name else t
        case Lam(x, body):
            return t if x == name else Lam(x, subst_closed(body, name, closed))
        case Fix(x, body):
            return t if x == name else Fix(x, subst_closed(body, name, closed))
        case FixAnnotated(x, body, chain):
            return t if x == name else FixAnnotated(x, subst_closed(body, name, closed), chain)
        case App(a, b):
            return App(subst_closed(a, name, closed), subst_closed(b, name, closed))
        case Pair(a, b):
            return Pair(subst_closed(a, name, closed), subst_closed(b, name, closed))
        case Fold(a):
            return Fold(subst_closed(a, name, closed))
        case Unfold(a):
            return Unfold(subst_closed(a, name, closed))
        case Proj(i, a):
            return Proj(i, subst_closed(a, name, closed))
        case Ascribe(a, ty):
            return Ascribe(subst_closed(a, name, closed), ty)
        case Const():
            return t
        case Case(s, branches):
            return Case(subst_closed(s, name, closed),
                        tuple((c, subst_closed(b, name, closed)) for c, b in branches))
    raise TypeError(f"not a term: {t!r}")


def term_size(t: Term) -> int:
    match t:
        case Var() | Const():
            return 1
        case Lam(_, b) | Fix(_, b) | FixAnnotated(_, b, _) | Fold(b) | Unfold(b) | Proj(_, b) | Ascribe(b, _):
            return 1 + term_size(b)
        case App(a, b) | Pair(a, b):
            return 1 + term_size(a) + term_size(b)
        case Case(s, branches):
            return 1 + term_size(s) + sum(term_size(b) for _, b in branches)
    raise TypeError(f"not a term: {t!r}")


def show_term(t: Term) -> str:
    """Print a term in core syntax; `parse_term(show_term(t)) == t`."""
    return _show(t, 0)


def _show(t: Term, prec: int) -> str:
    # prec 0: anywhere, 1: function position / cons operand, 2: argument
    def wrap(s, need):
        return f"({s})" if prec >= need else s

    match t:
        case Var(x):
            return x
        case Const(_, c):
            return c
        case Lam(x, body):
            return wrap(f"\\{x}. {_show(body, 0)}", 1)
        case Fix(x, body):
            return wrap(f"fix {x}. {_show(body, 0)}", 1)
        case FixAnnotated(x, body, chain):
            from .logic import show_formula
            inv = "; ".join(show_formula(f) for f in chain)
            return wrap(f"fix {x} [{inv}]. {_show(body, 0)}", 1)
        case App(f, a):
            return wrap(f"{_show(f, 1)} {_show(a, 2)}", 2)
        case Fold(a):
            return wrap(f"fold {_show(a, 2)}", 2)
        case Unfold(a):
            return wrap(f"unfold {_show(a, 2)}", 2)
        case Proj(i, a):
            return wrap(f"pi{i} {_show(a, 2)}", 2)
        case Pair(a, b):
            return f"({_show(a, 0)}, {_show(b, 0)})"
        case Ascribe(a, ty):
            return f"({_show(a, 0)} : {show_type(ty)})"
        case Case(s, branches):
            arms = " | ".join(f"{c} -> {_show(b, 0)}" for c, b in branches)
            return wrap(f"case {_show(s, 0)} of {{ {arms} }}", 1)
    raise TypeError(f"not a term: {t!r}")


# ---------------------------------------------------------- pure typing


class PureTypeError(Exception):
    def __init__(self, rule: str, term: Term, message: str):
        super().__init__(f"{rule}: {message} in `{_clip(show_term(term))}`")
        self.rule = rule
        self.term = term


def _clip(s: str, n: int = 80) -> str:
    return s if len(s) <= n else s[: n - 3] + "..."


@dataclass(frozen=True)
class Meta:
    """Unification variable, internal to inference."""

    ident: int


@dataclass
class Typing:
    """Result of inference: the type of the whole term and of every subterm."""

    type: PureType
    root: Term
    types: dict[int, PureType] = field(repr=False)

    def of(self, t: Term) -> PureType:
        return self.types[id(t)]


class _Infer:
    def __init__(self, reg: BaseRegistry):
        self.reg = reg
        self.subst: dict[int, object] = {}
        self.counter = itertools.count()
        self.deferred: list[tuple[str, object, object, Term]] = []
        self.nodes: list[tuple[Term, object]] = []

    def fresh(self) -> Meta:
        return Meta(next(self.counter))

    def resolve(self, t):
        while isinstance(t, Meta) and t.ident in self.subst:
            t = self.subst[t.ident]
        return t

    def zonk(self, t):
        t = self.resolve(t)
        match t:
            case Prod(a, b):
                return Prod(self.zonk(a), self.zonk(b))
            case Arrow(a, b):
                return Arrow(self.zonk(a), self.zonk(b))
        return t

    def occurs(self, m: Meta, t) -> bool:
        t = self.resolve(t)
        match t:
            case Meta(i):
                return i == m.ident
            case Prod(a, b) | Arrow(a, b):
                return self.occurs(m, a) or self.occurs(m, b)
        return False

    def unify(self, a, b, rule: str, at: Term):
        a, b = self.resolve(a), self.resolve(b)
        if isinstance(a, Meta) and isinstance(b, Meta) and a.ident == b.ident:
            return
        if isinstance(a, Meta):
            if self.occurs(a, b):
                raise PureTypeError(rule, at, "infinite type (use rec)")
            self.subst[a.ident] = b
            return
        if isinstance(b, Meta):
            self.unify(b, a, rule, at)
            return
        match a, b:
            case Base(x), Base(y) if x == y:
                return
            case Prod(a1, a2), Prod(b1, b2):
                self.unify(a1, b1, rule, at)
                self.unify(a2, b2, rule, at)
                return
            case Arrow(a1, a2), Arrow(b1, b2):
                self.unify(a1, b1, rule, at)
                self.unify(a2, b2, rule, at)
                return
            case Rec(), Rec() if type_eq(a, b):
                return
        raise PureTypeError(rule, at, f"expected {self.show(b)}, found {self.show(a)}")

    def show(self, t) -> str:
        return show_type(_metas_named(self.zonk(t)))

    def infer(self, ctx: dict, t: Term):
        ty = self._infer(ctx, t)
        self.nodes.append((t, ty))
        return ty

    def _infer(self, ctx: dict, t: Term):
        match t:
            case Var(x):
                if x not in ctx:
                    raise PureTypeError("var", t, f"unbound variable {x}")
                return ctx[x]
            case Const(base, c):
                if not self.reg.has_base(base) or c not in self.reg.carrier(base):
                    raise PureTypeError("const", t, f"unknown constant {c}")
                return Base(base)
            case Lam(x, body):
                dom = self.fresh()
                cod = self.infer({**ctx, x: dom}, body)
                return Arrow(dom, cod)
            case App(f, a):
                ft = self.infer(ctx, f)
                at = self.infer(ctx, a)
                res = self.fresh()
                self.unify(ft, Arrow(at, res), "app", t)
                return res
            case Fix(x, body) | FixAnnotated(x, body, _):
                self_t = self.fresh()
                bt = self.infer({**ctx, x: self_t}, body)
                self.unify(bt, self_t, "fix", t)
                return self_t
            case Pair(a, b):
                return Prod(self.infer(ctx, a), self.infer(ctx, b))
            case Proj(i, a):
                at = self.infer(ctx, a)
                l, r = self.fresh(), self.fresh()
                self.unify(at, Prod(l, r), f"pi{i}", t)
                return l if i == 1 else r
            case Fold(a):
                inner = self.infer(ctx, a)
                out = self.fresh()
                self.deferred.append(("fold", out, inner, t))
                return out
            case Unfold(a):
                rt = self.infer(ctx, a)
                out = self.fresh()
                self.deferred.append(("unfold", rt, out, t))
                return out
            case Case(s, branches):
                st = self.resolve(self.infer(ctx, s))
                consts = [c for c, _ in branches]
                base = self.reg.base_of(consts[0]) if consts else None
                if base is None:
                    raise PureTypeError("case", t, "branches do not name constants")
                self.unify(st, Base(base), "case", t)
                carrier = self.reg.carrier(base)
                if sorted(consts) != sorted(carrier) or len(set(consts)) != len(consts):
                    raise PureTypeError("case", t, f"branches must cover {' '.join(carrier)} exactly once")
                out = self.fresh()
                for _, b in branches:
                    self.unify(self.infer(ctx, b), out, "case", t)
                return out
            case Ascribe(a, ty):
                check_closed_type(ty, self.reg)
                self.unify(self.infer(ctx, a), ty, "ascription", t)
                return ty
        raise TypeError(f"not a term: {t!r}")

    def solve_deferred(self):
        """Resolve fold/unfold constraints once their recursive type is known."""
        progress = True
        while self.deferred and progress:
            progress = False
            pending = []
            for kind, rec_side, other, at in self.deferred:
                rt = self.resolve(rec_side)
                if isinstance(rt, Meta):
                    pending.append((kind, rec_side, other, at))
                    continue
                if not isinstance(rt, Rec):
                    raise PureTypeError(kind, at, f"expected a rec type, found {self.show(rt)}")
                self.unify(other, unroll(rt), kind, at)
                progress = True
            self.deferred = pending
        if self.deferred and self.close_fold():
            self.solve_deferred()
            return
        if self.deferred:
            _, _, _, at = self.deferred[0]
            raise PureTypeError(self.deferred[0][0], at,
                                "cannot determine the recursive type; add an ascription (M : t)")


    def close_fold(self) -> bool:
        """Give an undetermined recursive type R (of `fold M`, or of `N` in
        `unfold N`) the least rec type whose unrolling is the other side of
        the constraint, when that side mentions R, as in `tt :: s` with `s`
        the stream itself, or `tl x` passed back to the function of `x`."""
        # constraints on the same rec type share its unrolling
        first: dict[int, object] = {}
        bound = len(self.subst)
        for kind, rec_side, other, at in self.deferred:
            out = self.resolve(rec_side)
            if not isinstance(out, Meta):
                continue
            if out.ident in first:
                self.unify(other, first[out.ident], kind, at)
            else:
                first[out.ident] = other
        if len(self.subst) > bound:
            return True
        ordered = sorted(self.deferred, key=lambda c: c[0] != "fold")
        for kind, rec_side, other, at in ordered:
            out = self.resolve(rec_side)
            if not isinstance(out, Meta):
                continue
            body = self.zonk(other)
            if not self.occurs(out, body):
                # a recursive type already in sight may unroll to the body,
                # as for the outer fold of `tt :: ff :: s`
                for q in _recs_in(body):
                    if not _has_meta(body) and type_eq(unroll(q), body):
                        self.subst[out.ident] = q
                        return True
                continue
            rec = Rec("X", _meta_to_var(body, out.ident, "X"))
            if _has_meta(rec.body):
                continue
            self.subst[out.ident] = rec
            return True
        return False


def _meta_to_var(t, ident: int, name: str):
    match t:
        case Meta(i) if i == ident:
            return TVar(name)
        case Prod(a, b):
            return Prod(_meta_to_var(a, ident, name), _meta_to_var(b, ident, name))
        case Arrow(a, b):
            return Arrow(_meta_to_var(a, ident, name), _meta_to_var(b, ident, name))
    return t


def _recs_in(t):
    match t:
        case Rec():
            return [t]
        case Prod(a, b) | Arrow(a, b):
            return _recs_in(a) + _recs_in(b)
    return []


def _metas_named(t):
    match t:
        case Meta(i):
            return TVar(f"?{i}")
        case Prod(a, b):
            return Prod(_metas_named(a), _metas_named(b))
        case Arrow(a, b):
            return Arrow(_metas_named(a), _metas_named(b))
    return t


def _has_meta(t) -> bool:
    match t:
        case Meta():
            return True
        case Prod(a, b) | Arrow(a, b):
            return _has_meta(a) or _has_meta(b)
    return False


def check_closed_type(ty: PureType, reg: BaseRegistry) -> None:
    free = free_tvars(ty)
    if free:
        raise PureTypeError("type", Var("?"), f"unbound type variable {sorted(free)[0]}")
    _check_bases(ty, reg)


def _check_bases(ty: PureType, reg: BaseRegistry) -> None:
    match ty:
        case Base(name):
            if not reg.has_base(name):
                raise PureTypeError("type", Var("?"), f"unknown base type {name}")
        case Prod(a, b) | Arrow(a, b):
            _check_bases(a, reg)
            _check_bases(b, reg)
        case Rec(_, body):
            _check_bases(body, reg)


def annotate(ctx, t: Term, reg: BaseRegistry = DEFAULT_REGISTRY,
             expected: PureType | None = None) -> Typing:
    """Infer the pure type of `t` and of each of its subterms.

    `ctx` is an ordered sequence of (variable, type) pairs or a mapping.
    """
    items = list(ctx.items()) if isinstance(ctx, dict) else list(ctx)
    names = [x for x, _ in items]
    if len(set(names)) != len(names):
        raise PureTypeError("context", t, "duplicate variable in context")
    env = {}
    for x, ty in items:
        check_closed_type(ty, reg)
        env[x] = ty
    inf = _Infer(reg)
    ty = inf.infer(env, t)
    if expected is not None:
        check_closed_type(expected, reg)
        inf.unify(ty, expected, "goal", t)
    inf.solve_deferred()
    types = {}
    for node, nt in inf.nodes:
        z = inf.zonk(nt)
        if _has_meta(z):
            raise PureTypeError("infer", node, "type is not determined; add an ascription")
        types[id(node)] = z
    return Typing(type=types[id(t)], root=t, types=types)


def infer_pure(ctx, t: Term, reg: BaseRegistry = DEFAULT_REGISTRY,
               expected: PureType | None = None) -> PureType:
    return annotate(ctx, t, reg, expected).type


def parse_type(text: str, reg: BaseRegistry = DEFAULT_REGISTRY) -> PureType:
    from .parser import parse_type as _parse

    return _parse(text, reg)


def parse_term(text: str, reg: BaseRegistry = DEFAULT_REGISTRY) -> Term:
    from .parser import parse_term as _parse

    return _parse(text, reg)

"""Formulas over pure types and the decision procedures on them.

The finitary fragment is decided by compiling conjunctive formulas to
finite elements: a conjunctive formula denotes either the empty set or
the upper set of one finite element. Everything else is reduced to that
case through disjunctive and conjunctive normal forms. Temporal schemas
(box, diamond, their tree versions, mu and nu) are ℕ-indexed and are cut
at a finite depth by `truncate` before any decision is made.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Union

from . import findom as fd
from .findom import BOT, FinElt
from .syntax import Arrow, Base, BaseRegistry, DEFAULT_REGISTRY, Prod, PureType, Rec, stream_element, tree_element, unroll


# ------------------------------------------------------------- formulas


@dataclass(frozen=True)
class AtomF:
    const: str


@dataclass(frozen=True)
class Mod:
    """The modality <op>phi for op in pi1, pi2, fold."""

    op: str
    body: "Formula"


@dataclass(frozen=True)
class ArrowF:
    ante: "Formula"
    cons: "Formula"


@dataclass(frozen=True)
class AndF:
    items: tuple["Formula", ...]


@dataclass(frozen=True)
class OrF:
    items: tuple["Formula", ...]


SCHEMA_KINDS = ("Box", "Diam", "AllBox", "ExBox", "AllDiam", "ExDiam")


@dataclass(frozen=True)
class Schema:
    kind: str
    body: "Formula"


@dataclass(frozen=True)
class Fixpoint:
    kind: str  # "mu" or "nu"
    var: str
    body: "Formula"


@dataclass(frozen=True)
class FVar:
    name: str


Formula = Union[AtomF, Mod, ArrowF, AndF, OrF, Schema, Fixpoint, FVar]

TOP = AndF(())
FALSE = OrF(())

MOD_OPS = ("pi1", "pi2", "fold")


def mods(ops: str, body: "Formula") -> "Formula":
    """Apply a space-separated chain of modalities, outermost first."""
    for op in reversed(ops.split()):
        body = Mod(op, body)
    return body


def hd(phi):
    return mods("fold pi1", phi)


def nxt(phi):
    return mods("fold pi2", phi)


def lbl(phi):
    return mods("fold pi1", phi)


def lft(phi):
    return mods("fold pi2 pi1", phi)


def rght(phi):
    return mods("fold pi2 pi2", phi)


def mk_and(items) -> Formula:
    """Conjunction with flattening and unit laws (<op>true is true)."""
    out = []
    for f in items:
        f = _simplify_unit(f)
        if isinstance(f, AndF):
            out.extend(f.items)
        elif f == FALSE:
            return FALSE
        else:
            out.append(f)
    out = list(dict.fromkeys(out))
    return out[0] if len(out) == 1 else AndF(tuple(out))


def mk_or(items) -> Formula:
    """Disjunction with flattening and unit laws (<op>false is false)."""
    out = []
    for f in items:
        f = _simplify_unit(f)
        if isinstance(f, OrF):
            out.extend(f.items)
        elif f == TOP:
            return TOP
        else:
            out.append(f)
    out = list(dict.fromkeys(out))
    return out[0] if len(out) == 1 else OrF(tuple(out))


def _simplify_unit(f: Formula) -> Formula:
    if isinstance(f, Mod):
        body = _simplify_unit(f.body)
        if body == TOP or body == FALSE:
            return body
        return Mod(f.op, body)
    return f


def formula_size(phi: Formula) -> int:
    match phi:
        case AtomF() | FVar():
            return 1
        case Mod(_, b) | Schema(_, b) | Fixpoint(_, _, b):
            return 1 + formula_size(b)
        case ArrowF(a, b):
            return 1 + formula_size(a) + formula_size(b)
        case AndF(items) | OrF(items):
            return max(1, len(items) - 1) + sum(formula_size(i) for i in items)
    raise TypeError(f"not a formula: {phi!r}")


def show_formula(phi: Formula) -> str:
    return _show(phi, 0)


_SCHEMA_SYNTAX = {"Box": "[]", "Diam": "<>", "AllBox": "AG", "ExBox": "EG",
                  "AllDiam": "AF", "ExDiam": "EF"}


def _show(phi: Formula, prec: int) -> str:
    # prec 0: -o operand on the right, 1: -o left, 2: \/ operand, 3: /\ operand, 4: prefix
    def wrap(s, need):
        return f"({s})" if prec >= need else s

    match phi:
        case AtomF(c):
            return f"<{c}>"
        case FVar(x):
            return x
        case AndF(()):
            return "true"
        case OrF(()):
            return "false"
        case Mod(op, b):
            return f"[{op}] {_show(b, 4)}"
        case Schema(kind, b):
            return f"{_SCHEMA_SYNTAX[kind]} {_show(b, 4)}"
        case Fixpoint(kind, x, b):
            return wrap(f"{kind} {x}. {_show(b, 0)}", 1)
        case ArrowF(a, b):
            return wrap(f"{_show(a, 1)} -o {_show(b, 0)}", 1)
        case OrF(items):
            return wrap(" \\/ ".join(_show(i, 3) for i in items), 3)
        case AndF(items):
            return wrap(" /\\ ".join(_show(i, 4) for i in items), 4)
    raise TypeError(f"not a formula: {phi!r}")


# ------------------------------------------------------------ formation


class FormulaError(ValueError):
    pass


def check_formula(tau: PureType, phi: Formula, reg: BaseRegistry = DEFAULT_REGISTRY,
                  fvars: dict | None = None) -> None:
    """Raise FormulaError unless `phi` is well formed at type `tau`."""
    fvars = fvars or {}
    match phi:
        case AtomF(c):
            if not (isinstance(tau, Base) and c in reg.carrier(tau.name)):
                raise FormulaError(f"<{c}> is not a formula at {_ty(tau)}")
        case Mod("pi1" | "pi2" as op, b):
            if not isinstance(tau, Prod):
                raise FormulaError(f"[{op}] needs a product type, found {_ty(tau)}")
            check_formula(tau.left if op == "pi1" else tau.right, b, reg, fvars)
        case Mod("fold", b):
            if not isinstance(tau, Rec):
                raise FormulaError(f"[fold] needs a rec type, found {_ty(tau)}")
            check_formula(unroll(tau), b, reg, fvars)
        case ArrowF(a, b):
            if not isinstance(tau, Arrow):
                raise FormulaError(f"-o needs an arrow type, found {_ty(tau)}")
            check_formula(tau.dom, a, reg, fvars)
            check_formula(tau.cod, b, reg, fvars)
        case AndF(items) | OrF(items):
            for i in items:
                check_formula(tau, i, reg, fvars)
        case Schema("Box" | "Diam" as kind, b):
            if stream_element(tau) is None:
                raise FormulaError(f"{_SCHEMA_SYNTAX[kind]} needs a stream type, found {_ty(tau)}")
            check_formula(tau, b, reg, fvars)
        case Schema(kind, b):
            if tree_element(tau) is None:
                raise FormulaError(f"{_SCHEMA_SYNTAX[kind]} needs a tree type, found {_ty(tau)}")
            check_formula(tau, b, reg, fvars)
        case Fixpoint(_, x, b):
            if not positive_in(x, b):
                raise FormulaError(f"{x} occurs negatively in its fixpoint body")
            check_formula(tau, b, reg, {**fvars, x: tau})
        case FVar(x):
            if x not in fvars:
                raise FormulaError(f"unbound formula variable {x}")
            from .syntax import type_eq

            if not type_eq(fvars[x], tau):
                raise FormulaError(f"{x} used at {_ty(tau)} but bound at {_ty(fvars[x])}")
        case _:
            raise FormulaError(f"not a formula: {phi!r}")


def _ty(tau) -> str:
    from .syntax import show_type

    return show_type(tau)


def positive_in(x: str, phi: Formula, positive: bool = True) -> bool:
    match phi:
        case FVar(y):
            return positive or y != x
        case AtomF():
            return True
        case Mod(_, b) | Schema(_, b):
            return positive_in(x, b, positive)
        case ArrowF(a, b):
            return positive_in(x, a, not positive) and positive_in(x, b, positive)
        case AndF(items) | OrF(items):
            return all(positive_in(x, i, positive) for i in items)
        case Fixpoint(_, y, b):
            return y == x or positive_in(x, b, positive)
    raise TypeError(f"not a formula: {phi!r}")


# ------------------------------------------------------- classification


class FormulaClass(Enum):
    CONJUNCTIVE = "Conjunctive"
    NORMAL = "Normal"
    OPEN = "Open"
    GENERAL = "General"


def is_conjunctive(phi: Formula) -> bool:
    match phi:
        case AtomF():
            return True
        case Mod(_, b):
            return is_conjunctive(b)
        case ArrowF(a, b):
            return is_conjunctive(a) and is_conjunctive(b)
        case AndF(items):
            return all(is_conjunctive(i) for i in items)
        case OrF(items):
            return not items
    return False


def _is_open(phi: Formula) -> bool:
    match phi:
        case Mod(_, b):
            return _is_open(b)
        case AndF(items) | OrF(items):
            return all(_is_open(i) for i in items)
    return is_conjunctive(phi)


def classify(phi: Formula) -> FormulaClass:
    """The tightest class of a formula.

    Conjunctive is checked first. A top-level conjunction of
    disjunctions of conjunctive formulas is Normal even though it is
    also Open; other finite combinations are Open.
    """
    if is_conjunctive(phi):
        return FormulaClass.CONJUNCTIVE
    if isinstance(phi, AndF) and phi.items and all(
            isinstance(i, OrF) and all(is_conjunctive(j) for j in i.items) for i in phi.items):
        return FormulaClass.NORMAL
    if _is_open(phi):
        return FormulaClass.OPEN
    return FormulaClass.GENERAL


def is_normal(phi: Formula) -> bool:
    """Member of the normal forms up to trivial regrouping: a conjunction of
    disjunctions of conjunctive formulas (a single disjunction counts)."""
    for i in _conjuncts([phi]):
        disj = i.items if isinstance(i, OrF) else (i,)
        if not all(is_conjunctive(j) for j in disj):
            return False
    return True


def is_schema_free(phi: Formula) -> bool:
    match phi:
        case Schema() | Fixpoint() | FVar():
            return False
        case AtomF():
            return True
        case Mod(_, b):
            return is_schema_free(b)
        case ArrowF(a, b):
            return is_schema_free(a) and is_schema_free(b)
        case AndF(items) | OrF(items):
            return all(is_schema_free(i) for i in items)
    raise TypeError(f"not a formula: {phi!r}")


# ------------------------------------------------------------ compiling


@dataclass(frozen=True)
class Up:
    elt: FinElt


@dataclass(frozen=True)
class EmptyC:
    pass


Empty = EmptyC()
Compiled = Union[Up, EmptyC]


class NotConjunctive(ValueError):
    pass


def compile_formula(phi: Formula) -> Compiled:
    """Empty when the formula denotes nothing, else Up(d) with extension ↑d."""
    d = _compile(phi)
    return Empty if d is None else Up(d)


def _compile(phi: Formula) -> FinElt | None:
    match phi:
        case AtomF(c):
            return fd.Atom(c)
        case Mod(op, b):
            d = _compile(b)
            if d is None:
                return None
            match op:
                case "pi1":
                    return fd.mk_pair(d, BOT)
                case "pi2":
                    return fd.mk_pair(BOT, d)
                case "fold":
                    return fd.mk_fold(d)
        case ArrowF(a, b):
            e = _compile(a)
            if e is None:
                return BOT
            d = _compile(b)
            if d is None:
                return None
            return fd.mk_fun([(e, d)])
        case AndF(items):
            out = BOT
            for i in items:
                d = _compile(i)
                if d is None:
                    return None
                out = fd.sup(out, d)
                if out is None:
                    return None
            return out
        case OrF(()):
            return None
    raise NotConjunctive(f"not a conjunctive formula: {show_formula(phi)}")


def char_formula(d: FinElt) -> Formula:
    """A conjunctive formula whose extension is exactly ↑d."""
    match d:
        case fd.Bot():
            return TOP
        case fd.Atom(c):
            return AtomF(c)
        case fd.Pair(a, b):
            return AndF((Mod("pi1", char_formula(a)), Mod("pi2", char_formula(b))))
        case fd.Fold(x):
            return Mod("fold", char_formula(x))
        case fd.Fun(steps):
            arrows = tuple(ArrowF(char_formula(a), char_formula(r)) for a, r in steps)
            return arrows[0] if len(arrows) == 1 else AndF(arrows)
    raise fd.ShapeError(f"not an element: {d!r}")


def consistent_f(phi: Formula) -> bool:
    """Does the conjunctive formula have a nonempty extension?"""
    return isinstance(compile_formula(phi), Up)


def entail_conj(psi: Formula, phi: Formula) -> bool:
    """[[psi]] ⊆ [[phi]] for conjunctive psi and phi."""
    cp = compile_formula(psi)
    if cp is Empty:
        return True
    cf = compile_formula(phi)
    return isinstance(cf, Up) and fd.leq(cf.elt, cp.elt)


# ------------------------------------------------------- normal forms


class NormalFormTooLarge(RuntimeError):
    pass


def push_modalities(phi: Formula) -> Formula:
    """Distribute modalities over finite conjunctions and disjunctions."""
    match phi:
        case Mod(op, b):
            b = push_modalities(b)
            match b:
                case AndF(items) if items:
                    return AndF(tuple(push_modalities(Mod(op, i)) for i in items))
                case OrF(items):
                    return OrF(tuple(push_modalities(Mod(op, i)) for i in items))
            return Mod(op, b)
        case ArrowF(a, b):
            return ArrowF(push_modalities(a), push_modalities(b))
        case AndF(items):
            return AndF(tuple(push_modalities(i) for i in items))
        case OrF(items):
            return OrF(tuple(push_modalities(i) for i in items))
        case AtomF():
            return phi
    raise ValueError(f"truncate schemas before normalizing: {show_formula(phi)}")


def _product(lists, limit):
    out = [()]
    for choices in lists:
        out = [acc + c for acc in out for c in choices]
        if len(out) > limit:
            raise NormalFormTooLarge(f"normal form exceeds {limit} terms")
    return out


def _dnf(phi: Formula, limit: int) -> list[tuple[Formula, ...]]:
    """Disjuncts as tuples of conjunctive formulas (their conjunction)."""
    match phi:
        case AtomF():
            return [(phi,)]
        case Mod(op, b):
            return [(Mod(op, mk_and(conj)),) for conj in _dnf(b, limit)]
        case AndF(items):
            return _product([_dnf(i, limit) for i in items], limit)
        case OrF(items):
            out = []
            for i in items:
                out.extend(_dnf(i, limit))
            return out
        case ArrowF():
            return _product([[(c,) for c in clause] for clause in _cnf(phi, limit)], limit)
    raise ValueError(f"truncate schemas before normalizing: {show_formula(phi)}")


def _cnf(phi: Formula, limit: int) -> list[tuple[Formula, ...]]:
    """Clauses as tuples of conjunctive formulas (their disjunction)."""
    match phi:
        case AtomF():
            return [(phi,)]
        case Mod(op, b):
            return [tuple(Mod(op, c) for c in clause) for clause in _cnf(b, limit)]
        case AndF(items):
            out = []
            for i in items:
                out.extend(_cnf(i, limit))
            return out
        case OrF(items):
            return _product([_cnf(i, limit) for i in items], limit)
        case ArrowF(a, b):
            # (\/ a_i) -o (/\_j \/_k b_jk)  ==  /\_i /\_j \/_k (a_i -o b_jk)
            out = []
            for conj in _dnf(a, limit):
                ante = mk_and(conj)
                if not consistent_f(ante):
                    continue
                for clause in _cnf(b, limit):
                    out.append(tuple(ArrowF(ante, c) for c in clause))
            return out
    raise ValueError(f"truncate schemas before normalizing: {show_formula(phi)}")


def to_dnf(phi: Formula, limit: int = 4096) -> Formula:
    """A disjunction of conjunctive formulas equivalent to `phi`."""
    return mk_or_raw([mk_and(conj) for conj in _dnf(phi, limit)])


def to_cnf(phi: Formula, limit: int = 4096) -> Formula:
    """A conjunction of disjunctions of conjunctive formulas equivalent to `phi`."""
    return AndF(tuple(mk_or_raw(list(clause)) for clause in _cnf(phi, limit)))


def mk_or_raw(items) -> Formula:
    items = list(dict.fromkeys(items))
    return items[0] if len(items) == 1 else OrF(tuple(items))


# ----------------------------------------- element-level normal forms
#
# The same normal forms, with every conjunctive piece compiled and
# redundancies removed as soon as they appear: inconsistent disjuncts
# vanish and only the minimal elements of each disjunction are kept.


def _minimal(elts) -> list[FinElt]:
    elts = list(dict.fromkeys(elts))
    return [d for d in elts if not any(e != d and fd.leq(e, d) for e in elts)]


def _clean_clauses(clauses) -> list[tuple[FinElt, ...]]:
    out = []
    for c in clauses:
        if BOT in c:
            continue  # a clause containing true holds everywhere
        c = tuple(sorted(_minimal(c), key=fd.sexpr))
        if c not in out:
            out.append(c)
    out = [c for c in out if not any(o != c and set(o) <= set(c) for o in out)]
    return out


def dnf_elements(phi: Formula, limit: int = 4096) -> list[FinElt]:
    """Minimal elements d_i with [[phi]] = ∪ ↑d_i."""
    match phi:
        case AtomF(c):
            return [fd.Atom(c)]
        case Mod(op, b):
            return [_wrap(op, d) for d in dnf_elements(b, limit)]
        case OrF(items):
            out = []
            for i in items:
                out.extend(dnf_elements(i, limit))
            return _minimal(out)
        case AndF(items):
            acc = [BOT]
            for i in items:
                choices = dnf_elements(i, limit)
                nxt_acc = []
                for a in acc:
                    for c in choices:
                        j = fd.sup(a, c)
                        if j is not None:
                            nxt_acc.append(j)
                acc = _minimal(nxt_acc)
                if len(acc) > limit:
                    raise NormalFormTooLarge(f"more than {limit} disjuncts")
            return acc
        case ArrowF():
            acc = [BOT]
            for clause in cnf_elements(phi, limit):
                acc = _minimal([j for a in acc for c in clause
                                if (j := fd.sup(a, c)) is not None])
                if len(acc) > limit:
                    raise NormalFormTooLarge(f"more than {limit} disjuncts")
            return acc
    raise ValueError(f"truncate schemas before normalizing: {show_formula(phi)}")


def cnf_elements(phi: Formula, limit: int = 4096) -> list[tuple[FinElt, ...]]:
    """Clauses C_j with [[phi]] = ∩_j ∪_{c∈C_j} ↑c; an empty clause is false."""
    match phi:
        case AtomF(c):
            return [(fd.Atom(c),)]
        case Mod(op, b):
            return _clean_clauses(tuple(_wrap(op, c) for c in clause) for clause in cnf_elements(b, limit))
        case AndF(items):
            out = []
            for i in items:
                out.extend(cnf_elements(i, limit))
            return _clean_clauses(out)
        case OrF(items):
            acc = [()]
            for i in items:
                clauses = cnf_elements(i, limit)
                acc = _clean_clauses([a + c for a in acc for c in clauses])
                if len(acc) > limit:
                    raise NormalFormTooLarge(f"more than {limit} clauses")
            return acc
        case ArrowF(a, b):
            out = []
            clauses = cnf_elements(b, limit)
            for e in dnf_elements(a, limit):
                for clause in clauses:
                    out.append(tuple(fd.mk_fun([(e, c)]) for c in clause))
            return _clean_clauses(out)
    raise ValueError(f"truncate schemas before normalizing: {show_formula(phi)}")


def _wrap(op: str, d: FinElt) -> FinElt:
    match op:
        case "pi1":
            return fd.mk_pair(d, BOT)
        case "pi2":
            return fd.mk_pair(BOT, d)
        case "fold":
            return fd.mk_fold(d)
    raise ValueError(op)


def entail_fin(psi: Formula, phi: Formula, limit: int = 4096) -> bool:
    """[[psi]] ⊆ [[phi]] for schema-free formulas.

    Every minimal element of the left side must lie above some element
    of every clause of the right side.
    """
    if not (is_schema_free(psi) and is_schema_free(phi)):
        raise ValueError("truncate schemas before deciding entailment")
    lefts = dnf_elements(psi, limit)
    if not lefts:
        return True
    clauses = cnf_elements(phi, limit)
    return all(any(fd.leq(c, d) for c in clause) for d in lefts for clause in clauses)


# ------------------------------------------------------------ truncation

_CONJ_KINDS = {"Box", "AllBox", "ExBox", "nu"}


def truncate(phi: Formula, k: int) -> Formula:
    """Cut every temporal schema and fixpoint at depth k."""
    if k < 0:
        raise ValueError("truncation depth must be non-negative")
    return truncate_polar(phi, k, k)


def truncate_polar(phi: Formula, k: int, wide: int, positive: bool = True) -> Formula:
    """Cut schemas at depth `k` where cutting weakens the formula's role and
    at depth `wide` where it strengthens it.

    In a goal (positive position) a conjunctive schema is cut at `k` and a
    disjunctive one at `wide`; in a hypothesis the depths swap. With
    `wide = k` this is plain truncation.
    """
    def depth(kind):
        conj = kind in _CONJ_KINDS
        return k if conj == positive else wide

    match phi:
        case AtomF() | FVar():
            return phi
        case Mod(op, b):
            return Mod(op, truncate_polar(b, k, wide, positive))
        case ArrowF(a, b):
            return ArrowF(truncate_polar(a, k, wide, not positive), truncate_polar(b, k, wide, positive))
        case AndF(items):
            return mk_and(truncate_polar(i, k, wide, positive) for i in items)
        case OrF(items):
            return mk_or(truncate_polar(i, k, wide, positive) for i in items)
        case Schema(kind, b):
            body = truncate_polar(b, k, wide, positive)
            return _unfold_schema(kind, body, depth(kind))
        case Fixpoint(kind, x, b):
            body = truncate_polar(b, k, wide, positive)
            approx = TOP if kind == "nu" else FALSE
            for _ in range(depth(kind)):
                approx = _simplify(subst_fvar(body, x, approx))
            return approx
    raise TypeError(f"not a formula: {phi!r}")


def _unfold_schema(kind: str, phi: Formula, n: int) -> Formula:
    match kind:
        case "Box":
            return mk_and(_iter_next(phi, i) for i in range(n))
        case "Diam":
            return mk_or(_iter_next(phi, i) for i in range(n))
        case "AllBox" | "ExBox":
            step = mk_and if kind == "AllBox" else mk_or
            approx = TOP
            for _ in range(n):
                approx = mk_and([phi, step([lft(approx), rght(approx)])])
            return approx
        case "AllDiam" | "ExDiam":
            step = mk_and if kind == "AllDiam" else mk_or
            approx = FALSE
            for _ in range(n):
                approx = mk_or([phi, step([lft(approx), rght(approx)])])
            return approx
    raise ValueError(f"unknown schema {kind}")


def _iter_next(phi: Formula, n: int) -> Formula:
    for _ in range(n):
        phi = nxt(phi)
    return phi


def subst_fvar(phi: Formula, x: str, repl: Formula) -> Formula:
    match phi:
        case FVar(y):
            return repl if y == x else phi
        case AtomF():
            return phi
        case Mod(op, b):
            return Mod(op, subst_fvar(b, x, repl))
        case Schema(kind, b):
            return Schema(kind, subst_fvar(b, x, repl))
        case ArrowF(a, b):
            return ArrowF(subst_fvar(a, x, repl), subst_fvar(b, x, repl))
        case AndF(items):
            return AndF(tuple(subst_fvar(i, x, repl) for i in items))
        case OrF(items):
            return OrF(tuple(subst_fvar(i, x, repl) for i in items))
        case Fixpoint(kind, y, b):
            return phi if y == x else Fixpoint(kind, y, subst_fvar(b, x, repl))
    raise TypeError(f"not a formula: {phi!r}")


def _simplify(phi: Formula) -> Formula:
    match phi:
        case Mod(op, b):
            return _simplify_unit(Mod(op, _simplify(b)))
        case ArrowF(a, b):
            return ArrowF(_simplify(a), _simplify(b))
        case AndF(items):
            return mk_and(_simplify(i) for i in items)
        case OrF(items):
            return mk_or(_simplify(i) for i in items)
    return phi


# --------------------------------------------- consistency by rules
#
# The consistency predicate read as inference rules over conjunctive
# formulas, as an alternative to compiling. It works on the list of
# conjuncts at one type and never builds a finite element.


def consistent_by_rules(phi: Formula) -> bool:
    return _cons(_conjuncts([phi]))


def _conjuncts(items) -> list[Formula]:
    out = []
    for f in items:
        if isinstance(f, AndF):
            out.extend(_conjuncts(f.items))
        else:
            out.append(f)
    return out


def _cons(items: list[Formula]) -> bool:
    if any(f == FALSE for f in items):
        return False
    atoms = {f.const for f in items if isinstance(f, AtomF)}
    if len(atoms) > 1:
        return False
    groups: dict[str, list[Formula]] = {}
    for f in items:
        if isinstance(f, Mod):
            groups.setdefault(f.op, []).append(f.body)
    for bodies in groups.values():
        if not _cons(_conjuncts(bodies)):
            return False
    arrows = [(f.ante, f.cons) for f in items if isinstance(f, ArrowF)]
    # drop arrows with an inconsistent antecedent; any set of arrows whose
    # antecedents are jointly consistent needs jointly consistent consequents
    live = [(a, c) for a, c in arrows if _cons(_conjuncts([a]))]
    for n in range(1, len(live) + 1):
        for subset in itertools.combinations(live, n):
            if _cons(_conjuncts([a for a, _ in subset])) and not _cons(_conjuncts([c for _, c in subset])):
                return False
    return True

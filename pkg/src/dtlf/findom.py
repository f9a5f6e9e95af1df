"""Finite (compact) elements of the Scott domains denoted by pure types.

Elements are kept in a canonical form so that semantic equality is
structural equality:

* the least element is `BOT` at every type, so a pair of bottoms, a fold
  of bottom and a function without steps all collapse to it;
* a function is the sup of its steps (a -> r), listed at the points of
  the join-closure of its arguments where its value jumps, sorted by
  their s-expression.

The operations are structural and do not need the type; only
`enumerate_elements` does.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

from .syntax import Arrow, Base, BaseRegistry, DEFAULT_REGISTRY, Prod, PureType, Rec, TVar, unroll


@dataclass(frozen=True)
class Bot:
    pass


@dataclass(frozen=True)
class Atom:
    const: str


@dataclass(frozen=True)
class Pair:
    left: "FinElt"
    right: "FinElt"


@dataclass(frozen=True)
class Fold:
    inner: "FinElt"


@dataclass(frozen=True)
class Fun:
    steps: tuple[tuple["FinElt", "FinElt"], ...]


FinElt = Union[Bot, Atom, Pair, Fold, Fun]

BOT = Bot()


class ShapeError(TypeError):
    pass


class InconsistentSteps(ValueError):
    """A step family whose arguments have a join but whose results do not."""

    def __init__(self, subset):
        self.subset = subset
        shown = ", ".join(f"{sexpr(a)} -> {sexpr(r)}" for a, r in subset)
        super().__init__(f"inconsistent steps: {shown}")


# ------------------------------------------------------------ printing


def sexpr(d: FinElt) -> str:
    match d:
        case Bot():
            return "(bot)"
        case Atom(c):
            return f"(atom {c})"
        case Pair(a, b):
            return f"(pair {sexpr(a)} {sexpr(b)})"
        case Fold(x):
            return f"(fold {sexpr(x)})"
        case Fun(steps):
            return "(fun " + " ".join(f"({sexpr(a)} -> {sexpr(r)})" for a, r in steps) + ")"
    raise ShapeError(f"not an element: {d!r}")


def parse_sexpr(text: str) -> FinElt:
    """Inverse of `sexpr`; the result is canonicalized."""
    toks = text.replace("(", " ( ").replace(")", " ) ").split()
    pos = 0

    def expect(tok):
        nonlocal pos
        if pos >= len(toks) or toks[pos] != tok:
            raise ValueError(f"expected {tok!r} at token {pos}")
        pos += 1

    def elt():
        nonlocal pos
        expect("(")
        head = toks[pos]
        pos += 1
        match head:
            case "bot":
                out = BOT
            case "atom":
                out = Atom(toks[pos])
                pos += 1
            case "pair":
                a = elt()
                out = mk_pair(a, elt())
            case "fold":
                out = mk_fold(elt())
            case "fun":
                steps = []
                while toks[pos] == "(":
                    expect("(")
                    a = elt()
                    expect("->")
                    steps.append((a, elt()))
                    expect(")")
                out = mk_fun(steps)
            case _:
                raise ValueError(f"unknown element head {head!r}")
        expect(")")
        return out

    try:
        out = elt()
    except IndexError:
        raise ValueError("unexpected end of element") from None
    if pos != len(toks):
        raise ValueError("trailing input after element")
    return out


# --------------------------------------------------------- constructors


def is_bot(d: FinElt) -> bool:
    match d:
        case Bot():
            return True
        case Atom():
            return False
        case Pair(a, b):
            return is_bot(a) and is_bot(b)
        case Fold(x):
            return is_bot(x)
        case Fun(steps):
            return all(is_bot(r) for _, r in steps)
    raise ShapeError(f"not an element: {d!r}")


def mk_pair(a: FinElt, b: FinElt) -> FinElt:
    return BOT if a == BOT and b == BOT else Pair(a, b)


def mk_fold(x: FinElt) -> FinElt:
    return BOT if x == BOT else Fold(x)


def left(d: FinElt) -> FinElt:
    match d:
        case Bot():
            return BOT
        case Pair(a, _):
            return a
    raise ShapeError(f"expected a pair, found {sexpr(d)}")


def right(d: FinElt) -> FinElt:
    match d:
        case Bot():
            return BOT
        case Pair(_, b):
            return b
    raise ShapeError(f"expected a pair, found {sexpr(d)}")


def inner(d: FinElt) -> FinElt:
    match d:
        case Bot():
            return BOT
        case Fold(x):
            return x
    raise ShapeError(f"expected a fold, found {sexpr(d)}")


def steps_of(d: FinElt) -> tuple:
    match d:
        case Bot():
            return ()
        case Fun(steps):
            return steps
    raise ShapeError(f"expected a function, found {sexpr(d)}")


def canonicalize(d: FinElt) -> FinElt:
    match d:
        case Bot() | Atom():
            return d
        case Pair(a, b):
            return mk_pair(canonicalize(a), canonicalize(b))
        case Fold(x):
            return mk_fold(canonicalize(x))
        case Fun(steps):
            return mk_fun([(canonicalize(a), canonicalize(r)) for a, r in steps])
    raise ShapeError(f"not an element: {d!r}")


# ------------------------------------------------------- order and sup


def leq(d: FinElt, e: FinElt) -> bool:
    """d <= e in the domain order."""
    match d:
        case Bot():
            return True
        case Atom(a):
            match e:
                case Atom(b):
                    return a == b
                case Bot():
                    return False
        case Pair(a, b):
            if isinstance(e, (Pair, Bot)):
                return leq(a, left(e)) and leq(b, right(e))
        case Fold(x):
            if isinstance(e, (Fold, Bot)):
                return leq(x, inner(e))
        case Fun(steps):
            if isinstance(e, (Fun, Bot)):
                return all(leq(r, apply(e, a)) for a, r in steps)
    raise ShapeError(f"cannot compare {sexpr(d)} with {sexpr(e)}")


def sup(d: FinElt, e: FinElt) -> FinElt | None:
    """Least upper bound, or None when d and e are inconsistent."""
    if d == BOT:
        return e
    if e == BOT:
        return d
    match d, e:
        case Atom(a), Atom(b):
            return d if a == b else None
        case Pair(a1, b1), Pair(a2, b2):
            a = sup(a1, a2)
            if a is None:
                return None
            b = sup(b1, b2)
            return None if b is None else mk_pair(a, b)
        case Fold(x), Fold(y):
            z = sup(x, y)
            return None if z is None else mk_fold(z)
        case Fun(s1), Fun(s2):
            try:
                return mk_fun(s1 + s2)
            except InconsistentSteps:
                return None
    raise ShapeError(f"cannot join {sexpr(d)} with {sexpr(e)}")


def consistent(d: FinElt, e: FinElt) -> bool:
    return sup(d, e) is not None


def sup_all(elts) -> FinElt | None:
    out = BOT
    for e in elts:
        out = sup(out, e)
        if out is None:
            return None
    return out


def apply(f: FinElt, x: FinElt) -> FinElt:
    """Value of the sup of steps `f` at `x`: the join of the firing results."""
    out = BOT
    for a, r in steps_of(f):
        if leq(a, x):
            out = sup(out, r)
            if out is None:
                raise InconsistentSteps([(a, r)])
    return out


def _join_closure(args) -> list[FinElt]:
    closed = list(dict.fromkeys(args))
    frontier = list(closed)
    while frontier:
        fresh = []
        for a in frontier:
            for b in list(closed):
                j = sup(a, b)
                if j is not None and j not in closed and j not in fresh:
                    fresh.append(j)
        closed.extend(fresh)
        frontier = fresh
    return closed


def mk_fun(steps) -> FinElt:
    """Canonical sup of a family of steps; raises InconsistentSteps if there is none.

    The family has a sup iff for every point c of the join-closure of the
    arguments, the results of the steps with argument below c have a join.
    This is the same as asking it of every subset whose arguments are
    bounded, since such a subset's join lies in the closure.
    """
    steps = [(a, r) for a, r in steps if r != BOT]
    if not steps:
        return BOT
    points = _join_closure([a for a, _ in steps])
    value: dict[FinElt, FinElt] = {}
    for c in points:
        firing = [(a, r) for a, r in steps if leq(a, c)]
        v = sup_all(r for _, r in firing)
        if v is None:
            raise InconsistentSteps(firing)
        value[c] = v
    canon = []
    for c in points:
        below = sup_all(value[b] for b in points if b != c and leq(b, c))
        if below != value[c]:
            canon.append((c, value[c]))
    canon.sort(key=lambda s: (sexpr(s[0]), sexpr(s[1])))
    return Fun(tuple(canon))


def steps_consistent_bruteforce(steps) -> bool:
    """Direct reading of the side condition: every subset with bounded
    arguments has bounded results."""
    steps = list(steps)
    for n in range(2, len(steps) + 1):
        for subset in itertools.combinations(steps, n):
            if sup_all(a for a, _ in subset) is not None and sup_all(r for _, r in subset) is None:
                return False
    return True


# ---------------------------------------------------------- enumeration


def enumerate_elements(tau: PureType, r: int, reg: BaseRegistry = DEFAULT_REGISTRY) -> list[FinElt]:
    """All canonical elements of `tau` of rank at most r, in a fixed order.

    Base types contribute their atoms at every rank, products do not use
    rank, every fold costs one rank, and a function of rank r has at most
    r steps drawn from elements of rank r - 1.
    """
    if r < 0:
        raise ValueError("rank must be non-negative")
    return list(_enumerate(tau, r, reg))


@lru_cache(maxsize=None)
def _enumerate(tau: PureType, r: int, reg: BaseRegistry) -> tuple[FinElt, ...]:
    match tau:
        case Base(name):
            return (BOT,) + tuple(Atom(c) for c in reg.carrier(name))
        case Prod(a, b):
            out = [BOT]
            for x in _enumerate(a, r, reg):
                for y in _enumerate(b, r, reg):
                    p = mk_pair(x, y)
                    if p != BOT:
                        out.append(p)
            return tuple(out)
        case Rec():
            if r == 0:
                return (BOT,)
            out = [BOT]
            for x in _enumerate(unroll(tau), r - 1, reg):
                if x != BOT:
                    out.append(Fold(x))
            return tuple(out)
        case Arrow(dom, cod):
            if r == 0:
                return (BOT,)
            args = _enumerate(dom, r - 1, reg)
            results = [y for y in _enumerate(cod, r - 1, reg) if y != BOT]
            single = [(a, y) for a in args for y in results]
            seen = {BOT: None}
            for n in range(1, r + 1):
                for family in itertools.combinations(single, n):
                    try:
                        f = mk_fun(family)
                    except InconsistentSteps:
                        continue
                    seen.setdefault(f, None)
            return tuple(seen)
        case TVar(name):
            raise ShapeError(f"open type variable {name}")
    raise ShapeError(f"not a type: {tau!r}")


def shaped(tau: PureType, d: FinElt, reg: BaseRegistry = DEFAULT_REGISTRY) -> bool:
    """Does `d` have the shape of an element of `tau`?"""
    match d:
        case Bot():
            return True
        case Atom(c):
            return isinstance(tau, Base) and c in reg.carrier(tau.name)
        case Pair(a, b):
            return isinstance(tau, Prod) and shaped(tau.left, a, reg) and shaped(tau.right, b, reg)
        case Fold(x):
            return isinstance(tau, Rec) and shaped(unroll(tau), x, reg)
        case Fun(steps):
            return isinstance(tau, Arrow) and all(
                shaped(tau.dom, a, reg) and shaped(tau.cod, y, reg) for a, y in steps)
    return False


def rank_of(d: FinElt) -> int:
    """Least rank at which `d` appears in the enumeration (up to step count)."""
    match d:
        case Bot() | Atom():
            return 0
        case Pair(a, b):
            return max(rank_of(a), rank_of(b))
        case Fold(x):
            return 1 + rank_of(x)
        case Fun(steps):
            inner_rank = max(max(rank_of(a), rank_of(y)) for a, y in steps)
            return max(len(steps), 1 + inner_rank)
    raise ShapeError(f"not an element: {d!r}")


# --------------------------------------------------------- order oracle
#
# An independent comparison used to test `leq`. It shares no helper with
# the code above for function elements: a sup of steps is compared by
# evaluating both sides at every point of the join-closure of the first
# element's arguments, which determines it.


def leq_oracle(d: FinElt, e: FinElt) -> bool:
    if isinstance(d, Bot):
        return True
    if isinstance(d, Atom):
        return isinstance(e, Atom) and e.const == d.const
    if isinstance(d, Pair):
        el, er = (e.left, e.right) if isinstance(e, Pair) else (BOT, BOT)
        if not isinstance(e, (Pair, Bot)):
            return False
        return leq_oracle(d.left, el) and leq_oracle(d.right, er)
    if isinstance(d, Fold):
        if not isinstance(e, (Fold, Bot)):
            return False
        return leq_oracle(d.inner, e.inner if isinstance(e, Fold) else BOT)
    if isinstance(d, Fun):
        if not isinstance(e, (Fun, Bot)):
            return False
        probes = _oracle_closure([a for a, _ in d.steps] + [a for a, _ in _oracle_steps(e)])
        for p in probes:
            if not leq_oracle(_oracle_apply(d, p), _oracle_apply(e, p)):
                return False
        return True
    return False


def _oracle_steps(f):
    return f.steps if isinstance(f, Fun) else ()


def _oracle_join(d, e):
    if isinstance(d, Bot):
        return e
    if isinstance(e, Bot):
        return d
    if isinstance(d, Atom) and isinstance(e, Atom):
        return d if d.const == e.const else None
    if isinstance(d, Pair) and isinstance(e, Pair):
        a = _oracle_join(d.left, e.left)
        b = _oracle_join(d.right, e.right)
        return None if a is None or b is None else Pair(a, b)
    if isinstance(d, Fold) and isinstance(e, Fold):
        x = _oracle_join(d.inner, e.inner)
        return None if x is None else Fold(x)
    if isinstance(d, Fun) and isinstance(e, Fun):
        joined = Fun(d.steps + e.steps)
        # the union has a sup iff it is defined at every probe point
        for p in _oracle_closure([a for a, _ in joined.steps]):
            if _oracle_apply(joined, p) is None:
                return None
        return joined
    return None


def _oracle_closure(args):
    pts = []
    for a in args:
        if not any(leq_oracle(a, q) and leq_oracle(q, a) for q in pts):
            pts.append(a)
    changed = True
    while changed:
        changed = False
        for a, b in itertools.combinations(list(pts), 2):
            j = _oracle_join(a, b)
            if j is not None and not any(leq_oracle(j, q) and leq_oracle(q, j) for q in pts):
                pts.append(j)
                changed = True
    return pts


def _oracle_apply(f, x):
    out = BOT
    for a, r in _oracle_steps(f):
        if leq_oracle(a, x):
            out = _oracle_join(out, r)
            if out is None:
                return None
    return out

"""Bounded denotational evaluator, semantic membership and the brute-force
oracle over finite elements.

Evaluation is call-by-name with memoized thunks. Each unrolling of a
fixpoint costs one unit of fuel; when fuel runs out the fixpoint denotes
bottom, so evaluating at fuel n computes the n-th Kleene iterate and
every result is below the true denotation.

Values may be wrapped in a `Tracked` cell that records which parts of the
value are inspected (unfolded, projected, cased on, applied). The record
is a finite element below the value, and is how the checker finds the
intermediate finite elements its application and fixpoint rules need.
"""

from __future__ import annotations

import sys
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from . import findom as fd
from .findom import BOT, FinElt
from .logic import (AndF, ArrowF, AtomF, Formula, Mod, OrF, dnf_elements, is_schema_free,
                    show_formula)
from .syntax import (Arrow, Ascribe, App, BaseRegistry, Case, Const, DEFAULT_REGISTRY, Fix,
                     FixAnnotated, Fold, Lam, Pair, Proj, Prod, PureType, Rec, Term, Unfold,
                     Var, unroll)


class EvalBudgetExceeded(RuntimeError):
    """Raised when evaluation takes more steps than its budget allows."""


# --------------------------------------------------------------- values


class Thunk:
    """A suspended computation, forced at most once."""

    __slots__ = ("compute", "value", "forcing")

    def __init__(self, compute: Callable[[], object]):
        self.compute = compute
        self.value = None
        self.forcing = False

    def force(self):
        if self.value is None:
            if self.forcing:
                # a value that demands itself before producing anything is bottom
                return Approx(BOT)
            self.forcing = True
            try:
                value = whnf(self.compute())
            finally:
                self.forcing = False
            self.value = value
            self.compute = None
        return self.value


@dataclass(eq=False)
class Approx:
    """A value known only through a finite element below it."""

    elt: FinElt


@dataclass(eq=False)
class Closure:
    env: dict
    var: str
    body: Term
    fuel: int


@dataclass(eq=False)
class PairV:
    left: object
    right: object


@dataclass(eq=False)
class FoldV:
    inner: object


class ObsNode:
    """What has been observed of one value."""

    __slots__ = ("atom", "fold", "parts", "steps")

    def __init__(self):
        self.atom = None
        self.fold = None
        self.parts = None
        self.steps = []

    def fold_child(self) -> "ObsNode":
        if self.fold is None:
            self.fold = ObsNode()
        return self.fold

    def part(self, i: int) -> "ObsNode":
        if self.parts is None:
            self.parts = [ObsNode(), ObsNode()]
        return self.parts[i - 1]

    def snapshot(self) -> FinElt:
        if self.atom is not None:
            return fd.Atom(self.atom)
        if self.fold is not None:
            return fd.mk_fold(self.fold.snapshot())
        if self.parts is not None:
            return fd.mk_pair(self.parts[0].snapshot(), self.parts[1].snapshot())
        if self.steps:
            return fd.mk_fun([(a.snapshot(), r.snapshot()) for a, r in self.steps])
        return BOT


@dataclass(eq=False)
class Tracked:
    """A value whose inspections are recorded in `node`."""

    inner: object
    node: ObsNode


# ---------------------------------------------------------- step budget

_state = threading.local()
DEFAULT_STEPS = 2_000_000


@contextmanager
def step_budget(steps: int = DEFAULT_STEPS):
    """Bound the number of evaluation steps inside the block.

    Nested blocks share the outermost budget.
    """
    if getattr(_state, "left", None) is not None:
        yield
        return
    _state.left = steps
    try:
        yield
    finally:
        _state.left = None


def _tick():
    left = getattr(_state, "left", None)
    if left is None:
        return
    if left <= 0:
        raise EvalBudgetExceeded("evaluation step budget exhausted")
    _state.left = left - 1


def deep(fn, *args, **kwargs):
    """Run `fn` on a thread with a large stack; evaluation recurses deeply."""
    if getattr(_state, "deep", False):
        return fn(*args, **kwargs)
    result, error = [], []
    # the worker inherits the caller's step budget and hands back the rest
    budget = [getattr(_state, "left", None)]

    def target():
        _state.deep = True
        _state.left = budget[0]
        try:
            result.append(fn(*args, **kwargs))
        except BaseException as exc:  # re-raised in the caller
            error.append(exc)
        finally:
            budget[0] = _state.left

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 200_000))
    old_size = threading.stack_size()
    threading.stack_size(512 * 1024 * 1024)
    try:
        t = threading.Thread(target=target)
        t.start()
        t.join()
    finally:
        threading.stack_size(old_size)
    if getattr(_state, "left", None) is not None:
        _state.left = budget[0]
    if error:
        raise error[0]
    return result[0]


# ----------------------------------------------------------- primitives


def whnf(x):
    while isinstance(x, Thunk):
        x = x.force()
    return x


def do_unfold(v):
    v = whnf(v)
    match v:
        case FoldV(inner):
            return inner
        case Approx(d):
            return Approx(fd.inner(d))
        case Tracked(inner, node):
            return Tracked(Thunk(lambda: do_unfold(inner)), node.fold_child())
    raise TypeError(f"unfold of a non-fold value {v!r}")


def do_proj(v, i: int):
    v = whnf(v)
    match v:
        case PairV(a, b):
            return a if i == 1 else b
        case Approx(d):
            return Approx(fd.left(d) if i == 1 else fd.right(d))
        case Tracked(inner, node):
            return Tracked(Thunk(lambda: do_proj(inner, i)), node.part(i))
    raise TypeError(f"projection of a non-pair value {v!r}")


def scrutinize(v) -> str | None:
    """The constant a base value evaluates to, or None for bottom."""
    v = whnf(v)
    match v:
        case Approx(fd.Atom(c)):
            return c
        case Approx(fd.Bot()):
            return None
        case Tracked(inner, node):
            c = scrutinize(inner)
            if c is not None:
                node.atom = c
            return c
    raise TypeError(f"case on a non-constant value {v!r}")


def apply_value(f, arg):
    f = whnf(f)
    match f:
        case Closure(env, x, body, fuel):
            return evaluate(body, {**env, x: arg}, fuel)
        case Approx(d):
            steps = fd.steps_of(d)
            if not steps:
                return Approx(BOT)

            def fire():
                out = BOT
                for a, r in steps:
                    if value_geq(arg, a):
                        out = fd.sup(out, r)
                return Approx(out)

            return Thunk(fire)
        case Tracked(inner, node):
            a_node, r_node = ObsNode(), ObsNode()
            node.steps.append((a_node, r_node))
            return Tracked(Thunk(lambda: apply_value(inner, Tracked(arg, a_node))), r_node)
    raise TypeError(f"application of a non-function value {f!r}")


def value_geq(v, d: FinElt) -> bool:
    """Is the finite element d below the value v? Inspects v only as needed."""
    match d:
        case fd.Bot():
            return True
        case fd.Atom(c):
            return scrutinize(v) == c
        case fd.Pair(a, b):
            return value_geq(do_proj(v, 1), a) and value_geq(do_proj(v, 2), b)
        case fd.Fold(x):
            return value_geq(do_unfold(v), x)
        case fd.Fun(steps):
            return all(value_geq(apply_value(v, Approx(a)), r) for a, r in steps)
    raise fd.ShapeError(f"not an element: {d!r}")


# ------------------------------------------------------------ evaluator


def delay(t: Term, env: dict, fuel: int):
    match t:
        case Var(x):
            return env[x]
        case Const(_, c):
            return Approx(fd.Atom(c))
    return Thunk(lambda: evaluate(t, env, fuel))


def evaluate(t: Term, env: dict, fuel: int):
    """Weak head value of t; every fixpoint unrolling costs one unit of fuel."""
    _tick()
    match t:
        case Var(x):
            return whnf(env[x])
        case Const(_, c):
            return Approx(fd.Atom(c))
        case Lam(x, body):
            return Closure(env, x, body, fuel)
        case App(f, a):
            return whnf(apply_value(evaluate(f, env, fuel), delay(a, env, fuel)))
        case Fix(x, body) | FixAnnotated(x, body, _):
            if fuel <= 0:
                return Approx(BOT)
            return evaluate(body, {**env, x: Thunk(lambda: evaluate(t, env, fuel - 1))}, fuel)
        case Fold(a):
            return FoldV(delay(a, env, fuel))
        case Unfold(a):
            return whnf(do_unfold(evaluate(a, env, fuel)))
        case Pair(a, b):
            return PairV(delay(a, env, fuel), delay(b, env, fuel))
        case Proj(i, a):
            return whnf(do_proj(evaluate(a, env, fuel), i))
        case Case(s, _):
            c = scrutinize(evaluate(s, env, fuel))
            if c is None:
                return Approx(BOT)
            return evaluate(t.branch(c), env, fuel)
        case Ascribe(a, _):
            return evaluate(a, env, fuel)
    raise TypeError(f"not a term: {t!r}")


def approx_env(elements: dict) -> dict:
    return {x: Approx(d) for x, d in elements.items()}


def eval_term(t: Term, env: dict | None = None, fuel: int = 16):
    """Evaluate with variables bound to finite elements."""
    return evaluate(t, approx_env(env or {}), fuel)


# ---------------------------------------------------------------- lower


def lower(v, tau: PureType, fuel: int, rank: int, reg: BaseRegistry = DEFAULT_REGISTRY) -> FinElt:
    """A finite element below the value: folds are followed at most `fuel`
    deep and functions are sampled at the elements of their domain of the
    given rank."""
    v = whnf(v)
    match v:
        case Approx(d):
            return d
        case Tracked(inner, _):
            return lower(inner, tau, fuel, rank, reg)
        case PairV(a, b):
            if not isinstance(tau, Prod):
                raise fd.ShapeError("pair value at a non-product type")
            return fd.mk_pair(lower(a, tau.left, fuel, rank, reg), lower(b, tau.right, fuel, rank, reg))
        case FoldV(a):
            if not isinstance(tau, Rec):
                raise fd.ShapeError("fold value at a non-recursive type")
            if fuel <= 0:
                return BOT
            return fd.mk_fold(lower(a, unroll(tau), fuel - 1, rank, reg))
        case Closure():
            if not isinstance(tau, Arrow):
                raise fd.ShapeError("function value at a non-arrow type")
            steps = []
            for p in fd.enumerate_elements(tau.dom, rank, reg):
                steps.append((p, lower(apply_value(v, Approx(p)), tau.cod, fuel, rank, reg)))
            return fd.mk_fun(steps)
    raise TypeError(f"not a value: {v!r}")


# --------------------------------------------------------------- member


class Membership(Enum):
    HOLDS = "Holds"
    UNKNOWN = "Unknown"


def member(v, phi: Formula, steps: int = DEFAULT_STEPS) -> Membership:
    """Holds when a finite part of the value already lies in the formula's
    extension. Never refutes: a lower bound cannot show non-membership."""
    if not is_schema_free(phi):
        raise ValueError("truncate schemas before checking membership")
    try:
        with step_budget(steps):
            for d in dnf_elements(phi):
                if value_geq(v, d):
                    return Membership.HOLDS
    except EvalBudgetExceeded:
        pass
    return Membership.UNKNOWN


# --------------------------------------------------------------- oracle
#
# Satisfaction of formulas by finite elements, read off the structure of
# the element. Implications quantify over the enumerated domain, so the
# oracle does not go through the compiler it is used to test.


def sat(tau: PureType, d: FinElt, phi: Formula, r: int, reg: BaseRegistry = DEFAULT_REGISTRY) -> bool:
    match phi:
        case AtomF(c):
            return d == fd.Atom(c)
        case Mod("pi1", b):
            return sat(tau.left, fd.left(d), b, r, reg)
        case Mod("pi2", b):
            return sat(tau.right, fd.right(d), b, r, reg)
        case Mod("fold", b):
            return sat(unroll(tau), fd.inner(d), b, r, reg)
        case ArrowF(a, b):
            return all(sat(tau.cod, fd.apply(d, x), b, r, reg)
                       for x in fd.enumerate_elements(tau.dom, r, reg) if sat(tau.dom, x, a, r, reg))
        case AndF(items):
            return all(sat(tau, d, i, r, reg) for i in items)
        case OrF(items):
            return any(sat(tau, d, i, r, reg) for i in items)
    raise ValueError(f"the oracle needs a schema-free formula, got {show_formula(phi)}")


def extension(tau: PureType, phi: Formula, r: int, reg: BaseRegistry = DEFAULT_REGISTRY) -> frozenset[int]:
    """Indices of the rank-r elements of tau satisfying phi."""
    elts = fd.enumerate_elements(tau, r, reg)
    return frozenset(i for i, d in enumerate(elts) if sat(tau, d, phi, r, reg))


def oracle_entail(tau: PureType, psi: Formula, phi: Formula, r: int,
                  reg: BaseRegistry = DEFAULT_REGISTRY) -> bool:
    return all(sat(tau, d, phi, r, reg) for d in fd.enumerate_elements(tau, r, reg)
               if sat(tau, d, psi, r, reg))


def oracle_consistent(tau: PureType, phi: Formula, r: int, reg: BaseRegistry = DEFAULT_REGISTRY) -> bool:
    return any(sat(tau, d, phi, r, reg) for d in fd.enumerate_elements(tau, r, reg))

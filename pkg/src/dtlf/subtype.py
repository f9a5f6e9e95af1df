"""Refinement types, their characteristic formulas, and subtyping."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .logic import AndF, ArrowF, Formula, Mod, TOP, entail_fin, show_formula, truncate
from .syntax import Arrow, Prod, PureType, show_type, type_eq


@dataclass(frozen=True)
class PureT:
    type: PureType


@dataclass(frozen=True)
class Refine:
    type: PureType
    formula: Formula


@dataclass(frozen=True)
class ProdT:
    left: "RefType"
    right: "RefType"


@dataclass(frozen=True)
class ArrowT:
    dom: "RefType"
    cod: "RefType"


RefType = Union[PureT, Refine, ProdT, ArrowT]


class SubtypeError(TypeError):
    pass


def underlying(t: RefType) -> PureType:
    match t:
        case PureT(tau) | Refine(tau, _):
            return tau
        case ProdT(a, b):
            return Prod(underlying(a), underlying(b))
        case ArrowT(a, b):
            return Arrow(underlying(a), underlying(b))
    raise TypeError(f"not a refinement type: {t!r}")


def char_type(t: RefType) -> tuple[PureType, Formula]:
    """The pure type of `t` and a formula over it describing the same set."""
    match t:
        case PureT(tau):
            return tau, TOP
        case Refine(tau, phi):
            return tau, phi
        case ProdT(a, b):
            ta, fa = char_type(a)
            tb, fb = char_type(b)
            return Prod(ta, tb), AndF((Mod("pi1", fa), Mod("pi2", fb)))
        case ArrowT(a, b):
            ta, fa = char_type(a)
            tb, fb = char_type(b)
            return Arrow(ta, tb), ArrowF(fa, fb)
    raise TypeError(f"not a refinement type: {t!r}")


def subtype(s: RefType, t: RefType, k: int) -> bool:
    """Is every inhabitant of `s` one of `t`, with schemas cut at depth k?"""
    ts, fs = char_type(s)
    tt, ft = char_type(t)
    if not type_eq(ts, tt):
        raise SubtypeError(f"underlying types differ: {show_type(ts)} and {show_type(tt)}")
    return entail_fin(truncate(fs, k), truncate(ft, k))


def show_ref_type(t: RefType) -> str:
    return _show(t, 0)


def _show(t: RefType, prec: int) -> str:
    match t:
        case PureT(tau):
            s = show_type(tau)
            return f"({s})" if prec >= 1 and (" " in s) else s
        case Refine(tau, phi):
            return f"{{{show_type(tau)} | {show_formula(phi)}}}"
        case ProdT(a, b):
            s = f"{_show(a, 2)} * {_show(b, 1)}"
            return f"({s})" if prec >= 2 else s
        case ArrowT(a, b):
            s = f"{_show(a, 1)} -> {_show(b, 0)}"
            return f"({s})" if prec >= 1 else s
    raise TypeError(f"not a refinement type: {t!r}")

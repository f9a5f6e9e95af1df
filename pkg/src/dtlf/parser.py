"""Recursive-descent parser for types, terms, formulas, refinement types
and judgment files."""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from . import logic as lg
from . import syntax as sx
from .syntax import BaseRegistry, DEFAULT_REGISTRY


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        where = f"{line}:{col}: " if line else ""
        super().__init__(f"{where}{message}")
        self.line = line
        self.col = col


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>--[^\n]*)
  | (?P<sym>\|-|⊢|::|->|-o|/\\|\\/|<>|\[\]|[\\λ.(),:*{}|\[\];<>=@])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
""", re.VERBOSE)


@dataclass
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Tok]:
    toks = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            toks.append(Tok(kind, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        if "\n" in chunk:
            line += chunk.count("\n")
            line_start = pos + chunk.rfind("\n") + 1
        pos = m.end()
    toks.append(Tok("eof", "", line, pos - line_start + 1))
    return toks


TERM_KEYWORDS = {"fix", "fold", "unfold", "pi1", "pi2", "hd", "tl", "lbl", "lft", "rght",
                 "case", "of", "if", "then", "else", "Node", "Cons", "rec", "Stream", "Tree", "Rou"}
_PREFIX_OPS = {"fold", "unfold", "pi1", "pi2", "hd", "tl", "lbl", "lft", "rght"}
_FORMULA_MODS = {"pi1": "pi1", "pi2": "pi2", "fold": "fold", "hd": "fold pi1", "tl": "fold pi2",
                 "lbl": "fold pi1", "lft": "fold pi2 pi1", "rght": "fold pi2 pi2"}
_SCHEMA_WORDS = {"[]": "Box", "<>": "Diam", "AG": "AllBox", "EG": "ExBox", "AF": "AllDiam", "EF": "ExDiam"}


class Parser:
    def __init__(self, text: str, reg: BaseRegistry = DEFAULT_REGISTRY):
        self.toks = tokenize(text)
        self.i = 0
        self.reg = reg
        self.scope: list[str] = []

    # -- token helpers

    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def peek(self, n: int = 1) -> Tok:
        return self.toks[min(self.i + n, len(self.toks) - 1)]

    def at(self, *texts) -> bool:
        return self.tok.kind != "eof" and self.tok.text in texts

    def advance(self) -> Tok:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Tok:
        if not self.at(text):
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def ident(self) -> str:
        if self.tok.kind != "ident":
            self.error(f"expected an identifier, found {self.tok.text or 'end of input'!r}")
        return self.advance().text

    def error(self, message: str):
        raise ParseError(message, self.tok.line, self.tok.col)

    def done(self):
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.text!r}")

    # -- types

    def type_(self, bound=()) -> sx.PureType:
        left = self.prod_type(bound)
        if self.at("->"):
            self.advance()
            return sx.Arrow(left, self.type_(bound))
        return left

    def prod_type(self, bound) -> sx.PureType:
        left = self.atom_type(bound)
        if self.at("*"):
            self.advance()
            return sx.Prod(left, self.prod_type(bound))
        return left

    def atom_type(self, bound) -> sx.PureType:
        t = self.tok
        if self.at("("):
            self.advance()
            ty = self.type_(bound)
            self.expect(")")
            return ty
        if self.at("rec"):
            self.advance()
            x = self.ident()
            self.expect(".")
            return sx.Rec(x, self.type_(bound + (x,)))
        if self.at("Stream", "Tree", "Rou"):
            head = self.advance().text
            arg = self.atom_type(bound)
            return {"Stream": sx.stream_of, "Tree": sx.tree_of, "Rou": sx.rou_of}[head](arg)
        name = self.ident()
        if name in bound:
            return sx.TVar(name)
        if self.reg.has_base(name):
            return sx.Base(name)
        if len(name) == 1:
            raise ParseError(f"unbound type variable {name}", t.line, t.col)
        raise ParseError(f"unknown base type {name}", t.line, t.col)

    # -- terms

    def term(self) -> sx.Term:
        if self.at("\\", "λ"):
            self.advance()
            names = [self.binder()]
            while self.tok.kind == "ident":
                names.append(self.binder())
            self.expect(".")
            body = self.term()
            for x in reversed(names):
                self.scope.remove(x)
                body = sx.Lam(x, body)
            return body
        if self.at("fix"):
            self.advance()
            x = self.binder()
            chain = None
            if self.at("["):
                self.advance()
                chain = [self.formula()]
                while self.at(";"):
                    self.advance()
                    chain.append(self.formula())
                self.expect("]")
            self.expect(".")
            body = self.term()
            self.scope.remove(x)
            return sx.Fix(x, body) if chain is None else sx.FixAnnotated(x, body, tuple(chain))
        if self.at("if"):
            self.advance()
            c = self.term()
            self.expect("then")
            a = self.term()
            self.expect("else")
            b = self.term()
            return sx.Case(c, (("tt", a), ("ff", b)))
        if self.at("case"):
            return self.case_term()
        head = self.app_term()
        if self.at("::"):
            self.advance()
            return sx.Fold(sx.Pair(head, self.term()))
        return head

    def binder(self) -> str:
        t = self.tok
        x = self.ident()
        if x in TERM_KEYWORDS or self.reg.base_of(x) is not None:
            raise ParseError(f"{x} cannot be used as a variable", t.line, t.col)
        if x in self.scope:
            raise ParseError(f"duplicate binder {x} in the same scope", t.line, t.col)
        self.scope.append(x)
        return x

    def case_term(self) -> sx.Term:
        start = self.expect("case")
        scrut = self.term()
        self.expect("of")
        self.expect("{")
        arms = []
        while True:
            c = self.ident()
            if self.reg.base_of(c) is None:
                self.error(f"{c} is not a declared constant")
            self.expect("->")
            arms.append((c, self.term()))
            if self.at("|"):
                self.advance()
                continue
            self.expect("}")
            break
        base = self.reg.base_of(arms[0][0])
        names = [c for c, _ in arms]
        if sorted(names) != sorted(self.reg.carrier(base)) or len(set(names)) != len(names):
            raise ParseError(f"case must cover {' '.join(self.reg.carrier(base))} exactly once",
                             start.line, start.col)
        return sx.Case(scrut, tuple(arms))

    def starts_atom(self) -> bool:
        t = self.tok
        if t.kind == "ident":
            return t.text not in {"of", "then", "else", "rec", "Stream", "Tree", "Rou"}
        return t.text == "("

    def app_term(self) -> sx.Term:
        if not self.starts_atom():
            self.error(f"expected a term, found {self.tok.text or 'end of input'!r}")
        fn = self.unary()
        while True:
            if self.starts_atom() and not self.at("fix", "case", "if"):
                fn = sx.App(fn, self.unary())
            elif self.at("\\", "λ", "fix", "if", "case"):
                fn = sx.App(fn, self.term())
                return fn
            else:
                return fn

    def unary(self) -> sx.Term:
        t = self.tok
        if t.kind == "ident" and t.text in _PREFIX_OPS:
            self.advance()
            arg = self.unary()
            match t.text:
                case "fold":
                    return sx.Fold(arg)
                case "unfold":
                    return sx.Unfold(arg)
                case "pi1":
                    return sx.Proj(1, arg)
                case "pi2":
                    return sx.Proj(2, arg)
                case "hd" | "lbl":
                    return sx.Proj(1, sx.Unfold(arg))
                case "tl":
                    return sx.Proj(2, sx.Unfold(arg))
                case "lft":
                    return sx.Proj(1, sx.Proj(2, sx.Unfold(arg)))
                case "rght":
                    return sx.Proj(2, sx.Proj(2, sx.Unfold(arg)))
        if t.kind == "ident" and t.text == "Cons":
            self.advance()
            h = self.unary()
            return sx.Fold(sx.Pair(h, self.unary()))
        if t.kind == "ident" and t.text == "Node":
            self.advance()
            a = self.unary()
            l = self.unary()
            return sx.Fold(sx.Pair(a, sx.Pair(l, self.unary())))
        if self.at("fix", "case", "if"):
            return self.term()
        return self.atom()

    def atom(self) -> sx.Term:
        t = self.tok
        if self.at("("):
            self.advance()
            inner = self.term()
            if self.at(","):
                self.advance()
                second = self.term()
                self.expect(")")
                return sx.Pair(inner, second)
            if self.at(":"):
                self.advance()
                ty = self.type_()
                self.expect(")")
                return sx.Ascribe(inner, ty)
            self.expect(")")
            return inner
        name = self.ident()
        if name in TERM_KEYWORDS:
            raise ParseError(f"unexpected keyword {name}", t.line, t.col)
        base = self.reg.base_of(name)
        if base is not None:
            return sx.Const(base, name)
        return sx.Var(name)

    # -- formulas

    def formula(self, fvars=()) -> lg.Formula:
        left = self.disj(fvars)
        if self.at("-o"):
            self.advance()
            return lg.ArrowF(left, self.formula(fvars))
        return left

    def disj(self, fvars) -> lg.Formula:
        items = [self.conj(fvars)]
        while self.at("\\/"):
            self.advance()
            items.append(self.conj(fvars))
        return items[0] if len(items) == 1 else lg.OrF(tuple(items))

    def conj(self, fvars) -> lg.Formula:
        items = [self.prefix_formula(fvars)]
        while self.at("/\\"):
            self.advance()
            items.append(self.prefix_formula(fvars))
        return items[0] if len(items) == 1 else lg.AndF(tuple(items))

    def prefix_formula(self, fvars) -> lg.Formula:
        t = self.tok
        if self.at("<"):
            self.advance()
            c = self.ident()
            if self.reg.base_of(c) is None:
                raise ParseError(f"{c} is not a declared constant", t.line, t.col)
            self.expect(">")
            return lg.AtomF(c)
        if self.at("["):
            self.advance()
            op = self.ident()
            if op not in _FORMULA_MODS:
                raise ParseError(f"unknown modality [{op}]", t.line, t.col)
            self.expect("]")
            return lg.mods(_FORMULA_MODS[op], self.prefix_formula(fvars))
        if self.at("X"):
            self.advance()
            return lg.nxt(self.prefix_formula(fvars))
        if t.text in _SCHEMA_WORDS and (t.kind == "sym" or t.kind == "ident"):
            self.advance()
            return lg.Schema(_SCHEMA_WORDS[t.text], self.prefix_formula(fvars))
        if self.at("true"):
            self.advance()
            return lg.TOP
        if self.at("false"):
            self.advance()
            return lg.FALSE
        if self.at("("):
            self.advance()
            f = self.formula(fvars)
            self.expect(")")
            return f
        if self.at("mu", "nu"):
            kind = self.advance().text
            x = self.ident()
            self.expect(".")
            return lg.Fixpoint(kind, x, self.formula(fvars + (x,)))
        if t.kind == "ident" and t.text in fvars:
            self.advance()
            return lg.FVar(t.text)
        self.error(f"expected a formula, found {t.text or 'end of input'!r}")

    # -- refinement types

    def ref_type(self):
        from .subtype import ArrowT

        left = self.ref_prod()
        if self.at("->"):
            self.advance()
            return _collapse(ArrowT(left, self.ref_type()))
        return left

    def ref_prod(self):
        from .subtype import ProdT

        left = self.ref_atom()
        if self.at("*"):
            self.advance()
            return _collapse(ProdT(left, self.ref_prod()))
        return left

    def ref_atom(self):
        from .subtype import PureT, Refine

        if self.at("{"):
            t = self.advance()
            tau = self.type_()
            self.expect("|")
            phi = self.formula()
            self.expect("}")
            try:
                sx.check_closed_type(tau, self.reg)
                lg.check_formula(tau, phi, self.reg)
            except (lg.FormulaError, sx.PureTypeError) as exc:
                raise ParseError(str(exc), t.line, t.col) from None
            return Refine(tau, phi)
        if self.at("("):
            self.advance()
            inner = self.ref_type()
            self.expect(")")
            return inner
        return PureT(self.atom_type(()))


def _collapse(t):
    from .subtype import ArrowT, ProdT, PureT

    match t:
        case ProdT(PureT(a), PureT(b)):
            return PureT(sx.Prod(a, b))
        case ArrowT(PureT(a), PureT(b)):
            return PureT(sx.Arrow(a, b))
    return t


# -------------------------------------------------------------- entries


def parse_type(text: str, reg: BaseRegistry = DEFAULT_REGISTRY) -> sx.PureType:
    p = Parser(text, reg)
    ty = p.type_()
    p.done()
    return ty


def parse_term(text: str, reg: BaseRegistry = DEFAULT_REGISTRY) -> sx.Term:
    p = Parser(text, reg)
    t = p.term()
    p.done()
    return t


def parse_typed_term(text: str, reg: BaseRegistry = DEFAULT_REGISTRY):
    """`M` or `M : type`; the type is None when absent."""
    p = Parser(text, reg)
    t = p.term()
    ty = None
    if p.at(":"):
        p.advance()
        ty = p.type_()
    p.done()
    return t, ty


def parse_formula(text: str, reg: BaseRegistry = DEFAULT_REGISTRY) -> lg.Formula:
    p = Parser(text, reg)
    f = p.formula()
    p.done()
    return f


def parse_ref_type(text: str, reg: BaseRegistry = DEFAULT_REGISTRY):
    p = Parser(text, reg)
    t = p.ref_type()
    p.done()
    return t


def split_top(text: str, sep: str = ";") -> list[str]:
    """Split on `sep` outside of brackets."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts]


# -------------------------------------------------------- judgment files


@dataclass
class Stanza:
    label: str
    judgment: object
    options: dict
    line: int


@dataclass
class JudgmentFile:
    registry: BaseRegistry
    stanzas: list[Stanza] = field(default_factory=list)
    defs: dict = field(default_factory=dict)


_OPTION_KEYS = {"k": "k", "nfix": "n_fix", "fuel": "fuel", "wide": "wide", "limit": "disjunct_limit"}


def parse_judgment_file(text: str, reg: BaseRegistry = DEFAULT_REGISTRY,
                        base_dir: str | os.PathLike | None = None) -> JudgmentFile:
    """Read stanzas separated by blank lines.

    A stanza is `base Name = c1 ... cn`, `def name = term`, or a judgment
    `x : T, y : S |- M : T`, optionally preceded by a `[label]` line.
    `-- options: k=2 nfix=4` applies to every later stanza, and
    `-- include: file` pulls in the bases and definitions of another file
    (relative to `base_dir`).
    """
    out = JudgmentFile(registry=reg)
    options: dict = {}
    for start, body, directives in _stanzas(text):
        for kind, d in directives:
            if kind == "include":
                path = Path(base_dir or ".") / d.strip()
                try:
                    inc_text = path.read_text()
                except OSError as exc:
                    raise ParseError(f"cannot include {d.strip()}: {exc.strerror}", start, 1) from None
                inc = parse_judgment_file(inc_text, out.registry, path.parent)
                out.registry = inc.registry
                out.defs.update(inc.defs)
                continue
            for item in d.split():
                key, eq, val = item.partition("=")
                if not eq or key not in _OPTION_KEYS or not val.isdigit():
                    raise ParseError(f"bad option {item!r}", start, 1)
                options[_OPTION_KEYS[key]] = int(val)
        if not body:
            continue
        label = ""
        m = re.match(r"\s*\[([^\]]+)\]\s*\n", body)
        if m and not body.lstrip().startswith("[]"):
            label = m.group(1).strip()
            body = body[m.end():]
        first = body.split(None, 1)[0] if body.split() else ""
        if first == "base":
            try:
                out.registry = sx.parse_bases(body, out.registry)
            except sx.RegistryError as exc:
                raise ParseError(str(exc), start, 1) from None
            continue
        if first == "def":
            name, term = _parse_def(body, out, start)
            out.defs[name] = term
            continue
        j = _parse_judgment(body, out, start)
        out.stanzas.append(Stanza(label or f"line {start}", j, dict(options), start))
    return out


def _stanzas(text: str):
    lines = text.splitlines()
    cur, directives, start = [], [], None
    for n, raw in enumerate(lines + [""], 1):
        stripped = raw.strip()
        if stripped.startswith("--"):
            m = re.match(r"--\s*(options|include):(.*)", stripped)
            if m:
                directives.append((m.group(1), m.group(2)))
            continue
        if not stripped:
            if cur or directives:
                yield start or n, "\n".join(cur), directives
            cur, directives, start = [], [], None
            continue
        if start is None:
            start = n
        cur.append(raw)


def _parse_def(body: str, jf: JudgmentFile, line: int):
    p = Parser(_offset(body, line), jf.registry)
    p.expect("def")
    name = p.ident()
    p.expect("=")
    t = p.term()
    p.done()
    t = expand_defs(t, jf.defs)
    free = sx.free_vars(t)
    if free:
        raise ParseError(f"definition {name} has free variables {sorted(free)}", line, 1)
    return name, t


def expand_defs(t: sx.Term, defs: dict) -> sx.Term:
    for name, d in defs.items():
        if name in sx.free_vars(t):
            t = sx.subst_closed(t, name, d)
    return t


def _offset(body: str, line: int) -> str:
    return "\n" * (line - 1) + body


def _parse_judgment(body: str, jf: JudgmentFile, line: int):
    from .checker import Judgment

    p = Parser(_offset(body, line), jf.registry)
    ctx = []
    if not p.at("|-", "⊢"):
        while True:
            x = p.ident()
            p.expect(":")
            ctx.append((x, p.ref_type()))
            if p.at(","):
                p.advance()
                continue
            break
    if not p.at("|-", "⊢"):
        p.error("expected |- after the context")
    p.advance()
    p.scope = [x for x, _ in ctx]
    term = p.term()
    p.expect(":")
    goal = p.ref_type()
    p.done()
    names = [x for x, _ in ctx]
    if len(set(names)) != len(names):
        raise ParseError("duplicate variable in context", line, 1)
    clash = set(names) & set(jf.defs)
    if clash:
        raise ParseError(f"context variable {sorted(clash)[0]} hides a definition", line, 1)
    return Judgment(tuple(ctx), expand_defs(term, jf.defs), goal)

import random

import pytest
from hypothesis import given, settings, strategies as st

from dtlf import syntax as sx
from dtlf.generate import TERM_TYPES, random_term
from dtlf.parser import parse_term, parse_type
from dtlf.syntax import (BOOL, Arrow, Base, Fix, Prod, Proj, PureTypeError, Rec, TVar, Unfold, Var,
                         infer_pure, show_term, show_type, stream_of, subst_type, type_eq)

MAP = r"\f. fix g. \x. (f (hd x)) :: (g (tl x))"
FILTER = r"\p. fix g. \x. if p (hd x) then (hd x) :: (g (tl x)) else g (tl x)"


def test_parse_type_examples():
    assert parse_type("Stream Bool") == Rec("X", Prod(Base("Bool"), TVar("X")))
    assert parse_type("Bool") == Base("Bool")
    assert parse_type("Rou Bool") == Rec("X", Arrow(Arrow(TVar("X"), BOOL), BOOL))


def test_parse_term_examples():
    assert parse_term("fix x. x") == Fix("x", Var("x"))
    assert parse_term(r"\s. hd s").body == Proj(1, Unfold(Var("s")))


def test_filter_source_shape():
    t = parse_term(FILTER)
    assert isinstance(t, sx.Lam) and isinstance(t.body, sx.Fix)
    inner = t.body.body
    assert isinstance(inner, sx.Lam) and isinstance(inner.body, sx.Case)
    assert [c for c, _ in inner.body.branches] == ["tt", "ff"]


def test_infer_examples():
    assert infer_pure([], sx.Ascribe(parse_term("fix x. x"), stream_of(BOOL))) == stream_of(BOOL)
    s_bool = stream_of(BOOL)
    got = infer_pure([], parse_term(MAP), expected=Arrow(Arrow(BOOL, BOOL), Arrow(s_bool, s_bool)))
    assert type_eq(got, Arrow(Arrow(BOOL, BOOL), Arrow(s_bool, s_bool)))
    with pytest.raises(PureTypeError):
        infer_pure([], parse_term("unfold (fold tt)"))


def test_map_infers_without_annotation():
    got = infer_pure([], parse_term(r"(\f. fix g. \x. (f (hd x)) :: (g (tl x))) (\y. if y then ff else tt)"))
    assert show_type(got) == "Stream Bool -> Stream Bool"


def test_filter_type():
    expected = parse_type("(Bool -> Bool) -> Stream Bool -> Stream Bool")
    assert infer_pure([], parse_term(FILTER), expected=expected) == expected
    applied = parse_term(r"(\p. fix g. \x. if p (hd x) then (hd x) :: (g (tl x)) else g (tl x)) (\y. y)")
    assert show_type(infer_pure([], applied)) == "Stream Bool -> Stream Bool"


def test_element_type_must_be_determined():
    # there is no polymorphism: an unused element type needs an annotation
    with pytest.raises(PureTypeError, match="ascription"):
        infer_pure([], parse_term(FILTER))


def test_cons_infers_stream():
    assert show_type(infer_pure([], parse_term("tt :: fix s. ff :: s"))) == "Stream Bool"


def test_subst_type_examples():
    tau = BOOL
    assert subst_type(Prod(tau, TVar("X")), "X", stream_of(tau)) == Prod(tau, stream_of(tau))
    assert subst_type(TVar("X"), "X", BOOL) == BOOL
    assert subst_type(Rec("X", TVar("X")), "Y", BOOL) == Rec("X", TVar("X"))


def test_subst_type_avoids_capture():
    body = Rec("Y", Prod(TVar("X"), TVar("Y")))
    out = subst_type(body, "X", TVar("Y"))
    assert isinstance(out, Rec) and out.binder != "Y"
    assert TVar("Y") in (out.body.left,)


def test_type_eq_alpha():
    assert type_eq(Rec("X", Prod(BOOL, TVar("X"))), Rec("Z", Prod(BOOL, TVar("Z"))))
    assert not type_eq(Rec("X", Prod(BOOL, TVar("X"))), Rec("X", Prod(TVar("X"), BOOL)))


@pytest.mark.parametrize("text, rule", [
    ("tt tt", "app"),
    ("pi1 tt", "pi1"),
    ("if tt then tt else (tt, tt)", "case"),
    ("y", "var"),
])
def test_type_errors(text, rule):
    with pytest.raises(PureTypeError) as exc:
        infer_pure([], parse_term(text) if text != "y" else Var("y"))
    assert exc.value.rule == rule


def test_case_must_be_total():
    reg = sx.parse_bases("base Color = red green blue")
    t = sx.Case(sx.Const("Color", "red"), (("red", sx.Const("Bool", "tt")), ("green", sx.Const("Bool", "ff"))))
    with pytest.raises(PureTypeError):
        infer_pure([], t, reg)


def test_registry():
    reg = sx.parse_bases("base Color = red green blue\n-- comment\nbase Unit = u")
    assert reg.carrier("Color") == ("red", "green", "blue")
    assert reg.base_of("u") == "Unit"
    with pytest.raises(sx.RegistryError):
        sx.parse_bases("base Bool = yes no")
    with pytest.raises(sx.RegistryError):
        sx.parse_bases("base Two = tt x")


def test_show_type_sugar():
    assert show_type(parse_type("Tree (Stream Bool)")) == "Tree (Stream Bool)"
    assert show_type(parse_type("Rou (Stream Bool)")) == "Rou (Stream Bool)"
    assert show_type(parse_type("(Bool -> Bool) * Bool")) == "(Bool -> Bool) * Bool"


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(TERM_TYPES))
def test_print_parse_round_trip(seed, tau):
    rng = random.Random(seed)
    ctx = {"v0": rng.choice(TERM_TYPES), "v1": rng.choice(TERM_TYPES)}
    t = random_term(rng, tau, ctx, size=rng.randint(1, 12))
    assert parse_term(show_term(t)) == t


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(TERM_TYPES))
def test_generated_terms_have_their_type(seed, tau):
    rng = random.Random(seed)
    ctx = {"v0": rng.choice(TERM_TYPES)}
    t = random_term(rng, tau, ctx, size=8)
    assert type_eq(infer_pure(ctx, t, expected=tau), tau)
    assert sx.term_size(t) <= 8

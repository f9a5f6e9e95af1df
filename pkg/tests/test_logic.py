import random

import pytest
from hypothesis import given, settings, strategies as st

from dtlf import findom as fd
from dtlf import logic as lg
from dtlf.evalsem import oracle_entail
from dtlf.findom import BOT, Atom
from dtlf.generate import SWEEP_TYPES, conjunctive_formulas, random_normal
from dtlf.logic import (FALSE, TOP, AndF, ArrowF, AtomF, FormulaClass, Mod, OrF, Schema, Up,
                        char_formula, classify, compile_formula, consistent_f, entail_conj, entail_fin,
                        push_modalities, to_cnf, to_dnf, truncate)
from dtlf.parser import parse_formula as F
from dtlf.syntax import BOOL, Arrow, Prod, stream_of

TT, FF = AtomF("tt"), AtomF("ff")
BB = Arrow(BOOL, BOOL)
SB = stream_of(BOOL)


def equiv(a, b):
    return entail_fin(a, b) and entail_fin(b, a)


# ------------------------------------------------------------- examples


def test_classify_examples():
    assert classify(F(r"<tt> /\ <ff>")) is FormulaClass.CONJUNCTIVE
    assert classify(F(r"<tt> \/ <ff>")) is FormulaClass.OPEN
    normal = AndF((OrF((TT, FF)), OrF((TT,))))
    assert classify(normal) is FormulaClass.NORMAL
    assert classify(F(r"(<tt> \/ <ff>) -o <tt>")) is FormulaClass.GENERAL


def test_compile_examples():
    assert compile_formula(F(r"<tt> /\ <ff>")) is lg.Empty
    assert compile_formula(F("[hd] <tt>")) == Up(fd.Fold(fd.Pair(Atom("tt"), BOT)))
    assert compile_formula(F(r"(<tt> -o <ff>) /\ (true -o <tt>)")) is lg.Empty


def test_compile_rejects_disjunction():
    with pytest.raises(lg.NotConjunctive):
        compile_formula(F(r"<tt> \/ <ff>"))


def test_char_formula_examples():
    assert char_formula(Atom("tt")) == TT
    assert char_formula(BOT) == TOP
    f = char_formula(fd.mk_pair(Atom("tt"), BOT))
    assert f == AndF((Mod("pi1", TT), Mod("pi2", TOP)))
    assert compile_formula(f) == Up(fd.mk_pair(Atom("tt"), BOT))


def test_consistent_f_examples():
    assert consistent_f(TT)
    assert consistent_f(TOP)
    assert consistent_f(F(r"(<tt> -o <ff>) /\ (<ff> -o <tt>)"))


def test_entail_conj_examples():
    assert entail_conj(F(r"<tt> /\ <ff>"), FALSE)
    for phi in conjunctive_formulas(BB, 4):
        assert entail_conj(phi, TOP)
    assert entail_conj(F("true -o <tt>"), F("<ff> -o <tt>"))


def test_entail_fin_examples():
    assert entail_fin(F(r"<tt> \/ <ff>"), F(r"<ff> \/ <tt>"))
    assert not entail_fin(TOP, F(r"<tt> \/ <ff>"))
    assert entail_fin(F(r"true -o (<tt> \/ <ff>)"), F(r"(true -o <tt>) \/ (true -o <ff>)"))


def test_push_modalities_examples():
    got = push_modalities(F(r"[fold] ([pi1] <tt> \/ [pi1] <ff>)"))
    assert got == OrF((F("[fold] [pi1] <tt>"), F("[fold] [pi1] <ff>")))
    assert lg.mk_and([Mod("pi1", TOP)]) == TOP
    assert push_modalities(Mod("fold", FALSE)) == FALSE


def test_to_dnf_examples():
    assert equiv(to_dnf(AndF((OrF((TT, FF)), TOP))), OrF((TT, FF)))
    a, b, c, d = (F(s) for s in ("[pi1] <tt>", "[pi1] <ff>", "[pi2] <tt>", "[pi2] <ff>"))
    dnf = to_dnf(AndF((OrF((a, b)), OrF((c, d)))))
    assert isinstance(dnf, OrF) and len(dnf.items) == 4
    assert to_dnf(AndF((FALSE, TT))) == FALSE


def test_truncate_examples():
    box = Schema("Box", lg.hd(TT))
    assert truncate(box, 2) == AndF((lg.hd(TT), lg.nxt(lg.hd(TT))))
    assert truncate(Schema("Diam", TT), 0) == FALSE
    assert truncate(Schema("AllBox", lg.lbl(TT)), 1) == lg.lbl(TT)


def test_truncate_fixpoints_match_schemas():
    box = F("[] [hd] <tt>")
    nu = F(r"nu Y. [hd] <tt> /\ X Y")
    diam = F("<> [hd] <tt>")
    mu = F(r"mu Y. [hd] <tt> \/ X Y")
    for k in range(4):
        assert equiv(truncate(box, k), truncate(nu, k))
        assert equiv(truncate(diam, k), truncate(mu, k))


def test_polar_truncation_swaps_under_implication():
    phi = F("([] [hd] <tt>) -o <> [hd] <tt>")
    got = lg.truncate_polar(phi, 1, 2, positive=True)
    assert isinstance(got, ArrowF)
    assert got.ante == truncate(F("[] [hd] <tt>"), 2)
    assert got.cons == truncate(F("<> [hd] <tt>"), 2)


def test_check_formula_errors():
    with pytest.raises(lg.FormulaError):
        lg.check_formula(BOOL, F("[pi1] <tt>"))
    with pytest.raises(lg.FormulaError):
        lg.check_formula(SB, F("<tt>"))
    with pytest.raises(lg.FormulaError):
        lg.check_formula(SB, F("mu Y. X (Y -o <tt>)"))
    lg.check_formula(SB, F("[] [hd] <tt>"))


def test_normal_form_limit():
    big = AndF(tuple(OrF((F(f"[pi1] <tt>"), F(f"[pi2] <ff>"))) for _ in range(3)))
    with pytest.raises(lg.NormalFormTooLarge):
        lg.to_dnf(AndF(tuple(OrF((AtomF(f"a{i}"), AtomF(f"b{i}"))) for i in range(14))), limit=64)
    assert lg.is_normal(big)


# ------------------------------------------------------------ properties


@pytest.mark.parametrize("name", list(SWEEP_TYPES))
def test_rule_based_consistency_agrees(name):
    for phi in conjunctive_formulas(SWEEP_TYPES[name], 5):
        assert lg.consistent_by_rules(phi) == consistent_f(phi), lg.show_formula(phi)


@pytest.mark.parametrize("name", list(SWEEP_TYPES))
def test_compile_witness_rank(name):
    tau = SWEEP_TYPES[name]
    for phi in conjunctive_formulas(tau, 5):
        c = compile_formula(phi)
        if isinstance(c, Up):
            assert c.elt in fd.enumerate_elements(tau, lg.formula_size(phi))


normal_formulas = st.tuples(st.integers(0, 10**6), st.sampled_from(list(SWEEP_TYPES)))


def _normals(seed, name, n=3):
    rng = random.Random(seed)
    tau = SWEEP_TYPES[name]
    return tau, [random_normal(rng, tau) for _ in range(n)]


@settings(max_examples=150, deadline=None)
@given(normal_formulas)
def test_entail_fin_is_a_preorder(args):
    tau, (a, b, c) = _normals(*args)
    assert entail_fin(a, a)
    if entail_fin(a, b) and entail_fin(b, c):
        assert entail_fin(a, c)


@settings(max_examples=150, deadline=None)
@given(normal_formulas)
def test_normal_forms_are_equivalent(args):
    tau, (a, b, c) = _normals(*args)
    phi = AndF((OrF((a, b)), c))
    for g in (push_modalities(phi), to_dnf(phi), to_cnf(phi)):
        assert equiv(g, phi)


@settings(max_examples=150, deadline=None)
@given(normal_formulas)
def test_entail_fin_agrees_with_oracle(args):
    tau, (a, b, _) = _normals(*args)
    for psi, phi in ((a, b), (b, a), (AndF((a, b)), OrF((a, b)))):
        assert entail_fin(psi, phi) == oracle_entail(tau, psi, phi, 2)


@pytest.mark.parametrize("text", ["[hd] <tt>", r"[hd] <tt> \/ X [hd] <ff>", "[hd] true"])
def test_box_truncation_is_monotone(text):
    body = F(text)
    for k in range(5):
        assert entail_fin(truncate(Schema("Box", body), k + 1), truncate(Schema("Box", body), k))
        assert entail_fin(truncate(Schema("Diam", body), k), truncate(Schema("Diam", body), k + 1))


def test_dnf_elements_are_minimal():
    elts = lg.dnf_elements(F(r"<tt> \/ (<tt> /\ <tt>) \/ <ff>"))
    assert sorted(map(fd.sexpr, elts)) == ["(atom ff)", "(atom tt)"]
    assert lg.dnf_elements(FALSE) == []
    assert lg.cnf_elements(TOP) == []

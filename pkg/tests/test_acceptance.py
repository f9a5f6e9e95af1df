"""Acceptance criteria. Each test prints one PASS/FAIL line and records it
for the summary printed at the end of the run."""

import itertools
import random
import time

from dtlf import evalsem as ev
from dtlf import findom as fd
from dtlf.checker import (CheckOptions, Derivable, check, check_normal, eta_expand,
                          normalize_goal, normalize_hyp)
from dtlf.findom import BOT, Fold, InconsistentSteps, Pair
from dtlf.generate import (SWEEP_TYPES, conjunctive_formulas, oracle_sweep, oracle_violation,
                           random_judgment, random_term, true_finite_judgment)
from dtlf.logic import (FALSE, AndF, Mod, OrF, Up, char_formula, compile_formula, consistent_f,
                        entail_conj, entail_fin, push_modalities, dnf_elements)
from dtlf.parser import parse_formula as F
from dtlf.syntax import BOOL, Arrow, Prod, unroll

import conftest
from conftest import load_corpus

SIZE = 6
RANK = 2


def report(n: int, title: str, ok: bool, detail: str):
    line = f"criterion {n} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    return ok


# ------------------------------------------------ 1. decision vs oracle


def test_1_conjunctive_decisions_agree_with_oracle():
    start = time.time()
    parts, ok = [], True
    for name, tau in SWEEP_TYPES.items():
        res = oracle_sweep(tau, SIZE, RANK)
        parts.append(f"{name}: {res.agree}/{res.total}")
        ok = ok and res.ok and res.total > 0
    detail = "; ".join(parts) + f"; {time.time() - start:.1f}s"
    assert report(1, "consistency and entailment agree with the oracle", ok, detail)


# ---------------------------------------------------------- 2. dichotomy


def test_2_consistent_or_entails_false():
    checked = exceptions = 0
    for tau in SWEEP_TYPES.values():
        for phi in conjunctive_formulas(tau, SIZE):
            checked += 1
            if consistent_f(phi) == entail_conj(phi, FALSE):
                exceptions += 1
    ok = exceptions == 0
    assert report(2, "exactly one of consistent / entails false", ok,
                  f"{checked} formulas, {exceptions} exceptions")


# -------------------------------------------------------- 3. round trips


def test_3_characteristic_formula_round_trips():
    elements = failures = formulas = 0
    for tau in SWEEP_TYPES.values():
        for d in fd.enumerate_elements(tau, RANK):
            elements += 1
            if compile_formula(char_formula(d)) != Up(fd.canonicalize(d)):
                failures += 1
        for phi in conjunctive_formulas(tau, SIZE):
            c = compile_formula(phi)
            if isinstance(c, Up):
                formulas += 1
                if ev.extension(tau, char_formula(c.elt), RANK) != ev.extension(tau, phi, RANK):
                    failures += 1
    ok = failures == 0
    assert report(3, "compile/char_formula round trips", ok,
                  f"{elements} elements, {formulas} formulas, {failures} failures")


# ---------------------------------------------------- 4. derivable rules


ATOMS = [F(s) for s in ("<tt>", "<ff>", "true", "false", r"<tt> \/ <ff>", r"<tt> /\ <ff>")]
PAIR_ATOMS = [F(s) for s in ("[pi1] <tt>", "[pi2] <ff>", r"[pi1] <ff> \/ [pi2] <tt>",
                             "true", r"[pi1] <tt> /\ [pi2] <tt>", "false")]
STREAM_ATOMS = [F(s) for s in ("[pi1] <tt>", "[pi1] <ff>", "[pi2] [fold] [pi1] <tt>",
                               r"[pi1] <tt> \/ [pi2] true", "true", "false")]


def _both(a, b):
    return entail_fin(a, b) and entail_fin(b, a)


def _rule_instances():
    """(rule name, holds) for each instance of each derivable rule."""
    rng = random.Random(8)
    out = []
    # Conjunction and disjunction are monotone: from premises psi_i |- phi_i.
    entailed = [(a, b) for a, b in itertools.product(ATOMS, ATOMS) if entail_fin(a, b)]
    for _ in range(6):
        prem = rng.sample(entailed, 2)
        out.append(("and-monotone", entail_fin(AndF(tuple(p for p, _ in prem)),
                                               AndF(tuple(c for _, c in prem)))))
        out.append(("or-monotone", entail_fin(OrF(tuple(p for p, _ in prem)),
                                              OrF(tuple(c for _, c in prem)))))
    # Modalities commute with conjunction and disjunction, both ways.
    cases = [("pi1", ATOMS), ("pi2", ATOMS), ("fold", STREAM_ATOMS)]
    for op, pool in cases:
        for _ in range(5):
            items = tuple(rng.sample(pool, rng.randint(0, 3)))
            out.append((f"[{op}] over and", _both(Mod(op, AndF(items)),
                                                   AndF(tuple(Mod(op, p) for p in items)))))
            out.append((f"[{op}] over or", _both(OrF(tuple(Mod(op, p) for p in items)),
                                                  Mod(op, OrF(items)))))
    # Distributivity and its dual on 3-by-2 instances.
    for _ in range(6):
        rows = [rng.sample(PAIR_ATOMS, 2) for _ in range(3)]
        cnf = AndF(tuple(OrF(tuple(r)) for r in rows))
        dnf = OrF(tuple(AndF(tuple(row[f[i]] for i, row in enumerate(rows)))
                        for f in itertools.product(range(2), repeat=3)))
        out.append(("distribute", _both(cnf, dnf)))
        dual_l = AndF(tuple(OrF(tuple(row[f[i]] for i, row in enumerate(rows)))
                            for f in itertools.product(range(2), repeat=3)))
        dual_r = OrF(tuple(AndF(tuple(r)) for r in rows))
        out.append(("distribute dual", _both(dual_l, dual_r)))
    return out


def test_4_derivable_rules_hold():
    results = _rule_instances()
    counts: dict = {}
    for name, holds in results:
        good, total = counts.get(name, (0, 0))
        counts[name] = (good + holds, total + 1)
    ok = all(g == t and t >= 5 for g, t in counts.values())
    detail = ", ".join(f"{n} {g}/{t}" for n, (g, t) in counts.items())
    assert report(4, "derivable sequents hold under entailment", ok, detail)


# -------------------------------------------------------- 5. the corpus


CORPUS_FILES = ("table2_map.dtlf", "table2_filter.dtlf", "table2_diag.dtlf", "table2_bft.dtlf")


def _grown(ty, d, reg):
    """Elements strictly above `d`, each filling one bottom leaf of `d`."""
    match d:
        case fd.Bot():
            yield from (e for e in fd.enumerate_elements(ty, 1, reg) if e != BOT)
        case Pair(a, b):
            yield from (Pair(x, b) for x in _grown(ty.left, a, reg))
            yield from (Pair(a, y) for y in _grown(ty.right, b, reg))
        case Fold(x):
            yield from (Fold(y) for y in _grown(unroll(ty), x, reg))


def _instantiations(part, opts, reg, want=3):
    choices = []
    for x, t in part.ctx:
        ty, phi = normalize_hyp(t, opts)
        base = dnf_elements(push_modalities(phi))
        extra = [e for d in base for e in itertools.islice(_grown(ty, d, reg), want)]
        choices.append([(x, d) for d in base + extra])
    return list(itertools.islice(itertools.product(*choices), want))


def _member_holds(part, combo, opts):
    _, goal = normalize_goal(part.goal, opts)
    env = {x: ev.Approx(d) for x, d in combo}
    return ev.deep(lambda: ev.member(ev.evaluate(part.term, env, opts.fuel), goal)) is ev.Membership.HOLDS


def test_5_corpus_derivable_and_cross_validated():
    start = time.time()
    verdicts = holds = tried = expected = 0
    failures = []
    for name in CORPUS_FILES:
        jf = load_corpus(name)
        for st in jf.stanzas:
            for k in (1, 2):
                expected += 1
                opts = CheckOptions(k=k, n_fix=4, fuel=16)
                v = check_normal(st.judgment, opts, jf.registry)
                if not isinstance(v, Derivable):
                    failures.append(f"{st.label} k={k}")
                    continue
                verdicts += 1
                for part in eta_expand(st.judgment, opts):
                    combos = _instantiations(part, opts, jf.registry)
                    if part.ctx and len(combos) < 3:
                        failures.append(f"{st.label} k={k}: only {len(combos)} instantiations")
                    for combo in combos:
                        tried += 1
                        if _member_holds(part, combo, opts):
                            holds += 1
                        else:
                            failures.append(f"{st.label} k={k}: member not Holds")
    ok = not failures and verdicts == expected and holds == tried
    detail = (f"{verdicts}/{expected} Derivable, member Holds {holds}/{tried}, "
              f"{time.time() - start:.1f}s" + ("; " + "; ".join(failures) if failures else ""))
    assert report(5, "corpus derivable and confirmed by evaluation", ok, detail)


# ------------------------------------------------------ 6. soundness


def test_6_soundness_against_oracle():
    rng = random.Random(2024)
    derivable = violations = 0
    bad = []
    for _ in range(1000):
        j = random_judgment(rng)
        if isinstance(check(j.as_judgment()), Derivable):
            derivable += 1
            if oracle_violation(j) is not None:
                violations += 1
                bad.append(j.show())
    ok = violations == 0
    detail = f"1000 judgments, {derivable} Derivable, {violations} violations"
    if bad:
        detail += "; first: " + bad[0]
    assert report(6, "Derivable judgments are never refuted", ok, detail)


# ------------------------------------------------------ 7. completeness


def test_7_true_finite_judgments_are_derivable():
    rng = random.Random(77)
    derivable = 0
    missed = []
    oracle_failures = 0
    for _ in range(200):
        j = true_finite_judgment(rng, size=8, n_fix=4)
        if oracle_violation(j) is not None:
            oracle_failures += 1
            continue
        if isinstance(check(j.as_judgment(), CheckOptions(n_fix=4)), Derivable):
            derivable += 1
        else:
            missed.append(j.show())
    ok = derivable == 200
    detail = f"{derivable}/200 Derivable, {oracle_failures} rejected by the oracle"
    if missed:
        detail += "; first miss: " + missed[0]
    assert report(7, "true finite judgments are Derivable", ok, detail)


# ----------------------------------------------------- 8. order theory


def _order_failures():
    failures = []
    for name, tau in SWEEP_TYPES.items():
        es = fd.enumerate_elements(tau, RANK)
        for a in es:
            if not fd.leq(a, a):
                failures.append(f"{name}: reflexivity")
        for a, b in itertools.product(es, es):
            if fd.leq(a, b) and fd.leq(b, a) and a != b:
                failures.append(f"{name}: antisymmetry")
            s = fd.sup(a, b)
            uppers = [c for c in es if fd.leq(a, c) and fd.leq(b, c)]
            if s is None:
                if uppers:
                    failures.append(f"{name}: missing sup")
            elif not (fd.leq(a, s) and fd.leq(b, s) and all(fd.leq(s, c) for c in uppers)):
                failures.append(f"{name}: sup not least")
        for a, b, c in itertools.product(es, es, es):
            if fd.leq(a, b) and fd.leq(b, c) and not fd.leq(a, c):
                failures.append(f"{name}: transitivity")
    fs = fd.enumerate_elements(Arrow(BOOL, BOOL), RANK)
    xs = fd.enumerate_elements(BOOL, RANK)
    for g, h in itertools.product(fs, fs):
        if fd.leq(g, h):
            for x, y in itertools.product(xs, xs):
                if fd.leq(x, y) and not fd.leq(fd.apply(g, x), fd.apply(h, y)):
                    failures.append("apply monotonicity")
    dom = fd.enumerate_elements(BOOL, 1)
    cod = fd.enumerate_elements(Prod(BOOL, BOOL), 1)
    steps = [(a, r) for a in dom for r in cod]
    for n in (1, 2, 3):
        for family in itertools.combinations(steps, n):
            try:
                fd.mk_fun(family)
                accepted = True
            except InconsistentSteps:
                accepted = False
            if accepted != fd.steps_consistent_bruteforce(family):
                failures.append("mk_fun vs brute force")
    rng = random.Random(3)
    for _ in range(120):
        tau = rng.choice(list(SWEEP_TYPES.values()))
        term = random_term(rng, tau, {}, 8)

        def lowered(f, term=term, tau=tau):
            with ev.step_budget():
                return ev.lower(ev.evaluate(term, {}, f), tau, f, RANK)

        prev = BOT
        for f in range(7):
            cur = ev.deep(lowered, f)
            if not fd.leq(prev, cur):
                failures.append("fuel monotonicity")
            prev = cur
    return failures


def test_8_order_theory():
    start = time.time()
    failures = _order_failures()
    ok = not failures
    detail = f"{len(failures)} failures, {time.time() - start:.1f}s"
    if failures:
        detail += "; " + ", ".join(sorted(set(failures)))
    assert report(8, "order laws, apply and fuel monotonicity", ok, detail)

import json

import pytest
from hypothesis import given, settings, strategies as st

from dtlf.cli import corpus_dir, main

from conftest import CORPUS


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("text, verdict, code", [
    (r"Bool ; <tt> /\ <ff> ; false", "ENTAILS", 0),
    ("Bool ; true ; <tt>", "NOT-ENTAILS", 1),
    (r"Bool->Bool ; true -o (<tt> \/ <ff>) ; (true -o <tt>) \/ (true -o <ff>)", "ENTAILS", 0),
])
def test_entail(capsys, text, verdict, code):
    c, out, _ = run(capsys, "entail", "-e", text)
    assert c == code and out.splitlines()[0] == verdict


@pytest.mark.parametrize("text, first, code", [
    ("Bool ; <tt>", "CONSISTENT d=(atom tt)", 0),
    ("Bool ; false", "INCONSISTENT", 1),
    (r"Bool->Bool ; (<tt> -o <ff>) /\ (true -o <tt>)", "INCONSISTENT", 1),
])
def test_consistent(capsys, text, first, code):
    c, out, _ = run(capsys, "consistent", "-e", text)
    assert c == code and out.strip() == first


def test_consistent_rejects_disjunction(capsys):
    c, _, err = run(capsys, "consistent", "-e", r"Bool ; <tt> \/ <ff>")
    assert c == 2 and "conjunctive" in err


def test_compile(capsys):
    c, out, _ = run(capsys, "compile", "-e", r"Bool ; <tt> \/ <ff>")
    assert c == 0 and "(atom tt)" in out and "(atom ff)" in out


def test_check_filter_and_bft(capsys):
    for name in ("table2_filter.dtlf", "table2_bft.dtlf"):
        c, out, _ = run(capsys, "check", "--k", "2", str(CORPUS / name))
        assert c == 0, out
        assert "Derivable" in out and "Unknown" not in out


def test_check_false_judgment(capsys):
    c, out, _ = run(capsys, "check", "-e", "|- tt : {Bool | <ff>}")
    assert c == 1
    assert "Unknown" in out and "oracle: unsound" in out


def test_check_trace(capsys):
    c, out, _ = run(capsys, "check", "--trace", "-e", r"|- \x. x : {Bool -> Bool | <tt> -o <tt>}")
    assert c == 0 and "lam" in out and "var" in out


def test_check_type_error(capsys):
    c, out, _ = run(capsys, "check", "-e", "|- tt tt : {Bool | <tt>}")
    assert c == 2 and "IllTyped" in out


def test_oracle_sweep(capsys):
    c, out, _ = run(capsys, "oracle", "sweep", "--type", "Bool", "--size", "6", "--rank", "1")
    assert c == 0
    agree = next(l for l in out.splitlines() if l.startswith("agree:")).split()[1]
    n, total = agree.split("/")
    assert n == total and int(total) > 0
    c, out, _ = run(capsys, "oracle", "sweep", "--type", "Bool -> Bool", "--size", "5", "--rank", "2")
    assert c == 0 and "disagree" not in out


def test_oracle_query_matches_entail(capsys):
    for text in (r"Bool ; <tt> /\ <ff> ; false", "Bool ; true ; <tt>",
                 r"Bool->Bool ; true -o (<tt> \/ <ff>) ; (true -o <tt>) \/ (true -o <ff>)"):
        c1, out1, _ = run(capsys, "entail", "-e", text)
        c2, out2, _ = run(capsys, "oracle", "query", "-e", text)
        assert c1 == c2 and out1.splitlines()[0] == out2.strip()


def test_oracle_rank_cap(capsys):
    c, _, err = run(capsys, "oracle", "sweep", "--rank", "9")
    assert c == 2 and "capped" in err


@pytest.mark.parametrize("text, fuel, expected", [
    ("fix x. x : Bool", "4", "(bot)"),
    ("hd (tt :: fix s. ff :: s)", "4", "(atom tt)"),
])
def test_eval(capsys, text, fuel, expected):
    c, out, _ = run(capsys, "eval", "--fuel", fuel, "-e", text)
    assert c == 0 and out.strip() == expected


def test_eval_stream_iterate(capsys):
    c, out, _ = run(capsys, "eval", "--fuel", "3", "--rank", "3", "-e", "fix s. tt :: s : Stream Bool")
    assert c == 0
    assert out.count("(fold (pair (atom tt)") == 3


def test_eval_member(capsys):
    c, out, _ = run(capsys, "eval", "--member", "<tt>", "-e", "hd (tt :: fix s. ff :: s)")
    assert c == 0 and "member: holds" in out.lower()


def test_json_is_deterministic(capsys):
    outs = []
    for _ in range(2):
        c, out, _ = run(capsys, "check", "--json", str(CORPUS / "basics.dtlf"))
        assert c == 0
        outs.append(out)
    assert outs[0] == outs[1]
    data = json.loads(outs[0])
    assert all(r["verdict"] == "Derivable" for r in data["results"])


def test_corpus_command(capsys):
    c, out, _ = run(capsys, "corpus", "--list")
    names = out.split()
    assert c == 0 and "table2_map.dtlf" in names and "prelude.dtlf" not in names
    c, out, _ = run(capsys, "corpus")
    assert c == 0 and "Unknown" not in out
    c, _, err = run(capsys, "corpus", "nosuch")
    assert c == 2


def test_bases_file(capsys, tmp_path):
    bases = tmp_path / "bases.txt"
    bases.write_text("base Light = on off\n")
    c, out, _ = run(capsys, "consistent", "--bases", str(bases), "-e", "Light ; <on>")
    assert c == 0 and out.strip() == "CONSISTENT d=(atom on)"
    c, _, _ = run(capsys, "consistent", "--bases", str(tmp_path / "missing"), "-e", "Bool ; <tt>")
    assert c == 2


def test_missing_input_file(capsys, tmp_path):
    c, _, err = run(capsys, "check", str(tmp_path / "none.dtlf"))
    assert c == 2 and err.startswith("error:")


@settings(max_examples=150, deadline=None)
@given(cmd=st.sampled_from(["entail", "consistent", "compile", "check", "eval"]),
       text=st.text(alphabet="Bool;<>tf()\\/-o|{}:x. ", max_size=30))
def test_malformed_input_never_crashes(cmd, text):
    code = main([cmd, "-e", text])
    assert code in (0, 1, 2)


def test_corpus_is_packaged():
    assert (corpus_dir() / "prelude.dtlf").is_file()

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from strategies import models, positive_formulas, seeds, surface_trees
from topomu.decision import enumerate_frames
from topomu.frames import FrameClass, Model
from topomu.randgen import random_formula, random_frame, random_valuation
from topomu.semantics import ModelBundle, evaluate
from topomu.syntax import (And, Dia, FormulaSyntaxError, Mu, Neg, NotPositive, Nu, Or,
                           PREFIX_NORMAL_FORMS, StarDia, TangleD, Top, Var, alpha_equal,
                           alpha_normalize, closure_set, decompose, free_vars, materialize,
                           normal_prefix, normalize, parse, star_dia, subformulas, substitute,
                           to_text)

p, q, x, y = Var("p"), Var("q"), Var("x"), Var("y")


# ---------------------------------------------------------------- parser

def test_parse_examples():
    assert parse("nu X. <>(X & p)") == Nu("X", Dia(And(Var("X"), p)))
    assert parse("<*>p") == StarDia(p)
    assert parse("mu X. p | <>X") == Mu("X", Or(p, Dia(Var("X"))))


def test_precedence_and_associativity():
    assert parse("p -> q -> p") == parse("p -> (q -> p)")
    assert parse("p <-> q <-> p") == parse("(p <-> q) <-> p")
    assert parse("~p & q | p") == parse("((~p) & q) | p")
    assert parse("p & nu X. X | p") == And(p, Nu("X", Or(Var("X"), p)))


def test_tangle_and_constants():
    assert parse("tangle_d{}") == TangleD(())
    assert parse("tangle_d{p, ~p}").args == (p, Neg(p))
    assert parse("T & F") == And(Top(), parse("F"))


@pytest.mark.parametrize("text, offset", [("p &", 3), ("(p", 2), ("p q", 2), ("<>", 2), ("p $ q", 2)])
def test_syntax_error_offsets(text, offset):
    with pytest.raises(FormulaSyntaxError) as err:
        parse(text)
    assert err.value.offset == offset
    assert err.value.expected


def test_syntax_error_offset_counts_bytes():
    with pytest.raises(FormulaSyntaxError) as err:
        parse("p & (q | ä")
    assert err.value.offset == len("p & (q | ".encode())


@given(surface_trees)
def test_print_parse_round_trip(f):
    assert parse(to_text(f)) == f


# ---------------------------------------------------------------- normalization

def test_mu_expansion():
    got = normalize(parse("mu X. p | <>X"))
    want = Neg(Nu("X", Neg(Neg(And(Neg(p), Neg(Dia(Neg(Var("X")))))))))
    assert got == want


def test_star_dia_expansion_is_or():
    assert normalize(StarDia(p)) == normalize(Or(p, Dia(p)))


def test_negative_binder_rejected():
    with pytest.raises(NotPositive) as err:
        normalize(Nu("X", Neg(Var("X"))))
    assert err.value.variable == "X"


def test_mu_with_negative_body_rejected():
    with pytest.raises(NotPositive):
        normalize(parse("mu X. ~X"))


def test_empty_tangle_is_top_semantically():
    rng = random.Random(3)
    for _ in range(50):
        n = rng.randint(1, 5)
        m = Model(random_frame(rng, FrameClass.ALL, n), {})
        assert evaluate(m, TangleD(())) == frozenset(range(n))


@given(surface_trees)
def test_normalize_idempotent(f):
    try:
        g = normalize(f)
    except NotPositive:
        return
    assert normalize(g) == g


def test_alpha_normal_form_separates_binders():
    f = normalize(parse("(nu X. <>X) & (nu X. <>(X & X_1)) & X_1"))
    binders = [g.var for g in subformulas(f) if isinstance(g, Nu)]
    assert len(binders) == len(set(binders))
    assert not set(binders) & free_vars(f)


# ---------------------------------------------------------------- free variables, subformulas

def test_free_vars_examples():
    assert free_vars(Top()) == frozenset()
    assert free_vars(Nu("x", And(x, p))) == {"p"}
    assert free_vars(And(x, Dia(y))) == {"x", "y"}


def test_subformula_examples():
    assert subformulas(p) == {p}
    assert subformulas(Dia(And(p, q))) == {Dia(And(p, q)), And(p, q), p, q}
    assert subformulas(Nu("x", Dia(x))) == {Nu("x", Dia(x)), Dia(x), x}


# ---------------------------------------------------------------- substitution

def test_substitute_examples():
    assert substitute(Dia(x), {"x": p}) == Dia(p)
    assert substitute(Nu("x", Dia(x)), {"x": p}) == Nu("x", Dia(x))


def test_substitute_avoids_capture():
    f = Nu("y", Dia(And(x, y)))
    g = substitute(f, {"x": Dia(y)})
    assert "y" in free_vars(g)
    assert isinstance(g, Nu) and g.var != "y"
    rng = random.Random(11)
    for _ in range(100):
        n = rng.randint(1, 5)
        m = Model(random_frame(rng, FrameClass.WK4, n), random_valuation(rng, n, "p"))
        env = {"y": frozenset(w for w in range(n) if rng.random() < 0.5)}
        assert evaluate(m, g, env) == evaluate(m, f, {**env, "x": evaluate(m, Dia(y), env)})


@given(positive_formulas(max_size=7), positive_formulas(max_size=4), seeds)
def test_substitution_free_vars(f, theta, seed):
    f = normalize(And(f, Var("x")))
    theta = normalize(theta)
    got = free_vars(substitute(f, {"x": theta}))
    assert got == (free_vars(f) - {"x"}) | free_vars(theta)


@given(positive_formulas(max_size=7), positive_formulas(max_size=4), models(max_worlds=6), seeds)
def test_substitution_lemma(f, theta, m, seed):
    f = normalize(And(f, Dia(Var("x"))))
    theta = normalize(theta)
    rng = random.Random(seed)
    env = {"x": frozenset(w for w in range(m.size) if rng.random() < 0.5)}
    lhs = evaluate(m, substitute(f, {"x": theta}), env)
    rhs = evaluate(m, f, {**env, "x": evaluate(m, theta, env)})
    assert lhs == rhs


# ---------------------------------------------------------------- Sigma closure sets

def test_prefix_rewriting():
    assert normal_prefix("NN") == ""
    assert normal_prefix("CC") == "C"
    assert normal_prefix("CNCNCNCN") == "CNCN"
    assert normal_prefix("NCNCNCNC") == "NCNC"
    assert len(PREFIX_NORMAL_FORMS) == 14


def test_prefix_normal_forms_are_pairwise_distinct_on_s4_frames():
    # distinct modalities must differ somewhere on a reflexive transitive frame
    signatures = {pref: [] for pref in PREFIX_NORMAL_FORMS}
    for n in range(1, 5):
        frames = enumerate_frames(FrameClass.S4, n)
        bundle = ModelBundle.product(frames, ["p"], "all")
        for pref in PREFIX_NORMAL_FORMS:
            signatures[pref].append(tuple(bundle.evaluate(materialize(pref, p))))
    seen = {tuple(v) for v in signatures.values()}
    assert len(seen) == 14


def test_rewrite_rules_are_s4_valid():
    # every rewrite equates modalities on all small reflexive transitive frames
    for n in range(1, 5):
        bundle = ModelBundle.product(enumerate_frames(FrameClass.S4, n), ["p"], "all")
        for lhs, rhs in (("NN", ""), ("CC", "C"), ("CNCNCNC", "CNC"), ("CNCNCNCN", "CNCN")):
            a = bundle.evaluate(materialize(lhs, p))
            b = bundle.evaluate(materialize(rhs, p))
            assert a == b, (lhs, rhs, n)


def test_closure_set_of_atom():
    sigma = closure_set(p)
    for text in ("T", "p", "~p", "<*>p", "<*>~p", "~<*>p", "~<*>~p"):
        assert parse(text) in sigma
    assert len(sigma) == 28


@given(positive_formulas(max_size=6))
def test_closure_set_is_closed(f):
    seed = normalize(f)
    sigma = closure_set(seed)
    assert seed in sigma and Top() in sigma
    for s in subformulas(seed):
        assert sigma.contains_pair(*decompose(s))
    for prefix, base in sigma.pairs():
        assert sigma.contains_pair(normal_prefix("N" + prefix), base)
        assert sigma.contains_pair(normal_prefix("C" + prefix), base)
        assert sigma.contains_pair(*decompose(materialize(prefix, base)))
    # at most 14 prefixes per base
    assert len(sigma) <= 14 * len(sigma.bases())


def test_decompose_recognizes_star_up_to_alpha():
    base = normalize(parse("nu X. <>X"))
    f = alpha_normalize(star_dia(base))
    assert decompose(f) == ("C", f.child.left.child) or decompose(f)[0] == "C"
    assert alpha_equal(decompose(f)[1], base)

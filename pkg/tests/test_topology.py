import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from strategies import seeds
from topomu.decision import enumerate_frames
from topomu.frames import Frame, FrameClass, check_frame_class, mask_of, members
from topomu.randgen import random_frame
from topomu.topology import (OMEGA, FiniteSpace, SymbolicSet, WrongClass, build_lazy_space,
                             lazy_verify, separation_check, space_from_json, space_to_json,
                             translate)

SIERPINSKI = FiniteSpace.from_opens(2, [[], [1], [0, 1]])


def random_space(rng, n):
    return translate(random_frame(rng, FrameClass.S4, n), "frame-to-closure")


def frames_isomorphic(a, b):
    if a.size != b.size:
        return False
    for perm in itertools.permutations(range(a.size)):
        if all(a.has_edge(x, y) == b.has_edge(perm[x], perm[y])
               for x in range(a.size) for y in range(a.size)):
            return True
    return False


# ---------------------------------------------------------------- translations

def test_sierpinski_translations():
    f = translate(SIERPINSKI, "closure-to-frame")
    assert sorted(f.edges()) == [(0, 0), (0, 1), (1, 1)]
    d = translate(SIERPINSKI, "derivative-to-frame")
    assert d.edges() == [(0, 1)]


def test_discrete_space_has_no_derivative_edges():
    discrete = FiniteSpace.from_opens(2, [[], [0], [1], [0, 1]])
    assert translate(discrete, "derivative-to-frame").edges() == []


def test_from_opens_rejects_non_topology():
    with pytest.raises(WrongClass):
        FiniteSpace.from_opens(3, [[], [0], [1], [0, 1, 2]])


@pytest.mark.parametrize("direction, frame", [
    ("frame-to-closure", Frame.from_edges(2, [(0, 1)])),
    ("frame-to-derivative", Frame.from_edges(1, [(0, 0)])),
])
def test_translation_rejects_wrong_class(direction, frame):
    with pytest.raises(WrongClass) as err:
        translate(frame, direction)
    assert err.value.witness is not None


@given(seeds, st.integers(1, 6))
def test_closure_round_trip(seed, n):
    f = random_frame(random.Random(seed), FrameClass.S4, n)
    assert translate(translate(f, "frame-to-closure"), "closure-to-frame") == f
    s = translate(f, "frame-to-closure")
    assert translate(translate(s, "closure-to-frame"), "frame-to-closure") == s


@given(seeds, st.integers(1, 6))
def test_derivative_round_trip(seed, n):
    f = random_frame(random.Random(seed), FrameClass.IRR_WK4, n)
    assert translate(translate(f, "frame-to-derivative"), "derivative-to-frame") == f
    s = translate(f, "frame-to-derivative")
    assert translate(translate(s, "derivative-to-frame"), "frame-to-derivative") == s


def test_round_trip_up_to_isomorphism_on_all_small_frames():
    for n in range(1, 5):
        for f in enumerate_frames(FrameClass.IRR_WK4, n):
            back = translate(translate(f, "frame-to-derivative"), "derivative-to-frame")
            assert frames_isomorphic(f, back)


# ---------------------------------------------------------------- operators

def test_operator_examples():
    assert SIERPINSKI.closure(set()) == frozenset()
    assert SIERPINSKI.derivative({1}) == {0}
    assert SIERPINSKI.closure({1}) == {0, 1}
    assert SIERPINSKI.interior({0}) == frozenset()


@given(seeds, st.integers(1, 6))
def test_kuratowski_laws(seed, n):
    rng = random.Random(seed)
    s = random_space(rng, n)
    c = s.closure_mask
    assert c(0) == 0
    for _ in range(20):
        x, y = rng.getrandbits(n), rng.getrandbits(n)
        assert x & ~c(x) == 0
        assert c(c(x)) == c(x)
        assert c(x | y) == c(x) | c(y)
        assert c(x) == x | s.derivative_mask(x)
        assert s.interior_mask(x) == s.full & ~c(s.full & ~x)


@given(seeds, st.integers(1, 6))
def test_opens_are_up_sets_of_specialization(seed, n):
    s = random_space(random.Random(seed), n)
    for u in s.opens():
        closed = s.full & ~mask_of(u)
        assert s.closure_mask(closed) == closed


@given(seeds, st.integers(1, 7))
def test_cantor_derivative_is_relational_derivative(seed, n):
    s = random_space(random.Random(seed), n)
    f = translate(s, "derivative-to-frame")
    assert check_frame_class(f, "IRR_WK4")
    for x in range(1 << n):
        assert s.derivative_mask(x) == f.derivative(x)


@pytest.mark.parametrize("seed", range(6))
def test_finite_normality_identity(seed):
    rng = random.Random(seed)
    s = random_space(rng, rng.randint(7, 10))
    assert s.check_normality() is None


# ---------------------------------------------------------------- separation

def test_separation_examples():
    discrete = FiniteSpace.from_opens(2, [[], [0], [1], [0, 1]])
    assert separation_check(discrete, "T0") and separation_check(discrete, "TD")
    indiscrete = FiniteSpace.from_opens(2, [[], [0, 1]])
    v = separation_check(indiscrete, "T0")
    assert not v and v.witness == (0, 1)
    assert separation_check(SIERPINSKI, "T0") and separation_check(SIERPINSKI, "TD")


def _td_by_definition(s):
    """Every point has an open neighborhood meeting its closure only in itself."""
    opens = [mask_of(u) for u in s.opens()]
    for x in range(s.size):
        outside = 0
        for u in opens:
            if not u >> x & 1:
                outside |= u
        cx = s.full & ~outside
        if not any(u >> x & 1 and u & cx == 1 << x for u in opens):
            return False
    return True


def _antisymmetric(s):
    return all(not (s.spec[x] >> y & 1 and s.spec[y] >> x & 1)
               for x in range(s.size) for y in range(s.size) if x != y)


def test_td_characterization_exhaustive():
    for n in range(1, 6):
        for f in enumerate_frames(FrameClass.S4, n):
            s = translate(f, "frame-to-closure")
            by_def = _td_by_definition(s)
            assert bool(separation_check(s, "TD")) == by_def
            no_self_limit = all(not s.derivative_mask(1 << x) >> x & 1 for x in range(n))
            assert by_def == (_antisymmetric(s) and no_self_limit)


# ---------------------------------------------------------------- files

def test_space_json_round_trip():
    data = space_to_json(SIERPINSKI, ["a", "b"])
    s, names = space_from_json(data)
    assert s == SIERPINSKI and names == ("a", "b")


def test_space_json_rejects_non_transitive():
    data = {"worlds": ["a", "b", "c"], "preorder": [["a", "b"], ["b", "c"]]}
    with pytest.raises(WrongClass):
        space_from_json(data)


# ---------------------------------------------------------------- the level-indexed space

def test_lazy_single_reflexive_point():
    ls = build_lazy_space(Frame.from_edges(1, [(0, 0)]))
    assert ls.is_point((0, 5)) and not ls.is_point((0, OMEGA))
    assert ls.is_open(ls.basic(0, 3))[0]
    finite_levels = SymbolicSet(lambda q: q[1] < 5, 5)
    assert not ls.is_open(finite_levels)[0]


def test_lazy_single_irreflexive_point():
    ls = build_lazy_space(Frame.from_edges(1, []))
    assert ls.is_point((0, OMEGA)) and not ls.is_point((0, 0))
    assert list(ls.points(10)) == [(0, OMEGA)]
    assert ls.is_open(SymbolicSet(lambda q: True, 0))[0]


def test_lazy_two_chain():
    ls = build_lazy_space(Frame.from_edges(2, [(0, 1)]))
    only_b = SymbolicSet(lambda q: q[0] == 1, 0)
    only_a = SymbolicSet(lambda q: q[0] == 0, 0)
    assert ls.is_open(only_b)[0]
    ok, where = ls.is_open(only_a)
    assert not ok and where == (0, OMEGA)


def test_lazy_space_needs_weak_transitivity():
    from topomu.frames import NotWeaklyTransitive
    with pytest.raises(NotWeaklyTransitive):
        build_lazy_space(Frame.from_edges(3, [(0, 1), (1, 2)]))


def test_lazy_verify_reflexive_point():
    rep = lazy_verify(build_lazy_space(Frame.from_edges(1, [(0, 0)])), 100)
    assert rep.ok and rep.checks["forth"] == 100


def test_lazy_verify_loopless_cluster_skips_t0():
    rep = lazy_verify(build_lazy_space(Frame.from_edges(2, [(0, 1), (1, 0)])), 100)
    assert rep.ok and "t0" in rep.skipped and rep.checks["t0"] == 0
    assert rep.checks["back"] > 0


def test_lazy_verify_transitive_chain_td():
    rep = lazy_verify(build_lazy_space(Frame.from_edges(2, [(0, 1)])), 100)
    assert rep.ok and rep.checks["td"] == 100 and not rep.skipped


def test_non_strict_td_witness_fails_on_reflexive_world():
    # F built from every v with v -> w also catches the point one level up
    ls = build_lazy_space(Frame.from_edges(1, [(0, 0)]))
    pt = (0, 3)
    u = ls.basic(0, 0)
    f = SymbolicSet(lambda q: q == pt or ls.frame.has_edge(q[0], 0), 3)
    meet = [q for q in ls.points(6) if q in u and q in f]
    assert meet != [pt]


@pytest.mark.parametrize("seed", range(10))
def test_lazy_verify_random_frames(seed):
    rng = random.Random(seed)
    cls = rng.choice([FrameClass.WK4, FrameClass.WK4T0, FrameClass.K4])
    f = random_frame(rng, cls, rng.randint(1, 5))
    rep = lazy_verify(build_lazy_space(f), 50, seed=seed)
    assert rep.ok, rep.violations


@given(seeds)
def test_symbolic_opens_satisfy_open_conditions(seed):
    rng = random.Random(seed)
    ls = build_lazy_space(random_frame(rng, FrameClass.WK4, rng.randint(1, 5)))
    w = rng.randrange(ls.frame.size)
    holes = {(v, rng.randint(0, 9)) for v in members(ls.cluster_mask[w]) if ls.reflexive[v]}
    s = ls.basic(w, rng.randint(0, 9), holes)
    for q in ls.points(s.horizon + 1):
        if q in s:
            assert ls.open_at(s, q)

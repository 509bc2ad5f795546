"""Random frames, models and formulas for fuzzing and property tests."""

from __future__ import annotations

import random

from .frames import Frame, FrameClass, Model
from .syntax import And, Box, Dia, Formula, Neg, Nu, Or, Top, Var

__all__ = ["random_frame", "random_model", "random_valuation", "random_formula", "random_theta"]


def _random_preorder(rng: random.Random, n: int):
    """Random preorder as (cluster id per world, reachability between clusters)."""
    k = rng.randint(1, n)
    cluster = [rng.randrange(k) for _ in range(n)]
    used = sorted(set(cluster))
    relabel = {c: i for i, c in enumerate(used)}
    cluster = [relabel[c] for c in cluster]
    k = len(used)
    density = rng.random()
    reach = [1 << i for i in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            if rng.random() < density:
                reach[i] |= 1 << j
    # transitive closure, clusters listed in a topological order
    for i in reversed(range(k)):
        for j in range(i + 1, k):
            if reach[i] >> j & 1:
                reach[i] |= reach[j]
    return cluster, reach


def random_frame(rng: random.Random, cls: FrameClass | str, n: int) -> Frame:
    cls = FrameClass(cls)
    if cls is FrameClass.ALL:
        return Frame(n, tuple(rng.getrandbits(n) if n else 0 for _ in range(n)))
    cluster, reach = _random_preorder(rng, n)
    succ = [0] * n
    for w in range(n):
        for v in range(n):
            if reach[cluster[w]] >> cluster[v] & 1:
                succ[w] |= 1 << v
    members = {}
    for w, c in enumerate(cluster):
        members.setdefault(c, []).append(w)
    drop = set()
    if cls is FrameClass.WK4:
        drop = {w for w in range(n) if rng.random() < 0.5}
    elif cls is FrameClass.IRR_WK4:
        drop = set(range(n))
    elif cls is FrameClass.WK4T0:
        for ws in members.values():
            if rng.random() < 0.5:
                drop.add(rng.choice(ws))
    elif cls is FrameClass.K4:
        drop = {ws[0] for ws in members.values() if len(ws) == 1 and rng.random() < 0.5}
    for w in drop:
        succ[w] &= ~(1 << w)
    return Frame(n, tuple(succ))


def random_valuation(rng: random.Random, n: int, atoms) -> dict:
    return {a: frozenset(w for w in range(n) if rng.random() < 0.5) for a in atoms}


def random_model(rng: random.Random, cls, max_worlds: int, atoms=("p", "q"),
                 min_worlds: int = 1) -> Model:
    n = rng.randint(min_worlds, max_worlds)
    return Model(random_frame(rng, cls, n), random_valuation(rng, n, atoms))


def random_formula(rng: random.Random, size: int, atoms=("p", "q"), *, fixpoints=True,
                   sugar=True, free=()) -> Formula:
    """Random formula with at most ``size`` nodes; binders are always positive.

    ``free`` lists extra variable names that may occur (positively or not).
    """
    counter = [0]
    return _gen(rng, size, list(atoms) + list(free), [], 0, counter, fixpoints, sugar)


def _gen(rng, size, atoms, bound, polarity, counter, fixpoints, sugar):
    usable = [x for x, pol in bound if pol == polarity]
    if size <= 1:
        pool = [Var(a) for a in atoms] + [Var(x) for x in usable] + [Top()]
        return rng.choice(pool)
    choices = ["neg", "dia"] + (["and"] if size >= 3 else [])
    if sugar:
        choices += ["box"] + (["or"] if size >= 3 else [])
    if fixpoints and size >= 3:
        choices.append("nu")
    kind = rng.choice(choices)
    if kind == "neg":
        return Neg(_gen(rng, size - 1, atoms, bound, 1 - polarity, counter, fixpoints, sugar))
    if kind == "dia":
        return Dia(_gen(rng, size - 1, atoms, bound, polarity, counter, fixpoints, sugar))
    if kind == "box":
        # box is ~<>~ : the child keeps its polarity
        return Box(_gen(rng, size - 1, atoms, bound, polarity, counter, fixpoints, sugar))
    if kind == "nu":
        counter[0] += 1
        x = f"X{counter[0]}"
        body = _gen(rng, size - 1, atoms, bound + [(x, polarity)], polarity, counter,
                    fixpoints, sugar)
        return Nu(x, body)
    left = rng.randint(1, size - 2)
    a = _gen(rng, left, atoms, bound, polarity, counter, fixpoints, sugar)
    b = _gen(rng, size - 1 - left, atoms, bound, polarity, counter, fixpoints, sugar)
    return And(a, b) if kind == "and" else Or(a, b)


def random_theta(rng: random.Random, size: int, var: str = "X", atoms=("p", "q"),
                 fixpoints=True) -> Formula:
    """Random formula positive in ``var`` (which it usually mentions)."""
    counter = [0]
    for _ in range(20):
        f = _gen(rng, size, list(atoms), [(var, 0)], 0, counter, fixpoints, True)
        if _mentions(f, var):
            return f
    return And(Dia(Var(var)), f)


def _mentions(f, var):
    from .syntax import free_vars
    return var in free_vars(f)

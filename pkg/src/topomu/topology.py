"""Finite topological spaces and the level-indexed space over a wK4 frame.

A finite space is stored through its specialization preorder: ``R(x, y)``
iff ``x`` lies in the closure of ``{y}``. Opens are then exactly the
R-up-sets and closure is the R-down-set.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .frames import Frame, FrameClass, Verdict, analyze, check_frame_class, mask_of, members

__all__ = [
    "FiniteSpace", "WrongClass", "translate", "separation_check",
    "OMEGA", "LazyFrameSpace", "SymbolicSet", "SymbolicOpen", "LazyReport",
    "build_lazy_space", "lazy_verify", "space_from_json", "space_to_json", "DIRECTIONS",
]


class WrongClass(ValueError):
    def __init__(self, message, witness=None):
        self.witness = witness
        super().__init__(f"{message}: {witness}" if witness is not None else message)


@dataclass(frozen=True)
class FiniteSpace:
    size: int
    spec: tuple   # spec[x]: mask of y with x in c{y}; reflexive and transitive

    def __post_init__(self):
        for x in range(self.size):
            if not self.spec[x] >> x & 1:
                raise WrongClass("specialization relation not reflexive", (x,))
            for y in members(self.spec[x]):
                if self.spec[y] & ~self.spec[x]:
                    z = min(members(self.spec[y] & ~self.spec[x]))
                    raise WrongClass("specialization relation not transitive", (x, y, z))

    @property
    def full(self) -> int:
        return (1 << self.size) - 1

    @classmethod
    def from_preorder(cls, size: int, pairs: Iterable[tuple[int, int]]) -> "FiniteSpace":
        spec = [1 << x for x in range(size)]
        for x, y in pairs:
            spec[x] |= 1 << y
        return cls(size, tuple(spec))

    @classmethod
    def from_opens(cls, size: int, opens: Iterable[Iterable[int]]) -> "FiniteSpace":
        fam = {mask_of(u) for u in opens}
        full = (1 << size) - 1
        if 0 not in fam or full not in fam:
            raise WrongClass("opens must include the empty set and the whole space")
        for a in fam:
            for b in fam:
                if a | b not in fam or a & b not in fam:
                    raise WrongClass("opens not closed under union and intersection",
                                     (sorted(members(a)), sorted(members(b))))
        # c{y} is the complement of the union of the opens missing y
        spec = [0] * size
        for y in range(size):
            outside = 0
            for u in fam:
                if not u >> y & 1:
                    outside |= u
            for x in members(full & ~outside):
                spec[x] |= 1 << y
        return cls(size, tuple(spec))

    def opens(self) -> list[frozenset]:
        out = []
        for u in range(1 << self.size):
            if all(self.spec[x] & ~u == 0 for x in members(u)):
                out.append(members(u))
        return out

    # operators on bitmasks
    def closure_mask(self, mask: int) -> int:
        return mask_of(x for x in range(self.size) if self.spec[x] & mask)

    def interior_mask(self, mask: int) -> int:
        return self.full & ~self.closure_mask(self.full & ~mask)

    def derivative_mask(self, mask: int) -> int:
        return mask_of(y for y in range(self.size)
                       if self.closure_mask(mask & ~(1 << y)) >> y & 1)

    def check_normality(self) -> tuple | None:
        """First set whose derivative is not the union of its points'
        derivatives, or None. Exhaustive, so only sensible for small spaces."""
        single = [self.derivative_mask(1 << x) for x in range(self.size)]
        for mask in range(1 << self.size):
            union = 0
            for x in members(mask):
                union |= single[x]
            if self.derivative_mask(mask) != union:
                return tuple(members(mask))
        return None

    def closure(self, subset) -> frozenset:
        return members(self.closure_mask(mask_of(subset)))

    def interior(self, subset) -> frozenset:
        return members(self.interior_mask(mask_of(subset)))

    def derivative(self, subset) -> frozenset:
        """Cantor derivative: the limit points of ``subset``."""
        return members(self.derivative_mask(mask_of(subset)))


def separation_check(space: FiniteSpace, axiom: str) -> Verdict:
    axiom = axiom.upper()
    if axiom == "T0":
        for x in range(space.size):
            for y in range(x + 1, space.size):
                if space.spec[x] >> y & 1 and space.spec[y] >> x & 1:
                    return Verdict(False, (x, y), "points share all neighborhoods")
        return Verdict(True)
    if axiom == "TD":
        # the least open around x is spec[x]; x is isolated in c{x} iff that
        # open meets c{x} only in x
        for x in range(space.size):
            closure_x = mask_of(z for z in range(space.size) if space.spec[z] >> x & 1)
            if space.spec[x] & closure_x != 1 << x:
                return Verdict(False, (x,), "point not isolated in its closure")
        return Verdict(True)
    raise ValueError(f"unknown separation axiom {axiom!r}")


DIRECTIONS = ("closure-to-frame", "frame-to-closure", "derivative-to-frame", "frame-to-derivative")


def translate(obj, direction: str):
    """Move between finite spaces and the frames presenting their operators."""
    if direction == "closure-to-frame":
        _need(obj, FiniteSpace)
        return Frame(obj.size, obj.spec)
    if direction == "derivative-to-frame":
        _need(obj, FiniteSpace)
        return Frame(obj.size, tuple(obj.spec[x] & ~(1 << x) for x in range(obj.size)))
    if direction == "frame-to-closure":
        _need(obj, Frame)
        v = check_frame_class(obj, FrameClass.S4)
        if not v:
            raise WrongClass(f"closure spaces need an S4 frame ({v.reason})", v.witness)
        return FiniteSpace(obj.size, obj.succ)
    if direction == "frame-to-derivative":
        _need(obj, Frame)
        v = check_frame_class(obj, FrameClass.IRR_WK4)
        if not v:
            raise WrongClass(f"derivative spaces need an irreflexive wK4 frame ({v.reason})",
                             v.witness)
        return FiniteSpace(obj.size, tuple(obj.succ[x] | 1 << x for x in range(obj.size)))
    raise ValueError(f"unknown direction {direction!r}")


def _need(obj, typ):
    if not isinstance(obj, typ):
        raise TypeError(f"expected {typ.__name__}, got {type(obj).__name__}")


# ---------------------------------------------------------------- level-indexed space


class _Omega:
    __slots__ = ()

    def __repr__(self):
        return "ω"

    def __reduce__(self):
        return "OMEGA"


OMEGA = _Omega()


def _geq(level, n):
    return level is OMEGA or level >= n


@dataclass(frozen=True)
class SymbolicSet:
    """A point set given by a membership test.

    ``horizon`` bounds the finite levels at which membership can change, so
    for each world all levels above ``horizon`` behave alike.
    """

    contains: Callable
    horizon: int
    label: str = ""

    def __contains__(self, point):
        return self.contains(point)

    def complement(self) -> "SymbolicSet":
        inner = self.contains
        return SymbolicSet(lambda p: not inner(p), self.horizon, f"X - ({self.label})")


class LazyFrameSpace:
    """Points ``(w, n)`` for reflexive ``w`` and ``n >= 0``, ``(w, OMEGA)`` for
    irreflexive ``w``. Opens are described by :class:`SymbolicOpen`."""

    def __init__(self, frame: Frame):
        self.frame = frame
        info = analyze(frame)
        self.cluster = info.clusters.block_of
        self.reflexive = tuple(frame.reflexive(w) for w in frame.worlds)
        # strict[w]: successors of w outside its cluster
        self.strict = tuple(
            mask_of(v for v in members(frame.succ[w]) if self.cluster[v] != self.cluster[w])
            for w in frame.worlds)
        # mates[w]: v with w -> v -> w
        self.mates = tuple(
            mask_of(v for v in members(frame.succ[w]) if frame.has_edge(v, w))
            for w in frame.worlds)
        self.cluster_mask = tuple(
            mask_of(v for v in frame.worlds if self.cluster[v] == self.cluster[w])
            for w in frame.worlds)

    def is_point(self, point) -> bool:
        w, lv = point
        if not 0 <= w < self.frame.size:
            return False
        if self.reflexive[w]:
            return isinstance(lv, int) and lv >= 0
        return lv is OMEGA

    def project(self, point) -> int:
        return point[0]

    def levels(self, w: int, horizon: int):
        """Representative levels of world ``w`` up to ``horizon`` (inclusive)."""
        return range(horizon + 1) if self.reflexive[w] else (OMEGA,)

    def points(self, horizon: int):
        for w in self.frame.worlds:
            for lv in self.levels(w, horizon):
                yield (w, lv)

    def basic(self, w: int, n: int = 0, exceptions=()) -> "SymbolicOpen":
        return SymbolicOpen(self, ((w, n),), frozenset(exceptions))

    def is_open(self, s) -> tuple[bool, tuple | None]:
        """Exact openness test; returns (ok, offending member or None)."""
        h = s.horizon + 1
        # both open-set conditions depend only on the world of a member, so
        # tabulate which worlds are fully present and which reach level h
        present = {w: [(w, lv) in s for lv in self.levels(w, h)] for w in self.frame.worlds}
        full = mask_of(w for w, row in present.items() if all(row))
        top = mask_of(w for w, row in present.items() if row[-1])
        for w, row in present.items():
            fine = self.mates[w] & ~top == 0 and self.strict[w] & ~full == 0
            if not fine and any(row):
                return False, (w, list(self.levels(w, h))[row.index(True)])
        return True, None

    def open_at(self, s, point) -> bool:
        return self._open_at(s, point, s.horizon + 1)

    def _open_at(self, s, point, h):
        w = point[0]
        # (1) cofinitely many levels of every v with v <-> w
        for v in members(self.mates[w]):
            if not all((v, lv) in s for lv in (self.levels(v, h)[-1:] if self.reflexive[v]
                                                else (OMEGA,))):
                return False
        # (2) every copy of every strict successor
        for v in members(self.strict[w]):
            if not all((v, lv) in s for lv in self.levels(v, h)):
                return False
        return True


class SymbolicOpen(SymbolicSet):
    """Union of basic regions ``B(w, n)`` minus finitely many points.

    ``B(w, n)`` holds the points of ``w``'s cluster at level ``>= n`` and every
    point over a strict successor of ``w``.
    """

    def __init__(self, space: LazyFrameSpace, regions, exceptions=frozenset()):
        regions = tuple(regions)
        exceptions = frozenset(exceptions)
        finite = [n for _, n in regions] + [lv for _, lv in exceptions if lv is not OMEGA]
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "regions", regions)
        object.__setattr__(self, "exceptions", exceptions)
        object.__setattr__(self, "horizon", max(finite, default=0))
        object.__setattr__(self, "label", " | ".join(f"B({w},{n})" for w, n in regions))
        object.__setattr__(self, "contains", self._contains)

    def _contains(self, point):
        if point in self.exceptions:
            return False
        v, lv = point
        sp = self.space
        for w, n in self.regions:
            if sp.strict[w] >> v & 1:
                return True
            if sp.cluster[v] == sp.cluster[w] and _geq(lv, n):
                return True
        return False


def build_lazy_space(frame: Frame) -> LazyFrameSpace:
    return LazyFrameSpace(frame)


@dataclass
class LazyReport:
    samples: int
    checks: dict = field(default_factory=dict)       # check name -> cases examined
    violations: list = field(default_factory=list)
    skipped: dict = field(default_factory=dict)      # check name -> reason

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self):
        return {
            "samples": self.samples,
            "checks": dict(self.checks),
            "skipped": dict(self.skipped),
            "violations": [{k: (repr(v) if k == "point" or k == "other" else v)
                            for k, v in d.items()} for d in self.violations],
        }


def _sample_point(ls, rng, cap):
    w = rng.randrange(ls.frame.size)
    return (w, rng.randint(0, cap) if ls.reflexive[w] else OMEGA)


def _find_in(ls, s, v, horizon, avoid):
    for lv in ls.levels(v, horizon):
        if (v, lv) != avoid and (v, lv) in s:
            return True
    return False


def lazy_verify(ls: LazyFrameSpace, sample_count: int = 200, seed: int = 0,
                level_cap: int = 64) -> LazyReport:
    """Sampled checks that projection is a d-morphism and, when the base
    frame allows, that the space separates points (T0) or isolates each
    point in its closure (TD)."""
    rng = random.Random(seed)
    fr = ls.frame
    rep = LazyReport(sample_count, {"forth": 0, "back": 0, "t0": 0, "td": 0})
    t0 = bool(check_frame_class(fr, FrameClass.WK4T0))
    k4 = bool(check_frame_class(fr, FrameClass.K4))
    if not t0:
        rep.skipped["t0"] = "base frame is not weakly reflexive"
    if not k4:
        rep.skipped["td"] = "base frame is not transitive"

    def bad(check, point, **info):
        rep.violations.append({"check": check, "point": point, **info})

    for _ in range(sample_count):
        pt = _sample_point(ls, rng, level_cap)
        w, alpha = pt
        up = fr.succ[w]

        # forth: O punctured at the point lies over successors of w
        o = ls.basic(w, 0)
        rep.checks["forth"] += 1
        if pt not in o or not ls.open_at(o, pt):
            bad("forth", pt, reason="witness open does not contain the point")
        for q in ls.points(max(o.horizon, level_cap) + 1):
            if q != pt and q in o and not up >> q[0] & 1:
                bad("forth", pt, other=q, reason="punctured open leaves successors")
                break

        # back: every sampled neighborhood, minus the point, covers w's successors
        for u in _sample_neighborhoods(ls, pt, rng, level_cap):
            rep.checks["back"] += 1
            ok_open, where = ls.is_open(u)
            if not ok_open or pt not in u:
                bad("back", pt, region=u.label, reason=f"sampled set not a neighborhood ({where})")
                continue
            h = u.horizon + 2
            for v in members(up):
                if not _find_in(ls, u, v, h, pt):
                    bad("back", pt, region=u.label, world=v, reason="successor not covered")
                    break

        if t0:
            other = _sample_point(ls, rng, level_cap)
            if other != pt:
                rep.checks["t0"] += 1
                sep = _t0_separator(ls, pt, other)
                if sep is None:
                    bad("t0", pt, other=other, reason="no separating open")
                else:
                    u, inside = sep
                    ok_open, _ = ls.is_open(u)
                    outside = other if inside == pt else pt
                    if not ok_open or inside not in u or outside in u:
                        bad("t0", pt, other=other, region=u.label, reason="separator fails")

        if k4:
            rep.checks["td"] += 1
            u, f = _td_witness(ls, pt)
            ok_u, _ = ls.is_open(u)
            ok_f, _ = ls.is_open(f.complement())
            h = max(u.horizon, f.horizon) + 2
            meet = [q for q in ls.points(h) if q in u and q in f]
            if not ok_u or not ok_f or meet != [pt]:
                bad("td", pt, reason=f"open={ok_u} closed={ok_f} meet={meet!r}")
    return rep


def _sample_neighborhoods(ls, pt, rng, cap):
    w, alpha = pt
    lim = cap if alpha is OMEGA else alpha
    out = [ls.basic(w, 0), ls.basic(w, rng.randint(0, lim))]
    # a region from a world below w in the cluster order
    below = [u for u in ls.frame.worlds if ls.strict[u] >> w & 1 or ls.cluster[u] == ls.cluster[w]]
    u = rng.choice(below)
    out.append(ls.basic(u, 0 if ls.cluster[u] != ls.cluster[w] else rng.randint(0, lim)))
    # punch finitely many finite-level holes into w's cluster, away from pt
    holes = set()
    for v in members(ls.cluster_mask[w]):
        if ls.reflexive[v]:
            for _ in range(2):
                q = (v, rng.randint(0, cap))
                if q != pt:
                    holes.add(q)
    out.append(ls.basic(w, 0, holes))
    return out


def _t0_separator(ls, a, b):
    """An open containing exactly one of ``a``, ``b``, and the one it contains."""
    fr = ls.frame
    (w, alpha), (v, beta) = a, b

    def reach(x, y):
        return x == y or fr.has_edge(x, y)

    if not reach(w, v):
        return ls.basic(w, 0), a
    if not reach(v, w):
        return ls.basic(v, 0), b
    if beta is not OMEGA:
        return ls.basic(w, 0, {b}), a
    if alpha is not OMEGA:
        return ls.basic(v, 0, {a}), b
    return None


def _td_witness(ls, pt):
    """Open U and closed F with U & F = {pt} (transitive base frames).

    F is the point plus every point over a world strictly below its own. With
    the non-strict reading (all v -> w), a reflexive w would put
    ``(w, alpha + 1)`` in both sets.
    """
    w, alpha = pt
    u = ls.basic(w, 0)
    below = mask_of(v for v in ls.frame.worlds if ls.strict[v] >> w & 1)
    horizon = 0 if alpha is OMEGA else alpha
    f = SymbolicSet(lambda q: q == pt or bool(below >> q[0] & 1), horizon, f"F({w})")
    return u, f


# ---------------------------------------------------------------- JSON

NORMALITY_CHECK_LIMIT = 10


def space_from_json(data: dict) -> tuple[FiniteSpace, tuple]:
    """Space file: the model format with ``preorder`` in place of ``edges``.

    Returns the space and its point names. Reflexive pairs may be omitted.
    """
    from .frames import model_from_json

    m = model_from_json(data, edge_key="preorder")
    space = FiniteSpace.from_preorder(m.size, m.frame.edges())
    if space.size <= NORMALITY_CHECK_LIMIT:
        bad = space.check_normality()
        assert bad is None, f"derivative not additive at {bad}"
    return space, m.names


def space_to_json(space: FiniteSpace, names=None) -> dict:
    names = names or [f"x{i}" for i in range(space.size)]
    pairs = [[names[x], names[y]] for x in range(space.size) for y in members(space.spec[x])]
    return {"worlds": list(names), "preorder": pairs, "val": {}}

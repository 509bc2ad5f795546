"""Finite Kripke frames and models, frame classes, depth and unfolding.

Worlds are the integers ``0..n-1``; world sets are ``int`` bitmasks. The JSON
file format names worlds, and the loader assigns indices in file order.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from .hugeint import HugeInt

__all__ = [
    "Frame", "Model", "FrameClass", "Partition", "Verdict", "Analysis", "Unfolding",
    "FmpBound", "ModelFormatError", "NotWeaklyTransitive",
    "mask_of", "members", "check_frame_class", "analyze", "irreflexive_unfold",
    "is_cofinal", "fmp_bound", "load_model", "model_from_json", "model_to_json",
    "generated_subframe",
]


class ModelFormatError(ValueError):
    pass


class NotWeaklyTransitive(ValueError):
    def __init__(self, witness):
        self.witness = tuple(witness)
        super().__init__(f"frame is not weakly transitive: {self.witness}")


def mask_of(worlds: Iterable[int]) -> int:
    m = 0
    for w in worlds:
        m |= 1 << w
    return m


def members(mask: int) -> frozenset:
    out = []
    w = 0
    while mask:
        if mask & 1:
            out.append(w)
        mask >>= 1
        w += 1
    return frozenset(out)


@dataclass(frozen=True)
class Frame:
    size: int
    succ: tuple  # succ[w] is the successor bitmask of w

    def __post_init__(self):
        if self.size < 0 or len(self.succ) != self.size:
            raise ValueError("successor table does not match world count")
        full = (1 << self.size) - 1
        for m in self.succ:
            if m & ~full:
                raise ValueError("successor index out of range")

    @classmethod
    def from_edges(cls, size: int, edges: Iterable[tuple[int, int]]) -> "Frame":
        succ = [0] * size
        for a, b in edges:
            if not (0 <= a < size and 0 <= b < size):
                raise ValueError(f"edge ({a}, {b}) out of range")
            succ[a] |= 1 << b
        return cls(size, tuple(succ))

    @property
    def full(self) -> int:
        return (1 << self.size) - 1

    @property
    def worlds(self) -> range:
        return range(self.size)

    def has_edge(self, a: int, b: int) -> bool:
        return bool(self.succ[a] >> b & 1)

    def successors(self, w: int) -> frozenset:
        return members(self.succ[w])

    def edges(self) -> list[tuple[int, int]]:
        return [(a, b) for a in self.worlds for b in self.worlds if self.has_edge(a, b)]

    def reflexive(self, w: int) -> bool:
        return self.has_edge(w, w)

    def up_star(self, w: int) -> int:
        return self.succ[w] | (1 << w)

    def derivative(self, mask: int) -> int:
        """Worlds with a successor in ``mask``."""
        out = 0
        for w in range(self.size):
            if self.succ[w] & mask:
                out |= 1 << w
        return out

    def down_star(self, mask: int) -> int:
        return mask | self.derivative(mask)


@dataclass(frozen=True, eq=False)
class Model:
    frame: Frame
    valuation: Mapping[str, frozenset] = field(default_factory=dict)
    names: tuple = ()

    def __post_init__(self):
        val = {}
        for atom, ws in self.valuation.items():
            ws = frozenset(ws)
            if any(not 0 <= w < self.frame.size for w in ws):
                raise ValueError(f"valuation of {atom!r} outside the world range")
            val[atom] = ws
        object.__setattr__(self, "valuation", MappingProxyType(val))
        object.__setattr__(self, "_masks", {a: mask_of(ws) for a, ws in val.items()})
        if not self.names:
            object.__setattr__(self, "names", tuple(f"w{i}" for i in range(self.frame.size)))
        elif len(self.names) != self.frame.size:
            raise ValueError("one name per world required")

    @property
    def size(self) -> int:
        return self.frame.size

    def mask(self, atom: str) -> int:
        return self._masks.get(atom, 0)

    def atoms(self) -> frozenset:
        return frozenset(self.valuation)

    def __eq__(self, other):
        if not isinstance(other, Model):
            return NotImplemented
        atoms = {a for a, m in self._masks.items() if m} | {a for a, m in other._masks.items() if m}
        return self.frame == other.frame and all(self.mask(a) == other.mask(a) for a in atoms)

    __hash__ = None


class FrameClass(str, enum.Enum):
    WK4 = "WK4"
    WK4T0 = "WK4T0"
    K4 = "K4"
    S4 = "S4"
    IRR_WK4 = "IRR_WK4"
    ALL = "ALL"


@dataclass(frozen=True)
class Verdict:
    ok: bool
    witness: tuple | None = None
    reason: str = ""

    def __bool__(self):
        return self.ok


def _wk4_violation(f: Frame):
    for w in f.worlds:
        for s in members(f.succ[w]):
            bad = f.succ[s] & ~f.succ[w] & ~(1 << w)
            if bad:
                return (w, s, min(members(bad)))
    return None


def _transitivity_violation(f: Frame):
    for w in f.worlds:
        for s in members(f.succ[w]):
            bad = f.succ[s] & ~f.succ[w]
            if bad:
                return (w, s, min(members(bad)))
    return None


def check_frame_class(f: Frame, cls: FrameClass | str) -> Verdict:
    """Decide membership; on failure return a shortest violating world tuple."""
    f = _as_frame(f)
    cls = FrameClass(cls)
    if cls is FrameClass.ALL:
        return Verdict(True)
    if cls is FrameClass.S4:
        for w in f.worlds:
            if not f.reflexive(w):
                return Verdict(False, (w,), "not reflexive")
    if cls is FrameClass.IRR_WK4:
        for w in f.worlds:
            if f.reflexive(w):
                return Verdict(False, (w,), "not irreflexive")
    if cls is FrameClass.WK4T0:
        for w in f.worlds:
            for v in members(f.succ[w]):
                if v != w and f.has_edge(v, w) and not f.reflexive(w) and not f.reflexive(v):
                    return Verdict(False, (w, v), "not weakly reflexive")
    if cls in (FrameClass.K4, FrameClass.S4):
        bad = _transitivity_violation(f)
        if bad:
            return Verdict(False, bad, "not transitive")
        return Verdict(True)
    bad = _wk4_violation(f)
    if bad:
        return Verdict(False, bad, "not weakly transitive")
    return Verdict(True)


def _as_frame(f):
    return f.frame if isinstance(f, Model) else f


def _require_wk4(f: Frame):
    bad = _wk4_violation(f)
    if bad:
        raise NotWeaklyTransitive(bad)


@dataclass(frozen=True)
class Partition:
    """Block id per world; ids are dense and ordered by least member."""

    block_of: tuple

    @classmethod
    def from_labels(cls, labels: Iterable) -> "Partition":
        ids = {}
        out = []
        for lab in labels:
            if lab not in ids:
                ids[lab] = len(ids)
            out.append(ids[lab])
        return cls(tuple(out))

    @classmethod
    def from_blocks(cls, size: int, blocks: Iterable[Iterable[int]]) -> "Partition":
        labels = [None] * size
        for i, b in enumerate(blocks):
            for w in b:
                if labels[w] is not None:
                    raise ValueError(f"world {w} in two blocks")
                labels[w] = i
        if None in labels:
            raise ValueError("blocks do not cover every world")
        return cls.from_labels(labels)

    @property
    def size(self) -> int:
        return len(self.block_of)

    @property
    def count(self) -> int:
        return max(self.block_of, default=-1) + 1

    @property
    def blocks(self) -> tuple:
        out = [[] for _ in range(self.count)]
        for w, b in enumerate(self.block_of):
            out[b].append(w)
        return tuple(frozenset(b) for b in out)

    def refines(self, other: "Partition") -> bool:
        seen = {}
        for mine, theirs in zip(self.block_of, other.block_of):
            if seen.setdefault(mine, theirs) != theirs:
                return False
        return True


@dataclass(frozen=True)
class Analysis:
    clusters: Partition
    depth: tuple
    frame_depth: int


def analyze(f: Frame) -> Analysis:
    """Clusters (classes of mutual reachability) and depth of every world."""
    f = _as_frame(f)
    _require_wk4(f)
    labels = []
    for w in f.worlds:
        cluster = {w} | {v for v in members(f.succ[w]) if f.has_edge(v, w)}
        labels.append(min(cluster))
    clusters = Partition.from_labels(labels)
    strict = [f.succ[w] & ~mask_of(v for v in members(f.succ[w]) if f.has_edge(v, w))
              for w in f.worlds]
    depth = [None] * f.size

    def dpt(w):
        if depth[w] is None:
            depth[w] = max((1 + dpt(v) for v in members(strict[w])), default=0)
        return depth[w]

    for w in f.worlds:
        dpt(w)
    return Analysis(clusters, tuple(depth), max(depth, default=0))


@dataclass(frozen=True)
class Unfolding:
    model: Model
    projection: tuple


def irreflexive_unfold(m: Model) -> Unfolding:
    """Replace every reflexive world by a two-point loopless cluster."""
    f = m.frame
    _require_wk4(f)
    proj, names = [], []
    for w in f.worlds:
        if f.reflexive(w):
            proj += [w, w]
            names += [f"{m.names[w]}.0", f"{m.names[w]}.1"]
        else:
            proj.append(w)
            names.append(m.names[w])
    n = len(proj)
    succ = []
    for i in range(n):
        row = 0
        for j in range(n):
            if i != j and f.has_edge(proj[i], proj[j]):
                row |= 1 << j
        succ.append(row)
    val = {a: frozenset(i for i in range(n) if proj[i] in ws) for a, ws in m.valuation.items()}
    return Unfolding(Model(Frame(n, tuple(succ)), val, tuple(names)), tuple(proj))


def is_cofinal(f: Frame, subset: Iterable[int]) -> bool:
    """True when every one-step successor of the subset reaches back into it."""
    x = mask_of(subset)
    up = 0
    for w in members(x):
        up |= f.succ[w]
    return up & ~f.down_star(x) == 0


def generated_subframe(f: Frame, w: int) -> tuple[Frame, tuple]:
    """Subframe on the worlds reachable from ``w``; returns (frame, old indices)."""
    reach = 1 << w
    while True:
        nxt = reach
        for v in members(reach):
            nxt |= f.succ[v]
        if nxt == reach:
            break
        reach = nxt
    old = sorted(members(reach))
    index = {v: i for i, v in enumerate(old)}
    succ = tuple(mask_of(index[u] for u in members(f.succ[v]) if u in index) for v in old)
    return Frame(len(old), succ), tuple(old)


@dataclass(frozen=True)
class FmpBound:
    per_depth: tuple   # HugeInt per depth 0..depth_bound
    total: HugeInt
    depth_bound: int

    def to_json(self):
        def enc(h):
            n = h.exact()
            return n if n is not None and n.bit_length() <= 4000 else str(h)
        return {"perDepth": [enc(h) for h in self.per_depth], "total": enc(self.total),
                "depthBound": self.depth_bound}


def fmp_bound(sigma_size: int) -> FmpBound:
    """Size bound on the final quotient, one entry per depth below ``|Sigma|``.

    Depth 0 has at most ``2^s * 2^(2^s)`` classes; depth ``n`` at most
    ``2^s * 2^(2^s) * 2^(previous)``. Values are exact hereditary-binary
    integers because they outgrow any machine representation from ``s = 3``.
    """
    if sigma_size < 1:
        raise ValueError("sigma_size must be positive")
    s = sigma_size
    base_exp = HugeInt.of(s + (1 << s))
    levels = [HugeInt.pow2(base_exp)]
    for _ in range(1, s):
        levels.append(HugeInt.pow2(base_exp + levels[-1]))
    total = HugeInt.of(0)
    for lv in levels:
        total = total + lv
    return FmpBound(tuple(levels), total, s - 1)


# ---------------------------------------------------------------- JSON

def model_from_json(data: dict, edge_key: str = "edges") -> Model:
    if not isinstance(data, dict) or "worlds" not in data:
        raise ModelFormatError("model must be an object with a 'worlds' list")
    names = data["worlds"]
    if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
        raise ModelFormatError("'worlds' must be a list of strings")
    if len(set(names)) != len(names):
        raise ModelFormatError("duplicate world name")
    index = {n: i for i, n in enumerate(names)}

    def lookup(name):
        if name not in index:
            raise ModelFormatError(f"unknown world {name!r}")
        return index[name]

    edges = data.get(edge_key, [])
    seen = set()
    pairs = []
    for e in edges:
        if not (isinstance(e, list) and len(e) == 2):
            raise ModelFormatError(f"bad edge {e!r}")
        pair = (lookup(e[0]), lookup(e[1]))
        if pair in seen:
            raise ModelFormatError(f"duplicate edge {e!r}")
        seen.add(pair)
        pairs.append(pair)
    val = {}
    for atom, ws in data.get("val", {}).items():
        if not isinstance(ws, list):
            raise ModelFormatError(f"valuation of {atom!r} must be a list")
        val[atom] = frozenset(lookup(w) for w in ws)
    unknown = set(data) - {"worlds", edge_key, "val"}
    if unknown:
        raise ModelFormatError(f"unknown keys: {sorted(unknown)}")
    return Model(Frame.from_edges(len(names), pairs), val, tuple(names))


def model_to_json(m: Model, edge_key: str = "edges") -> dict:
    n = m.names
    return {
        "worlds": list(n),
        edge_key: [[n[a], n[b]] for a, b in m.frame.edges()],
        "val": {a: [n[w] for w in sorted(ws)] for a, ws in sorted(m.valuation.items())},
    }


def load_model(path) -> Model:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: {exc}") from exc
    return model_from_json(data)

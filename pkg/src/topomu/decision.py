"""Bounded satisfiability and validity over frame classes."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations, product

from .frames import Frame, FrameClass, Model, check_frame_class
from .semantics import ModelBundle
from .syntax import Formula, Neg, free_vars, is_core, normalize

__all__ = [
    "SearchConfig", "SatResult", "TimeBudgetExceeded", "InvalidInput",
    "enumerate_frames", "canonical_form", "bounded_sat", "bounded_valid",
]

# models evaluated per packed batch
BATCH_MODELS = 1 << 17


class TimeBudgetExceeded(RuntimeError):
    def __init__(self, progress: dict):
        self.progress = progress
        super().__init__(f"time budget exceeded: {progress}")


class InvalidInput(ValueError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    frame_class: FrameClass = FrameClass.WK4
    max_worlds: int = 4
    atom_budget: int = 4
    time_budget_ms: int | None = None
    seed: int = 0    # the sweep is exhaustive and ordered, so the seed never changes results

    def __post_init__(self):
        object.__setattr__(self, "frame_class", FrameClass(self.frame_class))
        if self.max_worlds < 1:
            raise InvalidInput("max_worlds must be at least 1")


# ---------------------------------------------------------------- frame enumeration

def _adjacency_key(succ, perm):
    """Adjacency bits of the frame relabelled so that new index i is old perm[i]."""
    n = len(perm)
    key = 0
    for i in range(n):
        row = succ[perm[i]]
        for j in range(n):
            key = key << 1 | (row >> perm[j] & 1)
    return key


def canonical_form(f: Frame) -> tuple[int, tuple]:
    """Least adjacency key over relabellings that respect degree invariants.

    Returns (key, permutation). Two frames are isomorphic iff their keys agree.
    """
    n = f.size
    pred = [0] * n
    for w in range(n):
        for v in range(n):
            if f.succ[w] >> v & 1:
                pred[v] |= 1 << w
    inv = [(-(f.succ[w] >> w & 1), -bin(f.succ[w]).count("1"), -bin(pred[w]).count("1"))
           for w in range(n)]
    groups = {}
    for w in range(n):
        groups.setdefault(inv[w], []).append(w)
    ordered = [groups[k] for k in sorted(groups)]
    best = None
    for choice in product(*(permutations(g) for g in ordered)):
        perm = tuple(w for part in choice for w in part)
        key = _adjacency_key(f.succ, perm)
        if best is None or key < best[0]:
            best = (key, perm)
    return best if best else (0, ())


def _relabel(f: Frame, perm) -> Frame:
    pos = {old: new for new, old in enumerate(perm)}
    succ = [0] * f.size
    for new, old in enumerate(perm):
        row = 0
        for v in range(f.size):
            if f.succ[old] >> v & 1:
                row |= 1 << pos[v]
        succ[new] = row
    return Frame(f.size, tuple(succ))


@lru_cache(maxsize=None)
def enumerate_frames(cls: FrameClass | str, n: int) -> tuple:
    """One frame per isomorphism class of ``cls`` frames on ``n`` worlds,
    in canonical form and sorted by canonical key.

    Every class here is closed under induced subframes, so the classes on
    ``n`` worlds arise by adding one world to those on ``n - 1``.
    """
    cls = FrameClass(cls)
    if n == 0:
        return (Frame(0, ()),)
    seen = {}
    for base in enumerate_frames(cls, n - 1):
        k = n - 1
        for out_bits, in_bits, loop in product(range(1 << k), range(1 << k), (0, 1)):
            succ = [base.succ[w] | ((in_bits >> w & 1) << k) for w in range(k)]
            succ.append(out_bits | (loop << k))
            fr = Frame(n, tuple(succ))
            if not check_frame_class(fr, cls):
                continue
            key, perm = canonical_form(fr)
            if key not in seen:
                seen[key] = _relabel(fr, perm)
    return tuple(seen[k] for k in sorted(seen))


# ---------------------------------------------------------------- search

@dataclass(frozen=True)
class SatResult:
    found: bool
    model: Model | None = None
    world: int | None = None
    worlds_searched: int = 0
    frames_checked: int = 0
    stats: dict = field(default_factory=dict)

    def __bool__(self):
        return self.found


def _atoms_of(f, cfg):
    names = sorted(free_vars(f))
    unbound = [x for x in names if not x[:1].islower()]
    if unbound:
        raise InvalidInput(f"formula has free fixpoint variables: {unbound}")
    if len(names) > cfg.atom_budget:
        raise InvalidInput(f"{len(names)} atoms exceed the budget of {cfg.atom_budget}")
    return names


def bounded_sat(f: Formula, cfg: SearchConfig) -> SatResult:
    """Smallest model of the class satisfying ``f`` somewhere.

    Sweeps world counts upwards; within a count, frames in canonical order and
    then valuations in index order. The first hit is returned, so the answer
    is the least one in that order.
    """
    f = f if is_core(f) else normalize(f)
    atoms = _atoms_of(f, cfg)
    start = time.monotonic()
    checked = 0
    for n in range(1, cfg.max_worlds + 1):
        frames = enumerate_frames(cfg.frame_class, n)
        per = 1 << (n * len(atoms))
        step = max(1, BATCH_MODELS // per)
        for lo in range(0, len(frames), step):
            if cfg.time_budget_ms is not None:
                elapsed = (time.monotonic() - start) * 1000
                if elapsed >= cfg.time_budget_ms:
                    raise TimeBudgetExceeded({"worlds": n, "framesChecked": checked,
                                              "framesAtThisSize": len(frames),
                                              "elapsedMs": round(elapsed)})
            batch = frames[lo:lo + step]
            bundle = ModelBundle.product(batch, atoms, "all")
            hit = bundle.first_hit(bundle.evaluate(f))
            checked += len(batch)
            if hit is not None:
                k, w = hit
                fr = batch[k // per]
                val = bundle.decode_valuation(k)
                model = Model(fr, {a: ws for a, ws in val.items()})
                return SatResult(True, model, w, n, checked)
    return SatResult(False, None, None, cfg.max_worlds, checked)


def bounded_valid(f: Formula, cfg: SearchConfig) -> SatResult:
    """Counterexample search: a hit is a model and world refuting ``f``."""
    f = f if is_core(f) else normalize(f)
    return bounded_sat(Neg(f), cfg)

"""P-morphisms, bisimilarity by partition refinement, and quotient models."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .frames import Frame, Model, Partition, Verdict, mask_of, members
from .semantics import sigma_truth
from .syntax import SigmaSet, free_vars

__all__ = [
    "NotABisimulation", "check_p_morphism", "compute_bisimilarity", "refine_once",
    "quotient_model", "Quotient", "preimage", "sigma_atoms",
]


class NotABisimulation(ValueError):
    def __init__(self, verdict: Verdict):
        self.verdict = verdict
        super().__init__(f"projection is not a P-morphism: {verdict.reason} at {verdict.witness}")


def preimage(mapping: Sequence[int], subset: Iterable[int]) -> frozenset:
    s = set(subset)
    return frozenset(x for x, y in enumerate(mapping) if y in s)


def check_p_morphism(mapping: Sequence[int], source: Model, target: Model,
                     atoms: Iterable[str] | None = None) -> Verdict:
    """Decide whether ``mapping`` commutes with the derivatives and atoms.

    The derivative equation only needs checking on singletons: both sides
    distribute over unions and vanish on the empty set.
    """
    src, tgt = source.frame, target.frame
    if len(mapping) != src.size:
        return Verdict(False, None, "mapping is not total")
    for x, y in enumerate(mapping):
        if not 0 <= y < tgt.size:
            return Verdict(False, (x,), "image outside target")
    fibre = [0] * tgt.size
    for x, y in enumerate(mapping):
        fibre[y] |= 1 << x
    for y in range(tgt.size):
        # x with pi(x) -> y   versus   x with a successor in the fibre of y
        lhs = mask_of(x for x in range(src.size) if tgt.has_edge(mapping[x], y))
        rhs = src.derivative(fibre[y])
        if lhs != rhs:
            x = min(members(lhs ^ rhs))
            reason = "back condition fails" if lhs & (1 << x) else "forth condition fails"
            return Verdict(False, (x, y), reason)
    if atoms is None:
        atoms = source.atoms() | target.atoms()
    for a in sorted(atoms):
        want = source.mask(a)
        got = mask_of(x for x in range(src.size) if target.mask(a) >> mapping[x] & 1)
        if want != got:
            return Verdict(False, (min(members(want ^ got)),), f"atom {a} not preserved")
    return Verdict(True)


def _initial_labels(m: Model, mode):
    if isinstance(mode, SigmaSet):
        truth = sigma_truth(m, mode)
        masks = [truth[k] for k in sorted(truth, key=lambda k: (k[0], str(k[1])))]
    else:
        masks = [m.mask(a) for a in sorted(mode)]
    return [tuple(mk >> w & 1 for mk in masks) for w in range(m.size)]


def refine_once(frame: Frame, part: Partition) -> Partition:
    """Split blocks by the set of blocks each world can step into."""
    sig = []
    for w in frame.worlds:
        succ_blocks = frozenset(part.block_of[v] for v in members(frame.succ[w]))
        sig.append((part.block_of[w], succ_blocks))
    return Partition.from_labels(sig)


def compute_bisimilarity(m: Model, mode) -> Partition:
    """Coarsest bisimulation partition.

    ``mode`` is either a collection of atom names or a :class:`SigmaSet`, in
    which case worlds start out grouped by their truth values on Sigma.
    """
    part = Partition.from_labels(_initial_labels(m, mode))
    while True:
        nxt = refine_once(m.frame, part)
        if nxt.count == part.count:
            return part
        part = nxt


@dataclass(frozen=True)
class Quotient:
    model: Model
    projection: tuple


def quotient_model(m: Model, part: Partition, atoms: Iterable[str] | None = None) -> Quotient:
    """Collapse each block to one world.

    A block steps to another when some member does, and satisfies an atom
    when some member does. The projection is then checked to be a
    P-morphism for ``atoms`` (default: every atom of ``m``).
    """
    if part.size != m.size:
        raise ValueError("partition size does not match model")
    k = part.count
    succ = [0] * k
    for w in m.frame.worlds:
        b = part.block_of[w]
        for v in members(m.frame.succ[w]):
            succ[b] |= 1 << part.block_of[v]
    val = {a: frozenset(part.block_of[w] for w in ws) for a, ws in m.valuation.items()}
    names = tuple("{" + ",".join(m.names[w] for w in sorted(blk)) + "}" for blk in part.blocks)
    q = Model(Frame(k, tuple(succ)), val, names)
    proj = part.block_of
    atoms = m.atoms() if atoms is None else frozenset(atoms)
    verdict = check_p_morphism(proj, m, q, atoms)
    if not verdict:
        raise NotABisimulation(verdict)
    return Quotient(q, proj)


def sigma_atoms(sigma: SigmaSet) -> frozenset:
    """Atoms a Sigma quotient must preserve: the seed's free names."""
    return frozenset(free_vars(sigma.seed))

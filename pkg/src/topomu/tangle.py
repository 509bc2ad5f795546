"""The spine model and the tangled-fragment expressivity experiment.

The spine keeps ``m`` finite ordinals and three top points: index ``m`` is
omega, ``m + 1`` is omega+1 and ``m + 2`` is omega+2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

from .decision import InvalidInput
from .frames import Frame, Model, members
from .semantics import eval_mask
from .syntax import (And, Dia, Formula, Neg, Or, TangleC, TangleD, Top, Var, normalize, size,
                     to_text)

__all__ = [
    "PreconditionViolated", "build_spine", "role", "odd_role", "enumerate_tangle_fragment",
    "ExperimentReport", "expressivity_experiment", "SEPARATOR", "CSV_COLUMNS",
]


class PreconditionViolated(ValueError):
    pass


def role(m: int, w: int) -> str:
    if w < m:
        return "finite-odd" if w % 2 else "finite-even"
    return ("omega", "omega+1", "omega+2")[w - m]


def odd_role(m: int, w: int) -> bool:
    return w % 2 == 1 if w < m else w == m + 1


def build_spine(m: int) -> Model:
    if m < 2:
        raise InvalidInput("spine needs m >= 2")
    n = m + 3
    succ = []
    for a in range(n):
        row = (1 << a) - 1            # every lower rank
        if odd_role(m, a):
            row |= 1 << a
        if a == m + 1:
            row |= 1 << (m + 2)
        succ.append(row)
    names = [str(i) for i in range(m)] + ["omega", "omega+1", "omega+2"]
    p = frozenset(w for w in range(n) if odd_role(m, w))
    return Model(Frame(n, tuple(succ)), {"p": p}, tuple(names))


# tangled closure of {p, ~p}
SEPARATOR = TangleC((Var("p"), Neg(Var("p"))))


def _key(f):
    return (size(f), to_text(f))


def enumerate_tangle_fragment(atoms, size_bound: int) -> list[Formula]:
    """All fragment formulas up to ``size_bound`` nodes, one per dedup class.

    Connectives are T, atoms, ~, &, |, <> and tangle_d. Conjunction and
    disjunction take two distinct operands in key order, double negations are
    skipped, and tangle arguments form a set.
    """
    if size_bound < 1:
        raise ValueError("size_bound must be positive")
    return list(_enumerate(tuple(sorted(set(atoms))), size_bound))


@lru_cache(maxsize=None)
def _enumerate(atoms, bound):
    by_size = {1: [Top()] + [Var(a) for a in atoms] + [TangleD(())]}
    for s in range(2, bound + 1):
        out = []
        for f in by_size[s - 1]:
            if not isinstance(f, Neg):
                out.append(Neg(f))
            out.append(Dia(f))
        for ls in range(1, s - 1):
            rs = s - 1 - ls
            if ls > rs:
                break
            for a in by_size[ls]:
                for b in by_size[rs]:
                    if _key(a) < _key(b):
                        out.append(And(a, b))
                        out.append(Or(a, b))
        out.extend(TangleD(args) for args in _tangle_sets(by_size, s - 1))
        by_size[s] = sorted(out, key=_key)
    result = []
    for s in range(1, bound + 1):
        result.extend(by_size[s])
    return tuple(result)


def _tangle_sets(by_size, total):
    """Key-ordered tuples of distinct formulas whose sizes add to ``total``."""
    pool = sorted((f for s in range(1, total + 1) for f in by_size.get(s, ())), key=_key)

    def go(start, remaining):
        if remaining == 0:
            yield ()
            return
        for i in range(start, len(pool)):
            sz = size(pool[i])
            if sz > remaining:
                continue
            for rest in go(i + 1, remaining - sz):
                yield (pool[i],) + rest

    return list(go(0, total))


CSV_COLUMNS = ("formula", "size", "cutoff", "violations", "valueAtOmega", "valueAtOmegaPlus2")


@dataclass
class ExperimentReport:
    m: int
    size_bound: int
    separator_value: frozenset
    separator_at_omega: bool
    separator_at_omega_plus2: bool
    rows: list = field(default_factory=list)

    @property
    def formula_count(self) -> int:
        return len(self.rows)

    @property
    def disagreements(self) -> list:
        return [r for r in self.rows if r["valueAtOmega"] != r["valueAtOmegaPlus2"]]

    @property
    def parity_violations(self) -> int:
        return sum(r["violations"] for r in self.rows)

    @property
    def separator_expected(self) -> frozenset:
        return frozenset({self.m + 1, self.m + 2})

    def to_json(self):
        return {
            "m": self.m,
            "sizeBound": self.size_bound,
            "formulaCount": self.formula_count,
            "separator": {
                "formula": to_text(SEPARATOR),
                "value": sorted(self.separator_value),
                "atOmega": self.separator_at_omega,
                "atOmegaPlus2": self.separator_at_omega_plus2,
            },
            "agreementAtTop": not self.disagreements,
            "parityViolations": self.parity_violations,
            "rows": self.rows,
        }


def _parity_violations(m, truth, cutoff):
    """Pairs above ``cutoff`` with the same parity role but different truth."""
    counts = {True: [0, 0], False: [0, 0]}
    for w in range(cutoff + 1, m + 3):
        counts[odd_role(m, w)][truth >> w & 1] += 1
    return sum(c[0] * c[1] for c in counts.values())


def expressivity_experiment(m: int, size_bound: int) -> ExperimentReport:
    if m < 4 * size_bound + 2:
        raise PreconditionViolated(f"m must be at least 4*size_bound+2 = {4 * size_bound + 2}")
    model = build_spine(m)
    sep = eval_mask(model, normalize(SEPARATOR))
    rep = ExperimentReport(m, size_bound, members(sep), bool(sep >> m & 1),
                           bool(sep >> (m + 2) & 1))
    for f in enumerate_tangle_fragment({"p"}, size_bound):
        truth = eval_mask(model, normalize(f))
        n = size(f)
        cutoff = 2 * n
        rep.rows.append({
            "formula": to_text(f),
            "size": n,
            "cutoff": cutoff,
            "violations": _parity_violations(m, truth, cutoff),
            "valueAtOmega": bool(truth >> m & 1),
            "valueAtOmegaPlus2": bool(truth >> (m + 2) & 1),
        })
    return rep

"""Model checking over finite derivative models.

World sets are bitmasks internally. :class:`ModelBundle` evaluates one formula
on many same-sized models at once by transposing the bitmasks: each world holds
a chunk whose bit ``k`` belongs to model ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .frames import Frame, Model, mask_of, members
from .syntax import And, Dia, Formula, Neg, Nu, Top, Var, is_core, normalize

__all__ = [
    "UnboundVariable", "evaluate", "eval_mask", "EvalTrace", "gfp_trace",
    "DNeighborhoods", "d_neighborhoods", "ModelBundle", "sigma_truth",
]


class UnboundVariable(KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(name)

    def __str__(self):
        return f"unbound variable {self.name!r}"


def _core(f):
    return f if is_core(f) else normalize(f)


def _lookup(m: Model, env, name):
    if name in env:
        return env[name]
    if name in m.valuation:
        return m.mask(name)
    if name[:1].isupper():
        raise UnboundVariable(name)
    return 0  # atoms missing from the valuation are empty


def eval_mask(m: Model, f: Formula, env: Mapping[str, int] | None = None) -> int:
    """Truth set of a core formula as a bitmask; ``env`` maps names to masks."""
    return _eval(m.frame, m, f, dict(env or {}))


def _eval(fr: Frame, m, f, env):
    if isinstance(f, Top):
        return fr.full
    if isinstance(f, Var):
        return _lookup(m, env, f.name)
    if isinstance(f, Neg):
        return fr.full & ~_eval(fr, m, f.child, env)
    if isinstance(f, And):
        left = _eval(fr, m, f.left, env)
        return left & _eval(fr, m, f.right, env) if left else 0
    if isinstance(f, Dia):
        inner = _eval(fr, m, f.child, env)
        return fr.derivative(inner) if inner else 0
    if isinstance(f, Nu):
        cur = fr.full
        for _ in range(fr.size + 2):
            env[f.var] = cur
            nxt = _eval(fr, m, f.body, env)
            if nxt == cur:
                break
            cur = nxt
        else:
            raise ValueError(f"no fixed point reached for {f.var}; body not monotone")
        env.pop(f.var)
        return cur
    raise TypeError(f"not a core formula: {f!r}")


def _env_masks(m, env):
    return {k: (v if isinstance(v, int) else mask_of(v)) for k, v in (env or {}).items()}


def evaluate(m: Model, f: Formula, env: Mapping | None = None) -> frozenset:
    """Set of worlds of ``m`` where ``f`` holds.

    ``env`` binds variables to world sets and shadows the model valuation.
    Surface formulas are normalized first.
    """
    return members(eval_mask(m, _core(f), _env_masks(m, env)))


@dataclass(frozen=True)
class EvalTrace:
    approximants: tuple     # frozensets, approximants[0] is every world
    stabilization: int

    @property
    def value(self) -> frozenset:
        return self.approximants[-1]


def gfp_trace(m: Model, f: Formula, env: Mapping | None = None) -> EvalTrace:
    f = _core(f)
    if not isinstance(f, Nu):
        raise ValueError("gfp_trace needs a formula headed by nu")
    envm = _env_masks(m, env)
    chain = [m.frame.full]
    while True:
        envm[f.var] = chain[-1]
        nxt = _eval(m.frame, m, f.body, envm)
        chain.append(nxt)
        if nxt == chain[-2]:
            break
        if len(chain) > m.size + 2:
            raise ValueError("approximants do not stabilize; body not monotone")
    return EvalTrace(tuple(members(c) for c in chain), len(chain) - 2)


@dataclass(frozen=True)
class DNeighborhoods:
    """d-neighborhoods of one world: exactly the supersets of its successor set."""

    world: int
    minimal: frozenset

    def __contains__(self, subset) -> bool:
        return self.minimal <= frozenset(subset)


def d_neighborhoods(m: Model | Frame, x: int) -> DNeighborhoods:
    fr = m.frame if isinstance(m, Model) else m
    return DNeighborhoods(x, fr.successors(x))


def sigma_truth(m: Model, sigma) -> dict:
    """Truth mask of every closed member of ``sigma``, keyed by (prefix, base).

    Each base is evaluated once; prefixes are applied as set operators
    (``N`` complement, ``C`` closure ``X | d(X)``). Members whose base has a
    free variable bound elsewhere in the seed are skipped.
    """
    from .syntax import free_vars

    fr = m.frame
    allowed = free_vars(sigma.seed)
    base_val = {}
    out = {}
    for prefix, base in sigma.pairs():
        if not free_vars(base) <= allowed:
            continue
        key = id(base)
        if key not in base_val:
            base_val[key] = eval_mask(m, base)
        x = base_val[key]
        for ch in reversed(prefix):
            x = fr.full & ~x if ch == "N" else fr.down_star(x)
        out[(prefix, base)] = x
    return out


# ---------------------------------------------------------------- packed evaluation

def _repeat(pattern: int, width: int, copies: int) -> int:
    """``pattern`` (``width`` bits) repeated ``copies`` times."""
    if copies <= 0:
        return 0
    return pattern * (((1 << (width * copies)) - 1) // ((1 << width) - 1))


def _bit_pattern(j: int, total: int) -> int:
    """Bits ``k < total`` with bit ``j`` of ``k`` set; ``total`` a power of two."""
    half = 1 << j
    unit = ((1 << half) - 1) << half
    return _repeat(unit, 2 * half, total // (2 * half))


class ModelBundle:
    """Many models over the same number of worlds, evaluated in lockstep."""

    def __init__(self, size: int, count: int, edges, atoms: Mapping[str, Sequence[int]]):
        self.size = size
        self.count = count
        self.full = (1 << count) - 1
        self.edges = edges   # edges[w][v]: models with w -> v
        self.atoms = dict(atoms)
        # only keep nonzero edge chunks per row for the derivative
        self._rows = [[(v, e) for v, e in enumerate(row) if e] for row in edges]

    @classmethod
    def from_models(cls, models: Sequence[Model], atoms=None) -> "ModelBundle":
        n = models[0].size
        if any(mm.size != n for mm in models):
            raise ValueError("bundle models must have the same world count")
        if atoms is None:
            atoms = sorted(set().union(*(mm.atoms() for mm in models)))
        edges = [[0] * n for _ in range(n)]
        val = {a: [0] * n for a in atoms}
        for k, mm in enumerate(models):
            bit = 1 << k
            for w in range(n):
                for v in members(mm.frame.succ[w]):
                    edges[w][v] |= bit
            for a in atoms:
                for w in members(mm.mask(a)):
                    val[a][w] |= bit
        return cls(n, len(models), edges, val)

    @classmethod
    def replicate(cls, m: Model, count: int) -> "ModelBundle":
        """``count`` copies of one model, e.g. to sweep an environment."""
        full = (1 << count) - 1
        n = m.size
        edges = [[full if m.frame.has_edge(w, v) else 0 for v in range(n)] for w in range(n)]
        val = {a: [full if m.mask(a) >> w & 1 else 0 for w in range(n)] for a in m.atoms()}
        return cls(n, count, edges, val)

    def constant(self, mask: int) -> list:
        """Chunks of a world set that is the same in every model."""
        return [self.full if mask >> w & 1 else 0 for w in range(self.size)]

    @classmethod
    def product(cls, frames: Sequence[Frame], atoms: Sequence[str], valuations="all",
                rng=None) -> "ModelBundle":
        """Every frame paired with every valuation (``"all"``) or with
        ``valuations`` random ones drawn from ``rng``. Model ``k`` uses frame
        ``k // V`` and valuation ``k % V``."""
        n = frames[0].size
        atoms = list(atoms)
        if valuations == "all":
            per = 1 << (n * len(atoms))
        else:
            per = int(valuations)
        count = per * len(frames)
        block = (1 << per) - 1
        edges = [[0] * n for _ in range(n)]
        for i, fr in enumerate(frames):
            chunk = block << (i * per)
            for w in range(n):
                for v in members(fr.succ[w]):
                    edges[w][v] |= chunk
        val = {}
        for i, a in enumerate(atoms):
            row = []
            for w in range(n):
                if valuations == "all":
                    row.append(_repeat(_bit_pattern(w * len(atoms) + i, per), per, len(frames)))
                else:
                    row.append(rng.getrandbits(count))
            val[a] = row
        return cls(n, count, edges, val)

    def decode_valuation(self, k: int) -> dict:
        return {a: frozenset(w for w in range(self.size) if row[w] >> k & 1)
                for a, row in self.atoms.items()}

    def model(self, k: int) -> Model:
        succ = tuple(mask_of(v for v in range(self.size) if self.edges[w][v] >> k & 1)
                     for w in range(self.size))
        return Model(Frame(self.size, succ), self.decode_valuation(k))

    def subsets(self) -> list:
        """Env chunks enumerating every world subset, for ``count == 2**size``."""
        if self.count != 1 << self.size:
            raise ValueError("bundle width must be 2**size to enumerate subsets")
        return [_bit_pattern(w, self.count) for w in range(self.size)]

    def evaluate(self, f: Formula, env: Mapping[str, Sequence[int]] | None = None) -> list:
        return self._eval(_core(f), dict(env or {}))

    def _dia(self, x):
        out = []
        for row in self._rows:
            acc = 0
            for v, e in row:
                acc |= x[v] & e
            out.append(acc)
        return out

    def _eval(self, f, env):
        n, full = self.size, self.full
        if isinstance(f, Top):
            return [full] * n
        if isinstance(f, Var):
            if f.name in env:
                return list(env[f.name])
            if f.name in self.atoms:
                return list(self.atoms[f.name])
            if f.name[:1].isupper():
                raise UnboundVariable(f.name)
            return [0] * n
        if isinstance(f, Neg):
            return [full ^ c for c in self._eval(f.child, env)]
        if isinstance(f, And):
            left = self._eval(f.left, env)
            right = self._eval(f.right, env)
            return [a & b for a, b in zip(left, right)]
        if isinstance(f, Dia):
            return self._dia(self._eval(f.child, env))
        if isinstance(f, Nu):
            cur = [full] * n
            for _ in range(n + 2):
                env[f.var] = cur
                nxt = self._eval(f.body, env)
                if nxt == cur:
                    break
                cur = nxt
            else:
                raise ValueError(f"no fixed point reached for {f.var}; body not monotone")
            env.pop(f.var)
            return cur
        raise TypeError(f"not a core formula: {f!r}")

    def valid_everywhere(self, chunks) -> bool:
        return all(c == self.full for c in chunks)

    def first_hit(self, chunks):
        """Least (model, world) whose bit is set, or None."""
        best = None
        for w, c in enumerate(chunks):
            if c:
                k = (c & -c).bit_length() - 1
                if best is None or k < best[0]:
                    best = (k, w)
        return best

    def first_failure(self, chunks):
        return self.first_hit([self.full & ~c for c in chunks])

"""Formula trees, the text grammar, normalization and Sigma closure sets.

Core formulas use six node kinds (``Top``, ``Var``, ``Neg``, ``And``, ``Dia``,
``Nu``). Everything else (``Or``, ``Box``, ``Mu``, the star modalities and the
two tangles) is surface sugar that :func:`normalize` expands away.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

__all__ = [
    "Formula", "Top", "Bot", "Var", "Neg", "And", "Or", "Implies", "Iff",
    "Dia", "Box", "StarDia", "StarBox", "Nu", "Mu", "TangleD", "TangleC",
    "CORE_TYPES", "FormulaSyntaxError", "NotPositive",
    "parse", "to_text", "normalize", "is_core", "alpha_normalize", "alpha_equal",
    "free_vars", "substitute", "subformulas", "size", "closure_set",
    "SigmaSet", "normal_prefix", "decompose", "materialize", "PREFIX_NORMAL_FORMS",
    "implies", "iff", "lor", "box", "star_dia", "star_box",
]


class Formula:
    __slots__ = ()

    def __str__(self):
        return to_text(self)

    def __and__(self, other):
        return And(self, other)

    def __or__(self, other):
        return Or(self, other)

    def __invert__(self):
        return Neg(self)

    def __rshift__(self, other):
        return Implies(self, other)


@dataclass(frozen=True, slots=True, repr=False)
class Top(Formula):
    def __repr__(self):
        return "Top()"


@dataclass(frozen=True, slots=True, repr=False)
class Bot(Formula):
    def __repr__(self):
        return "Bot()"


@dataclass(frozen=True, slots=True)
class Var(Formula):
    name: str


@dataclass(frozen=True, slots=True)
class Neg(Formula):
    child: Formula


@dataclass(frozen=True, slots=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Dia(Formula):
    child: Formula


@dataclass(frozen=True, slots=True)
class Box(Formula):
    child: Formula


@dataclass(frozen=True, slots=True)
class StarDia(Formula):
    child: Formula


@dataclass(frozen=True, slots=True)
class StarBox(Formula):
    child: Formula


@dataclass(frozen=True, slots=True)
class Nu(Formula):
    var: str
    body: Formula


@dataclass(frozen=True, slots=True)
class Mu(Formula):
    var: str
    body: Formula


@dataclass(frozen=True, slots=True)
class TangleD(Formula):
    args: tuple


@dataclass(frozen=True, slots=True)
class TangleC(Formula):
    args: tuple


CORE_TYPES = (Top, Var, Neg, And, Dia, Nu)
_UNARY = (Neg, Dia, Box, StarDia, StarBox)
_BINARY = (And, Or, Implies, Iff)
_BINDERS = (Nu, Mu)
_TANGLES = (TangleD, TangleC)


# Small constructors for core-only encodings of the sugar.

def lor(a, b):
    return Neg(And(Neg(a), Neg(b)))


def implies(a, b):
    return Neg(And(a, Neg(b)))


def iff(a, b):
    return And(implies(a, b), implies(b, a))


def box(a):
    return Neg(Dia(Neg(a)))


def star_dia(a):
    return lor(a, Dia(a))


def star_box(a):
    return And(a, box(a))


class FormulaSyntaxError(ValueError):
    """Raised by :func:`parse`; ``offset`` is a UTF-8 byte offset."""

    def __init__(self, message, offset, expected=frozenset()):
        self.offset = offset
        self.expected = frozenset(expected)
        detail = f" (expected one of: {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(f"{message} at byte {offset}{detail}")


class NotPositive(ValueError):
    def __init__(self, variable, path):
        self.variable = variable
        self.path = tuple(path)
        super().__init__(
            f"bound variable {variable!r} occurs under an odd number of negations at {'/'.join(self.path) or '<root>'}"
        )


# ---------------------------------------------------------------- children

def _children(f):
    if isinstance(f, (Top, Bot, Var)):
        return ()
    if isinstance(f, _UNARY):
        return (f.child,)
    if isinstance(f, _BINARY):
        return (f.left, f.right)
    if isinstance(f, _BINDERS):
        return (f.body,)
    if isinstance(f, _TANGLES):
        return tuple(f.args)
    raise TypeError(f"not a formula: {f!r}")


def size(f: Formula) -> int:
    """Node count of the tree as written (sugar nodes count once)."""
    return 1 + sum(size(c) for c in _children(f))


def is_core(f: Formula) -> bool:
    if not isinstance(f, CORE_TYPES):
        return False
    return all(is_core(c) for c in _children(f))


def _all_names(f, acc=None):
    acc = set() if acc is None else acc
    if isinstance(f, Var):
        acc.add(f.name)
    elif isinstance(f, _BINDERS):
        acc.add(f.var)
    for c in _children(f):
        _all_names(c, acc)
    return acc


# ---------------------------------------------------------------- lexer / parser

_KEYWORDS = {"nu", "mu", "tangle_d", "tangle_c", "T", "F"}
_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
  | (?P<op><->|->|<\*>|<>|\[\*\]|\[\]|~|&|\||\(|\)|\{|\}|,|\.)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True, slots=True)
class _Tok:
    kind: str   # 'ident', 'op', 'bad', 'eof'
    text: str
    pos: int    # character offset


def _tokenize(text):
    toks = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if m is None:
            # the parser reports it with the set of tokens it wanted here
            toks.append(_Tok("bad", text[i], i))
            break
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), i))
        i = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


def _byte_offset(text, pos):
    return len(text[:pos].encode("utf-8"))


_UNARY_OPS = {"~": Neg, "<>": Dia, "[]": Box, "<*>": StarDia, "[*]": StarBox}
_PRIMARY_START = {"identifier", "T", "F", "(", "nu", "mu", "tangle_d", "tangle_c", *_UNARY_OPS}


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def fail(self, expected):
        t = self.tok
        what = {"eof": "end of input", "bad": f"character {t.text!r}"}.get(t.kind, f"token {t.text!r}")
        raise FormulaSyntaxError(f"unexpected {what}", _byte_offset(self.text, t.pos), expected)

    def accept(self, text):
        if self.tok.kind != "eof" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            self.fail({text})

    def parse(self):
        f = self.iff()
        if self.tok.kind != "eof":
            self.fail({"<->", "->", "|", "&", "end of input"})
        return f

    def iff(self):
        left = self.imp()
        while self.accept("<->"):
            left = Iff(left, self.imp())
        return left

    def imp(self):
        left = self.disj()
        if self.accept("->"):
            return Implies(left, self.imp())
        return left

    def disj(self):
        left = self.conj()
        while self.accept("|"):
            left = Or(left, self.conj())
        return left

    def conj(self):
        left = self.unary()
        while self.accept("&"):
            left = And(left, self.unary())
        return left

    def unary(self):
        t = self.tok
        if t.kind == "op" and t.text in _UNARY_OPS:
            self.i += 1
            return _UNARY_OPS[t.text](self.unary())
        if t.kind == "ident" and t.text in ("nu", "mu"):
            self.i += 1
            var = self.tok
            if var.kind != "ident" or var.text in _KEYWORDS:
                self.fail({"variable"})
            self.i += 1
            self.expect(".")
            body = self.iff()
            return (Nu if t.text == "nu" else Mu)(var.text, body)
        return self.primary()

    def primary(self):
        t = self.tok
        if t.kind == "ident":
            self.i += 1
            if t.text == "T":
                return Top()
            if t.text == "F":
                return Bot()
            if t.text in ("tangle_d", "tangle_c"):
                self.expect("{")
                args = []
                if not self.accept("}"):
                    args.append(self.iff())
                    while self.accept(","):
                        args.append(self.iff())
                    self.expect("}")
                return (TangleD if t.text == "tangle_d" else TangleC)(tuple(args))
            if t.text in _KEYWORDS:
                self.i -= 1
                self.fail(_PRIMARY_START)
            return Var(t.text)
        if self.accept("("):
            f = self.iff()
            self.expect(")")
            return f
        self.fail(_PRIMARY_START)


def parse(text: str) -> Formula:
    """Parse the ASCII formula grammar into a surface formula tree."""
    return _Parser(text).parse()


# ---------------------------------------------------------------- printer

_PREC = {Iff: 1, Implies: 2, Or: 3, And: 4}
_UNARY_TEXT = {Neg: "~", Dia: "<>", Box: "[]", StarDia: "<*>", StarBox: "[*]"}
_BINARY_TEXT = {Iff: "<->", Implies: "->", Or: "|", And: "&"}


def to_text(f: Formula) -> str:
    """Canonical printer; ``parse(to_text(f)) == f`` for every tree."""
    return _fmt(f, 0, True)


def _fmt(f, ctx, tail):
    # ``tail``: nothing follows this subterm before the enclosing bracket ends,
    # so a binder may be printed without parentheses.
    if isinstance(f, Top):
        return "T"
    if isinstance(f, Bot):
        return "F"
    if isinstance(f, Var):
        return f.name
    if isinstance(f, _UNARY):
        return _UNARY_TEXT[type(f)] + _fmt(f.child, 5, tail)
    if isinstance(f, _BINDERS):
        kw = "nu" if isinstance(f, Nu) else "mu"
        s = f"{kw} {f.var}. {_fmt(f.body, 0, True)}"
        return s if tail else f"({s})"
    if isinstance(f, _TANGLES):
        kw = "tangle_d" if isinstance(f, TangleD) else "tangle_c"
        return kw + "{" + ", ".join(_fmt(a, 0, True) for a in f.args) + "}"
    p = _PREC[type(f)]
    paren = p < ctx
    inner_tail = True if paren else tail
    if isinstance(f, Implies):
        left, right = _fmt(f.left, p + 1, False), _fmt(f.right, p, inner_tail)
    else:
        left, right = _fmt(f.left, p, False), _fmt(f.right, p + 1, inner_tail)
    s = f"{left} {_BINARY_TEXT[type(f)]} {right}"
    return f"({s})" if paren else s


# ---------------------------------------------------------------- free variables, subformulas

def free_vars(f: Formula) -> frozenset:
    if isinstance(f, Var):
        return frozenset({f.name})
    if isinstance(f, _BINDERS):
        return free_vars(f.body) - {f.var}
    out = frozenset()
    for c in _children(f):
        out |= free_vars(c)
    return out


def subformulas(f: Formula) -> frozenset:
    """All subformulas of ``f``, ``f`` included."""
    out = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if g in out:
            continue
        out.add(g)
        stack.extend(_children(g))
    return frozenset(out)


# ---------------------------------------------------------------- renaming

def _fresh(base, used):
    k = 1
    while f"{base}_{k}" in used:
        k += 1
    name = f"{base}_{k}"
    used.add(name)
    return name


def alpha_normalize(f: Formula) -> Formula:
    """Rename binders so that they are pairwise distinct and never free.

    Names already satisfying the condition are kept, so the function is the
    identity on alpha-normal input.
    """
    used = set(free_vars(f))
    return _rename(f, {}, used)


def _rename(f, env, used):
    if isinstance(f, Var):
        name = env.get(f.name, f.name)
        return f if name == f.name else Var(name)
    if isinstance(f, (Top, Bot)):
        return f
    if isinstance(f, _BINDERS):
        new = f.var if f.var not in used else _fresh(f.var, used)
        used.add(new)
        return type(f)(new, _rename(f.body, {**env, f.var: new}, used))
    if isinstance(f, _UNARY):
        return type(f)(_rename(f.child, env, used))
    if isinstance(f, _BINARY):
        left = _rename(f.left, env, used)
        return type(f)(left, _rename(f.right, env, used))
    return type(f)(tuple(_rename(a, env, used) for a in f.args))


def alpha_equal(f: Formula, g: Formula) -> bool:
    return _alpha_eq(f, g, {}, {})


def _alpha_eq(f, g, left, right):
    if type(f) is not type(g):
        return False
    if isinstance(f, Var):
        a, b = left.get(f.name), right.get(g.name)
        if a is None and b is None:
            return f.name == g.name
        return a == b
    if isinstance(f, (Top, Bot)):
        return True
    if isinstance(f, _BINDERS):
        mark = object()
        return _alpha_eq(f.body, g.body, {**left, f.var: mark}, {**right, g.var: mark})
    cf, cg = _children(f), _children(g)
    return len(cf) == len(cg) and all(_alpha_eq(a, b, left, right) for a, b in zip(cf, cg))


def _canonical(f):
    """Alpha-invariant key: binders renamed by depth-first position."""
    counter = [0]

    def go(g, env):
        if isinstance(g, Var):
            return Var(env.get(g.name, g.name))
        if isinstance(g, (Top, Bot)):
            return g
        if isinstance(g, _BINDERS):
            name = f"#{counter[0]}"
            counter[0] += 1
            return type(g)(name, go(g.body, {**env, g.var: name}))
        if isinstance(g, _UNARY):
            return type(g)(go(g.child, env))
        if isinstance(g, _BINARY):
            left = go(g.left, env)
            return type(g)(left, go(g.right, env))
        return type(g)(tuple(go(a, env) for a in g.args))

    return go(f, {})


# ---------------------------------------------------------------- substitution

def _replace_free(f, name, repl):
    if isinstance(f, Var):
        return repl if f.name == name else f
    if isinstance(f, (Top, Bot)):
        return f
    if isinstance(f, _BINDERS):
        if f.var == name:
            return f
        return type(f)(f.var, _replace_free(f.body, name, repl))
    if isinstance(f, _UNARY):
        return type(f)(_replace_free(f.child, name, repl))
    if isinstance(f, _BINARY):
        return type(f)(_replace_free(f.left, name, repl), _replace_free(f.right, name, repl))
    return type(f)(tuple(_replace_free(a, name, repl) for a in f.args))


def substitute(f: Formula, binding: Mapping[str, Formula]) -> Formula:
    """Capture-avoiding simultaneous substitution of free variables.

    The result is alpha-normal; binders that would capture a free variable of
    a substituted formula are renamed first.
    """
    used = set(_all_names(f))
    for v in binding.values():
        used |= _all_names(v)

    def go(g, sub):
        if not sub:
            return g
        if isinstance(g, Var):
            return sub.get(g.name, g)
        if isinstance(g, (Top, Bot)):
            return g
        if isinstance(g, _BINDERS):
            inner = {k: v for k, v in sub.items() if k != g.var}
            live = free_vars(g.body)
            inner = {k: v for k, v in inner.items() if k in live}
            if any(g.var in free_vars(v) for v in inner.values()):
                new = _fresh(g.var, used)
                inner[g.var] = Var(new)
                return type(g)(new, go(g.body, inner))
            return type(g)(g.var, go(g.body, inner))
        if isinstance(g, _UNARY):
            return type(g)(go(g.child, sub))
        if isinstance(g, _BINARY):
            return type(g)(go(g.left, sub), go(g.right, sub))
        return type(g)(tuple(go(a, sub) for a in g.args))

    return alpha_normalize(go(f, dict(binding)))


# ---------------------------------------------------------------- normalization

def normalize(f: Formula) -> Formula:
    """Expand all sugar, alpha-normalize and check positivity of every binder."""
    used = _all_names(f)
    core = alpha_normalize(_expand(f, used))
    _check_positive(core, {}, [])
    return core


def _conj(parts):
    if not parts:
        return Top()
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def _expand(f, used):
    if isinstance(f, (Top, Var)):
        return f
    if isinstance(f, Bot):
        return Neg(Top())
    if isinstance(f, Neg):
        return Neg(_expand(f.child, used))
    if isinstance(f, Dia):
        return Dia(_expand(f.child, used))
    if isinstance(f, Box):
        return box(_expand(f.child, used))
    if isinstance(f, StarDia):
        return star_dia(_expand(f.child, used))
    if isinstance(f, StarBox):
        return star_box(_expand(f.child, used))
    if isinstance(f, And):
        return And(_expand(f.left, used), _expand(f.right, used))
    if isinstance(f, Or):
        return lor(_expand(f.left, used), _expand(f.right, used))
    if isinstance(f, Implies):
        return implies(_expand(f.left, used), _expand(f.right, used))
    if isinstance(f, Iff):
        return iff(_expand(f.left, used), _expand(f.right, used))
    if isinstance(f, Nu):
        return Nu(f.var, _expand(f.body, used))
    if isinstance(f, Mu):
        body = _replace_free(_expand(f.body, used), f.var, Neg(Var(f.var)))
        return Neg(Nu(f.var, Neg(body)))
    if isinstance(f, _TANGLES):
        x = "X" if "X" not in used else _fresh("X", used)
        used.add(x)
        wrap = Dia if isinstance(f, TangleD) else star_dia
        parts = [wrap(And(Var(x), _expand(a, used))) for a in f.args]
        return Nu(x, _conj(parts))
    raise TypeError(f"not a formula: {f!r}")


def _check_positive(f, parity, path):
    if isinstance(f, Var):
        if parity.get(f.name, 0) % 2:
            raise NotPositive(f.name, path)
        return
    if isinstance(f, Top):
        return
    if isinstance(f, Neg):
        flipped = {k: v + 1 for k, v in parity.items()}
        _check_positive(f.child, flipped, path + ["neg"])
    elif isinstance(f, Dia):
        _check_positive(f.child, parity, path + ["dia"])
    elif isinstance(f, And):
        _check_positive(f.left, parity, path + ["left"])
        _check_positive(f.right, parity, path + ["right"])
    elif isinstance(f, Nu):
        _check_positive(f.body, {**parity, f.var: 0}, path + [f"nu {f.var}"])


# ---------------------------------------------------------------- Sigma closure sets
#
# A prefix is a word over N (negation) and C (the closure modality <*>).
# Rewrites: NN -> '', CC -> C, CNCNCNC -> CNC. The last rule is the completion
# of (CN)^4 -> (CN)^2 against NN -> ''; it leaves exactly 14 normal forms.

_REWRITES = (("NN", ""), ("CC", "C"), ("CNCNCNC", "CNC"))


def normal_prefix(word: str) -> str:
    changed = True
    while changed:
        changed = False
        for lhs, rhs in _REWRITES:
            if lhs in word:
                word = word.replace(lhs, rhs, 1)
                changed = True
    return word


def _all_normal_prefixes():
    seen, frontier = {""}, [""]
    while frontier:
        nxt = []
        for w in frontier:
            for ch in "NC":
                v = normal_prefix(ch + w)
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    return tuple(sorted(seen, key=lambda s: (len(s), s)))


PREFIX_NORMAL_FORMS = _all_normal_prefixes()


def _star_operand(f):
    # <*>a in core form is Neg(And(Neg(a), Neg(Dia(a')))) with a ~alpha a'.
    if isinstance(f, Neg) and isinstance(f.child, And):
        left, right = f.child.left, f.child.right
        if (isinstance(left, Neg) and isinstance(right, Neg) and isinstance(right.child, Dia)
                and alpha_equal(left.child, right.child.child)):
            return left.child
    return None


def decompose(f: Formula) -> tuple[str, Formula]:
    """Split a core formula into a normal N/C prefix and the remaining base."""
    word = []
    while True:
        inner = _star_operand(f)
        if inner is not None:
            word.append("C")
            f = inner
        elif isinstance(f, Neg):
            word.append("N")
            f = f.child
        else:
            break
    return normal_prefix("".join(word)), f


def materialize(prefix: str, base: Formula) -> Formula:
    f = base
    for ch in reversed(prefix):
        f = Neg(f) if ch == "N" else star_dia(f)
    return alpha_normalize(f)


class SigmaSet:
    """Finite formula set closed under subformulas, negation and <*>.

    Members are kept as ``(prefix, base)`` pairs with ``prefix`` in normal
    form; two members are the same when their prefixes agree and their bases
    are alpha-equivalent.
    """

    def __init__(self, seed, members):
        self.seed = seed
        self._members = dict(members)   # (prefix, canonical base) -> (prefix, base)

    def __len__(self):
        return len(self._members)

    def __iter__(self):
        return iter(self.pairs())

    def pairs(self):
        return sorted(self._members.values(), key=lambda pb: (to_text(pb[1]), len(pb[0]), pb[0]))

    def formulas(self):
        return [materialize(p, b) for p, b in self.pairs()]

    def bases(self):
        seen = {}
        for p, b in self._members.values():
            seen.setdefault(_canonical(b), b)
        return list(seen.values())

    def __contains__(self, f):
        p, b = decompose(normalize(f))
        return (p, _canonical(b)) in self._members

    def contains_pair(self, prefix, base):
        return (normal_prefix(prefix), _canonical(base)) in self._members


def closure_set(seed: Formula) -> SigmaSet:
    """Smallest Sigma containing ``seed`` and ``T``, closed under subformulas
    and (modulo prefix normalization) under negation and <*>."""
    seed = normalize(seed) if not is_core(seed) else seed
    members = {}
    stack = []

    def add(prefix, base):
        key = (prefix, _canonical(base))
        if key not in members:
            members[key] = (prefix, base)
            stack.append((prefix, base))

    for s in sorted(subformulas(seed) | {Top()}, key=to_text):
        add(*decompose(s))
    while stack:
        prefix, base = stack.pop()
        for k in range(1, len(prefix)):
            add(prefix[k:], base)
        for sub in subformulas(base):
            if sub != base:
                add(*decompose(sub))
        add(normal_prefix("N" + prefix), base)
        add(normal_prefix("C" + prefix), base)
    return SigmaSet(seed, members)

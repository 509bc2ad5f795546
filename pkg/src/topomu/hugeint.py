"""Exact non-negative integers in hereditary base 2.

A number is stored as the set of exponents of its binary digits, and each
exponent is itself such a number. Towers like ``2^(11 + 2^(11 + 2^11))`` stay
small in this form, and comparison, addition and multiplication remain exact.
"""

from __future__ import annotations

from functools import total_ordering

# ints with more bits than this are never materialized by int()
MAX_EXACT_BITS = 1 << 16


@total_ordering
class HugeInt:
    __slots__ = ("exps", "_hash")

    def __init__(self, exps=()):
        # exps: strictly decreasing tuple of HugeInt
        self.exps = tuple(exps)
        self._hash = None

    @classmethod
    def of(cls, n) -> "HugeInt":
        if isinstance(n, HugeInt):
            return n
        if n < 0:
            raise ValueError("HugeInt is non-negative")
        exps = []
        bit = n.bit_length() - 1
        while bit >= 0:
            if (n >> bit) & 1:
                exps.append(_small(bit))
            bit -= 1
        return cls(exps)

    @classmethod
    def pow2(cls, exponent) -> "HugeInt":
        return cls((cls.of(exponent),))

    def is_zero(self):
        return not self.exps

    def _cmp(self, other):
        for a, b in zip(self.exps, other.exps):
            c = a._cmp(b)
            if c:
                return c
        return (len(self.exps) > len(other.exps)) - (len(self.exps) < len(other.exps))

    def __eq__(self, other):
        if isinstance(other, int):
            other = HugeInt.of(other) if other >= 0 else None
        if not isinstance(other, HugeInt):
            return NotImplemented
        return self._cmp(other) == 0

    def __lt__(self, other):
        if isinstance(other, int):
            if other < 0:
                return False
            other = HugeInt.of(other)
        return self._cmp(other) < 0

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.exps)
        return self._hash

    def __add__(self, other):
        other = HugeInt.of(other)
        pending = list(self.exps) + list(other.exps)
        while True:
            pending.sort(reverse=True)
            merged = []
            carried = False
            i = 0
            while i < len(pending):
                if i + 1 < len(pending) and pending[i] == pending[i + 1]:
                    merged.append(pending[i] + ONE)
                    i += 2
                    carried = True
                else:
                    merged.append(pending[i])
                    i += 1
            pending = merged
            if not carried:
                return HugeInt(pending)

    __radd__ = __add__

    def __mul__(self, other):
        other = HugeInt.of(other)
        total = ZERO
        for a in self.exps:
            for b in other.exps:
                total = total + HugeInt((a + b,))
        return total

    __rmul__ = __mul__

    def bit_length_exceeds(self, limit: int) -> bool:
        if not self.exps:
            return False
        top = self.exps[0]
        return not top < limit

    def __int__(self):
        if self.bit_length_exceeds(MAX_EXACT_BITS):
            raise OverflowError("number too large to materialize")
        return sum(1 << int(e) for e in self.exps)

    def exact(self):
        """Plain ``int`` when it fits, else ``None``."""
        try:
            return int(self)
        except OverflowError:
            return None

    def __str__(self):
        n = self.exact()
        if n is not None and n.bit_length() <= 4000:
            return str(n)
        return " + ".join(_term(e) for e in self.exps)

    def __repr__(self):
        return f"HugeInt({self})"


def _term(e):
    if e == 0:
        return "1"
    inner = str(e)
    return f"2^{inner}" if inner.isdigit() else f"2^({inner})"


_SMALL = {}


def _small(n):
    h = _SMALL.get(n)
    if h is None:
        h = HugeInt.of(n)
        _SMALL[n] = h
    return h


ZERO = HugeInt(())
ONE = HugeInt((ZERO,))
_SMALL[0] = ZERO
_SMALL[1] = ONE

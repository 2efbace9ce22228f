"""Products of finite groups, their finite quotients, and clopen subsets.

Elements of ``Γ = ∏ Γ_i`` are handled through finite prefixes (tuples of
element indices, coordinate 0 first) and through :class:`Point`, an
eventually periodic infinite word. The listed factors of a :class:`GroupSpec`
repeat periodically, so a finite list describes an infinite product.

Words of depth ℓ are ranked in mixed radix with coordinate 0 most
significant; every bitset below uses that order.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np

QUOTIENT_CAP = 2**22


class GroupSpecError(ValueError):
    """Malformed group description."""


class InsufficientDepth(ValueError):
    """A prefix is shorter than the depth an operation needs."""


class QuotientTooLarge(ValueError):
    """A finite quotient would exceed :data:`QUOTIENT_CAP` elements."""


class SpecMismatch(ValueError):
    """Clopen sets over different groups were combined."""


@dataclass(frozen=True)
class Factor:
    """A finite group given by its multiplication table (``table[a][b] = a·b``)."""

    table: tuple
    kind: str = "table"

    @classmethod
    def cyclic(cls, order: int) -> "Factor":
        if order < 2:
            raise GroupSpecError(f"factor order must be at least 2, got {order}")
        rows = tuple(tuple((a + b) % order for b in range(order)) for a in range(order))
        return cls(rows, "cyclic")

    @classmethod
    def from_table(cls, rows) -> "Factor":
        table = tuple(tuple(int(v) for v in row) for row in rows)
        _validate_table(table)
        return cls(table, "table")

    @property
    def order(self) -> int:
        return len(self.table)

    @cached_property
    def array(self) -> np.ndarray:
        return np.array(self.table, dtype=np.int64)

    @cached_property
    def identity(self) -> int:
        return next(e for e in range(self.order) if self.table[e][e] == e)

    @cached_property
    def inverses(self) -> tuple:
        e = self.identity
        return tuple(self.table[a].index(e) for a in range(self.order))

    def to_json(self) -> dict:
        if self.kind == "cyclic":
            return {"type": "cyclic", "order": self.order}
        return {"type": "table", "table": [list(r) for r in self.table]}


def _validate_table(table) -> None:
    m = len(table)
    if m < 2:
        raise GroupSpecError(f"factor order must be at least 2, got {m}")
    full = set(range(m))
    for row in table:
        if len(row) != m or set(row) != full:
            raise GroupSpecError("multiplication table rows must be permutations of the elements")
    for b in range(m):
        if {table[a][b] for a in range(m)} != full:
            raise GroupSpecError("multiplication table columns must be permutations of the elements")
    ids = [e for e in range(m) if all(table[e][a] == a and table[a][e] == a for a in range(m))]
    if not ids:
        raise GroupSpecError("multiplication table has no identity")
    if m**3 <= 262144:
        triples = ((a, b, c) for a in range(m) for b in range(m) for c in range(m))
    else:
        rng = random.Random(0)
        triples = ((rng.randrange(m), rng.randrange(m), rng.randrange(m)) for _ in range(100000))
    for a, b, c in triples:
        if table[table[a][b]][c] != table[a][table[b][c]]:
            raise GroupSpecError(f"multiplication table is not associative at {(a, b, c)}")


@dataclass(frozen=True)
class GroupSpec:
    """``Γ = ∏_{i<ω} Γ_i`` with ``Γ_i = factors[i % len(factors)]``."""

    factors: tuple

    def __post_init__(self):
        if not self.factors:
            raise GroupSpecError("a group spec needs at least one factor")

    @classmethod
    def cyclic(cls, *orders: int) -> "GroupSpec":
        return cls(tuple(Factor.cyclic(m) for m in orders))

    @classmethod
    def from_json(cls, data: dict) -> "GroupSpec":
        try:
            items = data["factors"]
        except (KeyError, TypeError):
            raise GroupSpecError("group JSON needs a 'factors' list") from None
        factors = []
        for item in items:
            kind = item.get("type")
            if kind == "cyclic":
                factors.append(Factor.cyclic(int(item["order"])))
            elif kind == "table":
                factors.append(Factor.from_table(item["table"]))
            else:
                raise GroupSpecError(f"unknown factor type {kind!r}")
        return cls(tuple(factors))

    def to_json(self) -> dict:
        return {"factors": [f.to_json() for f in self.factors]}

    def factor(self, i: int) -> Factor:
        return self.factors[i % len(self.factors)]

    def orders(self, depth: int) -> list:
        return [self.factor(i).order for i in range(depth)]

    def quotient_size(self, depth: int) -> int:
        return math.prod(self.orders(depth))

    def max_depth(self, cap: int = QUOTIENT_CAP) -> int:
        """Largest depth whose quotient has at most ``cap`` elements."""
        depth, size = 0, 1
        while size * self.factor(depth).order <= cap:
            size *= self.factor(depth).order
            depth += 1
        return depth

    def check_word(self, word: Sequence[int]) -> tuple:
        word = tuple(int(a) for a in word)
        for i, a in enumerate(word):
            if not 0 <= a < self.factor(i).order:
                raise GroupSpecError(f"entry {a} at coordinate {i} outside factor of order {self.factor(i).order}")
        return word

    def identity(self, depth: int) -> tuple:
        return tuple(self.factor(i).identity for i in range(depth))

    def multiply(self, x: Sequence[int], y: Sequence[int]) -> tuple:
        """Coordinatewise product of two prefixes, truncated to the shorter one."""
        return tuple(self.factor(i).table[a][b] for i, (a, b) in enumerate(zip(x, y)))

    def inverse(self, x: Sequence[int]) -> tuple:
        return tuple(self.factor(i).inverses[a] for i, a in enumerate(x))

    def rank(self, word: Sequence[int]) -> int:
        r = 0
        for i, a in enumerate(word):
            r = r * self.factor(i).order + a
        return r

    def unrank(self, r: int, depth: int) -> tuple:
        out = []
        for i in reversed(range(depth)):
            m = self.factor(i).order
            r, a = divmod(r, m)
            out.append(a)
        return tuple(reversed(out))

    def quotient(self, depth: int) -> "Quotient":
        return _quotient(self, depth)


def project(x: Sequence[int], depth: int) -> tuple:
    """Image of a prefix under the canonical projection onto depth ``depth``."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    if len(x) < depth:
        raise InsufficientDepth(f"prefix of depth {len(x)} cannot be projected to depth {depth}")
    return tuple(x[:depth])


@dataclass(frozen=True)
class Point:
    """An eventually periodic element of ``Γ``: ``head`` followed by ``tail`` repeated."""

    head: tuple = ()
    tail: tuple = (0,)

    def __post_init__(self):
        object.__setattr__(self, "head", tuple(int(a) for a in self.head))
        object.__setattr__(self, "tail", tuple(int(a) for a in self.tail))
        if not self.tail:
            raise ValueError("a point needs a non-empty periodic tail")

    def coordinate(self, i: int) -> int:
        if i < len(self.head):
            return self.head[i]
        return self.tail[(i - len(self.head)) % len(self.tail)]

    def prefix(self, depth: int) -> tuple:
        return tuple(self.coordinate(i) for i in range(depth))

    @property
    def materialized_depth(self) -> int:
        return len(self.head)

    def normalized(self) -> "Point":
        """Same point with the shortest period and then the shortest head."""
        tail = self.tail
        for p in range(1, len(tail) + 1):
            if len(tail) % p == 0 and tail == tail[:p] * (len(tail) // p):
                tail = tail[:p]
                break
        head = self.head
        while head and head[-1] == tail[-1]:
            tail = (head[-1],) + tail[:-1]
            head = head[:-1]
        return Point(head, tail)

    def to_json(self) -> dict:
        return {"head": list(self.head), "tail": list(self.tail)}

    @classmethod
    def from_json(cls, data) -> "Point":
        if isinstance(data, list):
            return cls(tuple(data))
        return cls(tuple(data.get("head", ())), tuple(data.get("tail", (0,))))


def as_prefix(x, depth: int) -> tuple:
    """Depth-``depth`` prefix of a finite word or of anything with ``prefix()``."""
    if hasattr(x, "prefix"):
        return tuple(x.prefix(depth))
    return project(tuple(x), depth)


def _mixed_perm(tables: list) -> np.ndarray:
    # tables[i] maps digit x_i -> digit of the image at coordinate i
    perm = np.zeros(1, dtype=np.int64)
    for row in tables:
        perm = (perm[:, None] * len(row) + np.asarray(row, dtype=np.int64)[None, :]).ravel()
    return perm


class Quotient:
    """The finite group ``∏_{i<depth} Γ_i`` with rank-level permutations."""

    def __init__(self, spec: GroupSpec, depth: int):
        size = spec.quotient_size(depth)
        if size > QUOTIENT_CAP:
            raise QuotientTooLarge(f"quotient at depth {depth} has {size} elements (cap {QUOTIENT_CAP})")
        self.spec = spec
        self.depth = depth
        self.size = size
        self.orders = spec.orders(depth)

    def _rows(self, word, lo, hi, side):
        rows = []
        for i in range(lo, hi):
            t = self.spec.factor(i).array
            rows.append(t[word[i]] if side == "left" else t[:, word[i]])
        return rows

    def left_perm(self, word: Sequence[int]) -> np.ndarray:
        """``perm[rank(x)] = rank(word·x)``."""
        word = project(word, self.depth)
        return _mixed_perm(self._rows(word, 0, self.depth, "left"))

    def right_perm(self, word: Sequence[int]) -> np.ndarray:
        """``perm[rank(x)] = rank(x·word)``."""
        word = project(word, self.depth)
        return _mixed_perm(self._rows(word, 0, self.depth, "right"))

    @cached_property
    def split(self) -> int:
        """Number of leading coordinates in the high half of a rank."""
        best, best_gap = 0, float("inf")
        for h in range(self.depth + 1):
            hi = math.prod(self.orders[:h])
            gap = abs(math.log(hi) - math.log(self.size / hi)) if self.size > 1 else 0
            if gap < best_gap:
                best, best_gap = h, gap
        return best

    def left_tables(self, words: Iterable[Sequence[int]]):
        """Split left-multiplication tables for the kernels.

        Returns ``(lh, ll, r_lo)`` with ``rank(w_p·x) = lh[p, x // r_lo] * r_lo + ll[p, x % r_lo]``.
        """
        h = self.split
        r_lo = math.prod(self.orders[h:])
        r_hi = self.size // r_lo
        words = [project(w, self.depth) for w in words]
        lh = np.empty((len(words), r_hi), dtype=np.int32)
        ll = np.empty((len(words), r_lo), dtype=np.int32)
        for p, w in enumerate(words):
            lh[p] = _mixed_perm(self._rows(w, 0, h, "left"))
            ll[p] = _mixed_perm(self._rows(w, h, self.depth, "left"))
        return lh, ll, r_lo


@lru_cache(maxsize=64)
def _quotient(spec: GroupSpec, depth: int) -> Quotient:
    return Quotient(spec, depth)


class ClopenSet:
    """A clopen subset of ``Γ``: a union of depth-``depth`` cylinders.

    Stored in canonical form, meaning no shallower depth describes the same
    set; two clopen sets are equal iff their canonical bitsets agree.
    """

    __slots__ = ("spec", "depth", "bits", "_hash")

    def __init__(self, spec: GroupSpec, depth: int, bits):
        bits = np.asarray(bits, dtype=bool)
        size = spec.quotient_size(depth)
        if bits.shape != (size,):
            raise ValueError(f"bitset of length {bits.shape} does not match quotient size {size}")
        while depth > 0:
            m = spec.factor(depth - 1).order
            rows = bits.reshape(-1, m)
            if not (rows == rows[:, :1]).all():
                break
            bits = rows[:, 0]
            depth -= 1
        bits = np.array(bits, dtype=bool)
        bits.flags.writeable = False
        self.spec = spec
        self.depth = depth
        self.bits = bits
        self._hash = None

    @classmethod
    def empty(cls, spec: GroupSpec) -> "ClopenSet":
        return cls(spec, 0, np.zeros(1, dtype=bool))

    @classmethod
    def full(cls, spec: GroupSpec) -> "ClopenSet":
        return cls(spec, 0, np.ones(1, dtype=bool))

    @classmethod
    def cylinder(cls, spec: GroupSpec, word: Sequence[int]) -> "ClopenSet":
        word = spec.check_word(word)
        bits = np.zeros(spec.quotient_size(len(word)), dtype=bool)
        bits[spec.rank(word)] = True
        return cls(spec, len(word), bits)

    @classmethod
    def from_members(cls, spec: GroupSpec, depth: int, ranks: Iterable[int]) -> "ClopenSet":
        bits = np.zeros(spec.quotient_size(depth), dtype=bool)
        idx = np.fromiter((int(r) for r in ranks), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= bits.size):
            raise ValueError("member rank out of range")
        bits[idx] = True
        return cls(spec, depth, bits)

    @classmethod
    def from_words(cls, spec: GroupSpec, depth: int, words: Iterable[Sequence[int]]) -> "ClopenSet":
        return cls.from_members(spec, depth, (spec.rank(project(w, depth)) for w in words))

    @classmethod
    def from_json(cls, spec: GroupSpec, data: dict) -> "ClopenSet":
        return cls.from_members(spec, int(data["depth"]), data["members"])

    def to_json(self) -> dict:
        return {"depth": self.depth, "members": [int(r) for r in np.flatnonzero(self.bits)]}

    def lift(self, depth: int) -> np.ndarray:
        """Bitset of this set over the quotient at a depth ≥ its own."""
        if depth < self.depth:
            raise InsufficientDepth(f"cannot lift a depth-{self.depth} set to depth {depth}")
        size = self.spec.quotient_size(depth)
        if size > QUOTIENT_CAP:
            raise QuotientTooLarge(f"quotient at depth {depth} has {size} elements")
        return np.repeat(self.bits, size // self.bits.size)

    def _aligned(self, other: "ClopenSet"):
        if self.spec != other.spec:
            raise SpecMismatch("clopen sets live in different groups")
        d = max(self.depth, other.depth)
        return d, self.lift(d), other.lift(d)

    def __or__(self, other):
        d, a, b = self._aligned(other)
        return ClopenSet(self.spec, d, a | b)

    def __and__(self, other):
        d, a, b = self._aligned(other)
        return ClopenSet(self.spec, d, a & b)

    def __sub__(self, other):
        d, a, b = self._aligned(other)
        return ClopenSet(self.spec, d, a & ~b)

    def __invert__(self):
        return ClopenSet(self.spec, self.depth, ~self.bits)

    union = __or__
    intersection = __and__
    difference = __sub__

    def complement(self) -> "ClopenSet":
        return ~self

    def __eq__(self, other):
        if not isinstance(other, ClopenSet):
            return NotImplemented
        return (self.spec == other.spec and self.depth == other.depth
                and np.array_equal(self.bits, other.bits))

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.depth, self.bits.tobytes()))
        return self._hash

    def __repr__(self):
        return f"ClopenSet(depth={self.depth}, count={self.count})"

    @property
    def count(self) -> int:
        """Number of depth-``depth`` cylinders in the set."""
        return int(self.bits.sum())

    def is_empty(self) -> bool:
        return not self.bits.any()

    def is_full(self) -> bool:
        return bool(self.bits.all())

    def issubset(self, other: "ClopenSet") -> bool:
        return (self - other).is_empty()

    def isdisjoint(self, other: "ClopenSet") -> bool:
        return (self & other).is_empty()

    def members(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    def contains(self, x) -> bool:
        """Membership of an element given as a prefix (or a :class:`Point`)."""
        word = as_prefix(x, self.depth)
        return bool(self.bits[self.spec.rank(word)])

    __contains__ = contains

    def translate_right(self, gamma) -> "ClopenSet":
        """``{w·γ : w ∈ self}``."""
        g = as_prefix(gamma, self.depth)
        perm = self.spec.quotient(self.depth).right_perm(g)
        out = np.zeros_like(self.bits)
        out[perm] = self.bits
        return ClopenSet(self.spec, self.depth, out)

    def translate_left(self, gamma) -> "ClopenSet":
        """``{γ·w : w ∈ self}``."""
        g = as_prefix(gamma, self.depth)
        perm = self.spec.quotient(self.depth).left_perm(g)
        out = np.zeros_like(self.bits)
        out[perm] = self.bits
        return ClopenSet(self.spec, self.depth, out)


def membership(x, a: ClopenSet) -> bool:
    return a.contains(x)


def cylinder_translate_within(spec: GroupSpec, word: Sequence[int], x, target: ClopenSet) -> bool:
    """Whether the cylinder of ``word`` right-translated by ``x`` lies inside ``target``."""
    depth = target.depth
    xs = as_prefix(x, max(depth, len(word)))
    if len(word) >= depth:
        return target.contains(spec.multiply(word[:depth], xs[:depth]))
    head = tuple(word)
    rest = spec.orders(depth)[len(head):]
    for tail in np.ndindex(*rest) if rest else [()]:
        if not target.contains(spec.multiply(head + tuple(tail), xs[:depth])):
            return False
    return True

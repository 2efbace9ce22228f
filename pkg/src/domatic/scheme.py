"""Cantor schemes of cylinders in a profinite group.

A scheme assigns to every binary string s a basic cylinder ``U_s`` (given by
its word) and a marked point ``q_s ∈ U_s``. Branches are extended on demand;
the set of marked points plays the role of S, and the branch limits form a
perfect subset of its closure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .profinite import ClopenSet, GroupSpec, Point


class SchemeError(ValueError):
    """Scheme cannot be materialized or is malformed."""


@dataclass(frozen=True)
class SchemeNode:
    word: tuple
    point: Point

    @property
    def depth(self) -> int:
        return len(self.word)


@dataclass(frozen=True)
class Violation:
    node: str
    reason: str

    def to_json(self):
        return {"node": self.node, "reason": self.reason}


def _check_bits(s: str) -> str:
    if any(ch not in "01" for ch in s):
        raise SchemeError(f"scheme node {s!r} is not a binary string")
    return s


class LinearScheme:
    """Scheme whose cylinders spell out the branch bit by bit.

    Bit b of s becomes the element ``b ^ flip`` of the next factor, followed by
    ``stride - 1`` identity-index (0) entries; ``prefix`` is prepended and the
    marked point continues the word with ``fill`` repeated.
    """

    def __init__(self, spec: GroupSpec, prefix=(), stride: int = 1, flip: bool = False, fill: int = 0,
                 name: str = "linear"):
        if stride < 1:
            raise SchemeError("stride must be at least 1")
        self.spec = spec
        self.prefix = spec.check_word(prefix)
        self.stride = stride
        self.flip = bool(flip)
        self.fill = int(fill)
        self.name = name
        if self.fill not in (0, 1):
            raise SchemeError("fill must be 0 or 1")

    @classmethod
    def dyadic(cls, spec: GroupSpec) -> "LinearScheme":
        return cls(spec, name="dyadic")

    @classmethod
    def complement(cls, spec: GroupSpec) -> "LinearScheme":
        return cls(spec, flip=True, fill=1, name="complement")

    def _bits_word(self, s: str) -> list:
        out = []
        for b in s:
            out.append(int(b) ^ self.flip)
            out.extend([0] * (self.stride - 1))
        return out

    def node(self, s: str) -> SchemeNode:
        word = tuple(self.prefix) + tuple(self._bits_word(_check_bits(s)))
        return SchemeNode(word, Point(word, (self.fill,)))

    def limit(self, s: str) -> Point:
        """Limit point of the branch ``s⁀0^ω``."""
        head = self.node(s).word
        tail = (int(self.flip),) + (0,) * (self.stride - 1)
        return Point(head, tail)

    def materialized(self, s: str) -> bool:
        return True

    def to_json(self) -> dict:
        return {"type": "linear", "name": self.name, "prefix": list(self.prefix), "stride": self.stride,
                "flip": self.flip, "fill": self.fill}


class ExplicitScheme:
    """Scheme given node by node to a finite depth; it cannot be extended."""

    def __init__(self, spec: GroupSpec, nodes: dict):
        self.spec = spec
        self.nodes = {}
        for s, nd in nodes.items():
            word = spec.check_word(nd["word"]) if isinstance(nd, dict) else spec.check_word(nd.word)
            pt = Point.from_json(nd["point"]) if isinstance(nd, dict) else nd.point
            self.nodes[_check_bits(s)] = SchemeNode(word, pt)
        if "" not in self.nodes:
            raise SchemeError("explicit scheme needs a root node ''")
        self.name = "explicit"

    def node(self, s: str) -> SchemeNode:
        try:
            return self.nodes[s]
        except KeyError:
            raise SchemeError(f"scheme node {s!r} is not materialized and cannot be extended") from None

    def materialized(self, s: str) -> bool:
        return s in self.nodes

    def complete_depth(self) -> int:
        """Largest d such that every binary string of length ≤ d is materialized."""
        d, level = 0, [""]
        while True:
            nxt = [s + b for s in level for b in "01"]
            if not all(t in self.nodes for t in nxt):
                return d
            d, level = d + 1, nxt

    def limit(self, s: str) -> Point:
        # best available approximation: the marked point of the deepest node on s⁀0⁀0…
        t = s
        while t + "0" in self.nodes:
            t += "0"
        return self.node(t).point

    def to_json(self) -> dict:
        return {"type": "explicit",
                "nodes": {s: {"word": list(nd.word), "point": nd.point.to_json()} for s, nd in self.nodes.items()}}


def scheme_from_json(spec: GroupSpec, data: dict):
    kind = data.get("type")
    if kind == "dyadic":
        return LinearScheme.dyadic(spec)
    if kind == "complement":
        return LinearScheme.complement(spec)
    if kind == "linear":
        return LinearScheme(spec, tuple(data.get("prefix", ())), int(data.get("stride", 1)),
                            bool(data.get("flip", False)), int(data.get("fill", 0)), data.get("name", "linear"))
    if kind == "explicit":
        return ExplicitScheme(spec, data["nodes"])
    raise SchemeError(f"unknown scheme type {kind!r}")


def _disjoint_words(a, b) -> bool:
    return any(x != y for x, y in zip(a, b))


def validate_scheme(scheme, depth: int) -> Optional[Violation]:
    """Check nesting, sibling disjointness, q_s ∈ U_s and growing depth below ``depth``.

    Returns None when every node of length ≤ ``depth`` is fine.
    """
    level = [""]
    for d in range(depth + 1):
        nxt = []
        for s in level:
            try:
                nd = scheme.node(s)
            except SchemeError as exc:
                return Violation(s, str(exc))
            if nd.point.prefix(nd.depth) != nd.word:
                return Violation(s, "marked point outside its cylinder")
            if d == depth:
                continue
            try:
                c0, c1 = scheme.node(s + "0"), scheme.node(s + "1")
            except SchemeError as exc:
                return Violation(s, str(exc))
            for t, c in ((s + "0", c0), (s + "1", c1)):
                if c.depth <= nd.depth:
                    return Violation(t, "cylinder depth does not increase")
                if c.word[:nd.depth] != nd.word:
                    return Violation(t, "cylinder not contained in parent")
            if not _disjoint_words(c0.word, c1.word):
                return Violation(s, "sibling cylinders overlap")
            nxt.extend((s + "0", s + "1"))
        level = nxt
    return None


def node_cylinder(scheme, s: str) -> ClopenSet:
    return ClopenSet.cylinder(scheme.spec, scheme.node(s).word)

"""Marked groups with solvable word problem.

Supported kinds: free groups of finite rank, the free group on countably
many generators, the solvable Baumslag-Solitar groups BS(1,n) and free
products of any two supported groups.  Every kind has a normal form for
its elements, so equality, multiplication and inversion are total and
exact.

Letters are signed integers: ``+i`` is the i-th marked generator, ``-i``
its inverse.  Words act on the left: ``(uv)(x) = u(v(x))``.
"""

from __future__ import annotations

import string
from fractions import Fraction
from typing import NamedTuple

from . import _kernels


class GroupError(ValueError):
    """Raised for mixed-group arithmetic and malformed elements."""


class Generator(NamedTuple):
    group_tag: str
    index: int
    sign: int


def _letter_rank(x):
    # +1 < -1 < +2 < -2 < ...
    return 2 * (abs(x) - 1) + (0 if x > 0 else 1)


# ---------------------------------------------------------------------------
# elements


class FreeWord:
    """A freely reduced word; the normal form for free-group elements."""

    __slots__ = ("group", "letters", "_hash")

    def __init__(self, group, letters):
        self.group = group
        self.letters = tuple(letters)
        self._hash = None

    @property
    def generators(self):
        tag = self.group.tag
        return tuple(
            Generator(tag, abs(x), 1 if x > 0 else -1) for x in self.letters
        )

    def is_identity(self):
        return not self.letters

    def inverse(self):
        return FreeWord(self.group, tuple(-x for x in reversed(self.letters)))

    def __mul__(self, other):
        return self.group.multiply(self, other)

    def __invert__(self):
        return self.inverse()

    def __len__(self):
        return len(self.letters)

    def __eq__(self, other):
        return (
            isinstance(other, FreeWord)
            and self.group == other.group
            and self.letters == other.letters
        )

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.group.tag, self.letters))
        return self._hash

    def sort_key(self):
        return (len(self.letters), tuple(_letter_rank(x) for x in self.letters))

    def __repr__(self):
        return f"<{self.group.format(self)}>"


class BSWord:
    """Normal form ``t^p s^m t^-q`` of an element of BS(1,n).

    ``p, q >= 0`` and whenever both are positive ``n`` does not divide
    ``m``; under these constraints the triple is unique.  The rewriting
    that produces it uses the defining relation only in the confluent
    directions ``s t -> t s^n`` and ``t^-1 s -> s^n t^-1``.
    """

    __slots__ = ("group", "p", "m", "q", "_hash")

    def __init__(self, group, p, m, q):
        if p < 0 or q < 0:
            raise GroupError("t-exponents in a BS normal form must be >= 0")
        if p > 0 and q > 0 and m % group.n == 0:
            raise GroupError("BS normal form violates the n-divisibility rule")
        self.group = group
        self.p = p
        self.m = m
        self.q = q
        self._hash = None

    def is_identity(self):
        return self.p == 0 and self.m == 0 and self.q == 0

    def inverse(self):
        return self.group.bs_word(self.q, -self.m, self.p)

    def __mul__(self, other):
        return self.group.multiply(self, other)

    def __invert__(self):
        return self.inverse()

    def triple(self):
        return (self.p, self.m, self.q)

    def __eq__(self, other):
        return (
            isinstance(other, BSWord)
            and self.group == other.group
            and self.triple() == other.triple()
        )

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.group.tag, self.triple()))
        return self._hash

    def sort_key(self):
        return (self.p + self.q + abs(self.m), self.p, self.q, self.m)

    def affine(self):
        """The affine map x -> n^k x + b realizing this element.

        Faithful representation with s: x -> x+1 and t: x -> x/n.
        """
        n = self.group.n
        return (self.q - self.p, Fraction(self.m, n**self.p))

    def __repr__(self):
        return f"<{self.group.format(self)}>"


class ProductWord:
    """Alternating syllable form of a free-product element.

    ``syllables`` is a tuple of ``(side, element)`` pairs, side 0 for the
    left factor and 1 for the right; adjacent syllables have different
    sides and no syllable is a factor identity.
    """

    __slots__ = ("group", "syllables", "_hash")

    def __init__(self, group, syllables):
        self.group = group
        self.syllables = tuple(syllables)
        prev = None
        for side, el in self.syllables:
            if el.is_identity():
                raise GroupError("trivial syllable in a free-product word")
            if side == prev:
                raise GroupError("adjacent syllables from the same factor")
            prev = side
        self._hash = None

    def is_identity(self):
        return not self.syllables

    def inverse(self):
        return ProductWord(
            self.group,
            tuple((side, el.inverse()) for side, el in reversed(self.syllables)),
        )

    def __mul__(self, other):
        return self.group.multiply(self, other)

    def __invert__(self):
        return self.inverse()

    def __len__(self):
        return len(self.syllables)

    def __eq__(self, other):
        return (
            isinstance(other, ProductWord)
            and self.group == other.group
            and self.syllables == other.syllables
        )

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.group.tag, self.syllables))
        return self._hash

    def sort_key(self):
        return (
            sum(el.sort_key()[0] for _, el in self.syllables) or 0,
            tuple((side,) + el.sort_key() for side, el in self.syllables),
        )

    def __repr__(self):
        return f"<{self.group.format(self)}>"


# ---------------------------------------------------------------------------
# marked groups


class MarkedGroup:
    kind = "?"
    tag = "?"

    def identity(self):
        raise NotImplementedError

    def check_same(self, *elems):
        for e in elems:
            if e.group != self:
                raise GroupError(
                    f"element of {e.group.tag} used in {self.tag}"
                )

    def generator_names(self):
        raise NotImplementedError

    @property
    def nlabels(self):
        names = self.generator_names()
        if names is None:
            raise GroupError(f"{self.tag} has unbounded generators")
        return len(names)

    def generator(self, index, sign=1):
        raise NotImplementedError

    def marked_letters(self):
        """The signed single-letter elements, in canonical order."""
        out = []
        for i in range(1, self.nlabels + 1):
            out.append(self.generator(i))
            out.append(self.generator(i, -1))
        return out

    def letters_of(self, elem):
        """Decompose an element into marked letters (written order)."""
        raise NotImplementedError

    def from_letters(self, letters):
        raise NotImplementedError

    def multiply(self, a, b):
        self.check_same(a, b)
        return self.from_letters(
            list(self.letters_of(a)) + list(self.letters_of(b))
        )

    def invert(self, a):
        self.check_same(a)
        return a.inverse()

    def ball(self, radius):
        """All elements of word length <= radius, in normal form.

        Sorted by (length, lexicographic) discovery; no duplicates.
        """
        if radius < 0:
            raise GroupError("radius must be >= 0")
        letters = self.marked_letters()
        seen = {self.identity(): 0}
        frontier = [self.identity()]
        for _ in range(radius):
            nxt = []
            for e in frontier:
                for g in letters:
                    h = self.multiply(e, g)
                    if h not in seen:
                        seen[h] = 0
                        nxt.append(h)
            frontier = nxt
        return sorted(seen, key=lambda e: e.sort_key())

    def descriptor(self):
        raise NotImplementedError

    def parse(self, text):
        """Parse a word from generator-letter tokens.

        Tokens are whitespace separated; a string without whitespace is
        read character by character when all generator names are single
        characters.  Uppercase marks the inverse letter.
        """
        text = text.strip()
        if not text:
            return self.identity()
        names = self.generator_names()
        if names is None:
            names = None  # FreeGroupInf handles token parsing itself
        if " " in text or "\t" in text:
            tokens = text.split()
        else:
            single = names is not None and all(len(n) == 1 for n in names)
            tokens = list(text) if single and len(text) > 1 else [text]
        letters = []
        for tok in tokens:
            letters.append(self._parse_token(tok))
        return self.from_letters(letters)

    def _parse_token(self, tok):
        sign = -1 if tok[0].isupper() else 1
        name = tok.lower()
        names = self.generator_names()
        if names is None or name not in names:
            raise GroupError(f"unknown generator {tok!r} in {self.tag}")
        return sign * (names.index(name) + 1)

    def format(self, elem):
        self.check_same(elem)
        names = self.generator_names()
        parts = []
        for x in self.letters_of(elem):
            name = names[abs(x) - 1]
            parts.append(name.upper() if x < 0 else name)
        return " ".join(parts) if parts else ""

    def __eq__(self, other):
        return isinstance(other, MarkedGroup) and self.tag == other.tag

    def __hash__(self):
        return hash(self.tag)

    def __repr__(self):
        return self.tag


def _free_names(rank):
    if rank <= 26:
        return tuple(string.ascii_lowercase[:rank])
    return tuple(f"x{i}" for i in range(1, rank + 1))


class FreeGroup(MarkedGroup):
    kind = "free"

    def __init__(self, rank):
        if rank < 1:
            raise GroupError("free group rank must be >= 1")
        self.rank = rank
        self.tag = f"F{rank}"
        self._names = _free_names(rank)

    def generator_names(self):
        return self._names

    def identity(self):
        return FreeWord(self, ())

    def generator(self, index, sign=1):
        if not 1 <= index <= self.rank:
            raise GroupError(f"generator index {index} out of range for {self.tag}")
        return FreeWord(self, (sign * index,))

    def letters_of(self, elem):
        self.check_same(elem)
        return elem.letters

    def from_letters(self, letters):
        for x in letters:
            if not 1 <= abs(x) <= self.rank:
                raise GroupError(f"letter {x} out of range for {self.tag}")
        return FreeWord(self, _kernels.reduce_letters(list(letters)))

    def multiply(self, a, b):
        self.check_same(a, b)
        return FreeWord(
            self, _kernels.reduce_letters(list(a.letters) + list(b.letters))
        )

    def descriptor(self):
        return {"kind": "free", "rank": self.rank}


class FreeGroupInf(MarkedGroup):
    """Free group on generators x1, x2, ...

    Elements are ordinary free words over an unbounded index; anything
    needing a finite generating set takes an explicit rank cutoff.
    """

    kind = "free_inf"
    tag = "Finf"

    def generator_names(self):
        return None

    def identity(self):
        return FreeWord(self, ())

    def generator(self, index, sign=1):
        if index < 1:
            raise GroupError("generator index must be >= 1")
        return FreeWord(self, (sign * index,))

    def letters_of(self, elem):
        self.check_same(elem)
        return elem.letters

    def from_letters(self, letters):
        for x in letters:
            if x == 0:
                raise GroupError("0 is not a letter")
        return FreeWord(self, _kernels.reduce_letters(list(letters)))

    def multiply(self, a, b):
        self.check_same(a, b)
        return FreeWord(
            self, _kernels.reduce_letters(list(a.letters) + list(b.letters))
        )

    def ball(self, radius):
        raise GroupError("Finf has no finite ball; use a rank cutoff")

    def _parse_token(self, tok):
        sign = -1 if tok[0].isupper() else 1
        name = tok.lower()
        if not (name.startswith("x") and name[1:].isdigit()):
            raise GroupError(f"unknown generator {tok!r} in Finf")
        return sign * int(name[1:])

    def format(self, elem):
        self.check_same(elem)
        parts = []
        for x in elem.letters:
            name = f"x{abs(x)}"
            parts.append(name.upper() if x < 0 else name)
        return " ".join(parts)

    def descriptor(self):
        return {"kind": "free_inf"}


class BaumslagSolitar(MarkedGroup):
    """BS(1,n) with marked generators s (index 1) and t (index 2).

    The defining relation conjugates s by t into its n-th power, so the
    cyclic subgroup generated by s strictly contains its t-conjugate;
    this is the standard source of non-separable pairs.
    """

    kind = "bs"

    def __init__(self, n):
        if n < 2:
            raise GroupError("BS parameter must be >= 2")
        self.n = n
        self.tag = f"BS(1,{n})"
        self._names = ("s", "t")

    def generator_names(self):
        return self._names

    def identity(self):
        return BSWord(self, 0, 0, 0)

    def bs_word(self, p, m, q):
        """Build the normal form t^p s^m t^-q, reducing greedily."""
        n = self.n
        while p > 0 and q > 0 and m % n == 0:
            p -= 1
            q -= 1
            m //= n
        return BSWord(self, p, m, q)

    def generator(self, index, sign=1):
        if index == 1:
            return BSWord(self, 0, sign, 0)
        if index == 2:
            return BSWord(self, 1, 0, 0) if sign > 0 else BSWord(self, 0, 0, 1)
        raise GroupError(f"generator index {index} out of range for {self.tag}")

    def letters_of(self, elem):
        self.check_same(elem)
        sm = 1 if elem.m > 0 else -1
        return tuple(
            [2] * elem.p + [sm] * abs(elem.m) + [-2] * elem.q
        )

    def normal_form(self, letters):
        """Rewrite an arbitrary word over s, t into the normal form.

        Processes one letter at a time, keeping the accumulated prefix
        in normal form; pushing s past trailing t^-q multiplies the
        exponent by n^q.
        """
        n = self.n
        p, m, q = 0, 0, 0
        for x in letters:
            if abs(x) == 1:
                m += (1 if x > 0 else -1) * n**q
            elif x == 2:
                if q > 0:
                    q -= 1
                else:
                    p += 1
                    m *= n
            elif x == -2:
                q += 1
                while p > 0 and q > 0 and m % n == 0:
                    p -= 1
                    q -= 1
                    m //= n
            else:
                raise GroupError(f"letter {x} out of range for {self.tag}")
        return self.bs_word(p, m, q)

    def from_letters(self, letters):
        return self.normal_form(letters)

    def multiply(self, a, b):
        self.check_same(a, b)
        n = self.n
        if b.p >= a.q:
            p = a.p + b.p - a.q
            m = a.m * n ** (b.p - a.q) + b.m
            q = b.q
        else:
            p = a.p
            m = a.m + b.m * n ** (a.q - b.p)
            q = a.q - b.p + b.q
        return self.bs_word(p, m, q)

    def descriptor(self):
        return {"kind": "bs", "n": self.n}


def _dedupe_names(names):
    seen = {}
    out = []
    for name in names:
        if name not in seen:
            seen[name] = 1
            out.append(name)
        else:
            seen[name] += 1
            out.append(f"{name}{seen[name]}")
    return tuple(out)


class FreeProduct(MarkedGroup):
    """Free product of two supported groups.

    Marked generators are the left factor's followed by the right
    factor's (name collisions get a numeric suffix).  Elements are
    alternating syllable words.
    """

    kind = "free_product"

    def __init__(self, left, right):
        if left.generator_names() is None or right.generator_names() is None:
            raise GroupError("free product factors need finite generating sets")
        self.left = left
        self.right = right
        self.tag = f"({left.tag})*({right.tag})"
        self._names = _dedupe_names(
            list(left.generator_names()) + list(right.generator_names())
        )
        self._split = left.nlabels

    def generator_names(self):
        return self._names

    def factor(self, side):
        return self.right if side else self.left

    def identity(self):
        return ProductWord(self, ())

    def embed(self, side, elem):
        """The factor element as a one-syllable product word."""
        self.factor(side).check_same(elem)
        if elem.is_identity():
            return self.identity()
        return ProductWord(self, ((side, elem),))

    def generator(self, index, sign=1):
        if not 1 <= index <= self.nlabels:
            raise GroupError(f"generator index {index} out of range for {self.tag}")
        if index <= self._split:
            return self.embed(0, self.left.generator(index, sign))
        return self.embed(1, self.right.generator(index - self._split, sign))

    def letters_of(self, elem):
        self.check_same(elem)
        out = []
        for side, el in elem.syllables:
            off = self._split if side else 0
            for x in self.factor(side).letters_of(el):
                out.append(x + off if x > 0 else x - off)
        return tuple(out)

    def from_letters(self, letters):
        word = self.identity()
        for x in letters:
            word = self.multiply(word, self.generator(abs(x), 1 if x > 0 else -1))
        return word

    def multiply(self, a, b):
        self.check_same(a, b)
        syl = list(a.syllables)
        rest = list(b.syllables)
        while rest:
            side, el = rest.pop(0)
            if syl and syl[-1][0] == side:
                _, prev = syl.pop()
                merged = self.factor(side).multiply(prev, el)
                if not merged.is_identity():
                    syl.append((side, merged))
            else:
                syl.append((side, el))
        return ProductWord(self, tuple(syl))

    def descriptor(self):
        return {
            "kind": "free_product",
            "left": self.left.descriptor(),
            "right": self.right.descriptor(),
        }


# ---------------------------------------------------------------------------
# module-level operations and serialization


def reduce(group, letters):
    """Freely reduce a raw letter sequence into a word of ``group``."""
    return group.from_letters(letters)


def bs_normal_form(group, letters):
    """Normal form of a word over s, t in BS(1,n)."""
    if group.kind != "bs":
        raise GroupError("bs_normal_form needs a BS(1,n) group")
    return group.normal_form(letters)


def multiply(a, b):
    return a.group.multiply(a, b)


def invert(a):
    return a.inverse()


def ball(group, radius):
    return group.ball(radius)


def group_from_descriptor(desc):
    kind = desc.get("kind")
    if kind == "free":
        return FreeGroup(int(desc["rank"]))
    if kind == "free_inf":
        return FreeGroupInf()
    if kind == "bs":
        return BaumslagSolitar(int(desc["n"]))
    if kind == "free_product":
        return FreeProduct(
            group_from_descriptor(desc["left"]),
            group_from_descriptor(desc["right"]),
        )
    raise GroupError(f"unknown group kind {kind!r}")


def group_from_name(name):
    """Shorthands for the CLI: f2, f3, finf, bs2, zz (= F1 * F1)."""
    name = name.strip().lower()
    if name.startswith("f") and name[1:].isdigit():
        return FreeGroup(int(name[1:]))
    if name == "finf":
        return FreeGroupInf()
    if name.startswith("bs") and name[2:].isdigit():
        return BaumslagSolitar(int(name[2:]))
    if name == "zz":
        return FreeProduct(FreeGroup(1), FreeGroup(1))
    raise GroupError(f"unknown group shorthand {name!r}")


def element_to_json(elem):
    if isinstance(elem, BSWord):
        return list(elem.triple())
    return elem.group.format(elem)


def element_from_json(group, data):
    if isinstance(data, str):
        return group.parse(data)
    if isinstance(data, (list, tuple)) and len(data) == 3 and group.kind == "bs":
        return group.bs_word(int(data[0]), int(data[1]), int(data[2]))
    raise GroupError(f"cannot read element {data!r} for {group.tag}")

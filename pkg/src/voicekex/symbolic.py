"""Symbolic message terms and Dolev-Yao knowledge closure.

Terms are immutable and hashable.  The only equation is Diffie-Hellman
commutativity, handled by keeping :class:`DH` terms in a canonical form.

Closure is split in two, as is usual for saturation-based deducibility:

* *analysis* is run eagerly to a fixpoint (unpairing, decryption under
  deducible keys, message extraction from signatures, combining known
  scalars with known group elements);
* *synthesis* (pair, senc, sig, hash, exp, dh, kdf) is decided on demand,
  bounded by ``depth_bound`` constructor levels on top of the analysed set.

A :class:`Knowledge` therefore stores a finite base but answers membership
for the full, depth-bounded closure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

DEFAULT_DEPTH = 6


@dataclass(frozen=True, slots=True)
class Atom:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Pair:
    left: "Term"
    right: "Term"


@dataclass(frozen=True, slots=True)
class Senc:
    msg: "Term"
    key: "Term"


@dataclass(frozen=True, slots=True)
class Sig:
    msg: "Term"
    key: "Term"


@dataclass(frozen=True, slots=True)
class HashT:
    msg: "Term"


@dataclass(frozen=True, slots=True)
class Exp:
    base: "Term"
    scalar: "Term"


@dataclass(frozen=True, slots=True)
class DH:
    """Shared DH value.  Construct through :func:`dh` to get canonical form."""

    scalar: "Term"
    share: "Term"


@dataclass(frozen=True, slots=True)
class Kdf:
    label: str
    secret: "Term"
    salt: "Term"


Term = Union[Atom, Pair, Senc, Sig, HashT, Exp, DH, Kdf]

G = Atom("g")
NONE = Atom("none")


def dh(scalar: Term, share: Term) -> DH:
    """Combine ``scalar`` with ``share``; dh(a, g^b) and dh(b, g^a) coincide."""
    if isinstance(share, Exp) and share.base == G and isinstance(scalar, Atom) and isinstance(share.scalar, Atom):
        lo, hi = sorted((scalar, share.scalar), key=lambda a: a.name)
        return DH(lo, Exp(G, hi))
    return DH(scalar, share)


def chain(items: list[Term]) -> Term:
    """Right-nested pairing of a non-empty list."""
    if not items:
        raise ValueError("cannot chain an empty list")
    out = items[-1]
    for it in reversed(items[:-1]):
        out = Pair(it, out)
    return out


def unchain(term: Term, count: int) -> list[Term] | None:
    items: list[Term] = []
    for _ in range(count - 1):
        if not isinstance(term, Pair):
            return None
        items.append(term.left)
        term = term.right
    items.append(term)
    return items


def depth(term: Term) -> int:
    if isinstance(term, Atom):
        return 0
    return 1 + max(depth(c) for c in children(term))


def children(term: Term) -> tuple[Term, ...]:
    if isinstance(term, Atom):
        return ()
    if isinstance(term, (Pair,)):
        return (term.left, term.right)
    if isinstance(term, (Senc, Sig)):
        return (term.msg, term.key)
    if isinstance(term, HashT):
        return (term.msg,)
    if isinstance(term, Exp):
        return (term.base, term.scalar)
    if isinstance(term, DH):
        return (term.scalar, term.share)
    if isinstance(term, Kdf):
        return (term.secret, term.salt)
    raise TypeError(f"not a term: {term!r}")


def subterms(term: Term) -> Iterator[Term]:
    yield term
    for c in children(term):
        yield from subterms(c)


# -- canonical s-expression text form -------------------------------------

_ATOM_RE = re.compile(r"^[A-Za-z0-9_.:\-]+$")
_TOKEN_RE = re.compile(r'\s*(\(|\)|"[^"]*"|[^\s()"]+)')
_HEADS = {"pair": Pair, "senc": Senc, "sig": Sig, "hash": HashT, "exp": Exp}


def to_sexpr(term: Term) -> str:
    if isinstance(term, Atom):
        if not _ATOM_RE.match(term.name):
            raise ValueError(f"atom name not serializable: {term.name!r}")
        return term.name
    if isinstance(term, Kdf):
        return f'(kdf "{term.label}" {to_sexpr(term.secret)} {to_sexpr(term.salt)})'
    head = {Pair: "pair", Senc: "senc", Sig: "sig", HashT: "hash", Exp: "exp", DH: "dh"}[type(term)]
    return "(" + " ".join([head, *(to_sexpr(c) for c in children(term))]) + ")"


def parse_sexpr(text: str) -> Term:
    tokens = _TOKEN_RE.findall(text)
    pos = 0

    def parse() -> Term:
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError("unexpected end of s-expression")
        tok = tokens[pos]
        pos += 1
        if tok != "(":
            if tok == ")" or tok.startswith('"'):
                raise ValueError(f"unexpected token {tok!r}")
            return Atom(tok)
        head = tokens[pos]
        pos += 1
        if head == "kdf":
            label = tokens[pos]
            if not label.startswith('"'):
                raise ValueError("kdf label must be quoted")
            pos += 1
            args = [parse(), parse()]
            term: Term = Kdf(label.strip('"'), *args)
        elif head == "dh":
            term = dh(parse(), parse())
        elif head in _HEADS:
            arity = 1 if head == "hash" else 2
            term = _HEADS[head](*(parse() for _ in range(arity)))
        else:
            raise ValueError(f"unknown constructor {head!r}")
        if pos >= len(tokens) or tokens[pos] != ")":
            raise ValueError("missing closing parenthesis")
        pos += 1
        return term

    result = parse()
    if pos != len(tokens):
        raise ValueError("trailing tokens after s-expression")
    return result


# -- knowledge closure -----------------------------------------------------


class Knowledge:
    """Adversary knowledge: an analysed base set plus bounded synthesis."""

    __slots__ = ("terms", "depth_bound", "closed", "_memo")

    def __init__(self, terms: Iterable[Term] = (), depth_bound: int = DEFAULT_DEPTH, closed: bool = False) -> None:
        self.terms = frozenset(terms)
        self.depth_bound = depth_bound
        self.closed = closed
        self._memo: dict[tuple[Term, int], bool] = {}

    def __contains__(self, goal: object) -> bool:
        if not self.closed:
            return goal in self.terms
        return _synth(goal, self.terms, self.depth_bound, self._memo)  # type: ignore[arg-type]

    def __iter__(self) -> Iterator[Term]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __or__(self, other: Iterable[Term]) -> "Knowledge":
        return Knowledge(self.terms | frozenset(other), self.depth_bound)

    def __repr__(self) -> str:
        state = "closed" if self.closed else "raw"
        return f"Knowledge({len(self.terms)} terms, {state}, depth={self.depth_bound})"


def _synth(goal: Term, base: frozenset, bound: int, memo: dict) -> bool:
    if goal in base:
        return True
    if bound <= 0 or isinstance(goal, Atom):
        return False
    key = (goal, bound)
    hit = memo.get(key)
    if hit is not None:
        return hit
    memo[key] = False  # cycle guard; terms are finite so this never sticks
    b = bound - 1
    if isinstance(goal, DH):
        ok = _synth(goal.scalar, base, b, memo) and _synth(goal.share, base, b, memo)
        if not ok and isinstance(goal.share, Exp) and goal.share.base == G:
            # commuted form: dh(hi, g^lo)
            ok = _synth(goal.share.scalar, base, b, memo) and _synth(Exp(G, goal.scalar), base, b, memo)
    else:
        ok = all(_synth(c, base, b, memo) for c in children(goal))
    memo[key] = ok
    return ok


def close_knowledge(initial: Iterable[Term], depth_bound: int = DEFAULT_DEPTH) -> Knowledge:
    """Saturate ``initial`` under the Dolev-Yao analysis rules."""
    if depth_bound < 1:
        raise ValueError("depth_bound must be >= 1")
    known = set(initial.terms if isinstance(initial, Knowledge) else initial)
    while True:
        base = frozenset(known)
        memo: dict = {}
        new: set[Term] = set()
        scalars = [t for t in base if isinstance(t, Atom)]
        for t in base:
            if isinstance(t, Pair):
                new.add(t.left)
                new.add(t.right)
            elif isinstance(t, Senc):
                if _synth(t.key, base, depth_bound, memo):
                    new.add(t.msg)
            elif isinstance(t, Sig):
                new.add(t.msg)
            elif isinstance(t, Exp) and t.base == G:
                for x in scalars:
                    new.add(dh(x, t))
        new -= known
        if not new:
            return Knowledge(base, depth_bound, closed=True)
        known |= new


def derivable(goal: Term, k: Iterable[Term] | Knowledge, depth_bound: int = DEFAULT_DEPTH) -> bool:
    if isinstance(k, Knowledge) and k.closed and k.depth_bound == depth_bound:
        return goal in k
    return goal in close_knowledge(k, depth_bound)

"""Singularization and insertion moves on continued-fraction words.

Words are addressed by slot: slot 0 is the head and slot ``k >= 1`` is the
k-th term.  Every move names the slot ``i`` holding the partial quotient
``A`` that absorbs the change; the pattern it rewrites starts at slot
``i + 1``.  Terms after the pattern, and therefore the tail value, are left
untouched, so the word matrices before and after agree up to sign.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .cf import CFWord, SignedDigit, evaluate, word_matrix
from .errors import PatternMismatch

REGIMES = ("ge_g", "gt_one", "lt_g")


@dataclass(frozen=True)
class GeneralWord:
    """A word whose partial quotients may be even (intermediate states)."""

    head: int = 0
    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        terms = tuple(SignedDigit(*t) for t in self.terms)
        for eps, a in terms:
            if eps not in (-1, 1) or a < 1:
                raise ValueError(f"bad term ({eps}, {a})")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def of(cls, word) -> GeneralWord:
        if isinstance(word, GeneralWord):
            return word
        return cls(word.head, word.digits)

    def to_cfword(self, terminated: bool = False) -> CFWord:
        if any(a % 2 == 0 for _, a in self.terms):
            raise PatternMismatch(f"{self} has even partial quotients")
        return CFWord(self.head, self.terms, terminated)

    def __len__(self):
        return len(self.terms)

    def __str__(self):
        return f"[{self.head}; {','.join(str(t) for t in self.terms)}]"


def _term(word: GeneralWord, slot: int) -> SignedDigit:
    if slot < 1 or slot > len(word.terms):
        raise PatternMismatch(f"slot {slot} does not exist in {word}")
    return word.terms[slot - 1]


def _check_slot(word: GeneralWord, i: int):
    if i < 0 or i > len(word.terms):
        raise PatternMismatch(f"slot {i} does not exist in {word}")


def _splice(word: GeneralWord, i: int, bump: int, span: int, new_terms) -> GeneralWord:
    """Add ``bump`` to the quotient in slot ``i`` and replace the next ``span`` terms."""
    head = word.head
    terms = list(word.terms)
    if i == 0:
        head += bump
    else:
        eps, a = terms[i - 1]
        terms[i - 1] = SignedDigit(eps, a + bump)
    terms[i:i + span] = [SignedDigit(*t) for t in new_terms]
    return GeneralWord(head, tuple(terms))


def _expect(cond: bool, move: str, word, i: int):
    if not cond:
        raise PatternMismatch(f"{move} does not apply to {word} at slot {i}")


# ---------------------------------------------------------------------------
# primitive moves
# ---------------------------------------------------------------------------

def singularize_plus(word, i: int) -> GeneralWord:
    """``A + 1/(1 + 1/(B + x)) = A + 1 - 1/(B + 1 + x)``."""
    word = GeneralWord.of(word)
    _check_slot(word, i)
    t1, t2 = _term(word, i + 1), _term(word, i + 2)
    _expect(t1 == (1, 1) and t2.eps == 1, "singularize_plus", word, i)
    return _splice(word, i, 1, 2, [(-1, t2.a + 1)])


def insert_minus(word, i: int) -> GeneralWord:
    """``A - 1/(B + x) = A + 1 - 1/(1 - 1/(B + 1 + x))`` for ``B >= 3``."""
    word = GeneralWord.of(word)
    _check_slot(word, i)
    t1 = _term(word, i + 1)
    _expect(t1.eps == -1 and t1.a >= 3, "insert_minus", word, i)
    return _splice(word, i, 1, 1, [(-1, 1), (-1, t1.a + 1)])


def singularize_minus(word, i: int) -> GeneralWord:
    """``A + 1/(1 - 1/(B + x)) = A + 1 + 1/(B - 1 + x)`` for ``B >= 2``."""
    word = GeneralWord.of(word)
    _check_slot(word, i)
    t1, t2 = _term(word, i + 1), _term(word, i + 2)
    _expect(t1 == (1, 1) and t2.eps == -1 and t2.a >= 2, "singularize_minus", word, i)
    return _splice(word, i, 1, 2, [(1, t2.a - 1)])


def insert_plus(word, i: int) -> GeneralWord:
    """``A + 1/(B + x) = A + 1 - 1/(1 + 1/(B - 1 + x))`` for ``B >= 3``."""
    word = GeneralWord.of(word)
    _check_slot(word, i)
    t1 = _term(word, i + 1)
    _expect(t1.eps == 1 and t1.a >= 3, "insert_plus", word, i)
    return _splice(word, i, 1, 1, [(-1, 1), (1, t1.a - 1)])


# ---------------------------------------------------------------------------
# composite moves
# ---------------------------------------------------------------------------

def _ge_g(word: GeneralWord, i: int) -> GeneralWord:
    # (A, +1/1, +1/B) -> (A+1, -1/(B+1)) -> (A+2, -1/1, -1/(B+2))
    t2 = _term(word, i + 2)
    _expect(_term(word, i + 1) == (1, 1) and t2.eps == 1, "ge_g", word, i)
    # B = 1 gives an inner -1/2, where the insertion identity still holds
    return _splice(singularize_plus(word, i), i, 1, 1, [(-1, 1), (-1, t2.a + 2)])


def _gt_one(word: GeneralWord, i: int) -> GeneralWord:
    # (A, +1/1, -1/B) -> (A+1, +1/(B-1)) -> (A+2, -1/1, +1/(B-2))
    t2 = _term(word, i + 2)
    _expect(_term(word, i + 1) == (1, 1) and t2.eps == -1 and t2.a >= 3, "gt_one", word, i)
    # for B = 3 the inner quotient is 2, below the public move's range, but
    # the insertion identity still holds
    return _splice(singularize_minus(word, i), i, 1, 1, [(-1, 1), (1, t2.a - 2)])


def _lt_g(word: GeneralWord, i: int) -> GeneralWord:
    # (A, +1/3, -1/1, -1/B), B >= 5
    #   -> (A, +1/2, -1/(B-1))          remove the -1/1 after the 3
    #   -> (A, +1/1, +1/1, +1/(B-2))    insert +1/1 after the 2
    #   -> (A+1, -1/2, +1/(B-2))        singularize the first 1
    #   -> (A+2, -1/1, -1/3, +1/(B-2))  insert -1/1 after A+1
    t1, t2, t3 = _term(word, i + 1), _term(word, i + 2), _term(word, i + 3)
    _expect(t1 == (1, 3) and t2 == (-1, 1) and t3.eps == -1 and t3.a >= 5, "lt_g", word, i)
    w = _splice(word, i, 0, 3, [(1, 2), (-1, t3.a - 1)])
    w = _splice(w, i, 0, 2, [(1, 1), (1, 1), (1, t3.a - 2)])
    w = singularize_plus(w, i)
    # the insertion identity also holds for B = 2, outside the public move's range
    return _splice(w, i, 1, 1, [(-1, 1), (-1, 3)])


_COMPOSITES = {"ge_g": _ge_g, "gt_one": _gt_one, "lt_g": _lt_g}


def shift_block(word, i: int, regime: str) -> CFWord:
    """Apply a regime's composite rewrite at slot ``i``; the result is all-odd.

    ``ge_g``:   ``(A, +1/1, +1/B)``         -> ``(A+2, -1/1, -1/(B+2))``
    ``gt_one``: ``(A, +1/1, -1/B)``         -> ``(A+2, -1/1, +1/(B-2))``
    ``lt_g``:   ``(A, +1/3, -1/1, -1/B)``   -> ``(A+2, -1/1, -1/3, +1/(B-2))``
    """
    if regime not in _COMPOSITES:
        raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    terminated = getattr(word, "terminated", False)
    gw = GeneralWord.of(word)
    _check_slot(gw, i)
    return _COMPOSITES[regime](gw, i).to_cfword(terminated)


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

def same_value(before, after) -> bool:
    """Exact certificate: the word matrices agree up to a global sign."""
    return word_matrix(before).equal_up_to_sign(word_matrix(after))


def same_value_at(before, after, tails: Sequence = (0,)) -> bool:
    """Evaluate both words at each tail and compare exactly."""
    return all(evaluate(before, t) == evaluate(after, t) for t in tails)

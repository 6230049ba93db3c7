"""Subshifts of finite type: alphabets, transitions, finite words and left-infinite truncations."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Hashable, Iterable, Iterator, Sequence

import numpy as np

Letter = Hashable


@dataclass(frozen=True)
class Alphabet:
    letters: tuple

    def __post_init__(self) -> None:
        letters = tuple(self.letters)
        if not letters:
            raise ValueError("alphabet must be non-empty")
        if len(set(letters)) != len(letters):
            raise ValueError("alphabet letters must be unique")
        object.__setattr__(self, "letters", letters)

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[Letter]:
        return iter(self.letters)

    def __contains__(self, letter: object) -> bool:
        return letter in self.letters

    def index(self, letter: Letter) -> int:
        return self.letters.index(letter)


@dataclass(frozen=True)
class TransitionSet:
    pairs: frozenset

    def __post_init__(self) -> None:
        object.__setattr__(self, "pairs", frozenset(tuple(p) for p in self.pairs))

    @classmethod
    def full(cls, alphabet: Alphabet) -> "TransitionSet":
        return cls(frozenset(itertools.product(alphabet.letters, repeat=2)))

    def check(self, alphabet: Alphabet) -> None:
        for a, b in self.pairs:
            if a not in alphabet or b not in alphabet:
                raise ValueError(f"transition {(a, b)!r} uses a letter outside the alphabet")

    def __contains__(self, pair: object) -> bool:
        return pair in self.pairs

    def __len__(self) -> int:
        return len(self.pairs)


def adjacency(alphabet: Alphabet, transitions: TransitionSet) -> np.ndarray:
    n = len(alphabet)
    mat = np.zeros((n, n), dtype=bool)
    for a, b in transitions.pairs:
        mat[alphabet.index(a), alphabet.index(b)] = True
    return mat


def is_mixing(alphabet: Alphabet, transitions: TransitionSet) -> bool:
    transitions.check(alphabet)
    step = adjacency(alphabet, transitions).astype(np.int64)
    power = step.copy()
    for _ in range(len(alphabet) ** 2):
        if power.all():
            return True
        power = ((power @ step) > 0).astype(np.int64)
    return bool(power.all())


@dataclass(frozen=True)
class FiniteWord:
    """Admissible string (a_0, ..., a_n); its size is n."""

    symbols: tuple

    def __post_init__(self) -> None:
        symbols = tuple(self.symbols)
        if not symbols:
            raise ValueError("a word has at least one letter")
        object.__setattr__(self, "symbols", symbols)

    @property
    def size(self) -> int:
        return len(self.symbols) - 1

    @property
    def first(self) -> Letter:
        return self.symbols[0]

    @property
    def last(self) -> Letter:
        return self.symbols[-1]

    def pairs(self) -> Iterator[tuple]:
        return zip(self.symbols[:-1], self.symbols[1:])

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self) -> Iterator[Letter]:
        return iter(self.symbols)


def concat(a: FiniteWord, b: FiniteWord) -> FiniteWord:
    if a.last != b.first:
        raise ValueError(f"junction mismatch: {a.last!r} != {b.first!r}")
    return FiniteWord(a.symbols + b.symbols[1:])


@dataclass(frozen=True)
class NegSequence:
    """Last m+1 entries (theta_-m, ..., theta_0) of a left-infinite itinerary."""

    symbols: tuple

    def __post_init__(self) -> None:
        symbols = tuple(self.symbols)
        if not symbols:
            raise ValueError("a truncation keeps at least theta_0")
        object.__setattr__(self, "symbols", symbols)

    @property
    def depth(self) -> int:
        return len(self.symbols) - 1

    @property
    def last(self) -> Letter:
        return self.symbols[-1]

    def view(self, n: int) -> "NegSequence":
        if not 0 <= n <= self.depth:
            raise ValueError(f"view depth {n} outside 0..{self.depth}")
        return NegSequence(self.symbols[len(self.symbols) - n - 1:])

    def append(self, letter: Letter) -> "NegSequence":
        return NegSequence(self.symbols + (letter,))

    def tail_word(self, n: int) -> FiniteWord:
        """The word (theta_-n, ..., theta_0)."""
        return FiniteWord(self.view(n).symbols)


@dataclass(frozen=True)
class WedgeResult:
    word: FiniteWord
    exhausted: bool


def wedge(t1: NegSequence, t2: NegSequence, strict: bool = False) -> WedgeResult:
    """Longest common suffix; `exhausted` marks truncations that agree on their whole overlap."""
    if t1.last != t2.last:
        raise ValueError("sequences end in different letters")
    common = 0
    for x, y in zip(reversed(t1.symbols), reversed(t2.symbols)):
        if x != y:
            break
        common += 1
    exhausted = common == min(len(t1.symbols), len(t2.symbols))
    if exhausted and strict:
        raise ValueError("truncations agree on their full overlap; wedge undefined at this depth")
    return WedgeResult(FiniteWord(t1.symbols[len(t1.symbols) - common:]), exhausted)


@dataclass(frozen=True)
class Subshift:
    alphabet: Alphabet
    transitions: TransitionSet

    def __post_init__(self) -> None:
        self.transitions.check(self.alphabet)

    @classmethod
    def full(cls, letters: Iterable[Letter]) -> "Subshift":
        alphabet = Alphabet(tuple(letters))
        return cls(alphabet, TransitionSet.full(alphabet))

    def admissible(self, symbols: Sequence[Letter]) -> bool:
        if any(s not in self.alphabet for s in symbols):
            return False
        return all((a, b) in self.transitions for a, b in zip(symbols[:-1], symbols[1:]))

    def check(self, symbols: Sequence[Letter]) -> None:
        for s in symbols:
            if s not in self.alphabet:
                raise ValueError(f"letter {s!r} not in alphabet")
        for a, b in zip(symbols[:-1], symbols[1:]):
            if (a, b) not in self.transitions:
                raise ValueError(f"inadmissible transition {(a, b)!r}")

    def word(self, *symbols: Letter) -> FiniteWord:
        self.check(symbols)
        return FiniteWord(tuple(symbols))

    def neg(self, *symbols: Letter) -> NegSequence:
        self.check(symbols)
        return NegSequence(tuple(symbols))

    def successors(self, letter: Letter) -> list:
        return [b for b in self.alphabet if (letter, b) in self.transitions]

    def words_from(self, start: Letter, size: int) -> Iterator[FiniteWord]:
        """All admissible words of the given size beginning with `start`, in alphabet order."""
        def grow(prefix: tuple) -> Iterator[tuple]:
            if len(prefix) == size + 1:
                yield prefix
                return
            for b in self.successors(prefix[-1]):
                yield from grow(prefix + (b,))

        for symbols in grow((start,)):
            yield FiniteWord(symbols)

    def words(self, size: int) -> Iterator[FiniteWord]:
        for a in self.alphabet:
            yield from self.words_from(a, size)

    def is_mixing(self) -> bool:
        return is_mixing(self.alphabet, self.transitions)

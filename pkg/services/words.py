"""
words.py
Free Group Words
Run-length encoded words, free reduction and substitution homomorphisms
"""

import re
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple
import logging

import numpy as np

logger = logging.getLogger(__name__)

GENERATOR_NAME = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")

Syllable = Tuple[str, int]


class MissingGeneratorError(ValueError):
    """A substitution or assignment is not defined on some generator"""


def _reduce(syllables: Iterable[Syllable]) -> Tuple[Syllable, ...]:
    stack: List[Syllable] = []
    for gen, exp in syllables:
        if exp == 0:
            continue
        if stack and stack[-1][0] == gen:
            merged = stack.pop()[1] + exp
            if merged != 0:
                stack.append((gen, merged))
        else:
            stack.append((gen, exp))
    return tuple(stack)


class Word:
    """A freely reduced word, stored as (generator, nonzero exponent) syllables"""

    __slots__ = ("syllables",)

    def __init__(self, syllables: Iterable[Syllable] = ()):
        self.syllables = _reduce((str(g), int(e)) for g, e in syllables)

    @classmethod
    def identity(cls) -> "Word":
        return cls()

    @classmethod
    def generator(cls, name: str, exponent: int = 1) -> "Word":
        return cls([(name, exponent)])

    # Group operations

    def __mul__(self, other: "Word") -> "Word":
        if not isinstance(other, Word):
            return NotImplemented
        return Word(self.syllables + other.syllables)

    def inverse(self) -> "Word":
        return Word((g, -e) for g, e in reversed(self.syllables))

    def __pow__(self, n: int) -> "Word":
        base = self if n >= 0 else self.inverse()
        n = abs(n)
        result = Word()
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def cyclic_reduce(self) -> "Word":
        """Cyclically reduced conjugate: strip or merge matching end syllables"""
        syllables = list(self.syllables)
        while len(syllables) >= 2 and syllables[0][0] == syllables[-1][0]:
            gen, first = syllables[0]
            last = syllables[-1][1]
            if first + last == 0:
                syllables = syllables[1:-1]
            else:
                syllables = [(gen, first + last)] + syllables[1:-1]
        return Word(syllables)

    def substitute(self, images: Dict[str, "Word"]) -> "Word":
        """Image under the homomorphism sending each generator g to images[g]"""
        result: List[Syllable] = []
        for gen, exp in self.syllables:
            if gen not in images:
                raise MissingGeneratorError(f"no image given for generator {gen!r}")
            result.extend((images[gen] ** exp).syllables)
        return Word(result)

    # Inspection

    @property
    def length(self) -> int:
        """Number of letters"""
        return sum(abs(e) for _, e in self.syllables)

    def letters(self) -> Iterator[Tuple[str, int]]:
        """Expand into single letters (generator, +1 or -1)"""
        for gen, exp in self.syllables:
            step = 1 if exp > 0 else -1
            for _ in range(abs(exp)):
                yield gen, step

    def exponent_sum(self, gen: str) -> int:
        return sum(e for g, e in self.syllables if g == gen)

    def exponent_vector(self, generators: Sequence[str]) -> List[int]:
        return [self.exponent_sum(g) for g in generators]

    def generators(self) -> Set[str]:
        return {g for g, _ in self.syllables}

    def is_identity(self) -> bool:
        return not self.syllables

    def __bool__(self) -> bool:
        return bool(self.syllables)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Word):
            return NotImplemented
        return self.syllables == other.syllables

    def __hash__(self) -> int:
        return hash(self.syllables)

    def __str__(self) -> str:
        if not self.syllables:
            return "1"
        return "*".join(g if e == 1 else f"{g}^{e}" for g, e in self.syllables)

    def __repr__(self) -> str:
        return f"Word('{self}')"


def relation(left: Word, right: Word) -> Word:
    """The relator encoding the equation left = right"""
    return left * right.inverse()


def commutator(u: Word, v: Word) -> Word:
    return u.inverse() * v.inverse() * u * v


class Substitution:
    """Homomorphism of free groups given by generator images"""

    def __init__(self, images: Dict[str, Word], source: Optional[Sequence[str]] = None):
        self.images = dict(images)
        self.source = tuple(source) if source is not None else tuple(self.images)
        missing = [g for g in self.source if g not in self.images]
        if missing:
            raise MissingGeneratorError(f"substitution is not defined on {missing}")

    def __call__(self, word: Word) -> Word:
        return word.substitute(self.images)

    def then(self, other: "Substitution") -> "Substitution":
        """Composite: apply self, then other"""
        return Substitution({g: other(w) for g, w in self.images.items()}, self.source)

    def __repr__(self) -> str:
        body = ", ".join(f"{g} -> {w}" for g, w in self.images.items())
        return f"Substitution({body})"


def substitute(word: Word, substitution: Substitution) -> Word:
    return substitution(word)


def random_word(generators: Sequence[str], length: int,
                rng: np.random.Generator) -> Word:
    """Uniformly random letter sequence of the given length, freely reduced"""
    letters: List[Syllable] = []
    for _ in range(length):
        gen = generators[int(rng.integers(len(generators)))]
        letters.append((gen, 1 if rng.integers(2) else -1))
    return Word(letters)

"""
decomposition.py
Matrix Decomposition
Factors unimodular matrices over Z[1/m] into words in A, B, U_m by Euclidean
column reduction, rewrites them over x, y and computes abelianization classes
"""

from functools import lru_cache
from math import gcd
from typing import Dict, List, Optional, Tuple
import logging

import numpy as np

from models.reports import DecompositionReport
from services.abelianization import AbelianizationMap
from services.exact_arithmetic import (
    Mat2M,
    MFraction,
    NotUnimodularError,
    elementary_upper,
    euclidean_divmod,
    euclidean_norm,
    format_matrix,
    matrix_b,
    reduce_mod_r,
)
from services.matrix_groups import (
    Assignment,
    FiniteAbelianization,
    abu_assignment,
    bfs_group_order,
    evaluate,
    phi_assignment,
)
from services.presentations import make_hm
from services.words import Substitution, Word, random_word

logger = logging.getLogger(__name__)

ALPHABETS = ("abu", "xy")


class DecompositionError(RuntimeError):
    """A produced word does not evaluate back to its matrix"""


class CertifiedWord:
    """A word together with the matrix it evaluates to, checked on construction"""

    generators: Tuple[str, ...] = ()

    def __init__(self, word: Word, matrix: Mat2M):
        unknown = word.generators() - set(self.generators)
        if unknown:
            raise ValueError(f"{type(self).__name__} cannot contain generators {sorted(unknown)}")
        self.word = word
        self.matrix = matrix
        image = evaluate(word, self.assignment(matrix.m))
        if image != matrix:
            raise DecompositionError(f"{word} evaluates to {image}, expected {matrix}")

    @staticmethod
    def assignment(m: int) -> Assignment:
        raise NotImplementedError

    @property
    def m(self) -> int:
        return self.matrix.m

    def __len__(self) -> int:
        return self.word.length

    def __str__(self) -> str:
        return str(self.word)

    def __repr__(self) -> str:
        return f"{type(self).__name__}('{self.word}', m={self.m})"


class GeneratorWordABU(CertifiedWord):
    """Word over A, B, U evaluated through A -> A, B -> B, U -> U_m"""
    generators = ("A", "B", "U")

    @staticmethod
    def assignment(m: int) -> Assignment:
        return abu_assignment(m)


class GeneratorWordXY(CertifiedWord):
    """Word over x, y evaluated through x -> A, y -> Q_m"""
    generators = ("x", "y")

    @staticmethod
    def assignment(m: int) -> Assignment:
        return phi_assignment(m)


# ============================================================================
# EUCLIDEAN REDUCTION
# ============================================================================

class EuclideanReduction:
    """
    Left row operations P with P*M = T upper triangular

    Each step replaces (a, c) by (c, -rho) where a = q*c + rho, so the
    Euclidean norm of the lower-left entry strictly decreases.
    """

    def __init__(self, matrix: Mat2M):
        self.matrix = matrix
        self.steps: List[Tuple[str, Optional[MFraction]]] = []
        self.norm_trace: List[int] = []

        B = matrix_b(matrix.m)
        current = matrix
        while current.c != 0:
            norm = euclidean_norm(current.c)
            if self.norm_trace and norm >= self.norm_trace[-1]:
                raise DecompositionError(f"Euclidean norm did not decrease: {self.norm_trace + [norm]}")
            self.norm_trace.append(norm)
            q, _ = euclidean_divmod(current.a, current.c)
            if q != 0:
                current = elementary_upper(-q) * current
                self.steps.append(("E12", -q))
            current = B * current
            self.steps.append(("B", None))
        self.upper = current

    def __len__(self) -> int:
        return len(self.steps)


def euclidean_reduction(matrix: Mat2M) -> EuclideanReduction:
    return EuclideanReduction(matrix)


# Words in the A, B, U alphabet

def _a(e: int = 1) -> Word:
    return Word.generator("A", e)


def _b(e: int = 1) -> Word:
    return Word.generator("B", e)


def _u(e: int = 1) -> Word:
    return Word.generator("U", e)


def lower_word(t: MFraction) -> Word:
    """
    E21(a/m^k) = U^j A^e U^-j with j = ceil(k/2), e = a*m^(2j-k)

    U = diag(m, 1/m), so conjugating A^e by U^j turns the lower-left entry e
    into e/m^(2j)
    """
    if t == 0:
        return Word()
    j = (t.exponent + 1) // 2
    e = t.numerator * t.m ** (2 * j - t.exponent)
    return _u(j) * _a(e) * _u(-j)


def upper_word(t: MFraction) -> Word:
    """E12(t) = B E21(-t) B^-1"""
    if t == 0:
        return Word()
    return _b() * lower_word(-t) * _b(-1)


def _m_power_exponent(u: MFraction) -> Optional[int]:
    """k with |u| = m^k, or None"""
    n = abs(u.numerator)
    if u.exponent > 0:
        return -u.exponent if n == 1 else None
    k = 0
    while n > 1 and n % u.m == 0:
        n //= u.m
        k += 1
    return k if n == 1 else None


def diagonal_word(u: MFraction) -> Word:
    """Word for diag(u, u^-1), u a unit of Z[1/m]"""
    k = _m_power_exponent(u) if u.m > 1 else 0
    if k is not None:
        sign = _b(2) if u.numerator < 0 else Word()
        return sign * _u(k)
    # diag(u, u^-1) = E12(u) E21(-u^-1) E12(u) B^-1
    return upper_word(u) * lower_word(-u.inverse_unit()) * upper_word(u) * _b(-1)


def decompose_to_abu(matrix: Mat2M) -> GeneratorWordABU:
    """
    Factor a unimodular matrix into a word in A, B, U_m

    Raises:
        NotUnimodularError: if det(matrix) != 1
    """
    if not matrix.is_unimodular():
        raise NotUnimodularError(f"determinant of {matrix} is {matrix.det()}, not 1")

    if matrix.a == 1 and matrix.b == 0 and matrix.d == 1:
        return GeneratorWordABU(lower_word(matrix.c), matrix)

    reduction = EuclideanReduction(matrix)
    T = reduction.upper
    # M = P^-1 T with P the product of the recorded steps, latest on the left
    word = Word()
    for kind, t in reduction.steps:
        step = _b() if kind == "B" else upper_word(t)
        word = word * step.inverse()
    word = word * diagonal_word(T.a) * upper_word(T.b * T.d)

    logger.debug(f"Decomposed {format_matrix(matrix)}: {len(reduction)} steps, "
                 f"norm trace {reduction.norm_trace}, length {word.length}")
    return GeneratorWordABU(word, matrix)


@lru_cache(maxsize=None)
def abu_to_xy(m: int) -> Substitution:
    """A -> x, B -> x^-1 y^-m x^-1, U -> B^-1 y^-1 x^-m y^-1 with B expanded"""
    x, y = Word.generator("x"), Word.generator("y")
    b = x.inverse() * y ** -m * x.inverse()
    u = b.inverse() * y.inverse() * x ** -m * y.inverse()
    return Substitution({"A": x, "B": b, "U": u}, ("A", "B", "U"))


def rewrite_abu_to_xy(word: GeneratorWordABU) -> GeneratorWordXY:
    return GeneratorWordXY(abu_to_xy(word.m)(word.word), word.matrix)


def decompose_to_xy(matrix: Mat2M) -> GeneratorWordXY:
    return rewrite_abu_to_xy(decompose_to_abu(matrix))


# ============================================================================
# ABELIANIZATION CLASSES
# ============================================================================

@lru_cache(maxsize=None)
def _hm_abelianization(m: int) -> AbelianizationMap:
    return AbelianizationMap(make_hm(m))


def word_class(word: Word, m: int) -> int:
    """Class of a word over x, y in H_m^ab, with x -> 1"""
    return _hm_abelianization(m).cyclic_class(word.exponent_vector(("x", "y")))


def abelianization_order(m: int) -> int:
    return _hm_abelianization(m).cyclic_order


def abelianization_image(matrix: Mat2M) -> int:
    """Class of a matrix in SL_2(Z[1/m])^ab = Z/n, n = gcd(m^2 - 1, 12), with A -> 1"""
    return word_class(decompose_to_xy(matrix).word, matrix.m)


@lru_cache(maxsize=None)
def _residue_abelianization(m: int, r: int) -> FiniteAbelianization:
    images = phi_assignment(m).reduce(r).images
    return FiniteAbelianization(bfs_group_order([images["x"], images["y"]], r))


def residue_class_checks(matrix: Mat2M, image_class: Optional[int] = None) -> Dict[int, bool]:
    """
    Compare the class with the one computed in SL_2(Z/3) (gcd(3, m) = 1) and
    SL_2(Z/4) (m odd) through the reduction of the matrix
    """
    m = matrix.m
    if image_class is None:
        image_class = abelianization_image(matrix)
    results = {}
    for r in (3, 4):
        if gcd(r, m) != 1:
            continue
        finite = _residue_abelianization(m, r)
        results[r] = finite.class_of(reduce_mod_r(matrix, r)) == image_class % finite.order
    return results


def decomposition_report(matrix: Mat2M, alphabet: str = "abu") -> DecompositionReport:
    if alphabet not in ALPHABETS:
        raise ValueError(f"unknown alphabet {alphabet!r}, expected one of {ALPHABETS}")
    abu = decompose_to_abu(matrix)
    word = abu if alphabet == "abu" else rewrite_abu_to_xy(abu)
    trace = EuclideanReduction(matrix).norm_trace if matrix.c != 0 else []
    xy_word = word.word if alphabet == "xy" else abu_to_xy(matrix.m)(abu.word)
    return DecompositionReport(
        m=matrix.m,
        matrix=format_matrix(matrix),
        alphabet=alphabet,
        word=str(word),
        word_length=len(word),
        verified=True,
        norm_trace=[str(n) for n in trace],
        abelianization_class=word_class(xy_word, matrix.m),
        abelianization_order=abelianization_order(matrix.m),
    )


def round_trip_sample(m: int, samples: int, max_length: int,
                      rng: np.random.Generator) -> List[str]:
    """
    Decompose images of random words over x, y and compare matrices and
    abelianization classes; returns a description of every failure
    """
    phi = phi_assignment(m)
    failures = []
    for i in range(samples):
        length = int(rng.integers(max_length + 1))
        source = random_word(("x", "y"), length, rng)
        matrix = evaluate(source, phi)
        try:
            xy = decompose_to_xy(matrix)
        except DecompositionError as e:
            failures.append(f"sample {i} ({source}): {e}")
            continue
        image_class = word_class(xy.word, m)
        if image_class != word_class(source, m):
            failures.append(f"sample {i} ({source}): abelianization class changed")
        for r, agrees in residue_class_checks(matrix, image_class).items():
            if not agrees:
                failures.append(f"sample {i} ({source}): class disagrees with SL_2(Z/{r})")
    logger.info(f"Round trip m={m}: {samples - len(failures)}/{samples} samples passed")
    return failures

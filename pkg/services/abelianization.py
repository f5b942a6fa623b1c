"""
abelianization.py
Abelianization
Relation matrices, Smith normal form and the four-way case split for H_m
"""

from functools import reduce
from itertools import combinations
from math import gcd
from typing import Iterable, List, Optional, Sequence, Tuple
import logging

import numpy as np
import pandas as pd

from models.reports import AbelianGroupDesc, AbelianizationReport, FormulaCrossCheck
from services.presentations import Presentation, make_hm

logger = logging.getLogger(__name__)


def relation_matrix(presentation: Presentation) -> np.ndarray:
    """Integer matrix with one row per generator and one column per relator"""
    columns = [rel.exponent_vector(presentation.generators) for rel in presentation.relators]
    matrix = np.zeros((len(presentation.generators), len(columns)), dtype=object)
    for j, column in enumerate(columns):
        for i, value in enumerate(column):
            matrix[i, j] = value
    return matrix


def relation_matrix_frame(presentation: Presentation) -> pd.DataFrame:
    """Relation matrix labelled by generator (rows) and relator number (columns)"""
    matrix = relation_matrix(presentation)
    columns = [f"r{j + 1}" for j in range(matrix.shape[1])]
    return pd.DataFrame(matrix.tolist(), index=list(presentation.generators), columns=columns)


# ============================================================================
# SMITH NORMAL FORM
# ============================================================================

class SNFResult:
    """Diagonal of the Smith normal form with transforms, left @ M @ right == D"""

    def __init__(self, diagonal: List[int], left: np.ndarray, right: np.ndarray,
                 shape: Tuple[int, int]):
        self.diagonal = diagonal
        self.left = left
        self.right = right
        self.shape = shape

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diagonal if d != 0)

    @property
    def invariant_factors(self) -> List[int]:
        return list(self.diagonal)

    def diagonal_matrix(self) -> np.ndarray:
        D = np.zeros(self.shape, dtype=object)
        for i, d in enumerate(self.diagonal):
            D[i, i] = d
        return D

    def __repr__(self) -> str:
        return f"SNFResult(diagonal={self.diagonal}, shape={self.shape})"


class SmithNormalForm:
    """
    Smith normal form by unimodular row and column operations

    The pivot is a nonzero entry of minimal absolute value in the trailing
    block. After clearing its row and column, an entry not divisible by the
    pivot is folded into the pivot row and the step repeats.
    """

    def __init__(self, matrix):
        self.A = np.array(matrix, dtype=object)
        if self.A.ndim != 2:
            raise ValueError(f"expected a 2-dimensional matrix, got shape {self.A.shape}")
        rows, cols = self.A.shape
        self.left = np.identity(rows, dtype=int).astype(object)
        self.right = np.identity(cols, dtype=int).astype(object)

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    @property
    def num_cols(self) -> int:
        return self.A.shape[1]

    def compute(self) -> SNFResult:
        rank = 0
        for s in range(min(self.A.shape)):
            if not self._diagonalize_at(s):
                break
            rank += 1

        diagonal = [int(self.A[i, i]) for i in range(min(self.A.shape))]
        logger.debug(f"SNF of {self.A.shape} matrix: diagonal {diagonal}, rank {rank}")
        return SNFResult(diagonal, self.left, self.right, self.A.shape)

    def _diagonalize_at(self, s: int) -> bool:
        """Make A[s, s] the only nonzero entry of its row and column; False if the block is zero"""
        while True:
            row, col = _nonzero_min_abs(self.A, s)
            if row is None:
                return False
            self._swap_rows(s, row)
            self._swap_cols(s, col)
            pivot = self.A[s, s]

            for i in range(s + 1, self.num_rows):
                if self.A[i, s] != 0:
                    self._add_row(i, s, -(self.A[i, s] // pivot))
            for j in range(s + 1, self.num_cols):
                if self.A[s, j] != 0:
                    self._add_col(j, s, -(self.A[s, j] // pivot))

            if any(self.A[i, s] != 0 for i in range(s + 1, self.num_rows)):
                continue
            if any(self.A[s, j] != 0 for j in range(s + 1, self.num_cols)):
                continue

            offender = self._find_non_divisible(s)
            if offender is not None:
                self._add_row(s, offender, 1)
                continue
            if self.A[s, s] < 0:
                self._negate_row(s)
            return True

    def _find_non_divisible(self, s: int) -> Optional[int]:
        pivot = self.A[s, s]
        for i in range(s + 1, self.num_rows):
            for j in range(s + 1, self.num_cols):
                if self.A[i, j] % pivot != 0:
                    return i
        return None

    def _swap_rows(self, i: int, j: int):
        if i != j:
            self.A[[i, j]] = self.A[[j, i]]
            self.left[[i, j]] = self.left[[j, i]]

    def _swap_cols(self, i: int, j: int):
        if i != j:
            self.A[:, [i, j]] = self.A[:, [j, i]]
            self.right[:, [i, j]] = self.right[:, [j, i]]

    def _negate_row(self, i: int):
        self.A[i] = -self.A[i]
        self.left[i] = -self.left[i]

    def _add_row(self, target: int, source: int, k: int):
        """row[target] += k * row[source]"""
        self.A[target] = self.A[target] + k * self.A[source]
        self.left[target] = self.left[target] + k * self.left[source]

    def _add_col(self, target: int, source: int, k: int):
        """col[target] += k * col[source]"""
        self.A[:, target] = self.A[:, target] + k * self.A[:, source]
        self.right[:, target] = self.right[:, target] + k * self.right[:, source]


def _nonzero_min_abs(A: np.ndarray, s: int) -> Tuple[Optional[int], Optional[int]]:
    best = (None, None)
    best_value = None
    for i in range(s, A.shape[0]):
        for j in range(s, A.shape[1]):
            value = abs(A[i, j])
            if value and (best_value is None or value < best_value):
                best, best_value = (i, j), value
    return best


def smith_normal_form(matrix) -> SNFResult:
    return SmithNormalForm(matrix).compute()


# ============================================================================
# DETERMINANTAL DIVISORS
# ============================================================================

def integer_determinant(matrix: Sequence[Sequence[int]]) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination"""
    M = [list(map(int, row)) for row in matrix]
    n = len(M)
    if n == 0:
        return 1
    sign = 1
    previous = 1
    for k in range(n - 1):
        if M[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if M[i][k] != 0), None)
            if swap is None:
                return 0
            M[k], M[swap] = M[swap], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // previous
        previous = M[k][k]
    return sign * M[n - 1][n - 1]


def gcd_of_minors(matrix, i: int) -> int:
    """gcd of all i x i minors"""
    A = np.array(matrix, dtype=object)
    rows, cols = A.shape
    if not 1 <= i <= min(rows, cols):
        raise ValueError(f"minor size {i} outside 1..{min(rows, cols)}")
    minors = (integer_determinant(A[np.ix_(r, c)].tolist())
              for r in combinations(range(rows), i)
              for c in combinations(range(cols), i))
    return reduce(gcd, minors, 0)


def invariant_factors_from_minors(matrix) -> List[int]:
    """d_i = Delta_i / Delta_(i-1), padded with zeros once Delta_i vanishes"""
    A = np.array(matrix, dtype=object)
    size = min(A.shape) if A.ndim == 2 else 0
    factors = []
    previous = 1
    for i in range(1, size + 1):
        delta = gcd_of_minors(A, i)
        if delta == 0:
            factors.extend([0] * (size - i + 1))
            break
        factors.append(delta // previous)
        previous = delta
    return factors


# ============================================================================
# ABELIANIZATION
# ============================================================================

def abelianization(presentation: Presentation) -> AbelianGroupDesc:
    snf = smith_normal_form(relation_matrix(presentation))
    torsion = [d for d in snf.diagonal if d > 1]
    free_rank = len(presentation.generators) - snf.rank
    return AbelianGroupDesc(torsion=torsion, free_rank=free_rank)


def theorem_case(m: int) -> AbelianGroupDesc:
    """Closed-form abelianization of SL_2(Z[1/m]) by divisibility of m by 2 and 3"""
    if not isinstance(m, int) or m < 1:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    two, three = m % 2 == 0, m % 3 == 0
    if two and three:
        return AbelianGroupDesc.trivial()
    if two:
        return AbelianGroupDesc.cyclic(3)
    if three:
        return AbelianGroupDesc.cyclic(4)
    return AbelianGroupDesc.cyclic(12)


def printed_formula_value(m: int) -> int:
    """gcd(m^2 + 1, 12m, 4m^2 + 8) as it appears in print"""
    return gcd(gcd(m * m + 1, 12 * m), 4 * m * m + 8)


def formula_cross_check(m_values: Iterable[int]) -> List[FormulaCrossCheck]:
    rows = []
    disagreements = []
    for m in m_values:
        presentation = make_hm(m)
        factor = smith_normal_form(relation_matrix(presentation)).diagonal[1]
        computed = abelianization(presentation)
        expected = theorem_case(m)
        printed = printed_formula_value(m)
        closed_form = gcd(m * m - 1, 12)
        rows.append(FormulaCrossCheck(
            m=m,
            snf_factor=factor,
            gcd_m2_minus_1=closed_form,
            printed_value=printed,
            theorem_case=str(expected),
            computed=str(computed),
            agrees=factor == closed_form and computed == expected,
            printed_agrees=printed == factor,
        ))
        if printed != factor:
            disagreements.append(m)
            logger.debug(f"m={m}: printed formula gives {printed}, relation matrix gives {factor}")

    if disagreements:
        logger.warning(f"Printed gcd formula disagrees with the relation matrix for "
                       f"{len(disagreements)} of {len(rows)} values of m (first: m={disagreements[0]})")
    return rows


def formula_frame(rows: List[FormulaCrossCheck]) -> pd.DataFrame:
    return pd.DataFrame([row.model_dump() for row in rows]).set_index("m")


def abelianization_report(presentation: Presentation) -> AbelianizationReport:
    matrix = relation_matrix(presentation)
    snf = smith_normal_form(matrix)
    desc = abelianization(presentation)
    return AbelianizationReport(
        presentation=presentation.name or repr(presentation),
        description=str(desc),
        invariant_factors=snf.diagonal,
        torsion=list(desc.torsion),
        free_rank=desc.free_rank,
        primary_parts=desc.primary_parts(),
        relation_matrix=[[int(v) for v in row] for row in matrix.tolist()],
    )


class AbelianizationMap:
    """
    Projection of exponent vectors onto Z^g / (relation lattice), read off the
    left SNF transform
    """

    def __init__(self, presentation: Presentation):
        self.presentation = presentation
        self.snf = smith_normal_form(relation_matrix(presentation))
        self.group = abelianization(presentation)
        rows = len(presentation.generators)
        padded = self.snf.diagonal + [0] * (rows - len(self.snf.diagonal))
        self._moduli = padded

    def coordinates(self, exponent_vector: Sequence[int]) -> List[int]:
        """Coordinates in the product of Z/d_k (d_k > 1) and the free Z factors"""
        v = np.array(list(exponent_vector), dtype=object)
        image = self.snf.left.dot(v)
        coords = []
        for value, d in zip(image.tolist(), self._moduli):
            if d == 1:
                continue
            coords.append(int(value) % d if d else int(value))
        return coords

    @property
    def cyclic_order(self) -> int:
        if self.group.free_rank or len(self.group.torsion) > 1:
            raise ValueError(f"abelianization {self.group} is not finite cyclic")
        return self.group.order()

    def cyclic_class(self, exponent_vector: Sequence[int]) -> int:
        """Class in Z/n, normalized so that the first generator maps to 1"""
        n = self.cyclic_order
        if n == 1:
            return 0
        unit = [1] + [0] * (len(self.presentation.generators) - 1)
        base = self.coordinates(unit)[0]
        if gcd(base, n) != 1:
            raise ValueError(f"generator {self.presentation.generators[0]!r} does not "
                             f"generate the abelianization {self.group}")
        return self.coordinates(exponent_vector)[0] * pow(base, -1, n) % n


def cyclic_class(presentation: Presentation, exponent_vector: Sequence[int]) -> int:
    return AbelianizationMap(presentation).cyclic_class(exponent_vector)

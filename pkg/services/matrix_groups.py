"""
matrix_groups.py
Matrix Groups
Evaluation of words as matrices over Z[1/m] and Z/rZ, the exact identity suite
behind the surjection x -> A, y -> Q_m, and breadth-first enumeration of
SL_2(Z/rZ) as a ground-truth oracle
"""

from collections import deque
from math import gcd
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union
import logging

import numpy as np

from models.reports import (
    CheckResult,
    GroupOrderReport,
    LemmaReport,
    RelationCheckReport,
    RelationFailure,
    ResidueCampaignReport,
)
from services.exact_arithmetic import (
    Mat2M,
    MatrixSyntaxError,
    MFraction,
    ResidueMat2,
    format_matrix,
    matrix_a,
    matrix_b,
    matrix_q,
    matrix_u,
    parse_matrix,
    reduce_mod_r,
)
from services.presentations import (
    Presentation,
    make_hm,
    rewritten_tietze_relators,
    tietze_substitutions,
)
from services.words import GENERATOR_NAME, MissingGeneratorError, Word

logger = logging.getLogger(__name__)

Matrix = Union[Mat2M, ResidueMat2]

DEFAULT_MAX_ELEMENTS = 10 ** 7


class GroupTooLargeError(RuntimeError):
    """Breadth-first enumeration passed its element cap"""


class Assignment:
    """Images of generators as unimodular matrices over one ring"""

    def __init__(self, images: Dict[str, Matrix], name: str = ""):
        if not images:
            raise ValueError("an assignment needs at least one generator image")
        self.images = dict(images)
        self.name = name

        kinds = {type(image) for image in self.images.values()}
        if len(kinds) != 1:
            raise ValueError("assignment mixes matrices over Z[1/m] and Z/rZ")
        self.residue = kinds.pop() is ResidueMat2
        ambients = {image.r if self.residue else image.m for image in self.images.values()}
        if len(ambients) != 1:
            raise ValueError(f"assignment mixes ambient rings {sorted(ambients)}")
        self.ambient = ambients.pop()

        for gen, image in self.images.items():
            if image.det() != 1:
                raise ValueError(f"image of {gen!r} has determinant {image.det()}, not 1")

    @property
    def ring(self) -> str:
        return f"Z/{self.ambient}Z" if self.residue else f"Z[1/{self.ambient}]"

    def identity(self) -> Matrix:
        if self.residue:
            return ResidueMat2.identity(self.ambient)
        return Mat2M.identity(self.ambient)

    def reduce(self, r: int) -> "Assignment":
        """Assignment composed with Z[1/m] -> Z/rZ"""
        if self.residue:
            raise ValueError("assignment is already over a residue ring")
        return Assignment({g: reduce_mod_r(M, r) for g, M in self.images.items()},
                          name=f"{self.name} mod {r}")

    def __repr__(self) -> str:
        body = ", ".join(f"{g} -> {_format(M)}" for g, M in self.images.items())
        return f"Assignment({body} over {self.ring})"


def _format(matrix: Matrix) -> str:
    if isinstance(matrix, ResidueMat2):
        a, b, c, d = matrix.entries()
        return f"[[{a}, {b}], [{c}, {d}]]"
    return format_matrix(matrix)


def phi_assignment(m: int) -> Assignment:
    """x -> A, y -> Q_m"""
    return Assignment({"x": matrix_a(m), "y": matrix_q(m)}, name=f"phi_{m}")


def sbm_assignment() -> Assignment:
    """a -> A, b -> B, u -> U_2"""
    return Assignment({"a": matrix_a(2), "b": matrix_b(2), "u": matrix_u(2)}, name="SBM")


def abq_assignment() -> Assignment:
    """a -> A, q -> Q_2, the images after the Tietze chain"""
    return Assignment({"a": matrix_a(2), "q": matrix_q(2)}, name="a,q")


def abu_assignment(m: int) -> Assignment:
    """Abstract generators A, B, U of the decomposition alphabet"""
    return Assignment({"A": matrix_a(m), "B": matrix_b(m), "U": matrix_u(m)}, name=f"ABU_{m}")


def evaluate(word: Word, assignment: Assignment) -> Matrix:
    """Image of a word; the empty word maps to the identity"""
    result = assignment.identity()
    for gen, exp in word.syllables:
        image = assignment.images.get(gen)
        if image is None:
            raise MissingGeneratorError(f"assignment has no image for generator {gen!r}")
        result = result * image ** exp
    return result


def check_words(labelled: Sequence[Tuple[str, Word]], assignment: Assignment,
                name: str) -> RelationCheckReport:
    failures = []
    for index, (label, word) in enumerate(labelled):
        image = evaluate(word, assignment)
        if not image.is_identity():
            failures.append(RelationFailure(index=index, relator=f"{label}: {word}",
                                            image=_format(image)))
    if failures:
        logger.info(f"{name} over {assignment.ring}: {len(failures)} of {len(labelled)} relators fail")
    return RelationCheckReport(presentation=name, ring=assignment.ring,
                               relator_count=len(labelled), failures=failures)


def check_relations(presentation: Presentation, assignment: Assignment) -> RelationCheckReport:
    """Evaluate every relator; passes iff each image is the identity"""
    missing = set(presentation.generators) - set(assignment.images)
    if missing:
        raise MissingGeneratorError(f"assignment has no image for {sorted(missing)}")
    labelled = [(f"r{i + 1}", rel) for i, rel in enumerate(presentation.relators)]
    return check_words(labelled, assignment, presentation.name or repr(presentation))


# ============================================================================
# EXACT IDENTITY SUITE
# ============================================================================

def verify_lemma_identities(m: int) -> LemmaReport:
    """Exact identities among A, Q_m, B and U_m for one m"""
    if not isinstance(m, int) or m < 1:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    A, Q, B, U = matrix_a(m), matrix_q(m), matrix_b(m), matrix_u(m)
    params = {"m": str(m)}
    checks = []

    def record(name: str, passed: bool, details: str):
        checks.append(CheckResult(name=name, parameters=params, passed=passed, details=details))

    target = Mat2M(0, MFraction(-1, 1, m), m, 0, m)
    left, right = A ** m * Q * A ** m, Q * A ** m * Q
    record("A^m Q A^m = Q A^m Q = (0, -1/m; m, 0)", left == target and right == target,
           f"A^m Q A^m = {left}, Q A^m Q = {right}")

    target = Mat2M(0, -1, 1, 0, m)
    left, right = Q ** m * A * Q ** m, A * Q ** m * A
    record("Q^m A Q^m = A Q^m A = (0, -1; 1, 0)", left == target and right == target,
           f"Q^m A Q^m = {left}, A Q^m A = {right}")

    product = A ** 2 * Q ** m
    order = product.order_if_finite(limit=12)
    record("A^2 Q^m = (1, -1; 2, -1) has order 4",
           product == Mat2M(1, -1, 2, -1, m) and order == 4,
           f"A^2 Q^m = {product}, order {order}")

    candidate = A.inverse() * Q ** -m * A.inverse()
    record("B = A^-1 Q^-m A^-1", candidate == B, f"A^-1 Q^-m A^-1 = {candidate}")

    candidate = B.inverse() * Q.inverse() * A ** -m * Q.inverse()
    record("U = B^-1 Q^-1 A^-m Q^-1", candidate == U, f"B^-1 Q^-1 A^-m Q^-1 = {candidate}")

    conjugate = U.inverse() * A * U
    record("U^-1 A U = A^(m^2)", conjugate == A ** (m * m), f"U^-1 A U = {conjugate}")

    report = LemmaReport(m=m, checks=checks)
    if not report.passed:
        failed = [c.name for c in checks if not c.passed]
        logger.warning(f"Identity suite failed for m={m}: {failed}")
    return report


# ============================================================================
# BREADTH-FIRST ENUMERATION OVER Z/rZ
# ============================================================================

class GroupEnumeration:
    """Element set of the subgroup of SL_2(Z/rZ) generated by some matrices"""

    def __init__(self, r: int, elements: Set[int], generators: List[ResidueMat2]):
        self.r = r
        self.elements = elements
        self.generators = generators

    @property
    def order(self) -> int:
        return len(self.elements)

    def __contains__(self, matrix: ResidueMat2) -> bool:
        return matrix.r == self.r and matrix.encode() in self.elements

    def __iter__(self):
        for code in sorted(self.elements):
            yield ResidueMat2.decode(code, self.r)

    def __repr__(self) -> str:
        return f"GroupEnumeration(r={self.r}, order={self.order})"


def _closure(r: int, generators: Sequence[ResidueMat2], max_elements: int) -> Set[int]:
    steps = list(generators) + [g.inverse() for g in generators]
    start = ResidueMat2.identity(r)
    seen = {start.encode()}
    queue = deque([start])
    while queue:
        current = queue.popleft()
        for step in steps:
            nxt = step * current
            code = nxt.encode()
            if code not in seen:
                seen.add(code)
                if len(seen) > max_elements:
                    raise GroupTooLargeError(
                        f"more than {max_elements} elements generated mod {r}")
                queue.append(nxt)
    return seen


def bfs_group_order(generators: Sequence[ResidueMat2], r: int,
                    max_elements: int = DEFAULT_MAX_ELEMENTS) -> GroupEnumeration:
    """Closure of the identity under left multiplication by generators and inverses"""
    if r < 2:
        raise ValueError(f"modulus must be at least 2, got {r}")
    for g in generators:
        if g.r != r:
            raise ValueError(f"generator {g!r} is not a matrix mod {r}")
        if g.det() != 1:
            raise ValueError(f"generator {g!r} does not have determinant 1 mod {r}")

    elements = _closure(r, generators, max_elements)
    logger.debug(f"BFS mod {r}: {len(elements)} elements from {len(generators)} generators")
    return GroupEnumeration(r, elements, list(generators))


def corollary_generators(r: int, m: int = 2) -> List[ResidueMat2]:
    """A mod r and Q_m mod r"""
    return [reduce_mod_r(matrix_a(m), r), reduce_mod_r(matrix_q(m), r)]


def _factorize(n: int) -> Dict[int, int]:
    factors: Dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            factors[p] = factors.get(p, 0) + 1
            n //= p
        p += 1
    if n > 1:
        factors[n] = factors.get(n, 0) + 1
    return factors


def exhaustive_sl2_count(r: int, brute_force_limit: int = 7) -> int:
    """
    |SL_2(Z/rZ)| without group enumeration: all 4-tuples for small r, and the
    prime-power count p^(3k-2) (p^2 - 1) multiplied over the factors of r otherwise
    """
    if r < 2:
        raise ValueError(f"modulus must be at least 2, got {r}")
    if r <= brute_force_limit:
        a, b, c, d = np.indices((r, r, r, r), dtype=np.int64)
        return int(np.count_nonzero((a * d - b * c) % r == 1))

    total = 1
    for p, k in _factorize(r).items():
        total *= p ** (3 * k - 2) * (p * p - 1)
    return total


def group_order_report(r: int, max_elements: int = DEFAULT_MAX_ELEMENTS) -> GroupOrderReport:
    generators = corollary_generators(r)
    enumeration = bfs_group_order(generators, r, max_elements)
    return GroupOrderReport(r=r, generators=[_format(g) for g in generators],
                            bfs_order=enumeration.order,
                            exhaustive_order=exhaustive_sl2_count(r))


class FiniteAbelianization:
    """Derived subgroup and cyclic quotient of an enumerated finite matrix group"""

    def __init__(self, enumeration: GroupEnumeration):
        self.enumeration = enumeration
        r = enumeration.r
        gens = enumeration.generators
        if not gens:
            self.derived = {ResidueMat2.identity(r).encode()}
        else:
            normal_gens = [g.inverse() * h.inverse() * g * h for g in gens for h in gens]
            derived = _closure(r, normal_gens, enumeration.order)
            # Close under conjugation by the generators
            while True:
                missing = {}
                for code in derived:
                    element = ResidueMat2.decode(code, r)
                    for g in gens:
                        conj = g * element * g.inverse()
                        if conj.encode() not in derived:
                            missing[conj.encode()] = conj
                if not missing:
                    break
                normal_gens.extend(missing[code] for code in sorted(missing))
                derived = _closure(r, normal_gens, enumeration.order)
            self.derived = derived

        self.order = enumeration.order // len(self.derived)
        self._generator_powers: List[ResidueMat2] = []
        if gens:
            x = gens[0]
            power = ResidueMat2.identity(r)
            for _ in range(self.order):
                self._generator_powers.append(power)
                power = power * x
            if power.encode() not in self.derived or any(
                    p.encode() in self.derived for p in self._generator_powers[1:]):
                raise ValueError("the first generator does not generate the abelianization")
        logger.debug(f"Abelianization mod {r}: |G| = {enumeration.order}, "
                     f"|G'| = {len(self.derived)}, |G^ab| = {self.order}")

    def class_of(self, matrix: ResidueMat2) -> int:
        """k such that matrix lies in x^k G', x the first generator"""
        if matrix not in self.enumeration:
            raise ValueError(f"{matrix!r} is not in the enumerated group")
        for k, power in enumerate(self._generator_powers):
            if (power.inverse() * matrix).encode() in self.derived:
                return k
        raise ValueError(f"no coset of the derived subgroup contains {matrix!r}")


def finite_abelianization(enumeration: GroupEnumeration) -> FiniteAbelianization:
    return FiniteAbelianization(enumeration)


# ============================================================================
# RESIDUE CAMPAIGN
# ============================================================================

def _validated_moduli(moduli: Iterable[int], m: int) -> List[int]:
    moduli = list(moduli)
    if not moduli:
        raise ValueError("residue campaign needs at least one modulus")
    for r in moduli:
        if not isinstance(r, int) or r < 2:
            raise ValueError(f"modulus must be an integer >= 2, got {r!r}")
        if gcd(r, m) != 1:
            raise ValueError(f"modulus {r} is not coprime to m={m}")
    return moduli


def tietze_chain_checks(assignment_reduction: Optional[int] = None) -> List[RelationCheckReport]:
    """
    Tietze-chain relators over {a, q} under a -> A, q -> Q_2, and H_2 rewritten
    through x -> a, y -> b u a^2 u^-1 b^-1 under the SBM assignment
    """
    abq, sbm = abq_assignment(), sbm_assignment()
    if assignment_reduction is not None:
        abq, sbm = abq.reduce(assignment_reduction), sbm.reduce(assignment_reduction)

    introduce_q = tietze_substitutions()["introduce_q"]
    reverse = [(f"r{i + 1} via q = bua^2u^-1b^-1", introduce_q(rel))
               for i, rel in enumerate(make_hm(2).relators)]
    return [
        check_words(rewritten_tietze_relators(), abq, "Tietze chain over {a, q}"),
        check_words(reverse, sbm, "H_2 rewritten over {a, b, u}"),
    ]


def residue_campaign(presentation: Presentation, assignment: Assignment,
                     moduli: Iterable[int], include_tietze_chain: Optional[bool] = None) -> ResidueCampaignReport:
    """
    Relation checks of the presentation in each residue quotient; over Z[1/2]
    the Tietze-chain relators are checked exactly and in every quotient too
    """
    if assignment.residue:
        raise ValueError("residue campaign needs an assignment over Z[1/m]")
    m = assignment.ambient
    moduli = _validated_moduli(moduli, m)
    if include_tietze_chain is None:
        include_tietze_chain = m == 2

    reports = [check_relations(presentation, assignment)]
    if include_tietze_chain:
        reports.extend(tietze_chain_checks())
    for r in moduli:
        reports.append(check_relations(presentation, assignment.reduce(r)))
        if include_tietze_chain:
            reports.extend(tietze_chain_checks(r))

    report = ResidueCampaignReport(m=m, moduli=moduli, reports=reports)
    logger.info(f"Residue campaign for {presentation.name or 'presentation'} over moduli "
                f"{moduli}: {'pass' if report.passed else 'FAIL'}")
    return report


# ============================================================================
# ASSIGNMENT FILE FORMAT
# ============================================================================

def parse_assignment(text: str, m: int) -> Assignment:
    """One `gen = [[p, q], [r, s]]` line per generator; `#` starts a comment"""
    images: Dict[str, Mat2M] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        if not content.strip():
            continue
        gen, sep, body = content.partition("=")
        gen = gen.strip()
        if not sep or not GENERATOR_NAME.match(gen):
            raise MatrixSyntaxError(f"line {lineno}: expected `gen = [[..], [..]]`", column=1)
        if gen in images:
            raise MatrixSyntaxError(f"line {lineno}: duplicate image for {gen!r}", column=1)
        try:
            images[gen] = parse_matrix(body, m)
        except MatrixSyntaxError as e:
            column = None if e.column is None else content.index("=") + 1 + e.column
            raise MatrixSyntaxError(f"line {lineno}: {e}", column=column)
    return Assignment(images, name="file")


def format_assignment(assignment: Assignment) -> str:
    return "".join(f"{g} = {_format(M)}\n" for g, M in assignment.images.items())

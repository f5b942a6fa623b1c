import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from services.decomposition import (
    DecompositionError,
    EuclideanReduction,
    GeneratorWordABU,
    GeneratorWordXY,
    abelianization_image,
    abelianization_order,
    abu_to_xy,
    decompose_to_abu,
    decompose_to_xy,
    decomposition_report,
    diagonal_word,
    lower_word,
    residue_class_checks,
    rewrite_abu_to_xy,
    round_trip_sample,
    upper_word,
    word_class,
)
from services.exact_arithmetic import (
    Mat2M,
    MFraction,
    NotUnimodularError,
    elementary_lower,
    elementary_upper,
    euclidean_norm,
    matrix_a,
    matrix_b,
    matrix_q,
    matrix_u,
)
from services.matrix_groups import abu_assignment, evaluate, phi_assignment
from services.words import Word, random_word

M_VALUES = [1, 2, 3, 5, 6, 10]


def random_matrix(m: int, rng: np.random.Generator, length: int = 30) -> Mat2M:
    return evaluate(random_word(("x", "y"), length, rng), phi_assignment(m))


def test_identity_decomposes_to_empty_word():
    for m in M_VALUES:
        assert decompose_to_abu(Mat2M.identity(m)).word.is_identity()
        assert decompose_to_xy(Mat2M.identity(m)).word.is_identity()


def test_a_decomposes_to_itself():
    assert str(decompose_to_abu(matrix_a(2))) == "A"
    assert str(decompose_to_xy(matrix_a(7))) == "x"


@pytest.mark.parametrize("m", M_VALUES)
def test_lemma_matrix_round_trip(m):
    target = Mat2M(0, MFraction(-1, 1, m), m, 0, m)
    xy = decompose_to_xy(target)
    assert evaluate(xy.word, phi_assignment(m)) == target
    lemma_word = Word.generator("x", m) * Word.generator("y") * Word.generator("x", m)
    assert word_class(xy.word, m) == word_class(lemma_word, m)


def test_elementary_words():
    for m in (2, 3, 6):
        abu = abu_assignment(m)
        for t in (MFraction(5, 3, m), MFraction(-7, 0, m), MFraction(1, 4, m), MFraction(-1, 1, m)):
            assert evaluate(lower_word(t), abu) == elementary_lower(t)
            assert evaluate(upper_word(t), abu) == elementary_upper(t)


def test_lower_word_uses_ceiling_half_exponent():
    # 5/8 over Z[1/2]: j = 2, e = 5 * 2
    assert lower_word(MFraction(5, 3, 2)) == Word([("U", 2), ("A", 10), ("U", -2)])
    assert lower_word(MFraction(0, 0, 2)).is_identity()


@given(m=st.sampled_from([2, 3, 6, 10]), e=st.integers(-50, 50), j=st.integers(0, 4))
def test_conjugating_by_u_divides_lower_entry(m, e, j):
    U = matrix_u(m)
    assert U == Mat2M(m, 0, 0, MFraction(1, 1, m), m)
    conjugate = U ** j * matrix_a(m) ** e * U ** -j
    assert conjugate == elementary_lower(MFraction(e, 2 * j, m))


def test_diagonal_words():
    for m, u in ((2, MFraction(4, 0, 2)), (2, MFraction(-1, 3, 2)), (6, MFraction(2, 0, 6)),
                 (6, MFraction(-1, 2, 6)), (10, MFraction(-5, 0, 10)), (1, MFraction(-1, 0, 1))):
        expected = Mat2M(u, 0, 0, u.inverse_unit(), m)
        assert evaluate(diagonal_word(u), abu_assignment(m)) == expected
    assert diagonal_word(MFraction(-4, 0, 2)) == Word([("B", 2), ("U", 2)])


def test_non_unimodular_input_rejected():
    with pytest.raises(NotUnimodularError):
        decompose_to_abu(Mat2M(2, 0, 0, 1, 2))


def test_certified_words_check_on_construction():
    with pytest.raises(DecompositionError):
        GeneratorWordABU(Word.generator("B"), matrix_a(2))
    with pytest.raises(ValueError):
        GeneratorWordXY(Word.generator("A"), matrix_a(2))
    assert len(GeneratorWordXY(Word.generator("x", 3), matrix_a(3) ** 3)) == 3


def test_rewrite_rules():
    m = 3
    x, y = Word.generator("x"), Word.generator("y")
    rules = abu_to_xy(m)
    assert rules(Word.generator("B")) == x.inverse() * y ** -m * x.inverse()
    assert rules(Word.generator("U")) == x * y ** m * x * y.inverse() * x ** -m * y.inverse()
    assert rules(Word()).is_identity()
    for gen in "ABU":
        image = evaluate(rules(Word.generator(gen)), phi_assignment(m))
        assert image == abu_assignment(m).images[gen]


def test_rewrite_keeps_the_matrix():
    M = matrix_u(5) * matrix_b(5) * matrix_a(5) ** 3
    abu = decompose_to_abu(M)
    xy = rewrite_abu_to_xy(abu)
    assert xy.matrix == M
    assert xy.word.generators() <= {"x", "y"}


def test_norm_descends_at_every_step(rng):
    for m in M_VALUES:
        for _ in range(20):
            M = random_matrix(m, rng)
            reduction = EuclideanReduction(M)
            trace = reduction.norm_trace
            assert all(later < earlier for earlier, later in zip(trace, trace[1:]))
            assert reduction.upper.c == 0
            if M.c != 0:
                assert trace[0] == euclidean_norm(M.c)


@pytest.mark.parametrize("m", M_VALUES)
def test_round_trip_small_sample(m, rng):
    assert round_trip_sample(m, 40, 40, rng) == []


@pytest.mark.slow
@pytest.mark.parametrize("m", M_VALUES)
def test_round_trip_acceptance_sample(m):
    assert round_trip_sample(m, 500, 40, np.random.default_rng([0, m])) == []


@settings(max_examples=50, deadline=None)
@given(m=st.sampled_from(M_VALUES), seed=st.integers(0, 2 ** 32 - 1))
def test_abelianization_image_is_additive(m, seed):
    rng = np.random.default_rng(seed)
    M, N = random_matrix(m, rng, 20), random_matrix(m, rng, 20)
    n = abelianization_order(m)
    assert abelianization_image(M * N) == (abelianization_image(M) + abelianization_image(N)) % n


def test_abelianization_image_does_not_depend_on_the_word(rng):
    for m in (1, 2, 3, 5):
        M = random_matrix(m, rng)
        A = matrix_a(m)
        # Different decompositions of M: pad with canceling generator pairs
        padded = decompose_to_xy(M * A).word * Word.generator("x", -1)
        assert evaluate(padded, phi_assignment(m)) == M
        assert word_class(padded, m) == abelianization_image(M)
        conjugated = decompose_to_xy(A.inverse() * M * A).word
        assert word_class(conjugated, m) == abelianization_image(M)


def test_abelianization_image_examples():
    assert abelianization_image(Mat2M.identity(2)) == 0
    assert abelianization_image(matrix_a(1)) == 1
    assert abelianization_image(matrix_q(1)) == 1
    assert abelianization_image(matrix_q(2)) == 2
    assert abelianization_image(matrix_b(1)) == 9
    assert abelianization_order(1) == 12


def test_trivial_target_when_six_divides_m(rng):
    for _ in range(10):
        assert abelianization_image(random_matrix(6, rng)) == 0
    assert abelianization_order(6) == 1


def test_residue_classes_agree(rng):
    for m in (1, 2, 5, 7):
        for _ in range(10):
            checks = residue_class_checks(random_matrix(m, rng))
            assert all(checks.values())
            assert set(checks) == {r for r in (3, 4) if np.gcd(r, m) == 1}


def test_decomposition_report():
    M = Mat2M(0, MFraction(-1, 1, 2), 2, 0, 2)
    report = decomposition_report(M, "xy")
    assert report.verified
    assert report.alphabet == "xy"
    assert report.matrix == "[[0, -1/2], [2, 0]]"
    assert set(report.word) <= set("xy^*-0123456789")
    assert report.abelianization_order == 3
    assert report.abelianization_class == abelianization_image(M)
    assert report.norm_trace == ["1"]
    with pytest.raises(ValueError):
        decomposition_report(M, "abc")

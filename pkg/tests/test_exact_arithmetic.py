from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from services.exact_arithmetic import (
    Mat2M,
    MatrixSyntaxError,
    MFraction,
    NotUnimodularError,
    ResidueMat2,
    euclidean_divmod,
    euclidean_norm,
    format_matrix,
    mat2_inv,
    mat2_mul,
    mat2_pow,
    matrix_a,
    matrix_b,
    matrix_from_json,
    matrix_q,
    matrix_to_json,
    matrix_u,
    mf_canonicalize,
    parse_matrix,
    reduce_mod_r,
    split_m_part,
)

AMBIENTS = st.sampled_from([2, 3, 5, 6, 10, 12])


def elements(m_strategy=AMBIENTS):
    return st.builds(lambda n, k, m: MFraction(n, k, m),
                     st.integers(-10 ** 6, 10 ** 6), st.integers(0, 5), m_strategy)


def test_canonical_form_strips_powers_of_m():
    x = MFraction(12, 2, 2)
    assert (x.numerator, x.exponent) == (3, 0)
    assert x == 3
    assert str(MFraction(3, 2, 2)) == "3/4"
    assert str(MFraction(-7, 0, 5)) == "-7"


def test_named_operations():
    x = mf_canonicalize(8, 2, 4)
    assert (x.numerator, x.exponent) == (2, 1)
    assert (mf_canonicalize(2, 2, 4).numerator, mf_canonicalize(2, 2, 4).exponent) == (2, 2)
    assert mf_canonicalize(6, 0, 5) == 6
    assert mf_canonicalize(5, 3, 1).exponent == 0
    with pytest.raises(ValueError):
        mf_canonicalize(1, 0, 0)

    A, U = matrix_a(3), matrix_u(3)
    assert mat2_mul(A, mat2_inv(A)) == Mat2M.identity(3)
    assert mat2_pow(A, -2) == Mat2M(1, 0, -2, 1, 3)
    assert mat2_pow(U, 0) == Mat2M.identity(3)
    assert mat2_mul(mat2_pow(U, 2), mat2_pow(U, -1)) == U


def test_zero_has_exponent_zero():
    assert MFraction(0, 4, 3).exponent == 0
    assert not MFraction(0, 4, 3)


def test_split_m_part_never_factors_m():
    assert split_m_part(360, 6) == (5, 72)
    assert split_m_part(-20, 10) == (1, -20)
    with pytest.raises(ValueError):
        split_m_part(0, 6)


def test_euclidean_norm_examples():
    assert euclidean_norm(MFraction(12, 0, 2)) == 3
    assert euclidean_norm(MFraction(10, 0, 6)) == 5
    assert euclidean_norm(MFraction(-9, 3, 3)) == 1
    with pytest.raises(ValueError):
        euclidean_norm(MFraction(0, 0, 2))


@given(m=AMBIENTS, x=st.integers(1, 10 ** 5), y=st.integers(1, 10 ** 5),
       j=st.integers(0, 3), k=st.integers(0, 3))
def test_euclidean_norm_is_multiplicative(m, x, y, j, k):
    a, b = MFraction(x, j, m), MFraction(-y, k, m)
    assert euclidean_norm(a * b) == euclidean_norm(a) * euclidean_norm(b)


@given(data=st.data(), m=AMBIENTS)
def test_euclidean_divmod_remainder_bound(data, m):
    alpha = data.draw(elements(st.just(m)))
    beta = data.draw(elements(st.just(m)).filter(bool))
    q, rho = euclidean_divmod(alpha, beta)
    assert q * beta + rho == alpha
    assert rho == 0 or euclidean_norm(rho) < euclidean_norm(beta)


def test_euclidean_divmod_rejects_zero_and_mixed_ambients():
    with pytest.raises(ZeroDivisionError):
        euclidean_divmod(MFraction(1, 0, 2), MFraction(0, 0, 2))
    with pytest.raises(ValueError):
        euclidean_divmod(MFraction(1, 0, 2), MFraction(1, 0, 3))


@given(x=elements(), y=elements())
def test_ring_laws(x, y):
    if x.m != y.m:
        y = MFraction(y.numerator, y.exponent, x.m)
    assert x + y == y + x
    assert x * y == y * x
    assert (x + y) - y == x
    assert x * (y + 1) == x * y + x


def test_units_of_composite_ambient():
    two = MFraction(2, 0, 6)
    assert two.is_unit()
    assert two.inverse_unit() == MFraction(3, 1, 6)
    assert two * two.inverse_unit() == 1
    assert MFraction(-8, 0, 2).inverse_unit() == MFraction(-1, 3, 2)
    assert not MFraction(3, 0, 2).is_unit()
    with pytest.raises(ValueError):
        MFraction(5, 0, 6).inverse_unit()


def test_from_fraction_checks_denominator():
    assert MFraction.from_fraction(Fraction(-1, 2), 2) == MFraction(-1, 1, 2)
    assert MFraction.from_fraction(Fraction(5, 4), 6) == MFraction(45, 2, 6)
    with pytest.raises(ValueError):
        MFraction.from_fraction(Fraction(1, 3), 2)


def test_named_matrices():
    for m in (1, 2, 3, 6):
        A, B, U = matrix_a(m), matrix_b(m), matrix_u(m)
        assert A.is_unimodular() and B.is_unimodular() and U.is_unimodular()
        assert B ** 2 == Mat2M(-1, 0, 0, -1, m)
        assert B.order_if_finite() == 4
        assert A * A.inverse() == Mat2M.identity(m)
        assert U ** -1 == Mat2M(MFraction(1, 1, m), 0, 0, m, m)
    assert matrix_a(2).order_if_finite() is None


def test_matrix_power_matches_repeated_product():
    Q = matrix_q(3)
    product = Mat2M.identity(3)
    for _ in range(7):
        product = product * Q
    assert Q ** 7 == product
    assert Q ** -7 == product.inverse()
    assert Q ** 0 == Mat2M.identity(3)


def test_inverse_rejects_non_unimodular():
    with pytest.raises(NotUnimodularError):
        Mat2M(2, 0, 0, 1, 2).inverse()


def test_entries_must_share_the_ambient():
    with pytest.raises(ValueError):
        Mat2M(MFraction(1, 1, 3), 0, 0, 1, 2)


def test_reduce_mod_r():
    assert reduce_mod_r(matrix_q(2), 3) == ResidueMat2(1, 1, 0, 1, 3)
    assert reduce_mod_r(matrix_u(2), 5) == ResidueMat2(2, 0, 0, 3, 5)
    with pytest.raises(ValueError):
        reduce_mod_r(matrix_q(2), 4)


def test_reduction_is_a_homomorphism():
    M = matrix_a(3) ** 5 * matrix_q(3) ** -4 * matrix_u(3)
    N = matrix_q(3) * matrix_b(3)
    for r in (2, 5, 7):
        assert reduce_mod_r(M * N, r) == reduce_mod_r(M, r) * reduce_mod_r(N, r)


@st.composite
def products(draw, m):
    named = (matrix_a(m), matrix_b(m), matrix_q(m), matrix_u(m))
    factors = draw(st.lists(st.tuples(st.sampled_from(named), st.integers(-6, 6)), max_size=8))
    result = Mat2M.identity(m)
    for matrix, e in factors:
        result = result * matrix ** e
    return result


@given(data=st.data(), m=AMBIENTS, r=st.sampled_from([7, 11, 13, 49, 77]))
def test_reduction_is_a_homomorphism_on_random_products(data, m, r):
    M, N = data.draw(products(m)), data.draw(products(m))
    assert (M * N).det() == M.det() * N.det() == 1
    assert reduce_mod_r(M * N, r) == reduce_mod_r(M, r) * reduce_mod_r(N, r)
    assert reduce_mod_r(M.inverse(), r) == reduce_mod_r(M, r).inverse()
    assert reduce_mod_r(M, r).det() == 1


@given(data=st.data(), r=st.integers(2, 40))
def test_residue_det_is_multiplicative(data, r):
    entries = st.tuples(*[st.integers(-10 ** 4, 10 ** 4)] * 4)
    M = ResidueMat2(*data.draw(entries), r)
    N = ResidueMat2(*data.draw(entries), r)
    assert (M * N).det() == (M.det() * N.det()) % r


def test_residue_matrices():
    M = ResidueMat2(2, 3, 1, 2, 5)
    assert M.det() == 1
    assert M * M.inverse() == ResidueMat2.identity(5)
    assert ResidueMat2.decode(M.encode(), 5) == M
    assert (M ** 4) * M == M ** 5
    with pytest.raises(ValueError):
        ResidueMat2(1, 0, 0, 1, 1)
    with pytest.raises(NotUnimodularError):
        ResidueMat2(2, 0, 0, 1, 4).inverse()


def test_parse_and_format_matrix():
    assert parse_matrix("[[1, -1/2], [0, 1]]", 2) == matrix_q(2)
    assert parse_matrix("[[ 0,1 ],[-1, 0]]", 7) == matrix_b(7)
    assert format_matrix(matrix_q(2)) == "[[1, -1/2], [0, 1]]"
    assert format_matrix(matrix_u(3) ** -2) == "[[1/9, 0], [0, 9]]"


def test_parse_matrix_errors():
    with pytest.raises(MatrixSyntaxError):
        parse_matrix("[[1, 1/3], [0, 1]]", 2)
    with pytest.raises(MatrixSyntaxError) as info:
        parse_matrix("[[1, 2], [3]]", 2)
    assert info.value.column is not None
    with pytest.raises(MatrixSyntaxError):
        parse_matrix("[[1, 2], [3, x]]", 2)


def test_matrix_json_encodes_big_integers_as_strings():
    M = matrix_a(2) ** (10 ** 30)
    data = matrix_to_json(M)
    assert data["rows"][1][0] == str(10 ** 30)
    assert matrix_from_json(data) == M
    with pytest.raises(MatrixSyntaxError):
        matrix_from_json({"rows": []})

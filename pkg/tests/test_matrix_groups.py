import pytest

from conftest import COROLLARY_ORDERS
from services.exact_arithmetic import Mat2M, MatrixSyntaxError, ResidueMat2, matrix_a, matrix_q, reduce_mod_r
from services.matrix_groups import (
    Assignment,
    GroupTooLargeError,
    abq_assignment,
    abu_assignment,
    bfs_group_order,
    check_relations,
    corollary_generators,
    evaluate,
    exhaustive_sl2_count,
    finite_abelianization,
    format_assignment,
    group_order_report,
    parse_assignment,
    phi_assignment,
    residue_campaign,
    sbm_assignment,
    tietze_chain_checks,
    verify_lemma_identities,
)
from services.presentations import make_corollary, make_hm, make_serre_behr_mennicke
from services.words import MissingGeneratorError, Word, random_word


def test_lemma_identities_for_every_m():
    for m in range(1, 201):
        report = verify_lemma_identities(m)
        assert report.passed, [c.name for c in report.checks if not c.passed]
        assert len(report.checks) == 6


def test_lemma_rejects_bad_m():
    with pytest.raises(ValueError):
        verify_lemma_identities(0)


def test_evaluate():
    x, y = Word.generator("x"), Word.generator("y")
    phi = phi_assignment(2)
    assert evaluate(Word(), phi) == Mat2M.identity(2)
    assert evaluate(x ** 3 * y ** -1, phi) == matrix_a(2) ** 3 * matrix_q(2).inverse()
    with pytest.raises(MissingGeneratorError):
        evaluate(Word.generator("z"), phi)


def test_hm_relators_hold_under_phi():
    for m in range(1, 201):
        assert check_relations(make_hm(m), phi_assignment(m)).passed


@pytest.mark.parametrize("m", [1, 2, 3, 6, 10])
def test_evaluate_is_a_homomorphism_on_random_words(m, rng):
    phi = phi_assignment(m)
    for _ in range(25):
        u = random_word(("x", "y"), int(rng.integers(0, 30)), rng)
        v = random_word(("x", "y"), int(rng.integers(0, 30)), rng)
        assert evaluate(u * v, phi) == evaluate(u, phi) * evaluate(v, phi)
        assert evaluate(u.inverse(), phi) == evaluate(u, phi).inverse()
        for r in (3, 5, 7, 11):
            if m % r:
                assert evaluate(u, phi.reduce(r)) == reduce_mod_r(evaluate(u, phi), r)


def test_sbm_relators_hold_for_a_b_u():
    report = check_relations(make_serre_behr_mennicke(), sbm_assignment())
    assert report.passed
    assert report.ring == "Z[1/2]"
    assert report.relator_count == 5


def test_wrong_ambient_fails():
    report = check_relations(make_hm(2), phi_assignment(3))
    assert not report.passed
    assert report.failures[0].index == 0


def test_missing_generator_image():
    with pytest.raises(MissingGeneratorError):
        check_relations(make_hm(2), Assignment({"x": matrix_a(2)}))


def test_assignment_validation():
    with pytest.raises(ValueError):
        Assignment({})
    with pytest.raises(ValueError):
        Assignment({"x": Mat2M(2, 0, 0, 1, 2)})
    with pytest.raises(ValueError):
        Assignment({"x": matrix_a(2), "y": matrix_a(3)})
    with pytest.raises(ValueError):
        Assignment({"x": matrix_a(2), "y": ResidueMat2(1, 1, 0, 1, 3)})
    assert abu_assignment(3).ring == "Z[1/3]"
    assert phi_assignment(2).reduce(5).ring == "Z/5Z"


def test_tietze_chain_relators_hold_exactly_and_mod_r():
    for report in tietze_chain_checks():
        assert report.passed, report.failures
    for r in (3, 5, 7, 11, 13):
        for report in tietze_chain_checks(r):
            assert report.passed, (r, report.failures)


def test_abq_images():
    assert abq_assignment().images["q"] == matrix_q(2)


def test_residue_campaign_for_h2():
    report = residue_campaign(make_hm(2), phi_assignment(2), [3, 5, 7, 11, 13])
    assert report.passed
    # exact H_2 check, two Tietze reports, then one H_2 and two Tietze reports per modulus
    assert len(report.reports) == 3 + 3 * 5


def test_residue_campaign_rejects_bad_moduli():
    with pytest.raises(ValueError):
        residue_campaign(make_hm(2), phi_assignment(2), [4])
    with pytest.raises(ValueError):
        residue_campaign(make_hm(2), phi_assignment(2), [])
    with pytest.raises(ValueError):
        residue_campaign(make_hm(2), phi_assignment(2).reduce(3), [5])


def test_residue_campaign_without_tietze_chain():
    report = residue_campaign(make_hm(5), phi_assignment(5), [3, 7])
    assert report.passed
    assert len(report.reports) == 3


def test_corollary_relators_hold_mod_r():
    for r in COROLLARY_ORDERS:
        assert check_relations(make_corollary(r), phi_assignment(2).reduce(r)).passed


@pytest.mark.parametrize("r, order", sorted(COROLLARY_ORDERS.items()))
def test_bfs_order_matches_exhaustive_count(r, order):
    assert bfs_group_order(corollary_generators(r), r).order == order
    assert exhaustive_sl2_count(r) == order


@pytest.mark.parametrize("r", [3, 9, 15])
def test_bfs_elements_ignore_generator_order_and_redundancy(r, rng):
    A, Q = corollary_generators(r)
    expected = bfs_group_order([A, Q], r).elements
    for _ in range(4):
        generators = [A, Q, A * Q, Q.inverse() * A ** 2]
        rng.shuffle(generators)
        assert bfs_group_order(generators, r).elements == expected
    assert bfs_group_order([Q, A], r).elements == expected
    assert len(expected) == COROLLARY_ORDERS[r]


def test_exhaustive_count_small_moduli():
    assert exhaustive_sl2_count(2) == 6
    assert exhaustive_sl2_count(4) == 48
    assert exhaustive_sl2_count(8) == 384
    assert exhaustive_sl2_count(12) == exhaustive_sl2_count(3) * exhaustive_sl2_count(4)
    assert exhaustive_sl2_count(7, brute_force_limit=1) == 336


def test_group_order_report():
    report = group_order_report(5)
    assert report.passed
    assert report.bfs_order == 120
    assert report.generators == ["[[1, 0], [1, 1]]", "[[1, 2], [0, 1]]"]


def test_bfs_cap():
    with pytest.raises(GroupTooLargeError):
        bfs_group_order(corollary_generators(7), 7, max_elements=10)
    with pytest.raises(ValueError):
        bfs_group_order([ResidueMat2(2, 0, 0, 2, 5)], 5)


def test_enumeration_membership():
    enumeration = bfs_group_order(corollary_generators(3), 3)
    assert ResidueMat2(0, 1, 2, 0, 3) in enumeration
    assert ResidueMat2.identity(5) not in enumeration
    assert len(list(enumeration)) == 24


def test_finite_abelianizations():
    sl2_3 = finite_abelianization(bfs_group_order(corollary_generators(3), 3))
    assert sl2_3.order == 3
    images = phi_assignment(1).reduce(4).images
    sl2_4 = finite_abelianization(bfs_group_order([images["x"], images["y"]], 4))
    assert sl2_4.order == 4
    assert sl2_4.class_of(images["x"]) == 1
    assert sl2_4.class_of(images["y"]) == 1
    sl2_5 = finite_abelianization(bfs_group_order(corollary_generators(5), 5))
    assert sl2_5.order == 1


def test_parse_assignment():
    text = "# images of x and y\nx = [[1, 0], [1, 1]]\ny = [[1, -1/2], [0, 1]]\n"
    assignment = parse_assignment(text, 2)
    assert check_relations(make_hm(2), assignment).passed
    assert parse_assignment(format_assignment(assignment), 2).images == assignment.images


def test_parse_assignment_errors():
    with pytest.raises(MatrixSyntaxError) as info:
        parse_assignment("x = [[1, 0], [1, 1]]\ny [[1, 0], [0, 1]]\n", 2)
    assert "line 2" in str(info.value)
    with pytest.raises(MatrixSyntaxError):
        parse_assignment("x = [[1, 0], [1, 1]]\nx = [[1, 0], [1, 1]]\n", 2)
    with pytest.raises(MatrixSyntaxError):
        parse_assignment("x = [[1, 0], [1/3, 1]]\n", 2)

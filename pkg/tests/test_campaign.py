import pytest

from services.campaign import (
    VerificationCampaign,
    cmd_verify_paper,
    corollary_stage,
    decomposition_stage,
    residue_stage,
    theorem_stage,
)
from models.reports import EnumLimits
from settings import Settings


@pytest.fixture
def small_settings():
    return Settings(residue_moduli=[3, 5], decomposition_m_values=[1, 2],
                    decomposition_samples=20, decomposition_max_length=20)


def test_small_campaign_passes(small_settings, cache):
    report = VerificationCampaign(small_settings, cache).run([1, 2, 3], [3, 5])
    assert report.passed, [c.details for c in report.failed]
    assert report.failed == [] and report.limited == []
    assert list(report.stage_timings_s) == ["lemma", "theorem", "residue", "corollary", "decomposition"]
    theorem = [c for c in report.checks if c.name == "abelianization of H_m matches the case split"]
    assert [c.parameters["m"] for c in theorem] == ["1", "2", "3"]
    corollary = [c for c in report.checks if c.name == "SL2(Z/r) presentation"]
    assert [c.parameters["r"] for c in corollary] == ["3", "5"]


def test_campaign_is_reproducible(small_settings):
    first = VerificationCampaign(small_settings).run([2], [3])
    second = VerificationCampaign(small_settings).run([2], [3])
    assert first.model_dump_json() == second.model_dump_json()


def test_campaign_input_validation(small_settings):
    campaign = VerificationCampaign(small_settings)
    with pytest.raises(ValueError):
        campaign.run([], [3])
    with pytest.raises(ValueError):
        campaign.run([0, 1], [3])
    with pytest.raises(ValueError):
        campaign.run([1], [4])
    with pytest.raises(ValueError):
        campaign.run([1], [1])


def test_formula_cross_check_is_informational(small_settings):
    report = VerificationCampaign(small_settings).run([1, 2], [])
    cross = [c for c in report.checks if "invariant factor" in c.name]
    assert len(cross) == 1
    assert cross[0].passed
    assert "differs" in cross[0].details


def test_theorem_stage():
    (check,) = theorem_stage(6)
    assert check.passed
    assert "trivial" in check.details


def test_residue_stage_skips_moduli_sharing_factors_with_m():
    assert residue_stage(3, [3]) == []
    assert all(c.passed for c in residue_stage(3, [5, 7]))


def test_corollary_stage_limit_is_not_a_failure():
    (check,) = corollary_stage(7, EnumLimits(max_cosets=20), "hlt", None, 10 ** 6)
    assert check.limit_exceeded and not check.passed
    (check,) = corollary_stage(7, EnumLimits(), "hlt", None, 10)
    assert check.limit_exceeded


def test_decomposition_stage_is_seeded():
    assert decomposition_stage(5, 10, 20, 3) == decomposition_stage(5, 10, 20, 3)
    (check,) = decomposition_stage(5, 10, 20, 3)
    assert check.passed
    assert check.parameters == {"m": "5", "samples": "10", "seed": "3"}


def test_cmd_verify_paper_uses_settings_cache(small_settings, tmp_path):
    settings = small_settings.model_copy(update={"cache_dir": tmp_path / "cache"})
    report = cmd_verify_paper([2], [3], settings)
    assert report.passed
    assert (tmp_path / "cache" / "enumerations").is_dir()

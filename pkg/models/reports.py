"""
Pydantic Report Models
Defines the schemas of every result the command line emits
"""

from pydantic import BaseModel, ConfigDict, Field, computed_field, PositiveFloat, PositiveInt, field_validator
from typing import Dict, List, Literal, Optional


def _prime_power_parts(n: int) -> List[int]:
    parts = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            q = 1
            while n % p == 0:
                n //= p
                q *= p
            parts.append(q)
        p += 1
    if n > 1:
        parts.append(n)
    return parts


class AbelianGroupDesc(BaseModel):
    """Finitely generated abelian group Z^free_rank x Z/d1 x ... x Z/dt"""
    model_config = ConfigDict(frozen=True)

    torsion: List[int] = Field(default_factory=list, description="Invariant factors >= 2, d1 | d2 | ...")
    free_rank: int = Field(0, ge=0, description="Rank of the free part")

    @field_validator("torsion")
    @classmethod
    def _divisibility_chain(cls, torsion: List[int]) -> List[int]:
        for d in torsion:
            if d < 2:
                raise ValueError(f"torsion invariant factors must be >= 2, got {d}")
        for smaller, larger in zip(torsion, torsion[1:]):
            if larger % smaller != 0:
                raise ValueError(f"invariant factors {torsion} do not form a divisibility chain")
        return torsion

    @classmethod
    def trivial(cls) -> "AbelianGroupDesc":
        return cls()

    @classmethod
    def cyclic(cls, n: int) -> "AbelianGroupDesc":
        return cls(torsion=[n] if n > 1 else [])

    def is_trivial(self) -> bool:
        return not self.torsion and self.free_rank == 0

    def order(self) -> Optional[int]:
        """Group order, or None when the free rank is positive"""
        if self.free_rank:
            return None
        result = 1
        for d in self.torsion:
            result *= d
        return result

    def primary_parts(self) -> List[int]:
        """Coprime prime-power decomposition of the torsion, e.g. Z/12 -> [3, 4]"""
        return sorted(q for d in self.torsion for q in _prime_power_parts(d))

    def __str__(self) -> str:
        if self.is_trivial():
            return "trivial"
        pieces = []
        if self.free_rank == 1:
            pieces.append("Z")
        elif self.free_rank > 1:
            pieces.append(f"Z^{self.free_rank}")
        pieces.extend(f"Z/{d}" for d in self.torsion)
        return " x ".join(pieces)


class EnumLimits(BaseModel):
    """Resource limits of one coset enumeration"""
    max_cosets: PositiveInt = Field(2_000_000, description="Total cosets ever defined")
    max_live_cosets: PositiveInt = Field(2_000_000, description="Cosets alive at one time")
    time_budget_s: Optional[PositiveFloat] = Field(None, description="Wall-clock budget")


class CheckResult(BaseModel):
    """One named check of a campaign"""
    name: str = Field(..., description="Check name")
    parameters: Dict[str, str] = Field(default_factory=dict, description="Check parameters")
    passed: bool = Field(..., description="Whether the check passed")
    limit_exceeded: bool = Field(False, description="Whether a resource limit stopped the check")
    details: str = Field("", description="Human readable details")


class CampaignReport(BaseModel):
    """Aggregated result of a verification campaign"""
    checks: List[CheckResult] = Field(default_factory=list)
    stage_timings_s: Dict[str, float] = Field(default_factory=dict, exclude=True)

    @computed_field
    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failed(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed and not check.limit_exceeded]

    @property
    def limited(self) -> List[CheckResult]:
        return [check for check in self.checks if check.limit_exceeded]


class EnumStatistics(BaseModel):
    """Counters collected during one enumeration"""
    cosets_defined: int = 0
    coincidences: int = 0
    deductions: int = 0
    peak_live_cosets: int = 0
    lookahead_passes: int = 0


class EnumSummary(BaseModel):
    """Machine readable coset enumeration outcome"""
    presentation: str
    strategy: Literal["hlt", "felsch"]
    subgroup: List[str] = Field(default_factory=list)
    status: Literal["completed", "limit-exceeded"]
    index: Optional[int] = None
    limit_reason: Optional[str] = None
    statistics: EnumStatistics


class CorollaryReport(BaseModel):
    """Certification of SL_2(Z/rZ) = <x, y | H_2 relators, x^r>"""
    r: int
    status: Literal["completed", "limit-exceeded"]
    enumerated_order: Optional[int] = None
    bfs_order: int
    exhaustive_order: int
    orders_equal: bool
    relators_satisfied: bool
    generates_group: bool
    abelianization: str
    failures: List[str] = Field(default_factory=list)
    statistics: EnumStatistics

    @computed_field
    @property
    def passed(self) -> bool:
        return self.status == "completed" and not self.failures


class RelationFailure(BaseModel):
    """A relator whose image is not the identity"""
    index: int
    relator: str
    image: str


class RelationCheckReport(BaseModel):
    """Evaluation of every relator under an assignment"""
    presentation: str
    ring: str = Field(..., description="Z[1/m] or Z/rZ")
    relator_count: int
    failures: List[RelationFailure] = Field(default_factory=list)

    @computed_field
    @property
    def passed(self) -> bool:
        return not self.failures


class LemmaReport(BaseModel):
    """Exact matrix identities for one m"""
    m: int
    checks: List[CheckResult]

    @computed_field
    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


class GroupOrderReport(BaseModel):
    """Breadth-first order of <A mod r, Q_2 mod r> against the exhaustive count"""
    r: int
    generators: List[str]
    bfs_order: int
    exhaustive_order: int

    @computed_field
    @property
    def passed(self) -> bool:
        return self.bfs_order == self.exhaustive_order


class ResidueCampaignReport(BaseModel):
    """Relation checks of a presentation and the Tietze-chain relators in residue quotients"""
    m: int
    moduli: List[int]
    reports: List[RelationCheckReport]

    @computed_field
    @property
    def passed(self) -> bool:
        return all(report.passed for report in self.reports)


class DecompositionReport(BaseModel):
    """Factorization of a matrix into generators"""
    m: int
    matrix: str
    alphabet: Literal["abu", "xy"]
    word: str
    word_length: int
    verified: bool
    norm_trace: List[str] = Field(default_factory=list, description="Euclidean norms of the lower-left entry")
    abelianization_class: Optional[int] = None
    abelianization_order: Optional[int] = None


class AbelianizationReport(BaseModel):
    """Abelianization of a finite presentation"""
    presentation: str
    description: str
    invariant_factors: List[int]
    torsion: List[int]
    free_rank: int
    primary_parts: List[int]
    relation_matrix: List[List[int]]


class FormulaCrossCheck(BaseModel):
    """Per-m comparison of the computed invariant factor with closed forms"""
    m: int
    snf_factor: int
    gcd_m2_minus_1: int
    printed_value: int
    theorem_case: str
    computed: str
    agrees: bool = Field(..., description="SNF factor equals gcd(m^2 - 1, 12) and the case split holds")
    printed_agrees: bool = Field(..., description="Printed gcd(m^2 + 1, 12m, 4m^2 + 8) equals the SNF factor")

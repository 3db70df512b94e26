from __future__ import annotations

from typing import Annotated

from pydantic import BaseModel, ConfigDict, Field, PlainSerializer


def _round_significant(value: float) -> float:
    return float(f"{value:.12g}")


Rounded = Annotated[float, PlainSerializer(_round_significant, return_type=float)]


class CountsRow(BaseModel):
    scheme: str
    model: str
    f: int = Field(ge=0)
    masked: int = Field(ge=0)
    patterns: int = Field(ge=0)


class ToleranceOut(BaseModel):
    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "scheme": "mmr:7",
                "label": "7-MMR",
                "model": "inversion",
                "units": 7,
                "max_tolerable": 4,
                "guaranteed": 1,
                "claimed": 4,
            }
        }
    )

    scheme: str
    label: str
    model: str
    units: int
    max_tolerable: int
    guaranteed: int
    claimed: int


class SweepRow(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    scheme: str
    units: int
    r: Rounded = Field(alias="R")
    reliability_analytic: Rounded
    reliability_mc: Rounded | None = None
    mc_std_error: Rounded | None = None
    trials: int = 0
    seed: int = 0
    # MMR rows only: 100 * (R_NMR - R_MMR) / R_NMR against the counterpart in the same sweep
    delta_percent: Rounded | None = None


class DeltaRow(BaseModel):
    nmr: str
    mmr: str
    mean_percent: Rounded
    series: list[Rounded]


class SweepDocument(BaseModel):
    grid: list[Rounded]
    rows: list[SweepRow]
    deltas: list[DeltaRow]


class VoterMetricsRow(BaseModel):
    scheme: str
    label: str
    voter_gates: int
    voter_depth: int
    voter_census: dict[str, int]
    unit: str | None = None
    system_gates: int | None = None
    system_depth: int | None = None


class CompareRow(BaseModel):
    unit: str
    scheme: str
    label: str
    units: int
    tolerance: int
    voter_gates: int
    voter_depth: int
    system_gates: int
    system_depth: int
    voter_share: Rounded


class VerifyReport(BaseModel):
    unit: str
    scheme: str
    unit_equivalent: bool
    system_equivalent: bool
    vectors_checked: int
    sampled: bool
    counterexample: list[int] | None = None


class InjectReport(BaseModel):
    unit: str
    scheme: str
    faults: str
    model: str
    masked: bool
    vectors_checked: int
    sampled: bool
    failing_vector: list[int] | None = None

    @property
    def verdict(self) -> str:
        return "MASKED" if self.masked else "NOT-MASKED"

from __future__ import annotations

from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from redlab.services.fault_injection import FaultModel, FaultPattern
from redlab.services.function_units import FunctionUnitSpec
from redlab.services.reliability import r_grid
from redlab.services.voters import RedundancyScheme

CommandName = Literal["verify", "inject", "counts", "tolerance", "sweep", "metrics", "compare", "export"]
OutputFormat = Literal["text", "csv", "json"]
ExportTarget = Literal["unit", "voter", "system"]

_REQUIRED: dict[str, tuple[str, ...]] = {
    "verify": ("unit", "scheme"),
    "inject": ("unit", "scheme", "faults"),
    "counts": ("scheme",),
    "tolerance": ("scheme",),
    "sweep": ("schemes", "r_min", "r_max", "steps"),
    "metrics": ("schemes",),
    "compare": ("unit", "mmr"),
}

_EXPORT_REQUIRED: dict[str, tuple[str, ...]] = {
    "unit": ("unit",),
    "voter": ("scheme",),
    "system": ("unit", "scheme"),
}


class RunConfig(BaseModel):
    """Parameters of one CLI invocation, checked before any computation starts."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    command: CommandName
    unit: str | None = None
    scheme: str | None = None
    schemes: list[str] = Field(default_factory=list)
    mmr: list[int] = Field(default_factory=list)
    model: FaultModel = FaultModel.INVERSION
    faults: str | None = None
    r_min: float | None = None
    r_max: float | None = None
    steps: int | None = None
    trials: int = Field(default=0, ge=0)
    seed: int = Field(default=0, ge=0)
    sample_size: int | None = Field(default=None, ge=1)
    out: Path | None = None
    format: OutputFormat = "csv"
    target: ExportTarget | None = None
    allow_small_mmr: bool = False

    @model_validator(mode="after")
    def _validate_command(self) -> RunConfig:
        required = _REQUIRED.get(self.command, ())
        if self.command == "export":
            if self.target is None:
                raise ValueError("export needs a target (unit, voter or system)")
            required = _EXPORT_REQUIRED[self.target]

        missing = [name for name in required if getattr(self, name) in (None, [])]
        if missing:
            flags = ", ".join("--" + name.replace("_", "-") for name in missing)
            raise ValueError(f"{self.command} requires {flags}")

        if self.unit is not None:
            FunctionUnitSpec.parse(self.unit)
        if self.scheme is not None:
            RedundancyScheme.parse(self.scheme, allow_small=self.allow_small_mmr)
        for text in self.schemes:
            RedundancyScheme.parse(text, allow_small=self.allow_small_mmr)
        if self.faults is not None and self.scheme is not None:
            FaultPattern.parse(self.faults).validate_for(self.scheme_spec.unit_count)
        if self.command == "sweep":
            r_grid(self.r_min, self.r_max, self.steps)  # type: ignore[arg-type]
        if self.command == "compare":
            for k in self.mmr:
                RedundancyScheme.mmr(k)
        return self

    @property
    def unit_spec(self) -> FunctionUnitSpec:
        return FunctionUnitSpec.parse(self.unit or "")

    @property
    def scheme_spec(self) -> RedundancyScheme:
        return RedundancyScheme.parse(self.scheme or "", allow_small=self.allow_small_mmr)

    @property
    def scheme_specs(self) -> list[RedundancyScheme]:
        return [RedundancyScheme.parse(text, allow_small=self.allow_small_mmr) for text in self.schemes]

    @property
    def fault_pattern(self) -> FaultPattern:
        return FaultPattern.parse(self.faults).validate_for(self.scheme_spec.unit_count)

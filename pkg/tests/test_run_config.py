from __future__ import annotations

import pytest
from pydantic import ValidationError

from redlab.schemas.run_config import RunConfig
from redlab.services.fault_injection import FaultModel, FaultPattern
from redlab.services.function_units import FunctionUnitSpec
from redlab.services.voters import RedundancyScheme


def test_inject_config_parses_its_arguments():
    config = RunConfig(command="inject", unit="bam:4x4", scheme="mmr:6", faults="2,6", model="sa0", format="text")

    assert config.unit_spec == FunctionUnitSpec.bam(4, 4)
    assert config.scheme_spec == RedundancyScheme.mmr(6)
    assert config.fault_pattern == FaultPattern.of(2, 6)
    assert config.model is FaultModel.STUCK_AT_0


@pytest.mark.parametrize(
    ("fields", "message"),
    [
        ({"command": "verify", "unit": "rca:4"}, "verify requires --scheme"),
        ({"command": "inject", "unit": "rca:4", "scheme": "nmr:3"}, "inject requires --faults"),
        ({"command": "compare", "unit": "rca:4"}, "compare requires --mmr"),
        ({"command": "export", "target": "voter"}, "export requires --scheme"),
        ({"command": "sweep", "schemes": ["nmr:3"], "r_min": 0.9, "r_max": 0.99}, "sweep requires --steps"),
    ],
)
def test_missing_arguments_name_the_flag(fields, message):
    with pytest.raises(ValidationError) as exc_info:
        RunConfig(**fields)

    assert message in str(exc_info.value)


@pytest.mark.parametrize(
    "fields",
    [
        {"command": "counts", "scheme": "tmr:3"},
        {"command": "counts", "scheme": "mmr:4"},
        {"command": "counts", "scheme": "nmr:4"},
        {"command": "verify", "unit": "rca:0", "scheme": "nmr:3"},
        {"command": "inject", "unit": "rca:2", "scheme": "nmr:3", "faults": "4"},
        {"command": "sweep", "schemes": ["nmr:3"], "r_min": 0.5, "r_max": 1.1, "steps": 3},
        {"command": "compare", "unit": "rca:2", "mmr": [3]},
        {"command": "counts", "scheme": "nmr:3", "trials": -1},
        {"command": "counts", "scheme": "nmr:3", "unknown": 1},
        {"command": "simulate"},
    ],
)
def test_invalid_configs_are_rejected(fields):
    with pytest.raises(ValidationError):
        RunConfig(**fields)


def test_small_mmr_override_flows_through_scheme_parsing():
    config = RunConfig(command="tolerance", scheme="mmr:4", allow_small_mmr=True)

    assert config.scheme_spec.unit_count == 4
    assert config.scheme_spec.minority_cluster == (4,)


def test_config_is_frozen():
    config = RunConfig(command="counts", scheme="nmr:3")

    with pytest.raises(ValidationError):
        config.scheme = "nmr:5"

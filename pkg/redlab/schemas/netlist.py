from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

GateKindName = Literal["AND2", "OR2", "NOT", "XOR2", "MUX2", "BUF"]


class GateDocument(BaseModel):
    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    kind: GateKindName
    inputs: list[str] = Field(alias="in")
    out: str


class NetlistDocument(BaseModel):
    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {
                "inputs": ["f[1]", "f[2]"],
                "gates": [{"kind": "AND2", "in": ["f[1]", "f[2]"], "out": "both"}],
                "outputs": ["both"],
            }
        },
    )

    inputs: list[str]
    gates: list[GateDocument]
    outputs: list[str]

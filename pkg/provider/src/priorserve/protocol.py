"""Wire protocol types for the /prior endpoint.

Requests carry the candidate list and the discourse window around one
masked token; responses carry probabilities aligned to the candidates,
summing to 1. Identical JSON bodies travel over HTTP POST /prior or as
single lines on standard streams.
"""

from __future__ import annotations

from pydantic import BaseModel, Field, field_validator

MASK_TOKEN = "<mask>"


class PriorRequest(BaseModel):
    id: str
    candidates: list[str] = Field(min_length=1)
    context_before: list[list[str]] = Field(default_factory=list)
    context_after: list[list[str]] = Field(default_factory=list)
    masked_utterance: list[str] = Field(min_length=1)
    mask_index: int = Field(ge=0)

    @field_validator("mask_index")
    @classmethod
    def _mask_in_range(cls, v, info):
        masked = info.data.get("masked_utterance")
        if masked is not None and v >= len(masked):
            raise ValueError("mask_index out of range")
        return v


class PriorResponse(BaseModel):
    id: str
    probabilities: list[float]
    excluded: list[str] | None = None

"""Scripted responses for integration tests.

The script file is JSON mapping request id to a probability vector. Two
conveniences keep test harnesses small: the key "*" supplies a default for
unmatched ids, and the literal value "uniform" expands to 1/n over however
many candidates the request carries.
"""

from __future__ import annotations

import json
from pathlib import Path

from .protocol import PriorRequest


class ScriptError(Exception):
    """Raised when a request cannot be answered from the script."""

    def __init__(self, status: int, detail: str):
        super().__init__(detail)
        self.status = status
        self.detail = detail


class ScriptedResponder:
    def __init__(self, table: dict):
        self.table = dict(table)

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedResponder":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def prior(self, request: PriorRequest) -> tuple[list[float], list[str] | None]:
        entry = self.table.get(request.id, self.table.get("*"))
        if entry is None:
            raise ScriptError(400, f"no scripted vector for id {request.id!r}")
        n = len(request.candidates)
        if entry == "uniform":
            return [1.0 / n] * n, None
        if not isinstance(entry, list):
            raise ScriptError(400, f"scripted entry for {request.id!r} is not a vector")
        if len(entry) != n:
            raise ScriptError(
                422, f"scripted vector has length {len(entry)}, request has {n} candidates")
        return [float(x) for x in entry], None

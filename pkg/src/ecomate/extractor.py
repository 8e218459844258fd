"""Locate the automation JSON inside raw model output.

Model responses are markdown-ish: the routine is expected inside a backtick
fence, with explanation text around it. Fenced blocks are tried first; if no
fence yields JSON, a balanced-brace scan over the whole text recovers objects
from malformed layouts (stray backticks, injected words). Nothing is ever
repaired: unparseable output is a result, not an error.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

_FENCE_RE = re.compile(r"```[^\n`]*\n?(.*?)```", re.DOTALL)
_DECODER = json.JSONDecoder()

METHOD_FENCED = "fenced"
METHOD_BRACE_SCAN = "brace_scan"
METHOD_NONE = "none"


@dataclass(frozen=True)
class ExtractionResult:
    json_text: str | None
    remainder_text: str
    method: str

    @property
    def found(self) -> bool:
        return self.json_text is not None


def _parses(text: str) -> bool:
    try:
        json.loads(text)
    except (json.JSONDecodeError, RecursionError):
        return False
    return True


def _parses_as_object(text: str) -> bool:
    try:
        return isinstance(json.loads(text), dict)
    except (json.JSONDecodeError, RecursionError):
        return False


def _cut(raw: str, start: int, end: int) -> str:
    return raw[:start] + raw[end:]


def extract(raw: str) -> ExtractionResult:
    """Split raw model output into automation JSON and remainder text.

    Among multiple fenced blocks the first that parses as a JSON object wins;
    failing that, the first block holding any valid JSON value is kept and
    the schema validator downstream decides. The brace scan only ever yields
    objects.
    """
    blocks = list(_FENCE_RE.finditer(raw))
    chosen = next((m for m in blocks if _parses_as_object(m.group(1).strip())), None)
    if chosen is None:
        chosen = next((m for m in blocks if _parses(m.group(1).strip())), None)
    if chosen is not None:
        return ExtractionResult(
            json_text=chosen.group(1).strip(),
            remainder_text=_cut(raw, chosen.start(), chosen.end()),
            method=METHOD_FENCED,
        )

    for start in _iter_brace_positions(raw):
        try:
            value, end = _DECODER.raw_decode(raw, start)
        except json.JSONDecodeError:
            continue
        if isinstance(value, dict):
            return ExtractionResult(
                json_text=raw[start:end],
                remainder_text=_cut(raw, start, end),
                method=METHOD_BRACE_SCAN,
            )

    return ExtractionResult(json_text=None, remainder_text=raw, method=METHOD_NONE)


def _iter_brace_positions(raw: str):
    index = raw.find("{")
    while index != -1:
        yield index
        index = raw.find("{", index + 1)

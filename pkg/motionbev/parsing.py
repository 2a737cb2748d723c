from __future__ import annotations

import json
import re
from collections.abc import Sequence
from io import StringIO
from typing import Any

import pandas as pd

from .exceptions import ParseError

_JSON_OBJECT_RE = re.compile(r"^\s*\{", re.DOTALL)


def _strip_blank_lines(text: str) -> str:
    if text is None:
        return ""
    lines = [ln for ln in text.splitlines() if ln.strip() != ""]
    return "\n".join(lines)


def _snippet(text: str) -> str:
    return (text or "")[:300].replace("\n", "\\n")


def parse_tsv(text: str, required_columns: Sequence[str] = ()) -> pd.DataFrame:
    """
    Parse a headed TSV table (manifest, calibration index) into a DataFrame of strings.

    Blank lines are skipped. Missing ``required_columns`` raise ParseError.
    """
    cleaned = _strip_blank_lines(text)
    if cleaned.strip() == "":
        raise ParseError("Unable to parse TSV: text is empty or only blank lines.")

    try:
        df = pd.read_csv(
            StringIO(cleaned),
            sep="\t",
            header=0,
            dtype="string",
            keep_default_na=False,
            na_values=[],
        )
    except Exception as e:
        raise ParseError(f"Unable to parse TSV: {e}. Text starts with: '{_snippet(cleaned)}'") from e

    missing = [c for c in required_columns if c not in df.columns]
    if missing:
        raise ParseError(f"TSV is missing required column(s): {', '.join(missing)}.")
    return df


def parse_config_text(text: str) -> dict[str, Any]:
    """Decode a flat JSON config object; anything else raises ParseError."""
    if not text or not _JSON_OBJECT_RE.match(text):
        raise ParseError(f"Config must be a JSON object. Text starts with: '{_snippet(text)}'")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(
            f"Config looked like JSON but could not be decoded: {e}. "
            f"Text starts with: '{_snippet(text)}'"
        ) from e
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ParseError(f"Config must be flat; nested objects under: {', '.join(nested)}.")
    return data

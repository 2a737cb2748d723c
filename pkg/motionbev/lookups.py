"""Lookup helpers for packaged reference tables.

``list_fusion_strategies()`` is the source of truth for the strategy codes a
FusionPlan accepts; ``list_radar_attributes()`` documents the radar column
layout produced by the synthetic generator.
"""

from __future__ import annotations

from importlib import resources

import pandas as pd

from motionbev.exceptions import ParseError

_EXPECTED_STRATEGY_COLUMNS: list[str] = ["strategy_code", "expression", "required_modalities"]
_EXPECTED_RADAR_COLUMNS: list[str] = ["column", "attribute", "description"]


def _read_packaged_csv(filename: str, label: str, expected: list[str]) -> pd.DataFrame:
    try:
        csv_path = resources.files("motionbev").joinpath(f"data/{filename}")
        with csv_path.open("r", encoding="utf-8", newline="") as handle:
            dataframe = pd.read_csv(handle, dtype=str, keep_default_na=False)
    except Exception as exc:  # pragma: no cover - exception path validated by behavior
        raise ParseError(f"Failed to load packaged {label} lookup table: {exc}") from exc

    columns: list[str] = list(dataframe.columns)
    if columns != expected:
        raise ParseError(
            f"Invalid packaged {label} lookup table columns. "
            f"Expected {expected} in order, got {columns}."
        )
    return dataframe


def list_fusion_strategies() -> pd.DataFrame:
    """Return fusion strategy codes, their expression and required modalities."""
    return _read_packaged_csv("fusion_strategies.csv", "fusion strategy", _EXPECTED_STRATEGY_COLUMNS)


def list_radar_attributes() -> pd.DataFrame:
    """Return the 18-column radar point layout."""
    dataframe = _read_packaged_csv("radar_attributes.csv", "radar attribute", _EXPECTED_RADAR_COLUMNS)
    if len(dataframe) != 18:
        raise ParseError(f"Radar attribute table must list 18 columns, got {len(dataframe)}.")
    return dataframe

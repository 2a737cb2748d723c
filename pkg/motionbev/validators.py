# motionbev/validators.py
from __future__ import annotations

import math
import re
from collections.abc import Iterable

import numpy as np

from .exceptions import NonFiniteError, ValidationError

MODALITIES: tuple[str, ...] = ("camera", "radar", "lidar")
CONDITIONS: tuple[str, ...] = ("day", "night", "rain")
SWEEP_COUNTS: tuple[int, ...] = (1, 3, 5)

_MODALITY_ALIASES: dict[str, str] = {
    "c": "camera",
    "cam": "camera",
    "camera": "camera",
    "r": "radar",
    "radar": "radar",
    "l": "lidar",
    "lidar": "lidar",
}

_SPLIT_MODALITIES_RE = re.compile(r"[,\s+;|]+")


def ensure_finite(name: str, values: np.ndarray) -> np.ndarray:
    """
    Return `values` as a float64 array, rejecting NaN/Inf.

    Used at every ingestion boundary (user tensors, dataset blobs, checkpoints).
    """
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        bad = int(np.size(arr) - np.count_nonzero(np.isfinite(arr)))
        raise NonFiniteError(f"{name} contains {bad} non-finite value(s).")
    return arr


def normalize_modalities(
    modalities: str | Iterable[str],
) -> tuple[str, ...]:
    """
    Normalize modality inputs into the canonical ordered tuple.

    - Accepts "C+R+L", "camera,radar", ["camera", "lidar"], ...
    - Strips whitespace, drops empty entries, removes duplicates
    - Orders as (camera, radar, lidar)
    - Raises ValidationError on unknown names or an empty result
    """
    items: list[str] = []
    if isinstance(modalities, str):
        raw = modalities.strip()
        if raw:
            items = [s.strip() for s in _SPLIT_MODALITIES_RE.split(raw) if s.strip()]
    elif isinstance(modalities, Iterable):
        for item in modalities:
            if not isinstance(item, str):
                raise ValidationError(
                    f"All modalities must be strings, but got {type(item).__name__}."
                )
            if item.strip():
                items.append(item.strip())
    else:
        raise ValidationError(
            f"Expected str or iterable of str but got {type(modalities).__name__}."
        )

    resolved: set[str] = set()
    for item in items:
        key = item.lower()
        if key not in _MODALITY_ALIASES:
            raise ValidationError(
                f"Unknown modality '{item}'. Allowed values are {', '.join(MODALITIES)}."
            )
        resolved.add(_MODALITY_ALIASES[key])

    if not resolved:
        raise ValidationError("No modalities provided after normalization.")
    return tuple(m for m in MODALITIES if m in resolved)


def modality_label(modalities: Iterable[str]) -> str:
    """Short label like 'C+R+L' used in tables."""
    return "+".join(m[0].upper() for m in normalize_modalities(modalities))


def validate_choice(name: str, value: str, allowed: Iterable[str]) -> str:
    """
    Validate a string selector against an allowed set (case-insensitive).
    Returns normalized value.
    """
    if not isinstance(value, str):
        raise ValidationError(f"{name} must be a string, got {type(value).__name__}.")
    options = tuple(allowed)
    v = value.strip().lower()
    if v not in options:
        raise ValidationError(
            f"Invalid {name} '{value}'. Allowed values are {', '.join(options)}."
        )
    return v


def validate_condition(condition: str) -> str:
    """Validate a driving condition. Allowed values: {'day', 'night', 'rain'}."""
    return validate_choice("condition", condition, CONDITIONS)


def validate_sweep_count(count: int) -> int:
    """Validate the number of aggregated LiDAR/radar sweeps (1, 3 or 5)."""
    v = validate_positive_int("sweep_count", count)
    if v not in SWEEP_COUNTS:
        raise ValidationError(
            f"sweep_count must be one of {SWEEP_COUNTS}, got {v}."
        )
    return v


def validate_positive_int(name: str, value: int, minv: int = 1) -> int:
    """
    Validate an integer >= minv. Booleans are rejected.
    Returns the value as int.
    """
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ValidationError(f"{name} must be an integer, got {type(value).__name__}.")
    v = int(value)
    if v < minv:
        raise ValidationError(f"{name} must be >= {minv}, got {v}.")
    return v


def validate_threshold(
    name: str,
    value: float,
    minv: float = 0.0,
    maxv: float = 1.0,
    inclusive: bool = True,
) -> float:
    """
    Validate numeric threshold within [minv, maxv] (or (minv, maxv) when
    inclusive is False). Returns the value as float.
    """
    if not isinstance(name, str) or not name.strip():
        raise ValidationError("Threshold name must be a non-empty string.")

    try:
        v = float(value)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"{name} must be a number.") from e

    if not math.isfinite(v):
        raise ValidationError(f"{name} must be finite.")

    if inclusive:
        if v < minv or v > maxv:
            raise ValidationError(f"{name} must be between {minv} and {maxv} (inclusive).")
    elif v <= minv or v >= maxv:
        raise ValidationError(f"{name} must be strictly between {minv} and {maxv}.")
    return v


def validate_non_negative(name: str, value: float) -> float:
    """Validate a finite real >= 0."""
    return validate_threshold(name, value, 0.0, math.inf)

"""JSON and CSV artifacts.

Every JSON artifact is wrapped in an envelope carrying the command, a hash of
the run configuration and the seed. Apart from ``created_at`` the envelope is
a pure function of its inputs, so repeated runs produce identical bytes once
that field is ignored.
"""

import csv
import dataclasses
import hashlib
import json
import math
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from pydantic import BaseModel

from . import __version__
from .geometry import Point2, Polyline


def to_jsonable(obj: Any) -> Any:
    """Convert results to plain JSON types; non-finite floats become null."""
    if isinstance(obj, BaseModel):
        return to_jsonable(obj.model_dump())
    if hasattr(obj, "to_dict") and callable(obj.to_dict):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, Point2):
        return [obj.x, obj.y]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {
            f.name: to_jsonable(getattr(obj, f.name))
            for f in dataclasses.fields(obj)
            if not f.name.startswith("_")
        }
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def canonical_json(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":"))


def config_hash(obj: Any) -> str:
    """SHA-256 of the canonical JSON form of a run configuration."""
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


class ArtifactEnvelope(BaseModel):
    """Wrapper written around every JSON payload."""

    command: str
    config_hash: str
    seed: int
    version: str
    created_at: str
    payload: Any


def write_json(path: Path, command: str, config: Any, seed: int, payload: Any) -> Path:
    envelope = ArtifactEnvelope(
        command=command,
        config_hash=config_hash(config),
        seed=seed,
        version=__version__,
        created_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        payload=to_jsonable(payload),
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(envelope.model_dump(), sort_keys=True, indent=2) + "\n")
    return path


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def write_polyline_csv(path: Path, polyline: Polyline) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    polyline.to_csv(path)
    return path

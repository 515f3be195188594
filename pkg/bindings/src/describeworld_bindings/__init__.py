"""Thin client package for the describeworld engine.

Episode control goes over the engine's stdio JSON protocol via
EnvHandle; exported dataset files are read with load_dataset. Nothing
here reimplements world rules, so client-side numbers always match the
engine exactly.
"""

from .client import (
    EngineError,
    EngineUnavailableError,
    EnvHandle,
    Observation,
    PROTOCOL_VERSION,
)
from .data import (
    Dataset,
    DatasetError,
    EpisodeRecord,
    SCHEMA_VERSION,
    length_buckets,
    load_dataset,
    truncate,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DatasetError",
    "EngineError",
    "EngineUnavailableError",
    "EnvHandle",
    "EpisodeRecord",
    "Observation",
    "PROTOCOL_VERSION",
    "SCHEMA_VERSION",
    "length_buckets",
    "load_dataset",
    "truncate",
]

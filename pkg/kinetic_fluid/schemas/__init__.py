"""Pydantic schemas for `kinetic_fluid`.

`SimConfig` lives in `kinetic_fluid.schemas.config`; it depends on the
numerical modules, which in turn emit the records below.
"""

from .records import DiagnosticsRecord, FailureReport, PicardRow

__all__ = [
    "DiagnosticsRecord",
    "FailureReport",
    "PicardRow",
]

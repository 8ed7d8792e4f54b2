"""Managers package for the optional run store."""

from .run_manager import RunManager
from .record_manager import RecordManager

__all__ = ['RunManager', 'RecordManager']

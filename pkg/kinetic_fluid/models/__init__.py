"""Models package for the optional run store."""

from .base import Base
from .simulation import Simulation
from .run import SimulationRun
from .records import DiagnosticsRow, PicardResultRow

__all__ = ['Base', 'Simulation', 'SimulationRun', 'DiagnosticsRow', 'PicardResultRow']

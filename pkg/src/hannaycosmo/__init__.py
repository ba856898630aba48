"""Two-mode condensate dynamics, Hannay angles and de Sitter geometry."""

from .errors import (
    ChartError,
    ConeSingularityError,
    DiscretizationError,
    DomainError,
    IntegrationError,
    PoleError,
    SingularSystemError,
    SurfaceConstructionError,
    UndefinedAngleError,
)
from .model import ModelParams, PhaseState, SpinState, TwoModeOverlaps

__version__ = "0.1.0"

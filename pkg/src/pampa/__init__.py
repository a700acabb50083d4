"""Bound-preserving point-average scheme for 1D conservation laws."""
from .errors import (BoundViolationError, CFLViolationError, ConfigurationError, InvalidStateError,
                     NumericalError, PampaError, SolverAbort)
from .grid import BoundaryCondition, DoFField, Grid1D, build_grid, padded_view
from .models import EulerModel, ScalarModel, make_model

__version__ = "0.1.0"

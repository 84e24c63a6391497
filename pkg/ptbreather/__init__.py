from .validator import Validator
from .decorators import validate
from .lattice_core import Params, LatticeState, DiagnosticRecord
from .stationary import DimerSolution, BreatherProfile, CorrectionTerm, ExpansionTerms
from .spectral import HessianMatrix, SpectralReport
from .dynamics import Trajectory, ModulationState, MetastabilityReport

__version__ = '0.3.0'

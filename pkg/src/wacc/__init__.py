"""
wacc - weak average-case analysis of condition numbers and iteration counts.
"""

__version__ = "0.1.0"

from .cones import Cone, FullSpace, Orthant, PolarOf, PsdCone, SecondOrder, Subspace, parse_cone
from .errors import WaccError
from .linalg import fubini_study_distance, hermitian_eig, svd_values
from .power import gue_weak_experiment, kostlan_bounds, power_iterate
from .renegar import BiconicProblem, SolverBudget, classify_feasibility, renegar_condition
from .sampling import RngStream
from .weak import weak_expectation

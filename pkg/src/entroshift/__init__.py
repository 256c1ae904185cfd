"""Relative entropy with shifts for scalar conservation laws with convex flux."""

from .approximation import LiwasFn, StepFunction, build_liwas, layer_decompose, mollify_up_jumps
from .classical import (ClassicalSolution, MonotoneLipschitzFn, comparison_check,
                        oleinik_modulus)
from .flux import (DegenerateShockError, DerivedConstants, DomainError, FluxEntropyModel,
                   ModelInvalidError, OrderingError, derive_constants, entropy_flux,
                   relative_entropy, relative_flux, rh_speed, shock_dissipation, v_epsilon)
from .fronts import FrontSolution, TentTest, evolve, kruzhkov_residual, solve_riemann
from .pipeline import (PsiResult, build_psi, certify_monotone_decay, detect_collision,
                       relative_entropy_total)
from .shift import ShiftPath, build_shift, dissipation_along, mollified_shift

__version__ = "0.1.0"

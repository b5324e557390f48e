"""Quasi-Lie schemes for second-order Gambier equations.

Exact Lie-bracket algebra on plane vector fields, the time-dependent
lower-triangular scheme group, transformations to Kummer-Schwarz,
Milne-Pinney and second-order Riccati forms, constants of motion and
superposition-rule solution formulas.
"""
from .invariants import (I_MP, InvariantFn, drift, easy_invariant, general_invariant, i2g, i_mp,
                         solve_alpha_eqr)
from .models import (DomainViolation, GambierSpec, KS2Spec, LinearLieSpec, MPSpec, RiccatiSpec,
                     SchemaError, SecondRiccatiSpec, gambier_b_coeffs, model_from_json, model_to_json, solve)
from .odeint import IntegrationError, IntegratorConfig, Termination, Trajectory, integrate
from .scheme import (CheckReport, FlowElement, FlowError, VFSpace, check_scheme, compose_flows,
                     pushforward_coeffs, pushforward_field, space)
from .superpose import (exact_gambier_n1, gambier_general_solution, mixed_sr, mp_from_oscillators,
                        mp_from_riccati, riccati_sr)
from .symvf import LaurentPoly, VectorField, ad_power, basis, bracket_closure, lie_bracket
from .tfun import NonMonotone, ParseError, TimeFn, parse_expr
from .transforms import (ConditionFailed, TransformResult, Unreducible, ks2_to_mp, reduce_a1, to_ks2,
                         to_second_riccati)

__version__ = "0.1.0"

__all__ = [
    "I_MP", "InvariantFn", "drift", "easy_invariant", "general_invariant", "i2g", "i_mp", "solve_alpha_eqr",
    "DomainViolation", "GambierSpec", "KS2Spec", "LinearLieSpec", "MPSpec", "RiccatiSpec", "SchemaError",
    "SecondRiccatiSpec", "gambier_b_coeffs", "model_from_json", "model_to_json", "solve",
    "IntegrationError", "IntegratorConfig", "Termination", "Trajectory", "integrate",
    "CheckReport", "FlowElement", "FlowError", "VFSpace", "check_scheme", "compose_flows",
    "pushforward_coeffs", "pushforward_field", "space",
    "exact_gambier_n1", "gambier_general_solution", "mixed_sr", "mp_from_oscillators", "mp_from_riccati",
    "riccati_sr",
    "LaurentPoly", "VectorField", "ad_power", "basis", "bracket_closure", "lie_bracket",
    "NonMonotone", "ParseError", "TimeFn", "parse_expr",
    "ConditionFailed", "TransformResult", "Unreducible", "ks2_to_mp", "reduce_a1", "to_ks2",
    "to_second_riccati",
]

"""Fitzpatrick and Penot representatives of monotone operators on R^n x R^n,
with grid certificates for maximality and checks of the sum and chain rules."""

from .calculus import (chain_representative_value, convex_graph_chain_check, diagonal_map,
                       infconv2_value, precompose, product_operator, skew_shift_identity_check,
                       sum_operator)
from .lpkernel import LinearProgram, LPSolution, LPStatus, solve_lp
from .operators import (AffineMonotone, FiniteGraph, LinearMapRep, NormalCone, Precomp, Product,
                        SkewLinear, SubdiffPL, Sum, abs_subdiff, evaluate, identity_map,
                        in_graph, is_monotone_finite, l1_subdiff, maximality_probe,
                        monotone_related_inf)
from .pairing import Bound, Evaluation, PairedPoint, dual_product, pairing_p, point
from .polytope import GenPolytope
from .probe import BoxProbe
from .qualification import (ConvexSetRep, difference_map_equivalence, domain_invariance_check,
                            interiority_checks, linear_closedness_check, ncone_chain_check,
                            ncone_sum_check, qualification_chain, qualification_sum,
                            relint_contains_zero)
from .reports import CheckReport, Verdict
from .representatives import (RepFunction, RepKind, conjugate_value, extension_from_fitzpatrick,
                              fitzpatrick_altform_value, fitzpatrick_value, maximality_certificate,
                              ni_probe, penot_value, representability_probe)

__all__ = [
    "chain_representative_value", "convex_graph_chain_check", "diagonal_map", "infconv2_value",
    "precompose", "product_operator", "skew_shift_identity_check", "sum_operator", "LinearProgram",
    "LPSolution", "LPStatus", "solve_lp", "AffineMonotone", "FiniteGraph", "LinearMapRep",
    "NormalCone", "Precomp", "Product", "SkewLinear", "SubdiffPL", "Sum", "abs_subdiff",
    "evaluate", "identity_map", "in_graph", "is_monotone_finite", "l1_subdiff", "maximality_probe",
    "monotone_related_inf", "Bound", "Evaluation", "PairedPoint", "dual_product", "pairing_p",
    "point", "GenPolytope", "BoxProbe", "ConvexSetRep", "difference_map_equivalence",
    "domain_invariance_check", "interiority_checks", "linear_closedness_check",
    "ncone_chain_check", "ncone_sum_check", "qualification_chain", "qualification_sum",
    "relint_contains_zero", "CheckReport", "Verdict", "RepFunction", "RepKind", "conjugate_value",
    "extension_from_fitzpatrick", "fitzpatrick_altform_value", "fitzpatrick_value",
    "maximality_certificate", "ni_probe", "penot_value", "representability_probe",
]

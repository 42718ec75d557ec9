"""Constraint-driven evolution of derivation trees."""

from .algorithms import (DimensionMismatch, EvolutionResult, Evolver, Individual, crowding_distance, dominates,
                         fandango_ga, nondominated_sort, nsga2)
from .constraints import (CardinalityEqK, CardinalityEqual, Constraint, ConstraintError,
                          ConstraintResult, CountBound, FunctionConstraint, NodeGoal, TreeIndex,
                          UnknownConstraint, UnknownSelector, check, count_score, make_constraint,
                          register_constraint, registered_constraints)
from .operators import NoCandidate, crossover, mutate, replace_at
from .specfile import ConstraintSpec, load_constraint_file, parse_constraint_spec

__all__ = [
    "DimensionMismatch", "EvolutionResult", "Evolver", "Individual", "crowding_distance", "dominates", "fandango_ga",
    "nondominated_sort", "nsga2", "CardinalityEqK", "CardinalityEqual", "Constraint",
    "ConstraintError", "ConstraintResult", "CountBound", "FunctionConstraint", "NodeGoal",
    "TreeIndex", "UnknownConstraint", "UnknownSelector", "check", "count_score",
    "make_constraint", "register_constraint", "registered_constraints", "NoCandidate",
    "crossover", "mutate", "replace_at", "ConstraintSpec", "load_constraint_file",
    "parse_constraint_spec",
]

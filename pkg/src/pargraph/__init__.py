"""Attributed port-graph rewriting with overlapping rules.

The package implements a pregraph/graph model with equivalence-closure
quotienting, environment-sensitive rewrite rules, injective attributed
matching, and two deterministic parallel rewrite relations (full-parallel
and up-to-automorphism), together with static rule analyses, JSON/DOT/SVG
serialization and a CLI.
"""

from .attrs import (EPS, AttrError, DivisionByZero, Substitution, Term,
                    TypeMismatch, UnboundVariable, evaluate, match_attr_sets,
                    rename_vars)
from .engine import (ConflictFreedomFailed, ConflictFreedomUnverified,
                     PreconditionError, RunReport, StepResult,
                     auto_parallel_step, full_parallel_step, parallel_step,
                     run, sequential_step)
from .matching import (Match, MatchStale, SymmetryConditionFailed,
                       all_matches, auto_match_set, enumerate_matches,
                       is_well_behaved, matches_auto_equivalent,
                       matches_equivalent)
from .pregraph import (GraphWitness, Isomorphism, NotAGraph, Pregraph,
                       QuotientMap, Violation, graph_witness, has_odd_loop,
                       is_isomorphic, node_equivalence, port_equivalence,
                       pregraph, pregraphs_equivalent, quotient,
                       validate_graph)
from .rules import (Automorphism, CompatResult, ConflictFreeResult, EsrRule,
                    RuleVariant, SymmetryResult, check_compatibility,
                    check_conflict_free, check_parallel_safety,
                    check_symmetry_condition, enumerate_automorphisms,
                    fresh_variant, validate_rule)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"

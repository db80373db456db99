"""Discrete tree fractals compiled into ODE-driven generator trees."""
from __future__ import annotations

from .analysis import (
    canopy_equivalence_report, endpoint_set, extract_scaffold_tangent, hausdorff, recover_parameters,
)
from .compiler import (
    ConstantCurvatureArc, MatchedHeadingArc, StraightChord, check_isomorphism, compile_tree,
    curve_to_generator, scaffold_of,
)
from .frontend import (
    IFSSpec, LSystemSpec, SimilarityMap, attractor_points, expand_discrete, parse_ifs, parse_lsystem,
)
from .integrate import GeneratorField, GeneratorState, PhaseMode, integrate
from .profiles import Affine, Constant, Exponential, Scaled, Sinusoid
from .tree import BranchEvent, GeneratorTree, InheritanceRule, binary_event, grow_tree

__version__ = "0.1.0"

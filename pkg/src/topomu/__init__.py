"""Topological mu-calculus toolkit: formulas, finite derivative models,
bisimulation quotients, the spine experiment, proofs and bounded decision."""

from .frames import Frame, FrameClass, Model, Partition, analyze, check_frame_class, fmp_bound
from .semantics import evaluate, gfp_trace
from .syntax import Formula, closure_set, normalize, parse, substitute, to_text

__version__ = "0.1.0"

__all__ = [
    "Formula", "parse", "to_text", "normalize", "substitute", "closure_set",
    "Frame", "Model", "FrameClass", "Partition", "check_frame_class", "analyze", "fmp_bound",
    "evaluate", "gfp_trace",
]

"""evoarch: an executable architecture description language.

The language is a small, strongly typed process language: components are
behaviours communicating over typed connections, abstractions are templates
over behaviours, and running systems can be composed, quiesced, decomposed,
reified to hyper-text (text plus links to live values), edited and reflected
back into execution without losing encapsulated state.
"""

from .syntax import (ParseError, SourceSegmentList, Term, parse, parse_path,
                     parse_text, render, render_text)
from .typesys import TypeCheckError, TypeEnv, TypeRep, check_program, equivalent
from .values import inject_any, project_any, value_type
from .runtime import (QUIESCENT, CompositionError, QuiescenceTimeout, Runtime,
                      RuntimeFault, TraceEvent, UnificationTypeError,
                      UnresolvedPathError, trace_hash)
from .hypercode import (HyperText, Hypercode, NotQuiescent, ReflectError,
                        UnknownIdentifier, ValueStore)
from .styles import ConformanceReport, StyleRegistry, check_constraints, snapshot
from .workspace import EvalError, EvalResult, Workspace

__all__ = [
    "ParseError", "SourceSegmentList", "Term", "parse", "parse_path",
    "parse_text", "render", "render_text",
    "TypeCheckError", "TypeEnv", "TypeRep", "check_program", "equivalent",
    "inject_any", "project_any", "value_type",
    "QUIESCENT", "CompositionError", "QuiescenceTimeout", "Runtime",
    "RuntimeFault", "TraceEvent", "UnificationTypeError",
    "UnresolvedPathError", "trace_hash",
    "HyperText", "Hypercode", "NotQuiescent", "ReflectError",
    "UnknownIdentifier", "ValueStore",
    "ConformanceReport", "StyleRegistry", "check_constraints", "snapshot",
    "EvalError", "EvalResult", "Workspace",
]

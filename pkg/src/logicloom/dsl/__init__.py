"""The logical-form language: grammar, executor, classifier, sampler, templates."""

from .ast import Apply, Literal, LfNode, iter_applies
from .classify import classify_lf_topic
from .executor import ExecValue, LfExecError, execute_lf, match_eq
from .parser import LfParseError, canonical_lf, parse_lf, print_lf
from .registry import ALL_ROWS, REGISTRY, FunctionSig
from .sampler import MAX_TRIES, SamplingExhausted, sample_lf
from .template import realize_template
from .validate import ValidityReport, Violation, validate_lf

__all__ = [
    "ALL_ROWS",
    "Apply",
    "ExecValue",
    "FunctionSig",
    "LfExecError",
    "LfNode",
    "LfParseError",
    "Literal",
    "MAX_TRIES",
    "REGISTRY",
    "SamplingExhausted",
    "ValidityReport",
    "Violation",
    "canonical_lf",
    "classify_lf_topic",
    "execute_lf",
    "iter_applies",
    "match_eq",
    "parse_lf",
    "print_lf",
    "realize_template",
    "sample_lf",
    "validate_lf",
]

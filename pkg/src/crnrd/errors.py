"""Exception and warning types shared across the toolkit."""

from __future__ import annotations


class CRNError(Exception):
    """Base class for all toolkit errors."""


class NegativeConcentration(CRNError, ValueError):
    pass


class NonpositiveConcentration(CRNError, ValueError):
    pass


class InvalidNetwork(CRNError, ValueError):
    pass


class ParseError(CRNError):
    """A located error from the reaction-file parser.

    ``line`` and ``column`` are 1-based and point at the offending token.
    """

    KINDS = (
        "SyntaxError",
        "MissingRate",
        "CoefficientOutOfRange",
        "NonpositiveRate",
        "DuplicateSpeciesInTerm",
        "TrivialReaction",
    )

    TEMPLATES = {
        "SyntaxError": "syntax error: {detail}",
        "MissingRate": "missing rate constant: {detail}",
        "CoefficientOutOfRange": "stoichiometric coefficient must be 0 or >= 1: {detail}",
        "NonpositiveRate": "rate constant must be positive: {detail}",
        "DuplicateSpeciesInTerm": "species repeated within one complex: {detail}",
        "TrivialReaction": "reactant and product complexes are identical: {detail}",
    }

    def __init__(self, kind: str, line: int, column: int, detail: str = ""):
        if kind not in self.KINDS:
            raise ValueError(f"unknown parse error kind {kind!r}")
        self.kind = kind
        self.line = line
        self.column = column
        self.detail = detail
        msg = self.TEMPLATES[kind].format(detail=detail)
        super().__init__(f"{line}:{column}: {msg}")


class NotComplexBalanced(CRNError):
    def __init__(self, message: str, residual: float = float("inf")):
        super().__init__(message)
        self.residual = residual


class NumericalFailure(CRNError):
    pass


class NoConvergence(CRNError):
    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NonpositiveMass(CRNError, ValueError):
    pass


class NotAnEquilibrium(CRNError):
    pass


class DegenerateKernel(CRNError):
    pass


class NonpositiveGap(CRNError):
    pass


class UnsupportedDomain(CRNError, ValueError):
    pass


class GridTooCoarse(CRNError, ValueError):
    pass


class NonFiniteState(CRNError):
    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InsufficientData(CRNError, ValueError):
    pass


class NonpositiveSeries(CRNError, ValueError):
    pass


class ConfigError(CRNError, ValueError):
    pass


class PipelineError(CRNError):
    """Wraps a failure with the name of the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


class NonpositiveMassWarning(UserWarning):
    pass


class OutOfRegimeWarning(UserWarning):
    pass

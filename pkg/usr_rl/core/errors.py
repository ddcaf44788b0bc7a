"""
Exception hierarchy for usr-rl.

Every error raised on purpose by the toolkit derives from ``UsrRlError`` so
callers (the CLI in particular) can map failures to exit codes in one place.
"""

from typing import Any, Dict, Optional, Sequence, Tuple


class UsrRlError(Exception):
    """Base class for all toolkit errors."""


class ContractError(UsrRlError, ValueError):
    """A documented pre-condition was violated by the caller."""


class ShapeError(ContractError):
    """Operand shapes are incompatible for an operation.

    Attributes:
        op: Name of the operation that rejected its operands.
        shapes: Shapes of the offending operands, in call order.
    """

    def __init__(self, op: str, shapes: Sequence[Tuple[int, ...]], detail: str = ""):
        self.op = op
        self.shapes = tuple(tuple(s) for s in shapes)
        shown = " vs ".join(str(s) for s in self.shapes)
        message = f"{op}: incompatible shapes {shown}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class DomainError(UsrRlError, ValueError):
    """An input lies outside the mathematical domain of an operation."""

    def __init__(self, op: str, detail: str):
        self.op = op
        super().__init__(f"{op}: {detail}")


class EvaluationError(UsrRlError, ArithmeticError):
    """A computed quantity is non-finite or could not be produced."""


class TrainingError(UsrRlError, RuntimeError):
    """Training produced a non-finite loss.

    Attributes:
        step: Environment step at which the failure was detected.
        diagnostics: Loss values and parameter norms at the failure.
        checkpoint: Last good checkpoint, attached by the trainer.
    """

    def __init__(self, message: str, step: int, diagnostics: Optional[Dict[str, Any]] = None):
        self.step = step
        self.diagnostics = dict(diagnostics or {})
        self.checkpoint: Optional[Any] = None
        details = ", ".join(f"{k}={v}" for k, v in sorted(self.diagnostics.items()))
        super().__init__(f"{message} at step {step}" + (f" [{details}]" if details else ""))


class ConfigError(UsrRlError, ValueError):
    """A configuration document or value is invalid.

    Attributes:
        key: Dotted config key (``train.gamma``) when known.
        line: 1-based line number in the source file when known.
    """

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)

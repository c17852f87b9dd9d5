"""
Exception hierarchy for the AbC laboratory.
"""

from __future__ import annotations

from fractions import Fraction


class AbcError(RuntimeError):
    """Base class for every failure raised by the laboratory."""


class ParameterError(AbcError, ValueError):
    """Illegal stage, partition or map parameters."""


class IncompatibleGridError(AbcError, ValueError):
    """A rotation or map does not act on a grid as a permutation of its cells."""


class BudgetError(AbcError):
    """A stage grid would exceed the configured cell budget."""

    def __init__(self, cells: int, budget: int, shape: tuple[int, ...]):
        super().__init__(
            f"stage grid {shape} has {cells} cells, above the cell budget {budget}"
        )
        self.cells = cells
        self.budget = budget
        self.shape = shape


class LevelCollisionError(AbcError):
    """Two tower levels intersect."""


class MollificationError(AbcError):
    """The requested (eps, delta) closeness cannot be reached numerically."""

    def __init__(self, message: str, achievable_eps: float, achievable_delta: float):
        super().__init__(
            f"{message}; achievable (eps, delta) = ({achievable_eps:.3g}, {achievable_delta:.3g})"
        )
        self.achievable_eps = achievable_eps
        self.achievable_delta = achievable_delta


class ConfigError(AbcError):
    """Invalid run configuration."""


def require(condition: bool, message: str, error: type[AbcError] = ParameterError) -> None:
    """Raise ``error(message)`` unless ``condition`` holds."""
    if not condition:
        raise error(message)


def as_fraction(value: object) -> Fraction:
    """Parse an exact rational from an int, Fraction or ``"p/q"`` string."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ParameterError(f"expected a rational, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except ValueError as err:
            raise ParameterError(f"cannot parse rational from {value!r}") from err
    raise ParameterError(f"expected an exact rational, got {type(value).__name__}")

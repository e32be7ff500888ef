"""
Module for custom exceptions and precondition checks.
"""
import typing as _t

import numpy as _np


class CoopDSTCError(Exception):
    """Base class for every error raised by coopdstc."""


class PreconditionError(CoopDSTCError, ValueError):
    pass


class DimensionError(PreconditionError):
    pass


class DegenerateInputError(PreconditionError):
    pass


class NumericalFailure(CoopDSTCError, ArithmeticError):
    pass


class ConfigError(CoopDSTCError, ValueError):
    def __init__(self, message: str, key: _t.Optional[str] = None) -> None:
        self.key = key
        super().__init__(message if key is None else f'{key}: {message}')


class FeedbackLengthError(PreconditionError):
    pass


class ResultsIOError(CoopDSTCError, OSError):
    pass


def check_square(m: _np.ndarray, name: str = 'matrix') -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f'{name} must be square, got shape {m.shape}.')


def is_hermitian(m: _np.ndarray, tol: float) -> bool:
    scale = max(1.0, float(_np.max(_np.abs(m)))) if m.size else 1.0
    return bool(_np.max(_np.abs(m - m.conj().T), initial=0.0) <= tol * scale)


def check_hermitian(m: _np.ndarray, tol: float, name: str = 'matrix') -> None:
    check_square(m, name)
    if not is_hermitian(m, tol):
        raise PreconditionError(f'{name} must be Hermitian within tolerance {tol}.')


def check_same_length(*arrays: _t.Sized, names: _t.Sequence[str] = ()) -> None:
    lengths = {len(a) for a in arrays}
    if len(lengths) > 1:
        label = ', '.join(names) if names else 'inputs'
        raise DimensionError(f'{label} must have equal lengths, got {sorted(lengths)}.')


def check_non_negative(value: float, name: str) -> None:
    if not value >= 0:
        raise PreconditionError(f'{name} must be non-negative, got {value}.')


def check_positive(value: float, name: str) -> None:
    if not value > 0:
        raise PreconditionError(f'{name} must be positive, got {value}.')

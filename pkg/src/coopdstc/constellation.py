"""
Gray-mapped symbol constellations, modulation and hard decisions.
"""
import dataclasses as _dc
import typing as _t

import numpy as _np
from frozendict import frozendict

import coopdstc.exceptions as _ex
import coopdstc.types as _types


BitPattern = _t.Tuple[int, ...]


@_dc.dataclass(frozen=True, eq=False)
class Constellation:
    """
    Finite unit-energy symbol alphabet with a Gray bit labelling.

    Attributes
    ----------
    points : ndarray
        Complex symbols, indexed 0..M-1.
    bits_per_symbol : int
    gray_map : frozendict
        bit tuple (MSB first) -> point index.
    """
    points: _types.CVector
    bits_per_symbol: int
    gray_map: _t.Mapping[BitPattern, int]

    def __post_init__(self) -> None:
        m = len(self.points)
        if m != 2 ** self.bits_per_symbol:
            raise _ex.PreconditionError(f'{m} points cannot carry {self.bits_per_symbol} bits per symbol.')
        if sorted(self.gray_map.values()) != list(range(m)):
            raise _ex.PreconditionError('gray_map must label every point exactly once.')

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def bit_labels(self) -> _types.BitArray:
        """M x bits_per_symbol array, row i holds the bits of point i."""
        labels = _np.zeros((self.size, self.bits_per_symbol), dtype=_np.uint8)
        for bits, index in self.gray_map.items():
            labels[index] = bits
        return labels

    @property
    def pattern_lookup(self) -> _types.IndexArray:
        """Integer value of a bit pattern (MSB first) -> point index."""
        lookup = _np.zeros(self.size, dtype=_np.int64)
        for bits, index in self.gray_map.items():
            lookup[int(''.join(str(b) for b in bits), 2)] = index
        return lookup


def qpsk() -> Constellation:
    """
    Gray-mapped unit-energy QPSK.

    Examples
    --------
    >>> c = qpsk()
    >>> c.gray_map[(1, 1)]
    2
    """
    points = _np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j], dtype=_np.complex128) / _np.sqrt(2)
    gray_map = frozendict({(0, 0): 0, (0, 1): 1, (1, 1): 2, (1, 0): 3})
    return Constellation(points, 2, gray_map)


QPSK = qpsk()


def modulate_indices(bits: _t.Any, c: Constellation = QPSK) -> _types.IndexArray:
    bits = _np.asarray(bits, dtype=_np.int64).ravel()
    if bits.size % c.bits_per_symbol:
        raise _ex.PreconditionError(f'bit count {bits.size} is not a multiple of {c.bits_per_symbol}.')
    if _np.any((bits != 0) & (bits != 1)):
        raise _ex.PreconditionError('bits must be 0 or 1.')
    weights = 2 ** _np.arange(c.bits_per_symbol - 1, -1, -1)
    patterns = bits.reshape(-1, c.bits_per_symbol) @ weights
    return c.pattern_lookup[patterns]


def modulate(bits: _t.Any, c: Constellation = QPSK) -> _types.CVector:
    """
    Map a bit stream to symbols, bits_per_symbol bits at a time.

    Examples
    --------
    >>> import numpy as np
    >>> modulate([0, 0, 1, 1]) * np.sqrt(2)
    array([ 1.+1.j, -1.-1.j])
    """
    return c.points[modulate_indices(bits, c)]


def demodulate(indices: _t.Any, c: Constellation = QPSK) -> _types.BitArray:
    """Point indices back to the Gray bit stream."""
    idx = _np.asarray(indices, dtype=_np.int64).ravel()
    if _np.any((idx < 0) | (idx >= c.size)):
        raise _ex.PreconditionError('symbol index out of range.')
    return c.bit_labels[idx].ravel()


def slice_indices(y: _t.Any, c: Constellation = QPSK) -> _types.IndexArray:
    """Nearest-point indices for every entry of y. Ties go to the lowest index."""
    y = _np.asarray(y, dtype=_np.complex128).ravel()
    distances = _np.abs(y[:, None] - c.points[None, :])
    return _np.argmin(distances, axis=1)


def slice(y: complex, c: Constellation = QPSK) -> int:
    """
    Hard decision on a single soft estimate.

    Examples
    --------
    >>> slice(0.9 + 1.2j)
    0
    >>> slice(0)
    0
    """
    return int(slice_indices([y], c)[0])

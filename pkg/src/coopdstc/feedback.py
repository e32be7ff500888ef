"""
Limited feedback of code matrices from the destination to the relays:
uniform midrise quantization, a binary symmetric channel and relay-side
reconstruction.

Bit layout: entries in row-major order, real part then imaginary part,
bits_per_component bits per component, most significant bit first.
"""
import dataclasses as _dc
import logging as _logging
import typing as _t

import numpy as _np

import coopdstc.armo as _armo
import coopdstc.exceptions as _ex
import coopdstc.numerics as _numerics
import coopdstc.system as _system
import coopdstc.types as _types


_logger = _logging.getLogger(__name__)

SCHEDULES = ('per_frame', 'per_update')


@_dc.dataclass(frozen=True)
class FeedbackModel:
    bits_per_component: int = 4
    crossover_prob: float = 0.0
    clip_range: float = 1.0

    def __post_init__(self) -> None:
        if self.bits_per_component < 1:
            raise _ex.PreconditionError('bits_per_component must be a positive integer.')
        if not 0 <= self.crossover_prob <= 0.5:
            raise _ex.PreconditionError(f'crossover probability must lie in [0, 0.5], got {self.crossover_prob}.')
        _ex.check_positive(self.clip_range, 'clip_range')

    @classmethod
    def for_relay_power(cls, relay_power: float, bits_per_component: int, crossover_prob: float = 0.0) -> 'FeedbackModel':
        """Clip at sqrt(P_R), the largest modulus any entry of a normalized matrix can reach."""
        return cls(bits_per_component, crossover_prob, float(_np.sqrt(relay_power)))

    @property
    def levels(self) -> int:
        return 2 ** self.bits_per_component

    @property
    def step(self) -> float:
        return 2 * self.clip_range / self.levels

    def payload_bits(self, rows: int, cols: int) -> int:
        return 2 * self.bits_per_component * rows * cols


def _components(m: _np.ndarray) -> _types.RVector:
    m = _np.asarray(m, dtype=_np.complex128)
    return _np.stack([m.real, m.imag], axis=-1).ravel()


def quantization_levels(values: _t.Any, fb: FeedbackModel) -> _types.IndexArray:
    """Midrise cell index of every real value. Cell boundaries go to the lower cell."""
    clipped = _np.clip(_np.asarray(values, dtype=_np.float64), -fb.clip_range, fb.clip_range)
    cells = _np.ceil((clipped + fb.clip_range) / fb.step).astype(_np.int64) - 1
    return _np.clip(cells, 0, fb.levels - 1)


def reconstruction_values(levels: _t.Any, fb: FeedbackModel) -> _types.RVector:
    return -fb.clip_range + (_np.asarray(levels, dtype=_np.float64) + 0.5) * fb.step


def quantize(m: _t.Any, fb: FeedbackModel) -> _types.BitArray:
    """
    Encode a complex matrix as a bit array of length 2 b rows cols.

    Examples
    --------
    >>> fb = FeedbackModel(bits_per_component=2, clip_range=1.0)
    >>> quantize([[0.9 - 0.1j]], fb)
    array([1, 1, 0, 1], dtype=uint8)
    """
    m = _numerics.as_cmatrix(m)
    cells = quantization_levels(_components(m), fb)
    shifts = _np.arange(fb.bits_per_component - 1, -1, -1)
    return ((cells[:, None] >> shifts[None, :]) & 1).astype(_np.uint8).ravel()


def dequantize(bits: _t.Any, fb: FeedbackModel, rows: int, cols: int) -> _types.CMatrix:
    """Rebuild the rows x cols matrix from its bit pattern."""
    bits = _np.asarray(bits, dtype=_np.int64).ravel()
    expected = fb.payload_bits(rows, cols)
    if bits.size != expected:
        raise _ex.FeedbackLengthError(f'expected {expected} feedback bits, got {bits.size}.')
    weights = 2 ** _np.arange(fb.bits_per_component - 1, -1, -1)
    cells = bits.reshape(-1, fb.bits_per_component) @ weights
    values = reconstruction_values(cells, fb).reshape(rows, cols, 2)
    return values[..., 0] + 1j * values[..., 1]


def bsc_transmit(bits: _t.Any, p: float, rng: _types.Rng) -> _types.BitArray:
    """Flip each bit independently with probability p."""
    if not 0 <= p <= 0.5:
        raise _ex.PreconditionError(f'crossover probability must lie in [0, 0.5], got {p}.')
    bits = _np.asarray(bits, dtype=_np.uint8).ravel()
    flips = (rng.random(bits.size) < p).astype(_np.uint8)
    return bits ^ flips


def feed_back_bank(codes: _system.AdjustableCodeBank, fb: FeedbackModel, relay_power: float,
                   rng: _types.Rng) -> _t.Tuple[_system.AdjustableCodeBank, int]:
    """
    Send every code matrix over the feedback link.

    Returns the relays' renormalized reconstruction and the number of
    flipped bits.
    """
    received = _np.empty_like(codes.matrices)
    flipped = 0
    for k in range(codes.n_relays):
        for j in range(codes.n_symbols):
            bits = quantize(codes.matrices[k, j], fb)
            noisy = bsc_transmit(bits, fb.crossover_prob, rng)
            flipped += int(_np.count_nonzero(bits != noisy))
            received[k, j] = dequantize(noisy, fb, codes.dim, codes.dim)
    if flipped:
        _logger.debug('feedback link flipped %d bits', flipped)
    return _armo.normalize_codes(_system.AdjustableCodeBank(received), relay_power), flipped


def expected_bank(codes: _system.AdjustableCodeBank, fb: FeedbackModel,
                  relay_power: float) -> _system.AdjustableCodeBank:
    """The relays' reconstruction when no feedback bit is flipped."""
    received = _np.empty_like(codes.matrices)
    for k in range(codes.n_relays):
        for j in range(codes.n_symbols):
            received[k, j] = dequantize(quantize(codes.matrices[k, j], fb), fb, codes.dim, codes.dim)
    return _armo.normalize_codes(_system.AdjustableCodeBank(received), relay_power)

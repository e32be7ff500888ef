"""
Result records produced by the harness and their CSV serialization.
"""
import csv as _csv
import dataclasses as _dc
import pathlib as _pathlib
import typing as _t

from frozendict import frozendict

import coopdstc.exceptions as _ex
import coopdstc.types as _types


FLOAT_FORMAT = '.15g'

# fields flagged volatile (timing) are left out of CSV output by default
_VOLATILE = {'volatile': True}


@_dc.dataclass(frozen=True)
class BERRecord:
    snr_db: float
    bit_errors: int
    bits_total: int
    ber: float
    noise_variance: float
    wall_seconds: float = _dc.field(default=0.0, metadata=_VOLATILE, compare=False)

    def __post_init__(self) -> None:
        if self.bits_total <= 0:
            raise _ex.PreconditionError('bits_total must be positive.')
        if not 0 <= self.ber <= 1:
            raise _ex.PreconditionError(f'ber must lie in [0, 1], got {self.ber}.')


@_dc.dataclass(frozen=True)
class ConvergenceRecord:
    index: int
    ber: float
    mse: float


@_dc.dataclass(frozen=True)
class BoundRecord:
    snr_db: float
    mc_pep: float
    mc_pep_traditional: float
    bound_adaptive: float
    bound_traditional: float


@_dc.dataclass(frozen=True)
class FDARMORecord:
    snr_db: float
    noise_variance: float
    selected_index: int
    det_modulus: float
    exact_pep_selected: float
    exact_pep_mean: float


AnyRecord = _t.Union[BERRecord, ConvergenceRecord, BoundRecord, FDARMORecord]


def record_fields(record_type: type, include_volatile: bool = False) -> _t.List[str]:
    """Field names in declaration order."""
    return [f.name for f in _dc.fields(record_type) if include_volatile or not f.metadata.get('volatile')]


def to_record(record: AnyRecord, include_volatile: bool = True) -> _types.Record:
    """Plain dict of a result record with Python scalar values."""
    return {name: _plain(getattr(record, name)) for name in record_fields(type(record), include_volatile)}


def _plain(value: _t.Any) -> _t.Any:
    if hasattr(value, 'item'):
        return value.item()
    return value


def format_value(value: _t.Any) -> str:
    """
    Deterministic text form of a CSV cell.

    Examples
    --------
    >>> format_value(1 / 3)
    '0.333333333333333'
    >>> format_value(7)
    '7'
    """
    value = _plain(value)
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format(value, FLOAT_FORMAT)
    return str(value)


def emit_csv(records: _t.Sequence[AnyRecord], path: _t.Union[str, _pathlib.Path],
             record_type: _t.Optional[type] = None, include_volatile: bool = False) -> None:
    """
    Write a header row and one row per record.

    Parameters
    ----------
    records : sequence of records
    path : str or Path
    record_type : type, optional
        Needed for the header when records is empty.
    include_volatile : bool, default False
        Also write timing columns, which differ between identical runs.
    """
    if record_type is None:
        if not records:
            raise _ex.PreconditionError('record_type is required to write an empty record list.')
        record_type = type(records[0])
    names = record_fields(record_type, include_volatile)
    try:
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = _csv.writer(f, lineterminator='\n')
            writer.writerow(names)
            for record in records:
                writer.writerow([format_value(getattr(record, name)) for name in names])
    except OSError as e:
        raise _ex.ResultsIOError(f'cannot write results to {path}: {e.strerror or e}') from e


def records_equal(
    records1: _t.Sequence[_types.Record],
    records2: _t.Sequence[_types.Record],
) -> bool:
    """
    Check if two sets of records contain the same records, ignoring order.

    Examples
    --------
    >>> records_equal([{'index': 0, 'ber': 0.5}, {'index': 1, 'ber': 0.25}],
    ...               [{'index': 1, 'ber': 0.25}, {'index': 0, 'ber': 0.5}])
    True
    """
    if len(records1) != len(records2):
        return False
    return {frozendict(r) for r in records1} == {frozendict(r) for r in records2}

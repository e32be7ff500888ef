"""
Functions for storing result records in SQL tables.
"""
import typing as _t

import sqlalchemy as _sa
import sqlalchemy.engine as _sa_engine
import sqlalchemy.exc as _sa_exc
from sqlalchemy import create_engine as _create_engine
from sqlalchemy import sql as _sql
from tinytim.data import column_names as _column_names
from tinytim.rows import row_dicts_to_data as _row_dicts_to_data

import coopdstc.exceptions as _ex
import coopdstc.records as _records
import coopdstc.types as _types


ID_COLUMN = 'id'

_type_convert = {
    int: _sql.sqltypes.Integer,
    str: _sql.sqltypes.Unicode,
    float: _sql.sqltypes.Float,
    bool: _sql.sqltypes.Boolean,
}


def create_engine(url: str, *args, **kwargs) -> _sa_engine.Engine:
    """
    Returns a SQLAlchemy engine for a database url.

    Examples
    --------
    >>> engine = create_engine('sqlite://')
    """
    return _create_engine(url, *args, future=True, **kwargs)


def get_table_names(engine: _sa_engine.Engine) -> _t.List[str]:
    return _sa.inspect(engine).get_table_names()


def get_table(table_name: str, engine: _sa_engine.Engine) -> _sa.Table:
    """Reflect an existing table."""
    return _sa.Table(table_name, _sa.MetaData(), autoload_with=engine)


def _column_datatype(values: _t.Iterable[_t.Any]) -> type:
    kinds = {type(value) for value in values if value is not None}
    if kinds == {bool}:
        return bool
    if kinds <= {int}:
        return int
    if kinds <= {int, float}:
        return float
    return str


def create_table_from_records(
    table_name: str,
    records: _t.Sequence[_types.Record],
    engine: _sa_engine.Engine,
    if_exists: str = 'error'
) -> _sa.Table:
    """
    Create a table whose columns are inferred from the records, plus an
    autoincrement integer id, then insert the records.

    Parameters
    ----------
    table_name : str
    records : sequence of dict
    engine : SqlAlchemy Engine
    if_exists : {'error', 'replace', 'append'}, default 'error'

    Returns
    -------
    sqlalchemy.Table

    Examples
    --------
    >>> engine = create_engine('sqlite://')
    >>> table = create_table_from_records('ber_results', [{'snr_db': 0.0, 'ber': 0.1}], engine)
    >>> get_table_names(engine)
    ['ber_results']
    """
    if not records:
        raise _ex.PreconditionError('cannot infer columns from zero records.')
    if if_exists not in ('error', 'replace', 'append'):
        raise _ex.PreconditionError(f'unknown if_exists option {if_exists!r}.')
    exists = table_name in get_table_names(engine)
    if exists and if_exists == 'append':
        table = get_table(table_name, engine)
        insert_records(table, records, engine)
        return table
    if exists and if_exists == 'error':
        raise _ex.ResultsIOError(f'table {table_name} already exists.')
    data = _row_dicts_to_data(records, None, None)
    cols = [_sa.Column(ID_COLUMN, _sa.Integer, primary_key=True, autoincrement=True)]
    for name in _column_names(data):
        cols.append(_sa.Column(name, _type_convert[_column_datatype(data[name])]))
    table = _sa.Table(table_name, _sa.MetaData(), *cols)
    try:
        if exists:
            table.drop(engine)
        table.create(engine)
    except _sa_exc.SQLAlchemyError as e:
        raise _ex.ResultsIOError(f'cannot create table {table_name}: {e}') from e
    insert_records(table, records, engine)
    return table


def insert_records(table: _sa.Table, records: _t.Sequence[_types.Record], engine: _sa_engine.Engine) -> None:
    if not records:
        return
    try:
        with engine.begin() as connection:
            connection.execute(table.insert(), [dict(record) for record in records])
    except _sa_exc.SQLAlchemyError as e:
        raise _ex.ResultsIOError(f'cannot insert into {table.name}: {e}') from e


def select_records_all(table: _t.Union[_sa.Table, str], engine: _sa_engine.Engine,
                       include_id: bool = False) -> _t.List[_types.Record]:
    """All rows of a table as dicts, in id order."""
    if isinstance(table, str):
        table = get_table(table, engine)
    query = _sa.select(table)
    if ID_COLUMN in table.columns:
        query = query.order_by(table.columns[ID_COLUMN])
    with engine.connect() as connection:
        rows = [dict(row._mapping) for row in connection.execute(query)]
    if not include_id:
        for row in rows:
            row.pop(ID_COLUMN, None)
    return rows


def store_records(records: _t.Sequence[_records.AnyRecord], table_name: str,
                  engine: _sa_engine.Engine) -> _t.Optional[_sa.Table]:
    """Append result records to table_name, creating it on first use."""
    if not records:
        return None
    rows = [_records.to_record(record) for record in records]
    return create_table_from_records(table_name, rows, engine, if_exists='append')

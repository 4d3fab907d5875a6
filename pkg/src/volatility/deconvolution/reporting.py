"""
CSV input and output.

Files are plain comma-separated text with a header row, '.' as decimal separator and
floats written with 17 significant digits, so equal results give byte-identical files.
"""

import csv
import logging
import typing as t
from pathlib import Path

import numpy as np

from volatility.deconvolution.deconvolution_exceptions import DomainError
from volatility.deconvolution.process_model import SimulatedPath

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '.17g'
PATH_COLUMNS = ('t', 'y', 'sigma', 'x', 'eta')


def format_value(value: t.Any) -> str:
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), FLOAT_FORMAT)
    return str(value)


def write_csv(path: t.Union[str, Path], rows: t.Iterable[t.Mapping[str, t.Any]], columns: t.Sequence[str]) -> Path:
    """Write rows (dicts keyed by column) under a header row; missing keys are left empty."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open('w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(column)) for column in columns])
            count += 1
    logger.debug(f"Wrote {count} rows to {path}")
    return path


def write_path(path: t.Union[str, Path], simulated: SimulatedPath) -> Path:
    return write_csv(
        path,
        (dict(zip(PATH_COLUMNS, row)) for row in simulated.rows()),
        PATH_COLUMNS
    )


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_series(
    path: t.Union[str, Path],
    column: t.Optional[str] = None,
    pre_logged: bool = False
) -> np.ndarray:
    """
    Read one numeric column of a CSV file.

    With a header row the column is `column` if given, else 'z' for pre-logged data or 'y'
    (the returns column written by `simulate`), else the first column. Files without a
    header are read whole and their first column is used.

    Raises:
        DomainError: If the file is empty, the column is missing or a value is not numeric
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Input file not found: {path}")
    with path.open(newline='', encoding='utf-8') as handle:
        first = next(csv.reader(handle), None)
    if not first:
        raise DomainError(f"{path} is empty")

    if all(_is_number(cell) for cell in first):
        try:
            data = np.loadtxt(path, delimiter=',', ndmin=2)
        except ValueError as e:
            raise DomainError(f"{path} is not a numeric CSV file: {e}")
        return data[:, 0]

    header = [cell.strip() for cell in first]
    wanted = column or ('z' if pre_logged else 'y')
    if wanted in header:
        index = header.index(wanted)
    elif column is not None:
        raise DomainError(f"column '{column}' not found in {path}; columns: {', '.join(header)}")
    else:
        index = 0
        logger.info(f"No '{wanted}' column in {path}; reading '{header[0]}'")

    values = []
    with path.open(newline='', encoding='utf-8') as handle:
        reader = csv.reader(handle)
        next(reader)
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                values.append(float(row[index]))
            except (ValueError, IndexError):
                raise DomainError(f"{path}:{line}: no numeric value in column '{header[index]}'")
    if not values:
        raise DomainError(f"{path} holds no data rows")
    return np.asarray(values, dtype=float)

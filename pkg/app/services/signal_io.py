"""
Signal ingestion from plain text and CSV exports.
One value per line, or delimited columns with an optional header row.
"""

import io
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from app.core.exceptions import (
    EmptyInputException,
    InputUnreadableException,
    NonNumericInputException,
    SignalLengthException,
)
from app.core.logging import get_logger
from app.models.signal_data import Signal

logger = get_logger(__name__)

ColumnRef = Union[int, str, None]


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def _read_text(file_path: Path) -> str:
    try:
        return file_path.read_text(encoding="utf-8-sig")
    except FileNotFoundError:
        raise InputUnreadableException(f"File not found: {file_path}")
    except IsADirectoryError:
        raise InputUnreadableException(f"Not a file: {file_path}")
    except PermissionError:
        raise InputUnreadableException(f"Permission denied: {file_path}")
    except UnicodeDecodeError as e:
        raise InputUnreadableException(f"File is not UTF-8 text: {file_path}", details=str(e))
    except OSError as e:
        raise InputUnreadableException(f"Failed to read {file_path}: {e}")


def _detect_separator(line: str) -> str:
    if "," in line:
        return ","
    if ";" in line:
        return ";"
    if "\t" in line:
        return "\t"
    return r"\s+"


def _split(line: str, separator: str) -> List[str]:
    if separator == r"\s+":
        return line.split()
    return [token.strip() for token in line.split(separator)]


def _pick_column(frame: pd.DataFrame, column: ColumnRef, file_path: Path) -> pd.Series:
    if isinstance(column, str) and not column.isdigit():
        if column not in frame.columns:
            raise NonNumericInputException(
                f"Column '{column}' not found in {file_path.name}",
                details=f"columns: {list(frame.columns)}",
            )
        return frame[column]
    if column is not None:
        index = int(column)
        if not 0 <= index < frame.shape[1]:
            raise NonNumericInputException(f"Column {index} not found; {file_path.name} has {frame.shape[1]} columns")
        return frame.iloc[:, index]

    first_row = frame.iloc[0]
    for position, token in enumerate(first_row):
        if isinstance(token, str) and _is_number(token):
            return frame.iloc[:, position]
    raise NonNumericInputException(f"No numeric column found in {file_path.name}")


def read_signal(file_path: Union[str, Path], column: ColumnRef = None, sampling_rate: Optional[float] = None) -> Signal:
    """
    Read a signal from a text or CSV file.

    The first numeric column is used unless `column` (0-based index or header name) is given;
    a header row is detected when none of its fields parse as numbers.

    Args:
        file_path: Path to the input file
        column: Optional column selector
        sampling_rate: Optional sampling rate stored as metadata

    Returns:
        Signal with the parsed samples

    Raises:
        InputUnreadableException: file missing or undecodable
        EmptyInputException: no data rows
        NonNumericInputException: a data row in the selected column is not a finite number
        SignalLengthException: fewer than two samples
    """
    file_path = Path(file_path)
    text = _read_text(file_path)
    lines = [line.strip() for line in text.splitlines()]
    lines = [line for line in lines if line and not line.startswith("#")]
    if not lines:
        raise EmptyInputException(f"No data in {file_path}")

    separator = _detect_separator(lines[0])
    header_tokens = _split(lines[0], separator)
    has_header = not any(_is_number(token) for token in header_tokens)

    frame = pd.read_csv(
        io.StringIO("\n".join(lines)),
        sep=separator,
        header=0 if has_header else None,
        dtype=str,
        skipinitialspace=True,
        engine="python",
    )
    if frame.empty:
        raise EmptyInputException(f"No data rows in {file_path} (header only)")

    series = _pick_column(frame, column, file_path)
    values = np.empty(len(series))
    for row, token in enumerate(series):
        try:
            # float() parses decimal text exactly
            values[row] = float(str(token).strip())
        except ValueError:
            line_number = row + (2 if has_header else 1)
            raise NonNumericInputException(f"Non-numeric value {token!r} at data line {line_number} of {file_path.name}")
    if not np.all(np.isfinite(values)):
        raise NonNumericInputException(f"Non-finite sample in {file_path.name}")
    if values.size < 2:
        raise SignalLengthException(f"Need at least 2 samples, {file_path.name} has {values.size}")

    logger.info("Signal loaded", file=file_path.name, samples=int(values.size), header=has_header)
    return Signal(samples=values, sampling_rate=sampling_rate, source=str(file_path))


def dyadic_truncate(signal: Signal, strict: bool = False) -> Signal:
    """
    Keep the first 2^J samples of a signal whose length is not a power of two.

    Raises:
        SignalLengthException: length is not a power of two and `strict` is set
    """
    if signal.is_dyadic:
        return signal
    kept = 1 << signal.J
    if strict:
        raise SignalLengthException(
            f"Signal length {signal.n} is not a power of two",
            details=f"largest power of two below is {kept}",
        )
    logger.warning("Signal length is not a power of two; truncating", original=signal.n, kept=kept)
    return Signal(samples=signal.samples[:kept], sampling_rate=signal.sampling_rate, source=signal.source)


def write_signal(file_path: Union[str, Path], samples: np.ndarray, header: Optional[List[str]] = None):
    """Write one value per line with 17 significant digits, so values re-read bit-identically"""
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    comment = "\n".join(header or [])
    np.savetxt(file_path, np.asarray(samples, dtype=float), fmt="%.17g", header=comment, comments="# ")
    logger.info("Signal written", file=str(file_path), samples=int(np.size(samples)))

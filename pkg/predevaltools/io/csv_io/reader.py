from pathlib import Path
from typing import Tuple, Union

import numpy as np
import polars as pl

from predevaltools.core.exceptions import DataError
from predevaltools.core.interfaces.io.reader import Reader, ReaderOptions
from predevaltools.core.types import Histogram, LabelVector, LogitMatrix, PredictionMatrix

PathLike = Union[str, Path]


class PolarsLineReader:
    """
    Shared parsing for the plain CSV formats.

    Each file is first loaded as a single text column (one row per physical line, with its
    1-based line number), so every validation failure can name the exact line. Field
    splitting and numeric casting are then done column-wise with polars.
    """

    def _read_lines(self, path: PathLike, reader_options: ReaderOptions) -> pl.DataFrame:
        """
        Load non-empty, non-comment lines of a text file.

        Returns:
            pl.DataFrame: Columns `line_no` (1-based) and `line`.

        Raises:
            DataError: If the file does not exist or cannot be decoded.
        """
        path = Path(path)
        encoding = reader_options.get('encoding') or 'utf-8'
        comment_prefix = reader_options.get('comment_prefix') or '#'

        try:
            text = path.read_text(encoding=encoding)
        except FileNotFoundError as e:
            raise DataError('file not found', path) from e
        except (OSError, UnicodeDecodeError) as e:
            raise DataError(f'cannot read file: {e}', path) from e

        lines = pl.DataFrame({'line': text.splitlines()}, schema={'line': pl.Utf8})
        stripped = pl.col('line').str.strip_chars()
        return (
            lines
            .with_row_index('line_no', offset=1)
            .filter((stripped != '') & ~stripped.str.starts_with(comment_prefix))
        )

    def _read_float_rows(self, path: PathLike, reader_options: ReaderOptions) -> Tuple[np.ndarray, np.ndarray]:
        """
        Parse a rectangular block of decimal fields.

        Returns:
            Tuple[np.ndarray, np.ndarray]: The n×k float64 values and the source line number of each row.

        Raises:
            DataError: On an empty file, inconsistent field counts or unparsable fields.
        """
        separator = reader_options.get('separator') or ','
        lines = self._read_lines(path, reader_options)
        if lines.height == 0:
            raise DataError('no data rows', path)

        rows = lines.with_columns(
            pl.col('line').str.split(separator).alias('fields')
        ).with_columns(
            pl.col('fields').list.len().alias('width')
        )

        width = int(rows['width'][0])
        ragged = rows.filter(pl.col('width') != width)
        if ragged.height:
            raise DataError(
                f'expected {width} fields, found {int(ragged["width"][0])}',
                path, int(ragged['line_no'][0])
            )

        values = rows.select([
            pl.col('fields').list.get(j).str.strip_chars().cast(pl.Float64, strict=False).alias(f'c{j}')
            for j in range(width)
        ])
        malformed = values.select(pl.any_horizontal(pl.all().is_null())).to_series()
        if malformed.any():
            row = int(malformed.arg_true()[0])
            raise DataError(f'malformed row {rows["line"][row]!r}', path, int(rows['line_no'][row]))

        return values.to_numpy().astype(np.float64), rows['line_no'].to_numpy()

    @staticmethod
    def _reject_non_finite(data: np.ndarray, line_numbers: np.ndarray, path: PathLike) -> None:
        bad = ~np.isfinite(data).all(axis=1)
        if bad.any():
            raise DataError('non-finite value', path, int(line_numbers[np.flatnonzero(bad)[0]]))


class PredictionCSVReader(PolarsLineReader, Reader[PredictionMatrix]):
    """
    Reads a prediction matrix: one row per sample, k comma-separated probabilities.

    Rows already stochastic within `row_sum_tolerance` are kept exactly as written, rows off by
    more than that but within `renormalize_tolerance` are rescaled to sum to one, and anything
    further off is rejected. Entries outside [0, 1] by at most `renormalize_tolerance` are
    clipped before their row is rescaled.
    """

    def read(self, path: str, reader_options: ReaderOptions = {}) -> PredictionMatrix:
        data, line_numbers = self._read_float_rows(path, reader_options)
        self._reject_non_finite(data, line_numbers, path)

        if data.shape[1] < 2:
            raise DataError(f'prediction rows need at least two classes, found {data.shape[1]}', path)

        keep_tolerance = reader_options.get('row_sum_tolerance')
        keep_tolerance = 1e-9 if keep_tolerance is None else keep_tolerance
        reject_tolerance = reader_options.get('renormalize_tolerance')
        reject_tolerance = 1e-6 if reject_tolerance is None else reject_tolerance

        out_of_range = ((data < -reject_tolerance) | (data > 1.0 + reject_tolerance)).any(axis=1)
        if out_of_range.any():
            row = np.flatnonzero(out_of_range)[0]
            raise DataError('probability outside [0, 1]', path, int(line_numbers[row]))

        clipped = ((data < 0.0) | (data > 1.0)).any(axis=1)
        data = np.clip(data, 0.0, 1.0)

        sums = data.sum(axis=1)
        deviation = np.abs(sums - 1.0)
        rejected = deviation > reject_tolerance
        if rejected.any():
            row = np.flatnonzero(rejected)[0]
            raise DataError(f'row sums to {sums[row]!r}, expected 1', path, int(line_numbers[row]))

        renormalize = (deviation > keep_tolerance) | clipped
        data[renormalize] = data[renormalize] / sums[renormalize, None]
        return PredictionMatrix(data)


class LogitCSVReader(PolarsLineReader, Reader[LogitMatrix]):
    """Reads a logit matrix: one row per sample, k comma-separated finite scores."""

    def read(self, path: str, reader_options: ReaderOptions = {}) -> LogitMatrix:
        data, line_numbers = self._read_float_rows(path, reader_options)
        self._reject_non_finite(data, line_numbers, path)
        if data.shape[1] < 2:
            raise DataError(f'logit rows need at least two classes, found {data.shape[1]}', path)
        return LogitMatrix(data)


class LabelCSVReader(PolarsLineReader, Reader[LabelVector]):
    """Reads labels: one nonnegative integer class index per line."""

    def read(self, path: str, reader_options: ReaderOptions = {}) -> LabelVector:
        lines = self._read_lines(path, reader_options)
        if lines.height == 0:
            raise DataError('no labels', path)

        parsed = lines.with_columns(
            pl.col('line').str.strip_chars().cast(pl.Int64, strict=False).alias('label')
        )
        malformed = parsed.filter(pl.col('label').is_null() | (pl.col('label') < 0))
        if malformed.height:
            raise DataError(f'invalid label {malformed["line"][0]!r}', path, int(malformed['line_no'][0]))

        return LabelVector(parsed['label'].to_numpy())


class HistogramCSVReader(PolarsLineReader, Reader[Histogram]):
    """
    Reads class weights (a prior or a source label histogram).

    The k nonnegative reals may sit on one line or span several; they are normalized on load.
    """

    def read(self, path: str, reader_options: ReaderOptions = {}) -> Histogram:
        separator = reader_options.get('separator') or ','
        lines = self._read_lines(path, reader_options)
        if lines.height == 0:
            raise DataError('no histogram values', path)

        fields = (
            lines
            .with_columns(pl.col('line').str.split(separator).alias('field'))
            .explode('field')
            .with_columns(pl.col('field').str.strip_chars().cast(pl.Float64, strict=False).alias('weight'))
        )
        malformed = fields.filter(pl.col('weight').is_null() | ~pl.col('weight').is_finite() | (pl.col('weight') < 0))
        if malformed.height:
            raise DataError(
                f'invalid histogram weight {malformed["field"][0]!r}', path, int(malformed['line_no'][0])
            )

        try:
            return Histogram.normalized(fields['weight'].to_numpy())
        except DataError as e:
            raise DataError(e.message, path) from e

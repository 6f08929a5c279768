from pathlib import Path
from typing import Union

import numpy as np
import polars as pl

from predevaltools.core.exceptions import DataError
from predevaltools.core.interfaces.io.writer import Writer, WriterOptions
from predevaltools.core.types import LabelVector, LogitMatrix, PredictionMatrix


def _write_frame(df: pl.DataFrame, path: str, writer_options: WriterOptions) -> None:
    """Write a headerless CSV, optionally preceded by one '#' comment line."""
    target = Path(path)
    separator = writer_options.get('separator') or ','
    encoding = writer_options.get('encoding') or 'utf-8'
    header_comment = writer_options.get('header_comment')

    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, 'wb') as handle:
            if header_comment:
                handle.write(f'# {header_comment}\n'.encode(encoding))
            df.write_csv(handle, include_header=False, separator=separator, line_terminator='\n')
    except OSError as e:
        raise DataError(f'cannot write file: {e}', target) from e


class PolarsMatrixWriter(Writer[Union[PredictionMatrix, LogitMatrix]]):
    """
    Canonical writer for prediction and logit matrices.

    Floats are written in shortest round-trip form, so reading the file back with the
    matching reader reproduces the matrix bit-for-bit.
    """

    def write(self, data: Union[PredictionMatrix, LogitMatrix], path: str, writer_options: WriterOptions = {}) -> None:
        matrix = np.ascontiguousarray(data.data)
        df = pl.from_numpy(matrix, schema=[f'c{j}' for j in range(matrix.shape[1])], orient='row')
        _write_frame(df, path, writer_options)


class PolarsLabelWriter(Writer[LabelVector]):
    """Writes one class index per line."""

    def write(self, data: LabelVector, path: str, writer_options: WriterOptions = {}) -> None:
        df = pl.DataFrame({'label': np.asarray(data.labels, dtype=np.int64)})
        _write_frame(df, path, writer_options)

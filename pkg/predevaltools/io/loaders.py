"""
Convenience entry points over the CSV and manifest readers/writers.
"""
from pathlib import Path
from typing import Union

from predevaltools.core.interfaces.io.reader import ReaderOptions
from predevaltools.core.interfaces.io.writer import WriterOptions
from predevaltools.core.types import Histogram, LabelVector, LogitMatrix, Manifest, PredictionMatrix
from predevaltools.io.csv_io.reader import (
    HistogramCSVReader, LabelCSVReader, LogitCSVReader, PredictionCSVReader
)
from predevaltools.io.csv_io.writer import PolarsLabelWriter, PolarsMatrixWriter
from predevaltools.io.manifest import JSONManifestReader, JSONManifestWriter

PathLike = Union[str, Path]


def load_prediction_csv(path: PathLike, reader_options: ReaderOptions = {}) -> PredictionMatrix:
    return PredictionCSVReader().read(str(path), reader_options)


def load_logit_csv(path: PathLike, reader_options: ReaderOptions = {}) -> LogitMatrix:
    return LogitCSVReader().read(str(path), reader_options)


def load_labels_csv(path: PathLike, reader_options: ReaderOptions = {}) -> LabelVector:
    return LabelCSVReader().read(str(path), reader_options)


def load_histogram_csv(path: PathLike, reader_options: ReaderOptions = {}) -> Histogram:
    return HistogramCSVReader().read(str(path), reader_options)


def load_manifest(path: PathLike) -> Manifest:
    return JSONManifestReader().read(str(path))


def save_prediction_csv(data: PredictionMatrix, path: PathLike, writer_options: WriterOptions = {}) -> None:
    PolarsMatrixWriter().write(data, str(path), writer_options)


def save_logit_csv(data: LogitMatrix, path: PathLike, writer_options: WriterOptions = {}) -> None:
    PolarsMatrixWriter().write(data, str(path), writer_options)


def save_labels_csv(data: LabelVector, path: PathLike, writer_options: WriterOptions = {}) -> None:
    PolarsLabelWriter().write(data, str(path), writer_options)


def save_manifest(data: Manifest, path: PathLike) -> None:
    JSONManifestWriter().write(data, str(path))

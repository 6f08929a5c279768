from abc import ABC, abstractmethod
from typing import Optional, TypeVar, Generic, TypedDict

ResultSet = TypeVar('ResultSet')

class ReaderOptions(TypedDict, total=False):
    """
    Typed dictionary for specifying options for the file reader.

    Attributes:
        separator (Optional[str]): Field delimiter (default ',').
        comment_prefix (Optional[str]): Lines starting with this prefix are skipped (default '#').
        encoding (Optional[str]): File encoding (default 'utf-8').
        row_sum_tolerance (Optional[float]): Rows further than this from summing to one are
            renormalized (prediction files only, default 1e-9).
        renormalize_tolerance (Optional[float]): Rows further than this from summing to one
            are rejected (prediction files only, default 1e-6).
    """
    separator: Optional[str]
    comment_prefix: Optional[str]
    encoding: Optional[str]
    row_sum_tolerance: Optional[float]
    renormalize_tolerance: Optional[float]


class Reader(Generic[ResultSet], ABC):
    """
    Abstract base class for implementing file readers.

    Readers parse a file located at a given path, validate it, and return one of the
    domain types defined by the generic ResultSet.
    """

    @abstractmethod
    def read(self, path: str, reader_options: ReaderOptions = {}) -> ResultSet:
        """
        Read data from a file using the specified path and reader options.

        Parameters:
            path (str): The file path from which to read the data.
            reader_options (ReaderOptions, optional): A dictionary of options that
                dictate how the file should be read. Defaults to an empty dictionary.

        Returns:
            ResultSet: The validated data read from the file.

        Raises:
            DataError: If the file is missing or its content is malformed.
        """
        pass

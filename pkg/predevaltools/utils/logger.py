import logging
from sys import stderr
from typing import Union

class Logger:

    @classmethod
    def get_instance(cls, logger_name: str = "predevaltools", level: Union[int, str, None] = None) -> logging.Logger:
        """
        Return the package logger, attaching a stderr handler on first use.

        Modules log through `logging.getLogger(__name__)`, so every child of the
        package logger shares this handler. Stdout is left to JSON reports.
        """
        logger = logging.getLogger(logger_name)
        if not logger.handlers:
            formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
            handler = logging.StreamHandler(stderr)
            handler.setFormatter(formatter)
            logger.addHandler(handler)
            logger.setLevel(logging.INFO)
            logger.propagate = False

        if level is not None:
            logger.setLevel(level.upper() if isinstance(level, str) else level)

        return logger

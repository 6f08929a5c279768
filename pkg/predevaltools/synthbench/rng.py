"""
Seeded random streams.

Every stream is a PCG64 generator whose state comes from `SeedSequence(seed,
spawn_key=cell)`. The same (seed, cell) always yields the same stream, on every platform
and regardless of the order or thread in which cells are processed.
"""
import numpy as np

from predevaltools.core.exceptions import ConfigurationError

TASK_STREAM = 0
MODEL_STREAM = 1
SHIFT_STREAM = 2
IMBALANCE_STREAM = 3


def cell_generator(seed: int, *cell: int) -> np.random.Generator:
    """
    Generator for one cell of work.

    Parameters:
        seed (int): Non-negative root seed.
        *cell (int): Non-negative path identifying the cell, e.g. (SHIFT_STREAM, kind, severity).

    Raises:
        ConfigurationError: If the seed or a cell index is negative.
    """
    if int(seed) < 0 or any(int(c) < 0 for c in cell):
        raise ConfigurationError(f'seeds and cell indices must be non-negative, got seed={seed} cell={cell}')
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(int(c) for c in cell))
    return np.random.Generator(np.random.PCG64(sequence))

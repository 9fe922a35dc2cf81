"""
Fixed-order reductions.

numpy's add.reduce uses pairwise (cascade) summation over contiguous data
and runs on one thread, so the result depends only on the array contents
and layout. Every global sum in the package goes through these helpers.
"""

import numpy as np


def cascade_sum(values, axis=None) -> np.ndarray:
    """Pairwise sum of `values` over `axis` in a fixed memory order."""
    array = np.ascontiguousarray(values, dtype=float)
    if axis is None:
        return np.add.reduce(array.ravel())
    return np.add.reduce(array, axis=axis)

import itertools
from typing import Union

import numpy as np
import numpy.typing as npt

from app.core.errors import CapacityError, ShapeError
from app.utils.config import get_config

MatrixLike = Union[npt.ArrayLike, np.ndarray]


def _as_square(matrix: MatrixLike) -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"permanent needs a square matrix, got shape {m.shape}")
    return m


def permanent(matrix: MatrixLike) -> complex:
    """
    Permanent of a square complex matrix (Glynn formula, Gray-code ordered).

    Runs in O(2^(k-1) k) for a k x k matrix; the 0 x 0 permanent is 1.

    Args:
        matrix: k x k array-like

    Returns:
        The permanent as a complex number
    """
    m = _as_square(matrix)
    k = m.shape[0]
    if k == 0:
        return 1.0 + 0.0j
    if k == 1:
        return complex(m[0, 0])
    if k == 2:
        return complex(m[0, 0] * m[1, 1] + m[0, 1] * m[1, 0])
    if k > get_config().MAX_PARTICLES:
        raise CapacityError(f"permanent of a {k}x{k} matrix exceeds the particle cap")

    # delta_0 stays +1; row_comb[j] = sum_i delta_i m[i, j]
    row_comb = m.sum(axis=0)
    total = np.prod(row_comb)
    sign = 1.0
    previous = 0
    for step in range(1, 2 ** (k - 1)):
        gray = step ^ (step >> 1)
        flipped = gray ^ previous
        row = flipped.bit_length()
        if gray & flipped:
            row_comb = row_comb - 2.0 * m[row]
        else:
            row_comb = row_comb + 2.0 * m[row]
        sign = -sign
        total += sign * np.prod(row_comb)
        previous = gray
    return complex(total / 2 ** (k - 1))


def permanent_by_definition(matrix: MatrixLike) -> complex:
    """Sum over all permutations; factorial time, for cross-checking only."""
    m = _as_square(matrix)
    k = m.shape[0]
    total = 0.0 + 0.0j
    for perm in itertools.permutations(range(k)):
        total += np.prod([m[i, perm[i]] for i in range(k)]) if k else 1.0
    return complex(total)

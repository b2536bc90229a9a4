"""Kendall's tau-b in O(N log N) via a merge-sort inversion count (Knight's method)."""

import numpy as np


def _tie_pairs(sorted_values):
    """Number of tied pairs in an already sorted 1-d array."""
    if sorted_values.size == 0:
        return 0
    boundaries = np.flatnonzero(np.diff(sorted_values)) + 1
    counts = np.diff(np.concatenate(([0], boundaries, [sorted_values.size])))
    return int(np.sum(counts * (counts - 1) // 2))


def count_inversions(values):
    """Count pairs ``i < j`` with ``values[i] > values[j]``.

    Bottom-up merge sort where every level merges all adjacent block pairs at
    once.  Blocks are kept apart by adding ``block_id * N`` to the integer
    ranks, and a stable sort keeps left-block elements in front of equal
    right-block elements, so ties never count as inversions.

    Parameters
    ----------
    values : array_like
        One-dimensional sequence of comparable numbers.

    Returns
    -------
    int
        Number of strict inversions.
    """
    values = np.asarray(values)
    n = values.size
    if n < 2:
        return 0
    # dense integer ranks keep the offset trick exact
    ranks = np.unique(values, return_inverse=True)[1].astype(np.int64).ravel()
    idx = np.arange(n, dtype=np.int64)
    swaps = 0
    width = 1
    while width < n:
        block = idx // (2 * width)
        is_right = (idx // width) % 2 == 1
        order = np.argsort(block * n + ranks, kind="stable")
        right_sorted = is_right[order]
        block_sorted = block[order]
        left_sizes = np.minimum(width, n - np.arange(block[-1] + 1) * 2 * width)
        left_offsets = np.concatenate(([0], np.cumsum(left_sizes)))
        # left elements merged before each position, counted within its block
        left_before = np.cumsum(~right_sorted) - left_offsets[block_sorted]
        # a right element is inverted with every left element merged after it
        behind = left_sizes[block_sorted] - left_before
        swaps += int(np.sum(behind[right_sorted]))
        ranks = ranks[order]
        width *= 2
    return swaps


def kendall_tau(x, y):
    """Tie-corrected Kendall rank correlation (tau-b).

    Parameters
    ----------
    x, y : array_like
        Paired observations of equal length.

    Returns
    -------
    float
        tau-b in ``[-1, 1]``; ``nan`` when either variable is constant.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise ValueError("x and y must have the same length")
    n = x.size
    if n < 2:
        return float("nan")
    order = np.lexsort((y, x))
    xs = x[order]
    ys = y[order]
    n0 = n * (n - 1) // 2
    n1 = _tie_pairs(xs)
    # joint ties: equal x and equal y in the lexicographic order
    same = np.concatenate(([False], (np.diff(xs) == 0) & (np.diff(ys) == 0)))
    starts = np.flatnonzero(~same)
    run = np.diff(np.concatenate((starts, [n])))
    n3 = int(np.sum(run * (run - 1) // 2))
    swaps = count_inversions(ys)
    n2 = _tie_pairs(np.sort(ys))
    denom = np.sqrt(float(n0 - n1) * float(n0 - n2))
    if denom == 0:
        return float("nan")
    tau = (n0 - n1 - n2 + n3 - 2 * swaps) / denom
    return float(min(1.0, max(-1.0, tau)))

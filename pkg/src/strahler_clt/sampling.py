"""Compiled batch sampler: Remy growth followed by branch counting.

Only branch counts leave the kernel; trees themselves are never
materialized on the Python side.  Randomness comes from a NumPy
``Generator`` as blocks of uniforms, so a stream is fully determined by
the generator's seed.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# uniforms held in memory per block
_BLOCK_DRAWS = 1 << 22


def max_order(n: int) -> int:
    """Largest Strahler number reachable with ``n`` leaves."""
    return int(n).bit_length()


@njit(cache=True, nogil=True)
def _remy_counts(n, u, out):
    nsamples = u.shape[0]
    size = 2 * n - 1
    left = np.empty(size, np.int32)
    right = np.empty(size, np.int32)
    parent = np.empty(size, np.int32)
    order = np.empty(size, np.int32)
    stack = np.empty(size, np.int32)
    post = np.empty(size, np.int32)
    for s in range(nsamples):
        left[0] = -1
        right[0] = -1
        parent[0] = -1
        root = 0
        for i in range(1, n):
            # floor(u * b) on a 53-bit uniform; bias below b / 2**53
            d = int(u[s, i - 1] * (2 * (2 * i - 1)))
            x = d >> 1
            y = 2 * i - 1
            z = 2 * i
            p = parent[x]
            if p == -1:
                root = y
            elif left[p] == x:
                left[p] = y
            else:
                right[p] = y
            parent[y] = p
            if d & 1 == 0:
                left[y] = x
                right[y] = z
            else:
                left[y] = z
                right[y] = x
            parent[x] = y
            parent[z] = y
            left[z] = -1
            right[z] = -1
        top = 0
        k = 0
        stack[0] = root
        while top >= 0:
            v = stack[top]
            top -= 1
            post[k] = v
            k += 1
            if left[v] != -1:
                stack[top + 1] = left[v]
                stack[top + 2] = right[v]
                top += 2
        for idx in range(size - 1, -1, -1):
            v = post[idx]
            if left[v] == -1:
                order[v] = 1
            else:
                a = order[left[v]]
                b = order[right[v]]
                if a == b:
                    order[v] = a + 1
                else:
                    order[v] = a if a > b else b
        for v in range(size):
            p = parent[v]
            if p == -1 or order[p] != order[v]:
                out[s, order[v]] += 1


def branch_counts(n: int, nsamples: int, rng: np.random.Generator, width: int | None = None) -> np.ndarray:
    """Branch counts of ``nsamples`` uniform trees with ``n`` leaves.

    Returns an int64 array of shape ``(nsamples, width)`` where column ``r``
    holds ``S_r``.  Column 0 is unused.  ``width`` defaults to
    ``max_order(n) + 2`` so ``S_{R+1}`` (always zero) is addressable.
    """
    if n < 1:
        raise ValueError(f"magnitude must be >= 1, got {n}")
    if width is None:
        width = max_order(n) + 2
    width = max(width, max_order(n) + 1)
    out = np.zeros((nsamples, width), dtype=np.int64)
    if n == 1:
        out[:, 1] = 1
        return out
    block = max(1, _BLOCK_DRAWS // (n - 1))
    for start in range(0, nsamples, block):
        stop = min(nsamples, start + block)
        u = rng.random((stop - start, n - 1))
        _remy_counts(n, u, out[start:stop])
    return out

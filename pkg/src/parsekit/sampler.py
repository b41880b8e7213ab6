"""Length-aware batching for padded encoder inputs.

Items padded to a common length waste compute proportional to
``len(batch) * max(length in batch)``.  :func:`build_batches` groups items
under two hard caps, a maximum item count and a maximum padded token count
per batch, while minimizing the summed padded size.

Items are sorted by length and batches are cut from contiguous runs of the
sorted order; an exchange argument shows some optimal solution has this
shape, so the cut points can be chosen exactly by dynamic programming over
prefixes.  The result is never worse than any other grouping that respects
the same caps, in particular arrival-order grouping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SamplerError(ValueError):
    """No valid batching exists, or inputs are malformed."""


@dataclass(frozen=True, slots=True)
class BatchSpec:
    """Hard per-batch caps: item count and padded token count."""

    batch_size: int = 128
    batch_max_tokens: int = 12800

    def __post_init__(self):
        if self.batch_size < 1:
            raise SamplerError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.batch_max_tokens < 1:
            raise SamplerError(
                f"batch_max_tokens must be >= 1, got {self.batch_max_tokens}"
            )


@dataclass(frozen=True, slots=True)
class BatchAssignment:
    """Batches of original item indices plus the total padded token count."""

    batches: tuple[tuple[int, ...], ...]
    padded_tokens: int


def build_batches(lengths, spec: BatchSpec = BatchSpec()) -> BatchAssignment:
    """Group item indices into batches with minimal total padded size.

    ``lengths[i]`` is the padded width item ``i`` would occupy.  Every batch
    satisfies ``len(batch) <= spec.batch_size`` and
    ``len(batch) * max(lengths in batch) <= spec.batch_max_tokens``; the
    batches partition ``range(len(lengths))``.  Raises :class:`SamplerError`
    when a single item already exceeds the token cap.
    """
    lengths = np.asarray(lengths, dtype=np.int64)
    if lengths.ndim != 1:
        raise SamplerError("lengths must be a flat sequence")
    n = int(lengths.shape[0])
    if n == 0:
        return BatchAssignment((), 0)
    if (lengths < 0).any():
        raise SamplerError("lengths must be non-negative")

    order = np.argsort(lengths, kind="stable")
    sorted_lengths = lengths[order]
    if int(sorted_lengths[-1]) > spec.batch_max_tokens:
        raise SamplerError(
            f"item of length {int(sorted_lengths[-1])} exceeds "
            f"batch_max_tokens={spec.batch_max_tokens}"
        )

    # f[i]: minimal padded size of the first i sorted items; cut[i]: the
    # batch size ending at i that achieves it, preferring fewer batches.
    f = np.full(n + 1, np.iinfo(np.int64).max, dtype=np.int64)
    f[0] = 0
    cut = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        width = int(sorted_lengths[i - 1])
        k_max = min(spec.batch_size, i)
        if width > 0:
            k_max = min(k_max, spec.batch_max_tokens // width)
        sizes = np.arange(1, k_max + 1, dtype=np.int64)
        costs = f[i - sizes] + sizes * width
        best = int(np.argmin(costs[::-1]))
        cut[i] = k_max - best
        f[i] = int(costs[k_max - 1 - best])

    bounds = []
    i = n
    while i > 0:
        bounds.append(i)
        i -= int(cut[i])
    bounds.append(0)
    bounds.reverse()

    batches = tuple(
        tuple(int(j) for j in order[a:b]) for a, b in zip(bounds, bounds[1:])
    )
    return BatchAssignment(batches, int(f[n]))


def restore_order(batches, outputs) -> list:
    """Undo batching: map per-batch output lists back to original item order.

    ``outputs[b][j]`` is the result for item ``batches[b][j]``.  Every index
    must appear exactly once across all batches.
    """
    batches = tuple(batches)
    outputs = list(outputs)
    if len(outputs) != len(batches):
        raise SamplerError(
            f"{len(batches)} batches but {len(outputs)} output groups"
        )
    total = sum(len(b) for b in batches)
    result: list = [None] * total
    seen = [False] * total
    for batch, group in zip(batches, outputs):
        if len(group) != len(batch):
            raise SamplerError(
                f"batch of {len(batch)} items got {len(group)} outputs"
            )
        for idx, value in zip(batch, group):
            if not 0 <= idx < total or seen[idx]:
                raise SamplerError(f"batches do not form a permutation: index {idx}")
            seen[idx] = True
            result[idx] = value
    return result

"""Sliding-window encoding for sequences longer than an encoder accepts.

Token encoders bound the input length at some ``max_len`` (``m`` below).  A
sentence is first split into sub-tokens framed by begin/end sentinels; when
the framed sequence of length ``n`` exceeds ``m``, it is re-chunked into
overlapping windows that each carry both sentinels plus a contiguous slice
of the middle.  After every window is encoded independently, the original
sequence is restored by keeping only the central stride of each window,
where the encoding has enough context on both sides:

* stride ``s = ceil((m - 2) / 2)``, keep offset ``o = ceil(s / 2)``,
* the first window keeps its prefix ``[0, o + s)``,
* interior window ``k`` keeps ``[k*s + o, k*s + o + s)``,
* the last window keeps the suffix through the end sentinel.

The kept ranges partition ``[0, n)`` exactly, and the window count
``1 + ceil((n - m) / s)`` is minimal for stride ``s``.  Restored vectors are
then mean-pooled over each token's sub-token span to yield one vector per
token.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BOS = "<s>"
EOS = "</s>"

#: Sub-token chunk width of the character sub-tokenizer.
DEFAULT_CHUNK = 4


class WindowError(ValueError):
    """A window plan was requested for unusable sizes."""


@dataclass(frozen=True, slots=True)
class Window:
    """One encoder call: which positions go in, which outputs are kept.

    ``positions`` are sub-token indices fed to the encoder in order.  The
    slice of original positions ``[kept[0], kept[1])`` is restored from this
    window; original position ``i`` sits at local index ``i - base``.
    """

    positions: tuple[int, ...]
    kept: tuple[int, int]
    base: int


@dataclass(frozen=True, slots=True)
class WindowPlan:
    """Complete slicing of a framed sub-token sequence of length ``length``."""

    length: int
    max_len: int
    stride: int
    offset: int
    windows: tuple[Window, ...]


def plan_windows(length: int, max_len: int) -> WindowPlan:
    """Plan encoder windows for a framed sequence of ``length`` sub-tokens.

    ``length`` counts both sentinels, so it is at least 2.  ``max_len`` must
    be at least 4 so every window retains sentinels plus a non-empty middle.
    """
    if length < 2:
        raise WindowError(f"framed sequence needs both sentinels, got length {length}")
    if max_len < 4:
        raise WindowError(f"max_len must be >= 4, got {max_len}")

    stride = (max_len - 1) // 2
    offset = (stride + 1) // 2

    if length <= max_len:
        window = Window(tuple(range(length)), (0, length), 0)
        return WindowPlan(length, max_len, stride, offset, (window,))

    count = 1 + -(-(length - max_len) // stride)
    last = length - 1
    windows = []
    for k in range(count):
        mid_start = 1 + k * stride
        mid_end = min(mid_start + max_len - 2, last)
        positions = (0, *range(mid_start, mid_end), last)
        if k == 0:
            kept = (0, offset + stride)
        elif k == count - 1:
            kept = (k * stride + offset, length)
        else:
            kept = (k * stride + offset, k * stride + offset + stride)
        windows.append(Window(positions, kept, k * stride))
    return WindowPlan(length, max_len, stride, offset, tuple(windows))


def apply_windows(plan: WindowPlan, subtokens) -> list[tuple]:
    """Slice a framed sub-token sequence into per-window encoder inputs."""
    if len(subtokens) != plan.length:
        raise WindowError(
            f"plan is for length {plan.length}, got {len(subtokens)} sub-tokens"
        )
    return [tuple(subtokens[p] for p in w.positions) for w in plan.windows]


def restore(plan: WindowPlan, outputs) -> np.ndarray:
    """Stitch per-window encoder outputs back into one array of shape (n, d).

    ``outputs[k]`` must be an array of shape ``(len(windows[k].positions), d)``.
    Only each window's kept slice is copied; together the slices cover every
    position exactly once.
    """
    outputs = list(outputs)
    if len(outputs) != len(plan.windows):
        raise WindowError(
            f"plan has {len(plan.windows)} windows, got {len(outputs)} outputs"
        )
    dim = np.asarray(outputs[0]).shape[1]
    result = np.empty((plan.length, dim), dtype=np.asarray(outputs[0]).dtype)
    for window, out in zip(plan.windows, outputs):
        out = np.asarray(out)
        if out.shape[0] != len(window.positions):
            raise WindowError(
                f"window output has {out.shape[0]} rows for "
                f"{len(window.positions)} positions"
            )
        a, b = window.kept
        result[a:b] = out[a - window.base : b - window.base]
    return result


@dataclass(frozen=True, slots=True)
class SubtokenSequence:
    """A sentence as framed sub-tokens plus each token's sub-token span.

    ``subtokens[0]`` is :data:`BOS` and ``subtokens[-1]`` is :data:`EOS`;
    ``spans[t]`` is the half-open range of sub-tokens spelling token ``t``.
    """

    subtokens: tuple[str, ...]
    spans: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.subtokens)


def subtokenize(tokens, chunk: int = DEFAULT_CHUNK) -> SubtokenSequence:
    """Split tokens into character chunks of width ``chunk``, adding sentinels.

    A fixed-width character split stands in for a learned sub-token
    vocabulary: it is deterministic, covers any input, and yields multi-piece
    tokens often enough to exercise pooling and windowing.
    """
    if chunk < 1:
        raise WindowError(f"chunk must be >= 1, got {chunk}")
    subtokens = [BOS]
    spans = []
    for token in tokens:
        start = len(subtokens)
        if token:
            subtokens.extend(token[i : i + chunk] for i in range(0, len(token), chunk))
        else:
            subtokens.append("")
        spans.append((start, len(subtokens)))
    subtokens.append(EOS)
    return SubtokenSequence(tuple(subtokens), tuple(spans))


def pool_subtokens(vectors: np.ndarray, spans) -> np.ndarray:
    """Average sub-token vectors over each token span; shape (tokens, d)."""
    vectors = np.asarray(vectors)
    result = np.empty((len(spans), vectors.shape[1]), dtype=vectors.dtype)
    for t, (a, b) in enumerate(spans):
        if not 0 <= a < b <= vectors.shape[0]:
            raise WindowError(f"token span ({a}, {b}) out of range")
        result[t] = vectors[a:b].mean(axis=0)
    return result

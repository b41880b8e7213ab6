import itertools

import numpy as np
import pytest

from parsekit.sampler import (
    BatchAssignment,
    BatchSpec,
    SamplerError,
    build_batches,
    restore_order,
)


def padded_cost(lengths, batch) -> int:
    return len(batch) * max(lengths[i] for i in batch)


def total_cost(lengths, batches) -> int:
    return sum(padded_cost(lengths, b) for b in batches)


def brute_force_min_cost(lengths, spec: BatchSpec) -> int:
    """Minimum padded-token total over every partition into valid batches.

    Enumerates all set partitions of the items, not just contiguous runs of
    the sorted order, so it bounds any batching strategy whatsoever.
    """
    items = list(range(len(lengths)))

    def partitions(rest):
        if not rest:
            yield []
            return
        head, tail = rest[0], rest[1:]
        for k in range(len(tail) + 1):
            for group in itertools.combinations(tail, k):
                block = [head, *group]
                remaining = [i for i in tail if i not in group]
                for others in partitions(remaining):
                    yield [block] + others

    best = None
    for parts in partitions(items):
        if any(len(b) > spec.batch_size for b in parts):
            continue
        if any(padded_cost(lengths, b) > spec.batch_max_tokens for b in parts):
            continue
        cost = total_cost(lengths, parts)
        if best is None or cost < best:
            best = cost
    if best is None:
        raise AssertionError("no valid partition exists")
    return best


class TestBatchSpec:
    def test_defaults(self):
        spec = BatchSpec()
        assert spec.batch_size == 128
        assert spec.batch_max_tokens == 12800

    @pytest.mark.parametrize("kwargs", [
        {"batch_size": 0},
        {"batch_max_tokens": 0},
        {"batch_size": -3},
    ])
    def test_rejects_nonpositive(self, kwargs):
        with pytest.raises(SamplerError):
            BatchSpec(**kwargs)


class TestBuildBatches:
    def test_empty_input(self):
        out = build_batches([], BatchSpec())
        assert out.batches == ()
        assert out.padded_tokens == 0

    def test_single_item(self):
        out = build_batches([7], BatchSpec())
        assert out.batches == ((0,),)
        assert out.padded_tokens == 7

    def test_respects_size_cap(self):
        out = build_batches([5] * 10, BatchSpec(batch_size=3, batch_max_tokens=10_000))
        assert all(len(b) <= 3 for b in out.batches)

    def test_respects_token_cap(self):
        lengths = [10, 10, 10, 10]
        out = build_batches(lengths, BatchSpec(batch_size=128, batch_max_tokens=20))
        for batch in out.batches:
            assert padded_cost(lengths, batch) <= 20

    def test_batches_are_a_permutation(self):
        lengths = [3, 9, 1, 4, 4, 7, 2]
        out = build_batches(lengths, BatchSpec(batch_size=3, batch_max_tokens=20))
        flat = sorted(i for b in out.batches for i in b)
        assert flat == list(range(len(lengths)))

    def test_batches_group_similar_lengths(self):
        lengths = [1, 100, 1, 100, 1, 100]
        out = build_batches(lengths, BatchSpec(batch_size=3, batch_max_tokens=300))
        groups = [sorted(lengths[i] for i in b) for b in out.batches]
        assert sorted(groups) == [[1, 1, 1], [100, 100, 100]]

    def test_reported_cost_matches_batches(self):
        lengths = [4, 8, 15, 16, 23, 42]
        out = build_batches(lengths, BatchSpec(batch_size=4, batch_max_tokens=60))
        assert out.padded_tokens == total_cost(lengths, out.batches)

    def test_oversized_item_rejected(self):
        with pytest.raises(SamplerError, match="exceeds"):
            build_batches([5, 99], BatchSpec(batch_size=4, batch_max_tokens=50))

    def test_rejects_negative_length(self):
        with pytest.raises(SamplerError):
            build_batches([3, -1], BatchSpec())

    @pytest.mark.parametrize("seed", range(12))
    def test_matches_exhaustive_partition_optimum(self, seed):
        """The planner must match brute force over all set partitions."""
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 7))
        lengths = [int(rng.integers(1, 12)) for _ in range(n)]
        spec = BatchSpec(
            batch_size=int(rng.integers(1, 4)),
            batch_max_tokens=int(rng.integers(12, 40)),
        )
        out = build_batches(lengths, spec)
        assert out.padded_tokens == brute_force_min_cost(lengths, spec)

    def test_merging_beats_one_batch_per_item_when_free(self):
        # equal lengths pad nothing, so one batch per item and one big
        # batch cost the same; the planner should still produce few batches
        out = build_batches([5, 5, 5, 5], BatchSpec(batch_size=4, batch_max_tokens=100))
        assert out.batches == ((0, 1, 2, 3),)


class TestRestoreOrder:
    def test_inverts_batching(self):
        lengths = [3, 9, 1, 4, 4, 7, 2]
        out = build_batches(lengths, BatchSpec(batch_size=3, batch_max_tokens=30))
        shuffled = [[f"item{i}" for i in batch] for batch in out.batches]
        restored = restore_order(out.batches, shuffled)
        assert restored == [f"item{i}" for i in range(len(lengths))]

    def test_rejects_missing_index(self):
        with pytest.raises(SamplerError):
            restore_order(((1,),), [["a"]])

    def test_rejects_duplicate_index(self):
        with pytest.raises(SamplerError):
            restore_order(((0,), (0,)), [["a"], ["b"]])

    def test_rejects_ragged_shapes(self):
        with pytest.raises(SamplerError):
            restore_order(((0,),), [["a", "b"]])


class TestAssignmentType:
    def test_is_immutable(self):
        out = build_batches([1, 2], BatchSpec())
        assert isinstance(out, BatchAssignment)
        with pytest.raises(Exception):
            out.batches = ()

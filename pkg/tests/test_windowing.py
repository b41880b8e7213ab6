import numpy as np
import pytest

from parsekit.scoring import HashEncoder
from parsekit.windowing import (
    BOS,
    EOS,
    WindowError,
    apply_windows,
    plan_windows,
    pool_subtokens,
    restore,
    subtokenize,
)


def check_plan(length: int, max_len: int) -> None:
    """Verify every structural invariant of a window plan directly."""
    plan = plan_windows(length, max_len)
    assert plan.length == length
    assert plan.max_len == max_len
    stride = (max_len - 1) // 2
    offset = (stride + 1) // 2
    assert plan.stride == stride
    assert plan.offset == offset

    if length <= max_len:
        assert len(plan.windows) == 1
    else:
        expected = 1 + -(-(length - max_len) // stride)
        assert len(plan.windows) == expected

    covered = []
    for k, win in enumerate(plan.windows):
        assert len(win.positions) <= max_len
        # every window is framed by the true sentence boundaries
        assert win.positions[0] == 0
        assert win.positions[-1] == length - 1
        a, b = win.kept
        assert 0 <= a < b <= length
        # kept region must be materialized in this window at local
        # index (position - base), including the end sentinel
        for i in range(a, b):
            local = i - win.base
            assert 0 <= local < len(win.positions)
            assert win.positions[local] == i
        covered.extend(range(a, b))

    # kept regions partition [0, length) in order, exactly once
    assert covered == list(range(length))


class TestPlanWindows:
    @pytest.mark.parametrize("length,max_len", [
        (2, 4), (3, 4), (4, 4), (5, 4), (6, 4), (7, 4), (13, 4),
        (2, 5), (9, 5), (10, 5), (11, 5),
        (128, 6), (127, 7), (129, 9), (200, 32), (33, 32), (32, 32),
    ])
    def test_invariants(self, length, max_len):
        check_plan(length, max_len)

    def test_single_window_when_short(self):
        plan = plan_windows(5, 128)
        assert len(plan.windows) == 1
        assert plan.windows[0].positions == tuple(range(5))
        assert plan.windows[0].kept == (0, 5)
        assert plan.windows[0].base == 0

    def test_rejects_tiny_inputs(self):
        with pytest.raises(WindowError):
            plan_windows(1, 4)
        with pytest.raises(WindowError):
            plan_windows(5, 3)


class TestSubtokenize:
    def test_chunks_and_frames(self):
        seq = subtokenize(["Emory", "NLP"], chunk=4)
        assert seq.subtokens[0] == BOS
        assert seq.subtokens[-1] == EOS
        assert seq.subtokens[1:-1] == ("Emor", "y", "NLP")
        assert seq.spans == ((1, 3), (3, 4))
        assert len(seq) == 5

    def test_exact_multiple(self):
        seq = subtokenize(["abcd"], chunk=4)
        assert seq.subtokens == (BOS, "abcd", EOS)
        assert seq.spans == ((1, 2),)

    def test_empty_token_still_occupies_a_slot(self):
        seq = subtokenize([""], chunk=4)
        assert seq.subtokens == (BOS, "", EOS)
        assert seq.spans == ((1, 2),)

    def test_rejects_bad_chunk(self):
        with pytest.raises(WindowError):
            subtokenize(["a"], chunk=0)


class TestRestore:
    @pytest.mark.parametrize("length,max_len", [(6, 4), (20, 5), (50, 8), (200, 32)])
    def test_windowed_encoding_matches_direct(self, length, max_len):
        """Stitched window outputs must equal a single full-width pass.

        The reference encoder is deterministic per subtoken string, so a
        direct encoding of the whole sequence is an exact oracle for the
        restored windowed encoding.
        """
        rng = np.random.default_rng(length * 1000 + max_len)
        subtokens = tuple(f"t{rng.integers(0, 50)}" for _ in range(length))
        plan = plan_windows(length, max_len)
        pieces = apply_windows(plan, subtokens)

        wide = HashEncoder(dim=16, max_len=length)
        direct = wide.encode([subtokens])[0]

        narrow = HashEncoder(dim=16, max_len=max_len)
        encoded = narrow.encode(pieces)
        stitched = restore(plan, encoded)

        np.testing.assert_array_equal(stitched, direct)

    def test_restore_rejects_mismatched_outputs(self):
        plan = plan_windows(10, 4)
        bad = [np.zeros((2, 8)) for _ in plan.windows]
        with pytest.raises(WindowError):
            restore(plan, bad)


class TestPooling:
    def test_mean_over_spans(self):
        states = np.array([[0.0], [2.0], [4.0], [6.0]])
        pooled = pool_subtokens(states, [(1, 3)])
        np.testing.assert_allclose(pooled, [[3.0]])

    def test_one_row_per_token(self):
        seq = subtokenize(["alpha", "beta", "x"], chunk=2)
        states = np.arange(len(seq) * 3, dtype=float).reshape(len(seq), 3)
        pooled = pool_subtokens(states, seq.spans)
        assert pooled.shape == (3, 3)
        a, b = seq.spans[1]
        np.testing.assert_allclose(pooled[1], states[a:b].mean(axis=0))

    def test_rejects_out_of_range_span(self):
        with pytest.raises(WindowError):
            pool_subtokens(np.zeros((2, 4)), [(1, 5)])

import time

import numpy as np
import pytest

from parsekit.document import Document
from parsekit.scoring import (
    DEP_RELATIONS,
    DelayEncoder,
    Encoder,
    FixtureScorer,
    HashEncoder,
    HashScorer,
    NER_LABELS,
    POS_LABELS,
    Scorer,
    build_fixture_scorer,
)
from parsekit.windowing import BOS, EOS

from conftest import GOLD_TOKENS


class TestHashEncoder:
    def test_satisfies_protocol(self):
        assert isinstance(HashEncoder(), Encoder)

    def test_deterministic_across_instances(self):
        a = HashEncoder(dim=8).encode([["foo", "bar"]])[0]
        b = HashEncoder(dim=8).encode([["foo", "bar"]])[0]
        np.testing.assert_array_equal(a, b)

    def test_vectors_depend_only_on_subtoken(self):
        enc = HashEncoder(dim=8)
        lone = enc.encode([["x"]])[0]
        in_context = enc.encode([["a", "x", "b"]])[0]
        np.testing.assert_array_equal(lone[0], in_context[1])

    def test_counts_encode_calls(self):
        enc = HashEncoder(dim=4)
        assert enc.calls == 0
        enc.encode([["a"], ["b"]])
        enc.encode([["c"]])
        assert enc.calls == 2

    def test_output_shapes(self):
        enc = HashEncoder(dim=6)
        out = enc.encode([[BOS, "ab", EOS], []])
        assert out[0].shape == (3, 6)
        assert out[1].shape == (0, 6)

    def test_enforces_max_len(self):
        enc = HashEncoder(dim=4, max_len=4)
        with pytest.raises(ValueError, match="max_len"):
            enc.encode([["a"] * 5])

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            HashEncoder(dim=0)
        with pytest.raises(ValueError):
            HashEncoder(dim=4, max_len=2)


class TestDelayEncoder:
    def test_sleeps_per_call(self):
        enc = DelayEncoder(fixed_cost=0.03, per_window=0.0, dim=4)
        start = time.perf_counter()
        enc.encode([["a"]])
        assert time.perf_counter() - start >= 0.03

    def test_output_matches_plain_encoder(self):
        fast = HashEncoder(dim=4)
        slow = DelayEncoder(fixed_cost=0.0, per_window=0.0, dim=4)
        np.testing.assert_array_equal(
            fast.encode([["a", "b"]])[0], slow.encode([["a", "b"]])[0]
        )


@pytest.fixture(scope="module")
def scorer():
    return HashScorer(dim=16)


class TestHashScorer:
    def vectors(self, n, dim=16):
        return HashEncoder(dim=dim).encode([[f"t{i}" for i in range(n)]])[0]

    def test_satisfies_protocol(self, scorer):
        assert isinstance(scorer, Scorer)

    def test_shapes(self, scorer):
        tokens = ["a", "b", "c"]
        vectors = self.vectors(3)
        assert scorer.score_lemmas(tokens, vectors).shape == (3, len(scorer.script_inventory))
        assert scorer.score_tags(tokens, vectors).shape == (3, len(POS_LABELS))
        assert scorer.score_spans(tokens, vectors).shape == (3, 4, len(NER_LABELS))
        arc, rel = scorer.score_arcs(tokens, vectors)
        assert arc.shape == (4, 4)
        assert rel.shape == (4, 3, len(DEP_RELATIONS))

    def test_deterministic_across_instances(self):
        vectors = self.vectors(2)
        a = HashScorer(dim=16).score_tags(["a", "b"], vectors)
        b = HashScorer(dim=16).score_tags(["a", "b"], vectors)
        np.testing.assert_array_equal(a, b)

    def test_tree_covers_sentence(self, scorer):
        from parsekit.document import iter_leaves

        tokens = ["a", "b"]
        tree = scorer.predict_tree(tokens, self.vectors(2), ("NN", "NN"))
        assert list(iter_leaves(tree)) == tokens

    def test_graph_is_valid(self, scorer):
        triples = scorer.predict_graph(["Hello", "world"], self.vectors(2))
        assert any(t.relation == "instance" for t in triples)

    def test_empty_sentence_frames_and_clusters(self, scorer):
        assert scorer.predict_frames(["a"], self.vectors(1)) == ()
        assert scorer.predict_clusters([("a",), ("b",)]) == ()


def tiny_fixture_scorer():
    from parsekit.document import DepArc

    sentence = Document(
        tok=(("Cats", "ran"),),
        lem=(("cat", "run"),),
        pos=(("NNS", "VBD"),),
        dep=((DepArc(1, "nsbj"), DepArc(-1, "root")),),
    )
    return build_fixture_scorer([sentence], [], dim=8), sentence


class TestFixtureScorer:
    def test_known_sentence_scores_argmax_to_gold(self):
        scorer, sentence = tiny_fixture_scorer()
        tokens = sentence.tok[0]
        vectors = HashEncoder(dim=8).encode([list(tokens)])[0]

        from parsekit.decoders import decode_lemmas, decode_tags

        lem_scores = scorer.score_lemmas(tokens, vectors)
        assert decode_lemmas(tokens, lem_scores, scorer.script_inventory) == ("cat", "run")
        tag_scores = scorer.score_tags(tokens, vectors)
        assert decode_tags(tag_scores, scorer.pos_labels) == ("NNS", "VBD")

    def test_unknown_sentence_delegates_to_fallback(self):
        scorer, _ = tiny_fixture_scorer()
        tokens = ("never", "seen")
        vectors = HashEncoder(dim=8).encode([list(tokens)])[0]
        expected = scorer.fallback.score_tags(tokens, vectors)
        np.testing.assert_array_equal(scorer.score_tags(tokens, vectors), expected)

    def test_known_sentence_missing_task_delegates(self):
        scorer, sentence = tiny_fixture_scorer()
        tokens = sentence.tok[0]
        vectors = HashEncoder(dim=8).encode([list(tokens)])[0]
        # the fixture has no ner annotation, so spans come from the fallback
        expected = scorer.fallback.score_spans(tokens, vectors)
        np.testing.assert_array_equal(scorer.score_spans(tokens, vectors), expected)

    def test_uncovered_script_is_an_error(self):
        sentence = Document(tok=(("Weird",),), lem=(("totally-unrelated",),))
        scorer = FixtureScorer(
            sentences=[sentence],
            documents=[],
            fallback=HashScorer(dim=8),  # default inventory lacks the script
        )
        vectors = HashEncoder(dim=8).encode([["Weird"]])[0]
        with pytest.raises(ValueError, match="inventory"):
            scorer.score_lemmas(("Weird",), vectors)

    def test_multi_sentence_fixture_rejected(self):
        doc = Document(tok=(("a",), ("b",)))
        with pytest.raises(ValueError, match="one sentence"):
            FixtureScorer(sentences=[doc], documents=[], fallback=HashScorer(dim=8))

    def test_document_clusters_from_fixture(self, registry):
        from conftest import FULL_ID, GOLD_TOKENS_2

        scorer = registry.load(FULL_ID).scorer
        clusters = scorer.predict_clusters([GOLD_TOKENS, GOLD_TOKENS_2])
        assert clusters
        assert clusters[0][0].text == "Emory NLP"


class TestBuildFixtureScorer:
    def test_inventory_covers_fixture_lemmas(self):
        scorer, sentence = tiny_fixture_scorer()
        from parsekit.decoders import derive_script

        for form, lemma in zip(sentence.tok[0], sentence.lem[0]):
            assert derive_script(form, lemma) in scorer.script_inventory

    def test_registry_scorer_is_fixture_backed(self, registry):
        from conftest import FULL_ID

        assert isinstance(registry.load(FULL_ID).scorer, FixtureScorer)

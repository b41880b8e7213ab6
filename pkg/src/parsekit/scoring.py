"""Deterministic encoders and scorers behind the decoder layer.

The pipeline separates representation (an :class:`Encoder` turning sub-token
windows into vectors) from prediction (a :class:`Scorer` turning token
vectors into per-task scores or structures).  Trained models plug in behind
these two protocols; the implementations here are deterministic stand-ins:

* :class:`HashEncoder` derives each sub-token's vector from a keyed hash of
  its surface form, so outputs are stable across runs and processes.
* :class:`HashScorer` projects token vectors through fixed random matrices,
  giving arbitrary but reproducible scores for every task.
* :class:`FixtureScorer` carries curated gold annotations and emits scores
  that make the decoders reproduce them exactly, falling back to a wrapped
  scorer for inputs it does not know.  This keeps the full decode path
  honest while allowing exact end-to-end expectations.
"""

from __future__ import annotations

import hashlib
import time
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .decoders import EditScript, build_script_inventory, derive_script
from .document import AmrTriple, ConNode, Constituent, CorefMention, Document, EntitySpan

#: Penn Treebank part-of-speech inventory.
POS_LABELS = (
    "$", "''", ",", "-LRB-", "-RRB-", ".", ":", "ADD", "CC", "CD", "DT", "EX",
    "FW", "HYPH", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NFP", "NN", "NNP",
    "NNPS", "NNS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR", "RBS", "RP",
    "SYM", "TO", "UH", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT", "WP",
    "WP$", "WRB", "``",
)

#: Entity types plus the null label used by the span decoder.
NER_LABELS = (
    "O", "CARDINAL", "DATE", "EVENT", "FAC", "GPE", "LANGUAGE", "LAW", "LOC",
    "MONEY", "NORP", "ORDINAL", "ORG", "PERCENT", "PERSON", "PRODUCT",
    "QUANTITY", "TIME", "WORK_OF_ART",
)

#: Dependency relation inventory.
DEP_RELATIONS = (
    "root", "acl", "advcl", "appo", "aux", "case", "cc", "com", "comp",
    "conj", "cop", "csbj", "dat", "det", "disc", "expl", "lv", "mark",
    "modifier", "neg", "nsbj", "num", "obj", "p", "poss", "prn", "prt",
    "raise", "relcl", "voc",
)


def _seed(name: str) -> int:
    digest = hashlib.blake2b(name.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def _rng(name: str) -> np.random.Generator:
    return np.random.default_rng(_seed(name))


@runtime_checkable
class Encoder(Protocol):
    """Maps sub-token windows to context vectors, one call per batch."""

    dim: int
    max_len: int

    def encode(self, windows: Sequence[Sequence[str]]) -> list[np.ndarray]:
        """Return one (len(window), dim) array per window."""
        ...


class HashEncoder:
    """Deterministic per-sub-token vectors from a keyed blake2b hash.

    Window contents do not interact, so windowed and direct encodings of the
    same position agree exactly; ``calls`` counts :meth:`encode` invocations
    for tests that assert how often the encoder runs.
    """

    def __init__(self, dim: int = 32, max_len: int = 128):
        if dim < 1 or max_len < 4:
            raise ValueError(f"bad encoder sizes dim={dim} max_len={max_len}")
        self.dim = dim
        self.max_len = max_len
        self.calls = 0
        self._cache: dict[str, np.ndarray] = {}

    def _vector(self, subtoken: str) -> np.ndarray:
        vec = self._cache.get(subtoken)
        if vec is None:
            vec = _rng(f"subtoken:{subtoken}").uniform(-1.0, 1.0, self.dim)
            self._cache[subtoken] = vec
        return vec

    def encode(self, windows: Sequence[Sequence[str]]) -> list[np.ndarray]:
        self.calls += 1
        out = []
        for window in windows:
            if len(window) > self.max_len:
                raise ValueError(
                    f"window of {len(window)} sub-tokens exceeds max_len={self.max_len}"
                )
            out.append(np.stack([self._vector(s) for s in window]) if window
                       else np.empty((0, self.dim)))
        return out


class DelayEncoder(HashEncoder):
    """A :class:`HashEncoder` that sleeps like a hardware-bound model.

    Each :meth:`encode` call costs ``fixed_cost`` seconds plus ``per_window``
    seconds per window, mimicking kernel-launch overhead that batching
    amortizes.  Used to measure batching gains.
    """

    def __init__(self, fixed_cost: float = 0.02, per_window: float = 0.001, **kwargs):
        super().__init__(**kwargs)
        self.fixed_cost = fixed_cost
        self.per_window = per_window

    def encode(self, windows: Sequence[Sequence[str]]) -> list[np.ndarray]:
        time.sleep(self.fixed_cost + self.per_window * len(windows))
        return super().encode(windows)


@runtime_checkable
class Scorer(Protocol):
    """Per-task scoring over one sentence's token vectors.

    Tagging, span and arc tasks return dense score arrays consumed by the
    decoders; frame, tree, graph and cluster tasks return finished
    structures directly.
    """

    script_inventory: tuple[EditScript, ...]
    pos_labels: tuple[str, ...]
    ner_labels: tuple[str, ...]
    dep_relations: tuple[str, ...]

    def score_lemmas(self, tokens, vectors) -> np.ndarray: ...

    def score_tags(self, tokens, vectors) -> np.ndarray: ...

    def score_spans(self, tokens, vectors) -> np.ndarray: ...

    def score_arcs(self, tokens, vectors) -> tuple[np.ndarray, np.ndarray]: ...

    def predict_frames(self, tokens, vectors) -> tuple[tuple[EntitySpan, ...], ...]: ...

    def predict_tree(self, tokens, vectors, pos) -> ConNode: ...

    def predict_graph(self, tokens, vectors) -> tuple[AmrTriple, ...]: ...

    def predict_clusters(self, sentences) -> tuple[tuple[CorefMention, ...], ...]: ...


class HashScorer:
    """Reproducible pseudo-scores from fixed random projections."""

    def __init__(
        self,
        dim: int,
        script_inventory: tuple[EditScript, ...] = (EditScript(), EditScript(lowercase=True)),
        pos_labels: tuple[str, ...] = POS_LABELS,
        ner_labels: tuple[str, ...] = NER_LABELS,
        dep_relations: tuple[str, ...] = DEP_RELATIONS,
    ):
        self.dim = dim
        self.script_inventory = tuple(script_inventory)
        self.pos_labels = tuple(pos_labels)
        self.ner_labels = tuple(ner_labels)
        self.dep_relations = tuple(dep_relations)
        self._w_lem = _rng("proj:lem").normal(size=(dim, len(self.script_inventory)))
        self._w_pos = _rng("proj:pos").normal(size=(dim, len(self.pos_labels)))
        self._w_ner = _rng("proj:ner").normal(size=(dim, len(self.ner_labels)))
        self._w_arc = _rng("proj:arc").normal(size=(dim, dim)) / np.sqrt(dim)
        self._w_rel = _rng("proj:rel").normal(size=(dim, len(self.dep_relations)))
        self._root = _rng("proj:root").uniform(-1.0, 1.0, dim)

    def score_lemmas(self, tokens, vectors) -> np.ndarray:
        return np.asarray(vectors) @ self._w_lem

    def score_tags(self, tokens, vectors) -> np.ndarray:
        return np.asarray(vectors) @ self._w_pos

    def score_spans(self, tokens, vectors) -> np.ndarray:
        vectors = np.asarray(vectors)
        n = len(tokens)
        scores = np.zeros((n, n + 1, len(self.ner_labels)))
        if n == 0:
            return scores
        prefix = np.concatenate([np.zeros((1, vectors.shape[1])), np.cumsum(vectors, axis=0)])
        for start in range(n):
            widths = np.arange(1, n - start + 1)[:, None]
            means = (prefix[start + 1 : n + 1] - prefix[start]) / widths
            scores[start, start + 1 :] = means @ self._w_ner
        return scores

    def score_arcs(self, tokens, vectors) -> tuple[np.ndarray, np.ndarray]:
        vectors = np.asarray(vectors)
        n = len(tokens)
        nodes = np.concatenate([self._root[None, :], vectors])
        arc = nodes @ self._w_arc @ nodes.T
        rel = (nodes @ self._w_rel)[:, None, :] + (vectors @ self._w_rel)[None, :, :]
        return arc, rel

    def predict_frames(self, tokens, vectors):
        return ()

    def predict_tree(self, tokens, vectors, pos) -> ConNode:
        leaves = tuple(
            Constituent(pos[t], (token,)) for t, token in enumerate(tokens)
        )
        return Constituent("TOP", (Constituent("S", leaves),))

    def predict_graph(self, tokens, vectors) -> tuple[AmrTriple, ...]:
        if not tokens:
            return ()
        return (AmrTriple("c0", "instance", tokens[0].lower()),)

    def predict_clusters(self, sentences):
        return ()


class FixtureScorer:
    """Gold-backed scores for curated inputs, delegated scores otherwise.

    Sentences and multi-sentence documents are indexed by their exact token
    sequences.  For known inputs each scoring method emits arrays whose
    argmax structure is the gold annotation, so the standard decoders
    reconstruct it; unknown inputs (or known inputs missing a task) are
    delegated to ``fallback``.
    """

    def __init__(self, sentences: Sequence[Document], documents: Sequence[Document],
                 fallback: Scorer):
        self.fallback = fallback
        self.script_inventory = fallback.script_inventory
        self.pos_labels = fallback.pos_labels
        self.ner_labels = fallback.ner_labels
        self.dep_relations = fallback.dep_relations
        self._sentences: dict[tuple[str, ...], Document] = {}
        for doc in sentences:
            if doc.num_sentences != 1:
                raise ValueError("sentence fixtures must hold exactly one sentence")
            self._sentences[doc.tok[0]] = doc
        self._documents: dict[tuple, Document] = {doc.tok: doc for doc in documents}
        self._script_index = {s: i for i, s in enumerate(self.script_inventory)}

    def _gold(self, tokens, task):
        doc = self._sentences.get(tuple(tokens))
        if doc is None:
            return None
        rows = doc.get(task)
        return None if rows is None else rows[0]

    def score_lemmas(self, tokens, vectors) -> np.ndarray:
        gold = self._gold(tokens, "lem")
        if gold is None:
            return self.fallback.score_lemmas(tokens, vectors)
        scores = np.zeros((len(tokens), len(self.script_inventory)))
        for t, (form, lemma) in enumerate(zip(tokens, gold)):
            index = self._script_index.get(derive_script(form, lemma))
            if index is None:
                raise ValueError(
                    f"script inventory does not cover {form!r} -> {lemma!r}"
                )
            scores[t, index] = 1.0
        return scores

    def score_tags(self, tokens, vectors) -> np.ndarray:
        gold = self._gold(tokens, "pos")
        if gold is None:
            return self.fallback.score_tags(tokens, vectors)
        scores = np.zeros((len(tokens), len(self.pos_labels)))
        for t, tag in enumerate(gold):
            scores[t, self.pos_labels.index(tag)] = 1.0
        return scores

    def score_spans(self, tokens, vectors) -> np.ndarray:
        gold = self._gold(tokens, "ner")
        if gold is None:
            return self.fallback.score_spans(tokens, vectors)
        n = len(tokens)
        scores = np.zeros((n, n + 1, len(self.ner_labels)))
        for span in gold:
            label = self.ner_labels.index(span.label)
            scores[span.start, span.end, label] = 2.0 + 0.1 * (span.end - span.start)
        return scores

    def score_arcs(self, tokens, vectors) -> tuple[np.ndarray, np.ndarray]:
        gold = self._gold(tokens, "dep")
        if gold is None:
            return self.fallback.score_arcs(tokens, vectors)
        n = len(tokens)
        arc = np.zeros((n + 1, n + 1))
        rel = np.zeros((n + 1, n, len(self.dep_relations)))
        for d, dep_arc in enumerate(gold):
            head = dep_arc.head + 1
            arc[head, d + 1] = 2.0
            rel[head, d, self.dep_relations.index(dep_arc.relation)] = 1.0
        return arc, rel

    def predict_frames(self, tokens, vectors):
        gold = self._gold(tokens, "srl")
        if gold is None:
            return self.fallback.predict_frames(tokens, vectors)
        return gold

    def predict_tree(self, tokens, vectors, pos) -> ConNode:
        doc = self._sentences.get(tuple(tokens))
        if doc is not None and doc.con is not None:
            return doc.con[0]
        return self.fallback.predict_tree(tokens, vectors, pos)

    def predict_graph(self, tokens, vectors) -> tuple[AmrTriple, ...]:
        gold = self._gold(tokens, "amr")
        if gold is None:
            return self.fallback.predict_graph(tokens, vectors)
        return gold

    def predict_clusters(self, sentences):
        doc = self._documents.get(tuple(tuple(s) for s in sentences))
        if doc is None or doc.dcr is None:
            return self.fallback.predict_clusters(sentences)
        return doc.dcr


def build_fixture_scorer(sentences, documents, dim: int,
                         extra_pairs: Sequence[tuple[str, str]] = ()) -> FixtureScorer:
    """Assemble a :class:`FixtureScorer` whose inventory covers its fixtures.

    The edit-script inventory is grown from ``extra_pairs`` plus every
    (form, lemma) pair occurring in the fixtures, so gold lemmas are always
    reachable.
    """
    pairs = list(extra_pairs)
    for doc in sentences:
        if doc.lem is not None:
            for sent, lemmas in zip(doc.tok, doc.lem):
                pairs.extend(zip(sent, lemmas))
    inventory = build_script_inventory(pairs)
    fallback = HashScorer(dim, script_inventory=inventory)
    return FixtureScorer(tuple(sentences), tuple(documents), fallback)

"""Pipeline assembly: registry, shared encoding, and task fan-out.

A :class:`Pipeline` is loaded from a versioned manifest by identifier (for
example ``POS_EN``), holds an immutable encoder/scorer pair, and serves
concurrent :meth:`Pipeline.parse` calls.  One parse runs:

    tokenize -> sub-tokenize -> window -> encode -> pool -> decode -> Document

Sentences are grouped by the length-aware sampler and each group is encoded
in a single encoder call; every requested task decodes from the same pooled
token vectors, so adding tasks never adds encoder work.
:meth:`Pipeline.parse_batch` extends the same sharing across documents,
which the server uses to encode sentences from different requests together.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from threading import Lock

from . import decoders, tokenizer, windowing
from .document import CON, DCR, DEP, LEM, NER, POS, SDP, SRL, TASK_ORDER, TOK, Document, doc_from_json
from .sampler import BatchSpec, build_batches
from .scoring import Encoder, HashEncoder, Scorer, build_fixture_scorer

#: Tasks a pipeline can be asked to produce (everything beyond plain tokens).
KNOWN_TASKS = tuple(t for t in TASK_ORDER if t != TOK)

#: Format-only slots: accepted in task lists, produced by no decoder here.
FORMAT_ONLY_TASKS = (SDP,)


class PipelineError(ValueError):
    """Bad parse input or an unsupported task request."""


class RegistryError(ValueError):
    """A manifest is missing, malformed, or names an unknown identifier."""


def parse_identifier(identifier: str) -> tuple[tuple[str, ...], str]:
    """Split an identifier like ``LEM_POS_EN`` into (tasks, language).

    The last segment is the language code; the rest are task names, with
    ``DOC_COREF`` mapping to ``dcr`` and unknown segments ignored as
    artifact qualifiers (as in ``DOC_COREF_SPANBERT_LARGE_EN``).
    """
    segments = identifier.split("_")
    if len(segments) < 2:
        raise RegistryError(f"identifier {identifier!r} has no language suffix")
    language = segments[-1].lower()
    if not language.isalpha():
        raise RegistryError(f"identifier {identifier!r} has no language suffix")
    tasks: list[str] = []
    i = 0
    head = segments[:-1]
    while i < len(head):
        if head[i] == "DOC" and i + 1 < len(head) and head[i + 1] == "COREF":
            tasks.append(DCR)
            i += 2
            continue
        name = head[i].lower()
        if name in KNOWN_TASKS and name not in tasks:
            tasks.append(name)
        i += 1
    if not tasks:
        raise RegistryError(f"identifier {identifier!r} names no known task")
    return tuple(tasks), language


@dataclass(frozen=True)
class PipelineConfig:
    """Immutable settings of one loaded pipeline."""

    identifier: str
    language: str
    tasks: tuple[str, ...]
    encoder_dim: int = 32
    encoder_max_len: int = 128
    chunk: int = windowing.DEFAULT_CHUNK
    batch: BatchSpec = BatchSpec()

    def __post_init__(self):
        if not self.tasks:
            raise PipelineError("task set must be non-empty")
        unknown = [t for t in self.tasks if t not in KNOWN_TASKS]
        if unknown:
            raise PipelineError(f"unknown tasks {unknown}; known: {list(KNOWN_TASKS)}")


def normalize_tasks(tasks, available) -> tuple[str, ...]:
    """Validate a requested task list against ``available`` slots.

    Returns the request in canonical order with duplicates and the implicit
    ``tok`` removed; None means every available slot.
    """
    if tasks is None:
        return tuple(available)
    requested = []
    for task in tasks:
        if task == TOK:
            continue
        if task not in KNOWN_TASKS:
            raise PipelineError(
                f"unknown task {task!r}; known tasks: {[TOK, *KNOWN_TASKS]}"
            )
        if task not in available:
            raise PipelineError(
                f"task {task!r} is not provided by this pipeline; "
                f"available: {list(available)}"
            )
        if task not in requested:
            requested.append(task)
    return tuple(t for t in KNOWN_TASKS if t in requested)


class Pipeline:
    """An immutable parser for one language; safe for concurrent use."""

    def __init__(self, config: PipelineConfig, encoder: Encoder, scorer: Scorer):
        self.config = config
        self.encoder = encoder
        self.scorer = scorer

    def __call__(self, data, tasks=None) -> Document:
        return self.parse(data, tasks)

    def tokenize(self, text: str) -> list[list[str]]:
        """Rule-based sentence splitting and tokenization of raw text."""
        return tokenizer.tokenize(text)

    def parse(self, data, tasks=None) -> Document:
        """Annotate raw text or tokenized sentences with the requested tasks.

        ``data`` is either a string (tokenized and sentence-split first) or
        a sequence of non-empty token sequences in document order.  ``tasks``
        defaults to every slot the pipeline provides; unknown or unprovided
        task names are rejected.  Empty input yields an empty Document.
        """
        return self.parse_batch([data], tasks)[0]

    def parse_batch(self, batch, tasks=None) -> list[Document]:
        """Annotate several documents with encoder batches shared across them."""
        wanted = normalize_tasks(tasks, self.config.tasks)
        documents = [self._as_sentences(data) for data in batch]

        flat: list[list[str]] = [s for doc in documents for s in doc]
        vectors = self._encode_sentences(flat)

        decoded = {task: [] for task in wanted if task not in (SDP, DCR)}
        pos_rows = []
        need_pos = POS in wanted or CON in wanted
        for tokens, vecs in zip(flat, vectors):
            pos_row = (
                decoders.decode_tags(
                    self.scorer.score_tags(tokens, vecs), self.scorer.pos_labels
                )
                if need_pos and tokens
                else ()
            )
            pos_rows.append(pos_row)
            for task in decoded:
                decoded[task].append(self._decode_one(task, tokens, vecs, pos_row))

        results = []
        offset = 0
        for doc in documents:
            rows = {
                task: tuple(values[offset : offset + len(doc)])
                for task, values in decoded.items()
            }
            if DCR in wanted:
                rows[DCR] = self.scorer.predict_clusters(tuple(tuple(s) for s in doc))
            offset += len(doc)
            results.append(Document(tok=tuple(tuple(s) for s in doc), **rows))
        return results

    def _as_sentences(self, data) -> list[list[str]]:
        if isinstance(data, str):
            return self.tokenize(data)
        if isinstance(data, (bytes, dict)):
            raise PipelineError(f"input must be text or token lists, got {type(data).__name__}")
        try:
            data = list(data)
        except TypeError:
            raise PipelineError(
                f"input must be text or token lists, got {type(data).__name__}"
            ) from None
        if data and all(isinstance(t, str) for t in data):
            # a flat list of tokens is a single-sentence document
            data = [data]
        sentences = []
        for sentence in data:
            if isinstance(sentence, str) or not all(isinstance(t, str) for t in sentence):
                raise PipelineError("tokenized input must be a list of token lists")
            tokens = list(sentence)
            if not tokens:
                raise PipelineError("tokenized sentences must be non-empty")
            sentences.append(tokens)
        return sentences

    def _encode_sentences(self, sentences) -> list:
        framed = [windowing.subtokenize(s, self.config.chunk) for s in sentences]
        assignment = build_batches([len(f) for f in framed], self.config.batch)
        vectors: list = [None] * len(framed)
        for group in assignment.batches:
            plans = [
                windowing.plan_windows(len(framed[i]), self.encoder.max_len)
                for i in group
            ]
            windows = []
            for i, plan in zip(group, plans):
                windows.extend(windowing.apply_windows(plan, framed[i].subtokens))
            encoded = self.encoder.encode(windows)
            cursor = 0
            for i, plan in zip(group, plans):
                per_window = encoded[cursor : cursor + len(plan.windows)]
                cursor += len(plan.windows)
                stitched = windowing.restore(plan, per_window)
                vectors[i] = windowing.pool_subtokens(stitched, framed[i].spans)
        return vectors

    def _decode_one(self, task, tokens, vecs, pos_row):
        if not tokens:
            return ()
        if task == LEM:
            return decoders.decode_lemmas(
                tokens,
                self.scorer.score_lemmas(tokens, vecs),
                self.scorer.script_inventory,
            )
        if task == POS:
            return pos_row
        if task == NER:
            return decoders.decode_spans(
                tokens, self.scorer.score_spans(tokens, vecs), self.scorer.ner_labels
            )
        if task == SRL:
            return self.scorer.predict_frames(tokens, vecs)
        if task == DEP:
            arc, rel = self.scorer.score_arcs(tokens, vecs)
            return decoders.decode_dep(tokens, arc, rel, self.scorer.dep_relations)
        if task == CON:
            return self.scorer.predict_tree(tokens, vecs, pos_row)
        return self.scorer.predict_graph(tokens, vecs)


def default_manifest_path() -> Path:
    """Path of the manifest bundled with the package."""
    return Path(str(resources.files("parsekit.data").joinpath("manifest.json")))


class ModelRegistry:
    """Loads pipelines from a versioned manifest; loads are cached.

    The manifest is a JSON object ``{"version": 1, "models": [...]}`` where
    each model entry gives ``id`` plus optional ``tasks``, ``language``,
    ``encoder`` ({dim, max_len, chunk}), ``batch`` ({batch_size,
    batch_max_tokens}), ``lexicon`` (fixture file relative to the manifest)
    and ``default`` (preferred entry for its language).  Tasks and language
    omitted from an entry are parsed from the identifier.
    """

    def __init__(self, manifest_path=None):
        self.path = Path(manifest_path) if manifest_path else default_manifest_path()
        if not self.path.is_file():
            raise RegistryError(f"manifest not found: {self.path}")
        try:
            data = json.loads(self.path.read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise RegistryError(f"cannot read manifest {self.path}: {e}") from e
        if not isinstance(data, dict) or not isinstance(data.get("models"), list):
            raise RegistryError(f"manifest {self.path} must have a 'models' list")
        if data.get("version") != 1:
            raise RegistryError(
                f"unsupported manifest version {data.get('version')!r} in {self.path}"
            )
        self._entries: dict[str, dict] = {}
        for entry in data["models"]:
            config = self._parse_entry(entry)
            if config["id"] in self._entries:
                raise RegistryError(f"duplicate identifier {config['id']!r}")
            self._entries[config["id"]] = config
        self._cache: dict[str, Pipeline] = {}
        self._lock = Lock()

    def _parse_entry(self, entry) -> dict:
        if not isinstance(entry, dict) or not isinstance(entry.get("id"), str):
            raise RegistryError(f"manifest entry must be an object with an 'id': {entry!r}")
        identifier = entry["id"]
        parsed_tasks, parsed_language = parse_identifier(identifier)
        tasks = tuple(entry.get("tasks", parsed_tasks))
        language = entry.get("language", parsed_language)
        encoder = entry.get("encoder", {})
        batch = entry.get("batch", {})
        caps = BatchSpec()
        return {
            "id": identifier,
            "config": PipelineConfig(
                identifier=identifier,
                language=language,
                tasks=tasks,
                encoder_dim=int(encoder.get("dim", 32)),
                encoder_max_len=int(encoder.get("max_len", 128)),
                chunk=int(encoder.get("chunk", windowing.DEFAULT_CHUNK)),
                batch=BatchSpec(
                    int(batch.get("batch_size", caps.batch_size)),
                    int(batch.get("batch_max_tokens", caps.batch_max_tokens)),
                ),
            ),
            "lexicon": entry.get("lexicon"),
            "default": bool(entry.get("default", False)),
        }

    def identifiers(self) -> tuple[str, ...]:
        return tuple(self._entries)

    def config(self, identifier: str) -> PipelineConfig:
        return self._entry(identifier)["config"]

    def _entry(self, identifier: str) -> dict:
        entry = self._entries.get(identifier)
        if entry is None:
            raise RegistryError(
                f"unknown identifier {identifier!r}; available: {list(self._entries)}"
            )
        return entry

    def select(self, tasks, language: str) -> str:
        """First identifier whose pipeline covers ``tasks`` in ``language``."""
        for identifier, entry in self._entries.items():
            config = entry["config"]
            if config.language != language:
                continue
            if all(t in config.tasks or t == TOK for t in tasks):
                return identifier
        raise RegistryError(
            f"no pipeline for language {language!r} covering tasks {list(tasks)}"
        )

    def default_identifier(self, language: str) -> str:
        fallback = None
        for identifier, entry in self._entries.items():
            if entry["config"].language != language:
                continue
            if entry["default"]:
                return identifier
            if fallback is None:
                fallback = identifier
        if fallback is None:
            raise RegistryError(f"no pipeline for language {language!r}")
        return fallback

    def load(self, identifier: str) -> Pipeline:
        """Build (or return the cached) pipeline for an identifier."""
        with self._lock:
            pipeline = self._cache.get(identifier)
            if pipeline is None:
                entry = self._entry(identifier)
                pipeline = self._build(entry)
                self._cache[identifier] = pipeline
            return pipeline

    def _build(self, entry) -> Pipeline:
        config: PipelineConfig = entry["config"]
        encoder = HashEncoder(dim=config.encoder_dim, max_len=config.encoder_max_len)
        sentences: list[Document] = []
        documents: list[Document] = []
        pairs: list[tuple[str, str]] = []
        if entry["lexicon"]:
            lexicon_path = self.path.parent / entry["lexicon"]
            if not lexicon_path.is_file():
                raise RegistryError(f"lexicon not found: {lexicon_path}")
            lexicon = json.loads(lexicon_path.read_text("utf-8"))
            pairs = [(f, l) for f, l in lexicon.get("lemma_pairs", [])]
            sentences = [doc_from_json(json.dumps(d)) for d in lexicon.get("sentences", [])]
            documents = [doc_from_json(json.dumps(d)) for d in lexicon.get("documents", [])]
        scorer = build_fixture_scorer(sentences, documents, config.encoder_dim, pairs)
        return Pipeline(config, encoder, scorer)


_registries: dict[str, ModelRegistry] = {}
_registries_lock = Lock()


def registry_for(manifest_path=None) -> ModelRegistry:
    """Shared registry per manifest path, so repeated loads reuse pipelines."""
    path = str((Path(manifest_path) if manifest_path else default_manifest_path()).resolve())
    with _registries_lock:
        registry = _registries.get(path)
        if registry is None:
            registry = ModelRegistry(path)
            _registries[path] = registry
        return registry


def load(identifier: str, manifest_path=None) -> Pipeline:
    """Load a pipeline by identifier from a manifest (bundled by default)."""
    return registry_for(manifest_path).load(identifier)

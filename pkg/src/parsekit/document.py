"""Annotation container and wire formats.

A :class:`Document` holds tokenized sentences plus per-task annotation rows
keyed by short task names (``tok``, ``lem``, ``pos``, ``ner``, ``srl``,
``dep``, ``sdp``, ``con``, ``amr``, ``dcr``).  All values are immutable after
construction and validated against the structural invariants below, so a
Document can be shared freely across threads.

The JSON wire format emitted by :func:`doc_to_json` is the single exchange
format used by the native pipeline, the REST server and the CLI:

* spans are 4-element arrays ``[label, start, end, form]`` with an exclusive
  ``end`` and ``form`` equal to the space-joined covered tokens,
* dependency arcs are 2-element arrays ``[head, relation]`` where ``head``
  is a token offset and ``-1`` denotes the artificial root,
* constituency trees are nested lists ``[label, [child, ...]]`` with bare
  strings as terminals,
* AMR graphs are lists of ``[source, relation, target]`` triples,
* coreference clusters are lists of ``[sentence, start, end, text]``.

Converters to the conventional bracketed-tree and Penman notations live here
as well, together with their inverses.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, fields

TOK = "tok"
LEM = "lem"
POS = "pos"
NER = "ner"
SRL = "srl"
DEP = "dep"
SDP = "sdp"
CON = "con"
AMR = "amr"
DCR = "dcr"

#: Fixed key order of the wire format; also the canonical task order.
TASK_ORDER = (TOK, LEM, POS, NER, SRL, DEP, SDP, CON, AMR, DCR)

ROOT_HEAD = -1
INSTANCE = "instance"


class DocumentError(ValueError):
    """A document (or serialized document) violates a structural invariant."""


class PenmanError(ValueError):
    """An AMR triple list or Penman string cannot be (de)serialized."""


@dataclass(frozen=True, slots=True)
class EntitySpan:
    """A labeled token span; ``end`` is exclusive, ``form`` the joined tokens."""

    label: str
    start: int
    end: int
    form: str


@dataclass(frozen=True, slots=True)
class DepArc:
    """One dependency arc: token offset of the head (-1 = root) and relation."""

    head: int
    relation: str


@dataclass(frozen=True, slots=True)
class Constituent:
    """A non-terminal tree node; terminals are plain strings in ``children``."""

    label: str
    children: tuple["ConNode", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


ConNode = Constituent | str


@dataclass(frozen=True, slots=True)
class AmrTriple:
    """A ``(source, relation, target)`` triple of a meaning graph."""

    source: str
    relation: str
    target: str


@dataclass(frozen=True, slots=True)
class CorefMention:
    """One mention of a coreference cluster, addressed by sentence and span."""

    sentence: int
    start: int
    end: int
    text: str


def _deep_tuple(value):
    if isinstance(value, list):
        return tuple(_deep_tuple(v) for v in value)
    return value


@dataclass(frozen=True)
class Document:
    """Per-request annotation container.

    ``tok`` is always present; every other per-sentence field, when set, is
    parallel to ``tok``.  ``dcr`` is document-level: a tuple of clusters,
    each a tuple of :class:`CorefMention`.  Construction validates all
    invariants and raises :class:`DocumentError` naming the offending task
    and sentence.
    """

    tok: tuple[tuple[str, ...], ...] = ()
    lem: tuple[tuple[str, ...], ...] | None = None
    pos: tuple[tuple[str, ...], ...] | None = None
    ner: tuple[tuple[EntitySpan, ...], ...] | None = None
    srl: tuple[tuple[tuple[EntitySpan, ...], ...], ...] | None = None
    dep: tuple[tuple[DepArc, ...], ...] | None = None
    sdp: tuple[tuple[tuple[DepArc, ...], ...], ...] | None = None
    con: tuple[ConNode, ...] | None = None
    amr: tuple[tuple[AmrTriple, ...], ...] | None = None
    dcr: tuple[tuple[CorefMention, ...], ...] | None = None

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, _deep_tuple(getattr(self, f.name)))
        self.validate()

    def __getitem__(self, task: str):
        if task not in TASK_ORDER:
            raise KeyError(task)
        value = getattr(self, task)
        if value is None:
            raise KeyError(task)
        return value

    def get(self, task: str, default=None):
        try:
            return self[task]
        except KeyError:
            return default

    def tasks(self) -> tuple[str, ...]:
        """Task keys present in this document, in canonical order."""
        return tuple(t for t in TASK_ORDER if getattr(self, t) is not None)

    @property
    def num_sentences(self) -> int:
        return len(self.tok)

    def validate(self) -> None:
        nsent = len(self.tok)
        for i, sent in enumerate(self.tok):
            for t in sent:
                if not isinstance(t, str):
                    raise DocumentError(f"tok[{i}]: tokens must be strings, got {t!r}")

        for task in (LEM, POS, NER, SRL, DEP, SDP, CON, AMR):
            rows = getattr(self, task)
            if rows is not None and len(rows) != nsent:
                raise DocumentError(
                    f"{task}: {len(rows)} rows for {nsent} sentences"
                )

        for task in (LEM, POS):
            rows = getattr(self, task)
            if rows is None:
                continue
            for i, row in enumerate(rows):
                if len(row) != len(self.tok[i]):
                    raise DocumentError(
                        f"{task}[{i}]: {len(row)} values for {len(self.tok[i])} tokens"
                    )

        if self.ner is not None:
            for i, spans in enumerate(self.ner):
                for span in spans:
                    self._check_span(NER, i, span)
        if self.srl is not None:
            for i, frames in enumerate(self.srl):
                for frame in frames:
                    for span in frame:
                        self._check_span(SRL, i, span)

        if self.dep is not None:
            for i, arcs in enumerate(self.dep):
                self._check_arcs(DEP, i, arcs)
        if self.sdp is not None:
            for i, per_token in enumerate(self.sdp):
                if len(per_token) != len(self.tok[i]):
                    raise DocumentError(
                        f"sdp[{i}]: {len(per_token)} arc lists for "
                        f"{len(self.tok[i])} tokens"
                    )
                for arcs in per_token:
                    for arc in arcs:
                        self._check_arc(SDP, i, None, arc, len(self.tok[i]))

        if self.con is not None:
            for i, tree in enumerate(self.con):
                _check_tree(tree, f"con[{i}]")
                leaves = tuple(iter_leaves(tree))
                if leaves != self.tok[i]:
                    raise DocumentError(
                        f"con[{i}]: leaves {leaves!r} do not spell the sentence"
                    )

        if self.amr is not None:
            for i, triples in enumerate(self.amr):
                try:
                    _instance_map(triples)
                except PenmanError as e:
                    raise DocumentError(f"amr[{i}]: {e}") from e

        if self.dcr is not None:
            for c, cluster in enumerate(self.dcr):
                for m in cluster:
                    if not 0 <= m.sentence < nsent:
                        raise DocumentError(
                            f"dcr[{c}]: sentence index {m.sentence} out of range"
                        )
                    sent = self.tok[m.sentence]
                    if not 0 <= m.start < m.end <= len(sent):
                        raise DocumentError(
                            f"dcr[{c}]: bad span ({m.start}, {m.end}) in "
                            f"sentence {m.sentence}"
                        )
                    text = " ".join(sent[m.start : m.end])
                    if m.text != text:
                        raise DocumentError(
                            f"dcr[{c}]: text {m.text!r} != tokens {text!r}"
                        )

    def _check_span(self, task: str, i: int, span: EntitySpan) -> None:
        sent = self.tok[i]
        if not 0 <= span.start < span.end <= len(sent):
            raise DocumentError(
                f"{task}[{i}]: bad span ({span.start}, {span.end}) for "
                f"{len(sent)} tokens"
            )
        form = " ".join(sent[span.start : span.end])
        if span.form != form:
            raise DocumentError(
                f"{task}[{i}]: form {span.form!r} != tokens {form!r}"
            )

    def _check_arcs(self, task: str, i: int, arcs) -> None:
        n = len(self.tok[i])
        if len(arcs) != n:
            raise DocumentError(f"{task}[{i}]: {len(arcs)} arcs for {n} tokens")
        for d, arc in enumerate(arcs):
            self._check_arc(task, i, d, arc, n)

    def _check_arc(self, task: str, i: int, d: int | None, arc: DepArc, n: int) -> None:
        if not ROOT_HEAD <= arc.head < n:
            raise DocumentError(f"{task}[{i}]: head {arc.head} out of range")
        if d is not None and arc.head == d:
            raise DocumentError(f"{task}[{i}]: token {d} is its own head")


def _check_tree(node: ConNode, where: str) -> None:
    if isinstance(node, str):
        return
    if not isinstance(node, Constituent):
        raise DocumentError(f"{where}: not a tree node: {node!r}")
    if not node.children:
        raise DocumentError(f"{where}: constituent {node.label!r} has no children")
    for child in node.children:
        _check_tree(child, where)


def iter_leaves(node: ConNode):
    """Yield terminal forms of a tree left to right."""
    if isinstance(node, str):
        yield node
    else:
        for child in node.children:
            yield from iter_leaves(child)


# ---------------------------------------------------------------------------
# JSON wire format


def doc_to_json(doc: Document, indent: int | None = None) -> str:
    """Serialize a document to its canonical JSON form.

    Keys appear in the fixed order of :data:`TASK_ORDER` so output bytes are
    stable for identical documents.
    """
    data: dict = {TOK: [list(s) for s in doc.tok]}
    if doc.lem is not None:
        data[LEM] = [list(row) for row in doc.lem]
    if doc.pos is not None:
        data[POS] = [list(row) for row in doc.pos]
    if doc.ner is not None:
        data[NER] = [[_span_out(s) for s in row] for row in doc.ner]
    if doc.srl is not None:
        data[SRL] = [
            [[_span_out(s) for s in frame] for frame in row] for row in doc.srl
        ]
    if doc.dep is not None:
        data[DEP] = [[[a.head, a.relation] for a in row] for row in doc.dep]
    if doc.sdp is not None:
        data[SDP] = [
            [[[a.head, a.relation] for a in arcs] for arcs in row] for row in doc.sdp
        ]
    if doc.con is not None:
        data[CON] = [con_to_jsonish(tree) for tree in doc.con]
    if doc.amr is not None:
        data[AMR] = [[[t.source, t.relation, t.target] for t in row] for row in doc.amr]
    if doc.dcr is not None:
        data[DCR] = [
            [[m.sentence, m.start, m.end, m.text] for m in cluster]
            for cluster in doc.dcr
        ]
    return json.dumps(data, ensure_ascii=False, indent=indent)


def _span_out(span: EntitySpan) -> list:
    return [span.label, span.start, span.end, span.form]


def _span_in(task: str, i: int, obj) -> EntitySpan:
    if (
        not isinstance(obj, list)
        or len(obj) != 4
        or not isinstance(obj[0], str)
        or not isinstance(obj[1], int)
        or not isinstance(obj[2], int)
        or not isinstance(obj[3], str)
    ):
        raise DocumentError(f"{task}[{i}]: span must be [label, start, end, form], got {obj!r}")
    return EntitySpan(obj[0], obj[1], obj[2], obj[3])


def _arc_in(task: str, i: int, obj) -> DepArc:
    if (
        not isinstance(obj, list)
        or len(obj) != 2
        or not isinstance(obj[0], int)
        or not isinstance(obj[1], str)
    ):
        raise DocumentError(f"{task}[{i}]: arc must be [head, relation], got {obj!r}")
    return DepArc(obj[0], obj[1])


def doc_from_json(text: str) -> Document:
    """Parse the canonical JSON form back into a validated :class:`Document`."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentError(f"not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise DocumentError("top level must be a JSON object")
    unknown = set(data) - set(TASK_ORDER)
    if unknown:
        raise DocumentError(
            f"unknown task keys {sorted(unknown)}; expected a subset of {list(TASK_ORDER)}"
        )
    if TOK not in data:
        raise DocumentError("missing required key 'tok'")

    kwargs: dict = {TOK: _str_rows(TOK, data[TOK])}
    if LEM in data:
        kwargs[LEM] = _str_rows(LEM, data[LEM])
    if POS in data:
        kwargs[POS] = _str_rows(POS, data[POS])
    if NER in data:
        kwargs[NER] = [
            [_span_in(NER, i, s) for s in _row_list(NER, i, row)]
            for i, row in enumerate(_rows(NER, data[NER]))
        ]
    if SRL in data:
        kwargs[SRL] = [
            [
                [_span_in(SRL, i, s) for s in _row_list(SRL, i, frame)]
                for frame in _row_list(SRL, i, row)
            ]
            for i, row in enumerate(_rows(SRL, data[SRL]))
        ]
    if DEP in data:
        kwargs[DEP] = [
            [_arc_in(DEP, i, a) for a in _row_list(DEP, i, row)]
            for i, row in enumerate(_rows(DEP, data[DEP]))
        ]
    if SDP in data:
        kwargs[SDP] = [
            [
                [_arc_in(SDP, i, a) for a in _row_list(SDP, i, arcs)]
                for arcs in _row_list(SDP, i, row)
            ]
            for i, row in enumerate(_rows(SDP, data[SDP]))
        ]
    if CON in data:
        kwargs[CON] = [
            con_from_jsonish(tree, where=f"con[{i}]")
            for i, tree in enumerate(_rows(CON, data[CON]))
        ]
    if AMR in data:
        kwargs[AMR] = [
            [_triple_in(i, t) for t in _row_list(AMR, i, row)]
            for i, row in enumerate(_rows(AMR, data[AMR]))
        ]
    if DCR in data:
        kwargs[DCR] = [
            [_mention_in(c, m) for m in _row_list(DCR, c, cluster)]
            for c, cluster in enumerate(_rows(DCR, data[DCR]))
        ]
    return Document(**kwargs)


def _rows(task: str, obj) -> list:
    if not isinstance(obj, list):
        raise DocumentError(f"{task}: expected a list of rows, got {type(obj).__name__}")
    return obj


def _row_list(task: str, i: int, obj) -> list:
    if not isinstance(obj, list):
        raise DocumentError(f"{task}[{i}]: expected a list, got {type(obj).__name__}")
    return obj


def _str_rows(task: str, obj) -> list:
    rows = _rows(task, obj)
    for i, row in enumerate(rows):
        items = _row_list(task, i, row)
        for v in items:
            if not isinstance(v, str):
                raise DocumentError(f"{task}[{i}]: expected strings, got {v!r}")
    return rows


def _triple_in(i: int, obj) -> AmrTriple:
    if not isinstance(obj, list) or len(obj) != 3 or not all(isinstance(v, str) for v in obj):
        raise DocumentError(
            f"amr[{i}]: triple must be [source, relation, target], got {obj!r}"
        )
    return AmrTriple(obj[0], obj[1], obj[2])


def _mention_in(c: int, obj) -> CorefMention:
    if (
        not isinstance(obj, list)
        or len(obj) != 4
        or not isinstance(obj[0], int)
        or not isinstance(obj[1], int)
        or not isinstance(obj[2], int)
        or not isinstance(obj[3], str)
    ):
        raise DocumentError(
            f"dcr[{c}]: mention must be [sentence, start, end, text], got {obj!r}"
        )
    return CorefMention(obj[0], obj[1], obj[2], obj[3])


# ---------------------------------------------------------------------------
# Constituency trees: nested lists <-> bracketed notation


def con_to_jsonish(node: ConNode):
    """Convert a tree to the nested-list shape used in the wire format."""
    if isinstance(node, str):
        return node
    return [node.label, [con_to_jsonish(child) for child in node.children]]


def con_from_jsonish(obj, where: str = "con") -> ConNode:
    """Inverse of :func:`con_to_jsonish`; rejects malformed nodes."""
    if isinstance(obj, str):
        return obj
    if (
        not isinstance(obj, (list, tuple))
        or len(obj) != 2
        or not isinstance(obj[0], str)
        or not isinstance(obj[1], (list, tuple))
        or not obj[1]
    ):
        raise DocumentError(
            f"{where}: constituent must be [label, [child, ...]], got {obj!r}"
        )
    return Constituent(obj[0], tuple(con_from_jsonish(c, where) for c in obj[1]))


def con_to_bracketed(node: ConNode) -> str:
    """Render a tree in conventional bracketed notation, e.g. ``(S (NP a))``."""
    if isinstance(node, str):
        return node
    inner = " ".join(con_to_bracketed(child) for child in node.children)
    return f"({node.label} {inner})"


_BRACKET_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def bracketed_to_con(text: str) -> ConNode:
    """Parse bracketed notation back into a tree; rejects unbalanced input."""
    tokens = _BRACKET_TOKEN.findall(text)
    if not tokens:
        raise DocumentError("empty bracketed tree")
    node, pos = _parse_bracketed(tokens, 0)
    if pos != len(tokens):
        raise DocumentError(f"trailing content after tree: {tokens[pos:]}")
    return node


def _parse_bracketed(tokens: list[str], pos: int) -> tuple[ConNode, int]:
    tok = tokens[pos]
    if tok == ")":
        raise DocumentError("unexpected ')'")
    if tok != "(":
        return tok, pos + 1
    pos += 1
    if pos >= len(tokens) or tokens[pos] in "()":
        raise DocumentError("expected a label after '('")
    label = tokens[pos]
    pos += 1
    children: list[ConNode] = []
    while True:
        if pos >= len(tokens):
            raise DocumentError("unbalanced brackets: missing ')'")
        if tokens[pos] == ")":
            if not children:
                raise DocumentError(f"constituent {label!r} has no children")
            return Constituent(label, tuple(children)), pos + 1
        child, pos = _parse_bracketed(tokens, pos)
        children.append(child)


# ---------------------------------------------------------------------------
# AMR triples <-> Penman notation


def _instance_map(triples) -> dict[str, str]:
    instances: dict[str, str] = {}
    for t in triples:
        if t.relation == INSTANCE:
            if t.source in instances:
                raise PenmanError(f"duplicate instance triple for {t.source!r}")
            instances[t.source] = t.target
    for t in triples:
        if t.source not in instances:
            raise PenmanError(f"variable {t.source!r} has no instance triple")
    return instances


_BARE_ATOM = re.compile(r"[^\s()/:\"]+\Z")


def _atom(value: str) -> str:
    if _BARE_ATOM.match(value):
        return value
    escaped = value.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def amr_to_penman(triples) -> str:
    """Serialize triples to Penman notation rooted at the first source.

    Each variable is expanded ``(var / concept ...)`` at its first mention;
    later mentions are bare references.  Constants containing spaces or
    reserved characters are double-quoted.
    """
    triples = tuple(triples)
    if not triples:
        raise PenmanError("cannot serialize an empty triple list")
    instances = _instance_map(triples)
    edges: dict[str, list[tuple[str, str]]] = {}
    for t in triples:
        if t.relation != INSTANCE:
            edges.setdefault(t.source, []).append((t.relation, t.target))

    expanded: set[str] = set()

    def emit(var: str) -> str:
        expanded.add(var)
        parts = [f"({var} / {_atom(instances[var])}"]
        for rel, target in edges.get(var, ()):
            if target in instances and target not in expanded:
                rendered = emit(target)
            elif target in instances:
                rendered = target
            else:
                rendered = _atom(target)
            parts.append(f":{rel} {rendered}")
        return " ".join(parts) + ")"

    text = emit(triples[0].source)
    unreachable = set(instances) - expanded
    if unreachable:
        raise PenmanError(
            f"nodes unreachable from root {triples[0].source!r}: {sorted(unreachable)}"
        )
    return text


_PENMAN_TOKEN = re.compile(
    r"""\( | \) | / | :[^\s()/:]+ | "(?:[^"\\]|\\.)*" | [^\s()/:"]+""",
    re.VERBOSE,
)


def _penman_tokens(text: str) -> list[str]:
    tokens: list[str] = []
    pos = 0
    for m in _PENMAN_TOKEN.finditer(text):
        gap = text[pos : m.start()]
        if gap.strip():
            raise PenmanError(f"unexpected characters {gap.strip()!r}")
        tokens.append(m.group())
        pos = m.end()
    if text[pos:].strip():
        raise PenmanError(f"unexpected characters {text[pos:].strip()!r}")
    return tokens


def penman_to_amr(text: str) -> list[AmrTriple]:
    """Parse Penman notation into triples (inverse of :func:`amr_to_penman`).

    Triples come out in pre-order: each node's instance triple first, then
    each outgoing edge followed by the triples of the nested node, if any.
    """
    tokens = _penman_tokens(text)
    if not tokens:
        raise PenmanError("empty Penman text")
    triples: list[AmrTriple] = []
    seen: set[str] = set()
    pos = _parse_penman_node(tokens, 0, triples, seen)[1]
    if pos != len(tokens):
        raise PenmanError(f"trailing content after graph: {tokens[pos:]}")
    return triples


def _unquote(tok: str) -> str:
    if tok.startswith('"'):
        return re.sub(r"\\(.)", r"\1", tok[1:-1])
    return tok


def _is_atom(tok: str) -> bool:
    return tok not in ("(", ")", "/") and not tok.startswith(":")


def _parse_penman_node(tokens, pos, triples, seen) -> tuple[str, int]:
    if tokens[pos] != "(":
        raise PenmanError(f"expected '(', got {tokens[pos]!r}")
    pos += 1
    if pos >= len(tokens) or not _is_atom(tokens[pos]) or tokens[pos].startswith('"'):
        raise PenmanError("expected a variable after '('")
    var = tokens[pos]
    if var in seen:
        raise PenmanError(f"duplicate instance triple for {var!r}")
    seen.add(var)
    pos += 1
    if pos >= len(tokens) or tokens[pos] != "/":
        raise PenmanError(f"expected '/' after variable {var!r}")
    pos += 1
    if pos >= len(tokens) or not _is_atom(tokens[pos]):
        raise PenmanError(f"expected a concept for {var!r}")
    triples.append(AmrTriple(var, INSTANCE, _unquote(tokens[pos])))
    pos += 1
    while pos < len(tokens) and tokens[pos] != ")":
        tok = tokens[pos]
        if not tok.startswith(":"):
            raise PenmanError(f"expected a relation, got {tok!r}")
        rel = tok[1:]
        pos += 1
        if pos >= len(tokens):
            raise PenmanError(f"relation :{rel} has no target")
        if tokens[pos] == "(":
            mark = len(triples)
            target, pos = _parse_penman_node(tokens, pos, triples, seen)
            triples.insert(mark, AmrTriple(var, rel, target))
        elif _is_atom(tokens[pos]):
            triples.append(AmrTriple(var, rel, _unquote(tokens[pos])))
            pos += 1
        else:
            raise PenmanError(f"relation :{rel} has no target")
    if pos >= len(tokens):
        raise PenmanError("unbalanced parentheses: missing ')'")
    return var, pos + 1

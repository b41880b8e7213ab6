"""Task decoders: turn score arrays into annotation structures.

Every decoder is deterministic, including tie handling: score ties resolve
to the lowest index, so identical scores always produce identical output.

* Tagging tasks pick an argmax label per token.
* Lemmatization is tagging over an inventory of edit scripts; a script
  rewrites a form's affixes and is shared by all regular form/lemma pairs
  (one ``-s``-stripping script covers most plurals, for example).
* Named entities come from scored spans, kept greedily without overlap.
* Dependency trees are the maximum spanning arborescence of dense arc
  scores, constrained to exactly one child of the artificial root.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .document import DepArc, EntitySpan

NULL_LABEL = "O"


class DecoderError(ValueError):
    """Decoder inputs have inconsistent shapes or unusable values."""


# ---------------------------------------------------------------------------
# Edit-script lemmatization


@dataclass(frozen=True, slots=True)
class EditScript:
    """An affix rewrite mapping an inflected form to its lemma.

    Applied left to right: optionally lowercase, drop ``prefix_del``
    characters from the front and ``suffix_del`` from the back, then insert
    ``prefix_ins`` and ``suffix_ins`` at the respective ends.
    """

    lowercase: bool = False
    prefix_del: int = 0
    prefix_ins: str = ""
    suffix_del: int = 0
    suffix_ins: str = ""

    def apply(self, form: str) -> str | None:
        """Rewrite ``form``, or return None when the deletions do not fit."""
        base = form.lower() if self.lowercase else form
        if self.prefix_del + self.suffix_del > len(base):
            return None
        core = base[self.prefix_del : len(base) - self.suffix_del]
        return self.prefix_ins + core + self.suffix_ins


IDENTITY_SCRIPT = EditScript()
LOWERCASE_SCRIPT = EditScript(lowercase=True)


def _longest_common_substring(a: str, b: str) -> tuple[int, int, int]:
    """Return (start_a, start_b, length) of the first longest common run."""
    best = (0, 0, 0)
    if not a or not b:
        return best
    prev = np.zeros(len(b) + 1, dtype=np.int64)
    for i, ca in enumerate(a):
        cur = np.zeros(len(b) + 1, dtype=np.int64)
        for j, cb in enumerate(b):
            if ca == cb:
                run = prev[j] + 1
                cur[j + 1] = run
                if run > best[2]:
                    best = (i - run + 1, j - run + 1, int(run))
        prev = cur
    return best


def derive_script(form: str, lemma: str) -> EditScript:
    """Find the cheapest edit script mapping ``form`` to ``lemma``.

    The longest common substring of form and lemma is kept as an anchor and
    the flanks are rewritten; cost is the number of characters deleted plus
    inserted.  Lowercasing first is used only when it strictly reduces cost,
    so case-insensitive pairs stay caseless and everything else is literal.
    """
    best: EditScript | None = None
    best_cost = -1
    for lowercase in (False, True):
        base = form.lower() if lowercase else form
        i, j, length = (int(v) for v in _longest_common_substring(base, lemma))
        script = EditScript(
            lowercase=lowercase,
            prefix_del=i,
            prefix_ins=lemma[:j],
            suffix_del=len(base) - (i + length),
            suffix_ins=lemma[j + length :],
        )
        cost = script.prefix_del + len(script.prefix_ins)
        cost += script.suffix_del + len(script.suffix_ins)
        if best is None or cost < best_cost:
            best, best_cost = script, cost
    assert best is not None
    return best


def build_script_inventory(pairs) -> tuple[EditScript, ...]:
    """Collect the unique scripts covering (form, lemma) pairs.

    The identity and bare-lowercase scripts always occupy the first two
    slots so unknown forms have safe fallbacks.
    """
    inventory: dict[EditScript, None] = {IDENTITY_SCRIPT: None, LOWERCASE_SCRIPT: None}
    for form, lemma in pairs:
        inventory.setdefault(derive_script(form, lemma), None)
    return tuple(inventory)


def decode_lemmas(tokens, scores, inventory) -> tuple[str, ...]:
    """Lemmatize tokens by applying each token's best applicable script.

    ``scores`` has shape (tokens, len(inventory)); scripts are tried in
    descending score order until one fits the form.  A form no script fits
    is returned unchanged.
    """
    tokens = tuple(tokens)
    scores = np.asarray(scores)
    if scores.shape != (len(tokens), len(inventory)):
        raise DecoderError(
            f"scores shape {scores.shape} != ({len(tokens)}, {len(inventory)})"
        )
    lemmas = []
    for t, form in enumerate(tokens):
        lemma = form
        for s in np.argsort(-scores[t], kind="stable"):
            result = inventory[s].apply(form)
            if result is not None:
                lemma = result
                break
        lemmas.append(lemma)
    return tuple(lemmas)


# ---------------------------------------------------------------------------
# Tagging


def decode_tags(scores, labels) -> tuple[str, ...]:
    """Pick the argmax label for each row of a (tokens, labels) score array."""
    scores = np.asarray(scores)
    if scores.ndim != 2 or scores.shape[1] != len(labels):
        raise DecoderError(
            f"scores shape {scores.shape} incompatible with {len(labels)} labels"
        )
    return tuple(labels[i] for i in np.argmax(scores, axis=1))


# ---------------------------------------------------------------------------
# Span labeling


def decode_spans(tokens, scores, labels, null_label: str = NULL_LABEL) -> tuple[EntitySpan, ...]:
    """Select non-overlapping labeled spans from dense span scores.

    ``scores[s, e]`` scores the half-open span ``[s, e)`` against every
    label, with shape (tokens, tokens + 1, labels).  A span is a candidate
    when its best label both beats the null label and is not itself null;
    candidates are accepted in descending score order, skipping overlaps,
    and returned sorted by position.
    """
    tokens = tuple(tokens)
    scores = np.asarray(scores)
    n = len(tokens)
    if scores.shape != (n, n + 1, len(labels)):
        raise DecoderError(
            f"scores shape {scores.shape} != ({n}, {n + 1}, {len(labels)})"
        )
    try:
        null_index = labels.index(null_label)
    except ValueError:
        raise DecoderError(f"labels must include the null label {null_label!r}")

    candidates = []
    for start in range(n):
        for end in range(start + 1, n + 1):
            row = scores[start, end]
            best = int(np.argmax(row))
            if best == null_index or row[best] <= row[null_index]:
                continue
            candidates.append((-float(row[best]), start, end, best))
    candidates.sort()

    chosen: list[EntitySpan] = []
    occupied: list[tuple[int, int]] = []
    for _, start, end, label_index in candidates:
        if any(start < e and s < end for s, e in occupied):
            continue
        occupied.append((start, end))
        chosen.append(
            EntitySpan(labels[label_index], start, end, " ".join(tokens[start:end]))
        )
    chosen.sort(key=lambda sp: (sp.start, sp.end))
    return tuple(chosen)


# ---------------------------------------------------------------------------
# Maximum spanning arborescence


def _greedy_heads(scores: np.ndarray) -> np.ndarray:
    heads = np.zeros(scores.shape[0], dtype=np.int64)
    heads[1:] = np.argmax(scores[:, 1:], axis=0)
    return heads


def _find_cycle(heads: np.ndarray) -> list[int] | None:
    k = heads.shape[0]
    color = np.zeros(k, dtype=np.int64)
    for start in range(1, k):
        if color[start]:
            continue
        path = []
        node = start
        while node != 0 and color[node] == 0:
            color[node] = 1
            path.append(node)
            node = int(heads[node])
        if node != 0 and color[node] == 1:
            return path[path.index(node) :]
        for visited in path:
            color[visited] = 2
    return None


def _cle(scores: np.ndarray) -> np.ndarray:
    """Unconstrained maximum arborescence; ``scores[h, d]``, node 0 is root."""
    heads = _greedy_heads(scores)
    cycle = _find_cycle(heads)
    if cycle is None:
        return heads

    cycle_arr = np.asarray(cycle, dtype=np.int64)
    in_cycle = np.zeros(scores.shape[0], dtype=bool)
    in_cycle[cycle_arr] = True
    rest = np.flatnonzero(~in_cycle)
    m = rest.shape[0] + 1

    contracted = np.full((m, m), -np.inf)
    contracted[: m - 1, : m - 1] = scores[np.ix_(rest, rest)]
    # arcs into the cycle trade the entry node's current cycle arc for the
    # outside arc; the best trade decides the entry point
    gain = scores[np.ix_(rest, cycle_arr)] - scores[heads[cycle_arr], cycle_arr][None, :]
    contracted[: m - 1, m - 1] = gain.max(axis=1)
    entry = cycle_arr[np.argmax(gain, axis=1)]
    out = scores[np.ix_(cycle_arr, rest)]
    contracted[m - 1, : m - 1] = out.max(axis=0)
    source = cycle_arr[np.argmax(out, axis=0)]
    np.fill_diagonal(contracted, -np.inf)
    contracted[:, 0] = -np.inf

    sub = _cle(contracted)

    for j in range(1, m - 1):
        dependent = int(rest[j])
        heads[dependent] = source[j] if sub[j] == m - 1 else rest[sub[j]]
    broken = int(entry[sub[m - 1]])
    heads[broken] = rest[sub[m - 1]]
    return heads


def mst_decode(scores) -> np.ndarray:
    """Best dependency heads under the single-root constraint.

    ``scores`` is a dense (n + 1, n + 1) array where ``scores[h, d]`` scores
    an arc from head ``h`` to dependent ``d`` and index 0 is the artificial
    root; off-diagonal token arcs must be finite.  Returns an array of n
    head indices in node space (0 means root, j >= 1 means token j - 1)
    forming the maximum-score arborescence in which the root has exactly
    one child.
    """
    scores = np.array(scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[0] != scores.shape[1] or scores.shape[0] < 2:
        raise DecoderError(f"scores must be square (n + 1, n + 1), got {scores.shape}")
    if np.isnan(scores).any():
        raise DecoderError("scores must not contain NaN")
    np.fill_diagonal(scores, -np.inf)
    scores[:, 0] = -np.inf

    n = scores.shape[0] - 1
    heads = _cle(scores)
    root_children = np.flatnonzero(heads[1:] == 0) + 1
    if root_children.shape[0] > 1:
        # try every root candidate with the other root arcs masked; masking
        # only the non-best root arc can miss the optimum
        best_heads, best_total = None, -np.inf
        for root in range(1, n + 1):
            masked = scores.copy()
            masked[0, :] = -np.inf
            masked[0, root] = scores[0, root]
            candidate = _cle(masked)
            total = float(masked[candidate[1:], np.arange(1, n + 1)].sum())
            if total > best_total:
                best_heads, best_total = candidate, total
        assert best_heads is not None
        heads = best_heads
    return heads[1:]


def decode_dep(tokens, arc_scores, rel_scores, relations) -> tuple[DepArc, ...]:
    """Decode a labeled dependency tree for one sentence.

    ``arc_scores`` is the (n + 1, n + 1) matrix of :func:`mst_decode`;
    ``rel_scores[h, d]`` scores each relation for the arc head ``h`` (node
    space) to token ``d``, with shape (n + 1, n, relations).  Heads in the
    result are token offsets with -1 for the root.
    """
    tokens = tuple(tokens)
    n = len(tokens)
    rel_scores = np.asarray(rel_scores)
    if rel_scores.shape != (n + 1, n, len(relations)):
        raise DecoderError(
            f"rel_scores shape {rel_scores.shape} != ({n + 1}, {n}, {len(relations)})"
        )
    heads = mst_decode(arc_scores)
    arcs = []
    for d in range(n):
        h = int(heads[d])
        relation = relations[int(np.argmax(rel_scores[h, d]))]
        arcs.append(DepArc(h - 1, relation))
    return tuple(arcs)

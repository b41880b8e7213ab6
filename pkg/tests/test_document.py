import dataclasses
import json

import pytest

from parsekit.document import (
    AmrTriple,
    Constituent,
    CorefMention,
    DepArc,
    Document,
    DocumentError,
    EntitySpan,
    PenmanError,
    TASK_ORDER,
    amr_to_penman,
    bracketed_to_con,
    con_from_jsonish,
    con_to_bracketed,
    con_to_jsonish,
    doc_from_json,
    doc_to_json,
    iter_leaves,
    penman_to_amr,
)

TOKENS = ("Emory", "NLP", "is", "in", "Atlanta")

GOLD_TREE = Constituent(
    "TOP",
    (
        Constituent(
            "S",
            (
                Constituent(
                    "NP",
                    (Constituent("NNP", ("Emory",)), Constituent("NNP", ("NLP",))),
                ),
                Constituent(
                    "VP",
                    (
                        Constituent("VBZ", ("is",)),
                        Constituent(
                            "PP",
                            (
                                Constituent("IN", ("in",)),
                                Constituent("NP", (Constituent("NNP", ("Atlanta",)),)),
                            ),
                        ),
                    ),
                ),
            ),
        ),
    ),
)

GOLD_TRIPLES = (
    AmrTriple("c0", "ARG1", "c1"),
    AmrTriple("c0", "ARG2", "c2"),
    AmrTriple("c0", "instance", "be-located-at-91"),
    AmrTriple("c1", "instance", "emory nlp"),
    AmrTriple("c2", "instance", "atlanta"),
)


def full_document() -> Document:
    return Document(
        tok=(TOKENS, ("It", "is", "founded", "in", "2014")),
        lem=(
            ("emory", "nlp", "be", "in", "atlanta"),
            ("it", "be", "found", "in", "2014"),
        ),
        pos=(("NNP", "NNP", "VBZ", "IN", "NNP"), ("PRP", "VBZ", "VBN", "IN", "CD")),
        ner=(
            (EntitySpan("ORG", 0, 2, "Emory NLP"), EntitySpan("GPE", 4, 5, "Atlanta")),
            (EntitySpan("DATE", 4, 5, "2014"),),
        ),
        srl=(
            (
                (
                    EntitySpan("ARG1", 0, 2, "Emory NLP"),
                    EntitySpan("PRED", 2, 3, "is"),
                    EntitySpan("ARG2", 3, 5, "in Atlanta"),
                ),
            ),
            (),
        ),
        dep=(
            (
                DepArc(1, "com"),
                DepArc(3, "nsbj"),
                DepArc(3, "cop"),
                DepArc(-1, "root"),
                DepArc(3, "obj"),
            ),
            (
                DepArc(2, "nsbj"),
                DepArc(2, "aux"),
                DepArc(-1, "root"),
                DepArc(2, "modifier"),
                DepArc(3, "obj"),
            ),
        ),
        sdp=(
            (((DepArc(1, "com"),),) + ((),) * 4),
            ((),) * 5,
        ),
        con=(GOLD_TREE, Constituent("TOP", (Constituent("S", ("It", "is", "founded", "in", "2014")),))),
        amr=(GOLD_TRIPLES, ()),
        dcr=(
            (CorefMention(0, 0, 2, "Emory NLP"), CorefMention(1, 0, 1, "It")),
        ),
    )


class TestDocument:
    def test_round_trip_all_tasks(self):
        doc = full_document()
        assert doc_from_json(doc_to_json(doc)) == doc

    def test_key_order_is_canonical(self):
        data = json.loads(doc_to_json(full_document()))
        assert list(data) == list(TASK_ORDER)

    def test_serialization_is_deterministic(self):
        assert doc_to_json(full_document()) == doc_to_json(full_document())

    def test_lists_are_coerced_to_tuples(self):
        doc = Document(tok=[["a", "b"]], lem=[["a", "b"]])
        assert doc.tok == (("a", "b"),)
        assert doc.lem == (("a", "b"),)

    def test_documents_are_immutable(self):
        doc = Document(tok=(("a",),))
        with pytest.raises(dataclasses.FrozenInstanceError):
            doc.tok = ()

    def test_getitem_and_tasks(self):
        doc = Document(tok=(("a",),), pos=(("NN",),))
        assert doc["pos"] == (("NN",),)
        assert doc.get("lem") is None
        assert doc.tasks() == ("tok", "pos")
        with pytest.raises(KeyError):
            doc["lem"]
        with pytest.raises(KeyError):
            doc["nope"]

    def test_row_count_mismatch_names_task(self):
        with pytest.raises(DocumentError, match="lem"):
            Document(tok=(("a",), ("b",)), lem=(("a",),))

    def test_token_count_mismatch_names_sentence(self):
        with pytest.raises(DocumentError, match=r"pos\[1\]"):
            Document(tok=(("a",), ("b", "c")), pos=(("NN",), ("NN",)))

    def test_span_bounds_checked(self):
        with pytest.raises(DocumentError, match=r"ner\[0\]"):
            Document(tok=(("a",),), ner=((EntitySpan("ORG", 0, 2, "a"),),))

    def test_span_form_checked(self):
        with pytest.raises(DocumentError, match="form"):
            Document(tok=(("a", "b"),), ner=((EntitySpan("ORG", 0, 2, "a b c"),),))

    def test_arc_head_bounds_checked(self):
        with pytest.raises(DocumentError, match="head"):
            Document(tok=(("a",),), dep=(((DepArc(5, "root")),),))

    def test_self_head_rejected(self):
        with pytest.raises(DocumentError, match="own head"):
            Document(
                tok=(("a", "b"),),
                dep=((DepArc(-1, "root"), DepArc(1, "conj")),),
            )

    def test_tree_leaves_must_spell_sentence(self):
        with pytest.raises(DocumentError, match="leaves"):
            Document(tok=(("a", "b"),), con=(Constituent("S", ("a",)),))

    def test_amr_requires_instances(self):
        with pytest.raises(DocumentError, match="instance"):
            Document(tok=(("a",),), amr=(((AmrTriple("c0", "ARG1", "c1")),),))

    def test_mention_text_checked(self):
        with pytest.raises(DocumentError, match="dcr"):
            Document(tok=(("a", "b"),), dcr=(((CorefMention(0, 0, 1, "b")),),))

    def test_mention_sentence_checked(self):
        with pytest.raises(DocumentError, match="sentence index"):
            Document(tok=(("a",),), dcr=(((CorefMention(3, 0, 1, "a")),),))


class TestDocumentJson:
    def test_missing_tok_rejected(self):
        with pytest.raises(DocumentError, match="tok"):
            doc_from_json('{"pos": []}')

    def test_unknown_key_rejected(self):
        with pytest.raises(DocumentError, match="unknown task keys"):
            doc_from_json('{"tok": [], "wat": []}')

    def test_invalid_json_rejected(self):
        with pytest.raises(DocumentError, match="JSON"):
            doc_from_json("{nope")

    def test_non_object_rejected(self):
        with pytest.raises(DocumentError, match="object"):
            doc_from_json("[1]")

    def test_malformed_span_rejected(self):
        with pytest.raises(DocumentError, match="span"):
            doc_from_json('{"tok": [["a"]], "ner": [[["ORG", 0]]]}')

    def test_malformed_arc_rejected(self):
        with pytest.raises(DocumentError, match="arc"):
            doc_from_json('{"tok": [["a"]], "dep": [[[0]]]}')

    def test_malformed_triple_rejected(self):
        with pytest.raises(DocumentError, match="triple"):
            doc_from_json('{"tok": [["a"]], "amr": [[["c0", "instance"]]]}')

    def test_malformed_mention_rejected(self):
        with pytest.raises(DocumentError, match="mention"):
            doc_from_json('{"tok": [["a"]], "dcr": [[[0, 0, 1]]]}')

    def test_non_string_token_rejected(self):
        with pytest.raises(DocumentError, match="strings"):
            doc_from_json('{"tok": [[1]]}')


class TestConstituencyFormats:
    def test_jsonish_matches_published_nesting(self):
        nested = con_to_jsonish(GOLD_TREE)
        assert nested == [
            "TOP",
            [
                [
                    "S",
                    [
                        ["NP", [["NNP", ["Emory"]], ["NNP", ["NLP"]]]],
                        [
                            "VP",
                            [
                                ["VBZ", ["is"]],
                                [
                                    "PP",
                                    [
                                        ["IN", ["in"]],
                                        ["NP", [["NNP", ["Atlanta"]]]],
                                    ],
                                ],
                            ],
                        ],
                    ],
                ]
            ],
        ]
        assert con_from_jsonish(nested) == GOLD_TREE

    def test_bracketed_round_trip(self):
        text = con_to_bracketed(GOLD_TREE)
        assert text == (
            "(TOP (S (NP (NNP Emory) (NNP NLP)) "
            "(VP (VBZ is) (PP (IN in) (NP (NNP Atlanta))))))"
        )
        assert bracketed_to_con(text) == GOLD_TREE

    def test_leaves(self):
        assert tuple(iter_leaves(GOLD_TREE)) == TOKENS

    @pytest.mark.parametrize(
        "text",
        ["", "(S a", "(S a))", "(S)", "((S) a)", ")", "(S (NP))"],
    )
    def test_malformed_bracketed_rejected(self, text):
        with pytest.raises(DocumentError):
            bracketed_to_con(text)

    def test_malformed_jsonish_rejected(self):
        with pytest.raises(DocumentError):
            con_from_jsonish(["S"])
        with pytest.raises(DocumentError):
            con_from_jsonish(["S", []])
        with pytest.raises(DocumentError):
            con_from_jsonish([3, ["a"]])


class TestPenman:
    def test_serializes_published_graph(self):
        assert amr_to_penman(GOLD_TRIPLES) == (
            '(c0 / be-located-at-91 :ARG1 (c1 / "emory nlp") :ARG2 (c2 / atlanta))'
        )

    def test_round_trip_preserves_triples(self):
        parsed = penman_to_amr(amr_to_penman(GOLD_TRIPLES))
        assert sorted(
            (t.source, t.relation, t.target) for t in parsed
        ) == sorted((t.source, t.relation, t.target) for t in GOLD_TRIPLES)

    def test_preorder_round_trip_is_exact(self):
        triples = (
            AmrTriple("a", "instance", "alpha"),
            AmrTriple("a", "mod", "b"),
            AmrTriple("b", "instance", "two words"),
            AmrTriple("a", "value", "42"),
        )
        assert tuple(penman_to_amr(amr_to_penman(triples))) == triples

    def test_reentrancy_uses_bare_reference(self):
        triples = (
            AmrTriple("a", "instance", "x"),
            AmrTriple("a", "left", "b"),
            AmrTriple("b", "instance", "y"),
            AmrTriple("a", "right", "b"),
        )
        assert amr_to_penman(triples) == "(a / x :left (b / y) :right b)"

    def test_quoting_escapes(self):
        triples = (
            AmrTriple("v", "instance", 'say "hi" \\ bye'),
        )
        text = amr_to_penman(triples)
        assert penman_to_amr(text) == list(triples)

    def test_empty_rejected(self):
        with pytest.raises(PenmanError):
            amr_to_penman(())

    def test_missing_instance_rejected(self):
        with pytest.raises(PenmanError, match="no instance"):
            amr_to_penman((AmrTriple("a", "mod", "b"),))

    def test_duplicate_instance_rejected(self):
        with pytest.raises(PenmanError, match="duplicate"):
            amr_to_penman(
                (AmrTriple("a", "instance", "x"), AmrTriple("a", "instance", "y"))
            )

    def test_unreachable_node_rejected(self):
        with pytest.raises(PenmanError, match="unreachable"):
            amr_to_penman(
                (AmrTriple("a", "instance", "x"), AmrTriple("b", "instance", "y"))
            )

    @pytest.mark.parametrize(
        "text",
        ["", "(a / )", "(a b c)", "(a / x :rel)", "(a / x", "a / x)", "(a / x) junk",
         "(a / x :rel :rel2 b)", "(a / x @ b)"],
    )
    def test_malformed_penman_rejected(self, text):
        with pytest.raises(PenmanError):
            penman_to_amr(text)

import pytest

from grammarlab.errors import ConstraintUnsatisfiable, GrammarFormatError, MalformedTree, ParseError
from grammarlab.grammar import (
    ANY,
    CENTER_EMBEDDED,
    Branching,
    TaskKind,
    VerbLexeme,
    load_grammar,
    parse_grammar_text,
    parse_shape_sexpr,
    sentence,
    shape_of,
    shape_sexpr,
)
from grammarlab.rng import stream

from conftest import QF, TI, qf_tree, ti_tree


def test_inventory_is_exactly_72(grammar):
    vocab = grammar.vocab()
    assert len(vocab) == 72
    assert len(set(vocab)) == 72
    assert vocab[0] == "<pad>"
    assert vocab[1:] == sorted(vocab[1:])
    for tok in (".", "?", "decl", "quest", "PAST", "PRESENT"):
        assert tok in vocab


def test_sampling_is_deterministic(grammar):
    for task in (QF, TI):
        a = [sentence(grammar.sample_tree(ANY, stream(9, "t", i), task=task)) for i in range(50)]
        b = [sentence(grammar.sample_tree(ANY, stream(9, "t", i), task=task)) for i in range(50)]
        assert a == b


@pytest.mark.parametrize("constraint", list(Branching))
@pytest.mark.parametrize("task", [QF, TI])
def test_classify_matches_constraint(grammar, task, constraint):
    for i in range(500):
        tree = grammar.sample_tree(constraint, stream(3, task.value, constraint.value, i), task=task)
        assert grammar.classify(tree) is constraint


def test_center_embedded_constraint_covers_both_subtypes(grammar):
    seen = set()
    for i in range(200):
        tree = grammar.sample_tree(CENTER_EMBEDDED, stream(5, i), task=QF)
        seen.add(grammar.classify(tree))
    assert seen == {Branching.CE_SUBJECT, Branching.CE_OBJECT}


def test_classify_examples(grammar):
    assert grammar.classify(ti_tree(grammar, "my zebra behind the peacock smiled .")) \
        is Branching.RIGHT_BRANCHING
    # subject-type: the head acts as subject inside its clause
    assert grammar.classify(ti_tree(grammar, "the dogs that unlocked the rabbit waited .")) \
        is Branching.CE_SUBJECT
    # object-type: the head acts as object inside its clause
    assert grammar.classify(ti_tree(grammar, "the dogs that the bear unlocked waited .")) \
        is Branching.CE_OBJECT


def test_number_agreement_everywhere(grammar):
    # every auxiliary agrees with the noun its clause is governed by
    for i in range(800):
        tree = grammar.sample_tree(ANY, stream(11, i), task=QF, degree=2)
        subj = tree.children[0]
        subj_number = grammar.noun_number(subj.children[1].word)
        main_aux = tree.children[1].children[0]
        assert grammar.aux_number(main_aux.word) == subj_number
        _check_np_agreement(grammar, subj)
        for child in tree.children[1].children:
            if not child.is_leaf:
                _check_np_agreement(grammar, child)


def _check_np_agreement(grammar, np):
    number = grammar.noun_number(np.children[1].word)
    for post in np.children[2:]:
        if post.label == "PP":
            continue
        rest = post.children[1:]
        if rest[0].label.startswith("NP"):      # object gap: aux agrees with inner NP
            inner = rest[0]
            governed = grammar.noun_number(inner.children[1].word)
            _check_np_agreement(grammar, inner)
            rest = rest[1:]
        else:                                   # subject gap: aux agrees with the head
            governed = number
        for node in rest:
            if node.label == "AUX":
                assert grammar.aux_number(node.word) == governed
            elif not node.is_leaf:
                _check_np_agreement(grammar, node)


def test_shape_of_strips_words_only(grammar):
    tree = qf_tree(grammar, "my unicorn who doesn't sing does move .")
    shape = shape_of(tree)
    assert shape.size() == sum(1 for _ in _nodes(tree))
    again = qf_tree(grammar, "your zebra that does wait doesn't laugh .")
    assert shape_of(again) == shape


def _nodes(tree):
    yield tree
    for c in tree.children:
        yield from _nodes(c)


def test_vocabulary_variants_share_shape(grammar):
    # same structure, different words (and numbers): identical shapes
    a = ti_tree(grammar, "my unicorn amused her rabbit .")
    b = ti_tree(grammar, "your zebra admired some dogs .")
    assert shape_of(a) == shape_of(b)
    assert shape_of(a) == shape_of(a)


def test_all_enumerated_shapes_pairwise_distinct(grammar):
    # brute-force enumeration: different attachment => different shape
    for task in ("qf", "ti"):
        shapes = grammar.structures(task, ANY, degree=2)
        sexprs = [shape_sexpr(s) for s in shapes]
        assert len(set(sexprs)) == len(sexprs)
        roundtrip = [parse_shape_sexpr(t) for t in sexprs]
        assert list(shapes) == roundtrip


def test_structure_counts(grammar):
    assert len(grammar.structures("qf", ANY, 1)) == 20
    assert len(grammar.structures("qf", CENTER_EMBEDDED, 1)) == 9
    assert len(grammar.structures("qf", CENTER_EMBEDDED, 2)) == 154
    assert len(grammar.structures("ti", ANY, 2)) == 182


def test_degree1_budget(grammar):
    # at most one relative clause and one PP among main-clause NPs
    for shape in grammar.structures("qf", ANY, 1):
        subj = shape.children[0]
        obj = next((c for c in shape.children[1].children if c.label.startswith("NP")), None)
        rc = sum(any(k.label.startswith("RC") for k in np.children[2:])
                 for np in (subj, obj) if np is not None)
        pp = sum(any(k.label == "PP" for k in np.children[2:])
                 for np in (subj, obj) if np is not None)
        assert rc <= 1 and pp <= 1


def test_resample_preserves_shape_and_varies_words(grammar):
    tree = grammar.sample_tree(CENTER_EMBEDDED, stream(21, 0), task=QF)
    shape = shape_of(tree)
    sentences = set()
    rng = stream(21, "resample")
    for _ in range(1000):
        again = grammar.resample_leaves(tree, rng)
        assert shape_of(again) == shape
        sentences.add(sentence(again))
    assert len(sentences) >= 2


def test_zero_entropy_lexicon_resamples_identically(grammar):
    g = load_grammar()
    g.det_words = ("the",)
    g.nouns_by_number = {"sg": ("unicorn",), "pl": ("unicorn",)}
    g.aux_by_number = {"sg": ("does",), "pl": ("does",)}
    g.rel_words = ("who",)
    g.prep_words = ("behind",)
    g.verb_classes = {"V_I": (VerbLexeme("wait", "waits", "waited"),),
                      "V_T": (VerbLexeme("admire", "admires", "admired"),)}
    tree = g.sample_tree(ANY, stream(1, 0), task=QF)
    rng = stream(1, "resample")
    for _ in range(20):
        assert sentence(g.resample_leaves(tree, rng)) == sentence(tree)


def test_parse_roundtrips_sampled_trees(grammar):
    for task in (QF, TI):
        for degree in (1, 2):
            for i in range(150):
                tree = grammar.sample_tree(ANY, stream(33, task.value, degree, i),
                                           task=task, degree=degree)
                assert grammar.parse_sentence(sentence(tree), task) == tree


def test_parse_rejects_garbage(grammar):
    with pytest.raises(ParseError):
        grammar.parse_sentence("my unicorn".split(), QF)
    with pytest.raises(ParseError):
        grammar.parse_sentence("my unicorn do move .".split(), QF)  # agreement
    with pytest.raises(ParseError):
        grammar.parse_sentence("my unicorn does move . extra".split(), QF)


def test_classify_rejects_foreign_labels(grammar):
    from grammarlab.grammar import SyntaxTree
    bogus = SyntaxTree("S_Q", (SyntaxTree("WEIRD", (), "x"),
                               SyntaxTree("VP_Q", (SyntaxTree("AUX", (), "does"),
                                                   SyntaxTree("V_I", (), "move"))),
                               SyntaxTree("END", (), ".")))
    with pytest.raises(MalformedTree):
        grammar.classify(bogus)


def test_constraint_unsatisfiable():
    text = "\n".join([
        "version 1",
        "special <pad>",
        "special ?",
        "marker decl", "marker quest", "marker PAST", "marker PRESENT",
        "lex END .",
        "lex DET " + " ".join(f"d{i}" for i in range(20)),
        "lex NOUN " + " ".join(f"n{i}:sg np{i}:pl" for i in range(14)),
        "lex AUX does:sg doesn't:sg do:pl don't:pl",
        "lex REL who that",
        "lex PREP behind above p1 p2 p3 p4",
        "verb V_I wait waits waited",
        "verb V_T admire admires admired",
        "prod S_Q -> NP_Q VP_Q END",
        "prod NP_Q -> DET NOUN",
        "prod VP_Q -> AUX V_I | AUX V_T NP_Q",
        "prod S_T -> NP_T VP_T END",
        "prod NP_T -> DET NOUN",
        "prod VP_T -> V_I | V_T NP_T",
    ])
    g = parse_grammar_text(text)
    with pytest.raises(ConstraintUnsatisfiable):
        g.structures("qf", CENTER_EMBEDDED, 1)


def test_malformed_grammar_file_rejected():
    with pytest.raises(GrammarFormatError):
        parse_grammar_text("version 1\nprod S_Q -> MISSING\n")


def test_dump_lists_inventory(grammar):
    text = grammar.dump()
    assert "inventory (72 tokens):" in text
    for tok in grammar.vocab():
        assert tok in text

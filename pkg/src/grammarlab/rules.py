"""Linear and hierarchical transformation oracles for both tasks.

The hierarchical rules read the syntax tree (front the main-clause
auxiliary; agree every verb with its own subject). The linear rules
read only the token string (front the leftmost auxiliary; agree each
verb with the nearest noun to its left). A sample is ambiguous iff the
two rules produce token-identical outputs.
"""

from __future__ import annotations

from .errors import MalformedTree, NoAuxiliary, NoPrecedingNoun, UnknownVerbForm
from .grammar import SG, Grammar, SyntaxTree, TaskKind, default_grammar, sentence


def qf_hierarchical(tree: SyntaxTree) -> tuple[str, ...]:
    """Front the main-clause auxiliary and turn '.' into '?'."""
    vp = tree.children[1]
    if not vp.children or vp.children[0].label != "AUX":
        raise NoAuxiliary("tree has no main-clause auxiliary")
    main_aux = vp.children[0]
    out = [main_aux.word]
    seen = False
    for leaf in tree.leaves():
        if leaf is main_aux and not seen:
            seen = True
            continue
        out.append(leaf.word)
    return _question_mark(out)


def qf_linear(tokens, grammar: Grammar | None = None) -> tuple[str, ...]:
    """Front the leftmost auxiliary token; operates on the string only."""
    grammar = grammar or default_grammar()
    tokens = list(tokens)
    for i, tok in enumerate(tokens):
        if grammar.is_aux(tok):
            moved = tokens[:i] + tokens[i + 1:]
            return _question_mark([tok] + moved)
    raise NoAuxiliary("sentence has no auxiliary token")


def _question_mark(tokens):
    if tokens and tokens[-1] == ".":
        tokens[-1] = "?"
    return tuple(tokens)


def ti_hierarchical(tree: SyntaxTree, grammar: Grammar | None = None) -> tuple[str, ...]:
    """Map every verb past -> present, agreeing with its own subject."""
    grammar = grammar or default_grammar()
    out: list[str] = []

    def present(leaf, number):
        try:
            lexeme = grammar.verb_lexeme(leaf.word)
        except KeyError:
            raise UnknownVerbForm(f"no verb-form entry for {leaf.word!r}") from None
        out.append(lexeme.present(number))

    def emit_np(node):
        number = grammar.noun_number(node.children[1].word)
        out.append(node.children[0].word)
        out.append(node.children[1].word)
        for post in node.children[2:]:
            if post.label == "PP":
                out.extend(leaf.word for leaf in post.leaves())
            else:
                emit_rc(post, number)
        return number

    def emit_rc(node, head_number):
        out.append(node.children[0].word)
        rest = list(node.children[1:])
        if rest[0].label.startswith("NP"):
            governed = emit_np(rest[0])
            rest = rest[1:]
        else:
            governed = head_number
        for sub in rest:
            if sub.is_leaf:
                present(sub, governed)
            else:
                emit_np(sub)

    subject_number = emit_np(tree.children[0])
    for sub in tree.children[1].children:
        if sub.is_leaf:
            present(sub, subject_number)
        else:
            emit_np(sub)
    out.append(".")
    return tuple(out)


def ti_linear(tokens, grammar: Grammar | None = None) -> tuple[str, ...]:
    """Inflect each verb to agree with the nearest noun on its left."""
    grammar = grammar or default_grammar()
    out = []
    last_noun_number = None
    for tok in tokens:
        if grammar.is_noun(tok):
            last_noun_number = grammar.noun_number(tok)
            out.append(tok)
        elif grammar.is_verb(tok):
            if last_noun_number is None:
                raise NoPrecedingNoun(f"verb {tok!r} has no noun to its left")
            out.append(grammar.verb_lexeme(tok).present(last_noun_number))
        else:
            out.append(tok)
    return tuple(out)


def copy_target(tokens) -> tuple[str, ...]:
    """Copy tasks repeat the input verbatim."""
    return tuple(tokens)


def is_ambiguous(tree: SyntaxTree, task: TaskKind, grammar: Grammar | None = None) -> bool:
    """True iff the linear and hierarchical outputs are token-identical."""
    grammar = grammar or default_grammar()
    toks = sentence(tree)
    if task.family == "qf":
        return qf_linear(toks, grammar) == qf_hierarchical(tree)
    return ti_linear(toks, grammar) == ti_hierarchical(tree, grammar)


def transform(tree: SyntaxTree, task: TaskKind, grammar: Grammar | None = None) -> tuple[str, ...]:
    """Gold target for a sample: the hierarchical rule, or a verbatim copy."""
    grammar = grammar or default_grammar()
    if task is TaskKind.QUESTION_FORMATION:
        return qf_hierarchical(tree)
    if task is TaskKind.TENSE_INFLECTION:
        return ti_hierarchical(tree, grammar)
    return copy_target(sentence(tree))


def main_verb_index(tokens, grammar: Grammar | None = None) -> int:
    """Position of the main verb in a (well-formed) sentence.

    If a relativizer precedes the first verb, the subject carries a
    relative clause and the main verb is the second verb; otherwise it
    is the first. Exact for every degree-1 sentence of the grammar.
    """
    grammar = grammar or default_grammar()
    verb_positions = [i for i, t in enumerate(tokens) if grammar.is_verb(t)]
    if not verb_positions:
        raise MalformedTree("sentence has no verb")
    rel_before = any(t in grammar.rel_words for t in tokens[: verb_positions[0]])
    if rel_before:
        if len(verb_positions) < 2:
            raise MalformedTree("subject relative clause without a main verb")
        return verb_positions[1]
    return verb_positions[0]

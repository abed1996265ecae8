import pytest

from grammarlab.grammar import TaskKind, default_grammar
from grammarlab.tokenizer import Tokenizer

QF = TaskKind.QUESTION_FORMATION
TI = TaskKind.TENSE_INFLECTION


@pytest.fixture(scope="session")
def grammar():
    return default_grammar()


@pytest.fixture(scope="session")
def tokenizer(grammar):
    return Tokenizer.from_grammar(grammar)


def qf_tree(grammar, text):
    return grammar.parse_sentence(text.split(), QF)


def ti_tree(grammar, text):
    return grammar.parse_sentence(text.split(), TI)

"""Word-level tokenizer over the grammar's fixed 72-token inventory."""

from __future__ import annotations

from .errors import UnknownToken
from .grammar import PAD_TOKEN, Grammar, default_grammar


class Tokenizer:
    def __init__(self, vocab: list[str]):
        self.vocab = list(vocab)
        self.index = {tok: i for i, tok in enumerate(self.vocab)}
        if len(self.index) != len(self.vocab):
            raise ValueError("vocabulary contains duplicates")
        self.pad_id = self.index[PAD_TOKEN]

    @classmethod
    def from_grammar(cls, grammar: Grammar | None = None) -> "Tokenizer":
        return cls((grammar or default_grammar()).vocab())

    def __len__(self) -> int:
        return len(self.vocab)

    def encode(self, line) -> list[int]:
        """Token ids for a line (str) or an iterable of tokens."""
        tokens = line.split() if isinstance(line, str) else list(line)
        try:
            return [self.index[t] for t in tokens]
        except KeyError as exc:
            raise UnknownToken(f"token {exc.args[0]!r} not in vocabulary") from None

    def decode(self, ids) -> str:
        try:
            return " ".join(self.vocab[i] for i in ids)
        except IndexError:
            raise UnknownToken("token id outside vocabulary") from None

    def decode_tokens(self, ids) -> tuple[str, ...]:
        return tuple(self.vocab[i] for i in ids)

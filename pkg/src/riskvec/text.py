"""Tokenization shared by user selection and content labelling."""

from __future__ import annotations

import re

_URL = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION = re.compile(r"(?<![\w@])@(\w+)")
_HASHTAG = re.compile(r"(?<![\w#])#(\w+)")
# \w is unicode-aware; underscores split words too
_WORD = re.compile(r"(#?)([^\W_]+)")


class Token(str):
    """A lowercase word that remembers whether it was written as a hashtag."""

    is_hashtag: bool

    def __new__(cls, word: str, is_hashtag: bool = False):
        tok = super().__new__(cls, word)
        tok.is_hashtag = is_hashtag
        return tok

    def __repr__(self):
        return f"#{str(self)}" if self.is_hashtag else str.__repr__(self)


def extract_hashtags(text: str) -> list[str]:
    return [m.lower() for m in _HASHTAG.findall(_URL.sub(" ", text))]


def extract_mentions(text: str) -> list[str]:
    return [m.lower() for m in _MENTION.findall(_URL.sub(" ", text))]


def tokenize(text: str) -> list[Token]:
    """Lowercase word tokens with URLs and @mentions removed.

    >>> tokenize("#Sandy is here, see https://x.y @bob")
    [#sandy, 'is', 'here', 'see']
    """
    text = _URL.sub(" ", text)
    text = _MENTION.sub(" ", text)
    return [Token(word.lower(), bool(mark)) for mark, word in _WORD.findall(text)]

"""Input checks shared by the estimators and the CLI."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

from .corpus import Note
from .extract import LexiconBundle
from .lexicon import Lexicon, load_lexicon


def check_texts(X, name: str = "X") -> list[str]:
    """Coerce an iterable of notes or strings to a list of strings."""
    if isinstance(X, (str, bytes)):
        raise TypeError(f"{name} must be an iterable of texts, not a single string")
    out = []
    for k, item in enumerate(X):
        if isinstance(item, Note):
            out.append(item.text)
        elif isinstance(item, str):
            out.append(item)
        else:
            raise TypeError(f"{name}[{k}] must be a str or Note, got {type(item).__name__}")
    return out


def check_qa_pairs(X, name: str = "X") -> list[tuple[str, str]]:
    """Coerce ``(context, question)`` pairs; questions must be non-empty."""
    if isinstance(X, (str, bytes)):
        raise TypeError(f"{name} must be an iterable of (context, question) pairs")
    pairs = []
    for k, item in enumerate(X):
        try:
            context, question = item
        except (TypeError, ValueError):
            raise ValueError(f"{name}[{k}] is not a (context, question) pair") from None
        if isinstance(context, Note):
            context = context.text
        if not isinstance(context, str) or not isinstance(question, str):
            raise TypeError(f"{name}[{k}] must hold two strings")
        if not question.strip():
            raise ValueError(f"{name}[{k}] has an empty question")
        pairs.append((context, question))
    return pairs


def check_strings(y: Iterable, n: int, name: str = "y") -> list[str]:
    out = list(y)
    if len(out) != n:
        raise ValueError(f"{name} has {len(out)} entries, expected {n}")
    if not all(isinstance(v, str) for v in out):
        raise TypeError(f"{name} must contain strings")
    return out


def resolve_bundle(lexicon: Lexicon | str | Path | None) -> LexiconBundle:
    """A compiled bundle from a Lexicon, a lexicon file path or None (shipped default)."""
    if lexicon is None or isinstance(lexicon, (str, Path)):
        lexicon = load_lexicon(lexicon)
    elif not isinstance(lexicon, Lexicon):
        raise TypeError(f"lexicon must be a Lexicon, a path or None, got {type(lexicon).__name__}")
    return LexiconBundle.from_lexicon(lexicon)

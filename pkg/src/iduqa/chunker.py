"""Sliding-window chunking of long contexts for fixed-length QA models."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

logger = logging.getLogger(__name__)


class ChunkError(ValueError):
    pass


class Token(NamedTuple):
    start: int
    end: int
    text: str


_NONSPACE = re.compile(r"\S+")


def whitespace_tokens(text: str) -> list[Token]:
    return [Token(m.start(), m.end(), m.group()) for m in _NONSPACE.finditer(text)]


@dataclass(frozen=True)
class TokenizerPolicy:
    name: str = "whitespace"
    function: Callable[[str], Sequence[Token]] = whitespace_tokens


WHITESPACE = TokenizerPolicy()


def tokenize(text: str, policy: TokenizerPolicy = WHITESPACE) -> list[Token]:
    """Tokenize with ``policy`` and check the tokens are ordered, disjoint
    and reproduce their text from the offsets."""
    tokens = [Token(*t) for t in policy.function(text)]
    prev_end = 0
    for t in tokens:
        if t.start < prev_end or t.end <= t.start:
            raise ChunkError(f"tokenizer {policy.name!r} produced overlapping or empty token {t}")
        if text[t.start : t.end] != t.text:
            raise ChunkError(f"tokenizer {policy.name!r}: token {t} does not match its offsets")
        prev_end = t.end
    return tokens


@dataclass(frozen=True)
class ChunkPolicy:
    max_sequence_tokens: int = 512
    document_stride_tokens: int = 128
    max_question_tokens: int = 20
    max_answer_tokens: int = 100
    reserved_tokens: int = 0  # special/separator tokens, if the model needs them

    def __post_init__(self):
        for name in ("max_sequence_tokens", "document_stride_tokens", "max_question_tokens", "max_answer_tokens"):
            if getattr(self, name) <= 0:
                raise ChunkError(f"{name} must be positive")
        if self.reserved_tokens < 0:
            raise ChunkError("reserved_tokens must be >= 0")
        if self.document_stride_tokens >= self.min_capacity:
            raise ChunkError(
                f"stride {self.document_stride_tokens} must be below the context capacity {self.min_capacity}"
            )

    @property
    def min_capacity(self) -> int:
        return self.max_sequence_tokens - self.max_question_tokens - self.reserved_tokens

    def capacity(self, question_tokens: int) -> int:
        """Context tokens that fit next to a question of the given length."""
        return self.max_sequence_tokens - min(question_tokens, self.max_question_tokens) - self.reserved_tokens


@dataclass(frozen=True)
class Chunk:
    sample_id: str
    window_index: int
    token_range: tuple[int, int]
    char_range: tuple[int, int]
    answer_in_window: tuple[int, int] | None
    is_answer_present: bool

    def to_record(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "window_index": self.window_index,
            "token_range": list(self.token_range),
            "char_range": list(self.char_range),
            "is_answer_present": self.is_answer_present,
            "answer_tokens": list(self.answer_in_window) if self.answer_in_window else None,
        }


def window_starts(n_tokens: int, capacity: int, stride: int) -> list[tuple[int, int]]:
    """Half-open token windows ``[k*stride, min(k*stride+capacity, n))`` until
    one reaches the last token."""
    windows = []
    start = 0
    while True:
        end = min(start + capacity, n_tokens)
        windows.append((start, end))
        if end >= n_tokens:
            return windows
        start += stride


def answer_token_span(tokens: Sequence[Token], answer_start: int, answer_end: int) -> tuple[int, int] | None:
    """Half-open range of tokens overlapping the character span."""
    covered = [k for k, t in enumerate(tokens) if t.end > answer_start and t.start < answer_end]
    if not covered:
        return None
    return covered[0], covered[-1] + 1


def chunk_context(
    sample_id: str,
    context: str,
    question: str,
    answer: tuple[int, int] | None = None,
    policy: ChunkPolicy = ChunkPolicy(),
    tokenizer: TokenizerPolicy = WHITESPACE,
) -> list[Chunk]:
    """Split a context into stride-spaced windows sized to sit beside the question.

    ``answer`` is a character span ``(start, end)`` into the context. A window
    reports the answer only when it holds every answer token; answers cut by
    a window edge are marked absent there rather than clipped.
    """
    tokens = tokenize(context, tokenizer)
    if not tokens:
        raise ChunkError(f"sample {sample_id}: empty context")
    q_len = len(tokenize(question, tokenizer))
    if q_len > policy.max_question_tokens:
        logger.warning(
            "sample %s: question has %d tokens, truncated to %d", sample_id, q_len, policy.max_question_tokens
        )
    capacity = policy.capacity(q_len)
    answer_tokens = answer_token_span(tokens, *answer) if answer is not None else None
    chunks = []
    for k, (ws, we) in enumerate(window_starts(len(tokens), capacity, policy.document_stride_tokens)):
        inside = answer_tokens is not None and ws <= answer_tokens[0] and answer_tokens[1] <= we
        chunks.append(
            Chunk(
                sample_id=sample_id,
                window_index=k,
                token_range=(ws, we),
                char_range=(tokens[ws].start, tokens[we - 1].end),
                answer_in_window=answer_tokens if inside else None,
                is_answer_present=inside,
            )
        )
    return chunks


def chunk_sample(sample, context: str, policy: ChunkPolicy = ChunkPolicy(), tokenizer: TokenizerPolicy = WHITESPACE):
    """:func:`chunk_context` for a :class:`~iduqa.dataset.QASample`."""
    answer = None
    if sample.answers:
        a = sample.answers[0]
        answer = (a.answer_start, a.answer_start + len(a.text))
    return chunk_context(sample.id, context, sample.question, answer, policy, tokenizer)


def chunk_dataset(dataset, policy: ChunkPolicy = ChunkPolicy(), tokenizer: TokenizerPolicy = WHITESPACE) -> list[Chunk]:
    out = []
    for sample in dataset.samples:
        out.extend(chunk_sample(sample, dataset.context(sample), policy, tokenizer))
    return out

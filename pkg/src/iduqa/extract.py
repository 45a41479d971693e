"""Rule-based answer extraction.

A cleaned note is split into sentences, sentences mentioning an IDU keyword
are kept, and each is shrunk to a concise answer span:

* the left edge moves to the nearest trigger phrase before the first keyword,
  preferring negation over substance-use-disorder over temporal phrases
  (track-mark status phrases compete with temporal ones when the keyword is
  "track marks"); with no trigger the span starts at the sentence start;
* the right edge is the sentence end, or the end of the first
  "<n> days/years/... ago" phrase after the last keyword.

Spans are then routed to query groups by the mapping rules.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .corpus import Note
from .lexicon import (
    ATP,
    NP,
    SP,
    TEMP,
    TMP,
    Lexicon,
    MatcherSet,
    PhraseMatch,
    QuestionBank,
    compile_matchers,
    expand_question_bank,
    load_lexicon,
)

PROTECTED_ABBREVIATIONS = (
    "h/o",
    "pt.",
    "y/o",
    "hx.",
    "vs.",
    "dr.",
    "mr.",
    "ms.",
    "e.g.",
    "i.e.",
    "b.i.d.",
    "q.d.",
)

_TRAILING = set(string.whitespace) | set(".!?,;:")
_TRACK_MARKS = "track marks"


class Sentence(NamedTuple):
    start: int
    end: int
    text: str


class KeywordHit(NamedTuple):
    start: int
    end: int
    phrase: str
    keyword_group_id: str


class Trigger(NamedTuple):
    start: int
    end: int
    phrase: str
    cls: str


@dataclass(frozen=True)
class AnswerSpan:
    start: int
    end: int
    text: str
    trigger: Trigger | None = None


@dataclass(frozen=True)
class AnnotatedAnswer:
    start: int
    end: int
    text: str
    sentence_index: int
    trigger: Trigger | None
    keyword_hits: tuple[KeywordHit, ...]
    query_group_ids: tuple[str, ...]

    def to_record(self, note_id: str) -> dict:
        return {
            "note_id": note_id,
            "start": self.start,
            "end": self.end,
            "text": self.text,
            "sentence_index": self.sentence_index,
            "trigger_class": self.trigger.cls if self.trigger else None,
            "trigger_phrase": self.trigger.phrase if self.trigger else None,
            "keywords": [h.phrase for h in self.keyword_hits],
            "groups": list(self.query_group_ids),
        }


@dataclass(frozen=True)
class LexiconBundle:
    """Everything the extractor needs, compiled once from a lexicon."""

    lexicon: Lexicon
    matchers: MatcherSet
    bank: QuestionBank
    vocabulary: dict[str, frozenset[str]] = field(default_factory=dict)

    @classmethod
    def from_lexicon(cls, lexicon: Lexicon | None = None) -> LexiconBundle:
        lexicon = lexicon if lexicon is not None else load_lexicon()
        matchers = compile_matchers(lexicon)
        bank = expand_question_bank(lexicon)
        return cls(lexicon, matchers, bank, _group_vocabulary(lexicon, bank))


# ---------------------------------------------------------------------------
# sentences and keywords
# ---------------------------------------------------------------------------


def _is_protected(text: str, dot: int, protected: Sequence[str]) -> bool:
    j = dot
    while j > 0 and not text[j - 1].isspace():
        j -= 1
    token = text[j : dot + 1].lstrip("([{\"'").lower()
    return any(token == p or token == p + "." for p in protected)


def sentencize(text: str, protected: Sequence[str] = PROTECTED_ABBREVIATIONS) -> list[Sentence]:
    """Split text at newlines and at ``.``/``!``/``?`` followed by whitespace.

    Offsets are exact; surrounding whitespace is not part of a sentence.

    >>> sentencize("denies ivdu. lives alone.")
    [Sentence(start=0, end=12, text='denies ivdu.'), Sentence(start=13, end=25, text='lives alone.')]
    """
    sentences: list[Sentence] = []

    def emit(a: int, b: int) -> None:
        while a < b and text[a].isspace():
            a += 1
        while b > a and text[b - 1].isspace():
            b -= 1
        if a < b:
            sentences.append(Sentence(a, b, text[a:b]))

    start = 0
    n = len(text)
    for i, ch in enumerate(text):
        if ch == "\n":
            emit(start, i)
            start = i + 1
        elif ch in ".!?" and (i + 1 == n or text[i + 1].isspace()):
            if ch == "." and _is_protected(text, i, protected):
                continue
            emit(start, i + 1)
            start = i + 1
    emit(start, n)
    return sentences


def sentence_keyword_hits(sentence: Sentence, matchers: MatcherSet) -> list[KeywordHit]:
    return [KeywordHit(*m) for m in matchers.keyword_hits(sentence.text, offset=sentence.start)]


def find_keyword_sentences(
    sentences: Sequence[Sentence], matchers: MatcherSet
) -> list[tuple[Sentence, list[KeywordHit]]]:
    out = []
    for sentence in sentences:
        hits = sentence_keyword_hits(sentence, matchers)
        if hits:
            out.append((sentence, hits))
    return out


# ---------------------------------------------------------------------------
# span shrinking
# ---------------------------------------------------------------------------


def _nearest(matches: list[PhraseMatch]) -> PhraseMatch | None:
    if not matches:
        return None
    return max(matches, key=lambda m: (m.start, m.end))


def parse_answer(sentence: Sentence, hits: Sequence[KeywordHit], matchers: MatcherSet) -> AnswerSpan:
    """Shrink a keyword-bearing sentence to its answer span."""
    if not hits:
        raise ValueError("parse_answer needs at least one keyword hit")
    left = min(h.start for h in hits)
    right = max(h.end for h in hits)
    if left < sentence.start or right > sentence.end:
        raise ValueError("keyword hits must lie inside the sentence")
    classes = matchers.phrase_classes
    prefix = sentence.text[: left - sentence.start]

    tiers: list[tuple[str, ...]] = [(NP,), (SP,), (TEMP, TMP) if any(h.phrase == _TRACK_MARKS for h in hits) else (TEMP,)]
    trigger = None
    for tier in tiers:
        found = _nearest([m for cls in tier for m in classes[cls].finditer(prefix, offset=sentence.start)])
        if found is not None:
            trigger = Trigger(found.start, found.end, found.phrase, found.label)
            break
    start = trigger.start if trigger else sentence.start

    end = sentence.end
    suffix_offset = right - sentence.start
    first_atp = next(classes[ATP].finditer(sentence.text[suffix_offset:], offset=right), None)
    if first_atp is not None:
        end = first_atp.end
    while end > right and sentence.text[end - 1 - sentence.start] in _TRAILING:
        end -= 1
    return AnswerSpan(start, end, sentence.text[start - sentence.start : end - sentence.start], trigger)


def map_query_groups(answer_text: str, matchers: MatcherSet) -> list[str]:
    """Query groups whose trigger phrases occur in the answer, in rule order.

    Falls back to the default rule's group when nothing fires.
    """
    groups: list[str] = []
    for rule, matcher in matchers.rule_matchers:
        if rule.is_default or rule.query_group_id in groups:
            continue
        if matcher.search(answer_text):
            groups.append(rule.query_group_id)
    return groups or [matchers.default_group_id]


def _as_matchers(bundle: LexiconBundle | MatcherSet) -> MatcherSet:
    return bundle.matchers if isinstance(bundle, LexiconBundle) else bundle


def extract_note(
    note: Note | str,
    bundle: LexiconBundle | MatcherSet,
    protected: Sequence[str] = PROTECTED_ABBREVIATIONS,
) -> list[AnnotatedAnswer]:
    """One annotated answer per keyword-bearing sentence, in document order."""
    matchers = _as_matchers(bundle)
    text = note.text if isinstance(note, Note) else note
    sentences = sentencize(text, protected)
    answers = []
    for index, sentence in enumerate(sentences):
        hits = sentence_keyword_hits(sentence, matchers)
        if not hits:
            continue
        span = parse_answer(sentence, hits, matchers)
        answers.append(
            AnnotatedAnswer(
                start=span.start,
                end=span.end,
                text=span.text,
                sentence_index=index,
                trigger=span.trigger,
                keyword_hits=tuple(hits),
                query_group_ids=tuple(map_query_groups(span.text, matchers)),
            )
        )
    return answers


# ---------------------------------------------------------------------------
# question answering
# ---------------------------------------------------------------------------

_STOPWORDS = frozenset(
    """a an the of is are was were be been does do did has have had what which when
    how who any on in to with for there patient pt patients or and ever this that it
    at by from vs versus""".split()
)
_TOKEN_STRIP = string.punctuation


def _content_words(text: str) -> set[str]:
    words = {w.strip(_TOKEN_STRIP).lower() for w in text.split()}
    return {w for w in words if w and w not in _STOPWORDS}


def _group_vocabulary(lexicon: Lexicon, bank: QuestionBank) -> dict[str, frozenset[str]]:
    vocab: dict[str, set[str]] = {gid: set() for gid in bank.group_ids}
    for gid, questions in bank.questions.items():
        for q in questions:
            vocab[gid] |= _content_words(q)
    for rule in lexicon.mapping_rules:
        for phrase in rule.trigger_phrases:
            vocab[rule.query_group_id] |= _content_words(phrase)
    return {gid: frozenset(words) for gid, words in vocab.items()}


class Classification(NamedTuple):
    query_group_id: str | None
    method: str  # "exact", "fallback" or "none"
    score: int = 0


def classify_question(question: str, bundle: LexiconBundle) -> Classification:
    """Map a question to a query group.

    Bank questions are looked up exactly. Anything else is scored by
    content-word overlap with each group's vocabulary, plus two points per
    mapping-rule trigger phrase found in the question; the best group wins,
    ties going to the earlier group.
    """
    if not question or not question.strip():
        raise ValueError("question must be non-empty")
    exact = bundle.bank.lookup(question)
    if exact is not None:
        return Classification(exact, "exact", 0)
    words = _content_words(question)
    scores = {gid: len(words & vocab) for gid, vocab in bundle.vocabulary.items()}
    for rule, matcher in bundle.matchers.rule_matchers:
        if rule.is_default:
            continue
        phrases = {m.phrase for m in matcher.finditer(question)}
        scores[rule.query_group_id] += 2 * len(phrases)
    best_group, best = None, 0
    for gid in bundle.bank.group_ids:
        if scores[gid] > best:
            best_group, best = gid, scores[gid]
    if best_group is None:
        return Classification(None, "none", 0)
    return Classification(best_group, "fallback", best)


@dataclass(frozen=True)
class QueryResult:
    answers: tuple[AnnotatedAnswer, ...]
    query_group_id: str | None
    method: str
    reason: str  # "ok", "no_information" or "no_match"

    @property
    def texts(self) -> list[str]:
        return [a.text for a in self.answers]

    @property
    def best(self) -> str:
        """First answer text, or the empty string when nothing was found."""
        return self.answers[0].text if self.answers else ""


def answer_question(
    note: Note | str,
    question: str,
    bundle: LexiconBundle,
    protected: Sequence[str] = PROTECTED_ABBREVIATIONS,
) -> QueryResult:
    """Answer a question about one note with the extraction rules."""
    label = classify_question(question, bundle)
    if label.query_group_id is None:
        return QueryResult((), None, label.method, "no_match")
    answers = tuple(
        a for a in extract_note(note, bundle, protected) if label.query_group_id in a.query_group_ids
    )
    return QueryResult(answers, label.query_group_id, label.method, "ok" if answers else "no_information")


__all__ = [
    "PROTECTED_ABBREVIATIONS",
    "Sentence",
    "KeywordHit",
    "Trigger",
    "AnswerSpan",
    "AnnotatedAnswer",
    "LexiconBundle",
    "Classification",
    "QueryResult",
    "sentencize",
    "find_keyword_sentences",
    "parse_answer",
    "map_query_groups",
    "extract_note",
    "classify_question",
    "answer_question",
]


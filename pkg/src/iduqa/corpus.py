"""Note ingestion, minimal cleaning, keyword filtering and corpus statistics."""

from __future__ import annotations

import csv
import datetime as dt
import json
import logging
import re
import statistics
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .lexicon import MatcherSet

if TYPE_CHECKING:
    from .dataset import Dataset

logger = logging.getLogger(__name__)

CORPUS_FORMAT_VERSION = "1.0.0"


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class Note:
    patient_id: str
    note_id: str
    date: dt.date | None
    raw_text: str
    cleaned_text: str | None = None

    @property
    def text(self) -> str:
        """Cleaned text when available, raw text otherwise."""
        return self.cleaned_text if self.cleaned_text is not None else self.raw_text

    def cleaned(self) -> Note:
        return replace(self, cleaned_text=clean_note(self.raw_text))


# ---------------------------------------------------------------------------
# cleaning
# ---------------------------------------------------------------------------

_RULES = (
    (re.compile(r"\r\n?"), "\n"),
    (re.compile(r"\n{2,}"), "\n"),
    (re.compile(r"[ \t]{2,}"), " "),
    (re.compile(r"\.{2,}|-{2,}|_{2,}"), " "),
    (re.compile(r"(?<=[,:;'\"])\n"), " "),
)


def clean_note(raw_text: str) -> str:
    """Collapse repeated newlines/blanks, drop runs of periods, dashes and
    underscores, and join lines that end in internal punctuation.

    Rules are applied until nothing changes, which makes the function
    idempotent.

    >>> clean_note("social hx:\\ndenies ivdu")
    'social hx: denies ivdu'
    >>> clean_note("plan____follow up\\n\\n\\nend")
    'plan follow up\\nend'
    """
    text = raw_text
    while True:
        before = text
        for pattern, repl in _RULES:
            text = pattern.sub(repl, text)
        text = text.strip()
        if text == before:
            return text


def clean_notes(notes: Iterable[Note]) -> list[Note]:
    return [note.cleaned() for note in notes]


# ---------------------------------------------------------------------------
# filtering
# ---------------------------------------------------------------------------


def filter_by_keywords(notes: Sequence[Note], matchers: MatcherSet) -> tuple[list[Note], list[Note]]:
    """Partition notes into (kept, dropped) by presence of any IDU keyword."""
    kept, dropped = [], []
    for note in notes:
        (kept if matchers.keywords.search(note.text) else dropped).append(note)
    return kept, dropped


def word_count(text: str) -> int:
    return len(text.split())


def length_fence(lengths: Sequence[int], k: float = 1.5) -> float:
    """Upper Tukey fence ``Q3 + k * IQR`` with linearly interpolated quartiles."""
    q1, q3 = np.percentile(np.asarray(lengths, dtype=float), [25, 75], method="linear")
    return float(q3 + k * (q3 - q1))


def drop_length_outliers(notes: Sequence[Note], k: float = 1.5) -> tuple[list[Note], list[Note]]:
    """Drop notes whose word count lies above the upper IQR fence.

    Corpora with fewer than four notes are returned unchanged.
    """
    notes = list(notes)
    if len(notes) < 4:
        return notes, []
    fence = length_fence([word_count(n.text) for n in notes], k)
    kept, dropped = [], []
    for note in notes:
        (dropped if word_count(note.text) > fence else kept).append(note)
    if dropped:
        logger.info("dropped %d length outliers (fence %.1f words)", len(dropped), fence)
    return kept, dropped


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------


@dataclass
class LengthSummary:
    avg: float = 0.0
    median: float = 0.0
    max: int = 0

    @classmethod
    def of(cls, lengths: Sequence[int]) -> LengthSummary:
        if not lengths:
            return cls()
        return cls(
            avg=round(sum(lengths) / len(lengths), 2),
            median=float(statistics.median(lengths)),
            max=max(lengths),
        )


@dataclass
class CorpusStats:
    patient_count: int = 0
    note_count: int = 0
    notes_per_patient_avg: float = 0.0
    sample_count: int | None = None
    qa_per_note_avg: float | None = None
    note_length_words: LengthSummary = field(default_factory=LengthSummary)
    question_length_words: LengthSummary | None = None
    answer_length_words: LengthSummary | None = None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def corpus_stats(notes: Sequence[Note], dataset: Dataset | None = None) -> CorpusStats:
    """Table-style statistics over notes and, optionally, the QA samples built on them."""
    if not notes:
        logger.warning("corpus_stats called on an empty corpus")
        stats = CorpusStats(warnings=["empty corpus"])
        if dataset is not None:
            stats.sample_count = 0
            stats.qa_per_note_avg = 0.0
            stats.question_length_words = LengthSummary()
            stats.answer_length_words = LengthSummary()
        return stats
    patients = {n.patient_id for n in notes}
    stats = CorpusStats(
        patient_count=len(patients),
        note_count=len(notes),
        notes_per_patient_avg=round(len(notes) / len(patients), 2),
        note_length_words=LengthSummary.of([word_count(n.text) for n in notes]),
    )
    if dataset is not None:
        samples = dataset.samples
        stats.sample_count = len(samples)
        stats.qa_per_note_avg = round(len(samples) / len(notes), 2)
        stats.question_length_words = LengthSummary.of([word_count(s.question) for s in samples])
        stats.answer_length_words = LengthSummary.of(
            [word_count(a.text) for s in samples if not s.is_impossible for a in s.answers[:1]]
        )
    return stats


# ---------------------------------------------------------------------------
# ingestion / persistence
# ---------------------------------------------------------------------------


def _parse_date(value: str | None) -> dt.date | None:
    if not value:
        return None
    try:
        return dt.date.fromisoformat(value.strip()[:10])
    except ValueError:
        raise CorpusError(f"bad ISO-8601 date {value!r}") from None


def read_manifest(path: str | Path) -> list[Note]:
    """Read raw notes from a manifest.

    ``path`` is either a delimited file (comma or tab) with columns
    ``note_id, patient_id, date`` and one of ``text`` / ``path``, or a
    directory holding ``manifest.csv`` whose ``path`` column points at
    per-note text files relative to that directory.
    """
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.csv"
    if not path.exists():
        raise CorpusError(f"manifest not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        sample = fh.read(4096)
        fh.seek(0)
        delimiter = "\t" if sample.count("\t") > sample.count(",") else ","
        reader = csv.DictReader(fh, delimiter=delimiter)
        columns = set(reader.fieldnames or [])
        missing = {"note_id", "patient_id", "date"} - columns
        if missing or not ({"text", "path"} & columns):
            raise CorpusError(f"{path}: manifest needs note_id, patient_id, date and text or path columns")
        notes, seen = [], set()
        for lineno, row in enumerate(reader, start=2):
            note_id = row["note_id"].strip()
            if note_id in seen:
                raise CorpusError(f"{path}:{lineno}: duplicate note_id {note_id!r}")
            seen.add(note_id)
            if row.get("text") is not None and "path" not in columns:
                text = row["text"]
            else:
                note_file = path.parent / row["path"]
                if not note_file.exists():
                    raise CorpusError(f"{path}:{lineno}: note file not found: {note_file}")
                text = note_file.read_text(encoding="utf-8")
            notes.append(Note(row["patient_id"].strip(), note_id, _parse_date(row["date"]), text))
    return notes


def _note_to_dict(note: Note) -> dict:
    return {
        "note_id": note.note_id,
        "patient_id": note.patient_id,
        "date": note.date.isoformat() if note.date else None,
        "raw_text": note.raw_text,
        "cleaned_text": note.cleaned_text,
    }


def write_notes(notes: Sequence[Note], path: str | Path) -> None:
    doc = {"version": CORPUS_FORMAT_VERSION, "notes": [_note_to_dict(n) for n in notes]}
    Path(path).write_text(json.dumps(doc, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")


def read_notes(path: str | Path) -> list[Note]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{path}: not a notes file ({exc})") from None
    if not isinstance(doc, dict) or "notes" not in doc or "version" not in doc:
        raise CorpusError(f"{path}: expected keys 'version' and 'notes'")
    notes, seen = [], set()
    for raw in doc["notes"]:
        if raw["note_id"] in seen:
            raise CorpusError(f"{path}: duplicate note_id {raw['note_id']!r}")
        seen.add(raw["note_id"])
        notes.append(
            Note(
                patient_id=raw["patient_id"],
                note_id=raw["note_id"],
                date=_parse_date(raw.get("date")),
                raw_text=raw.get("raw_text", ""),
                cleaned_text=raw.get("cleaned_text"),
            )
        )
    return notes


def load_corpus(path: str | Path) -> list[Note]:
    """Load notes from either a notes JSON file or a raw manifest."""
    path = Path(path)
    if path.is_file() and path.suffix == ".json":
        return read_notes(path)
    return read_manifest(path)

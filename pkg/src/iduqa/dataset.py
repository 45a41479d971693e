"""QA sample assembly, patient-level splitting and dataset serialization.

The on-disk layout follows the usual extractive-QA interchange shape::

    {"version": "1.0.0",
     "data": [{"note_id": ..., "patient_id": ..., "context": ...,
               "qas": [{"id": ..., "question": ..., "query_group": ...,
                        "answers": [{"text": ..., "answer_start": ...}],
                        "is_impossible": false}]}]}
"""

from __future__ import annotations

import json
import logging
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Note
from .extract import AnnotatedAnswer, LexiconBundle, extract_note
from .lexicon import QuestionBank

logger = logging.getLogger(__name__)

DATASET_VERSION = "1.0.0"


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Answer:
    text: str
    answer_start: int


@dataclass(frozen=True)
class QASample:
    id: str
    note_id: str
    question: str
    query_group_id: str
    answers: tuple[Answer, ...] = ()
    is_impossible: bool = False

    @property
    def gold(self) -> str:
        return self.answers[0].text if self.answers else ""


@dataclass(frozen=True)
class DatasetNote:
    note_id: str
    patient_id: str
    context: str


@dataclass
class Dataset:
    notes: list[DatasetNote] = field(default_factory=list)
    samples: list[QASample] = field(default_factory=list)
    version: str = DATASET_VERSION

    def __post_init__(self):
        order = {n.note_id: k for k, n in enumerate(self.notes)}
        # canonical order: grouped by note, stable within a note
        self.samples = sorted(self.samples, key=lambda s: order.get(s.note_id, len(order)))

    def note(self, note_id: str) -> DatasetNote:
        return self._by_id()[note_id]

    def context(self, sample: QASample) -> str:
        return self._by_id()[sample.note_id].context

    def _by_id(self) -> dict[str, DatasetNote]:
        index = getattr(self, "_index", None)
        if index is None or len(index) != len(self.notes):
            index = self._index = {n.note_id: n for n in self.notes}
        return index

    @property
    def patient_ids(self) -> set[str]:
        return {n.patient_id for n in self.notes}

    def validate(self) -> None:
        by_id: dict[str, DatasetNote] = {}
        for n in self.notes:
            if n.note_id in by_id:
                raise DatasetError(f"duplicate note_id {n.note_id!r}")
            by_id[n.note_id] = n
        seen: set[str] = set()
        for s in self.samples:
            if s.id in seen:
                raise DatasetError(f"sample {s.id}: duplicate id")
            seen.add(s.id)
            if s.note_id not in by_id:
                raise DatasetError(f"sample {s.id}: unknown note_id {s.note_id!r}")
            context = by_id[s.note_id].context
            if s.is_impossible and s.answers:
                raise DatasetError(f"sample {s.id}: impossible sample carries answers")
            if not s.is_impossible and not s.answers:
                raise DatasetError(f"sample {s.id}: answerable sample has no answers")
            for a in s.answers:
                if context[a.answer_start : a.answer_start + len(a.text)] != a.text:
                    raise DatasetError(f"sample {s.id}: answer {a.text!r} not found at offset {a.answer_start}")

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.version, self.notes, self.samples) == (other.version, other.notes, other.samples)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Pairing:
    """How many question variants to pair with each (answer, group)."""

    k: int | None = None  # None: all variants
    seed: int = 0

    @classmethod
    def parse(cls, spec: str, seed: int = 0) -> Pairing:
        if spec in ("all", "all_variants"):
            return cls(None, seed)
        if spec.startswith("sample:"):
            return cls(int(spec.split(":", 1)[1]), seed)
        raise ValueError(f"unknown pairing {spec!r}; use 'all' or 'sample:K'")


ALL_VARIANTS = Pairing()


def _select(questions: Sequence[str], pairing: Pairing, key: str) -> list[tuple[int, str]]:
    indexed = list(enumerate(questions))
    if pairing.k is None or pairing.k >= len(indexed):
        return indexed
    rng = random.Random(f"{pairing.seed}:{key}")
    return sorted(rng.sample(indexed, pairing.k))


def assemble_samples(
    note: Note,
    answers: Sequence[AnnotatedAnswer],
    bank: QuestionBank,
    pairing: Pairing = ALL_VARIANTS,
) -> list[QASample]:
    """Pair every answer with the question variants of each of its groups."""
    context = note.text
    samples = []
    for ai, answer in enumerate(answers):
        if context[answer.start : answer.end] != answer.text:
            raise DatasetError(f"note {note.note_id}: answer {ai} offsets do not reproduce its text")
        for gid in answer.query_group_ids:
            for qi, question in _select(bank.questions[gid], pairing, f"{note.note_id}:{ai}:{gid}"):
                samples.append(
                    QASample(
                        id=f"{note.note_id}-a{ai}-{gid}-q{qi}",
                        note_id=note.note_id,
                        question=question,
                        query_group_id=gid,
                        answers=(Answer(answer.text, answer.start),),
                    )
                )
    return samples


def make_no_answer_samples(note: Note, bundle: LexiconBundle, group_id: str | None = None) -> list[QASample]:
    """Impossible samples for a note without IDU keywords: one per
    existence-of-IDU question, each with an empty answer list."""
    if bundle.matchers.keywords.search(note.text):
        raise DatasetError(f"note {note.note_id} contains IDU keywords; it cannot yield no-answer samples")
    group_id = group_id or bundle.lexicon.default_group_id
    return [
        QASample(
            id=f"{note.note_id}-na-q{qi}",
            note_id=note.note_id,
            question=question,
            query_group_id=group_id,
            is_impossible=True,
        )
        for qi, question in enumerate(bundle.bank.questions[group_id])
    ]


def build_dataset(
    notes: Iterable[Note],
    bundle: LexiconBundle,
    pairing: Pairing = ALL_VARIANTS,
    no_answer_notes: Iterable[Note] = (),
) -> Dataset:
    """Annotate cleaned keyword-bearing notes and pair answers with questions.

    Notes that yield no answers are skipped. ``no_answer_notes`` are added as
    contexts carrying only impossible samples.
    """
    ds_notes, samples = [], []
    for note in notes:
        answers = extract_note(note, bundle)
        if not answers:
            logger.debug("note %s produced no answers", note.note_id)
            continue
        ds_notes.append(DatasetNote(note.note_id, note.patient_id, note.text))
        samples.extend(assemble_samples(note, answers, bundle.bank, pairing))
    for note in no_answer_notes:
        ds_notes.append(DatasetNote(note.note_id, note.patient_id, note.text))
        samples.extend(make_no_answer_samples(note, bundle))
    dataset = Dataset(ds_notes, samples)
    dataset.validate()
    return dataset


# ---------------------------------------------------------------------------
# splitting
# ---------------------------------------------------------------------------


@dataclass
class Split:
    train: Dataset
    dev: Dataset
    test: Dataset
    seed: int
    ratios: tuple[float, float, float]

    def parts(self) -> dict[str, Dataset]:
        return {"train": self.train, "dev": self.dev, "test": self.test}


def _subset(dataset: Dataset, patients: set[str]) -> Dataset:
    notes = [n for n in dataset.notes if n.patient_id in patients]
    keep = {n.note_id for n in notes}
    return Dataset(notes, [s for s in dataset.samples if s.note_id in keep], dataset.version)


def split_by_patient(dataset: Dataset, ratios: Sequence[float] = (0.8, 0.1, 0.1), seed: int = 0) -> Split:
    """Shuffle patients with a seeded RNG and cut at cumulative ratios of the
    patient count; each patient's notes and samples land in one part."""
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise DatasetError(f"ratios must be three positive fractions summing to 1, got {ratios}")
    patients = sorted(dataset.patient_ids)
    n = len(patients)
    if n < 3:
        raise DatasetError(f"need at least 3 patients to split, got {n}")
    random.Random(seed).shuffle(patients)
    c1 = math.floor(n * ratios[0] + 0.5)
    c2 = math.floor(n * (ratios[0] + ratios[1]) + 0.5)
    return Split(
        train=_subset(dataset, set(patients[:c1])),
        dev=_subset(dataset, set(patients[c1:c2])),
        test=_subset(dataset, set(patients[c2:])),
        seed=seed,
        ratios=ratios,
    )


# ---------------------------------------------------------------------------
# io
# ---------------------------------------------------------------------------


def dataset_to_dict(dataset: Dataset) -> dict:
    by_note: dict[str, list[dict]] = {n.note_id: [] for n in dataset.notes}
    for s in dataset.samples:
        by_note[s.note_id].append(
            {
                "id": s.id,
                "question": s.question,
                "query_group": s.query_group_id,
                "answers": [{"text": a.text, "answer_start": a.answer_start} for a in s.answers],
                "is_impossible": s.is_impossible,
            }
        )
    return {
        "version": dataset.version,
        "data": [
            {"note_id": n.note_id, "patient_id": n.patient_id, "context": n.context, "qas": by_note[n.note_id]}
            for n in dataset.notes
        ],
    }


def dataset_from_dict(doc: dict) -> Dataset:
    if not isinstance(doc, dict) or "version" not in doc:
        raise DatasetError("dataset file is missing the 'version' field")
    if "data" not in doc or not isinstance(doc["data"], list):
        raise DatasetError("dataset file is missing the 'data' list")
    notes, samples = [], []
    for k, entry in enumerate(doc["data"]):
        try:
            notes.append(DatasetNote(entry["note_id"], entry["patient_id"], entry["context"]))
            for qa in entry.get("qas", []):
                samples.append(
                    QASample(
                        id=qa["id"],
                        note_id=entry["note_id"],
                        question=qa["question"],
                        query_group_id=qa["query_group"],
                        answers=tuple(Answer(a["text"], int(a["answer_start"])) for a in qa.get("answers", [])),
                        is_impossible=bool(qa.get("is_impossible", False)),
                    )
                )
        except KeyError as exc:
            raise DatasetError(f"data[{k}]: missing field {exc}") from None
    dataset = Dataset(notes, samples, doc["version"])
    dataset.validate()
    return dataset


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    text = json.dumps(dataset_to_dict(dataset), indent=1, ensure_ascii=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_dataset(path: str | Path) -> Dataset:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: invalid JSON ({exc})") from None
    return dataset_from_dict(doc)


def group_histogram(dataset: Dataset, query_groups: Sequence[str] = ()) -> dict[str, int]:
    """Sample count per query group; listed groups appear even with zero count."""
    counts = Counter(s.query_group_id for s in dataset.samples)
    out = {gid: counts.get(gid, 0) for gid in query_groups}
    for gid, c in counts.items():
        out.setdefault(gid, c)
    return out

"""Seeded generator of synthetic progress notes.

Notes are stitched from small sentence pools: neutral clinical filler that
carries no IDU keyword, and IDU sentences covering every query group and
trigger-phrase class. Useful for tests and demos; no real patient text.
"""

from __future__ import annotations

import datetime as dt
import random
from pathlib import Path

from .corpus import Note

FILLER = (
    "Pt seen and examined at bedside.",
    "Vitals stable, afebrile overnight.",
    "Lungs clear to auscultation bilaterally.",
    "Abdomen soft, nontender, nondistended.",
    "Tolerating diet without nausea.",
    "Reports good sleep and appetite.",
    "Labs reviewed, creatinine at baseline.",
    "Continue current medications.",
    "Hcv rna pending, genotype 1a.",
    "Follow up in clinic in 4 weeks.",
    "Discussed smoking cessation, pt precontemplative.",
    "Ambulating independently in hallway.",
    "Pain controlled with acetaminophen.",
    "Social work following for housing.",
    "Lives with sister, works part time.",
    "Quit smoking 10 y ago, occ etoh.",
    "Family hx: mother with diabetes.",
    "Skin warm and dry, no rashes.",
    "Mood euthymic, affect congruent.",
    "Plan discussed with attending.",
)

IDU = (
    "Denies ivdu.",
    "Pt denies any history of ivdu.",
    "No history of idu.",
    "Has h/o ivdu but none now, went to rehab.",
    "Last ivdu was 10 days ago, snorts cocaine occasionally.",
    "Oud (iv heroin) on methadone maintenance, recent heroin relapse.",
    "Scars and old track marks noted on mid arm.",
    "Multiple track marks over extremities.",
    "Recent ivdu with meth and heroin.",
    "H/o sharing needles with gf.",
    "Active iv drug user up to day of admission.",
    "Uses speedball occasionally.",
    "Injects heroin daily.",
    "Diffuse scarring from skin popping on lower extremities.",
    "Patient participates in clean syringe program.",
    "Was counseled on safer injection.",
    "Past ivdu, 2 years ago.",
    "Remote history of intravenous drug use, quit 2010.",
    "Iv drug user.",
    "No ivdu, snorts heroin intermittently.",
    "Substance abuse including ivdu.",
    "Last used iv meth 2 years ago.",
)


def _text(rng: random.Random, with_idu: bool, n_sentences: int) -> str:
    sentences = rng.sample(FILLER, n_sentences)
    if with_idu:
        for _ in range(rng.randint(1, 2)):
            sentences.insert(rng.randrange(len(sentences) + 1), rng.choice(IDU))
    lines, line = [], []
    for s in sentences:
        line.append(s)
        if rng.random() < 0.35:
            lines.append(" ".join(line))
            line = []
    if line:
        lines.append(" ".join(line))
    return "\n".join(lines)


def generate_notes(
    n_patients: int,
    notes_per_patient: int | tuple[int, int] = (1, 3),
    *,
    seed: int = 0,
    idu_fraction: float = 1.0,
    sentences: tuple[int, int] = (4, 12),
    prefix: str = "syn",
) -> list[Note]:
    """Raw (uncleaned) synthetic notes.

    ``idu_fraction`` is the share of notes that get one or two IDU
    sentences; the rest are pure filler and contain no lexicon keyword.
    """
    rng = random.Random(seed)
    lo, hi = (notes_per_patient, notes_per_patient) if isinstance(notes_per_patient, int) else notes_per_patient
    base = dt.date(2022, 1, 1)
    notes = []
    for p in range(n_patients):
        pid = f"{prefix}-p{p:04d}"
        for k in range(rng.randint(lo, hi)):
            text = _text(rng, rng.random() < idu_fraction, rng.randint(*sentences))
            date = base + dt.timedelta(days=rng.randrange(31))
            notes.append(Note(pid, f"{pid}-n{k}", date, text))
    return notes


def write_manifest(notes: list[Note], directory: str | Path) -> Path:
    """Write notes as ``manifest.csv`` plus one text file per note."""
    import csv

    root = Path(directory)
    (root / "notes").mkdir(parents=True, exist_ok=True)
    manifest = root / "manifest.csv"
    with manifest.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["note_id", "patient_id", "date", "path"])
        for note in notes:
            rel = f"notes/{note.note_id}.txt"
            (root / rel).write_text(note.raw_text, encoding="utf-8")
            writer.writerow([note.note_id, note.patient_id, note.date.isoformat() if note.date else "", rel])
    return manifest


def bundled_corpus_path() -> Path:
    from importlib import resources

    return Path(str(resources.files("iduqa") / "data" / "synthetic"))

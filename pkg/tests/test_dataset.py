import json

import pytest

from iduqa.corpus import Note, clean_notes, filter_by_keywords
from iduqa.dataset import (
    Answer,
    Dataset,
    DatasetError,
    DatasetNote,
    Pairing,
    QASample,
    assemble_samples,
    build_dataset,
    dataset_from_dict,
    dataset_to_dict,
    group_histogram,
    make_no_answer_samples,
    read_dataset,
    split_by_patient,
    write_dataset,
)
from iduqa.extract import extract_note
from iduqa.synthetic import generate_notes


def test_verbatim_and_unique_ids(bundled_dataset):
    assert len(bundled_dataset.samples) >= 400
    assert len({s.id for s in bundled_dataset.samples}) == len(bundled_dataset.samples)
    for s in bundled_dataset.samples:
        context = bundled_dataset.context(s)
        for a in s.answers:
            assert context[a.answer_start : a.answer_start + len(a.text)] == a.text


def test_pairing_count(bundle, bundled_notes):
    note = next(n for n in bundled_notes if len(extract_note(n, bundle)) >= 2)
    answers = extract_note(note, bundle)
    samples = assemble_samples(note, answers, bundle.bank)
    expected = sum(len(bundle.bank.questions[g]) for a in answers for g in a.query_group_ids)
    assert len(samples) == expected
    assert assemble_samples(note, [], bundle.bank) == []


def test_pairing_sample_k(bundle, bundled_notes):
    note = bundled_notes[0]
    answers = extract_note(note, bundle)
    samples = assemble_samples(note, answers, bundle.bank, Pairing(2, seed=5))
    assert len(samples) == 2 * sum(len(a.query_group_ids) for a in answers)
    assert samples == assemble_samples(note, answers, bundle.bank, Pairing(2, seed=5))
    assert Pairing.parse("sample:3", 1) == Pairing(3, 1)
    assert Pairing.parse("all") == Pairing()
    with pytest.raises(ValueError):
        Pairing.parse("some")


def test_corrupt_answer_offsets(bundle):
    note = Note("p", "n", None, "denies ivdu", "denies ivdu")
    (answer,) = extract_note(note, bundle)
    from dataclasses import replace

    with pytest.raises(DatasetError):
        assemble_samples(note, [replace(answer, start=answer.start + 1)], bundle.bank)


def test_no_answer_samples(bundle):
    note = Note("p", "n", None, "lives alone", "lives alone")
    samples = make_no_answer_samples(note, bundle)
    assert len(samples) == len(bundle.bank.questions["existence_of_idu"])
    assert all(s.is_impossible and s.answers == () for s in samples)
    with pytest.raises(DatasetError):
        make_no_answer_samples(Note("p", "m", None, "denies ivdu", "denies ivdu"), bundle)


def test_histogram(bundled_dataset, bundle):
    hist = group_histogram(bundled_dataset, bundle.lexicon.query_group_ids)
    assert sum(hist.values()) == len(bundled_dataset.samples)
    assert max(hist, key=hist.get) == "existence_of_idu"
    assert group_histogram(Dataset(), ["a", "b"]) == {"a": 0, "b": 0}


def _synthetic_dataset(bundle, n_patients=50, seed=0):
    notes = clean_notes(generate_notes(n_patients, seed=seed))
    kept, no_kw = filter_by_keywords(notes, bundle.matchers)
    return build_dataset(kept, bundle, no_answer_notes=no_kw)


@pytest.mark.parametrize("seed", range(20))
def test_split_leakage(bundle, seed):
    ds = _synthetic_dataset(bundle)
    split = split_by_patient(ds, (0.8, 0.1, 0.1), seed)
    parts = [p.patient_ids for p in split.parts().values()]
    assert not (parts[0] & parts[1] or parts[0] & parts[2] or parts[1] & parts[2])
    assert [len(p) for p in parts] == [40, 5, 5]
    assert sum(len(p.samples) for p in split.parts().values()) == len(ds.samples)
    for part in split.parts().values():
        part.validate()


def test_split_counts_and_determinism(bundle):
    ds = _synthetic_dataset(bundle, n_patients=10)
    split = split_by_patient(ds, seed=3)
    assert [len(p.patient_ids) for p in split.parts().values()] == [8, 1, 1]
    assert split_by_patient(ds, seed=3) == split


@pytest.mark.parametrize("ratios", [(0.5, 0.5), (0.8, 0.1, 0.2), (1.0, 0.0, 0.0)])
def test_split_bad_ratios(bundled_dataset, ratios):
    with pytest.raises(DatasetError):
        split_by_patient(bundled_dataset, ratios, 0)


def test_split_too_few_patients():
    ds = Dataset([DatasetNote("n0", "p0", "x"), DatasetNote("n1", "p1", "y")], [])
    with pytest.raises(DatasetError, match="3 patients"):
        split_by_patient(ds, seed=0)


def test_round_trip(bundled_dataset, tmp_path):
    path = tmp_path / "ds.json"
    write_dataset(bundled_dataset, path)
    assert read_dataset(path) == bundled_dataset
    assert dataset_from_dict(json.loads(path.read_text())) == bundled_dataset


def test_validation_errors(bundled_dataset):
    doc = dataset_to_dict(bundled_dataset)
    entry = next(e for e in doc["data"] if any(q["answers"] for q in e["qas"]))
    qa = next(q for q in entry["qas"] if q["answers"])
    qa["answers"][0]["answer_start"] += 1
    with pytest.raises(DatasetError, match=qa["id"]):
        dataset_from_dict(doc)
    with pytest.raises(DatasetError, match="version"):
        dataset_from_dict({"data": []})
    dup = Dataset(
        [DatasetNote("n0", "p0", "ivdu")],
        [QASample("s", "n0", "q?", "g", (Answer("ivdu", 0),)), QASample("s", "n0", "q?", "g", (Answer("ivdu", 0),))],
    )
    with pytest.raises(DatasetError, match="duplicate"):
        dup.validate()
    orphan = Dataset([], [QASample("s", "nx", "q?", "g", (Answer("a", 0),))])
    with pytest.raises(DatasetError, match="unknown note_id"):
        orphan.validate()

from iduqa.corpus import clean_notes, filter_by_keywords, read_manifest
from iduqa.extract import extract_note
from iduqa.synthetic import FILLER, IDU, generate_notes, write_manifest


def test_deterministic_and_shaped():
    a = generate_notes(10, (1, 3), seed=4)
    assert a == generate_notes(10, (1, 3), seed=4)
    assert a != generate_notes(10, (1, 3), seed=5)
    assert len({n.patient_id for n in a}) == 10
    assert len({n.note_id for n in a}) == len(a)


def test_filler_is_keyword_free(matchers):
    assert not any(matchers.keywords.search(s) for s in FILLER)
    assert all(matchers.keywords.search(s) for s in IDU)


def test_idu_fraction(matchers):
    notes = clean_notes(generate_notes(30, 1, seed=0, idu_fraction=0.0))
    kept, dropped = filter_by_keywords(notes, matchers)
    assert kept == [] and len(dropped) == 30
    notes = clean_notes(generate_notes(30, 1, seed=0, idu_fraction=1.0))
    assert len(filter_by_keywords(notes, matchers)[0]) == 30


def test_idu_sentences_extract(bundle):
    for s in IDU:
        assert extract_note(s, bundle), s


def test_manifest_round_trip(tmp_path):
    notes = generate_notes(3, 2, seed=1)
    write_manifest(notes, tmp_path)
    assert read_manifest(tmp_path) == notes

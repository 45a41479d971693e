import datetime as dt

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iduqa.corpus import (
    CorpusError,
    Note,
    clean_note,
    corpus_stats,
    drop_length_outliers,
    filter_by_keywords,
    length_fence,
    load_corpus,
    read_manifest,
    read_notes,
    write_notes,
)


def _note(text, k=0, patient="p0"):
    return Note(patient, f"n{k}", dt.date(2022, 1, 1), text, clean_note(text))


@pytest.mark.parametrize(
    "raw, cleaned",
    [
        ("social hx:\ndenies ivdu", "social hx: denies ivdu"),
        ("plan____follow up\n\n\nend", "plan follow up\nend"),
        ("", ""),
        ("a  \t b", "a b"),
        ("wait...what -- ok", "wait what ok"),
        ("line one,\nline two", "line one, line two"),
        ("crlf\r\n\r\nnext", "crlf\nnext"),
        ("single. period - dash _ under", "single. period - dash _ under"),
    ],
)
def test_clean_note_examples(raw, cleaned):
    assert clean_note(raw) == cleaned


_alphabet = st.sampled_from(list("ab .-_\n\t,:;'\"") + ["\r", "xy"])


@settings(max_examples=300, deadline=None)
@given(st.lists(_alphabet, max_size=40).map("".join))
def test_clean_note_idempotent(text):
    once = clean_note(text)
    assert clean_note(once) == once
    assert "\n\n" not in once and ".." not in once and "--" not in once and "__" not in once


def test_filter_partition(matchers):
    notes = [
        _note("uses speedball occasionally", 0),
        _note("quit smoking 10y ago, occ etoh", 1),
        _note("h/o skin popping", 2),
    ]
    kept, dropped = filter_by_keywords(notes, matchers)
    assert [n.note_id for n in kept] == ["n0", "n2"]
    assert [n.note_id for n in dropped] == ["n1"]
    assert all(matchers.keywords.search(n.text) for n in kept)
    assert not any(matchers.keywords.search(n.text) for n in dropped)


def test_outliers_identical_lengths():
    notes = [_note("w " * 5, k) for k in range(10)]
    kept, dropped = drop_length_outliers(notes)
    assert len(kept) == 10 and dropped == []


def test_outliers_single_long_note():
    notes = [_note("w " * 100, k) for k in range(10)] + [_note("w " * 10000, 10)]
    assert length_fence([100] * 10 + [10000]) == 100
    kept, dropped = drop_length_outliers(notes)
    assert [n.note_id for n in dropped] == ["n10"]
    assert len(kept) == 10


def test_outliers_small_and_empty():
    assert drop_length_outliers([]) == ([], [])
    few = [_note("w", 0), _note("w " * 1000, 1)]
    assert drop_length_outliers(few) == (few, [])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 300), min_size=4, max_size=30))
def test_outliers_keep_median_note(lengths):
    notes = [_note("w " * n, k) for k, n in enumerate(lengths)]
    kept, dropped = drop_length_outliers(notes)
    assert len(kept) + len(dropped) == len(notes)
    ordered = sorted(lengths)
    median_len = ordered[(len(ordered) - 1) // 2]
    assert any(len(n.text.split()) == median_len for n in kept)


def test_stats_examples():
    one = corpus_stats([_note("one two three four five six seven")])
    assert (one.note_length_words.avg, one.note_length_words.median, one.note_length_words.max) == (7, 7, 7)
    two = corpus_stats([_note("a b c d", 0), _note("a b c d e f g h", 1)])
    assert two.note_length_words.avg == 6.0 and two.note_length_words.median == 6 and two.note_length_words.max == 8
    empty = corpus_stats([])
    assert empty.note_count == 0 and empty.warnings


def test_stats_over_dataset(bundled_dataset):
    notes = [Note(n.patient_id, n.note_id, None, n.context, n.context) for n in bundled_dataset.notes]
    stats = corpus_stats(notes, bundled_dataset)
    assert stats.sample_count == len(bundled_dataset.samples)
    assert stats.qa_per_note_avg == round(len(bundled_dataset.samples) / len(notes), 2)
    assert stats.question_length_words.max <= 14
    assert stats.answer_length_words.median <= stats.answer_length_words.max


def test_manifest_inline_tsv(tmp_path):
    path = tmp_path / "notes.tsv"
    path.write_text("note_id\tpatient_id\tdate\ttext\nn1\tp1\t2021-03-04\tdenies ivdu\n")
    notes = read_manifest(path)
    assert notes == [Note("p1", "n1", dt.date(2021, 3, 4), "denies ivdu")]


@pytest.mark.parametrize(
    "content, message",
    [
        ("note_id,patient_id,text\nn1,p1,x\n", "columns"),
        ("note_id,patient_id,date,text\nn1,p1,2021-01-01,x\nn1,p1,2021-01-01,y\n", "duplicate"),
        ("note_id,patient_id,date,text\nn1,p1,yesterday,x\n", "date"),
        ("note_id,patient_id,date,path\nn1,p1,2021-01-01,missing.txt\n", "not found"),
    ],
)
def test_manifest_errors(tmp_path, content, message):
    path = tmp_path / "m.csv"
    path.write_text(content)
    with pytest.raises(CorpusError, match=message):
        read_manifest(path)


def test_notes_round_trip(tmp_path, bundled_notes):
    path = tmp_path / "notes.json"
    write_notes(bundled_notes, path)
    assert read_notes(path) == bundled_notes
    assert load_corpus(path) == bundled_notes


def test_bundled_corpus_shape(bundled_notes, matchers):
    assert len(bundled_notes) >= 40
    kept, dropped = filter_by_keywords(bundled_notes, matchers)
    assert dropped, "corpus ships keyword-free notes"
    _, outliers = drop_length_outliers(kept)
    assert len(outliers) == 1

"""Acceptance suite: one check per acceptance criterion.

Each check returns a short detail string or raises AssertionError. Under
pytest every criterion prints one ``PASS``/``FAIL`` line; running this file
directly prints all eleven lines and exits nonzero on any failure.
"""

import contextlib
import filecmp
import io
import random
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from _oracle import ref_em, ref_f1, ref_pr  # noqa: E402
from iduqa.chunker import ChunkPolicy, chunk_context, tokenize  # noqa: E402
from iduqa.cli import main  # noqa: E402
from iduqa.corpus import clean_note, clean_notes, drop_length_outliers, filter_by_keywords, read_manifest  # noqa: E402
from iduqa.dataset import Dataset, DatasetNote, build_dataset, make_no_answer_samples, split_by_patient  # noqa: E402
from iduqa.evaluation import bootstrap_ci, em_score, perfect_recall_score, score_predictions, token_f1  # noqa: E402
from iduqa.extract import (  # noqa: E402
    LexiconBundle,
    answer_question,
    map_query_groups,
    parse_answer,
    sentence_keyword_hits,
    sentencize,
)
from iduqa.synthetic import bundled_corpus_path, generate_notes  # noqa: E402

BUNDLE = LexiconBundle.from_lexicon()

PARSING_FIXTURES = [
    (
        "65y/o m w cardiac procedures, or recent surgical procedures, admits to drinking alcohol daily for the "
        "past 10 years, denies any history of ivdu",
        "denies any history of ivdu",
    ),
    ("pt smokes cannabis, has a h/o ivdu but none now, went to rehab 2070", "h/o ivdu but none now, went to rehab 2070"),
    ("last ivdu was 10 days ago, snorts cocaine occasionally", "last ivdu was 10 days ago"),
    (
        "200m w niddm, htn, bipolar disorder and oud (iv heroin) on methadone maintenance, recent heroin relapse",
        "oud (iv heroin) on methadone maintenance, recent heroin relapse",
    ),
    (
        "comments: extremities: mid line in upper right arm, scars and old track marks noted on mid arm",
        "old track marks noted on mid arm",
    ),
]

MAPPING_FIXTURES = [
    ("recent ivdu with meth and heroin", {"active_historical_use", "drug_names"}),
    ("denies any ivdu for many years", {"existence_of_idu"}),
    ("iv drug user", {"existence_of_idu"}),
]

WORKED_NOTE = (
    "pt X, 200 yrs old . . . he has a history of smoking with 50 pack years, quit 10 years ago . . . "
    "social ethanol user . . . no history of idu . . . remote history of marijuana use . . . family hx: . . . "
    "physical exam: . . . provider: name."
)


def _bundled_dataset() -> Dataset:
    notes = clean_notes(read_manifest(bundled_corpus_path()))
    kept, no_keyword = filter_by_keywords(notes, BUNDLE.matchers)
    kept, _ = drop_length_outliers(kept)
    return build_dataset(kept, BUNDLE, no_answer_notes=no_keyword)


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


def check_1():
    start = time.perf_counter()
    for sentence_text, expected in PARSING_FIXTURES:
        (sentence,) = sentencize(sentence_text)
        got = parse_answer(sentence, sentence_keyword_hits(sentence, BUNDLE.matchers), BUNDLE.matchers).text
        assert got == expected, f"{got!r} != {expected!r}"
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"runtime {elapsed:.3f}s"
    return f"5/5 parsing fixtures exact, {elapsed * 1000:.1f} ms"


def check_2():
    for answer, groups in MAPPING_FIXTURES:
        got = map_query_groups(answer, BUNDLE.matchers)
        assert set(got) == groups and len(got) == len(groups), f"{answer!r} -> {got}"
    return "3/3 mapping fixtures exact"


def check_3():
    result = answer_question(clean_note(WORKED_NOTE), "Does the patient have a history of IDU?", BUNDLE)
    assert result.texts == ["no history of idu"], result.texts
    return 'answer_question -> ["no history of idu"]'


def check_4():
    dataset = _bundled_dataset()
    n = len(dataset.samples)
    assert n >= 400, f"only {n} samples"
    violations = 0
    for s in dataset.samples:
        context = dataset.context(s)
        violations += sum(context[a.answer_start : a.answer_start + len(a.text)] != a.text for a in s.answers)
    assert violations == 0, f"{violations} offset violations"
    return f"{n} samples, 0 violations"


VOCAB = ["denies", "ivdu", "IVDU", "any", "h/o", "heroin,", "(iv", "heroin)", "daily.", "-", "a", "the"]


def _random_text(rng):
    return rng.choice(["", " "]) + " ".join(rng.choice(VOCAB) for _ in range(rng.randint(0, 7))) + rng.choice(["", " "])


def check_5():
    rng = random.Random(2024)
    pairs = [("", ""), ("", "ivdu"), ("ivdu", ""), (" ", "")]
    pairs += [(_random_text(rng), _random_text(rng)) for _ in range(1000 - len(pairs))]
    start = time.perf_counter()
    lib = [(em_score(p, g), perfect_recall_score(p, g), token_f1(p, g).f1) for p, g in pairs]
    elapsed = time.perf_counter() - start
    ref = [(ref_em(p, g), ref_pr(p, g), ref_f1(p, g)) for p, g in pairs]
    mismatches = [pairs[k] for k, (a, b) in enumerate(zip(lib, ref)) if a != b]
    assert not mismatches, f"{len(mismatches)} mismatches, e.g. {mismatches[0]}"
    assert elapsed < 5.0, f"runtime {elapsed:.3f}s"
    return f"1000 pairs bit-identical to the reference, {elapsed * 1000:.1f} ms"


def check_6():
    f = token_f1("denies ivdu", "denies any ivdu")
    assert round(f.f1, 4) == 0.8 and (f.tp, f.fp, f.fn) == (2, 0, 1), f
    return f"F1 = {f.f1:.4f} (tp 2, fp 0, fn 1)"


def check_7():
    policy = ChunkPolicy(512, 128, 20, 100)
    context = " ".join(f"t{k}" for k in range(700))
    chunks = chunk_context("s", context, " ".join(["q"] * 20), None, policy)
    starts = [c.token_range[0] for c in chunks]
    assert starts == [0, 128, 256], starts
    assert policy.capacity(20) == 492
    rng = random.Random(7)
    for case in range(200):
        n = rng.randint(1, 2000)
        q_len = rng.randint(1, 25)
        text = " ".join(f"t{k}" for k in range(n))
        tokens = tokenize(text)
        a_len = rng.randint(1, min(policy.max_answer_tokens, n))
        a0 = rng.randint(0, n - a_len)
        answer = (tokens[a0].start, tokens[a0 + a_len - 1].end)
        windows = chunk_context(f"c{case}", text, " ".join(["q"] * q_len), answer, policy)
        assert any(w.is_answer_present for w in windows), f"case {case}: answer lost"
    return "windows start at {0, 128, 256}; capacity 492; 200/200 answers preserved"


def check_8():
    notes = clean_notes(generate_notes(50, (1, 3), seed=8))
    kept, no_keyword = filter_by_keywords(notes, BUNDLE.matchers)
    dataset = build_dataset(kept, BUNDLE, no_answer_notes=no_keyword)
    assert len(dataset.patient_ids) == 50
    for seed in range(100):
        split = split_by_patient(dataset, (0.8, 0.1, 0.1), seed)
        a, b, c = (p.patient_ids for p in split.parts().values())
        assert not (a & b or a & c or b & c), f"seed {seed}: leakage"
        assert (len(a), len(b), len(c)) == (40, 5, 5), f"seed {seed}: {len(a)}/{len(b)}/{len(c)}"
    return "100 splits, 0 shared patients, 40/5/5 patients each"


def check_9():
    notes = clean_notes(generate_notes(50, 1, seed=9, idu_fraction=0.0))
    assert len(notes) == 50
    assert not any(BUNDLE.matchers.keywords.search(n.text) for n in notes)
    questions = BUNDLE.bank.questions["existence_of_idu"]
    nonempty = sum(bool(answer_question(n, q, BUNDLE).texts) for n in notes for q in questions)
    assert nonempty == 0, f"{nonempty} non-empty answers"
    dataset = Dataset(
        [DatasetNote(n.note_id, n.patient_id, n.text) for n in notes],
        [s for n in notes for s in make_no_answer_samples(n, BUNDLE)],
    )
    preds = {s.id: answer_question(dataset.context(s), s.question, BUNDLE).best for s in dataset.samples}
    report = score_predictions(dataset, preds)
    assert report.no_answer_accuracy == 100.0 and report.aggregates["em"] == 100.0
    return f"{len(dataset.samples)} existence questions on 50 notes: 100% empty, no-answer EM 100.00"


def check_10():
    const = bootstrap_ci([1.0] * 500, seed=0)
    assert const.width == 0.0 and const.point == 1.0, const
    scores = np.random.default_rng(5).integers(0, 2, 300)
    assert bootstrap_ci(scores, seed=42) == bootstrap_ci(scores, seed=42)
    widths = []
    for trial in range(10):
        rng = np.random.default_rng(1000 + trial)
        small = bootstrap_ci(rng.integers(0, 2, 1000), seed=trial)
        large = bootstrap_ci(rng.integers(0, 2, 4000), seed=trial)
        assert large.width < small.width, f"trial {trial}: {large.width} >= {small.width}"
        widths.append((small.width, large.width))
    mean_small = np.mean([w[0] for w in widths])
    mean_large = np.mean([w[1] for w in widths])
    return f"zero width on constants, seeded repeat identical, mean width {mean_small:.4f} -> {mean_large:.4f}"


def check_11():
    with tempfile.TemporaryDirectory() as tmp:
        runs = [Path(tmp) / "run1", Path(tmp) / "run2"]
        start = time.perf_counter()
        for out in runs:
            with contextlib.redirect_stdout(io.StringIO()):
                code = main(["--seed", "7", "pipeline", "all", "--out", str(out)])
            assert code == 0, f"exit code {code}"
        elapsed = time.perf_counter() - start
        files = sorted(p.relative_to(runs[0]) for p in runs[0].rglob("*") if p.is_file())
        assert Path("dataset.json") in files and Path("split/test.json") in files and Path("report/report.md") in files
        _, mismatch, errors = filecmp.cmpfiles(runs[0], runs[1], [str(f) for f in files], shallow=False)
        assert not mismatch and not errors, f"differing files: {mismatch + errors}"
    assert elapsed < 60, f"runtime {elapsed:.1f}s"
    return f"{len(files)} artifacts byte-identical across two runs, {elapsed:.2f}s total"


CHECKS = {k: globals()[f"check_{k}"] for k in range(1, 12)}


def _run(k: int) -> tuple[bool, str]:
    try:
        return True, f"criterion {k:2d}: PASS  {CHECKS[k]()}"
    except AssertionError as exc:
        return False, f"criterion {k:2d}: FAIL  {exc}"


@pytest.mark.parametrize("k", list(CHECKS))
def test_criterion(k, capsys):
    ok, line = _run(k)
    with capsys.disabled():
        print(f"\n{line}", end="")
    assert ok, line


if __name__ == "__main__":
    results = [_run(k) for k in CHECKS]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)

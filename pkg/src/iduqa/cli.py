"""Command-line entry point: ``iduqa <stage> [<action>] ...``.

Every subcommand runs one pipeline stage. Results that are small (stats,
scores, query answers) go to stdout as JSON; artifacts go to ``--out``.
Failures print one JSON error record to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import yaml

from . import __version__
from .chunker import ChunkPolicy, chunk_dataset
from .corpus import (
    CorpusError,
    Note,
    clean_note,
    clean_notes,
    corpus_stats,
    drop_length_outliers,
    filter_by_keywords,
    load_corpus,
    read_notes,
    write_notes,
)
from .dataset import (
    Pairing,
    build_dataset,
    group_histogram,
    read_dataset,
    split_by_patient,
    write_dataset,
)
from .evaluation import (
    BIN_KEYS,
    METRICS,
    answer_context_ratios,
    bin_metrics,
    bootstrap_ci,
    full_report,
    per_group_metrics,
    read_predictions,
    render_report,
    report_tables,
    score_predictions,
    scores_to_records,
    write_predictions,
    _csv,
)
from .extract import LexiconBundle, answer_question, classify_question, extract_note
from .lexicon import load_lexicon

logger = logging.getLogger("iduqa")

EXIT_FAILURE = 1
EXIT_USAGE = 2


class StageError(Exception):
    """A failure tied to a stage and, when known, a file."""

    def __init__(self, message: str, path: str | Path | None = None):
        super().__init__(message)
        self.path = str(path) if path is not None else None


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D401 - argparse hook
        raise _UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    lexicon: str | None = None
    input: str | None = None
    output: str | None = None
    seed: int | None = None
    split_ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    max_sequence_tokens: int = 512
    document_stride_tokens: int = 128
    max_question_tokens: int = 20
    max_answer_tokens: int = 100
    pairing: str = "all"
    outlier_k: float = 1.5
    ci_level: float = 0.95
    ci_replicates: int = 10_000
    log_level: str = "WARNING"
    extra: dict = field(default_factory=dict, repr=False)

    @property
    def chunk_policy(self) -> ChunkPolicy:
        return ChunkPolicy(
            self.max_sequence_tokens, self.document_stride_tokens, self.max_question_tokens, self.max_answer_tokens
        )


_NESTED = {
    "chunk": {"max_sequence_tokens", "document_stride_tokens", "max_question_tokens", "max_answer_tokens"},
    "bootstrap": {"level": "ci_level", "replicates": "ci_replicates"},
}
_PATH_KEYS = ("lexicon", "input", "output")


def load_config(path: str | Path | None) -> RunConfig:
    """Read a YAML run configuration; relative paths resolve against its folder."""
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except OSError as exc:
        raise StageError(f"cannot read config: {exc.strerror}", path) from None
    except yaml.YAMLError as exc:
        raise StageError(f"invalid YAML: {exc}", path) from None
    if not isinstance(doc, dict):
        raise StageError("config must be a mapping", path)
    flat: dict[str, Any] = {}
    for key, value in doc.items():
        if key in _NESTED:
            if not isinstance(value, dict):
                raise StageError(f"config section {key!r} must be a mapping", path)
            names = _NESTED[key]
            for sub, v in value.items():
                if sub not in names:
                    raise StageError(f"unknown config key {key}.{sub}", path)
                flat[names[sub] if isinstance(names, dict) else sub] = v
        else:
            flat[key] = value
    known = {f.name for f in dataclasses.fields(RunConfig)} - {"extra"}
    unknown = sorted(set(flat) - known)
    if unknown:
        raise StageError(f"unknown config keys: {', '.join(unknown)}", path)
    for key in _PATH_KEYS:
        if flat.get(key) is not None:
            flat[key] = str((path.parent / flat[key]).resolve()) if not Path(flat[key]).is_absolute() else flat[key]
    if "split_ratios" in flat:
        flat["split_ratios"] = tuple(float(r) for r in flat["split_ratios"])
    return RunConfig(**flat)


def _opt(args, name: str, cfg: RunConfig, cfg_name: str | None = None):
    """CLI flag if given, else the config value."""
    value = getattr(args, name, None)
    return value if value is not None else getattr(cfg, cfg_name or name)


def _require(value, what: str):
    if value is None:
        raise StageError(f"missing {what}")
    return value


def _seed(args, cfg: RunConfig) -> int:
    seed = _opt(args, "seed", cfg)
    if seed is None:
        raise StageError("this stage is randomized: pass --seed or set 'seed' in the config")
    return int(seed)


def _ratios(text: str) -> tuple[float, float, float]:
    try:
        parts = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad ratios {text!r}") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("ratios need three comma-separated values")
    return parts


# ---------------------------------------------------------------------------
# io helpers
# ---------------------------------------------------------------------------


def _load(loader: Callable, path, *extra):
    try:
        return loader(path, *extra)
    except OSError as exc:
        raise StageError(exc.strerror or str(exc), getattr(exc, "filename", None) or path) from None
    except (ValueError, KeyError, TypeError, yaml.YAMLError) as exc:
        raise StageError(str(exc), path) from None


def _out_path(path) -> Path:
    path = Path(_require(path, "output path (--out)"))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StageError(f"cannot create output folder: {exc.strerror}", path.parent) from None
    return path


def _write_text(path, text: str) -> Path:
    path = _out_path(path)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise StageError(exc.strerror or str(exc), path) from None
    return path


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, ensure_ascii=False) + "\n"


def _jsonl(records) -> str:
    return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records)


def _emit(obj) -> None:
    sys.stdout.write(_dump(obj))


def _bundle(args, cfg: RunConfig) -> LexiconBundle:
    path = _opt(args, "lexicon", cfg)
    return LexiconBundle.from_lexicon(_load(load_lexicon, path))


def _cleaned_notes(path) -> list[Note]:
    notes = _load(read_notes, path)
    if any(n.cleaned_text is None for n in notes):
        raise StageError("notes are not cleaned; run 'corpus clean' first", path)
    return notes


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------


def cmd_lexicon_validate(args, cfg):
    bundle = _bundle(args, cfg)
    lex = bundle.lexicon
    return {
        "version": lex.version,
        "keyword_groups": len(lex.keyword_groups),
        "keyword_phrases": len(lex.keyword_phrases()),
        "query_groups": len(lex.query_groups),
        "questions": len(bundle.bank.all_questions()),
        "mapping_rules": len(lex.mapping_rules),
        "default_group": lex.default_group_id,
    }


def cmd_corpus_clean(args, cfg):
    src = _require(_opt(args, "input", cfg), "input (--in)")
    notes = clean_notes(_load(load_corpus, src))
    write_notes(notes, _out_path(args.out))
    return {"notes": len(notes), "out": str(args.out)}


def cmd_corpus_filter(args, cfg):
    src = _require(_opt(args, "input", cfg), "input (--in)")
    notes = _cleaned_notes(src)
    kept, no_keyword = filter_by_keywords(notes, _bundle(args, cfg).matchers)
    outliers: list[Note] = []
    if not args.keep_outliers:
        kept, outliers = drop_length_outliers(kept, _opt(args, "outlier_k", cfg))
    write_notes(kept, _out_path(args.out))
    if args.dropped:
        write_notes(no_keyword, _out_path(args.dropped))
    if args.outliers:
        write_notes(outliers, _out_path(args.outliers))
    return {"input": len(notes), "kept": len(kept), "no_keyword": len(no_keyword), "outliers": len(outliers)}


def _notes_from_dataset(dataset) -> list[Note]:
    return [Note(n.patient_id, n.note_id, None, n.context, n.context) for n in dataset.notes]


def cmd_corpus_stats(args, cfg):
    src = _opt(args, "input", cfg)
    dataset = _load(read_dataset, args.dataset) if args.dataset else None
    if src is not None:
        notes = _load(read_notes, src)
    elif dataset is not None:
        notes = _notes_from_dataset(dataset)
    else:
        raise StageError("missing input (--in or --dataset)")
    return corpus_stats(notes, dataset).to_dict()


def cmd_annotate(args, cfg):
    src = _require(_opt(args, "input", cfg), "input (--in)")
    notes = _cleaned_notes(src)
    bundle = _bundle(args, cfg)
    records = [a.to_record(n.note_id) for n in notes for a in extract_note(n, bundle)]
    _write_text(args.out, _jsonl(records))
    return {"notes": len(notes), "answers": len(records)}


def _pairing(args, cfg) -> Pairing:
    spec = _opt(args, "pairing", cfg)
    try:
        pairing = Pairing.parse(spec)
    except ValueError as exc:
        raise StageError(str(exc)) from None
    if pairing.k is not None:
        pairing = Pairing(pairing.k, _seed(args, cfg))
    return pairing


def cmd_dataset_build(args, cfg):
    src = _require(_opt(args, "input", cfg), "input (--in)")
    notes = _cleaned_notes(src)
    no_answer = _cleaned_notes(args.no_answer) if args.no_answer else []
    try:
        dataset = build_dataset(notes, _bundle(args, cfg), _pairing(args, cfg), no_answer)
    except ValueError as exc:
        raise StageError(str(exc), src) from None
    write_dataset(dataset, _out_path(args.out))
    return {"notes": len(dataset.notes), "samples": len(dataset.samples)}


def _write_split(split, out_dir: Path) -> dict:
    summary = {"seed": split.seed, "ratios": list(split.ratios), "patients": {}, "samples": {}}
    for name, part in split.parts().items():
        write_dataset(part, _out_path(out_dir / f"{name}.json"))
        summary["patients"][name] = sorted(part.patient_ids)
        summary["samples"][name] = len(part.samples)
    _write_text(out_dir / "split.json", _dump(summary))
    return summary


def cmd_dataset_split(args, cfg):
    src = _require(_opt(args, "input", cfg), "input (--in)")
    dataset = _load(read_dataset, src)
    ratios = _opt(args, "ratios", cfg, "split_ratios")
    try:
        split = split_by_patient(dataset, ratios, _seed(args, cfg))
    except ValueError as exc:
        raise StageError(str(exc), src) from None
    summary = _write_split(split, Path(_require(args.out, "output folder (--out)")))
    return {"seed": summary["seed"], "patients": {k: len(v) for k, v in summary["patients"].items()},
            "samples": summary["samples"]}


def cmd_dataset_stats(args, cfg):
    src = _require(_opt(args, "input", cfg), "input (--in)")
    dataset = _load(read_dataset, src)
    bundle = _bundle(args, cfg)
    stats = corpus_stats(_notes_from_dataset(dataset), dataset).to_dict()
    stats["impossible_count"] = sum(s.is_impossible for s in dataset.samples)
    stats["query_groups"] = group_histogram(dataset, bundle.lexicon.query_group_ids)
    return stats


def cmd_chunk(args, cfg):
    src = _require(_opt(args, "input", cfg), "input (--in)")
    dataset = _load(read_dataset, src)
    policy = ChunkPolicy(
        _opt(args, "max_seq", cfg, "max_sequence_tokens"),
        _opt(args, "stride", cfg, "document_stride_tokens"),
        _opt(args, "max_q", cfg, "max_question_tokens"),
        _opt(args, "max_answer", cfg, "max_answer_tokens"),
    )
    chunks = chunk_dataset(dataset, policy)
    _write_text(args.out, _jsonl(c.to_record() for c in chunks))
    return {"samples": len(dataset.samples), "chunks": len(chunks),
            "answer_windows": sum(c.is_answer_present for c in chunks)}


def cmd_query(args, cfg):
    try:
        raw = Path(args.note_file).read_text(encoding="utf-8")
    except OSError as exc:
        raise StageError(exc.strerror or str(exc), args.note_file) from None
    text = raw if args.no_clean else clean_note(raw)
    result = answer_question(text, args.question, _bundle(args, cfg))
    return {
        "question": args.question,
        "query_group": result.query_group_id,
        "method": result.method,
        "status": result.reason,
        "answers": [{"text": a.text, "start": a.start, "end": a.end} for a in result.answers],
    }


def predict_dataset(dataset, bundle: LexiconBundle) -> dict[str, str]:
    """Rule-based predictions for every sample: the first annotated span of
    the note that belongs to the question's group, or the empty string."""
    per_note = {n.note_id: extract_note(n.context, bundle) for n in dataset.notes}
    groups: dict[str, str | None] = {}
    preds = {}
    for s in dataset.samples:
        if s.question not in groups:
            groups[s.question] = classify_question(s.question, bundle).query_group_id
        gid = groups[s.question]
        hits = [a for a in per_note[s.note_id] if gid is not None and gid in a.query_group_ids]
        preds[s.id] = hits[0].text if hits else ""
    return preds


def cmd_predict(args, cfg):
    src = _require(_opt(args, "input", cfg), "input (--in)")
    dataset = _load(read_dataset, src)
    preds = predict_dataset(dataset, _bundle(args, cfg))
    write_predictions(preds, _out_path(args.out))
    return {"samples": len(preds), "empty": sum(not p for p in preds.values())}


def _eval_inputs(args):
    dataset = _load(read_dataset, _require(args.dataset, "dataset (--dataset)"))
    preds = _load(read_predictions, _require(args.preds, "predictions (--preds)"))
    return dataset, preds


def _scored(dataset, preds, path):
    try:
        return score_predictions(dataset, preds)
    except ValueError as exc:
        raise StageError(str(exc), path) from None


def cmd_eval_score(args, cfg):
    dataset, preds = _eval_inputs(args)
    report = _scored(dataset, preds, args.preds)
    if args.out:
        _write_text(args.out, _dump(scores_to_records(report.scores)))
    out = {"samples": len(report.scores), **{m: round(v, 4) for m, v in report.aggregates.items()}}
    if report.no_answer_accuracy is not None:
        out["no_answer_accuracy"] = round(report.no_answer_accuracy, 4)
        out["no_answer_count"] = report.no_answer_count
    if report.warnings:
        out["warnings"] = report.warnings
    return out


def cmd_eval_analyze(args, cfg):
    dataset, preds = _eval_inputs(args)
    report = _scored(dataset, preds, args.preds)
    if args.by in BIN_KEYS:
        if len(report.scores) < 4:
            raise StageError(f"need at least 4 samples to bin, got {len(report.scores)}", args.dataset)
        report.bins[args.by] = bin_metrics(dataset, report.scores, args.by)
        name = f"bins_{args.by}"
    elif args.by == "group":
        report.groups = per_group_metrics(dataset, report.scores, _bundle(args, cfg).lexicon.query_group_ids)
        name = "groups"
    else:
        report.ratios = answer_context_ratios(dataset, preds, report.scores)
        name = "ratios"
    header, rows = report_tables(report)[name]
    text = _csv(header, rows)
    if args.out:
        _write_text(args.out, text)
        return {"table": name, "rows": len(rows), "out": str(args.out)}
    sys.stdout.write(text)
    return None


def cmd_eval_ci(args, cfg):
    dataset, preds = _eval_inputs(args)
    report = _scored(dataset, preds, args.preds)
    level = _opt(args, "level", cfg, "ci_level")
    reps = _opt(args, "reps", cfg, "ci_replicates")
    seed = _seed(args, cfg)
    out = {}
    for m in METRICS:
        ci = bootstrap_ci([100.0 * getattr(s, m) for s in report.scores], level, reps, seed)
        out[m] = {"point": round(ci.point, 4), "low": round(ci.low, 4), "high": round(ci.high, 4)}
    return {"level": level, "replicates": reps, "seed": seed, "metrics": out}


def _report(dataset, preds, args, cfg, bundle, out_dir) -> dict:
    try:
        report = full_report(
            dataset,
            preds,
            level=_opt(args, "level", cfg, "ci_level"),
            replicates=_opt(args, "reps", cfg, "ci_replicates"),
            seed=_seed(args, cfg),
            group_order=bundle.lexicon.query_group_ids,
        )
    except ValueError as exc:
        raise StageError(str(exc)) from None
    formats = tuple(getattr(args, "formats", None) or ("markdown", "csv"))
    try:
        written = render_report(report, out_dir, formats)
    except ValueError as exc:
        raise StageError(str(exc), out_dir) from None
    return {"files": [p.name for p in written], **{m: round(v, 4) for m, v in report.aggregates.items()}}


def cmd_eval_report(args, cfg):
    dataset, preds = _eval_inputs(args)
    out_dir = Path(_require(args.out, "output folder (--out)"))
    return _report(dataset, preds, args, cfg, _bundle(args, cfg), out_dir)


def cmd_pipeline_all(args, cfg):
    """clean, filter, drop outliers, build, split, predict on test, report."""
    from .synthetic import bundled_corpus_path

    src = _opt(args, "input", cfg) or str(bundled_corpus_path())
    out = Path(_require(args.out or cfg.output, "output folder (--out)"))
    seed = _seed(args, cfg)
    bundle = _bundle(args, cfg)
    started = time.perf_counter()

    notes = clean_notes(_load(load_corpus, src))
    write_notes(notes, _out_path(out / "corpus" / "clean.json"))
    kept, no_keyword = filter_by_keywords(notes, bundle.matchers)
    kept, outliers = drop_length_outliers(kept, cfg.outlier_k)
    write_notes(kept, _out_path(out / "corpus" / "kept.json"))
    write_notes(no_keyword, _out_path(out / "corpus" / "no_keyword.json"))
    write_notes(outliers, _out_path(out / "corpus" / "outliers.json"))
    _write_text(out / "annotations.jsonl", _jsonl(a.to_record(n.note_id) for n in kept for a in extract_note(n, bundle)))

    pairing = Pairing.parse(cfg.pairing, seed)
    dataset = build_dataset(kept, bundle, pairing, no_keyword)
    write_dataset(dataset, _out_path(out / "dataset.json"))
    stats = corpus_stats(_notes_from_dataset(dataset), dataset).to_dict()
    stats["query_groups"] = group_histogram(dataset, bundle.lexicon.query_group_ids)
    _write_text(out / "dataset_stats.json", _dump(stats))

    split = split_by_patient(dataset, cfg.split_ratios, seed)
    _write_split(split, out / "split")
    chunks = chunk_dataset(split.test, cfg.chunk_policy)
    _write_text(out / "chunks_test.jsonl", _jsonl(c.to_record() for c in chunks))

    preds = predict_dataset(split.test, bundle)
    write_predictions(preds, _out_path(out / "predictions_test.json"))
    summary = _report(split.test, preds, args, cfg, bundle, out / "report")
    logger.info("pipeline finished in %.2fs", time.perf_counter() - started)
    return {
        "notes": len(notes),
        "kept": len(kept),
        "no_keyword": len(no_keyword),
        "outliers": len(outliers),
        "samples": len(dataset.samples),
        "test_samples": len(split.test.samples),
        **{k: v for k, v in summary.items() if k != "files"},
    }


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    # global flags, accepted before or after the subcommand
    p = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--seed", type=int, help="seed for randomized stages")
    p.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], type=str.upper)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="iduqa", description="IDU question-answering dataset pipeline.", parents=[common])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    stages = parser.add_subparsers(dest="stage", metavar="STAGE", required=True)

    def sub(container, name, func, help_text, lexicon=False, io=True):
        p = container.add_parser(name, help=help_text, parents=[common])
        p.set_defaults(func=func)
        if lexicon:
            p.add_argument("--lexicon", help="lexicon YAML (default: shipped lexicon)")
        if io:
            p.add_argument("--in", "--input", dest="input", help="input file or folder")
            p.add_argument("--out", "--output", dest="out", help="output path")
        return p

    def group(name, help_text):
        p = stages.add_parser(name, help=help_text, parents=[common])
        return p.add_subparsers(dest="action", metavar="ACTION", required=True)

    lex = group("lexicon", "lexicon checks")
    sub(lex, "validate", cmd_lexicon_validate, "load, expand and compile a lexicon", lexicon=True, io=False)

    corpus = group("corpus", "note ingestion and filtering")
    sub(corpus, "clean", cmd_corpus_clean, "read a manifest and clean notes")
    p = sub(corpus, "filter", cmd_corpus_filter, "keep keyword notes and drop length outliers", lexicon=True)
    p.add_argument("--dropped", help="write keyword-free notes here")
    p.add_argument("--outliers", help="write length outliers here")
    p.add_argument("--outlier-k", type=float, help="IQR multiplier for the upper fence")
    p.add_argument("--keep-outliers", action="store_true", help="skip the length-outlier step")
    p = sub(corpus, "stats", cmd_corpus_stats, "corpus statistics")
    p.add_argument("--dataset", help="dataset file for sample statistics")

    sub(stages, "annotate", cmd_annotate, "dump annotated answers as JSON lines", lexicon=True)

    ds = group("dataset", "QA dataset assembly")
    p = sub(ds, "build", cmd_dataset_build, "pair answers with question variants", lexicon=True)
    p.add_argument("--no-answer", help="keyword-free cleaned notes for impossible samples")
    p.add_argument("--pairing", help="'all' or 'sample:K'")
    p = sub(ds, "split", cmd_dataset_split, "patient-level train/dev/test split")
    p.add_argument("--ratios", type=_ratios, help="train,dev,test fractions (default 0.8,0.1,0.1)")
    sub(ds, "stats", cmd_dataset_stats, "dataset statistics and group histogram", lexicon=True)

    p = sub(stages, "chunk", cmd_chunk, "sliding-window chunks as JSON lines")
    p.add_argument("--max-seq", type=int)
    p.add_argument("--stride", type=int)
    p.add_argument("--max-q", type=int)
    p.add_argument("--max-answer", type=int)

    p = sub(stages, "query", cmd_query, "answer a question about one note", lexicon=True, io=False)
    p.add_argument("--note-file", required=True)
    p.add_argument("--question", required=True)
    p.add_argument("--no-clean", action="store_true", help="use the note text as is")

    sub(stages, "predict", cmd_predict, "rule-based predictions for a dataset", lexicon=True)

    ev = group("eval", "scoring and reports")
    for name, func, text in (
        ("score", cmd_eval_score, "EM, perfect recall and F1"),
        ("analyze", cmd_eval_analyze, "one breakdown table as CSV"),
        ("ci", cmd_eval_ci, "bootstrap confidence intervals"),
        ("report", cmd_eval_report, "full report folder"),
    ):
        p = sub(ev, name, func, text, lexicon=name in ("analyze", "report"), io=False)
        p.add_argument("--dataset", required=True)
        p.add_argument("--preds", required=True, help="predictions JSON {sample_id: text}")
        p.add_argument("--out", help="output file or folder")
        if name == "analyze":
            p.add_argument("--by", required=True, choices=[*BIN_KEYS, "group", "ratio"])
        if name in ("ci", "report"):
            p.add_argument("--level", type=float)
            p.add_argument("--reps", type=int)
        if name == "report":
            p.add_argument("--format", dest="formats", action="append", choices=["markdown", "csv"])

    pipe = group("pipeline", "run every stage")
    sub(pipe, "all", cmd_pipeline_all, "corpus to report in one go", lexicon=True)
    return parser


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _fail(stage: str, path: str | None, message: str, error: str, code: int) -> int:
    record = {"error": error, "stage": stage, "path": path, "message": message}
    sys.stderr.write(json.dumps(record, ensure_ascii=False) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        return _fail("args", None, str(exc), "UsageError", EXIT_USAGE)
    stage = " ".join(x for x in (args.stage, getattr(args, "action", None)) if x)
    try:
        cfg = load_config(getattr(args, "config", None))
    except StageError as exc:
        return _fail("config", exc.path, str(exc), "ConfigError", EXIT_USAGE)
    level = getattr(args, "log_level", None) or cfg.log_level
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.WARNING),
        stream=sys.stderr,
        format="level=%(levelname)s logger=%(name)s msg=%(message)s",
        force=True,
    )
    try:
        result = args.func(args, cfg)
    except StageError as exc:
        return _fail(stage, exc.path, str(exc), "StageError", EXIT_FAILURE)
    except (CorpusError, ValueError, OSError) as exc:
        path = getattr(exc, "filename", None) or getattr(args, "input", None)
        return _fail(stage, path, str(exc), type(exc).__name__, EXIT_FAILURE)
    if result is not None:
        _emit(result)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Scoring of QA predictions: exact match, perfect recall, token F1, bootstrap
confidence intervals and the error-analysis breakdowns."""

from __future__ import annotations

import csv
import io
import json
import logging
import string
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .dataset import Dataset, QASample

logger = logging.getLogger(__name__)

METRICS = ("em", "perfect_recall", "f1")
METRIC_LABELS = {"em": "EM", "perfect_recall": "PerfectRecall", "f1": "F1"}
BIN_KEYS = ("note_length", "question_length", "answer_length")


class EvaluationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# per-sample metrics
# ---------------------------------------------------------------------------


def em_score(pred: str, gold: str) -> int:
    """1 when the trimmed strings are identical, character for character."""
    return int(pred.strip() == gold.strip())


def perfect_recall_score(pred: str, gold: str) -> int:
    """1 when the trimmed gold answer occurs verbatim inside the prediction.

    An empty gold answer is only recalled by an empty prediction.
    """
    pred, gold = pred.strip(), gold.strip()
    if not gold:
        return int(not pred)
    return int(gold in pred)


def f1_tokens(text: str) -> list[str]:
    words = (w.lower().strip(string.punctuation) for w in text.split())
    return [w for w in words if w]


@dataclass(frozen=True)
class TokenF1:
    f1: float
    tp: int
    fp: int
    fn: int


def token_f1(pred: str, gold: str) -> TokenF1:
    pred_tokens, gold_tokens = f1_tokens(pred), f1_tokens(gold)
    if not pred_tokens and not gold_tokens:
        return TokenF1(1.0, 0, 0, 0)
    tp = sum((Counter(pred_tokens) & Counter(gold_tokens)).values())
    fp, fn = len(pred_tokens) - tp, len(gold_tokens) - tp
    if tp == 0:
        return TokenF1(0.0, tp, fp, fn)
    # 2PR/(P+R) with P = tp/(tp+fp), R = tp/(tp+fn), reduced to one division
    return TokenF1(2 * tp / (2 * tp + fp + fn), tp, fp, fn)


@dataclass(frozen=True)
class SampleScore:
    sample_id: str
    em: int
    perfect_recall: int
    f1: float
    tp: int
    fp: int
    fn: int


def score_pair(sample_id: str, pred: str, gold: str) -> SampleScore:
    f = token_f1(pred, gold)
    return SampleScore(sample_id, em_score(pred, gold), perfect_recall_score(pred, gold), f.f1, f.tp, f.fp, f.fn)


def score_sample(sample: QASample, pred: str) -> SampleScore:
    golds = [a.text for a in sample.answers] or [""]
    return max((score_pair(sample.id, pred, g) for g in golds), key=lambda s: (s.f1, s.em, s.perfect_recall))


# ---------------------------------------------------------------------------
# bootstrap
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConfidenceInterval:
    point: float
    low: float
    high: float
    level: float
    replicates: int
    seed: int

    @property
    def width(self) -> float:
        return self.high - self.low


def _row_means(values: np.ndarray) -> np.ndarray:
    return values.sum(axis=1) / values.shape[1]


def bootstrap_ci(
    scores: Sequence[float], level: float = 0.95, replicates: int = 10_000, seed: int = 0, block: int = 1000
) -> ConfidenceInterval:
    """Percentile bootstrap interval for the mean of ``scores``."""
    values = np.asarray(scores, dtype=float)
    if values.size == 0:
        raise EvaluationError("bootstrap_ci needs at least one score")
    if not 0 < level < 1:
        raise EvaluationError(f"level must be in (0, 1), got {level}")
    rng = np.random.default_rng(seed)
    n = values.size
    means = np.empty(replicates)
    for lo in range(0, replicates, block):
        hi = min(lo + block, replicates)
        means[lo:hi] = _row_means(values[rng.integers(0, n, size=(hi - lo, n))])
    alpha = (1 - level) / 2
    low, high = np.quantile(means, [alpha, 1 - alpha])
    point = float(_row_means(values[None, :])[0])
    return ConfidenceInterval(point, float(low), float(high), level, replicates, seed)


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def aggregate(scores: Sequence[SampleScore]) -> dict[str, float]:
    """Metric means scaled to percentages."""
    if not scores:
        return {m: float("nan") for m in METRICS}
    n = len(scores)
    return {m: 100.0 * sum(getattr(s, m) for s in scores) / n for m in METRICS}


@dataclass
class Bin:
    low: int | None
    high: int | None
    count: int
    scores: dict[str, float]


@dataclass
class BinSpec:
    key: str
    bins: list[Bin]


@dataclass
class MetricReport:
    scores: list[SampleScore]
    aggregates: dict[str, float]
    confidence_intervals: dict[str, ConfidenceInterval] = field(default_factory=dict)
    bins: dict[str, BinSpec] = field(default_factory=dict)
    groups: dict[str, dict[str, float]] = field(default_factory=dict)
    ratios: dict[str, list[float]] = field(default_factory=dict)
    no_answer_accuracy: float | None = None
    no_answer_count: int = 0
    warnings: list[str] = field(default_factory=list)


def score_predictions(dataset: Dataset, preds: Mapping[str, str]) -> MetricReport:
    missing = [s.id for s in dataset.samples if s.id not in preds]
    if missing:
        shown = ", ".join(missing[:20]) + (" ..." if len(missing) > 20 else "")
        raise EvaluationError(f"{len(missing)} samples have no prediction: {shown}")
    known = {s.id for s in dataset.samples}
    extra = sorted(k for k in preds if k not in known)
    warnings = []
    if extra:
        warnings.append(f"{len(extra)} predictions for unknown sample ids ignored")
        logger.warning(warnings[-1])
    scores = [score_sample(s, preds[s.id]) for s in dataset.samples]
    impossible = [sc for s, sc in zip(dataset.samples, scores) if s.is_impossible]
    return MetricReport(
        scores=scores,
        aggregates=aggregate(scores),
        no_answer_accuracy=100.0 * sum(sc.em for sc in impossible) / len(impossible) if impossible else None,
        no_answer_count=len(impossible),
        warnings=warnings,
    )


def _length(dataset: Dataset, sample: QASample, key: str) -> int:
    if key == "note_length":
        return len(dataset.context(sample).split())
    if key == "question_length":
        return len(sample.question.split())
    if key == "answer_length":
        return len(sample.gold.split())
    raise EvaluationError(f"unknown bin key {key!r}; expected one of {', '.join(BIN_KEYS)}")


def quartile_bounds(lengths_sorted: Sequence[int]) -> list[int]:
    """Cut points for four near-equal bins; a run of equal values is never
    split, it stays in the lower bin."""
    n = len(lengths_sorted)
    cuts = [0]
    for k in (1, 2, 3):
        t = max((k * n + 2) // 4, cuts[-1])
        while 0 < t < n and lengths_sorted[t] == lengths_sorted[t - 1]:
            t += 1
        cuts.append(t)
    cuts.append(n)
    return cuts


def bin_metrics(dataset: Dataset, scores: Sequence[SampleScore], key: str) -> BinSpec:
    if len(scores) < 4:
        raise EvaluationError(f"need at least 4 samples to bin, got {len(scores)}")
    by_id = {s.id: s for s in dataset.samples}
    rows = sorted(((_length(dataset, by_id[sc.sample_id], key), k) for k, sc in enumerate(scores)))
    lengths = [r[0] for r in rows]
    cuts = quartile_bounds(lengths)
    bins = []
    for a, b in zip(cuts, cuts[1:]):
        members = [scores[k] for _, k in rows[a:b]]
        bins.append(
            Bin(
                low=lengths[a] if b > a else None,
                high=lengths[b - 1] if b > a else None,
                count=b - a,
                scores=aggregate(members),
            )
        )
    return BinSpec(key, bins)


def per_group_metrics(
    dataset: Dataset, scores: Sequence[SampleScore], group_order: Sequence[str] = ()
) -> dict[str, dict[str, float]]:
    members: dict[str, list[SampleScore]] = {}
    by_id = {s.id: s for s in dataset.samples}
    for sc in scores:
        members.setdefault(by_id[sc.sample_id].query_group_id, []).append(sc)
    order = [g for g in group_order if g in members] + [g for g in members if g not in group_order]
    return {g: {"count": len(members[g]), **aggregate(members[g])} for g in order}


def answer_context_ratios(
    dataset: Dataset, preds: Mapping[str, str], scores: Sequence[SampleScore] | None = None
) -> dict[str, list[float]]:
    """Word-count ratios (percent) of predicted and gold answers to their
    contexts, over samples without an exact match."""
    if scores is None:
        scores = [score_sample(s, preds[s.id]) for s in dataset.samples]
    em = {sc.sample_id: sc.em for sc in scores}
    out: dict[str, list[float]] = {"sample_id": [], "pred": [], "gold": []}
    for s in dataset.samples:
        if em[s.id]:
            continue
        words = len(dataset.context(s).split())
        out["sample_id"].append(s.id)
        out["pred"].append(100.0 * len(preds[s.id].split()) / words)
        out["gold"].append(100.0 * len(s.gold.split()) / words)
    return out


def full_report(
    dataset: Dataset,
    preds: Mapping[str, str],
    *,
    level: float = 0.95,
    replicates: int = 10_000,
    seed: int = 0,
    group_order: Sequence[str] = (),
) -> MetricReport:
    """Scores, intervals and every breakdown in one report."""
    report = score_predictions(dataset, preds)
    if report.scores:
        for m in METRICS:
            report.confidence_intervals[m] = bootstrap_ci(
                [100.0 * getattr(s, m) for s in report.scores], level, replicates, seed
            )
    if len(report.scores) >= 4:
        for key in BIN_KEYS:
            report.bins[key] = bin_metrics(dataset, report.scores, key)
    else:
        report.warnings.append("fewer than 4 samples: length bins skipped")
    report.groups = per_group_metrics(dataset, report.scores, group_order)
    report.ratios = answer_context_ratios(dataset, preds, report.scores)
    return report


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "nan" if x != x else f"{x:.2f}"
    return str(x)


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _md(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(_fmt(v) for v in row) + " |" for row in rows]
    return "\n".join(lines)


def report_tables(report: MetricReport) -> dict[str, tuple[list[str], list[list]]]:
    tables: dict[str, tuple[list[str], list[list]]] = {}
    agg_rows = []
    for m in METRICS:
        ci = report.confidence_intervals.get(m)
        agg_rows.append([METRIC_LABELS[m], report.aggregates[m], ci.low if ci else None, ci.high if ci else None])
    tables["aggregates"] = (["metric", "score", "ci_low", "ci_high"], agg_rows)
    for key, spec in report.bins.items():
        rows = [
            [k + 1, b.low, b.high, b.count, b.scores["em"], b.scores["perfect_recall"], b.scores["f1"]]
            for k, b in enumerate(spec.bins)
        ]
        tables[f"bins_{key}"] = (["bin", "low_words", "high_words", "count", "EM", "PerfectRecall", "F1"], rows)
    tables["groups"] = (
        ["query_group", "count", "EM", "PerfectRecall", "F1"],
        [[g, int(v["count"]), v["em"], v["perfect_recall"], v["f1"]] for g, v in report.groups.items()],
    )
    r = report.ratios
    tables["ratios"] = (
        ["sample_id", "pred_ratio", "gold_ratio"],
        [[sid, p, g] for sid, p, g in zip(r.get("sample_id", []), r.get("pred", []), r.get("gold", []))],
    )
    return tables


def render_markdown(report: MetricReport) -> str:
    tables = report_tables(report)
    parts = ["# QA evaluation report", "", f"Samples scored: {len(report.scores)}", ""]
    if report.no_answer_accuracy is not None:
        parts += [f"No-answer accuracy (EM on {report.no_answer_count} impossible samples): "
                  f"{report.no_answer_accuracy:.2f}", ""]
    level = next(iter(report.confidence_intervals.values())).level if report.confidence_intervals else None
    parts += ["## Aggregate scores" + (f" ({level:.0%} CI)" if level else ""), "", _md(*tables["aggregates"]), ""]
    for key in BIN_KEYS:
        if f"bins_{key}" in tables:
            parts += [f"## By {key.replace('_', ' ')} (quartile bins)", "", _md(*tables[f"bins_{key}"]), ""]
    parts += ["## By query group", "", _md(*tables["groups"]), ""]
    pred, gold = report.ratios.get("pred", []), report.ratios.get("gold", [])
    if pred:
        summary = [
            [name, len(vals), float(np.min(vals)), float(np.median(vals)), float(np.max(vals))]
            for name, vals in (("predicted", pred), ("gold", gold))
        ]
        parts += ["## Answer-to-context ratios, non-exact-match samples (%)", "",
                  _md(["answer", "n", "min", "median", "max"], summary), ""]
    if report.warnings:
        parts += ["## Warnings", ""] + [f"- {w}" for w in report.warnings] + [""]
    return "\n".join(parts)


def render_report(report: MetricReport, out_dir: str | Path, formats: Sequence[str] = ("markdown", "csv")) -> list[Path]:
    """Write the report; output bytes depend only on the report contents."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise EvaluationError(f"cannot create report directory {out}: {exc}") from None
    written = []
    if "csv" in formats:
        for name, (header, rows) in report_tables(report).items():
            path = out / f"{name}.csv"
            path.write_text(_csv(header, rows), encoding="utf-8")
            written.append(path)
    if "markdown" in formats:
        path = out / "report.md"
        path.write_text(render_markdown(report), encoding="utf-8")
        written.append(path)
    return written


def scores_to_records(scores: Sequence[SampleScore]) -> list[dict]:
    return [
        {"id": s.sample_id, "em": s.em, "perfect_recall": s.perfect_recall, "f1": s.f1, "tp": s.tp, "fp": s.fp, "fn": s.fn}
        for s in scores
    ]


def read_predictions(path: str | Path) -> dict[str, str]:
    try:
        preds = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise EvaluationError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(preds, dict) or not all(isinstance(v, str) for v in preds.values()):
        raise EvaluationError(f"{path}: predictions must map sample ids to strings")
    return preds


def write_predictions(preds: Mapping[str, str], path: str | Path) -> None:
    Path(path).write_text(json.dumps(dict(preds), indent=1, ensure_ascii=False) + "\n", encoding="utf-8")

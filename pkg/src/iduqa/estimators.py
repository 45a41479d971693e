"""scikit-learn style wrappers around the functional pipeline.

The estimators hold no learned weights; ``fit`` compiles the lexicon (or, for
the outlier detector, computes the length fence) so the objects compose with
``Pipeline``, ``clone`` and ``get_params`` like any other transformer.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, OutlierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .corpus import clean_note, length_fence, word_count
from .evaluation import token_f1
from .extract import answer_question, extract_note
from .validation import check_qa_pairs, check_strings, check_texts, resolve_bundle


class NoteCleaner(TransformerMixin, BaseEstimator):
    """Stateless transformer applying :func:`~iduqa.corpus.clean_note`."""

    def fit(self, X, y=None):
        check_texts(X)
        self.fitted_ = True
        return self

    def transform(self, X):
        return [clean_note(t) for t in check_texts(X)]


class KeywordDetector(BaseEstimator):
    """Flags texts containing at least one IDU keyword."""

    def __init__(self, lexicon=None):
        self.lexicon = lexicon

    def fit(self, X=None, y=None):
        self.bundle_ = resolve_bundle(self.lexicon)
        return self

    def predict(self, X):
        check_is_fitted(self, "bundle_")
        keywords = self.bundle_.matchers.keywords
        return np.array([keywords.search(t) for t in check_texts(X)], dtype=bool)

    def transform(self, X):
        """Matched keyword phrases per text, in document order."""
        check_is_fitted(self, "bundle_")
        return [[m.phrase for m in self.bundle_.matchers.keyword_hits(t)] for t in check_texts(X)]


class LengthOutlierDetector(OutlierMixin, BaseEstimator):
    """Upper interquartile fence on word counts; -1 marks an outlier."""

    def __init__(self, k: float = 1.5):
        self.k = k

    def fit(self, X, y=None):
        lengths = [word_count(t) for t in check_texts(X)]
        # small corpora are never trimmed
        self.fence_ = length_fence(lengths, self.k) if len(lengths) >= 4 else float("inf")
        return self

    def predict(self, X):
        check_is_fitted(self, "fence_")
        return np.array([-1 if word_count(t) > self.fence_ else 1 for t in check_texts(X)])


class SpanAnnotator(TransformerMixin, BaseEstimator):
    """Transforms cleaned notes into lists of annotated answers."""

    def __init__(self, lexicon=None):
        self.lexicon = lexicon

    def fit(self, X=None, y=None):
        self.bundle_ = resolve_bundle(self.lexicon)
        return self

    def transform(self, X):
        check_is_fitted(self, "bundle_")
        return [extract_note(t, self.bundle_) for t in check_texts(X)]


class RuleBasedQA(BaseEstimator):
    """Answers ``(context, question)`` pairs with the extraction rules.

    ``predict`` returns the first matching span per pair, or the empty string
    when the note holds no answer for the question's group.
    """

    def __init__(self, lexicon=None):
        self.lexicon = lexicon

    def fit(self, X=None, y=None):
        self.bundle_ = resolve_bundle(self.lexicon)
        return self

    def predict(self, X):
        check_is_fitted(self, "bundle_")
        return [answer_question(c, q, self.bundle_).best for c, q in check_qa_pairs(X)]

    def score(self, X, y):
        """Mean token F1 against gold answers."""
        preds = self.predict(X)
        gold = check_strings(y, len(preds))
        if not preds:
            return float("nan")
        return float(np.mean([token_f1(p, g).f1 for p, g in zip(preds, gold)]))

"""Rule-based construction and evaluation of injection-drug-use QA datasets
from clinical notes."""

__version__ = "0.1.0"

from .chunker import Chunk, ChunkPolicy, chunk_context, chunk_dataset
from .corpus import Note, clean_note, corpus_stats, drop_length_outliers, filter_by_keywords, load_corpus
from .dataset import Dataset, Pairing, QASample, build_dataset, read_dataset, split_by_patient, write_dataset
from .evaluation import bootstrap_ci, em_score, full_report, perfect_recall_score, score_predictions, token_f1
from .extract import LexiconBundle, answer_question, classify_question, extract_note, sentencize
from .lexicon import Lexicon, compile_matchers, expand_phrase, expand_question_bank, load_lexicon

__all__ = [
    "Chunk",
    "ChunkPolicy",
    "Dataset",
    "Lexicon",
    "LexiconBundle",
    "Note",
    "Pairing",
    "QASample",
    "answer_question",
    "bootstrap_ci",
    "build_dataset",
    "chunk_context",
    "chunk_dataset",
    "classify_question",
    "clean_note",
    "compile_matchers",
    "corpus_stats",
    "drop_length_outliers",
    "em_score",
    "expand_phrase",
    "expand_question_bank",
    "extract_note",
    "filter_by_keywords",
    "full_report",
    "load_corpus",
    "load_lexicon",
    "perfect_recall_score",
    "read_dataset",
    "score_predictions",
    "sentencize",
    "split_by_patient",
    "token_f1",
    "write_dataset",
]

import pytest

from iduqa.corpus import clean_notes, drop_length_outliers, filter_by_keywords, read_manifest
from iduqa.dataset import build_dataset
from iduqa.extract import LexiconBundle
from iduqa.synthetic import bundled_corpus_path


@pytest.fixture(scope="session")
def bundle():
    return LexiconBundle.from_lexicon()


@pytest.fixture(scope="session")
def matchers(bundle):
    return bundle.matchers


@pytest.fixture(scope="session")
def bundled_notes():
    return clean_notes(read_manifest(bundled_corpus_path()))


@pytest.fixture(scope="session")
def bundled_dataset(bundle, bundled_notes):
    kept, no_keyword = filter_by_keywords(bundled_notes, bundle.matchers)
    kept, _ = drop_length_outliers(kept)
    return build_dataset(kept, bundle, no_answer_notes=no_keyword)

"""Domain knowledge base: keyword groups, trigger phrases, query groups and
mapping rules, plus the compiled matchers and question bank built from them.

The lexicon ships as a YAML file (``data/default_lexicon.yaml``) so it can be
edited without touching code. Phrase patterns use a small alternation grammar,
expanded at load time::

    >>> expand_phrase("iv/intravenous/inject(s/ed) heroin")
    ['iv heroin', 'intravenous heroin', 'inject heroin', 'injects heroin', 'injected heroin']
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

import yaml

__all__ = [
    "LexiconError",
    "KeywordGroup",
    "PhraseBook",
    "QueryGroup",
    "MappingRule",
    "Lexicon",
    "PhraseMatch",
    "PhraseMatcher",
    "MatcherSet",
    "QuestionBank",
    "expand_phrase",
    "expand_template",
    "load_lexicon",
    "lexicon_from_dict",
    "lexicon_to_dict",
    "write_lexicon",
    "compile_matchers",
    "expand_question_bank",
    "normalize_question",
    "default_lexicon_path",
    "PHRASE_CLASSES",
]

NP, TEMP, ATP, SP, TMP = "NP", "TemP", "ATP", "SP", "TMP"
PHRASE_CLASSES = (NP, TEMP, ATP, SP, TMP)

# YAML key -> phrase class tag
_BOOK_KEYS = {
    "negation": NP,
    "temporal": TEMP,
    "additional_temporal": ATP,
    "substance": SP,
    "trackmark": TMP,
}
_CLASS_TO_KEY = {v: k for k, v in _BOOK_KEYS.items()}

_SPECIAL = set("/()\\")
_WS = re.compile(r"\s+")


class LexiconError(ValueError):
    """Raised for malformed lexicon files, phrases or templates."""


# ---------------------------------------------------------------------------
# alternation grammar
# ---------------------------------------------------------------------------


def _split_unescaped(text: str, sep: str, *, nested: bool = True) -> list[str]:
    parts, buf, depth, i = [], [], 0, 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            buf.append(text[i : i + 2])
            i += 2
            continue
        if nested and ch == "(":
            depth += 1
        elif nested and ch == ")":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
        i += 1
    parts.append("".join(buf))
    return parts


def _unescape(text: str) -> str:
    return re.sub(r"\\(.)", r"\1", text)


def _expand_alternative(alt: str, pattern: str) -> list[str]:
    """Expand one slash-free alternative containing optional ``(a/b)`` groups."""
    pieces: list[list[str]] = []
    buf: list[str] = []
    i = 0
    while i < len(alt):
        ch = alt[i]
        if ch == "\\" and i + 1 < len(alt):
            buf.append(alt[i : i + 2])
            i += 2
        elif ch == "(":
            close = i + 1
            while close < len(alt) and alt[close] != ")":
                if alt[close] == "(":
                    raise LexiconError(f"nested parentheses in phrase {pattern!r}")
                close += 2 if alt[close] == "\\" else 1
            if close >= len(alt):
                raise LexiconError(f"unbalanced parentheses in phrase {pattern!r}")
            pieces.append(["".join(buf)])
            buf = []
            options = _split_unescaped(alt[i + 1 : close], "/", nested=False)
            pieces.append([""] + options)
            i = close + 1
        elif ch == ")":
            raise LexiconError(f"unbalanced parentheses in phrase {pattern!r}")
        else:
            buf.append(ch)
            i += 1
    pieces.append(["".join(buf)])
    return ["".join(combo) for combo in itertools.product(*pieces)]


def expand_phrase(pattern: str) -> list[str]:
    """Expand a phrase pattern into its literal lowercase phrases.

    Order is deterministic (word order, then alternative order) and
    duplicates are dropped.
    """
    words = pattern.split()
    if not words:
        raise LexiconError("empty phrase")
    per_word = []
    for word in words:
        options = []
        for alt in _split_unescaped(word, "/"):
            if alt == "":
                raise LexiconError(f"empty alternative in phrase {pattern!r}")
            options.extend(_expand_alternative(alt, pattern))
        per_word.append(options)
    out: list[str] = []
    for combo in itertools.product(*per_word):
        phrase = _WS.sub(" ", _unescape(" ".join(combo))).strip().lower()
        if not phrase:
            raise LexiconError(f"phrase {pattern!r} expands to an empty string")
        if phrase not in out:
            out.append(phrase)
    return out


def _escape_phrase(phrase: str) -> str:
    return "".join("\\" + ch if ch in _SPECIAL else ch for ch in phrase)


_SLOT = re.compile(r"\{([^{}]*)\}")


def expand_template(template: str) -> list[str]:
    """Cartesian expansion of ``{a|b}`` slots in a question template."""
    depth = 0
    for ch in template:
        depth += {"{": 1, "}": -1}.get(ch, 0)
        if depth not in (0, 1):
            raise LexiconError(f"unbalanced braces in template {template!r}")
    if depth:
        raise LexiconError(f"unbalanced braces in template {template!r}")
    chunks = _SLOT.split(template)
    # odd indices are slot bodies
    options = [[c] if k % 2 == 0 else c.split("|") for k, c in enumerate(chunks)]
    out = []
    for combo in itertools.product(*options):
        question = _WS.sub(" ", "".join(combo)).strip()
        if not question or not question.endswith("?"):
            raise LexiconError(f"template {template!r} yields malformed question {question!r}")
        out.append(question)
    return out


# ---------------------------------------------------------------------------
# data model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KeywordGroup:
    id: str
    label: str
    phrases: tuple[str, ...]


@dataclass(frozen=True)
class PhraseBook:
    negation: tuple[str, ...]
    temporal: tuple[str, ...]
    additional_temporal: tuple[str, ...]
    substance: tuple[str, ...]
    trackmark: tuple[str, ...]

    def by_class(self) -> dict[str, tuple[str, ...]]:
        return {cls: getattr(self, key) for key, cls in _BOOK_KEYS.items()}


@dataclass(frozen=True)
class QueryGroup:
    id: str
    label: str
    question_templates: tuple[str, ...]


@dataclass(frozen=True)
class MappingRule:
    query_group_id: str
    trigger_phrases: tuple[str, ...] = ()
    is_default: bool = False


@dataclass(frozen=True)
class Lexicon:
    version: str
    keyword_groups: tuple[KeywordGroup, ...]
    phrase_book: PhraseBook
    query_groups: tuple[QueryGroup, ...]
    mapping_rules: tuple[MappingRule, ...]

    @property
    def query_group_ids(self) -> tuple[str, ...]:
        return tuple(g.id for g in self.query_groups)

    @property
    def default_group_id(self) -> str:
        return next(r.query_group_id for r in self.mapping_rules if r.is_default)

    def keyword_phrases(self) -> list[str]:
        seen: list[str] = []
        for group in self.keyword_groups:
            seen.extend(p for p in group.phrases if p not in seen)
        return seen


# ---------------------------------------------------------------------------
# loading / writing
# ---------------------------------------------------------------------------


def default_lexicon_path() -> Path:
    return Path(str(resources.files("iduqa") / "data" / "default_lexicon.yaml"))


def _require(mapping: dict, key: str, where: str):
    if not isinstance(mapping, dict) or key not in mapping:
        raise LexiconError(f"missing field {where}.{key}" if where else f"missing field {key}")
    return mapping[key]


def _expand_all(patterns, where: str) -> tuple[str, ...]:
    if not isinstance(patterns, list) or not patterns:
        raise LexiconError(f"{where} must be a non-empty list of phrases")
    out: list[str] = []
    for k, pattern in enumerate(patterns):
        if not isinstance(pattern, str) or not pattern.strip():
            raise LexiconError(f"empty phrase at {where}[{k}]")
        try:
            expanded = expand_phrase(pattern)
        except LexiconError as exc:
            raise LexiconError(f"{where}[{k}]: {exc}") from None
        out.extend(p for p in expanded if p not in out)
    return tuple(out)


def lexicon_from_dict(data: dict) -> Lexicon:
    """Validate a parsed lexicon document and build a :class:`Lexicon`."""
    if not isinstance(data, dict):
        raise LexiconError("lexicon document must be a mapping")
    version = _require(data, "version", "")
    if not isinstance(version, str) or not re.fullmatch(r"\d+\.\d+\.\d+\S*", version):
        raise LexiconError(f"version must be a semantic-version string, got {version!r}")

    keyword_groups = []
    for k, raw in enumerate(_require(data, "keyword_groups", "") or []):
        where = f"keyword_groups[{k}]"
        gid = _require(raw, "id", where)
        keyword_groups.append(
            KeywordGroup(
                id=gid,
                label=raw.get("label", gid),
                phrases=_expand_all(_require(raw, "phrases", where), f"{where}.phrases"),
            )
        )
    if not keyword_groups:
        raise LexiconError("keyword_groups must be non-empty")
    _check_unique([g.id for g in keyword_groups], "keyword_groups")

    raw_book = _require(data, "phrase_book", "")
    phrase_book = PhraseBook(
        **{key: _expand_all(_require(raw_book, key, "phrase_book"), f"phrase_book.{key}") for key in _BOOK_KEYS}
    )

    query_groups = []
    for k, raw in enumerate(_require(data, "query_groups", "") or []):
        where = f"query_groups[{k}]"
        gid = _require(raw, "id", where)
        templates = _require(raw, "question_templates", where)
        if not isinstance(templates, list) or not templates:
            raise LexiconError(f"{where}.question_templates must be a non-empty list")
        for t in templates:
            try:
                expand_template(t)
            except LexiconError as exc:
                raise LexiconError(f"{where}.question_templates: {exc}") from None
        query_groups.append(QueryGroup(id=gid, label=raw.get("label", gid), question_templates=tuple(templates)))
    if not query_groups:
        raise LexiconError("query_groups must be non-empty")
    _check_unique([g.id for g in query_groups], "query_groups")
    group_ids = {g.id for g in query_groups}
    kw_by_id = {g.id: g.phrases for g in keyword_groups}

    mapping_rules = []
    for k, raw in enumerate(_require(data, "mapping_rules", "") or []):
        where = f"mapping_rules[{k}]"
        gid = _require(raw, "query_group", where)
        if gid not in group_ids:
            raise LexiconError(f"{where}.query_group references unknown query group {gid!r}")
        is_default = bool(raw.get("default", False))
        phrases: list[str] = []
        if raw.get("trigger_phrases"):
            phrases.extend(_expand_all(raw["trigger_phrases"], f"{where}.trigger_phrases"))
        for ref in raw.get("include", []) or []:
            source, _, name = str(ref).partition(".")
            if source == "keyword_groups" and name in kw_by_id:
                included = kw_by_id[name]
            elif source == "phrase_book" and name in _BOOK_KEYS:
                included = getattr(phrase_book, name)
            else:
                raise LexiconError(f"{where}.include: unknown reference {ref!r}")
            phrases.extend(p for p in included if p not in phrases)
        if not is_default and not phrases:
            raise LexiconError(f"{where}: non-default rule needs trigger_phrases or include")
        mapping_rules.append(MappingRule(query_group_id=gid, trigger_phrases=tuple(phrases), is_default=is_default))

    defaults = [r for r in mapping_rules if r.is_default]
    if len(defaults) != 1:
        raise LexiconError(f"mapping_rules must contain exactly one default rule, found {len(defaults)}")
    return Lexicon(
        version=version,
        keyword_groups=tuple(keyword_groups),
        phrase_book=phrase_book,
        query_groups=tuple(query_groups),
        mapping_rules=tuple(mapping_rules),
    )


def _check_unique(ids: list[str], where: str) -> None:
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise LexiconError(f"duplicate ids in {where}: {', '.join(dupes)}")


def load_lexicon(path: str | Path | None = None) -> Lexicon:
    """Load and validate a lexicon file; ``None`` loads the shipped default."""
    path = Path(path) if path is not None else default_lexicon_path()
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise LexiconError(f"cannot parse lexicon {path}: {exc}") from None
    return lexicon_from_dict(data)


def lexicon_to_dict(lexicon: Lexicon) -> dict:
    """Inverse of :func:`lexicon_from_dict`; phrases are written fully expanded."""

    def esc(phrases):
        return [_escape_phrase(p) for p in phrases]

    rules = []
    for rule in lexicon.mapping_rules:
        raw: dict = {"query_group": rule.query_group_id}
        if rule.trigger_phrases:
            raw["trigger_phrases"] = esc(rule.trigger_phrases)
        if rule.is_default:
            raw["default"] = True
        rules.append(raw)
    return {
        "version": lexicon.version,
        "keyword_groups": [{"id": g.id, "label": g.label, "phrases": esc(g.phrases)} for g in lexicon.keyword_groups],
        "phrase_book": {key: esc(getattr(lexicon.phrase_book, key)) for key in _BOOK_KEYS},
        "query_groups": [
            {"id": g.id, "label": g.label, "question_templates": list(g.question_templates)}
            for g in lexicon.query_groups
        ],
        "mapping_rules": rules,
    }


def write_lexicon(lexicon: Lexicon, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(lexicon_to_dict(lexicon), sort_keys=False, allow_unicode=True), encoding="utf-8")


# ---------------------------------------------------------------------------
# matchers
# ---------------------------------------------------------------------------


class PhraseMatch(NamedTuple):
    start: int
    end: int
    phrase: str
    label: str


class PhraseMatcher:
    """Whole-word, case-insensitive matcher over a fixed list of phrases.

    All phrases are compiled into one alternation, longest first, so at any
    position the longest phrase wins and reported matches never overlap.
    Words of a multi-word phrase may be separated by any whitespace run.
    """

    def __init__(self, items: Iterable[tuple[str, str]]):
        labels: dict[str, str] = {}
        for phrase, label in items:
            labels.setdefault(phrase, label)
        self.labels = labels
        self.phrases = tuple(sorted(labels, key=lambda p: (-len(p), p)))
        if not self.phrases:
            self._regex = None
            return
        alternatives = []
        for k, phrase in enumerate(self.phrases):
            words = phrase.split()
            if not words:
                raise LexiconError(f"cannot compile empty phrase {phrase!r}")
            body = r"\s+".join(re.escape(w) for w in words)
            alternatives.append(f"(?P<p{k}>{body})")
        try:
            self._regex = re.compile(r"(?<!\w)(?:" + "|".join(alternatives) + r")(?!\w)", re.IGNORECASE)
        except re.error as exc:  # pragma: no cover - re.escape'd input
            raise LexiconError(f"cannot compile phrases: {exc}") from None

    def finditer(self, text: str, offset: int = 0) -> Iterator[PhraseMatch]:
        """Yield matches in ``text``; positions are shifted by ``offset``."""
        if self._regex is None:
            return
        for m in self._regex.finditer(text):
            phrase = self.phrases[int(m.lastgroup[1:])]
            yield PhraseMatch(m.start() + offset, m.end() + offset, phrase, self.labels[phrase])

    def findall(self, text: str, offset: int = 0) -> list[PhraseMatch]:
        return list(self.finditer(text, offset))

    def search(self, text: str) -> bool:
        return self._regex is not None and self._regex.search(text) is not None

    def __len__(self) -> int:
        return len(self.phrases)


@dataclass(frozen=True)
class MatcherSet:
    """Compiled matchers derived from a :class:`Lexicon`."""

    keywords: PhraseMatcher
    keyword_group_matchers: dict[str, PhraseMatcher]
    phrase_classes: dict[str, PhraseMatcher]
    rule_matchers: tuple[tuple[MappingRule, PhraseMatcher], ...]
    default_group_id: str
    keyword_groups_by_phrase: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def keyword_hits(self, text: str, offset: int = 0) -> list[PhraseMatch]:
        return self.keywords.findall(text, offset)


def compile_matchers(lexicon: Lexicon) -> MatcherSet:
    by_phrase: dict[str, list[str]] = {}
    for group in lexicon.keyword_groups:
        for phrase in group.phrases:
            by_phrase.setdefault(phrase, []).append(group.id)
    keywords = PhraseMatcher((p, groups[0]) for p, groups in by_phrase.items())
    per_group = {g.id: PhraseMatcher((p, g.id) for p in g.phrases) for g in lexicon.keyword_groups}
    classes = {
        cls: PhraseMatcher((p, cls) for p in phrases) for cls, phrases in lexicon.phrase_book.by_class().items()
    }
    rules = tuple(
        (rule, PhraseMatcher((p, rule.query_group_id) for p in rule.trigger_phrases)) for rule in lexicon.mapping_rules
    )
    return MatcherSet(
        keywords=keywords,
        keyword_group_matchers=per_group,
        phrase_classes=classes,
        rule_matchers=rules,
        default_group_id=lexicon.default_group_id,
        keyword_groups_by_phrase={p: tuple(g) for p, g in by_phrase.items()},
    )


# ---------------------------------------------------------------------------
# question bank
# ---------------------------------------------------------------------------


def normalize_question(question: str) -> str:
    return _WS.sub(" ", question).strip().lower()


@dataclass(frozen=True)
class QuestionBank:
    questions: dict[str, tuple[str, ...]]
    index: dict[str, str]

    @property
    def group_ids(self) -> tuple[str, ...]:
        return tuple(self.questions)

    def lookup(self, question: str) -> str | None:
        return self.index.get(normalize_question(question))

    def all_questions(self) -> list[tuple[str, str]]:
        return [(gid, q) for gid, qs in self.questions.items() for q in qs]


def expand_question_bank(lexicon: Lexicon) -> QuestionBank:
    questions: dict[str, tuple[str, ...]] = {}
    index: dict[str, str] = {}
    for group in lexicon.query_groups:
        expanded: list[str] = []
        for template in group.question_templates:
            for q in expand_template(template):
                if q not in expanded:
                    expanded.append(q)
        for q in expanded:
            key = normalize_question(q)
            owner = index.setdefault(key, group.id)
            if owner != group.id:
                raise LexiconError(f"question {q!r} appears in groups {owner!r} and {group.id!r}")
        questions[group.id] = tuple(expanded)
    return QuestionBank(questions=questions, index=index)

"""CoNLL-U ingestion.

Parses Universal Dependencies treebank files into token/sentence records,
normalizes morphological feature annotations, and merges per-language
treebanks while preserving the UD train/dev/test split labels.

Multiword-token range lines (ID "a-b") and empty nodes (ID "a.b") are not
probing units: range lines are recorded as spans on the sentence (so the
file can be round-tripped) and empty nodes are dropped entirely.
"""

from __future__ import annotations

import io
from collections import Counter
from dataclasses import dataclass, field, replace

from .errors import ConfigError, EncodingError, ParseError

UD_POS_TAGS = frozenset({
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
})

SPLITS = ("train", "dev", "test")

# The morphological features probed by default; ambiguity statistics are
# computed over these.
TARGET_FEATURES = ("Case", "Gender", "Number", "Tense")


@dataclass(frozen=True)
class TokenRecord:
    index: int                      # 1-based CoNLL-U ID
    form: str
    lemma: str
    upos: str
    feats: dict[str, str]
    is_multiword_part: bool = False
    # Columns parsed but unused downstream; kept verbatim for round-trips.
    xpos: str = "_"
    head: str = "_"
    deprel: str = "_"
    deps: str = "_"
    misc: str = "_"

    def __post_init__(self):
        if self.index < 1:
            raise ParseError(f"token index must be >= 1, got {self.index}")
        for k, v in self.feats.items():
            if not k or not v:
                raise ParseError(f"empty feature key or value in {self.feats!r}")
        if self.upos != "_" and self.upos not in UD_POS_TAGS:
            raise ParseError(f"unknown UPOS tag {self.upos!r}")


@dataclass(frozen=True)
class SentenceRecord:
    tokens: tuple[TokenRecord, ...]
    language: str
    treebank_id: str
    split: str
    sent_id: str
    # (start_id, end_id, surface form) for each multiword range line.
    multiword_spans: tuple[tuple[int, int, str], ...] = ()

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ParseError(f"split must be one of {SPLITS}, got {self.split!r}")
        for i, tok in enumerate(self.tokens, start=1):
            if tok.index != i:
                raise ParseError(
                    f"sentence {self.sent_id}: token indices not contiguous "
                    f"(expected {i}, got {tok.index})")

    @property
    def words(self) -> list[str]:
        return [t.form for t in self.tokens]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class Corpus:
    language: str
    sentences: list[SentenceRecord] = field(default_factory=list)

    @property
    def split_counts(self) -> dict[str, int]:
        counts = {s: 0 for s in SPLITS}
        for sent in self.sentences:
            counts[sent.split] += 1
        return counts

    def by_split(self, split: str) -> list[SentenceRecord]:
        return [s for s in self.sentences if s.split == split]


def parse_feats(feats_column: str) -> dict[str, str]:
    """Parse the FEATS column into a name->value map.

    "_" and "" mean no annotation. Multivalued features ("Gender=Fem,Masc")
    are kept verbatim as a single string value.
    """
    if feats_column in ("_", ""):
        return {}
    feats: dict[str, str] = {}
    for entry in feats_column.split("|"):
        name, sep, value = entry.partition("=")
        if not sep or not name or not value:
            raise ParseError(f"feature entry without name=value: {entry!r}")
        feats[name] = value
    return feats


def format_feats(feats: dict[str, str]) -> str:
    if not feats:
        return "_"
    return "|".join(f"{k}={v}" for k, v in sorted(feats.items()))


def _decode(byte_stream) -> str:
    if isinstance(byte_stream, str):
        return byte_stream
    if isinstance(byte_stream, (bytes, bytearray)):
        data = bytes(byte_stream)
    elif hasattr(byte_stream, "read"):
        data = byte_stream.read()
        if isinstance(data, str):
            return data
    else:
        raise TypeError(f"cannot read CoNLL-U from {type(byte_stream)!r}")
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise EncodingError(f"input is not valid UTF-8: {exc}") from exc


def parse_conllu(byte_stream, language: str, treebank_id: str,
                 split: str) -> list[SentenceRecord]:
    """Parse one CoNLL-U file into SentenceRecords.

    Comment lines are consumed only for sent_id; sentences without one get
    a synthesized "<treebank>-<split>-<ordinal>" id.
    """
    text = _decode(byte_stream)
    sentences: list[SentenceRecord] = []
    tokens: list[TokenRecord] = []
    spans: list[tuple[int, int, str]] = []
    mw_covered: set[int] = set()
    sent_id: str | None = None

    def flush():
        nonlocal tokens, spans, mw_covered, sent_id
        if not tokens and not spans:
            sent_id = None
            return
        final = tuple(
            replace(tok, is_multiword_part=tok.index in mw_covered)
            for tok in tokens
        )
        sid = sent_id or f"{treebank_id}-{split}-{len(sentences) + 1}"
        sentences.append(SentenceRecord(
            tokens=final, language=language, treebank_id=treebank_id,
            split=split, sent_id=sid, multiword_spans=tuple(spans)))
        tokens, spans, mw_covered, sent_id = [], [], set(), None

    for lineno, line in enumerate(io.StringIO(text), start=1):
        line = line.rstrip("\n").rstrip("\r")
        if not line:
            flush()
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("sent_id"):
                _, sep, value = body.partition("=")
                if sep:
                    sent_id = value.strip()
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ParseError(
                f"line {lineno}: expected 10 tab-separated columns, "
                f"got {len(cols)}")
        tok_id = cols[0]
        if "-" in tok_id:
            try:
                start, end = (int(p) for p in tok_id.split("-"))
            except ValueError as exc:
                raise ParseError(f"line {lineno}: bad range id {tok_id!r}") from exc
            spans.append((start, end, cols[1]))
            mw_covered.update(range(start, end + 1))
            continue
        if "." in tok_id:
            continue  # empty node
        try:
            index = int(tok_id)
        except ValueError as exc:
            raise ParseError(f"line {lineno}: bad token id {tok_id!r}") from exc
        try:
            tokens.append(TokenRecord(
                index=index, form=cols[1], lemma=cols[2], upos=cols[3],
                feats=parse_feats(cols[5]), xpos=cols[4], head=cols[6],
                deprel=cols[7], deps=cols[8], misc=cols[9]))
        except ParseError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
    flush()
    return sentences


def sentence_to_conllu(sent: SentenceRecord) -> str:
    """Serialize one sentence back to CoNLL-U (sent_id comment + token lines)."""
    lines = [f"# sent_id = {sent.sent_id}"]
    spans = {start: (end, form) for start, end, form in sent.multiword_spans}
    for tok in sent.tokens:
        if tok.index in spans:
            end, form = spans[tok.index]
            lines.append("\t".join([
                f"{tok.index}-{end}", form, "_", "_", "_", "_", "_", "_",
                "_", "_"]))
        lines.append("\t".join([
            str(tok.index), tok.form, tok.lemma, tok.upos, tok.xpos,
            format_feats(tok.feats), tok.head, tok.deprel, tok.deps,
            tok.misc]))
    return "\n".join(lines) + "\n"


def corpus_to_conllu(sentences: list[SentenceRecord]) -> str:
    return "\n".join(sentence_to_conllu(s) for s in sentences)


def merge_treebanks(treebanks: list[list[SentenceRecord]]) -> Corpus:
    """Concatenate parsed treebanks of one language, keeping split labels."""
    if not treebanks:
        raise ConfigError("merge_treebanks: no treebanks given")
    languages = {s.language for tb in treebanks for s in tb}
    if len(languages) > 1:
        raise ConfigError(f"mixed language codes: {sorted(languages)}")
    if not languages:
        raise ConfigError("merge_treebanks: all treebanks are empty")
    sentences = [s for tb in treebanks for s in tb]
    return Corpus(language=languages.pop(), sentences=sentences)


@dataclass(frozen=True)
class CorpusStats:
    sentences_per_split: dict[str, int]
    n_tokens: int
    mean_sentence_length: float
    feature_inventory: dict[str, dict[str, int]]
    ambiguity_rate: float
    n_form_pos_pairs: int


def corpus_stats(corpus: Corpus,
                 features: tuple[str, ...] = TARGET_FEATURES) -> CorpusStats:
    """Summary statistics over a corpus.

    Ambiguity rate: fraction of distinct (form, POS) pairs attested with two
    or more distinct values for any single feature in `features`.
    """
    n_tokens = 0
    inventory: dict[str, Counter] = {}
    seen: dict[tuple[str, str], dict[str, set[str]]] = {}
    for sent in corpus.sentences:
        n_tokens += len(sent.tokens)
        for tok in sent.tokens:
            for name, value in tok.feats.items():
                inventory.setdefault(name, Counter())[value] += 1
            pair = seen.setdefault((tok.form, tok.upos), {})
            for feat in features:
                if feat in tok.feats:
                    pair.setdefault(feat, set()).add(tok.feats[feat])
    ambiguous = sum(
        1 for values in seen.values()
        if any(len(vs) >= 2 for vs in values.values()))
    n_pairs = len(seen)
    n_sents = len(corpus.sentences)
    return CorpusStats(
        sentences_per_split=corpus.split_counts,
        n_tokens=n_tokens,
        mean_sentence_length=(n_tokens / n_sents) if n_sents else 0.0,
        feature_inventory={k: dict(v) for k, v in sorted(inventory.items())},
        ambiguity_rate=(ambiguous / n_pairs) if n_pairs else 0.0,
        n_form_pos_pairs=n_pairs)

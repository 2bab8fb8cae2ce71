"""Inverted index with the collection statistics the smoothed scorer needs.

The on-disk format is a single JSON container with an explicit format
version, so round-trips are exact and files are diffable in tests.
"""

import json
import os
import tempfile
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import IndexFormatError, IndexingError, IndexVersionError
from .textproc import remove_stopwords, tokenize

INDEX_FORMAT = "clarank-index-v1"


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str


class Index:
    """Immutable term and document statistics over a tokenized corpus.

    Term ids are assigned in lexicographic order, so two indexes built from
    the same documents are observationally identical regardless of ingestion
    order. Document lengths are counted after stopword removal, which keeps
    the smoothing denominator consistent with the stored term frequencies.
    """

    def __init__(self, doc_lengths: dict[str, int],
                 vocabulary: dict[str, int],
                 postings: list[list[tuple[str, int]]],
                 collection_frequency: list[int]):
        self.doc_lengths = doc_lengths
        self.vocabulary = vocabulary
        self.postings = postings
        self.collection_frequency = collection_frequency
        self.collection_length = sum(doc_lengths.values())
        self.doc_count = len(doc_lengths)

    @classmethod
    def _from_tables(cls, doc_lengths: dict[str, int],
                     term_docs: dict[str, dict[str, int]]) -> "Index":
        vocabulary = {term: tid for tid, term in enumerate(sorted(term_docs))}
        postings: list[list[tuple[str, int]]] = [[] for _ in vocabulary]
        collection_frequency = [0] * len(vocabulary)
        for term, tid in vocabulary.items():
            plist = sorted(term_docs[term].items())
            postings[tid] = plist
            collection_frequency[tid] = sum(tf for _, tf in plist)
        return cls(doc_lengths, vocabulary, postings, collection_frequency)

    def term_stats(self, term: str) -> tuple[int, int]:
        """Return (document_frequency, collection_frequency); (0, 0) if unknown."""
        tid = self.vocabulary.get(term)
        if tid is None:
            return (0, 0)
        return (len(self.postings[tid]), self.collection_frequency[tid])

    def collection_prob(self, term: str) -> float:
        """Background probability cf(term) / collection_length."""
        tid = self.vocabulary.get(term)
        if tid is None or self.collection_length == 0:
            return 0.0
        return self.collection_frequency[tid] / self.collection_length

    def postings_map(self, term: str) -> dict[str, int]:
        """Postings for `term` as a doc_id -> tf mapping (empty if unknown)."""
        tid = self.vocabulary.get(term)
        if tid is None:
            return {}
        return dict(self.postings[tid])

    def tf(self, term: str, doc_id: str) -> int:
        tid = self.vocabulary.get(term)
        if tid is None:
            return 0
        for pid, freq in self.postings[tid]:
            if pid == doc_id:
                return freq
        return 0

    def doc_length(self, doc_id: str) -> int:
        return self.doc_lengths[doc_id]

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self.doc_lengths


def build_index(documents: Iterable[Document],
                stoplist: frozenset[str] | set[str] = frozenset()) -> Index:
    """Single-pass index build over a document stream.

    Documents whose tokens are all stopped are still indexed, with length 0.
    """
    doc_lengths: dict[str, int] = {}
    term_docs: dict[str, dict[str, int]] = {}
    for doc in documents:
        if not doc.doc_id:
            raise IndexingError("document with empty doc_id")
        if doc.doc_id in doc_lengths:
            raise IndexingError(f"duplicate doc_id: {doc.doc_id!r}")
        tokens = remove_stopwords(tokenize(doc.text), stoplist)
        doc_lengths[doc.doc_id] = len(tokens)
        for term, freq in Counter(tokens).items():
            term_docs.setdefault(term, {})[doc.doc_id] = freq
    return Index._from_tables(doc_lengths, term_docs)


def read_corpus(path: str | Path) -> Iterator[Document]:
    """Stream documents from a JSONL corpus: {"doc_id": ..., "text": ...} per line."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IndexingError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise IndexingError(f"{path}:{lineno}: expected an object per line")
            for field in ("doc_id", "text"):
                if field not in obj:
                    raise IndexingError(f"{path}:{lineno}: missing field {field!r}")
            yield Document(doc_id=str(obj["doc_id"]), text=str(obj["text"]))


def save_index(index: Index, path: str | Path) -> None:
    """Write the index as a versioned JSON container (atomic replace)."""
    terms = {}
    for term, tid in index.vocabulary.items():
        terms[term] = {
            "cf": index.collection_frequency[tid],
            "postings": [[doc_id, tf] for doc_id, tf in index.postings[tid]],
        }
    container = {
        "format": INDEX_FORMAT,
        "docs": index.doc_lengths,
        "terms": terms,
    }
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(container, fh, sort_keys=True, indent=1)
            fh.write("\n")
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def load_index(path: str | Path) -> Index:
    """Load an index container written by save_index.

    Raises IndexFormatError for unrecognizable or truncated files,
    IndexVersionError for a recognized container with the wrong version,
    and the usual OSError for unreadable paths.
    """
    with open(path, encoding="utf-8") as fh:
        try:
            container = json.load(fh)
        except json.JSONDecodeError as exc:
            raise IndexFormatError(
                f"{path}: not a clarank index container (truncated or invalid JSON)"
            ) from exc
    if not isinstance(container, dict) or "format" not in container:
        raise IndexFormatError(f"{path}: missing format header")
    version = container["format"]
    if version != INDEX_FORMAT:
        raise IndexVersionError(
            f"{path}: unsupported index version {version!r} (expected {INDEX_FORMAT!r})"
        )
    try:
        doc_lengths = {str(k): int(v) for k, v in container["docs"].items()}
        term_docs = {
            str(term): {str(doc_id): int(tf) for doc_id, tf in entry["postings"]}
            for term, entry in container["terms"].items()
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise IndexFormatError(f"{path}: malformed index container: {exc}") from exc
    index = Index._from_tables(doc_lengths, term_docs)
    for term, entry in container["terms"].items():
        if index.term_stats(term)[1] != entry["cf"]:
            raise IndexFormatError(
                f"{path}: inconsistent collection frequency for term {term!r}"
            )
    return index

"""Dirichlet-smoothed query-likelihood scoring with score interpolation.

Each conversation is scored as a convex combination of two components:
the initial query, and the concatenation of whichever clarification parts
(question, answer) the composition selects. Component scores are
length-normalized mean log-likelihoods, so a long clarification round
cannot dominate a short initial query by scale alone.
"""

import hashlib
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

from .conversations import ClarificationRound
from .errors import EmptyQueryError, UnseenTermError
from .index import Index
from .textproc import remove_stopwords, tokenize

MODES: tuple[str, ...] = ("q0", "q0q", "q0a", "q0qa")


@dataclass(frozen=True)
class CompositionSpec:
    """Which clarification parts join the initial query."""

    use_question: bool = False
    use_answer: bool = False

    @property
    def mode(self) -> str:
        return "q0" + ("q" if self.use_question else "") + ("a" if self.use_answer else "")

    @classmethod
    def from_mode(cls, mode: str) -> "CompositionSpec":
        if mode not in MODES:
            raise ValueError(f"unknown composition mode: {mode!r}")
        suffix = mode[2:]
        return cls(use_question="q" in suffix, use_answer="a" in suffix)


@dataclass(frozen=True)
class RankerConfig:
    """Scoring parameters; defaults: mu=2000, equal interpolation weight."""

    mu: float = 2000.0
    q0_weight: float = 0.5
    depth: int = 1000
    stoplist: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if not 0.0 <= self.q0_weight <= 1.0:
            raise ValueError(f"q0_weight must be in [0, 1], got {self.q0_weight}")
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")


@dataclass(frozen=True)
class ConversationKey:
    topic_id: str
    facet_id: str
    question_hash: str

    @property
    def facet_key(self) -> str:
        if self.facet_id.startswith(self.topic_id + "-"):
            return self.facet_id
        return f"{self.topic_id}-{self.facet_id}"


class RankEntry(NamedTuple):
    doc_id: str
    score: float
    rank: int


@dataclass(frozen=True)
class RankedList:
    key: ConversationKey
    entries: tuple[RankEntry, ...]

    @classmethod
    def from_scores(cls, key: ConversationKey, scores: dict[str, float],
                    depth: int) -> "RankedList":
        # Ties break by ascending doc_id, so output files reproduce exactly.
        ordered = sorted(scores.items(), key=lambda item: (-item[1], item[0]))[:depth]
        entries = tuple(
            RankEntry(doc_id, score, rank)
            for rank, (doc_id, score) in enumerate(ordered, start=1)
        )
        return cls(key, entries)


def conversation_key(round_: ClarificationRound) -> ConversationKey:
    digest = hashlib.sha1(round_.question.encode("utf-8")).hexdigest()[:12]
    return ConversationKey(round_.topic_id, round_.facet_id, digest)


def smoothed_log_prob(index: Index, term: str, doc_id: str, mu: float) -> float:
    """log P(term | doc) under Dirichlet prior smoothing.

    P = (tf + mu * cf/collection_length) / (doc_length + mu). Terms absent
    from the whole collection have no defined probability and raise
    UnseenTermError; callers drop them.
    """
    _, cf = index.term_stats(term)
    if cf == 0:
        raise UnseenTermError(f"term {term!r} does not occur in the collection")
    p_coll = cf / index.collection_length
    tf = index.tf(term, doc_id)
    return math.log((tf + mu * p_coll) / (index.doc_length(doc_id) + mu))


def ql_score(index: Index, query: list[str], doc_id: str, mu: float) -> float:
    """Mean smoothed log-likelihood of the query tokens under one document.

    Unseen tokens (collection frequency 0) are dropped first; if nothing
    survives the query cannot be scored.
    """
    terms = [t for t in query if index.term_stats(t)[1] > 0]
    if not terms:
        raise EmptyQueryError(f"no scoreable terms in query {query!r}")
    total = math.fsum(smoothed_log_prob(index, t, doc_id, mu) for t in terms)
    return total / len(terms)


def compose_query(round_: ClarificationRound, spec: CompositionSpec,
                  stoplist: frozenset[str] | set[str]) -> tuple[list[str], list[str]]:
    """Tokenize and stop the two query components.

    Returns (initial-query tokens, round tokens) where the round part is the
    concatenation of the selected clarification parts, question before answer.
    """
    q0_tokens = remove_stopwords(tokenize(round_.initial_query), stoplist)
    parts = []
    if spec.use_question:
        parts.append(round_.question)
    if spec.use_answer:
        parts.append(round_.answer)
    round_tokens = remove_stopwords(tokenize(" ".join(parts)), stoplist)
    return q0_tokens, round_tokens


def _component_scores(index: Index, tokens: list[str], mu: float) -> dict[str, float] | None:
    """Score every document against one query component.

    Returns None when no token survives the unseen-term drop, which callers
    treat as "this component is undefined".
    """
    terms = [t for t in tokens if index.term_stats(t)[1] > 0]
    if not terms:
        return None
    col_len = index.collection_length
    maps = [(index.postings_map(t), mu * index.collection_frequency[index.vocabulary[t]] / col_len)
            for t in terms]
    n = len(terms)
    scores: dict[str, float] = {}
    for doc_id, doc_len in index.doc_lengths.items():
        denom = doc_len + mu
        total = 0.0
        for postings, prior_mass in maps:
            total += math.log((postings.get(doc_id, 0) + prior_mass) / denom)
        scores[doc_id] = total / n
    return scores


def interpolated_rank(index: Index, round_: ClarificationRound,
                      spec: CompositionSpec, cfg: RankerConfig) -> RankedList:
    """Rank all indexed documents for one clarification round.

    Every document receives a score: under Dirichlet smoothing no document
    has zero probability, so restricting to postings-sharing candidates
    would change orderings near the cutoff. If the round component has no
    scoreable terms the initial query alone decides; an unscoreable initial
    query is an error.
    """
    q0_tokens, round_tokens = compose_query(round_, spec, cfg.stoplist)
    q0_scores = _component_scores(index, q0_tokens, cfg.mu)
    if q0_scores is None:
        raise EmptyQueryError(
            f"initial query has no scoreable terms: {round_.initial_query!r}"
        )
    round_scores = _component_scores(index, round_tokens, cfg.mu) if round_tokens else None

    if round_scores is None or cfg.q0_weight == 1.0:
        final = q0_scores
    elif cfg.q0_weight == 0.0:
        final = round_scores
    else:
        w = cfg.q0_weight
        final = {
            doc_id: w * score + (1.0 - w) * round_scores[doc_id]
            for doc_id, score in q0_scores.items()
        }
    return RankedList.from_scores(conversation_key(round_), final, cfg.depth)


def format_run_lines(ranked: RankedList, tag: str) -> list[str]:
    """TREC run lines: `<facet key> Q0 <doc_id> <rank> <score> <tag>`."""
    facet_key = ranked.key.facet_key
    return [
        f"{facet_key} Q0 {e.doc_id} {e.rank} {e.score:.6f} {tag}"
        for e in ranked.entries
    ]


def write_run(ranked_lists: Iterable[RankedList], path: str | Path, tag: str) -> None:
    """Write ranked lists to a TREC run file (atomic replace)."""
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for ranked in ranked_lists:
                for line in format_run_lines(ranked, tag):
                    fh.write(line + "\n")
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise

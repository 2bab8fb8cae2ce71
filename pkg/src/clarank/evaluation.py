"""Facet-level relevance judgments, NDCG@k, and run-file loading.

NDCG uses exponential gain (2^rel - 1) with a log2(rank+1) discount, the
standard graded formulation. Negative input grades are clamped to zero on
load (with a reported count) so gains stay non-negative.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MissingJudgmentsError, QrelsParseError, RunParseError
from .ranker import ConversationKey, RankedList, RankEntry


@dataclass
class Qrels:
    """Graded judgments keyed by facet ("topic-facet") then doc_id."""

    judgments: dict[str, dict[str, int]] = field(default_factory=dict)
    clamped: int = 0


def load_qrels(path: str | Path) -> Qrels:
    """Parse `<facet key> 0 <doc_id> <grade>` lines."""
    qrels = Qrels()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 4:
                raise QrelsParseError(
                    f"{path}:{lineno}: expected 4 fields, got {len(parts)}"
                )
            facet_key, _, doc_id, grade_str = parts
            try:
                grade = int(grade_str)
            except ValueError:
                raise QrelsParseError(
                    f"{path}:{lineno}: grade {grade_str!r} is not an integer"
                ) from None
            if grade < 0:
                grade = 0
                qrels.clamped += 1
            per_facet = qrels.judgments.setdefault(facet_key, {})
            if doc_id in per_facet:
                raise QrelsParseError(
                    f"{path}:{lineno}: duplicate judgment for ({facet_key}, {doc_id})"
                )
            per_facet[doc_id] = grade
    return qrels


def _gain(grade: int) -> float:
    return float(2 ** grade - 1)


def ndcg_at_k(ranked: RankedList, qrels: Qrels, k: int) -> float:
    """NDCG@k for one ranked list against its facet's judgments.

    A facet with judgments but no relevant document is unjudgeable and
    scores 0; a facet absent from the qrels is an error.
    """
    facet_key = ranked.key.facet_key
    grades = qrels.judgments.get(facet_key)
    if grades is None:
        raise MissingJudgmentsError(f"no judgments for facet {facet_key!r}")
    ideal = sorted(grades.values(), reverse=True)[:k]
    idcg = math.fsum(_gain(g) / math.log2(i + 2) for i, g in enumerate(ideal))
    if idcg == 0.0:
        return 0.0
    dcg = math.fsum(
        _gain(grades.get(entry.doc_id, 0)) / math.log2(entry.rank + 1)
        for entry in ranked.entries[:k]
    )
    return dcg / idcg


def conversation_keys(ranked_lists: list[RankedList]) -> list[str]:
    """Stable per-conversation key strings: facet key plus occurrence ordinal.

    The ordinal disambiguates facets that appear with several questions and
    keeps pairing consistent across runs over the same conversation file.
    """
    seen: dict[str, int] = {}
    keys = []
    for ranked in ranked_lists:
        facet_key = ranked.key.facet_key
        occurrence = seen.get(facet_key, 0)
        seen[facet_key] = occurrence + 1
        keys.append(f"{facet_key}#{occurrence}")
    return keys


@dataclass
class EvalResult:
    """Per-conversation NDCG scores for one run."""

    k: int
    keys: list[str]
    scores: list[float]
    unjudgeable: list[str]

    @property
    def mean(self) -> float:
        return math.fsum(self.scores) / len(self.scores) if self.scores else 0.0

    @property
    def per_conversation(self) -> dict[str, float]:
        return dict(zip(self.keys, self.scores))

    def to_csv(self) -> str:
        lines = ["key,ndcg"]
        lines.extend(f"{key},{score:.6f}" for key, score in zip(self.keys, self.scores))
        return "\n".join(lines) + "\n"


def evaluate_run(ranked_lists: list[RankedList], qrels: Qrels, k: int = 20) -> EvalResult:
    keys = conversation_keys(ranked_lists)
    scores = []
    unjudgeable = []
    for key, ranked in zip(keys, ranked_lists):
        score = ndcg_at_k(ranked, qrels, k)
        facet_grades = qrels.judgments[ranked.key.facet_key]
        if not any(g > 0 for g in facet_grades.values()):
            unjudgeable.append(key)
        scores.append(score)
    return EvalResult(k=k, keys=keys, scores=scores, unjudgeable=unjudgeable)


def load_run(path: str | Path) -> list[RankedList]:
    """Parse a TREC run file back into ranked lists.

    Lists written for the same facet key are split apart wherever the rank
    field restarts at 1; within a list ranks must be contiguous from 1.
    """
    lists: list[RankedList] = []
    current_key: str | None = None
    current_entries: list[RankEntry] = []
    block = 0

    def flush():
        nonlocal current_entries
        if current_key is not None and current_entries:
            topic_id, _, facet_id = current_key.partition("-")
            key = ConversationKey(topic_id, facet_id, f"run{len(lists)}")
            lists.append(RankedList(key, tuple(current_entries)))
            current_entries = []

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 6:
                raise RunParseError(f"{path}:{lineno}: expected 6 fields, got {len(parts)}")
            qid, _, doc_id, rank_str, score_str, _tag = parts
            try:
                rank = int(rank_str)
                score = float(score_str)
            except ValueError:
                raise RunParseError(f"{path}:{lineno}: bad rank or score") from None
            if rank == 1:
                flush()
                current_key = qid
                block = 1
            else:
                if qid != current_key:
                    raise RunParseError(
                        f"{path}:{lineno}: new key {qid!r} must start at rank 1"
                    )
                block += 1
                if rank != block:
                    raise RunParseError(
                        f"{path}:{lineno}: rank gap (expected {block}, got {rank})"
                    )
            current_entries.append(RankEntry(doc_id, score, rank))
    flush()
    return lists

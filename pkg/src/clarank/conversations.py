"""Clarification rounds and the polarity/length answer heuristics.

A round is the triple (initial query, clarifying question, user answer).
Answers are classified on surface tokens only: "yes"/"no" membership for
polarity, token count for length.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, NamedTuple

from .errors import ConversationParseError
from .textproc import tokenize

Polarity = Literal["P", "N", "idk", "O"]
Length = Literal["single", "multi"]

POLARITIES: tuple[str, ...] = ("P", "N", "idk", "O")
LENGTHS: tuple[str, ...] = ("single", "multi")

# Matched as a contiguous token triple, after apostrophe stripping, so both
# "I don't know" and "i dont know" hit it.
_IDK = ("i", "dont", "know")

CONVERSATION_FIELDS = ("topic_id", "facet_id", "initial_query", "question", "answer")


@dataclass(frozen=True)
class ClarificationRound:
    topic_id: str
    facet_id: str
    initial_query: str
    question: str
    answer: str

    @property
    def facet_key(self) -> str:
        """Qualified facet key used by judgments and run files.

        Facet ids that already carry the topic prefix (e.g. "21-2" under
        topic "21") are used as-is; bare ids get the prefix attached.
        """
        if self.facet_id.startswith(self.topic_id + "-"):
            return self.facet_id
        return f"{self.topic_id}-{self.facet_id}"


class AnswerType(NamedTuple):
    polarity: str
    length: str


def classify_polarity(answer: str) -> str:
    """Classify an answer as P, N, idk, or O.

    The idk triple is checked first so "I don't know, no" is idk rather
    than N; otherwise the first occurrence of "yes" or "no" decides.
    """
    tokens = tokenize(answer)
    for i in range(len(tokens) - 2):
        if tokens[i] == "i" and tokens[i + 1] == "dont" and tokens[i + 2] == "know":
            return "idk"
    for token in tokens:
        if token == "yes":
            return "P"
        if token == "no":
            return "N"
    return "O"


def classify_length(answer: str) -> str:
    """single for answers of at most one token (stopwords retained), else multi."""
    return "single" if len(tokenize(answer)) <= 1 else "multi"


def classify_answer(answer: str) -> AnswerType:
    return AnswerType(classify_polarity(answer), classify_length(answer))


def parse_conversations(path: str | Path) -> list[ClarificationRound]:
    """Read a JSONL conversation file, one round per line.

    Required fields: topic_id, facet_id, initial_query, question, answer.
    Errors carry the offending line number.
    """
    rounds: list[ClarificationRound] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ConversationParseError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise ConversationParseError(f"{path}:{lineno}: expected an object per line")
            values = {}
            for field in CONVERSATION_FIELDS:
                if field not in obj:
                    raise ConversationParseError(f"{path}:{lineno}: missing field {field!r}")
                value = obj[field]
                if not isinstance(value, str):
                    if isinstance(value, (int, float)):
                        value = str(value)
                    else:
                        raise ConversationParseError(
                            f"{path}:{lineno}: field {field!r} must be a string"
                        )
                values[field] = value
            if not values["initial_query"]:
                raise ConversationParseError(
                    f"{path}:{lineno}: field 'initial_query' must be non-empty"
                )
            rounds.append(ClarificationRound(**values))
    return rounds

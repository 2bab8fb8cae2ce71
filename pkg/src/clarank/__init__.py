"""clarank: query-likelihood document ranking for single-round clarification
conversations, with answer-type heuristics, composition policies, NDCG@k
evaluation, and the accompanying statistical analyses."""

from .conversations import (
    AnswerType,
    ClarificationRound,
    classify_answer,
    classify_length,
    classify_polarity,
    parse_conversations,
)
from .errors import ClarankError, ConfigError, DataError
from .evaluation import EvalResult, Qrels, evaluate_run, load_qrels, load_run, ndcg_at_k
from .index import Document, Index, build_index, load_index, read_corpus, save_index
from .policy import default_policy, load_policy, select_composition
from .ranker import (
    CompositionSpec,
    RankedList,
    RankerConfig,
    compose_query,
    interpolated_rank,
    ql_score,
    smoothed_log_prob,
    write_run,
)
from .stats import paired_t_test, pearson
from .textproc import load_stoplist, remove_stopwords, tokenize

__version__ = "0.1.0"

__all__ = [
    "AnswerType",
    "ClarankError",
    "ClarificationRound",
    "CompositionSpec",
    "ConfigError",
    "DataError",
    "Document",
    "EvalResult",
    "Index",
    "Qrels",
    "RankedList",
    "RankerConfig",
    "build_index",
    "classify_answer",
    "classify_length",
    "classify_polarity",
    "compose_query",
    "default_policy",
    "evaluate_run",
    "interpolated_rank",
    "load_index",
    "load_policy",
    "load_qrels",
    "load_run",
    "load_stoplist",
    "ndcg_at_k",
    "paired_t_test",
    "parse_conversations",
    "pearson",
    "ql_score",
    "read_corpus",
    "remove_stopwords",
    "save_index",
    "select_composition",
    "smoothed_log_prob",
    "tokenize",
    "write_run",
]

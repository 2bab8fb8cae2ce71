"""Aggregate analyses over per-conversation ranking outcomes: answer-type
tables, facet/length correlations, delta scatter data, and the answer
prefix tree."""

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field

from .conversations import LENGTHS, POLARITIES, AnswerType, ClarificationRound, classify_answer
from .errors import DataError, DegenerateVarianceError, InsufficientDataError
from .evaluation import Qrels, conversation_keys, ndcg_at_k
from .ranker import RankedList
from .stats import paired_t_test, pearson
from .textproc import tokenize

SIGNIFICANCE_LEVEL = 0.05

# Table row order: the four-composition table lists cells in this order.
CELL_ORDER: tuple[tuple[str, str], ...] = tuple(
    (polarity, length) for polarity in POLARITIES for length in LENGTHS
)


@dataclass(frozen=True)
class DeltaRecord:
    """One conversation's NDCG under the four compositions."""

    key: str
    answer_type: AnswerType
    ndcg_q0: float
    ndcg_q: float
    ndcg_a: float
    ndcg_qa: float

    @property
    def delta_q(self) -> float:
        return self.ndcg_q - self.ndcg_q0

    @property
    def delta_a(self) -> float:
        return self.ndcg_a - self.ndcg_q0

    @property
    def delta_qa(self) -> float:
        return self.ndcg_qa - self.ndcg_q0


def collect_delta_records(rounds: list[ClarificationRound],
                          runs_by_mode: dict[str, list[RankedList]],
                          qrels: Qrels, k: int = 20) -> list[DeltaRecord]:
    """Join the four composition runs with their conversations.

    Run files carry conversations in file order, so the i-th ranked list of
    every mode must belong to the i-th (non-skipped) round; facet keys are
    cross-checked to catch misaligned inputs.
    """
    for mode in ("q0", "q0q", "q0a", "q0qa"):
        if mode not in runs_by_mode:
            raise DataError(f"missing run for composition mode {mode!r}")
        if len(runs_by_mode[mode]) != len(rounds):
            raise DataError(
                f"run for mode {mode!r} has {len(runs_by_mode[mode])} lists "
                f"but {len(rounds)} conversations were given"
            )
    keys = conversation_keys(runs_by_mode["q0"])
    records = []
    for i, round_ in enumerate(rounds):
        per_mode = {}
        for mode, lists in runs_by_mode.items():
            ranked = lists[i]
            if ranked.key.facet_key != round_.facet_key:
                raise DataError(
                    f"run for mode {mode!r} entry {i} is for facet "
                    f"{ranked.key.facet_key!r}, expected {round_.facet_key!r}"
                )
            per_mode[mode] = ndcg_at_k(ranked, qrels, k)
        records.append(DeltaRecord(
            key=keys[i],
            answer_type=classify_answer(round_.answer),
            ndcg_q0=per_mode["q0"],
            ndcg_q=per_mode["q0q"],
            ndcg_a=per_mode["q0a"],
            ndcg_qa=per_mode["q0qa"],
        ))
    return records


@dataclass(frozen=True)
class TypeCell:
    """One (polarity, length) row of the per-type performance table."""

    polarity: str
    length: str
    n: int
    mean_q0: float | None = None
    mean_q: float | None = None
    mean_a: float | None = None
    mean_qa: float | None = None
    delta_q_pct: float | None = None
    delta_a_pct: float | None = None
    delta_qa_pct: float | None = None
    sig_q: bool = False
    sig_a: bool = False
    sig_qa: bool = False


def _mean(values: list[float]) -> float:
    return math.fsum(values) / len(values)


def _significant(scores: list[float], baseline: list[float]) -> bool:
    try:
        _, p = paired_t_test(scores, baseline)
    except InsufficientDataError:
        return False
    except DegenerateVarianceError:
        # Constant non-zero shift: every conversation moved by the same
        # amount, which is as unambiguous as a difference gets.
        return True
    return p < SIGNIFICANCE_LEVEL


def _delta_pct(mean_x: float, mean_q0: float) -> float | None:
    if mean_q0 == 0.0:
        return None
    return 100.0 * (mean_x - mean_q0) / mean_q0


def per_type_table(records: list[DeltaRecord]) -> list[TypeCell]:
    """Mean NDCG of each composition per (polarity, length) cell.

    Emits a row for every cell, including empty ones; the significance flag
    marks a paired-t p below 0.05 against the initial-query baseline.
    """
    by_cell: dict[tuple[str, str], list[DeltaRecord]] = defaultdict(list)
    for record in records:
        by_cell[(record.answer_type.polarity, record.answer_type.length)].append(record)
    rows = []
    for polarity, length in CELL_ORDER:
        cell = by_cell.get((polarity, length), [])
        if not cell:
            rows.append(TypeCell(polarity, length, 0))
            continue
        q0 = [r.ndcg_q0 for r in cell]
        q = [r.ndcg_q for r in cell]
        a = [r.ndcg_a for r in cell]
        qa = [r.ndcg_qa for r in cell]
        mean_q0 = _mean(q0)
        rows.append(TypeCell(
            polarity=polarity,
            length=length,
            n=len(cell),
            mean_q0=mean_q0,
            mean_q=_mean(q),
            mean_a=_mean(a),
            mean_qa=_mean(qa),
            delta_q_pct=_delta_pct(_mean(q), mean_q0),
            delta_a_pct=_delta_pct(_mean(a), mean_q0),
            delta_qa_pct=_delta_pct(_mean(qa), mean_q0),
            sig_q=_significant(q, q0),
            sig_a=_significant(a, q0),
            sig_qa=_significant(qa, q0),
        ))
    return rows


@dataclass(frozen=True)
class CorrelationRow:
    x_label: str
    y_label: str
    r: float
    p: float
    n: int


def facet_polarity_correlation(records: list[DeltaRecord]) -> list[CorrelationRow]:
    """Correlate per-facet baseline NDCG with answer-polarity percentages.

    Facets are the part of the record key before the occurrence ordinal;
    rows cover the positive, negative, and remaining answer shares.
    """
    by_facet: dict[str, list[DeltaRecord]] = defaultdict(list)
    for record in records:
        facet_key = record.key.rsplit("#", 1)[0]
        by_facet[facet_key].append(record)
    if len(by_facet) < 3:
        raise InsufficientDataError(
            f"facet correlation needs >= 3 facets, got {len(by_facet)}"
        )
    facets = sorted(by_facet)
    ndcg_q0 = []
    pct = {"P": [], "N": [], "rest": []}
    for facet_key in facets:
        cell = by_facet[facet_key]
        ndcg_q0.append(_mean([r.ndcg_q0 for r in cell]))
        n = len(cell)
        n_pos = sum(1 for r in cell if r.answer_type.polarity == "P")
        n_neg = sum(1 for r in cell if r.answer_type.polarity == "N")
        pct["P"].append(100.0 * n_pos / n)
        pct["N"].append(100.0 * n_neg / n)
        pct["rest"].append(100.0 * (n - n_pos - n_neg) / n)
    rows = []
    for label in ("P", "N", "rest"):
        r, p = pearson(ndcg_q0, pct[label])
        rows.append(CorrelationRow("ndcg_q0", f"pct_{label}", r, p, len(facets)))
    return rows


def length_delta_correlation(records: list[DeltaRecord],
                             token_counts: dict[str, tuple[int, int]]) -> list[CorrelationRow]:
    """Correlate question/answer token counts with NDCG deltas.

    `token_counts` maps record keys to (question tokens, answer tokens),
    both counted after stopword removal. Five pairings are reported.
    """
    try:
        q_len = [float(token_counts[r.key][0]) for r in records]
        a_len = [float(token_counts[r.key][1]) for r in records]
    except KeyError as exc:
        raise DataError(f"no token counts for conversation {exc.args[0]!r}") from None
    qa_len = [q + a for q, a in zip(q_len, a_len)]
    d_q = [r.delta_q for r in records]
    d_a = [r.delta_a for r in records]
    d_qa = [r.delta_qa for r in records]
    pairings = [
        ("question_tokens", q_len, "delta_q", d_q),
        ("question_tokens", q_len, "delta_qa", d_qa),
        ("answer_tokens", a_len, "delta_a", d_a),
        ("answer_tokens", a_len, "delta_qa", d_qa),
        ("round_tokens", qa_len, "delta_qa", d_qa),
    ]
    rows = []
    for x_label, x, y_label, y in pairings:
        r, p = pearson(x, y)
        rows.append(CorrelationRow(x_label, y_label, r, p, len(records)))
    return rows


SCATTER_BUCKETS = (
    "both-improve",
    "question-improves-answer-harms",
    "answer-improves-question-harms",
    "both-harm",
    "axis",
)


@dataclass(frozen=True)
class ScatterPoint:
    key: str
    delta_q: float
    delta_a: float
    delta_qa: float
    bucket: str


@dataclass(frozen=True)
class ScatterResult:
    points: list[ScatterPoint]
    counts: dict[str, int]


def _bucket(delta_q: float, delta_a: float) -> str:
    if delta_q == 0.0 or delta_a == 0.0:
        return "axis"
    if delta_q > 0.0:
        return "both-improve" if delta_a > 0.0 else "question-improves-answer-harms"
    return "answer-improves-question-harms" if delta_a > 0.0 else "both-harm"


def delta_scatter(records: list[DeltaRecord]) -> ScatterResult:
    """Plot-ready delta triples with sign-quadrant counts.

    Callers pass records already filtered to the population of interest
    (positive multi-word answers for the headline plot). Zero deltas land
    in the axis bucket rather than any quadrant.
    """
    points = []
    counts = {bucket: 0 for bucket in SCATTER_BUCKETS}
    for record in records:
        bucket = _bucket(record.delta_q, record.delta_a)
        counts[bucket] += 1
        points.append(ScatterPoint(
            record.key, record.delta_q, record.delta_a, record.delta_qa, bucket,
        ))
    return ScatterResult(points=points, counts=counts)


@dataclass
class NgramNode:
    """Prefix-tree node counting how answers open, token by token."""

    token: str
    count: int = 0
    children: dict[str, "NgramNode"] = field(default_factory=dict)

    def to_dict(self, min_count: int = 1) -> dict:
        kept = sorted(
            (child for child in self.children.values() if child.count >= min_count),
            key=lambda c: (-c.count, c.token),
        )
        return {
            "token": self.token,
            "count": self.count,
            "children": [child.to_dict(min_count) for child in kept],
        }

    def to_json(self, min_count: int = 1) -> str:
        return json.dumps(self.to_dict(min_count), indent=1) + "\n"


def answer_ngram_tree(answers: list[str], n: int = 4) -> NgramNode:
    """Count the first `n` tokens of every answer into a prefix tree.

    Stopwords are retained: answer openings like "no i am ..." are the
    point of the tree. Empty answers contribute nothing.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    root = NgramNode("START")
    for answer in answers:
        tokens = tokenize(answer)[:n]
        if not tokens:
            continue
        root.count += 1
        node = root
        for token in tokens:
            child = node.children.get(token)
            if child is None:
                child = NgramNode(token)
                node.children[token] = child
            child.count += 1
            node = child
    return root


def _fmt(value: float | None, spec: str = ".3f") -> str:
    return "-" if value is None else format(value, spec)


def type_table_to_csv(rows: list[TypeCell]) -> str:
    header = ("polarity,length,n,ndcg_q0,ndcg_q0q,delta_q_pct,sig_q,"
              "ndcg_q0a,delta_a_pct,sig_a,ndcg_q0qa,delta_qa_pct,sig_qa")
    lines = [header]
    for row in rows:
        lines.append(",".join([
            row.polarity, row.length, str(row.n),
            _fmt(row.mean_q0, ".6f"), _fmt(row.mean_q, ".6f"),
            _fmt(row.delta_q_pct, ".2f"), str(int(row.sig_q)),
            _fmt(row.mean_a, ".6f"), _fmt(row.delta_a_pct, ".2f"), str(int(row.sig_a)),
            _fmt(row.mean_qa, ".6f"), _fmt(row.delta_qa_pct, ".2f"), str(int(row.sig_qa)),
        ]))
    return "\n".join(lines) + "\n"


def type_table_to_text(rows: list[TypeCell]) -> str:
    def cell(mean, pct, sig):
        if mean is None:
            return f"{'-':>8} {'':>9}"
        mark = "+" if sig else " "
        pct_str = "" if pct is None else f"{pct:+.1f}%{mark}"
        return f"{mean:8.3f} {pct_str:>9}"

    lines = [
        f"{'type':<12} {'n':>5}  {'q0':>8}  {'q0+q':>8} {'delta':>9}  "
        f"{'q0+a':>8} {'delta':>9}  {'q0+q+a':>8} {'delta':>9}",
    ]
    for row in rows:
        label = f"{row.polarity}/{row.length}"
        q0 = "-" if row.mean_q0 is None else f"{row.mean_q0:.3f}"
        lines.append(
            f"{label:<12} {row.n:>5}  {q0:>8}  "
            f"{cell(row.mean_q, row.delta_q_pct, row.sig_q)}  "
            f"{cell(row.mean_a, row.delta_a_pct, row.sig_a)}  "
            f"{cell(row.mean_qa, row.delta_qa_pct, row.sig_qa)}"
        )
    lines.append("")
    lines.append("delta percentages are vs q0; '+' marks p < 0.05 (paired t-test)")
    return "\n".join(lines) + "\n"


def correlations_to_csv(rows: list[CorrelationRow]) -> str:
    lines = ["x,y,r,p,n"]
    lines.extend(
        f"{row.x_label},{row.y_label},{row.r:.6f},{row.p:.6g},{row.n}" for row in rows
    )
    return "\n".join(lines) + "\n"


def scatter_to_csv(result: ScatterResult) -> str:
    lines = ["key,delta_q,delta_a,delta_qa,quadrant"]
    lines.extend(
        f"{p.key},{p.delta_q:.6f},{p.delta_a:.6f},{p.delta_qa:.6f},{p.bucket}"
        for p in result.points
    )
    return "\n".join(lines) + "\n"

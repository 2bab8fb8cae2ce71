"""Command-line pipeline: index, split, rank, eval, analyze.

All outputs are written atomically and are byte-deterministic for a fixed
config, seed, and input set, regardless of thread count.
"""

import argparse
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import analysis
from .config import ExperimentConfig, resolve_config
from .conversations import ClarificationRound, classify_answer, parse_conversations
from .errors import (
    ClarankError,
    ConfigError,
    DataError,
    EmptyQueryError,
    MissingJudgmentsError,
)
from .evaluation import conversation_keys, evaluate_run, load_qrels, load_run
from .index import build_index, load_index, read_corpus, save_index
from .policy import default_policy, load_policy, select_composition
from .ranker import CompositionSpec, RankerConfig, interpolated_rank, write_run
from .stats import paired_t_test
from .textproc import load_stoplist, remove_stopwords, tokenize

_MASK64 = (1 << 64) - 1


def _splitmix64_stream(seed: int):
    # splitmix64: documented 64-bit generator, identical on every platform.
    state = seed & _MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield z ^ (z >> 31)


def seeded_shuffle(items: list, seed: int) -> list:
    """Fisher-Yates shuffle driven by splitmix64; reproducible everywhere."""
    out = list(items)
    stream = _splitmix64_stream(seed)
    for i in range(len(out) - 1, 0, -1):
        j = next(stream) % (i + 1)
        out[i], out[j] = out[j], out[i]
    return out


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def _require(cfg: ExperimentConfig, *keys: str) -> None:
    for key in keys:
        if getattr(cfg, key) is None:
            raise ConfigError(f"missing required setting {key!r} (flag or config file)")


def _read_topic_filter(path: Path) -> set[str]:
    if not path.is_file():
        raise DataError(f"topics file not found: {path}")
    return {
        line.strip() for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip()
    }


def _filtered_rounds(cfg: ExperimentConfig) -> list[ClarificationRound]:
    rounds = parse_conversations(cfg.conversations)
    if cfg.topics is not None:
        keep = _read_topic_filter(cfg.topics)
        rounds = [r for r in rounds if r.topic_id in keep]
    return rounds


def cmd_index_build(cfg: ExperimentConfig, out: Path) -> int:
    _require(cfg, "corpus")
    stoplist = load_stoplist(cfg.stoplist)
    index = build_index(read_corpus(cfg.corpus), stoplist)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_index(index, out)
    print(f"indexed {index.doc_count} documents, "
          f"{len(index.vocabulary)} terms, "
          f"collection length {index.collection_length} -> {out}")
    return 0


def cmd_split(cfg: ExperimentConfig, topics_file: Path | None) -> int:
    if topics_file is not None:
        topics = sorted(_read_topic_filter(topics_file))
    else:
        _require(cfg, "conversations")
        topics = sorted({r.topic_id for r in parse_conversations(cfg.conversations)})
    if not topics:
        raise DataError("no topics found to split")
    if cfg.n_test >= len(topics):
        raise ConfigError(
            f"n_test must be smaller than the topic count ({cfg.n_test} >= {len(topics)})"
        )
    shuffled = seeded_shuffle(topics, cfg.seed)
    test = sorted(shuffled[:cfg.n_test])
    train = sorted(shuffled[cfg.n_test:])
    out_dir = cfg.output_dir
    _write_text(out_dir / "topics-train.txt", "".join(t + "\n" for t in train))
    _write_text(out_dir / "topics-test.txt", "".join(t + "\n" for t in test))
    print(f"split {len(topics)} topics into {len(train)} train / {len(test)} test "
          f"(seed {cfg.seed}) -> {out_dir}")
    return 0


def _rank_one(index, round_, mode, policy, rcfg):
    if mode == "heuristic":
        spec = select_composition(classify_answer(round_.answer), policy)
    else:
        spec = CompositionSpec.from_mode(mode)
    try:
        return ("ok", interpolated_rank(index, round_, spec, rcfg))
    except EmptyQueryError as exc:
        return ("skip", str(exc))


def cmd_rank(cfg: ExperimentConfig, out: Path | None) -> int:
    _require(cfg, "index", "conversations")
    index = load_index(cfg.index)
    stoplist = load_stoplist(cfg.stoplist)
    rounds = _filtered_rounds(cfg)
    policy = load_policy(cfg.policy) if cfg.policy is not None else default_policy()
    rcfg = RankerConfig(mu=cfg.mu, q0_weight=cfg.q0_weight, depth=cfg.depth,
                        stoplist=stoplist)
    run_path = out if out is not None else cfg.output_dir / f"run-{cfg.mode}.trec"
    run_path.parent.mkdir(parents=True, exist_ok=True)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(
                lambda r: _rank_one(index, r, cfg.mode, policy, rcfg), rounds
            ))
    else:
        results = [_rank_one(index, r, cfg.mode, policy, rcfg) for r in rounds]

    ranked = [payload for status, payload in results if status == "ok"]
    skipped = [
        (ordinal, rounds[ordinal].facet_key, payload)
        for ordinal, (status, payload) in enumerate(results)
        if status == "skip"
    ]
    tag = cfg.tag if cfg.tag is not None else cfg.mode
    write_run(ranked, run_path, tag)
    # Sidecar skip log: sample counts must stay auditable.
    skip_lines = "".join(
        f"{ordinal}\t{facet_key}\t{reason}\n" for ordinal, facet_key, reason in skipped
    )
    _write_text(Path(str(run_path) + ".skipped"), skip_lines)
    print(f"ranked {len(ranked)} conversations (mode {cfg.mode}, "
          f"{len(skipped)} skipped) -> {run_path}")
    return 0


def _run_tag(path: Path) -> str:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if len(parts) == 6:
                return parts[5]
            if line.strip():
                break
    return path.stem


def cmd_eval(cfg: ExperimentConfig, run_paths: list[Path]) -> int:
    _require(cfg, "qrels")
    qrels = load_qrels(cfg.qrels)
    runs = []
    seen_tags = set()
    for path in run_paths:
        tag = _run_tag(path)
        if tag in seen_tags:
            raise ConfigError(f"duplicate run tag {tag!r}; pass runs with distinct tags")
        seen_tags.add(tag)
        runs.append((tag, load_run(path)))

    missing = sorted({
        ranked.key.facet_key
        for _, lists in runs
        for ranked in lists
        if ranked.key.facet_key not in qrels.judgments
    })
    if missing:
        raise MissingJudgmentsError(
            "facets missing from qrels: " + ", ".join(missing)
        )

    results = [(tag, evaluate_run(lists, qrels, cfg.ndcg_k)) for tag, lists in runs]
    baseline_tag = "heuristic" if "heuristic" in seen_tags else results[0][0]
    baseline = dict(results)[baseline_tag]

    ttests = []
    for tag, result in results:
        if tag == baseline_tag:
            continue
        t, p = paired_t_test(baseline.per_conversation, result.per_conversation)
        ttests.append((tag, t, p))

    out_dir = cfg.output_dir
    lines = [f"{'run':<12} {'n':>6} {'mean-ndcg@' + str(cfg.ndcg_k):>14} {'unjudged':>9}"]
    for tag, result in results:
        lines.append(f"{tag:<12} {len(result.scores):>6} {result.mean:>14.6f} "
                     f"{len(result.unjudgeable):>9}")
    if qrels.clamped:
        lines.append(f"(clamped {qrels.clamped} negative qrel grades to 0)")
    if ttests:
        lines.append("")
        lines.append(f"paired t-tests vs baseline '{baseline_tag}':")
        for tag, t, p in ttests:
            mark = "significant" if p < 0.05 else "not significant"
            lines.append(f"  vs {tag:<12} t={t:+.4f}  p={p:.6g}  {mark} at 0.05")
    report = "\n".join(lines) + "\n"

    summary_csv = ["run,n,mean_ndcg,unjudgeable"]
    summary_csv.extend(
        f"{tag},{len(r.scores)},{r.mean:.6f},{len(r.unjudgeable)}" for tag, r in results
    )
    _write_text(out_dir / "eval_report.csv", "\n".join(summary_csv) + "\n")
    if ttests:
        ttest_csv = ["baseline,run,t,p"]
        ttest_csv.extend(f"{baseline_tag},{tag},{t:.6f},{p:.6g}" for tag, t, p in ttests)
        _write_text(out_dir / "eval_ttests.csv", "\n".join(ttest_csv) + "\n")
    for tag, result in results:
        _write_text(out_dir / f"eval-{tag}.csv", result.to_csv())
    _write_text(out_dir / "eval_report.txt", report)
    print(report, end="")
    return 0


def _load_mode_runs(cfg: ExperimentConfig, runs_dir: Path, modes: list[str]):
    lists_by_mode = {}
    skip_sets = {}
    for mode in modes:
        path = runs_dir / f"run-{mode}.trec"
        if not path.is_file():
            raise DataError(
                f"missing run file for composition mode {mode!r}: {path} "
                f"(run `clarank rank --mode {mode}` first)"
            )
        lists_by_mode[mode] = load_run(path)
        sidecar = Path(str(path) + ".skipped")
        skipped = set()
        if sidecar.is_file():
            for line in sidecar.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    skipped.add(int(line.split("\t")[0]))
        skip_sets[mode] = skipped
    if len({frozenset(s) for s in skip_sets.values()}) > 1:
        raise DataError("run files skipped different conversations; regenerate them "
                        "from the same conversation file")
    return lists_by_mode, skip_sets[modes[0]]


def _kept_rounds(cfg: ExperimentConfig, skipped: set[int]) -> list[ClarificationRound]:
    rounds = _filtered_rounds(cfg)
    return [r for i, r in enumerate(rounds) if i not in skipped]


def cmd_analyze(cfg: ExperimentConfig, which: str, runs_dir: Path | None,
                ngram_depth: int, min_count: int) -> int:
    _require(cfg, "conversations")
    out_dir = cfg.output_dir
    if which == "ngrams":
        rounds = _filtered_rounds(cfg)
        tree = analysis.answer_ngram_tree([r.answer for r in rounds], n=ngram_depth)
        _write_text(out_dir / "ngrams.json", tree.to_json(min_count))
        print(f"prefix tree over {tree.count} answers -> {out_dir / 'ngrams.json'}")
        return 0

    _require(cfg, "qrels")
    qrels = load_qrels(cfg.qrels)
    effective_runs_dir = runs_dir if runs_dir is not None else cfg.output_dir
    modes = ["q0"] if which == "polarity-corr" else ["q0", "q0q", "q0a", "q0qa"]
    lists_by_mode, skipped = _load_mode_runs(cfg, effective_runs_dir, modes)
    rounds = _kept_rounds(cfg, skipped)
    if which == "polarity-corr":
        # Only the baseline scores matter for this table.
        lists_by_mode = {m: lists_by_mode["q0"] for m in ("q0", "q0q", "q0a", "q0qa")}
    records = analysis.collect_delta_records(rounds, lists_by_mode, qrels, cfg.ndcg_k)

    if which == "table1":
        rows = analysis.per_type_table(records)
        _write_text(out_dir / "table1.csv", analysis.type_table_to_csv(rows))
        text = analysis.type_table_to_text(rows)
        _write_text(out_dir / "table1.txt", text)
        print(text, end="")
    elif which == "polarity-corr":
        rows = analysis.facet_polarity_correlation(records)
        _write_text(out_dir / "polarity_corr.csv", analysis.correlations_to_csv(rows))
        for row in rows:
            print(f"{row.y_label:<9} r={row.r:+.4f}  p={row.p:.6g}  (n={row.n} facets)")
    elif which == "length-corr":
        stoplist = load_stoplist(cfg.stoplist)
        token_counts = {
            record.key: (
                len(remove_stopwords(tokenize(round_.question), stoplist)),
                len(remove_stopwords(tokenize(round_.answer), stoplist)),
            )
            for record, round_ in zip(records, rounds)
        }
        rows = analysis.length_delta_correlation(records, token_counts)
        _write_text(out_dir / "length_corr.csv", analysis.correlations_to_csv(rows))
        for row in rows:
            print(f"{row.x_label:<16} vs {row.y_label:<9} r={row.r:+.4f}  p={row.p:.6g}")
    elif which == "scatter":
        positive_multi = [
            r for r in records
            if r.answer_type.polarity == "P" and r.answer_type.length == "multi"
        ]
        result = analysis.delta_scatter(positive_multi)
        _write_text(out_dir / "scatter.csv", analysis.scatter_to_csv(result))
        counts_csv = "quadrant,count\n" + "".join(
            f"{bucket},{result.counts[bucket]}\n" for bucket in analysis.SCATTER_BUCKETS
        )
        _write_text(out_dir / "scatter_quadrants.csv", counts_csv)
        print(f"{len(result.points)} positive multi-word conversations; "
              + ", ".join(f"{b}={result.counts[b]}" for b in analysis.SCATTER_BUCKETS))
    else:
        raise ConfigError(f"unknown analysis {which!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clarank",
        description="Rank documents for clarification conversations and "
                    "reproduce the evaluation pipeline.",
    )
    parser.add_argument("--config", "-c", help="config file (default: $CLARANK_CONFIG)")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p_index = sub.add_parser("index", help="index maintenance")
    index_sub = p_index.add_subparsers(dest="index_command", metavar="action")
    p_build = index_sub.add_parser("build", help="build an index from a JSONL corpus")
    p_build.add_argument("--corpus", help="JSONL corpus file")
    p_build.add_argument("--out", help="index output path (default: <output_dir>/index.json)")
    p_build.add_argument("--stoplist", help="stoplist file (default: bundled)")

    p_split = sub.add_parser("split", help="seeded train/test topic split")
    p_split.add_argument("--conversations", help="JSONL conversations file")
    p_split.add_argument("--topics-file", help="explicit topic list, one per line")
    p_split.add_argument("--out-dir", help="output directory")
    p_split.add_argument("--seed", type=int, help="shuffle seed")
    p_split.add_argument("--n-test", type=int, help="number of held-out test topics")

    p_rank = sub.add_parser("rank", help="rank documents for each conversation")
    p_rank.add_argument("--mode", choices=["q0", "q0q", "q0a", "q0qa", "heuristic"],
                        help="composition mode (default: heuristic)")
    p_rank.add_argument("--index", help="index file")
    p_rank.add_argument("--conversations", help="JSONL conversations file")
    p_rank.add_argument("--out", help="run file path (default: <output_dir>/run-<mode>.trec)")
    p_rank.add_argument("--stoplist", help="stoplist file (default: bundled)")
    p_rank.add_argument("--mu", type=float, help="Dirichlet prior mass (default 2000)")
    p_rank.add_argument("--lambda", dest="q0_weight", type=float,
                        help="interpolation weight of the initial query (default 0.5)")
    p_rank.add_argument("--depth", type=int, help="ranking depth (default 1000)")
    p_rank.add_argument("--threads", type=int, help="worker threads (default 1)")
    p_rank.add_argument("--tag", help="run tag (default: the mode name)")
    p_rank.add_argument("--policy", help="policy override JSON for heuristic mode")
    p_rank.add_argument("--topics", help="restrict to topics listed in this file")

    p_eval = sub.add_parser("eval", help="NDCG@k and significance tests over run files")
    p_eval.add_argument("runs", nargs="+", help="run files to evaluate")
    p_eval.add_argument("--qrels", help="judgments file")
    p_eval.add_argument("--k", dest="ndcg_k", type=int, help="NDCG cutoff (default 20)")
    p_eval.add_argument("--out-dir", help="report output directory")

    p_analyze = sub.add_parser("analyze", help="answer-type tables, correlations, "
                                               "scatter data, prefix tree")
    p_analyze.add_argument("which", choices=["table1", "polarity-corr", "length-corr",
                                             "scatter", "ngrams"])
    p_analyze.add_argument("--conversations", help="JSONL conversations file")
    p_analyze.add_argument("--qrels", help="judgments file")
    p_analyze.add_argument("--runs-dir", help="directory holding run-<mode>.trec files")
    p_analyze.add_argument("--out-dir", help="output directory")
    p_analyze.add_argument("--k", dest="ndcg_k", type=int, help="NDCG cutoff (default 20)")
    p_analyze.add_argument("--stoplist", help="stoplist file (default: bundled)")
    p_analyze.add_argument("--topics", help="restrict to topics listed in this file")
    p_analyze.add_argument("--ngram-depth", type=int, default=4,
                           help="prefix depth for the answer tree (default 4)")
    p_analyze.add_argument("--min-count", type=int, default=1,
                           help="prune tree nodes below this count (default 1)")
    return parser


_CONFIG_KEYS = ("corpus", "conversations", "qrels", "stoplist", "policy", "topics",
                "mu", "q0_weight", "ndcg_k", "depth", "seed", "n_test", "mode",
                "threads", "tag")


def _overrides_from_args(args: argparse.Namespace) -> dict:
    overrides = {}
    for key in _CONFIG_KEYS:
        if hasattr(args, key) and getattr(args, key) is not None:
            overrides[key] = getattr(args, key)
    for attr, key in (("out_dir", "output_dir"), ("index", "index")):
        if hasattr(args, attr) and getattr(args, attr) is not None:
            overrides[key] = getattr(args, attr)
    return overrides


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses exit code 2 for usage errors; this tool reserves 2
        # for data errors.
        return 0 if exc.code in (0, None) else 1
    if args.command is None:
        parser.print_help()
        return 1
    try:
        cfg = resolve_config(args.config, _overrides_from_args(args))
        if args.command == "index":
            if getattr(args, "index_command", None) != "build":
                raise ConfigError("usage: clarank index build ...")
            out = Path(args.out) if args.out else cfg.output_dir / "index.json"
            return cmd_index_build(cfg, out)
        if args.command == "split":
            topics_file = Path(args.topics_file) if args.topics_file else None
            return cmd_split(cfg, topics_file)
        if args.command == "rank":
            out = Path(args.out) if args.out else None
            return cmd_rank(cfg, out)
        if args.command == "eval":
            return cmd_eval(cfg, [Path(p) for p in args.runs])
        if args.command == "analyze":
            runs_dir = Path(args.runs_dir) if args.runs_dir else None
            return cmd_analyze(cfg, args.which, runs_dir, args.ngram_depth,
                               args.min_count)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"clarank: config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"clarank: data error: {exc}", file=sys.stderr)
        return 2
    except ClarankError as exc:
        print(f"clarank: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"clarank: i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

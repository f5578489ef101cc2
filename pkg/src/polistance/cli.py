"""Command-line front end.

Subcommands cover the full workflow: ingest a corpus, check annotator
agreement, build feature matrices, run a classification experiment, detect
graph communities, compute corpus analytics, generate synthetic fixtures,
and re-render reports. Exit codes: 0 success, 2 configuration problem,
3 data problem, 4 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
from pathlib import Path
from typing import Sequence

from .analytics import (
    IST_OFFSET_MINUTES,
    STDDEV_KIND,
    AnalyticsError,
    day_hour_matrix,
    party_mentions,
    top_hashtags,
    unique_user_stats,
    volume_series,
    write_day_hour,
    write_series,
    write_top_hashtags,
)
from .annotation import (
    AnnotationError,
    mean_pairwise_kappa,
    read_annotations,
    resolve_majority,
)
from .corpus import (
    CorpusError,
    canonical_dumps,
    format_timestamp,
    parse_corpus,
    write_corpus,
)
from .features import (
    FEATURE_NAMES,
    FeatureError,
    build_hashtag_matrix,
    build_text_matrix,
    default_lexicon,
    user_feature_vector,
    write_matrix,
)
from .corpus import Stoplist, tokenize
from .forest import ForestError
from .graph import GraphError, build_interaction_graph, louvain, write_edges, write_partition
from .metrics import MetricsError, eval_metrics
from .pipeline import (
    ConfigError,
    PipelineError,
    RunResult,
    emit_report,
    load_config,
    render_table,
    run,
)
from .synth import SynthError, SyntheticSpec, skewed_preset, write_synthetic

_DATA_ERRORS = (
    CorpusError,
    AnnotationError,
    FeatureError,
    MetricsError,
    ForestError,
    GraphError,
    AnalyticsError,
    SynthError,
    FileNotFoundError,
)

_TZ_PATTERN = re.compile(r"^([+-])(\d{2}):?(\d{2})$")


def parse_tz(text: str) -> int:
    """'+05:30' -> 330 minutes; '-07:00' -> -420."""
    match = _TZ_PATTERN.match(text)
    if not match:
        raise ConfigError(f"timezone must look like +05:30, got {text!r}")
    sign, hours, minutes = match.groups()
    if int(minutes) > 59:
        raise ConfigError(f"timezone minutes out of range in {text!r}")
    value = int(hours) * 60 + int(minutes)
    return -value if sign == "-" else value


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="json run configuration")
    common.add_argument("--seed", type=int, default=None, metavar="N",
                        help="rng seed override")
    common.add_argument("--tz", default=None, metavar="+05:30",
                        help="utc offset for local-time bucketing")
    common.add_argument("--out", default=None, metavar="DIR",
                        help="output directory")
    common.add_argument("--strict", action="store_true",
                        help="treat malformed corpus lines as errors")
    return common


def _out_dir(args, default: str = ".") -> Path:
    out = Path(args.out if args.out is not None else default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _tz_minutes(args) -> int:
    return parse_tz(args.tz) if args.tz is not None else IST_OFFSET_MINUTES


def _cmd_ingest(args) -> int:
    strictness = "strict" if args.strict else "skip-malformed"
    tweets, profiles, skipped = parse_corpus(args.corpus, strictness=strictness)
    print(f"tweets={len(tweets)} profiles={len(profiles)} skipped={skipped}")
    if args.out is not None:
        path = _out_dir(args) / "corpus.normalized.jsonl"
        write_corpus(path, tweets, profiles)
        print(f"wrote {path}")
    return 0


def _cmd_agree(args) -> int:
    annotations = read_annotations(args.annotations)
    for dimension in ("pro", "anti"):
        kappa = mean_pairwise_kappa(annotations, dimension)
        print(f"kappa[{dimension}]={kappa:.4f}")
    resolved = resolve_majority(annotations)
    print(f"resolved_users={len(resolved)}")
    if args.out is not None:
        path = _out_dir(args) / "resolved.csv"
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["user_id", "pro", "anti"])
            for user in resolved:
                writer.writerow([user.user_id, user.pro, user.anti])
        print(f"wrote {path}")
    return 0


def _cmd_featurize(args) -> int:
    strictness = "strict" if args.strict else "skip-malformed"
    tweets, profiles, _ = parse_corpus(args.corpus, strictness=strictness)
    out = _out_dir(args)
    if args.method == "user-features":
        lexicon = default_lexicon()
        stoplist = Stoplist.default()
        by_user = {}
        for tweet in tweets:
            by_user.setdefault(tweet.author_screen_name, []).append(tweet)
        path = out / "features.csv"
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["user_id"] + list(FEATURE_NAMES))
            for profile in sorted(profiles, key=lambda p: p.screen_name):
                vector = user_feature_vector(
                    profile, by_user.get(profile.screen_name, []),
                    lexicon, stoplist,
                )
                writer.writerow([profile.screen_name] + list(vector.as_tuple()))
        print(f"wrote {path} ({len(profiles)} users x {len(FEATURE_NAMES)})")
        return 0

    term_lists: dict[str, list[str]] = {}
    stoplist = Stoplist.default()
    for tweet in tweets:
        bag = term_lists.setdefault(tweet.author_screen_name, [])
        if args.method == "text":
            bag.extend(tokenize(tweet.text, stoplist))
        else:
            bag.extend(tweet.hashtags)
    builder = build_text_matrix if args.method == "text" else build_hashtag_matrix
    matrix = builder(term_lists, on_empty="drop")
    write_matrix(
        matrix,
        out / "matrix.triplets",
        out / "vocabulary.tsv",
        out / "users.txt",
    )
    print(f"wrote matrix {matrix.shape[0]} users x {matrix.shape[1]} terms in {out}")
    return 0


def _config_overrides(args) -> dict:
    overrides: dict = {}
    if args.seed is not None:
        overrides["rng_seed"] = args.seed
    if args.tz is not None:
        overrides["tz_offset_minutes"] = parse_tz(args.tz)
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.strict:
        overrides["strictness"] = "strict"
    if getattr(args, "method", None):
        overrides["method"] = args.method
    if getattr(args, "dimension", None):
        overrides["dimension"] = args.dimension
    return overrides


def _cmd_classify(args) -> int:
    if args.config is None:
        raise ConfigError("classify needs --config PATH")
    config = load_config(args.config, **_config_overrides(args))
    result = run(config)
    sys.stdout.write(render_table(result))
    print(f"artifacts in {config.out_dir}")
    return 0


def _cmd_graph(args) -> int:
    strictness = "strict" if args.strict else "skip-malformed"
    tweets, _, _ = parse_corpus(args.corpus, strictness=strictness)
    graph = build_interaction_graph(tweets, weighted=args.weighted)
    seed = args.seed if args.seed is not None else 0
    partition = louvain(graph, rng_seed=seed)
    out = _out_dir(args)
    write_edges(graph, out / "graph.edges")
    write_partition(partition, out / "partition.txt")
    print(
        f"nodes={len(graph.nodes)} edges={graph.m} "
        f"communities={partition.n_communities} "
        f"modularity={partition.modularity_q:.6f}"
    )
    return 0


def _cmd_analyze(args) -> int:
    strictness = "strict" if args.strict else "skip-malformed"
    tweets, _, _ = parse_corpus(args.corpus, strictness=strictness)
    tz = _tz_minutes(args)
    out = _out_dir(args)

    daily = volume_series(tweets, "day", tz)
    write_series(daily, out / "volume_day.csv")
    write_day_hour(day_hour_matrix(tweets, tz), out / "day_hour.csv")
    write_top_hashtags(top_hashtags(tweets, tz_offset_minutes=tz),
                       out / "top_hashtags.csv")

    mentions = party_mentions(tweets, default_lexicon(), "week", tz)
    with open(out / "party_mentions.csv", "w", encoding="utf-8",
              newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["party", "bucket_start", "value"])
        for party in sorted(mentions):
            for bucket, value in mentions[party].points:
                writer.writerow([party, format_timestamp(bucket), value])

    n_users, top = unique_user_stats(tweets, tz_offset_minutes=tz)
    summary = {
        "tweets": len(tweets),
        "unique_users": n_users,
        "top_tweeters": [[name, count] for name, count in top],
        "volume_mean": daily.mean() if len(daily) else None,
        "volume_stddev": daily.stddev() if len(daily) else None,
        "stddev_kind": STDDEV_KIND,
        "tz_offset_minutes": tz,
    }
    (out / "summary.json").write_text(canonical_dumps(summary) + "\n",
                                      encoding="utf-8")
    print(f"analyzed {len(tweets)} tweets into {out}")
    return 0


def _cmd_synth(args) -> int:
    seed = args.seed if args.seed is not None else 0
    if args.preset == "skewed":
        spec = skewed_preset(rng_seed=seed)
    else:
        spec = SyntheticSpec(
            users_per_party={
                "AAP": args.users, "BJP": args.users, "CONG": args.users
            },
            tweets_per_user=args.tweets,
            p_intra=args.p_intra,
            p_cross=args.p_cross,
            annotator_noise=args.noise,
            rng_seed=seed,
        )
    out = _out_dir(args)
    data = write_synthetic(spec, out / "corpus.jsonl", out / "annotations.csv")
    print(
        f"wrote {len(data.tweets)} tweets, {len(data.profiles)} profiles, "
        f"{len(data.annotations)} annotations to {out}"
    )
    return 0


def _cmd_report(args) -> int:
    try:
        payload = json.loads(Path(args.results).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"results file is not valid json: {exc}") from exc
    try:
        report = eval_metrics(
            [[int(cell) for cell in row] for row in payload["confusion"]],
            tuple(payload["classes"]),
        )
        result = RunResult(
            method=payload["method"],
            dimension=payload["dimension"],
            report=report,
            n_instances=payload["instances"],
            n_attributes=payload["attributes"],
            classifier=payload["classifier"],
            config_digest=payload["config"],
            rng_seed=payload["seed"],
            coverage=payload.get("coverage"),
            counts=payload.get("counts"),
        )
    except KeyError as exc:
        raise ConfigError(f"results file misses key {exc}") from exc
    if args.format == "table":
        sys.stdout.write(render_table(result))
    if args.out is not None:
        path = emit_report(result, args.out, args.format)
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polistance",
        description="Political-orientation experiments on tweet corpora.",
    )
    common = _common_flags()
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common],
                       help="parse and normalize a corpus")
    p.add_argument("corpus")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("agree", parents=[common],
                       help="annotator agreement and majority labels")
    p.add_argument("annotations")
    p.set_defaults(func=_cmd_agree)

    p = sub.add_parser("featurize", parents=[common],
                       help="build feature matrices")
    p.add_argument("corpus")
    p.add_argument("--method", default="text",
                   choices=["text", "hashtag", "user-features"])
    p.set_defaults(func=_cmd_featurize)

    p = sub.add_parser("classify", parents=[common],
                       help="run a configured experiment end to end")
    p.add_argument("--method", default=None,
                   choices=["text", "hashtag", "user-features", "network"])
    p.add_argument("--dimension", default=None, choices=["pro", "anti"])
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("graph", parents=[common],
                       help="interaction graph and communities")
    p.add_argument("corpus")
    p.add_argument("--weighted", action="store_true")
    p.set_defaults(func=_cmd_graph)

    p = sub.add_parser("analyze", parents=[common],
                       help="volume, day-hour, hashtag, and mention stats")
    p.add_argument("corpus")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("synth", parents=[common],
                       help="generate a synthetic labeled corpus")
    p.add_argument("--preset", default="default",
                   choices=["default", "skewed"])
    p.add_argument("--users", type=int, default=40,
                   help="users per party")
    p.add_argument("--tweets", type=int, default=30,
                   help="tweets per user")
    p.add_argument("--p-intra", type=float, default=0.3, dest="p_intra")
    p.add_argument("--p-cross", type=float, default=0.02, dest="p_cross")
    p.add_argument("--noise", type=float, default=0.1)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("report", parents=[common],
                       help="re-render a structured results file")
    p.add_argument("results")
    p.add_argument("--format", default="table",
                   choices=["table", "structured"])
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc.cause, ConfigError) else 3
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

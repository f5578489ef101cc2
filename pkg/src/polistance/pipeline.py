"""End-to-end experiment runs: ingest, label, featurize, classify, report.

A run is driven by one RunConfig and writes everything into its output
directory. Report files are a pure function of config plus input files, so
rerunning the same config gives byte-identical reports; wall-clock timings
go only into the manifest, which also records a sha256 per artifact. On
failure, files written so far are removed and the failing stage is named.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from . import __version__
from .annotation import CANT_SAY, read_annotations, resolve_majority
from .corpus import Stoplist, Tweet, canonical_dumps, parse_corpus, tokenize
from .features import (
    PartyLexicon,
    default_lexicon,
    user_feature_vector,
    write_matrix,
)
from .features import build_hashtag_matrix, build_text_matrix
from .forest import CV_MODES, ForestParams, balance_classes, cross_validate
from .graph import (
    build_interaction_graph,
    community_classify,
    label_communities,
    louvain,
    write_edges,
    write_partition,
)
from .metrics import EvalReport

__all__ = [
    "METHODS",
    "DIMENSIONS",
    "ConfigError",
    "PipelineError",
    "RunConfig",
    "RunResult",
    "config_hash",
    "emit_report",
    "load_config",
    "render_table",
    "run",
]

METHODS = ("text", "hashtag", "user-features", "network")
DIMENSIONS = ("pro", "anti")

_REQUIRED_KEYS = ("corpus_path", "annotations_path", "out_dir")


class ConfigError(ValueError):
    """Raised for malformed or inconsistent run configuration."""


class PipelineError(RuntimeError):
    """A stage failed; carries the stage name and the original error."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class RunConfig:
    """Everything one classification run depends on."""

    corpus_path: str
    annotations_path: str
    out_dir: str
    lexicon_path: str | None = None
    method: str = "text"
    dimension: str = "pro"
    n_trees: int = 100
    max_depth: int | None = None
    features_per_split: int | None = None
    min_leaf: int = 1
    cv_mode: str = "kfold"
    cv_k: int = 10
    balance: bool = False
    rng_seed: int = 0
    tz_offset_minutes: int = 330
    strictness: str = "skip-malformed"

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.dimension not in DIMENSIONS:
            raise ConfigError(
                f"dimension must be one of {DIMENSIONS}, got {self.dimension!r}"
            )
        if self.cv_mode not in CV_MODES:
            raise ConfigError(f"cv_mode must be one of {CV_MODES}")
        if self.cv_k < 2:
            raise ConfigError("cv_k must be >= 2")
        if self.strictness not in ("skip-malformed", "strict"):
            raise ConfigError(f"unknown strictness {self.strictness!r}")
        if self.n_trees < 1 or self.min_leaf < 1:
            raise ConfigError("n_trees and min_leaf must be >= 1")

    def forest_params(self) -> ForestParams:
        return ForestParams(
            n_trees=self.n_trees,
            max_depth=self.max_depth,
            features_per_split=self.features_per_split,
            min_leaf=self.min_leaf,
            rng_seed=self.rng_seed,
        )

    def lexicon(self) -> PartyLexicon:
        if self.lexicon_path is None:
            return default_lexicon()
        return PartyLexicon.from_file(self.lexicon_path)


def load_config(path: str | Path, **overrides) -> RunConfig:
    """Read a RunConfig from JSON; keyword overrides win over the file."""
    import json

    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid json: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a json object")
    known = set(RunConfig.__dataclass_fields__)
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    missing = [key for key in _REQUIRED_KEYS if key not in raw and key not in overrides]
    if missing:
        raise ConfigError(f"config misses required keys: {', '.join(missing)}")
    raw.update(overrides)
    try:
        return RunConfig(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def config_hash(config: RunConfig) -> str:
    """sha256 over the canonical json form of the config."""
    digest = hashlib.sha256(canonical_dumps(asdict(config)).encode("utf-8"))
    return digest.hexdigest()


@dataclass(frozen=True)
class RunResult:
    """What a finished run knows about itself."""

    method: str
    dimension: str
    report: EvalReport
    n_instances: int
    n_attributes: int
    classifier: str
    config_digest: str
    rng_seed: int
    coverage: float | None = None
    counts: Mapping[str, int] | None = None


def render_table(result: RunResult) -> str:
    """The human-readable result block.

    Head lines name the setup; Efficiency is overall accuracy as a
    percentage; one P/R/F row per class follows, three decimals each.
    """
    lines = [
        f"Instances: {result.n_instances}",
        f"Attributes: {result.n_attributes}",
        f"Classifier: {result.classifier}",
        f"Efficiency: {result.report.accuracy * 100:.2f}%",
    ]
    if result.coverage is not None:
        lines.append(f"Coverage: {result.coverage * 100:.2f}%")
    lines.append("")
    widths = max(len(c) for c in result.report.classes + ("class",))
    lines.append(f"{'class':<{widths}}  precision  recall  f-measure")
    for i, cls in enumerate(result.report.classes):
        lines.append(
            f"{cls:<{widths}}  "
            f"{result.report.precision[i]:>9.3f}  "
            f"{result.report.recall[i]:>6.3f}  "
            f"{result.report.f_measures[i]:>9.3f}"
        )
    lines.append("")
    lines.append(f"config: {result.config_digest}")
    lines.append(f"seed: {result.rng_seed}")
    return "\n".join(lines) + "\n"


def render_structured(result: RunResult) -> str:
    """Machine-readable result: one canonical json document."""
    payload = {
        "method": result.method,
        "dimension": result.dimension,
        "instances": result.n_instances,
        "attributes": result.n_attributes,
        "classifier": result.classifier,
        "efficiency": result.report.accuracy,
        "classes": list(result.report.classes),
        "confusion": [list(row) for row in result.report.confusion],
        "per_class": {
            cls: {
                "precision": result.report.precision[i],
                "recall": result.report.recall[i],
                "f_measure": result.report.f_measures[i],
            }
            for i, cls in enumerate(result.report.classes)
        },
        "coverage": result.coverage,
        "config": result.config_digest,
        "seed": result.rng_seed,
        "counts": dict(result.counts or {}),
    }
    return canonical_dumps(payload) + "\n"


def emit_report(result: RunResult, out_dir: str | Path, fmt: str = "table") -> Path:
    """Write the report in one format; returns the path written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "table":
        path = out / "report.txt"
        path.write_text(render_table(result), encoding="utf-8")
    elif fmt == "structured":
        path = out / "report.json"
        path.write_text(render_structured(result), encoding="utf-8")
    else:
        raise ConfigError(f"unknown report format {fmt!r}")
    return path


def _truth_map(annotations, dimension: str) -> dict[str, str]:
    """Majority-resolved party per user, undecidable users dropped."""
    resolved = resolve_majority(annotations)
    out = {}
    for user in resolved:
        label = user.pro if dimension == "pro" else user.anti
        if label != CANT_SAY:
            out[user.user_id] = label
    return out


def _rows_for_users(matrix, truth: Mapping[str, str]):
    keep = [i for i, uid in enumerate(matrix.user_ids) if uid in truth]
    dense = np.asarray(matrix.dense(), dtype=float)
    rows = dense[keep]
    labels = [truth[matrix.user_ids[i]] for i in keep]
    return rows, labels


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(config: RunConfig) -> RunResult:
    """Execute one configured experiment; see the module docstring."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    digest = config_hash(config)
    written: list[Path] = []
    timings: list[tuple[str, float]] = []
    stage = "setup"

    def track(path: Path) -> Path:
        written.append(path)
        return path

    try:
        stage = "config"
        for label, path in (
            ("corpus_path", config.corpus_path),
            ("annotations_path", config.annotations_path),
        ):
            if not Path(path).exists():
                raise ConfigError(f"{label} does not exist: {path}")
        if config.lexicon_path is not None and not Path(config.lexicon_path).exists():
            raise ConfigError(f"lexicon_path does not exist: {config.lexicon_path}")
        lexicon = config.lexicon()

        stage = "ingest"
        t0 = time.perf_counter()
        tweets, profiles, skipped = parse_corpus(
            config.corpus_path, strictness=config.strictness
        )
        timings.append(("ingest", time.perf_counter() - t0))

        stage = "annotate"
        t0 = time.perf_counter()
        annotations = read_annotations(config.annotations_path)
        truth = _truth_map(annotations, config.dimension)
        if not truth:
            raise ConfigError(
                f"no user keeps a decided {config.dimension!r} label after "
                "majority resolution"
            )
        timings.append(("annotate", time.perf_counter() - t0))

        counts = {
            "tweets": len(tweets),
            "profiles": len(profiles),
            "skipped_lines": skipped,
            "annotated_users": len(truth),
        }

        if config.method == "network":
            stage = "graph"
            t0 = time.perf_counter()
            graph = build_interaction_graph(tweets)
            partition = louvain(graph, rng_seed=config.rng_seed)
            labeling = label_communities(partition, lexicon.seed_party_map())
            evaluation = community_classify(partition, labeling, truth)
            write_edges(graph, track(out / "graph.edges"))
            write_partition(partition, track(out / "partition.txt"))
            timings.append(("graph", time.perf_counter() - t0))
            result = RunResult(
                method=config.method,
                dimension=config.dimension,
                report=evaluation.report,
                n_instances=evaluation.report.total,
                n_attributes=1,  # community membership is the lone feature
                classifier=(
                    f"louvain communities ({partition.n_communities} found)"
                ),
                config_digest=digest,
                rng_seed=config.rng_seed,
                coverage=evaluation.coverage,
                counts=counts,
            )
        else:
            stage = "featurize"
            t0 = time.perf_counter()
            stoplist = Stoplist.default()
            if config.method == "user-features":
                by_user: dict[str, list[Tweet]] = {}
                for tweet in tweets:
                    by_user.setdefault(tweet.author_screen_name, []).append(tweet)
                vectors = []
                labels = []
                for profile in sorted(profiles, key=lambda p: p.screen_name):
                    if profile.screen_name not in truth:
                        continue
                    vector = user_feature_vector(
                        profile,
                        by_user.get(profile.screen_name, []),
                        lexicon,
                        stoplist,
                    )
                    vectors.append(vector.as_array())
                    labels.append(truth[profile.screen_name])
                if not vectors:
                    raise ConfigError("no profiled user carries a label")
                rows = np.array(vectors, dtype=float)
                n_attributes = rows.shape[1]
            else:
                term_lists: dict[str, list[str]] = {}
                for tweet in tweets:
                    bag = term_lists.setdefault(tweet.author_screen_name, [])
                    if config.method == "text":
                        bag.extend(tokenize(tweet.text, stoplist))
                    else:
                        bag.extend(tweet.hashtags)
                if config.method == "text":
                    matrix = build_text_matrix(term_lists, on_empty="drop")
                else:
                    matrix = build_hashtag_matrix(term_lists, on_empty="drop")
                write_matrix(
                    matrix,
                    track(out / "matrix.triplets"),
                    track(out / "vocabulary.tsv"),
                    track(out / "users.txt"),
                )
                rows, labels = _rows_for_users(matrix, truth)
                if len(labels) == 0:
                    raise ConfigError("no matrix user carries a label")
                n_attributes = matrix.shape[1]
            timings.append(("featurize", time.perf_counter() - t0))

            stage = "classify"
            t0 = time.perf_counter()
            if config.balance:
                rows, labels = balance_classes(rows, labels,
                                               rng_seed=config.rng_seed)
            report = cross_validate(
                rows,
                labels,
                params=config.forest_params(),
                k=config.cv_k,
                mode=config.cv_mode,
                rng_seed=config.rng_seed,
            )
            timings.append(("classify", time.perf_counter() - t0))
            result = RunResult(
                method=config.method,
                dimension=config.dimension,
                report=report,
                n_instances=len(labels),
                n_attributes=n_attributes,
                classifier=f"random forest ({config.n_trees} trees)",
                config_digest=digest,
                rng_seed=config.rng_seed,
                coverage=None,
                counts=counts,
            )

        stage = "report"
        t0 = time.perf_counter()
        track(emit_report(result, out, "table"))
        track(emit_report(result, out, "structured"))
        timings.append(("report", time.perf_counter() - t0))

        stage = "manifest"
        manifest = {
            "artifact_hashes": {p.name: _sha256(p) for p in written},
            "config": asdict(config),
            "config_hash": digest,
            "counts": counts,
            "rng_seed": config.rng_seed,
            "stages": [
                {"name": name, "seconds": seconds} for name, seconds in timings
            ],
            "version": __version__,
        }
        (out / "manifest.json").write_text(
            canonical_dumps(manifest) + "\n", encoding="utf-8"
        )
        return result
    except PipelineError:
        raise
    except Exception as exc:
        for path in written:
            try:
                path.unlink()
            except OSError:
                pass
        raise PipelineError(stage, exc) from exc

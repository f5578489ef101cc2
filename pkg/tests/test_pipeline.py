"""Tests for run orchestration, config handling, and report rendering."""

import dataclasses
import json
from pathlib import Path

import numpy as np
import pytest

from polistance.corpus import Stoplist, parse_corpus, tokenize
from polistance.features import build_text_matrix
from polistance.forest import cross_validate
from polistance.metrics import eval_metrics
from polistance.pipeline import (
    ConfigError,
    PipelineError,
    RunConfig,
    RunResult,
    config_hash,
    emit_report,
    load_config,
    render_table,
    run,
)
from polistance.synth import SyntheticSpec, write_synthetic

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def small_inputs(tmp_path_factory):
    root = tmp_path_factory.mktemp("inputs")
    spec = SyntheticSpec(
        users_per_party={"AAP": 8, "BJP": 8, "CONG": 8},
        tweets_per_user=12,
        p_intra=0.45,
        p_cross=0.0,
        annotator_noise=0.0,
        rng_seed=5,
    )
    write_synthetic(spec, root / "corpus.jsonl", root / "annotations.csv")
    return root


def base_config(small_inputs, out_dir, **kwargs):
    return RunConfig(
        corpus_path=str(small_inputs / "corpus.jsonl"),
        annotations_path=str(small_inputs / "annotations.csv"),
        out_dir=str(out_dir),
        **kwargs,
    )


class TestRunConfig:
    def test_defaults_valid(self, small_inputs, tmp_path):
        config = base_config(small_inputs, tmp_path)
        assert config.method == "text"
        assert config.cv_k == 10

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"method": "svm"},
            {"dimension": "neutral"},
            {"cv_mode": "loocv"},
            {"cv_k": 1},
            {"strictness": "lenient"},
            {"n_trees": 0},
        ],
    )
    def test_rejects_bad_values(self, small_inputs, tmp_path, kwargs):
        with pytest.raises(ConfigError):
            base_config(small_inputs, tmp_path, **kwargs)


class TestLoadConfig:
    def test_reads_json_with_overrides(self, small_inputs, tmp_path):
        payload = {
            "corpus_path": str(small_inputs / "corpus.jsonl"),
            "annotations_path": str(small_inputs / "annotations.csv"),
            "out_dir": str(tmp_path / "out"),
            "method": "network",
        }
        path = tmp_path / "run.json"
        path.write_text(json.dumps(payload))
        config = load_config(path, rng_seed=9)
        assert config.method == "network"
        assert config.rng_seed == 9

    def test_missing_required_key(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"corpus_path": "x"}))
        with pytest.raises(ConfigError, match="required"):
            load_config(path)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({
            "corpus_path": "a", "annotations_path": "b", "out_dir": "c",
            "classifier": "forest",
        }))
        with pytest.raises(ConfigError, match="unknown config keys"):
            load_config(path)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("{nope")
        with pytest.raises(ConfigError, match="valid json"):
            load_config(path)

    def test_non_object(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="object"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "absent.json")


class TestConfigHash:
    def test_stable_and_sensitive(self, small_inputs, tmp_path):
        a = base_config(small_inputs, tmp_path)
        b = base_config(small_inputs, tmp_path)
        c = base_config(small_inputs, tmp_path, rng_seed=1)
        assert config_hash(a) == config_hash(b)
        assert config_hash(a) != config_hash(c)
        assert len(config_hash(a)) == 64


class TestRunNetwork:
    def test_separable_corpus_is_perfect(self, small_inputs, tmp_path):
        config = base_config(small_inputs, tmp_path / "net", method="network")
        result = run(config)
        assert result.report.accuracy == 1.0
        assert result.coverage == 1.0
        for name in ("graph.edges", "partition.txt", "report.txt",
                     "report.json", "manifest.json"):
            assert (tmp_path / "net" / name).exists()

    def test_rerun_is_byte_identical(self, small_inputs, tmp_path):
        config_a = base_config(small_inputs, tmp_path / "a", method="network")
        config_b = base_config(small_inputs, tmp_path / "a", method="network")
        run(config_a)
        first_txt = (tmp_path / "a" / "report.txt").read_bytes()
        first_json = (tmp_path / "a" / "report.json").read_bytes()
        first_manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
        run(config_b)
        assert (tmp_path / "a" / "report.txt").read_bytes() == first_txt
        assert (tmp_path / "a" / "report.json").read_bytes() == first_json
        second_manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
        assert (
            first_manifest["artifact_hashes"] == second_manifest["artifact_hashes"]
        )

    def test_report_carries_config_hash_and_seed(self, small_inputs, tmp_path):
        config = base_config(small_inputs, tmp_path / "net", method="network",
                             rng_seed=4)
        run(config)
        text = (tmp_path / "net" / "report.txt").read_text()
        assert f"config: {config_hash(config)}" in text
        assert "seed: 4" in text
        payload = json.loads((tmp_path / "net" / "report.json").read_text())
        assert payload["config"] == config_hash(config)
        assert payload["seed"] == 4


class TestRunText:
    def test_matches_scripted_stage_composition(self, small_inputs, tmp_path):
        config = base_config(
            small_inputs, tmp_path / "text",
            method="text", n_trees=15, cv_k=4, rng_seed=2,
        )
        result = run(config)

        # independent composition of the same stages from module calls
        tweets, _, _ = parse_corpus(config.corpus_path)
        stoplist = Stoplist.default()
        term_lists = {}
        for t in tweets:
            term_lists.setdefault(t.author_screen_name, []).extend(
                tokenize(t.text, stoplist)
            )
        matrix = build_text_matrix(term_lists, on_empty="drop")
        truth = {u: u.split("_")[0].upper() for u in matrix.user_ids}
        keep = [i for i, u in enumerate(matrix.user_ids) if u in truth]
        rows = np.asarray(matrix.dense(), dtype=float)[keep]
        labels = [truth[matrix.user_ids[i]] for i in keep]
        expected = cross_validate(
            rows, labels, params=config.forest_params(),
            k=4, rng_seed=2,
        )
        assert result.report == expected
        assert result.n_attributes == matrix.shape[1]
        assert result.n_instances == len(labels)

    def test_balance_flag_equalizes_classes(self, small_inputs, tmp_path):
        imbalanced = SyntheticSpec(
            users_per_party={"AAP": 12, "BJP": 5, "CONG": 5},
            tweets_per_user=12,
            annotator_noise=0.0,
            rng_seed=8,
        )
        root = tmp_path / "inputs"
        root.mkdir()
        write_synthetic(imbalanced, root / "corpus.jsonl",
                        root / "annotations.csv")
        config = RunConfig(
            corpus_path=str(root / "corpus.jsonl"),
            annotations_path=str(root / "annotations.csv"),
            out_dir=str(tmp_path / "bal"),
            method="text",
            balance=True,
            n_trees=10,
            cv_k=3,
        )
        result = run(config)
        assert result.n_instances == 15  # three classes at the minority size


class TestRunFailures:
    def test_missing_corpus_is_config_stage(self, small_inputs, tmp_path):
        config = dataclasses.replace(
            base_config(small_inputs, tmp_path, method="network"),
            corpus_path=str(tmp_path / "nope.jsonl"),
        )
        with pytest.raises(PipelineError) as info:
            run(config)
        assert info.value.stage == "config"
        assert isinstance(info.value.cause, ConfigError)

    def test_malformed_corpus_names_ingest_stage(self, small_inputs, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"not": "a tweet"}\n')
        config = RunConfig(
            corpus_path=str(bad),
            annotations_path=str(small_inputs / "annotations.csv"),
            out_dir=str(tmp_path / "out"),
            strictness="strict",
        )
        with pytest.raises(PipelineError, match=r"^\[ingest\]"):
            run(config)

    def test_failed_run_removes_partial_outputs(self, small_inputs, tmp_path):
        # cv_k exceeds the per-class user count, so classify fails after
        # featurize already wrote the matrix files
        out = tmp_path / "partial"
        config = base_config(small_inputs, out, method="text", cv_k=10)
        with pytest.raises(PipelineError) as info:
            run(config)
        assert info.value.stage == "classify"
        assert not (out / "matrix.triplets").exists()
        assert not (out / "report.txt").exists()


class TestReportRendering:
    @staticmethod
    def result_fixture():
        confusion = ((40, 6, 4), (5, 40, 5), (5, 5, 40))
        report = eval_metrics(confusion, ("AAP", "BJP", "CONG"))
        return RunResult(
            method="text",
            dimension="pro",
            report=report,
            n_instances=150,
            n_attributes=90,
            classifier="random forest (100 trees)",
            config_digest="d" * 64,
            rng_seed=0,
        )

    def test_efficiency_line_format(self):
        text = render_table(self.result_fixture())
        assert "Efficiency: 80.00%" in text
        assert "Instances: 150" in text
        assert "Attributes: 90" in text

    def test_zero_class_prints_zeros(self):
        report = eval_metrics(((3, 0), (2, 0)), ("AAP", "BJP"))
        result = RunResult(
            method="text", dimension="pro", report=report,
            n_instances=5, n_attributes=4, classifier="random forest (5 trees)",
            config_digest="e" * 64, rng_seed=0,
        )
        lines = render_table(result).splitlines()
        bjp_row = next(line for line in lines if line.startswith("BJP"))
        assert bjp_row.split() == ["BJP", "0.000", "0.000", "0.000"]

    def test_matches_golden_file(self):
        golden = (DATA_DIR / "report_golden.txt").read_text(encoding="utf-8")
        assert render_table(self.result_fixture()) == golden

    def test_emit_both_formats(self, tmp_path):
        result = self.result_fixture()
        table = emit_report(result, tmp_path, "table")
        structured = emit_report(result, tmp_path, "structured")
        assert table.name == "report.txt"
        payload = json.loads(structured.read_text())
        assert payload["efficiency"] == 0.8
        assert payload["per_class"]["AAP"]["precision"] == 0.8

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            emit_report(self.result_fixture(), tmp_path, "xml")

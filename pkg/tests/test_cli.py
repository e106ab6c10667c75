import json
import re

import pytest

from seedexpand.cli import main
from seedexpand.graph import load_index

from conftest import fixture_corpus_lines


@pytest.fixture
def corpus(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text("\n".join(fixture_corpus_lines()) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def index(corpus, tmp_path):
    path = tmp_path / "corpus.idx"
    assert main(["build", str(corpus), str(path), "--min-count", "1"]) == 0
    return path


def strip_timestamps(text: str) -> str:
    return re.sub(r'"created_at":[^,\n]*', "", text)


@pytest.fixture
def synth_setup(tmp_path):
    corpus = tmp_path / "synth.jsonl"
    rc = main(["gen-synth", str(corpus), "--classes", "2", "--entities-per-class", "16",
               "--noise", "0.0", "--rng-seed", "3", "--queries-per-class", "2"])
    assert rc == 0
    index = tmp_path / "synth.idx"
    assert main(["build", str(corpus), str(index), "--min-count", "1"]) == 0
    return {
        "index": index,
        "queries": tmp_path / "synth.queries.json",
        "truth": tmp_path / "synth.truth.json",
    }


class TestBuild:
    def test_counts_reported_and_reloadable(self, corpus, tmp_path, capsys):
        path = tmp_path / "out.idx"
        assert main(["build", str(corpus), str(path), "--min-count", "1"]) == 0
        out = capsys.readouterr().out
        assert "entities: 5" in out
        graph = load_index(path)
        assert graph.n_entities == 5
        assert graph.n_features == 14

    def test_missing_corpus_fails(self, tmp_path):
        assert main(["build", str(tmp_path / "nope.jsonl"), str(tmp_path / "o.idx")]) != 0

    def test_absurd_min_count_fails(self, corpus, tmp_path, capsys):
        rc = main(["build", str(corpus), str(tmp_path / "o.idx"),
                   "--min-count", "1000000"])
        assert rc != 0
        assert "threshold" in capsys.readouterr().err

    def test_malformed_lines_counted(self, tmp_path, capsys):
        path = tmp_path / "c.jsonl"
        lines = fixture_corpus_lines() + ["{broken", "[1,2,3]"]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        assert main(["build", str(path), str(tmp_path / "o.idx"), "--min-count", "1"]) == 0
        err = capsys.readouterr().err
        assert "skipped 2 malformed corpus lines" in err


class TestExpand:
    def test_already_at_target_emits_no_rows(self, index, capsys):
        rc = main(["expand", str(index), "--seed", "alpha", "--seed", "bravo", "-K", "2"])
        assert rc == 0
        out = capsys.readouterr().out
        data_lines = [l for l in out.splitlines()
                      if l and not l.startswith("#") and not l.startswith("entity\t")]
        assert data_lines == []
        assert '# status: "reached_K"' in out

    def test_unknown_seed_named_in_error(self, index, capsys):
        rc = main(["expand", str(index), "--seed", "zz-top", "-K", "3"])
        assert rc != 0
        assert "zz-top" in capsys.readouterr().err

    def test_json_runs_are_identical_modulo_timestamp(self, synth_setup, tmp_path):
        args = ["expand", str(synth_setup["index"]), "--seed", "class00_000",
                "--seed", "class00_001", "--seed", "class00_002",
                "-K", "8", "-T", "8", "--rng-seed", "11", "--output", "json"]
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert strip_timestamps(out1.read_text()) == strip_timestamps(out2.read_text())
        payload = json.loads(out1.read_text())
        assert payload["manifest"]["config"]["rng_seed"] == 11
        assert payload["entities"]
        # The corpus is noiseless, so everything extracted is a planted
        # member of the seeds' class.
        assert all(row["entity"].startswith("class00_") for row in payload["entities"])

    def test_tsv_shape(self, synth_setup, capsys):
        rc = main(["expand", str(synth_setup["index"]), "--seed", "class00_000",
                   "--seed", "class00_001", "-K", "6", "-T", "6"])
        assert rc == 0
        out = capsys.readouterr().out
        rows = [l.split("\t") for l in out.splitlines()
                if l and not l.startswith("#")]
        assert rows[0] == ["entity", "rank", "iteration", "mrr"]
        assert all(len(r) == 4 for r in rows[1:])
        assert [r[1] for r in rows[1:]] == [str(i) for i in range(1, len(rows))]

    def test_bad_flag_combination_fails(self, index, capsys):
        rc = main(["expand", str(index), "--seed", "alpha", "--alpha", "1.5"])
        assert rc != 0
        assert "configuration" in capsys.readouterr().err


class TestEval:
    def test_report_written_and_deterministic(self, synth_setup, tmp_path, capsys):
        base = ["eval", str(synth_setup["index"]), str(synth_setup["queries"]),
                str(synth_setup["truth"]), "--k", "5,10", "-K", "10", "-T", "8",
                "--max-iterations", "3"]
        out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
        assert main(base + ["--out", str(out1)]) == 0
        table = capsys.readouterr().out
        assert "MMAP" in table and "MAP@5" in table
        assert main(base + ["--out", str(out2)]) == 0
        assert strip_timestamps(out1.read_text()) == strip_timestamps(out2.read_text())
        payload = json.loads(out1.read_text())
        assert payload["report"]["mmap"]["5"] >= 0.8

    def test_empty_query_file_succeeds(self, synth_setup, tmp_path, capsys):
        empty = tmp_path / "empty.json"
        empty.write_text("[]")
        rc = main(["eval", str(synth_setup["index"]), str(empty),
                   str(synth_setup["truth"])])
        assert rc == 0

    def test_missing_truth_file_fails(self, synth_setup, tmp_path):
        rc = main(["eval", str(synth_setup["index"]), str(synth_setup["queries"]),
                   str(tmp_path / "missing.json")])
        assert rc != 0


class TestSweep:
    def test_single_point_matches_plain_eval(self, synth_setup, tmp_path, capsys):
        eval_out = tmp_path / "eval.json"
        shared = ["-K", "10", "-T", "8", "--max-iterations", "3", "--k", "5"]
        assert main(["eval", str(synth_setup["index"]), str(synth_setup["queries"]),
                     str(synth_setup["truth"]), "--out", str(eval_out)] + shared) == 0
        capsys.readouterr()
        sweep_out = tmp_path / "sweep.json"
        assert main(["sweep", str(synth_setup["index"]), str(synth_setup["queries"]),
                     str(synth_setup["truth"]), "--param", "alpha", "--values", "0.6",
                     "--out", str(sweep_out)] + shared) == 0
        eval_mmap = json.loads(eval_out.read_text())["report"]["mmap"]["5"]
        point = json.loads(sweep_out.read_text())["points"][0]
        assert point["value"] == 0.6
        assert point["mmap"]["5"] == pytest.approx(eval_mmap, abs=1e-12)

    def test_table_has_one_row_per_value(self, synth_setup, capsys):
        rc = main(["sweep", str(synth_setup["index"]), str(synth_setup["queries"]),
                   str(synth_setup["truth"]), "--param", "T", "--values", "2,4,6",
                   "-K", "8", "--max-iterations", "2", "--k", "5"])
        assert rc == 0
        lines = [l for l in capsys.readouterr().out.splitlines() if l.strip()]
        assert len(lines) == 4  # header + 3 values

    def test_unknown_param_rejected(self, synth_setup, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["sweep", str(synth_setup["index"]), str(synth_setup["queries"]),
                  str(synth_setup["truth"]), "--param", "banana", "--values", "1"])
        assert exc.value.code != 0

    def test_small_subsets_never_beat_the_plateau(self, tmp_path):
        # Starving each batch down to a tenth of the selected features loses
        # information; sampling over half of them should do at least as well.
        corpus = tmp_path / "s.jsonl"
        assert main(["gen-synth", str(corpus), "--classes", "3",
                     "--entities-per-class", "20", "--noise", "0.1",
                     "--rng-seed", "0", "--queries-per-class", "2"]) == 0
        index = tmp_path / "s.idx"
        assert main(["build", str(corpus), str(index), "--min-count", "3"]) == 0
        out = tmp_path / "sweep.json"
        rc = main(["sweep", str(index), str(tmp_path / "s.queries.json"),
                   str(tmp_path / "s.truth.json"), "--param", "alpha",
                   "--values", "0.1,0.6", "-K", "15", "-T", "20",
                   "--rng-seed", "0", "--k", "10", "--out", str(out)])
        assert rc == 0
        points = {p["value"]: p["mmap"]["10"]
                  for p in json.loads(out.read_text())["points"]}
        assert points[0.6] >= points[0.1]


class TestGenSynth:
    def test_writes_three_files_and_audits(self, tmp_path, capsys):
        corpus = tmp_path / "s.jsonl"
        rc = main(["gen-synth", str(corpus), "--classes", "3",
                   "--entities-per-class", "8", "--noise", "0.05", "--rng-seed", "2"])
        assert rc == 0
        assert corpus.exists()
        assert (tmp_path / "s.queries.json").exists()
        assert (tmp_path / "s.truth.json").exists()
        assert "audit: ok" in capsys.readouterr().out

    def test_invalid_noise_fails(self, tmp_path, capsys):
        rc = main(["gen-synth", str(tmp_path / "s.jsonl"), "--noise", "1.5"])
        assert rc != 0
        assert "noise" in capsys.readouterr().err

    def test_fixed_seed_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        for path in (a, b):
            assert main(["gen-synth", str(path), "--classes", "2",
                         "--entities-per-class", "6", "--noise", "0.1",
                         "--rng-seed", "4"]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestConfigFile:
    def test_env_config_provides_defaults_flags_override(self, synth_setup, tmp_path,
                                                         monkeypatch):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"ensemble_batches": 4, "target_size": 6}))
        monkeypatch.setenv("SEEDEXPAND_CONFIG", str(cfg_path))
        out = tmp_path / "o.json"
        rc = main(["expand", str(synth_setup["index"]), "--seed", "class00_000",
                   "--seed", "class00_001", "-K", "7", "--output", "json",
                   "--out", str(out)])
        assert rc == 0
        config = json.loads(out.read_text())["manifest"]["config"]
        assert config["ensemble_batches"] == 4   # from the env config file
        assert config["target_size"] == 7        # flag wins

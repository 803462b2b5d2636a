import hashlib
import json

import pytest

from oodshift.cli import main

PAPER_LENGTHS = "25,50,100,150,200"


def small_config(tmp_path, **kw):
    cfg = {"schema_version": 1, "total_dims": 20, "n_semantic": 4, "samples_per_side": 300, "n_trials": 2,
           "master_seed": 3, "dims_splits": [4, 8]}
    cfg.update(kw)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def check_manifest(out):
    manifest = json.loads((out / "manifest.json").read_text())
    for name, digest in manifest["outputs"].items():
        assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest
    return manifest


class TestSim:
    @pytest.mark.parametrize("sweep", ["semantic", "background"])
    def test_writes_outputs(self, tmp_path, sweep, capsys):
        out = tmp_path / "out"
        assert main(["sim", "--sweep", sweep, "--config", str(small_config(tmp_path)), "--out", str(out)]) == 0
        assert (out / f"{sweep}_sweep.csv").exists() and (out / f"{sweep}_summary.json").exists()
        m = check_manifest(out)
        assert m["subcommand"] == "sim" and m["master_seed"] == 3 and m["config"]["sweep"] == sweep
        assert sorted(p.name for p in out.iterdir()) == sorted(["manifest.json", *m["outputs"]])

    def test_bogus_sweep(self, tmp_path, capsys):
        assert main(["sim", "--sweep", "bogus", "--out", str(tmp_path / "o")]) == 1
        err = capsys.readouterr().err
        assert "semantic" in err and "background" in err
        assert not (tmp_path / "o").exists()

    def test_missing_config(self, tmp_path, capsys):
        missing = tmp_path / "nope.json"
        assert main(["sim", "--sweep", "semantic", "--config", str(missing), "--out", str(tmp_path / "o")]) == 2
        assert str(missing) in capsys.readouterr().err

    def test_invalid_config(self, tmp_path, capsys):
        cfg = small_config(tmp_path, grid=[0.9, 0.1])
        assert main(["sim", "--sweep", "semantic", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
        cfg.write_text("{broken")
        assert main(["sim", "--sweep", "semantic", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1

    def test_byte_identical_reruns_any_threads(self, tmp_path):
        cfg = str(small_config(tmp_path))
        main(["sim", "--sweep", "background", "--config", cfg, "--out", str(tmp_path / "a")])
        main(["sim", "--sweep", "background", "--config", cfg, "--out", str(tmp_path / "b"), "--threads", "3"])
        for name in ("background_sweep.csv", "background_summary.json", "manifest.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_paper_defaults_semantic(self, tmp_path):
        out = tmp_path / "paper"
        assert main(["sim", "--sweep", "semantic", "--out", str(out)]) == 0
        cells = json.loads((out / "semantic_summary.json").read_text())["cells"]
        assert len(cells) == 22
        for c in cells:
            if c["overlap_rate"] == 1.0:
                assert abs(c["mean_auroc"] - 0.5) <= 0.02


class TestEval:
    def test_separable_msp(self, tmp_path, data_dir, capsys):
        out = tmp_path / "e"
        assert main(["eval", "--scores", str(data_dir / "msp_separable.jsonl"), "--detector", "msp",
                     "--out", str(out)]) == 0
        assert "AUROC 1.000" in capsys.readouterr().out
        report = json.loads((out / "report.json").read_text())
        assert report["auroc"] == 1.0 and report["far95"] == 0.0 and report["n_id"] == 25
        check_manifest(out)

    def test_summary_line(self, tmp_path, data_dir, capsys):
        main(["eval", "--scores", str(data_dir / "msp_separable.jsonl"), "--detector", "msp", "--out",
              str(tmp_path / "e")])
        assert "FAR95 0.000" in capsys.readouterr().out

    def test_kind_mismatch(self, tmp_path, data_dir, capsys):
        assert main(["eval", "--scores", str(data_dir / "msp_separable.jsonl"), "--detector", "ppl",
                     "--out", str(tmp_path / "e")]) == 1
        err = capsys.readouterr().err
        assert "class_probs" in err and "token_logprobs" in err

    def test_repetition_attack(self, tmp_path, data_dir):
        got = {}
        for det in ("ppl", "logpx"):
            assert main(["eval", "--scores", str(data_dir / "repetition_attack.jsonl"), "--detector", det,
                         "--out", str(tmp_path / det)]) == 0
            got[det] = json.loads((tmp_path / det / "report.json").read_text())["auroc"]
        assert got == {"ppl": 0.5, "logpx": 1.0}

    def test_validation_lines(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"kind": "class_probs"}\n{"example_id": "a", "split": "id", "class_probs": [0.6, 0.6]}\n')
        assert main(["eval", "--scores", str(bad), "--detector", "msp", "--out", str(tmp_path / "e")]) == 1
        assert f"{bad}:2:" in capsys.readouterr().err

    def test_unknown_detector(self, tmp_path, data_dir):
        assert main(["eval", "--scores", str(data_dir / "msp_separable.jsonl"), "--detector", "odin",
                     "--out", str(tmp_path / "e")]) == 1


class TestTextshift:
    def test_lengths(self, tmp_path, data_dir):
        out = tmp_path / "t"
        args = ["textshift", "append-filler", "--corpus", str(data_dir / "toy_news.jsonl"), "--filler",
                str(data_dir / "filler.jsonl"), "--lengths", PAPER_LENGTHS, "--seed", "1", "--out", str(out)]
        assert main(args) == 0
        files = sorted(p.name for p in out.glob("*.jsonl"))
        assert len(files) == 5 and "toy_news.filler200.jsonl" in files
        check_manifest(out)
        again = tmp_path / "t2"
        assert main(args[:-1] + [str(again)]) == 0
        for name in files + ["manifest.json"]:
            assert (out / name).read_bytes() == (again / name).read_bytes()

    def test_partition_all_id(self, tmp_path, data_dir, capsys):
        out = tmp_path / "p"
        assert main(["textshift", "partition", "--corpus", str(data_dir / "toy_news.jsonl"), "--id-classes",
                     "politics,sports,travel,food,style", "--out", str(out)]) == 0
        assert (out / "ood.jsonl").read_text() == ""
        assert "warning" in capsys.readouterr().err

    def test_partition_unknown_class(self, tmp_path, data_dir):
        assert main(["textshift", "partition", "--corpus", str(data_dir / "toy_news.jsonl"), "--id-classes",
                     "weather", "--out", str(tmp_path / "p")]) == 1

    def test_filler_too_short(self, tmp_path, data_dir):
        assert main(["textshift", "append-filler", "--corpus", str(data_dir / "toy_news.jsonl"), "--filler",
                     str(data_dir / "filler.jsonl"), "--lengths", "100000", "--out", str(tmp_path / "t")]) == 1


class TestOracle:
    def args(self, data_dir, out, *extra):
        return ["oracle", "--id", str(data_dir / "separable_id.jsonl"), "--ood", str(data_dir / "separable_ood.jsonl"),
                "--out", str(out), *extra]

    def test_separable(self, tmp_path, data_dir):
        out = tmp_path / "o"
        assert main(self.args(data_dir, out, "--seed", "2")) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["auroc"] == 1.0 and report["far95"] == 0.0
        model = json.loads((out / "model.json").read_text())
        assert len(model["vocabulary"]) == len(model["weights"])
        check_manifest(out)

    def test_full_train_fraction(self, tmp_path, data_dir, capsys):
        assert main(self.args(data_dir, tmp_path / "o", "--train-fraction", "1.0")) == 1
        assert "held-out" in capsys.readouterr().err

    def test_rerun_identical(self, tmp_path, data_dir):
        main(self.args(data_dir, tmp_path / "a", "--seed", "5"))
        main(self.args(data_dir, tmp_path / "b", "--seed", "5"))
        for name in ("report.json", "model.json", "manifest.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_missing_input(self, tmp_path, data_dir):
        assert main(["oracle", "--id", str(tmp_path / "x.jsonl"), "--ood", str(data_dir / "separable_ood.jsonl"),
                     "--out", str(tmp_path / "o")]) == 2

import argparse
import csv
import json

import numpy as np
import pytest

from sparsedict import (
    GrayImage,
    add_gaussian_noise,
    load_dictionary,
    overcomplete_dct,
    save_pgm,
)
from sparsedict.cli import _resolve_threads, main
from sparsedict.storage import read_json, save_dictionary, write_json


@pytest.fixture
def gen_dir(tmp_path):
    cfg = tmp_path / "gen.json"
    write_json(cfg, {"m": 12, "K": 18, "N": 300, "s": 2, "seed": 4})
    out = tmp_path / "gen_out"
    assert main(["gen", "--config", str(cfg), "--out", str(out)]) == 0
    return out


class TestResolveThreads:
    def args(self, threads=None):
        return argparse.Namespace(threads=threads)

    def test_flag_wins(self, monkeypatch):
        monkeypatch.setenv("SPARSEDICT_THREADS", "7")
        assert _resolve_threads(self.args(3)) == 3

    def test_env_fallback(self, monkeypatch):
        monkeypatch.setenv("SPARSEDICT_THREADS", "5")
        assert _resolve_threads(self.args()) == 5

    def test_default_positive(self, monkeypatch):
        monkeypatch.delenv("SPARSEDICT_THREADS", raising=False)
        assert _resolve_threads(self.args()) >= 1

    def test_floor_at_one(self):
        assert _resolve_threads(self.args(-2)) == 1


class TestGen:
    def test_outputs_and_manifest(self, gen_dir):
        for name in ("truth_dictionary.sdict", "training_set.sdata",
                     "truth_codes.sdata", "manifest.json"):
            assert (gen_dir / name).exists()
        m = read_json(gen_dir / "manifest.json")
        assert m["command"] == "gen"
        assert m["seed"] == 4

    def test_rerun_byte_identical(self, tmp_path):
        cfg = tmp_path / "gen.json"
        write_json(cfg, {"m": 10, "K": 15, "N": 100, "s": 2, "seed": 1})
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["gen", "--config", str(cfg), "--out", str(out1)]) == 0
        assert main(["gen", "--config", str(cfg), "--out", str(out2)]) == 0
        for name in ("truth_dictionary.sdict", "training_set.sdata",
                     "truth_codes.sdata"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = tmp_path / "gen.json"
        write_json(cfg, {"m": 10, "K": 15, "N": 100, "s": 2, "seed": 1})
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["gen", "--config", str(cfg), "--out", str(out1)])
        main(["gen", "--config", str(cfg), "--seed", "2",
              "--out", str(out2)])
        a = (out1 / "truth_dictionary.sdict").read_bytes()
        b = (out2 / "truth_dictionary.sdict").read_bytes()
        assert a != b
        assert read_json(out2 / "manifest.json")["seed"] == 2

    def test_rejects_unknown_field(self, tmp_path, capsys):
        cfg = tmp_path / "gen.json"
        write_json(cfg, {"m": 10, "K": 15, "N": 100, "s": 2, "bogus": 1})
        rc = main(["gen", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert rc == 1
        assert "bogus" in capsys.readouterr().err


class TestTrain:
    def test_standard_run(self, gen_dir, tmp_path, capsys):
        cfg = tmp_path / "train.json"
        write_json(cfg, {"K": 18, "s": 2, "iterations": 3, "seed": 0})
        out = tmp_path / "trained"
        rc = main(["train", "--data", str(gen_dir / "training_set.sdata"),
                   "--config", str(cfg), "--out", str(out), "--threads", "1"])
        assert rc == 0
        assert "final MSE" in capsys.readouterr().out
        D = load_dictionary(out / "dictionary.sdict")
        assert D.shape == (12, 18)
        report = read_json(out / "report.json")
        assert len(report["report"]["per_iteration_residuals"]) == 3
        assert report["config"]["mode"] == "standard"

    def test_split_merge_run(self, gen_dir, tmp_path):
        cfg = tmp_path / "train.json"
        write_json(cfg, {"K": 18, "s": 2, "iterations": 3, "seed": 0,
                         "mode": "split-merge", "L": 3, "K1": 12,
                         "s1": 2, "s2": 1})
        out = tmp_path / "trained"
        rc = main(["train", "--data", str(gen_dir / "training_set.sdata"),
                   "--config", str(cfg), "--out", str(out), "--threads", "1"])
        assert rc == 0
        report = read_json(out / "report.json")
        assert len(report["report"]["local_wall_times_s"]) == 3

    def test_rerun_byte_identical(self, gen_dir, tmp_path):
        cfg = tmp_path / "train.json"
        write_json(cfg, {"K": 18, "s": 2, "iterations": 2, "seed": 5})
        data = str(gen_dir / "training_set.sdata")
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["train", "--data", data, "--config", str(cfg),
              "--out", str(out1), "--threads", "1"])
        main(["train", "--data", data, "--config", str(cfg),
              "--out", str(out2), "--threads", "4"])
        assert (out1 / "dictionary.sdict").read_bytes() == \
            (out2 / "dictionary.sdict").read_bytes()

    def test_validates_config_before_reading_data(self, tmp_path, capsys):
        # invalid config plus a nonexistent data file: the config error must
        # surface, proving nothing touched the data first
        cfg = tmp_path / "train.json"
        write_json(cfg, {"K": 18, "s": 2, "iterations": 3, "bogus": True})
        rc = main(["train", "--data", str(tmp_path / "missing.sdata"),
                   "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert rc == 1
        assert "bogus" in capsys.readouterr().err


class TestDenoise:
    def make_images(self, tmp_path):
        rng = np.random.default_rng(0)
        clean = GrayImage(np.clip(
            128.0 + 30.0 * rng.standard_normal((24, 24)).cumsum(axis=1) / 5.0,
            0, 255).round())
        noisy = add_gaussian_noise(clean, 20.0, seed=1)
        clean_p, noisy_p = tmp_path / "clean.pgm", tmp_path / "noisy.pgm"
        save_pgm(clean, clean_p)
        save_pgm(noisy, noisy_p)
        dict_p = tmp_path / "dct.sdict"
        save_dictionary(dict_p, overcomplete_dct(8, 256))
        return clean_p, noisy_p, dict_p

    def test_denoise_with_reference(self, tmp_path, capsys):
        clean_p, noisy_p, dict_p = self.make_images(tmp_path)
        out_p = tmp_path / "out" / "denoised.pgm"
        rc = main(["denoise", "--in", str(noisy_p), "--dict", str(dict_p),
                   "--sigma", "20", "--out", str(out_p),
                   "--reference", str(clean_p), "--threads", "1"])
        assert rc == 0
        captured = capsys.readouterr().out
        assert "input PSNR" in captured
        assert "output PSNR" in captured
        assert out_p.exists()
        assert (out_p.parent / "manifest.json").exists()

    def test_dictionary_patch_mismatch(self, tmp_path, capsys):
        _, noisy_p, dict_p = self.make_images(tmp_path)
        rc = main(["denoise", "--in", str(noisy_p), "--dict", str(dict_p),
                   "--sigma", "20", "--patch", "4",
                   "--out", str(tmp_path / "o.pgm")])
        assert rc == 1
        assert "patch size" in capsys.readouterr().err


class TestEval:
    def test_truth_dict_self_recovery(self, gen_dir, capsys):
        truth = str(gen_dir / "truth_dictionary.sdict")
        rc = main(["eval", "--dict", truth, "--truth-dict", truth])
        assert rc == 0
        result = json.loads(capsys.readouterr().out)
        assert result["atom_recovery_pct"] == 100.0

    def test_mse_on_truth_pair(self, gen_dir, capsys):
        truth = str(gen_dir / "truth_dictionary.sdict")
        rc = main(["eval", "--dict", truth,
                   "--data", str(gen_dir / "training_set.sdata"),
                   "--sparsity", "2", "--threads", "1"])
        assert rc == 0
        result = json.loads(capsys.readouterr().out)
        # the model is exact, so coding over the truth dictionary fits well
        # (greedy OMP does not guarantee exact recovery on every column)
        assert result["mse_db"] <= -20.0

    def test_data_requires_sparsity(self, gen_dir, capsys):
        rc = main(["eval", "--dict", str(gen_dir / "truth_dictionary.sdict"),
                   "--data", str(gen_dir / "training_set.sdata")])
        assert rc == 1
        assert "--sparsity" in capsys.readouterr().err

    def test_needs_some_target(self, gen_dir, capsys):
        rc = main(["eval", "--dict", str(gen_dir / "truth_dictionary.sdict")])
        assert rc == 1


class TestBench:
    def test_sweep_outputs(self, tmp_path):
        cfg = tmp_path / "bench.json"
        write_json(cfg, {"m": 10, "K": 15, "N": 150, "s": 2, "seed": 0,
                         "iterations": 2, "K1": 10, "s1": 2, "s2": 1,
                         "L_sweep": [2, 3]})
        out = tmp_path / "bench_out"
        rc = main(["bench", "--config", str(cfg), "--out", str(out),
                   "--threads", "1"])
        assert rc == 0
        reports = read_json(out / "bench.json")
        assert len(reports) == 2
        assert reports[0]["predicted"]["T1"] > 0
        with open(out / "bench.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2
        assert "predicted_Ttotal_over_T1" in rows[0]
        assert float(rows[1]["speedup"]) > 0

    def test_requires_sweep(self, tmp_path, capsys):
        cfg = tmp_path / "bench.json"
        write_json(cfg, {"m": 10, "K": 15, "N": 100, "s": 2,
                         "K1": 10, "s1": 2, "s2": 1, "L_sweep": []})
        rc = main(["bench", "--config", str(cfg),
                   "--out", str(tmp_path / "o")])
        assert rc == 1
        assert "L_sweep" in capsys.readouterr().err


class TestErrorPaths:
    def test_missing_config_file(self, tmp_path, capsys):
        rc = main(["gen", "--config", str(tmp_path / "nope.json"),
                   "--out", str(tmp_path / "o")])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_bad_container_magic(self, tmp_path, capsys):
        bad = tmp_path / "bad.sdict"
        bad.write_bytes(b"NOTMAGIC" + b"\x00" * 16)
        rc = main(["eval", "--dict", str(bad), "--truth-dict", str(bad)])
        assert rc == 1

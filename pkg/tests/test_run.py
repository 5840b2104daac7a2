import json

import numpy as np
import pandas as pd
import pytest

from src.cochlea.spectrogram import Cochleagram
from src.datasets.records import DatasetManifest, SampleRecord
from src.networks.architectures import build_cnn, build_gs_net
from src.networks.checkpoint import save_checkpoint
from src.run import build_parser, main, train_config_from_args

CFS = 20e3 + 500.0 * np.arange(161)


@pytest.fixture(autouse=True)
def _isolated_env(monkeypatch, tmp_path):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("ECHOGEO_THREADS", "1")
    monkeypatch.setenv("ECHOGEO_DATA_DIR", str(tmp_path / "data"))


@pytest.fixture
def cochleagram_file(tmp_path, rng):
    return Cochleagram(values=rng.uniform(-1, 1, (161, 250)), cfs=CFS).save(tmp_path / "c.f32")


@pytest.fixture
def cnn_checkpoint(tmp_path):
    return save_checkpoint(build_cnn(filters=(2, 2, 2, 2)), tmp_path / "models" / "cnn.ckpt")


@pytest.fixture
def eval_corpus(tmp_path, rng):
    root = tmp_path / "eval"
    records = []
    for i in range(8):
        n_glints = i % 4 + 1
        record = SampleRecord(index=i, glint_offsets=tuple(0.015 * np.arange(n_glints)), broadcast_duration=4e-3,
                              seed=i, split="eval", path=f"samples/{i:04d}.f32")
        Cochleagram(values=rng.uniform(-1, 1, (161, 250)), cfs=CFS).save(root / record.path)
        records.append(record)
    DatasetManifest(kind="eval", seed=0, config={"kind": "eval"}, samples=records).save(root)
    return root


class TestSimulate:
    def test_noiseless_runs_are_identical(self, tmp_path):
        for name in ("a", "b"):
            code = main(["simulate", "--glints", "0,11.1,48.1mm", "--duration", "3ms", "--noise", "off",
                         "--out", str(tmp_path / f"{name}.f32")])
            assert code == 0
        assert (tmp_path / "a.f32").read_bytes() == (tmp_path / "b.f32").read_bytes()
        config = json.loads((tmp_path / "a.config.json").read_text())
        assert config["glint_offsets_m"] == pytest.approx([0.0, 0.0111, 0.0481])
        assert json.loads((tmp_path / "a.json").read_text())["kind"] == "timeseries"

    def test_offset_beyond_range(self, tmp_path):
        assert main(["simulate", "--glints", "0,80mm", "--out", str(tmp_path / "x.f32")]) == 2

    def test_duration_out_of_range(self, tmp_path):
        assert main(["simulate", "--duration", "0.2ms", "--out", str(tmp_path / "x.f32")]) == 2

    def test_default_output_location(self, tmp_path):
        assert main(["simulate", "--duration", "1ms"]) == 0
        assert (tmp_path / "data" / "simulate" / "echo.f32").exists()

    def test_bad_thread_setting(self, monkeypatch, tmp_path):
        monkeypatch.setenv("ECHOGEO_THREADS", "many")
        assert main(["simulate", "--out", str(tmp_path / "x.f32")]) == 2


class TestCochleagram:
    def test_pipeline(self, tmp_path):
        main(["simulate", "--glints", "0,20mm", "--duration", "1ms", "--out", str(tmp_path / "e.f32")])
        assert main(["cochleagram", "--in", str(tmp_path / "e.f32"), "--out", str(tmp_path / "c.f32")]) == 0
        cochleagram = Cochleagram.load(tmp_path / "c.f32")
        assert cochleagram.values.shape == (161, 250)

        assert main(["cochleagram", "--in", str(tmp_path / "e.f32"), "--out", str(tmp_path / "g.f32"),
                     "--crop"]) == 0
        assert Cochleagram.load(tmp_path / "g.f32").values.shape == (161, 100)

    def test_missing_input(self, tmp_path):
        assert main(["cochleagram", "--in", str(tmp_path / "nope.f32"), "--out", str(tmp_path / "c.f32")]) == 3


class TestModels:
    def test_classify(self, tmp_path, cnn_checkpoint, cochleagram_file):
        out = tmp_path / "result.json"
        assert main(["classify", "--model", str(cnn_checkpoint), "--in", str(cochleagram_file),
                     "--out", str(out)]) == 0
        result = json.loads(out.read_text())
        assert result["glint_count"] in (1, 2, 3, 4)
        assert sum(result["scores"]) == pytest.approx(1.0)

    def test_classify_rejects_spacing_model(self, tmp_path, cochleagram_file):
        gs = save_checkpoint(build_gs_net(), tmp_path / "gs.ckpt")
        assert main(["classify", "--model", str(gs), "--in", str(cochleagram_file)]) == 3

    def test_reconstruct(self, tmp_path, cochleagram_file):
        gs = save_checkpoint(build_gs_net(), tmp_path / "gs.ckpt")
        out = tmp_path / "report.json"
        code = main(["reconstruct", "--model", str(gs), "--in", str(cochleagram_file), "--out", str(out),
                     "--trace-csv", str(tmp_path / "trace.csv")])
        assert code == 0
        report = json.loads(out.read_text())
        assert len(report["trace"]) == 20
        assert report["glint_count"] == len(report["offsets_m"])
        assert report["offsets_m"][0] == 0.0
        assert len(pd.read_csv(tmp_path / "trace.csv")) == 20

    def test_reconstruct_needs_spacing_model(self, tmp_path, cnn_checkpoint, cochleagram_file):
        assert main(["reconstruct", "--model", str(cnn_checkpoint), "--in", str(cochleagram_file),
                     "--out", str(tmp_path / "r.json")]) == 3

    def test_eval(self, tmp_path, cnn_checkpoint, eval_corpus):
        out = tmp_path / "report"
        assert main(["eval", "--model", str(cnn_checkpoint), "--data", str(eval_corpus), "--out", str(out)]) == 0
        confusion = pd.read_csv(out / "confusion.csv", index_col=0)
        assert confusion.shape == (4, 4)
        assert confusion.sum(axis=1).tolist() == [2, 2, 2, 2]
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["n_samples"] == 8
        assert metrics["split"] == "eval"
        assert 0.0 <= metrics["accuracy"] <= 1.0

    def test_eval_needs_model(self, eval_corpus):
        assert main(["eval", "--data", str(eval_corpus)]) == 2

    def test_train_on_wrong_corpus(self, eval_corpus, tmp_path):
        assert main(["train", "--arch", "gs", "--data", str(eval_corpus), "--epochs", "1",
                     "--out", str(tmp_path / "gs.ckpt")]) == 3


class TestTrainingArgs:
    @pytest.mark.parametrize("arch, epochs", [("cnn", 100), ("rnn", 100), ("gs", 200)])
    def test_default_epochs_per_architecture(self, arch, epochs):
        args = build_parser().parse_args(["train", "--arch", arch, "--data", "corpus"])
        network = build_gs_net() if arch == "gs" else build_cnn(filters=(2, 2, 2, 2))
        assert train_config_from_args(args, network, 0).epochs == epochs

    def test_explicit_epochs_win(self):
        args = build_parser().parse_args(["train", "--arch", "gs", "--data", "corpus", "--epochs", "7"])
        assert train_config_from_args(args, build_gs_net(), 0).epochs == 7

    def test_threshold_mode_flag(self):
        args = build_parser().parse_args(["cochleagram", "--in", "e.f32", "--out", "c.f32",
                                          "--threshold-mode", "channel"])
        assert args.threshold is None
        assert args.threshold_mode == "channel"

import shutil

import pandas as pd

from Scripts.cli import main
from Scripts.config import RunConfig, load_config
from Scripts.ingest import scan_dataset
from Scripts.model_file import load_model
from Scripts.preprocess import GRAYSCALE
from Scripts.synthetic import write_dataset

FAST = ["--size", "16x16", "--k", "12", "--train-per-class", "5"]


def test_train_writes_model_config_and_log(small_dataset, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["train", "--data", str(small_dataset), "--out", str(out), *FAST]) == 0

    model = load_model(out / "model.mapf")
    assert model.labels == ["s01", "s02", "s03", "s04"]
    assert (out / "train.log").exists()
    assert load_config(out / "config.txt").k == 12
    assert "exported to" in capsys.readouterr().out


def test_train_missing_dataset(tmp_path, capsys):
    code = main(["train", "--data", str(tmp_path / "nothing"), "--out", str(tmp_path / "run")])
    assert code == 2
    assert "error [ingest] EmptyDataset" in capsys.readouterr().err


def test_add_class_then_duplicate(small_dataset, tmp_path, capsys):
    out = tmp_path / "run"
    extra = tmp_path / "extra"
    extra.mkdir()
    shutil.move(str(small_dataset / "s04"), str(extra / "s04"))
    main(["train", "--data", str(small_dataset), "--out", str(out), *FAST])

    model_path = str(out / "model.mapf")
    assert main(["add-class", str(extra / "s04"), "--model", model_path]) == 0
    assert load_model(model_path).labels == ["s01", "s02", "s03", "s04"]

    assert main(["add-class", str(extra / "s04"), "--model", model_path, "--label", "s04"]) == 2
    assert "DuplicateLabel" in capsys.readouterr().err


def test_evaluate_writes_report(small_dataset, tmp_path):
    out = tmp_path / "report"
    assert main(["evaluate", "--data", str(small_dataset), "--out", str(out), *FAST]) == 0
    for name in ("cms.csv", "roc.csv", "decisions.csv", "summary.txt"):
        assert (out / name).exists()
    summary = (out / "summary.txt").read_text()
    assert "k = 12" in summary
    assert "classifier = map" in summary
    assert pd.read_csv(out / "cms.csv")["score"].iloc[-1] == 1.0


def test_evaluate_is_deterministic(small_dataset, tmp_path):
    for name in ("a", "b"):
        main(["evaluate", "--data", str(small_dataset), "--out", str(tmp_path / name), "--seed", "9", *FAST])
    for csv in ("cms.csv", "roc.csv", "decisions.csv"):
        assert (tmp_path / "a" / csv).read_bytes() == (tmp_path / "b" / csv).read_bytes()


def test_evaluate_existing_model_and_baselines(small_dataset, tmp_path):
    out = tmp_path / "run"
    main(["train", "--data", str(small_dataset), "--out", str(out), "--classifier", "pca", *FAST])
    code = main(["evaluate", "--data", str(small_dataset), "--out", str(tmp_path / "eval"),
                 "--model", str(out / "model.mapf"), *FAST])
    assert code == 0
    assert (tmp_path / "eval" / "summary.txt").exists()


def test_evaluate_into_unwritable_location(small_dataset, tmp_path, capsys):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    code = main(["evaluate", "--data", str(small_dataset), "--out", str(blocker / "report"), *FAST])
    assert code == 3
    assert "IoFailure" in capsys.readouterr().err


def test_recognize_prints_ranking(small_dataset, tmp_path, capsys):
    out = tmp_path / "run"
    main(["train", "--data", str(small_dataset), "--out", str(out), *FAST])
    capsys.readouterr()

    probe = next(path for label, path in scan_dataset(small_dataset, 5, seed=0).train_items() if label == "s02")
    assert main(["recognize", str(probe), "--model", str(out / "model.mapf"), "--top", "3"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3
    rank, label, score = lines[0].split("\t")
    assert rank == "1"
    assert label == "s02"
    float(score)


def test_recognize_corrupt_image(small_dataset, tmp_path, capsys):
    out = tmp_path / "run"
    main(["train", "--data", str(small_dataset), "--out", str(out), *FAST])
    broken = tmp_path / "broken.ppm"
    broken.write_bytes(b"P6\n16 16\n255\n" + bytes(5))
    assert main(["recognize", str(broken), "--model", str(out / "model.mapf")]) == 2
    assert "error [ingest] CorruptFile" in capsys.readouterr().err


def test_config_file_with_flag_override(small_dataset, tmp_path):
    config = tmp_path / "exp.txt"
    config.write_text(f"data_root = {small_dataset}\nsize = 16x16\nk = 10\ntrain_per_class = 5\n")
    out = tmp_path / "run"
    assert main(["train", "--config", str(config), "--out", str(out), "--k", "8"]) == 0
    saved = load_config(out / "config.txt")
    assert (saved.k, saved.size) == (8, (16, 16))


def test_train_log_records_counts_k_and_epsilon(small_dataset, tmp_path):
    for kind in ("map", "lda"):
        out = tmp_path / kind
        assert main(["train", "--data", str(small_dataset), "--out", str(out), "--classifier", kind, *FAST]) == 0
        log = (out / "train.log").read_text()
        assert "s01=5" in log and "s04=5" in log
        assert "k=12" in log
        assert "epsilon" in log
        assert "Training took" in log


def test_summary_echoes_the_scored_model(small_dataset, tmp_path):
    out = tmp_path / "run"
    main(["train", "--data", str(small_dataset), "--out", str(out), "--classifier", "pca", "--color", "gray",
          "--select", "mask", *FAST])
    report = tmp_path / "eval"
    assert main(["evaluate", "--data", str(small_dataset), "--out", str(report),
                 "--model", str(out / "model.mapf"), "--train-per-class", "5"]) == 0

    summary = (report / "summary.txt").read_text()
    echoed = RunConfig.from_text(summary.split("# effective configuration")[1])
    assert echoed.classifier == "pca"
    assert echoed.color_mode == GRAYSCALE
    assert echoed.selection_mode == "fixed_mask"
    assert (echoed.k, echoed.size) == (12, (16, 16))


def test_lda_with_k_below_class_count(tmp_path):
    data = write_dataset(tmp_path / "many", seed=4, n_classes=8, per_class=6, size=16)
    out = tmp_path / "report"
    code = main(["evaluate", "--data", str(data), "--out", str(out), "--size", "16x16", "--k", "4",
                 "--train-per-class", "5", "--classifier", "lda"])
    assert code == 0
    assert (out / "cms.csv").exists()

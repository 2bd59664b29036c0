import csv
import subprocess
import sys

import numpy as np
import pytest

from icfrank.cli import build_parser, main, read_feature_matrix


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--healthy", "12", "--chf", "10", "--length", "3000",
                 "--seed", "3", "--out", str(d / "cohort")]) == 0
    return d


FAST = ["--window", "5", "--max-iter", "50", "--subseries", "10"]


def test_synth_layout(workdir):
    lines = (workdir / "cohort" / "manifest.csv").read_text().splitlines()
    assert lines[0] == "id,path,label"
    assert len(lines) == 23
    assert lines[1].startswith("h000,rr/h000.txt,healthy")
    assert (workdir / "cohort" / "rr" / "c009.txt").exists()


def test_pipeline_end_to_end(workdir, capsys):
    manifest = str(workdir / "cohort" / "manifest.csv")
    feats = workdir / "features.csv"
    assert main(["featurize", manifest, "--out", str(feats), "--emit-config"] + FAST) == 0
    matrix, header = read_feature_matrix(feats)
    assert matrix.values.shape == (22, 360)
    assert header["window"] == "5" and header["subseries"] == "10"
    assert matrix.names[0] == "m[1,0,0]"
    # feature names contain commas and must be quoted
    first = (workdir / "features.csv").read_text().splitlines()
    assert '"m[1,0,0]"' in [l for l in first if not l.startswith("#")][0]

    rank_dir = workdir / "rank"
    assert main(["rank", str(feats), "--out", str(rank_dir), "--splits", "5",
                 "--train-healthy", "8", "--train-chf", "6"]) == 0
    assert "mean test accuracy" in capsys.readouterr().out
    with open(rank_dir / "ranking.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["feature", "rank", "frequency"]
    assert len(rows) == 361
    with open(rank_dir / "errors.csv", newline="") as fh:
        err = list(csv.reader(fh))[1:]
    assert sum(int(n) for _, n in err) == 5
    model = (rank_dir / "model.txt").read_text()
    assert "setting.window=5" in model

    out = workdir / "pred.csv"
    assert main(["classify", str(rank_dir / "model.txt"), manifest, "--out", str(out)]) == 0
    with open(out, newline="") as fh:
        pred = list(csv.reader(fh))
    assert pred[0] == ["id", "label", "margin"]
    assert len(pred) == 23
    correct = sum((p[1] == "healthy") == p[0].startswith("h") for p in pred[1:])
    assert correct >= 18


def test_decompose_and_correlate(workdir):
    manifest = str(workdir / "cohort" / "manifest.csv")
    dd = workdir / "dec"
    assert main(["decompose", manifest, "--out", str(dd)] + FAST) == 0
    with open(dd / "h000.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x", "F1", "F2", "R"]
    data = np.array(rows[1:], dtype=float)
    assert np.allclose(data[:, 2:].sum(axis=1), data[:, 1], atol=1e-9)

    cd = workdir / "corr"
    assert main(["correlate", manifest, "--out", str(cd), "--v-points", "5"] + FAST) == 0
    for name in ("scatter.csv", "balance.csv", "vsweep.csv", "orderstat_F1_sigma_+2.csv",
                 "orderstat_F2_m_-1.csv"):
        assert (cd / name).exists(), name
    with open(cd / "vsweep.csv", newline="") as fh:
        vs = list(csv.reader(fh))
    assert len(vs) == 6
    assert all(-1 <= float(r) <= 1 for _, r in vs[1:])


def test_rank_deterministic(workdir):
    manifest = str(workdir / "cohort" / "manifest.csv")
    feats = workdir / "feat_det.csv"
    main(["featurize", manifest, "--out", str(feats)] + FAST)
    outs = []
    for k in range(2):
        d = workdir / f"det{k}"
        assert main(["rank", str(feats), "--out", str(d), "--splits", "4", "--seed", "7",
                     "--train-healthy", "8", "--train-chf", "6"]) == 0
        outs.append([(d / n).read_bytes() for n in ("ranking.csv", "errors.csv", "model.txt")])
    assert outs[0] == outs[1]


def test_short_series_error(tmp_path, capsys):
    (tmp_path / "rr").mkdir()
    (tmp_path / "rr" / "a.txt").write_text("\n".join(["0.8"] * 100) + "\n")
    (tmp_path / "m.csv").write_text("id,path,label\na,rr/a.txt,healthy\n")
    code = main(["featurize", str(tmp_path / "m.csv"), "--out", str(tmp_path / "f.csv")])
    assert code == 1
    err = capsys.readouterr().err
    assert err.startswith("error: insufficient-length:")
    assert err.count("\n") == 1
    assert not (tmp_path / "f.csv").exists()


def test_missing_file_error(tmp_path, capsys):
    (tmp_path / "m.csv").write_text("id,path,label\na,nope.txt,chf\n")
    assert main(["featurize", str(tmp_path / "m.csv"), "--out", str(tmp_path / "f.csv")]) == 1
    assert "nope.txt" in capsys.readouterr().err


def test_unlabeled_rank_error(tmp_path, capsys):
    (tmp_path / "f.csv").write_text('id,label,"m[1,0,0]"\na,,1.0\nb,1,2.0\n')
    assert main(["rank", str(tmp_path / "f.csv"), "--out", str(tmp_path)]) == 1
    assert capsys.readouterr().err.startswith("error: validation:")


def test_help_lists_defaults():
    text = build_parser()._subparsers._group_actions[0].choices["rank"].format_help()
    for flag in ("--window", "--modes", "--subseries", "--tol", "--max-iter", "--c",
                 "--splits", "--seed", "--emit-config"):
        assert flag in text
    assert "default: 50" in text and "default: 1000" in text


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "icfrank", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "featurize" in res.stdout


def test_max_drop_fraction_flag(tmp_path, capsys):
    (tmp_path / "a.txt").write_text("\n".join(["0.8"] * 400 + ["x"] * 60) + "\n")
    (tmp_path / "m.csv").write_text("id,path,label\na,a.txt,healthy\n")
    args = ["decompose", str(tmp_path / "m.csv"), "--out", str(tmp_path / "d")] + FAST
    assert main(args) == 1
    assert capsys.readouterr().err.startswith("error: malformed-input:")
    assert main(args + ["--max-drop-fraction", "0.2"]) == 0

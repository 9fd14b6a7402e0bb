import json

import numpy as np
import pytest

from santis.cli import main
from santis.data import load_tensor

TINY = {"grid": 32, "n_train": 4, "n_test": 2, "library_size": 10, "cs": {"lam": 3e-4, "max_iters": 5},
        "train": {"epochs": 1, "lambda_gan": 0.0, "generator": {"n_levels": 2, "base_channels": 4},
                  "discriminator": {"n_layers": 2, "base_channels": 4}}}


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "exp.json"
    p.write_text(json.dumps(TINY))
    return p


def test_phantoms_and_recon(tmp_path, cfg_file, capsys):
    assert main(["--out", str(tmp_path / "ph"), "phantoms", "--n", "2", "--grid", "32"]) == 0
    ref, header = load_tensor(tmp_path / "ph" / "phantom_0001_ref.tensor")
    assert ref.shape == (32, 32) and header["meta"]["seed"] == 1
    assert main(["--config", str(cfg_file), "--out", str(tmp_path / "lib"), "masks"]) == 0
    capsys.readouterr()
    args = ["--config", str(cfg_file), "--out", str(tmp_path / "rc"), "recon", "--method", "zf",
            "--ref", str(tmp_path / "ph" / "phantom_0000_ref.tensor"),
            "--sens", str(tmp_path / "ph" / "phantom_0000_sens.tensor"), "--library", str(tmp_path / "lib")]
    assert main(args) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "method,nRMSE(%),SSIM(%),Tenengrad(%)" and lines[1].startswith("zf,")
    assert (tmp_path / "rc" / "recon.png").exists()


def test_train_eval_report(tmp_path, cfg_file, capsys):
    ck = tmp_path / "ck"
    assert main(["--config", str(cfg_file), "--seed", "3", "--precision", "f64", "--out", str(ck),
                 "train", "--mode", "fixed"]) == 0
    manifest = json.loads((ck / "manifest.json").read_text())
    assert manifest["cfg"]["seed"] == 3 and manifest["cfg"]["precision"] == "f64"
    cfg = dict(TINY, checkpoints={"CNN-Fix": str(ck)}, methods=["ZF", "CNN-Fix"], save_images=False)
    cfg_file.write_text(json.dumps(cfg))
    capsys.readouterr()
    assert main(["--config", str(cfg_file), "--out", str(tmp_path / "ev"), "eval", "--no-time"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "method,pattern,nRMSE(%),SSIM(%),Tenengrad(%),time(s)"
    assert len(out) == 5
    assert main(["--out", str(tmp_path / "rep"), "report", "--results", str(tmp_path / "ev")]) == 0
    assert (tmp_path / "rep" / "metrics.png").exists()


def test_exit_code_validation(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "spiral", "methods": ["ZF"]}))
    assert main(["--config", str(bad), "--out", str(tmp_path / "o"), "eval"]) == 2
    assert "kind" in capsys.readouterr().err
    assert main(["report", "--results", str(tmp_path / "missing")]) == 2


def test_exit_code_numerical(tmp_path, cfg_file):
    main(["--out", str(tmp_path / "ph"), "phantoms", "--n", "1", "--grid", "32"])
    cfg_file.write_text(json.dumps(dict(TINY, cs={"lam": 0.01, "step": 1e200, "max_iters": 50})))
    args = ["--config", str(cfg_file), "--out", str(tmp_path / "rc"), "recon", "--method", "cs",
            "--ref", str(tmp_path / "ph" / "phantom_0000_ref.tensor"),
            "--sens", str(tmp_path / "ph" / "phantom_0000_sens.tensor")]
    assert main(args) == 3


def test_cnn_recon_requires_checkpoint(tmp_path, cfg_file):
    main(["--out", str(tmp_path / "ph"), "phantoms", "--n", "1", "--grid", "32"])
    args = ["--config", str(cfg_file), "recon", "--method", "cnn",
            "--ref", str(tmp_path / "ph" / "phantom_0000_ref.tensor"),
            "--sens", str(tmp_path / "ph" / "phantom_0000_sens.tensor")]
    assert main(args) == 2

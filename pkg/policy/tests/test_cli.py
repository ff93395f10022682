import json
import subprocess
import sys

import numpy as np
import pytest

from r2g_policy.cli import main


def test_train_and_infer_roundtrip(mini_dataset, tmp_path, capsys):
    ck = tmp_path / "ck.pt"
    code = main(["train", "--dataset", str(mini_dataset), "--out", str(ck),
                 "--steps", "5", "--batch-size", "8", "--horizon", "8",
                 "--warmup-steps", "2", "--total-steps", "5"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["checkpoint"] == str(ck)
    assert np.isfinite(payload["initial_loss"])

    episode = sorted(p for p in mini_dataset.iterdir() if p.is_dir())[0]
    code = main(["infer", "--checkpoint", str(ck), "--episode", str(episode),
                 "--frame", "1", "--steps", "5", "--seed", "0"])
    assert code == 0
    chunk = np.array(json.loads(capsys.readouterr().out)["chunk"])
    assert chunk.shape == (8, 8)
    assert np.abs(np.linalg.norm(chunk[:, 3:7], axis=1) - 1.0).max() < 1e-5


def test_eval_subcommand_writes_csv(mini_dataset, serve_cmd, tmp_path, capsys):
    ck = tmp_path / "ck.pt"
    assert main(["train", "--dataset", str(mini_dataset), "--out", str(ck),
                 "--steps", "5", "--batch-size", "8", "--horizon", "8",
                 "--warmup-steps", "2", "--total-steps", "5"]) == 0
    capsys.readouterr()
    out_csv = tmp_path / "policy.csv"
    code = main(["eval", "--checkpoint", str(ck),
                 "--serve-cmd", " ".join(serve_cmd),
                 "--seeds", "0", "--episodes", "1", "--out", str(out_csv)])
    assert code == 0
    capsys.readouterr()
    lines = out_csv.read_text().strip().splitlines()
    assert lines[0] == "seed,episodes,successes,success_rate"
    assert lines[-2].startswith("mean,")
    assert lines[-1].startswith("std,")


def test_help_lists_subcommands():
    out = subprocess.run([sys.executable, "-m", "r2g_policy.cli", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("train", "infer", "eval"):
        assert cmd in out.stdout

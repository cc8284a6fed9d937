import numpy as np

from egan import harness
from egan.cli import main

TINY_SETS = [
    "--set", "training_episodes=60",
    "--set", "pretrain_episodes=3",
    "--set", "gan_train_steps=20",
    "--set", "enhancer_train_steps=20",
    "--set", "synthetic_batches=5",
    "--set", "refine_samples=64",
]


def test_run_none(tmp_path, capsys):
    out = tmp_path / "runs"
    code = main(["run", "--mode", "none", "--seed", "1", "--out", str(out)] + TINY_SETS)
    assert code == 0
    assert (out / "curve_none_1.csv").exists()
    assert (out / "meta_none_1.txt").exists()
    assert (out / "policy_none_1.txt").exists()
    assert "mode=none seed=1" in capsys.readouterr().out


def test_run_egan_writes_pretrain_artifacts(tmp_path):
    out = tmp_path / "runs"
    code = main(["run", "--mode", "egan", "--seed", "2", "--out", str(out)] + TINY_SETS)
    assert code == 0
    for name in (
        "curve_egan_2.csv",
        "gan_losses_egan_2.csv",
        "kl_history_egan_2.csv",
        "generator_egan_2.txt",
        "discriminator_egan_2.txt",
        "enhancer_egan_2.txt",
    ):
        assert (out / name).exists(), name


def test_run_respects_config_file(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("training_episodes = 12\npretrain_episodes = 2\n"
                   "gan_train_steps = 10\nenhancer_train_steps = 10\n"
                   "synthetic_batches = 2\nrefine_samples = 64\n")
    out = tmp_path / "runs"
    code = main(["run", "--mode", "gan", "--seed", "0", "--config", str(cfg),
                 "--out", str(out)])
    assert code == 0
    curve = harness.load_curve_csv(out / "curve_gan_0.csv")
    assert len(curve) == 12


def test_config_error_exit_code(tmp_path, capsys):
    code = main(["run", "--mode", "none", "--seed", "0", "--out", str(tmp_path),
                 "--set", "pg_discount=7"])
    assert code == 2
    assert "configuration error" in capsys.readouterr().err


def test_unknown_key_exit_code(tmp_path):
    code = main(["run", "--mode", "none", "--out", str(tmp_path),
                 "--set", "flux_capacitor=1"])
    assert code == 2


def test_runtime_error_exit_code(tmp_path, capsys):
    code = main(["report", "--runs", str(tmp_path), "--threshold", "120"])
    assert code == 3
    assert "error" in capsys.readouterr().err


def test_report_over_runs(tmp_path, capsys):
    out = tmp_path / "runs"
    for seed in ("0", "1"):
        assert main(["run", "--mode", "none", "--seed", seed, "--out", str(out)]
                    + TINY_SETS) == 0
    code = main(["report", "--runs", str(out), "--threshold", "5", "--window", "10"])
    assert code == 0
    assert (out / "report.csv").exists()
    assert (out / "aggregate_none.csv").exists()
    assert "none: median_samples_to_threshold=" in capsys.readouterr().out


def test_sweep_writes_curves_and_aggregates(tmp_path):
    out = tmp_path / "sweep"
    code = main([
        "sweep", "--lengths", "2,4", "--seeds", "0,1", "--mode", "gan",
        "--out", str(out),
    ] + TINY_SETS)
    assert code == 0
    for length in (2, 4):
        assert (out / f"sweep_episodes_{length}.csv").exists()
        assert (out / f"sweep_samples_{length}.csv").exists()
        assert (out / f"len_{length}" / "curve_gan_0.csv").exists()
        assert (out / f"len_{length}" / "curve_gan_1.csv").exists()


def test_same_seed_cli_runs_byte_identical(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert main(["run", "--mode", "egan", "--seed", "7", "--out", str(out)]
                    + TINY_SETS) == 0
    c1 = (out1 / "curve_egan_7.csv").read_bytes()
    c2 = (out2 / "curve_egan_7.csv").read_bytes()
    assert c1 == c2

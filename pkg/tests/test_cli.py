import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbtrpo.cli import ANGLE_EDGES, angle_histogram, main, read_summary
from sbtrpo.config import TrainConfig, parse_config, write_config
from sbtrpo.errors import ConfigError
from sbtrpo.trainer import CSV_HEADER

FAST = ["--set", "hidden_sizes=8", "--set", "steps_per_epoch=200", "--set", "n_envs=2"]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_log(path, angles_r, angles_c):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for i, (a, b) in enumerate(zip(angles_r, angles_c)):
            w.writerow([i] + [""] * 9 + [a, b])


class TestConfig:
    def test_empty_file_gives_defaults(self, tmp_path):
        path = tmp_path / "empty.cfg"
        path.write_text("")
        cfg = parse_config(path, env={})
        assert cfg == TrainConfig()
        assert (cfg.gamma, cfg.target_kl, cfg.beta, cfg.cg_iters) == (0.99, 0.01, 0.75, 50)
        assert (cfg.tikhonov, cfg.step_fraction, cfg.max_backtracks) == (0.02, 0.8, 100)

    def test_override_wins_over_file(self, tmp_path):
        path = tmp_path / "a.cfg"
        path.write_text("# comment\nbeta = 0.6\nepochs = 5  # trailing comment\n")
        cfg = parse_config(path, ["beta=0.9"], env={})
        assert cfg.beta == 0.9 and cfg.epochs == 5

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown key: betta"):
            parse_config(None, ["betta=0.9"], env={})

    @pytest.mark.parametrize("pair", ["epochs=many", "whiten_reward_adv=maybe", "hidden_sizes=a,b", "gamma=1.5", "env=mujoco"])
    def test_bad_values(self, pair):
        with pytest.raises(ConfigError):
            parse_config(None, [pair], env={})

    def test_missing_equals(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("beta 0.5\n")
        with pytest.raises(ConfigError):
            parse_config(path, env={})

    def test_seed_environment_variable(self):
        assert parse_config(None, env={"SBTRPO_SEED": "17"}).seed == 17
        assert parse_config(None, ["seed=3"], env={"SBTRPO_SEED": "17"}).seed == 3

    @settings(max_examples=100, deadline=None)
    @given(
        beta=st.floats(0.01, 1.0),
        gamma=st.floats(0.0, 0.999),
        kl=st.floats(1e-6, 1.0),
        hidden=st.lists(st.integers(1, 128), min_size=1, max_size=3),
        n_envs=st.integers(1, 8),
        per_env=st.integers(1, 500),
        seed=st.integers(0, 2**31),
        whiten=st.booleans(),
        env=st.sampled_from(["hazard_grid", "point_goal", "point_circle"]),
    )
    def test_round_trip(self, beta, gamma, kl, hidden, n_envs, per_env, seed, whiten, env):
        cfg = TrainConfig(
            env=env,
            beta=beta,
            gamma=gamma,
            target_kl=kl,
            hidden_sizes=tuple(hidden),
            n_envs=n_envs,
            steps_per_epoch=n_envs * per_env,
            seed=seed,
            whiten_reward_adv=whiten,
        )
        assert parse_config(None, write_config(cfg).splitlines(), env={}) == cfg


class TestHistogram:
    def test_single_bin(self):
        counts = angle_histogram(["60"] * 7)
        assert counts.sum() == 7 and counts[12] == 7
        assert (ANGLE_EDGES[12], ANGLE_EDGES[13]) == (60.0, 65.0)

    def test_empty(self):
        counts = angle_histogram([])
        assert counts.shape == (36,) and not counts.any()

    def test_direct_tally(self, rng):
        angles = rng.uniform(0, 180, 500)
        counts = angle_histogram([f"{a:.17g}" for a in angles] + ["", "nan"])
        tally = np.zeros(36, dtype=int)
        for a in angles:
            tally[min(int(a // 5), 35)] += 1
        assert np.array_equal(counts, tally)


class TestCommands:
    def test_run_zero_epochs(self, tmp_path, capsys):
        out = tmp_path / "run"
        assert main(["run", "--set", "epochs=0", "--out", str(out)]) == 0
        assert (out / "log.csv").read_text() == ",".join(CSV_HEADER) + "\n"
        assert (out / "summary.txt").exists() and (out / "config.txt").exists()

    def test_run_twice_identical(self, tmp_path):
        for name in ("a", "b"):
            assert main(["run", *FAST, "--set", "epochs=2", "--out", str(tmp_path / name)]) == 0
        assert (tmp_path / "a" / "log.csv").read_bytes() == (tmp_path / "b" / "log.csv").read_bytes()
        assert (tmp_path / "a" / "training_curves.png").stat().st_size > 0

    def test_config_file_and_written_config(self, tmp_path):
        cfg_path = tmp_path / "c.cfg"
        cfg_path.write_text("epochs = 1\nbeta = 0.9\nhidden_sizes = 8\nsteps_per_epoch = 200\nn_envs = 2\n")
        out = tmp_path / "run"
        assert main(["run", "--config", str(cfg_path), "--no-plots", "--out", str(out)]) == 0
        assert parse_config(out / "config.txt", env={}).beta == 0.9
        assert not (out / "training_curves.png").exists()

    def test_unknown_key_exit_code(self, tmp_path, capsys):
        assert main(["run", "--set", "betta=0.9", "--out", str(tmp_path)]) == 3
        assert "unknown key: betta" in capsys.readouterr().err

    def test_oracle_default_grid(self, capsys):
        assert main(["oracle"]) == 0
        out = capsys.readouterr().out
        assert "safe_J_r = 0.932065" in out
        # the default grid's unconstrained optimum ties with the safe one
        assert "unconstrained_J_c = 0\n" in out

    def test_oracle_shortcut_layout(self, tmp_path, capsys):
        grid = tmp_path / "shortcut.txt"
        grid.write_text("S..H...\n...H...\n...H..G\n.......\n")
        assert main(["oracle", "--set", f"layout={grid}"]) == 0
        values = dict(line.split(" = ") for line in capsys.readouterr().out.splitlines())
        assert float(values["safe_J_r"]) == pytest.approx(0.99**9, abs=1e-12)
        assert float(values["unconstrained_J_r"]) == pytest.approx(0.99**7, abs=1e-12)
        assert float(values["safe_J_c"]) == 0.0 and float(values["unconstrained_J_c"]) > 0

    def test_oracle_infeasible(self, tmp_path, capsys):
        grid = tmp_path / "walled.txt"
        grid.write_text("S...\n..HH\n..HG\n")
        assert main(["oracle", "--set", f"layout={grid}"]) == 2
        assert "infeasible" in capsys.readouterr().out

    def test_oracle_needs_tabular_env(self):
        assert main(["oracle", "--set", "env=point_goal"]) == 3

    def test_diagnose(self, tmp_path):
        log = tmp_path / "log.csv"
        write_log(log, ["60"] * 4 + [""], ["100", "100", "175", "180", ""])
        assert main(["diagnose", "--log", str(log), "--out", str(tmp_path / "d")]) == 0
        rows = read_csv(tmp_path / "d" / "angle_histogram.csv")
        assert len(rows) == 36 and rows[0]["bin_lo_deg"] == "0" and rows[-1]["bin_hi_deg"] == "180"
        assert {int(r["bin_lo_deg"]): int(r["count_r"]) for r in rows if r["count_r"] != "0"} == {60: 4}
        assert {int(r["bin_lo_deg"]): int(r["count_c"]) for r in rows if r["count_c"] != "0"} == {100: 2, 175: 2}
        assert (tmp_path / "d" / "angle_histograms.png").exists()

    def test_diagnose_empty_log(self, tmp_path):
        log = tmp_path / "log.csv"
        write_log(log, [], [])
        assert main(["diagnose", "--log", str(log), "--out", str(tmp_path / "d"), "--no-plots"]) == 0
        assert all(r["count_r"] == r["count_c"] == "0" for r in read_csv(tmp_path / "d" / "angle_histogram.csv"))

    def test_diagnose_missing_log(self, tmp_path):
        assert main(["diagnose", "--log", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 1

    def test_sweep(self, tmp_path):
        out = tmp_path / "sweep"
        args = ["sweep", *FAST, "--set", "epochs=1", "--beta", "0.6,0.75,0.9", "--seeds", "0..1", "--out", str(out)]
        assert main(args) == 0
        rows = read_csv(out / "sweep.csv")
        assert len(rows) == 6
        assert [(r["beta"], r["seed"]) for r in rows] == [(b, s) for b in ("0.6", "0.75", "0.9") for s in ("0", "1")]
        for r in rows:
            summary = read_summary(out / f"beta={float(r['beta']):g}_seed={r['seed']}" / "summary.txt")
            for key in ("safety_prob", "safe_reward", "exact_J_r", "exact_J_c"):
                assert r[key] == summary[key]
        assert (out / "pareto.png").exists()

    def test_single_beta_sweep_equals_run(self, tmp_path):
        common = [*FAST, "--set", "epochs=1", "--no-plots"]
        assert main(["sweep", *common, "--beta", "0.75", "--seeds", "2", "--out", str(tmp_path / "s")]) == 0
        assert main(["run", *common, "--set", "seed=2", "--out", str(tmp_path / "r")]) == 0
        swept = tmp_path / "s" / "beta=0.75_seed=2" / "log.csv"
        assert swept.read_bytes() == (tmp_path / "r" / "log.csv").read_bytes()

    @pytest.mark.parametrize("seeds", [",", "a..b"])
    def test_bad_seed_list(self, tmp_path, seeds):
        assert main(["sweep", "--seeds", seeds, "--out", str(tmp_path)]) == 3

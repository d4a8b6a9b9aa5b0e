"""Configuration, sweep persistence, reproducibility, resume, CLI."""

import json
import subprocess
import sys

import numpy as np
import pytest

from kickedtop.cli import main as cli_main
from kickedtop.harness import (
    CSV_HEADER,
    ConfigError,
    build_config,
    expand_grid,
    parse_values,
    resume_or_extend,
    run_experiment,
)


def classical_raw(**exp):
    return {
        "experiment": {"engine": "classical", "seed": 9, **exp},
        "grid": {"k": [6.0], "a": [0.5], "p": [0.2, 0.8]},
        "run": {"steps": 200, "n_traj": 48, "n_resets": 10},
    }


class TestConfig:
    def test_parse_values(self):
        assert parse_values("0.1,0.2,0.5") == [0.1, 0.2, 0.5]
        got = parse_values("0.6:0.8:0.05")
        np.testing.assert_allclose(got, [0.6, 0.65, 0.7, 0.75, 0.8])

    def test_missing_seed_rejected(self):
        raw = classical_raw()
        del raw["experiment"]["seed"]
        with pytest.raises(ConfigError, match="seed"):
            build_config(raw)

    def test_a_theta_exclusive(self):
        raw = classical_raw()
        raw["grid"]["theta"] = [1.0]
        with pytest.raises(ConfigError, match="mutually exclusive"):
            build_config(raw)

    def test_unknown_engine(self):
        raw = classical_raw()
        raw["experiment"]["engine"] = "tea-leaves"
        with pytest.raises(ConfigError, match="engine"):
            build_config(raw)

    def test_p_range_checked(self):
        raw = classical_raw()
        raw["grid"]["p"] = [0.2, 1.3]
        with pytest.raises(ConfigError, match="grid.p"):
            build_config(raw)

    def test_unknown_run_key_named(self):
        raw = classical_raw()
        raw["run"]["bogus_knob"] = 1
        with pytest.raises(ConfigError, match="bogus_knob"):
            build_config(raw)

    def test_spin_engines_require_S(self):
        raw = {
            "experiment": {"engine": "quantum", "seed": 1},
            "grid": {"k": [6.0], "theta": [1.0], "p": [0.5]},
        }
        with pytest.raises(ConfigError, match="grid.S"):
            build_config(raw)

    def test_grid_point_streams_keyed_by_values(self):
        cfg_a = build_config(classical_raw())
        raw = classical_raw()
        raw["grid"]["p"] = [0.8, 0.2, 0.5]  # reordered and extended
        cfg_b = build_config(raw)
        key = {pt.p: pt.stream_prefix() for pt in expand_grid(cfg_a)}
        key_b = {pt.p: pt.stream_prefix() for pt in expand_grid(cfg_b)}
        assert key[0.2] == key_b[0.2] and key[0.8] == key_b[0.8]


class TestSweep:
    def test_schema_and_row_metadata(self):
        table = run_experiment(build_config(classical_raw()), write=False)
        assert table.header == CSV_HEADER
        for rec in table.records:
            assert rec["engine"] == "classical"
            assert rec["seed"] == 9
            if rec["observable"] in ("O2", "mu"):
                assert rec["n_samples"] == 48

    def test_worker_count_invariance(self):
        t1 = run_experiment(build_config(classical_raw(workers=1)), write=False)
        t3 = run_experiment(build_config(classical_raw(workers=3, block_size=7)), write=False)
        # block size is part of the layout, so pin it while varying workers
        t1b = run_experiment(build_config(classical_raw(workers=1, block_size=7)), write=False)
        assert t1b.csv_text() == t3.csv_text()
        assert t1.csv_text() == run_experiment(build_config(classical_raw(workers=1)), write=False).csv_text()

    def test_quantum_worker_invariance(self):
        raw = {
            "experiment": {"engine": "quantum", "seed": 3, "block_size": 16},
            "grid": {"k": [6.0], "theta": [np.pi / 2], "p": [0.9], "S": [8]},
            "run": {"n_traj": 48, "steps": 12},
        }
        a = run_experiment(build_config(raw | {"experiment": raw["experiment"] | {"workers": 1}}), write=False)
        b = run_experiment(build_config(raw | {"experiment": raw["experiment"] | {"workers": 4}}), write=False)
        assert a.csv_text() == b.csv_text()

    def test_outputs_written(self, tmp_path):
        raw = classical_raw(out=str(tmp_path / "run"))
        run_experiment(build_config(raw))
        csv = (tmp_path / "run" / "table.csv").read_text()
        meta = json.loads((tmp_path / "run" / "meta.json").read_text())
        assert csv.splitlines()[0] == CSV_HEADER
        assert meta["engine"] == "classical"
        assert meta["seed"] == 9
        assert meta["code_version"]
        assert meta["partial"] is False
        assert meta["config"]["grid"]["p"] == [0.2, 0.8]

    def test_analytics_reference_row(self):
        raw = {
            "experiment": {"engine": "analytics", "seed": 1},
            "grid": {"k": [6.0], "a": [float(np.cos(np.pi / 4))]},
        }
        table = run_experiment(build_config(raw), write=False)
        rows = {r["observable"]: r["mean"] for r in table.records}
        assert abs(rows["p_c"] - 0.77166) < 5e-4
        assert abs(rows["abs_lambda"] - 3.2259285) < 1e-6

    def test_density_schema(self, tmp_path):
        raw = {
            "experiment": {"engine": "classical-density", "seed": 2, "out": str(tmp_path / "d")},
            "grid": {"k": [6.0], "a": [0.5], "p": [1.0]},
            "run": {"steps": 100, "burn_in": 50, "n_traj": 5, "n_theta": 12, "n_phi": 24},
        }
        table = run_experiment(build_config(raw))
        text = (tmp_path / "d" / "table.csv").read_text()
        assert text.splitlines()[0] == "k,theta,a,p,theta_bin,phi_bin,count"
        counts = [float(line.rsplit(",", 1)[1]) for line in text.splitlines()[1:]]
        assert abs(sum(counts) - 1.0) < 1e-9


class TestPartialAndEnv:
    def test_interrupt_flushes_completed_points(self, tmp_path, monkeypatch):
        import kickedtop.harness as hz

        real = hz.run_task
        calls = {"n": 0}

        def flaky(cfg, pt, ids):
            calls["n"] += 1
            if pt.p == 0.8:
                raise KeyboardInterrupt
            return real(cfg, pt, ids)

        monkeypatch.setattr(hz, "run_task", flaky)
        raw = classical_raw(out=str(tmp_path / "part"), workers=1)
        table = run_experiment(build_config(raw))
        assert table.meta["partial"] is True
        meta = json.loads((tmp_path / "part" / "meta.json").read_text())
        assert meta["partial"] is True
        ps = {r["p"] for r in table.records if r["observable"] == "O2"}
        assert ps == {0.2}  # only the completed grid point is flushed

    def test_worker_env_default(self, monkeypatch):
        monkeypatch.setenv("KICKEDTOP_WORKERS", "5")
        raw = classical_raw()
        del raw["experiment"]["seed"]
        raw["experiment"]["seed"] = 1
        cfg = build_config(raw)
        assert cfg.workers == 5


class TestResume:
    def test_identical_grid_no_recompute(self, tmp_path):
        raw = classical_raw(out=str(tmp_path / "a"))
        run_experiment(build_config(raw))
        raw2 = classical_raw(out=str(tmp_path / "b"))
        resume_or_extend(build_config(raw2), tmp_path / "a")
        assert (tmp_path / "a" / "table.csv").read_bytes() == (tmp_path / "b" / "table.csv").read_bytes()

    def test_extension_appends_and_preserves(self, tmp_path):
        raw = classical_raw(out=str(tmp_path / "a"))
        run_experiment(build_config(raw))
        old_lines = (tmp_path / "a" / "table.csv").read_text().splitlines()
        raw2 = classical_raw(out=str(tmp_path / "b"))
        raw2["grid"]["p"] = [0.2, 0.8, 0.5, 0.9]
        resume_or_extend(build_config(raw2), tmp_path / "a")
        new_lines = (tmp_path / "b" / "table.csv").read_text().splitlines()
        assert new_lines[: len(old_lines)] == old_lines
        added = new_lines[len(old_lines):]
        assert len(added) == 4  # two new p values x (O2, mu)
        assert all(",0.5," in line or ",0.9," in line for line in added)

    def test_seed_change_refused(self, tmp_path):
        raw = classical_raw(out=str(tmp_path / "a"))
        run_experiment(build_config(raw))
        raw2 = classical_raw(out=str(tmp_path / "b"))
        raw2["experiment"]["seed"] = 10
        with pytest.raises(ConfigError, match="seed"):
            resume_or_extend(build_config(raw2), tmp_path / "a")

    def test_run_param_change_refused(self, tmp_path):
        raw = classical_raw(out=str(tmp_path / "a"))
        run_experiment(build_config(raw))
        raw2 = classical_raw(out=str(tmp_path / "b"))
        raw2["run"]["steps"] = 400
        with pytest.raises(ConfigError, match="run parameters"):
            resume_or_extend(build_config(raw2), tmp_path / "a")

    def test_shrunken_grid_refused(self, tmp_path):
        raw = classical_raw(out=str(tmp_path / "a"))
        run_experiment(build_config(raw))
        raw2 = classical_raw(out=str(tmp_path / "b"))
        raw2["grid"]["p"] = [0.2]
        with pytest.raises(ConfigError, match="grid.p"):
            resume_or_extend(build_config(raw2), tmp_path / "a")


class TestCLI:
    def test_analytics_subcommand(self, tmp_path, capsys):
        rc = cli_main([
            "analytics", "--seed", "1", "--k", "6.0", "--a", "0.5",
            "--out", str(tmp_path / "an"),
        ])
        assert rc == 0
        text = (tmp_path / "an" / "table.csv").read_text()
        assert text.splitlines()[0] == CSV_HEADER
        assert any(",p_c," in line for line in text.splitlines())

    def test_config_file_with_overrides(self, tmp_path):
        cfg = tmp_path / "exp.toml"
        cfg.write_text(
            "[experiment]\nengine = \"classical\"\nseed = 4\n\n"
            "[grid]\nk = [6.0]\na = [0.5]\np = [0.3]\n\n"
            "[run]\nsteps = 120\nn_traj = 16\nn_resets = 5\n"
        )
        out = tmp_path / "cli_run"
        rc = cli_main(["classical-sweep", "--config", str(cfg), "--seed", "5",
                       "--out", str(out)])
        assert rc == 0
        meta = json.loads((out / "meta.json").read_text())
        assert meta["seed"] == 5  # flag overrides file

    def test_invalid_config_exit_code(self, capsys):
        rc = cli_main(["classical-sweep", "--k", "6.0", "--a", "0.5", "--p", "0.5"])
        assert rc == 2
        assert "seed" in capsys.readouterr().err

    def test_console_script_help(self):
        out = subprocess.run(
            [sys.executable, "-m", "kickedtop.cli", "--help"],
            capture_output=True, text=True,
        )
        assert out.returncode == 0
        assert "classical-sweep" in out.stdout

    def test_resume_subcommand(self, tmp_path):
        cfg = tmp_path / "exp.toml"
        cfg.write_text(
            "[experiment]\nengine = \"classical\"\nseed = 4\n\n"
            "[grid]\nk = [6.0]\na = [0.5]\np = [0.3]\n\n"
            "[run]\nsteps = 120\nn_traj = 16\nn_resets = 5\n"
        )
        rc = cli_main(["classical-sweep", "--config", str(cfg), "--out", str(tmp_path / "r1")])
        assert rc == 0
        rc = cli_main(["resume", "--config", str(cfg), "--p", "0.3,0.6",
                       "--prior", str(tmp_path / "r1"), "--out", str(tmp_path / "r2")])
        assert rc == 0
        lines = (tmp_path / "r2" / "table.csv").read_text().splitlines()
        assert any(",0.6," in line for line in lines)

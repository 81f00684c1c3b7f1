import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aqgates import cli
from aqgates.cli import COMMANDS, SCHEMAS, main
from aqgates.config import ConfigError, Quantity, ResultTable, config_from_csv, emit_csv, parse_config, read_csv

GOLDEN = Path(__file__).parent / "golden"


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestParsing:
    def test_cyclic_rate_stored_plainly(self):
        cfg = parse_config("[dispersive-z]\ngamma = 100 MHz\nchi = 0.5 gamma\n", SCHEMAS)
        assert cfg.params["gamma"] == Quantity(100.0, "MHz")
        assert cfg.params["gamma"].si() == pytest.approx(1e8)

    def test_empty_file_lists_required_keys(self):
        with pytest.raises(ConfigError) as err:
            parse_config("", SCHEMAS, "clock")
        assert any("duration" in p for p in err.value.problems)

    def test_empty_file_without_subcommand(self):
        with pytest.raises(ConfigError):
            parse_config("", SCHEMAS)

    def test_sweep_block(self):
        cfg = parse_config("[fidelity-sweep]\ngamma = 1 MHz\n[sweep]\nchi: 0 .. 30 gamma, 601 samples\n", SCHEMAS)
        assert cfg.sweep.samples == 601 and cfg.sweep.values()[-1] == 30.0

    def test_all_errors_reported_with_lines(self):
        text = "[ms-gate]\neta = abc\ndetuning = 20 furlongs\nbogus = 1 Hz\nn_max = 2.5\n"
        with pytest.raises(ConfigError) as err:
            parse_config(text, SCHEMAS)
        problems = err.value.problems
        assert len(problems) == 4
        for line in (2, 3, 4, 5):
            assert any(f"line {line}:" in p for p in problems)
        assert any("unknown unit" in p for p in problems)
        assert any("malformed number" in p for p in problems)

    def test_missing_unit_rejected(self):
        with pytest.raises(ConfigError, match="needs a unit"):
            parse_config("[ring]\nradius = 3\n", SCHEMAS)

    def test_header_mismatch(self):
        with pytest.raises(ConfigError):
            parse_config("[ring]\n", SCHEMAS, "slide")

    def test_overrides_and_alias(self):
        cfg = parse_config("", SCHEMAS, "laser-timing", ["T=70ns"])
        assert cfg.params["delay"].si() == pytest.approx(7e-8)

    def test_comments_ignored(self):
        cfg = parse_config("# a run\n[slide]  # header\nspeed = 0.5 m/s # slow\nexposure = 50 us\n", SCHEMAS)
        assert cfg.params["speed"].si() == 0.5

    def test_choice_validation(self):
        with pytest.raises(ConfigError):
            parse_config("[xy-gate]\ninjection = laser\n", SCHEMAS)

    def test_bad_sweep_param(self):
        with pytest.raises(ConfigError):
            parse_config("[ring]\n[sweep]\nn_max: 1 .. 2 , 3 samples\n", SCHEMAS)


class TestRoundTrip:
    @pytest.mark.parametrize("name", sorted(COMMANDS))
    def test_defaults_round_trip(self, name):
        required = {"dispersive-z": ["gamma=1MHz"], "fidelity-sweep": ["gamma=1MHz"],
                    "laser-timing": ["delay=70ns"], "clock": ["duration=10us"]}
        cfg = parse_config("", SCHEMAS, name, required.get(name, []), seed=4)
        assert parse_config(cfg.text(), SCHEMAS, seed=4) == cfg

    @settings(max_examples=50)
    @given(g=st.floats(1e-3, 1e3), chi=st.floats(-1e3, 1e3), n=st.integers(2, 9),
           mode=st.sampled_from(["fock", "pulsed"]))
    def test_random_configs_round_trip(self, g, chi, n, mode):
        text = f"[xy-gate]\ng = {g!r} MHz\nchi = {chi!r} MHz\nn_max = {n}\ninjection = {mode}\n"
        cfg = parse_config(text, SCHEMAS)
        assert parse_config(cfg.text(), SCHEMAS) == cfg

    def test_emitted_table_reproduces_config(self):
        cfg = parse_config("[ring]\nchord = 5 um\n[sweep]\nduration: 10 .. 50 us, 3 samples\n", SCHEMAS, seed=7)
        table = ResultTable(("a", "b"), [[1.0, 2.0]], {"x": 1.5})
        text = emit_csv(table, cfg, "demo", "0")
        assert config_from_csv(text, SCHEMAS) == cfg
        cols, data, summary = read_csv(text)
        assert cols == ("a", "b") and data.tolist() == [[1.0, 2.0]] and summary["x"] == "1.5"

    def test_row_arity_enforced(self):
        with pytest.raises(ValueError):
            ResultTable(("a", "b"), [[1.0, 2.0, 3.0]])


class TestMain:
    def test_laser_timing(self, capsys):
        code, out, _ = _run(["laser-timing", "T=70ns"], capsys)
        assert code == 0
        _, data, summary = read_csv(out)
        assert float(summary["distance_m"]) == pytest.approx(20.99, abs=5e-3)
        assert "# note:" in out

    def test_invalid_config_exit_1_no_file(self, tmp_path, capsys):
        out = tmp_path / "res.csv"
        code, _, err = _run(["ring", "radius=3parsecs", "--out", str(out)], capsys)
        assert code == 1 and not out.exists()
        assert "ConfigError" in err

    def test_physics_validation_exit_1(self, tmp_path, capsys):
        out = tmp_path / "res.csv"
        code, _, err = _run(["ring", "chord=7um", "--out", str(out)], capsys)
        assert code == 1 and not out.exists()
        assert "GeometryError" in err

    def test_numerical_failure_exit_2(self, tmp_path, capsys):
        out = tmp_path / "res.csv"
        code, _, err = _run(["ms-gate", "n_max=2", "--out", str(out)], capsys)
        assert code == 2 and not out.exists()
        assert "TruncationError" in err

    def test_config_file(self, tmp_path, capsys):
        conf = tmp_path / "run.conf"
        conf.write_text("[slide]\nspeed = 0.5 m/s\nexposure = 50 us\n")
        code, out, _ = _run(["--config", str(conf)], capsys)
        assert code == 0
        assert float(read_csv(out)[2]["beam_diameter_m"]) == pytest.approx(25e-6)

    def test_rerun_from_own_header(self, tmp_path, capsys):
        first = tmp_path / "a.csv"
        assert main(["ultrafast", "coupling=2MHz", "samples=5", "--out", str(first)]) == 0
        cfg = config_from_csv(first.read_text(), SCHEMAS)
        conf = tmp_path / "again.conf"
        conf.write_text(cfg.text())
        second = tmp_path / "b.csv"
        assert main(["--config", str(conf), "--out", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()

    def test_clock_deterministic_for_seed(self, tmp_path):
        paths = [tmp_path / f"{i}.csv" for i in range(3)]
        base = ["clock", "duration=20us", "trajectories=20", "step=0.05 1/gamma"]
        for path, seed in zip(paths, (5, 5, 6)):
            assert main(base + ["--seed", str(seed), "--out", str(path)]) == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()
        assert paths[0].read_bytes() != paths[2].read_bytes()

    def test_generic_sweep_and_workers(self, tmp_path):
        conf = tmp_path / "cz.conf"
        conf.write_text("[rydberg-cz]\nrabi = 1 MHz\n[sweep]\nblockade_shift: 5 .. 50 MHz, 4 samples\n")
        outs = [tmp_path / "w1.csv", tmp_path / "w2.csv"]
        for out, w in zip(outs, (1, 2)):
            assert main(["--config", str(conf), "--workers", str(w), "--out", str(out)]) == 0
        assert outs[0].read_bytes() == outs[1].read_bytes()
        cols, data, _ = read_csv(outs[0].read_text())
        assert cols[:2] == ("blockade_shift", "fidelity")
        assert np.all(np.diff(data[:, 1]) > 0)

    def test_regen_refuses_on_failed_invariants(self, tmp_path, monkeypatch, capsys):
        cmd = COMMANDS["slide"]
        monkeypatch.setitem(COMMANDS, "slide", cli.Command(cmd.schema, cmd.run, lambda t: ["forced"]))
        out = tmp_path / "g.csv"
        code, _, err = _run(["slide", "exposure=1us", "--regen-golden", "--out", str(out)], capsys)
        assert code == 2 and not out.exists() and "forced" in err

    def test_regen_needs_out(self, capsys):
        assert _run(["slide", "exposure=1us", "--regen-golden"], capsys)[0] == 1

    def test_help_keys(self, capsys):
        code, out, _ = _run(["--help-keys"], capsys)
        assert code == 0 and all(f"[{name}]" in out for name in COMMANDS)

    def test_module_entry_point(self):
        res = subprocess.run([sys.executable, "-m", "aqgates", "slide", "exposure=7.5us"],
                             capture_output=True, text=True, check=True)
        assert "2.775e-05" in res.stdout


class TestGolden:
    def test_levine_pichler_byte_identical(self, tmp_path):
        out = tmp_path / "lp.csv"
        assert main(["levine-pichler", "--out", str(out)]) == 0
        assert out.read_text() == (GOLDEN / "levine_pichler.csv").read_text()

    @pytest.mark.parametrize("name", ["fidelity_sweep_in_regime", "fidelity_sweep_detuned"])
    def test_golden_sweeps_are_reproducible_configs(self, name):
        text = (GOLDEN / name).with_suffix(".csv").read_text()
        cfg = config_from_csv(text, SCHEMAS)
        assert cfg.subcommand == "fidelity-sweep" and cfg.sweep.samples == 601
        _, data, _ = read_csv(text)
        assert data.shape == (21, 5)
        assert np.all(data[:, 2] <= 1.0)

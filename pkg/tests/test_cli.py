import json

import pytest

from gaptooth.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, ConfigError, main, read_config


def test_relax_writes_outputs(tmp_path):
    code = main(["relax", "--times", "0,0.5", "--out_dir", str(tmp_path)])
    assert code == EXIT_OK
    assert (tmp_path / "relax_t0.csv").exists()
    assert (tmp_path / "relax_t0.5.csv").exists()
    assert (tmp_path / "relax_summary.csv").read_text().startswith("t,roughness,amplitude,crest")
    assert "steps" in json.loads((tmp_path / "relax_run.json").read_text())


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# relaxation\nm = 22\nr = 1/6\ntimes = 0\nout_dir = {tmp_path / 'a'}\n")
    assert main(["relax", "--config", str(cfg), "--m", "10", "--out-dir", str(tmp_path / "b")]) == EXIT_OK
    text = (tmp_path / "b" / "relax_t0.csv").read_text()
    assert "# m=10\n" in text
    assert not (tmp_path / "a").exists()


def test_spectrum_command(tmp_path, capsys):
    assert main(["spectrum", "--out_dir", str(tmp_path)]) == EXIT_OK
    assert "gap_ratio" in capsys.readouterr().out
    assert (tmp_path / "spectrum.csv").read_text().count("\n") > 90


@pytest.mark.parametrize(
    "argv",
    [
        ["relax", "--m", "9"],
        ["relax", "--n", "7"],
        ["relax", "--coupling_order", "nonic"],
        ["relax", "--topology", "bounded"],
        ["dambreak", "--bc_left", "wall@nowhere"],
        ["dambreak", "--placement", "upstream"],
        ["dambreak", "--downstream_depth", "-1"],
        ["frobnicate"],
        ["relax", "--r", "one sixth"],
    ],
)
def test_config_errors_exit_2(argv, tmp_path, capsys):
    assert main(argv + ["--out_dir", str(tmp_path)] if argv[0] != "frobnicate" else argv) == EXIT_CONFIG


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("m=10\ncolour=blue\n")
    with pytest.raises(ConfigError, match="colour"):
        read_config(cfg)
    assert main(["relax", "--config", str(cfg)]) == EXIT_CONFIG
    assert main(["relax", "--config", str(tmp_path / "missing.cfg")]) == EXIT_CONFIG


def test_numerical_failure_exit_3(tmp_path, capsys):
    argv = ["dambreak", "--m", "10", "--downstream_depth", "0.001", "--dam_smoothing", "0",
            "--times", "0,2", "--out_dir", str(tmp_path)]
    assert main(argv) == EXIT_NUMERICAL
    assert "numerical failure" in capsys.readouterr().err


def test_reference_command(tmp_path):
    argv = ["reference", "--m", "10", "--times", "0,1", "--out_dir", str(tmp_path)]
    assert main(argv) == EXIT_OK
    assert (tmp_path / "reference_area.csv").exists()
    assert (tmp_path / "reference_t1.csv").exists()

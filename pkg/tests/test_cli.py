import numpy as np

from mlamr.cli import EXIT_CONFIG, EXIT_OK, main


def _small_cfg(tmp_path):
    text = """
[domain]
x_min = 0.0
x_max = 2.0
y_min = 0.0
y_max = 0.5

[grid]
nx = 16
ny = 4
max_levels = 2
refine_x = 2
refine_y = 2

[time]
t_final = 0.05
frame_times = 0.0, 0.05
cfl = 0.6

[scenario]
bathymetry = step
step_x = 1.2
b_left = -1.0
b_right = -0.45
eta_rest = 0.0, -0.6
wave_amplitude = 0.02
wave_center = 0.8
wave_width = 0.15

[amr]
wave_tolerance = 2e-3, 4e-3
"""
    path = tmp_path / "tiny.cfg"
    path.write_text(text)
    return str(path)


class TestRun:
    def test_run_writes_frames_and_stats(self, tmp_path, capsys):
        cfg = _small_cfg(tmp_path)
        out = tmp_path / "out"
        assert main(["run", cfg, "--out", str(out)]) == EXIT_OK
        assert (out / "frame0000.bin").exists()
        assert (out / "frame0001.bin").exists()
        assert (out / "stats.json").exists()
        assert "completed:" in capsys.readouterr().out

    def test_text_frames_flag(self, tmp_path):
        cfg = _small_cfg(tmp_path)
        out = tmp_path / "out_text"
        assert main(["run", cfg, "--out", str(out), "--text-frames"]) == EXIT_OK
        blob = (out / "frame0000.txt").read_bytes()
        assert blob.startswith(b"MLAMR FRAME-TEXT 1")

    def test_bad_config_exit_code(self, tmp_path, caplog):
        path = tmp_path / "bad.cfg"
        path.write_text("[grid]\nnx = 16\n")
        assert main(["run", str(path)]) == EXIT_CONFIG


class TestCompareAndReport:
    def test_compare_self_is_zero(self, tmp_path, capsys):
        cfg = _small_cfg(tmp_path)
        out = tmp_path / "out"
        main(["run", cfg, "--out", str(out)])
        capsys.readouterr()  # drop the run output
        rc = main([
            "compare", str(out / "frame0001.bin"), str(out / "frame0001.bin"),
            "--norm", "l1",
        ])
        assert rc == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert any(line.startswith("eta_1_l1 ") for line in lines)
        for line in lines:
            assert float(line.split()[1]) == 0.0

    def test_compare_amr_vs_uniform(self, tmp_path, capsys):
        cfg = _small_cfg(tmp_path)
        out_a = tmp_path / "amr"
        out_u = tmp_path / "uni"
        main(["run", cfg, "--out", str(out_a)])
        main(["run", cfg, "--out", str(out_u), "--no-amr"])
        capsys.readouterr()
        rc = main([
            "compare", str(out_a / "frame0001.bin"), str(out_u / "frame0001.bin"),
        ])
        assert rc == EXIT_OK
        values = {
            line.split()[0]: float(line.split()[1])
            for line in capsys.readouterr().out.strip().splitlines()
        }
        assert values["eta_1_l1"] < 1e-3

    def test_report_pipeline(self, tmp_path, capsys):
        cfg = _small_cfg(tmp_path)
        out_a = tmp_path / "amr"
        out_u = tmp_path / "uni"
        main(["run", cfg, "--out", str(out_a)])
        main(["run", cfg, "--out", str(out_u), "--no-amr"])
        report = tmp_path / "report.txt"
        rc = main([
            "report", str(out_a / "stats.json"), str(out_u / "stats.json"),
            "--out", str(report),
        ])
        assert rc == EXIT_OK
        text = report.read_text()
        assert "Update ratio:" in text
        assert "Total Cell Updates" in text

    def test_report_without_baseline(self, tmp_path, capsys):
        cfg = _small_cfg(tmp_path)
        out_a = tmp_path / "amr"
        main(["run", cfg, "--out", str(out_a)])
        rc = main(["report", str(out_a / "stats.json")])
        assert rc == EXIT_OK
        assert "n/a" in capsys.readouterr().out

    def test_compare_missing_file_is_config_error(self, tmp_path):
        assert main(["compare", "/nope/a", "/nope/b"]) == EXIT_CONFIG

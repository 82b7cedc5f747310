import numpy as np
import pytest

from mlamr.config import parse_config
from mlamr.driver import RunStats, Simulation, run_simulation
from mlamr.errors import NumericalAbortError
from mlamr.state import surfaces_from_state


def _write_cfg(tmp_path, **overrides):
    base = {
        "domain": {"x_min": 0.0, "x_max": 4.0, "y_min": 0.0, "y_max": 1.0},
        "grid": {"nx": 32, "ny": 8, "max_levels": 2,
                 "refine_x": "2", "refine_y": "2"},
        "time": {"t_final": 0.1, "frame_times": "0.0, 0.1", "cfl": 0.6},
        "physics": {"num_layers": 2, "density_ratio": 0.95},
        "scenario": {
            "bathymetry": "step", "step_x": 2.5, "b_left": -1.0,
            "b_right": -0.45, "eta_rest": "0.0, -0.6",
            "wave_amplitude": 0.02, "wave_center": 2.25, "wave_width": 0.12,
        },
        "boundaries": {"left": "wall", "right": "wall"},
        "amr": {"wave_tolerance": "2e-3, 4e-3"},
    }
    for section, kv in overrides.items():
        base.setdefault(section, {}).update(kv)
    lines = []
    for section, kv in base.items():
        lines.append(f"[{section}]")
        for k, v in kv.items():
            lines.append(f"{k} = {v}")
        lines.append("")
    path = tmp_path / "run.cfg"
    path.write_text("\n".join(lines))
    return str(path)


class TestSingleLevel:
    def test_update_count_identity(self, tmp_path):
        path = _write_cfg(tmp_path, grid={"max_levels": 1, "refine_x": "",
                                          "refine_y": ""})
        cfg = parse_config(path)
        stats = run_simulation(cfg, out_dir=None)
        assert stats.total_cell_updates == 32 * 8 * stats.num_coarse_steps
        assert stats.cell_updates_per_level == {1: stats.total_cell_updates}

    def test_uniform_fine_equivalent(self, tmp_path):
        path = _write_cfg(tmp_path)
        cfg = parse_config(path)
        stats = run_simulation(cfg, out_dir=None, amr=False)
        assert stats.total_cell_updates == 64 * 16 * stats.num_coarse_steps
        assert not stats.amr_enabled


class TestSubcycling:
    def test_fine_steps_per_coarse_step(self, tmp_path):
        path = _write_cfg(tmp_path, scenario={"wave_amplitude": 0.05,
                                              "wave_center": 1.0,
                                              "wave_width": 0.3})
        cfg = parse_config(path)
        sim = Simulation(cfg)
        assert sim.hier.patches[2], "wave should be refined at t=0"
        dt = 0.001
        steps2_before = sim.steps[2]
        sim.advance_coarse_step(dt)
        assert sim.steps[1] == 1
        assert sim.steps[2] - steps2_before == 2  # r_t = 2
        for p in sim.hier.patches[2]:
            assert p.time == sim.hier.patches[1][0].time
        sim.close()

    def test_times_align_exactly_at_sync(self, tmp_path):
        path = _write_cfg(tmp_path, scenario={"wave_amplitude": 0.05,
                                              "wave_center": 1.0,
                                              "wave_width": 0.3})
        cfg = parse_config(path)
        sim = Simulation(cfg)
        for _ in range(5):
            sim.advance_coarse_step(0.0013)
        t1 = sim.hier.patches[1][0].time
        for p in sim.hier.patches.get(2, []):
            assert p.time == t1  # bitwise
        sim.close()


class TestLakeAtRestFullMachinery:
    def test_three_levels_regridding(self, tmp_path):
        path = _write_cfg(
            tmp_path,
            grid={"nx": 40, "ny": 8, "max_levels": 3,
                  "refine_x": "2, 2", "refine_y": "2, 2"},
            time={"t_final": 1.0, "frame_times": "", "cfl": 0.6},
            scenario={"wave_amplitude": 0.0},
        )
        cfg = parse_config(path)
        sim = Simulation(cfg)
        for _ in range(40):
            import mlamr.physics as physics

            dt = min(
                physics.stable_dt(p, sim.params, cfg.cfl, cfg.dt_max)
                for p in sim.hier.patches[1]
            )
            sim.advance_coarse_step(dt)
        assert sim.hier.patches[3], "front band should stay refined"
        worst = 0.0
        for level, plist in sim.hier.patches.items():
            for p in plist:
                jj, ii = p.interior
                eta = surfaces_from_state(p.h[:, jj, ii], p.bathy[jj, ii])
                for m in range(2):
                    wet = p.h[m][jj, ii] > sim.params.dry_tolerance
                    if wet.any():
                        rest = (0.0, -0.6)[m]
                        worst = max(worst, np.abs(eta[m][wet] - rest).max())
        assert worst < 1e-11
        sim.close()


class TestMassAccounting:
    def test_identity_and_drift(self, tmp_path):
        path = _write_cfg(tmp_path, time={"t_final": 0.2})
        cfg = parse_config(path)
        stats = run_simulation(cfg, out_dir=None)
        for m in range(2):
            reported = (
                stats.refine_delta[m] + stats.derefine_delta[m]
                + stats.sync_delta[m]
            )
            residual = stats.final_mass[m] - stats.initial_mass[m] - reported
            assert abs(residual) <= 1e-12 * stats.initial_mass[m]
            assert abs(stats.mass_drift[m]) <= 1e-3 * stats.initial_mass[m]


class TestDeterminism:
    def test_single_worker_bit_identical(self, tmp_path):
        path = _write_cfg(tmp_path)
        cfg = parse_config(path)
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        stats_a = run_simulation(cfg, out_dir=out_a)
        stats_b = run_simulation(cfg, out_dir=out_b)
        assert stats_a.total_cell_updates == stats_b.total_cell_updates
        fa = (out_a / "frame0001.bin").read_bytes()
        fb = (out_b / "frame0001.bin").read_bytes()
        assert fa == fb

    def test_worker_count_does_not_change_counts(self, tmp_path):
        path = _write_cfg(tmp_path)
        cfg = parse_config(path)
        s1 = run_simulation(cfg, out_dir=None, workers=1)
        s4 = run_simulation(cfg, out_dir=None, workers=4)
        assert s1.total_cell_updates == s4.total_cell_updates
        assert s1.cell_updates_per_level == s4.cell_updates_per_level


class TestAbort:
    def test_non_finite_aborts_with_dump(self, tmp_path):
        path = _write_cfg(tmp_path)
        cfg = parse_config(path)
        sim = Simulation(cfg)
        sim.hier.patches[1][0].h[0, 5, 5] = np.nan
        with pytest.raises(NumericalAbortError):
            sim.advance_coarse_step(1e-3)
        sim.close()

    def test_run_simulation_writes_abort_frame(self, tmp_path, monkeypatch):
        path = _write_cfg(tmp_path)
        cfg = parse_config(path)
        out = tmp_path / "dump"

        orig = Simulation.advance_coarse_step

        def poisoned(self, dt):
            self.hier.patches[1][0].h[0, 5, 5] = np.nan
            orig(self, dt)

        monkeypatch.setattr(Simulation, "advance_coarse_step", poisoned)
        with pytest.raises(NumericalAbortError):
            run_simulation(cfg, out_dir=out)
        assert (out / "abort.bin").exists()
        assert (out / "stats.json").exists()


class TestStatsRoundTrip:
    def test_json_round_trip(self, tmp_path):
        path = _write_cfg(tmp_path)
        cfg = parse_config(path)
        stats = run_simulation(cfg, out_dir=tmp_path / "o")
        loaded = RunStats.from_json(tmp_path / "o" / "stats.json")
        assert loaded.total_cell_updates == stats.total_cell_updates
        assert loaded.cell_updates_per_level == stats.cell_updates_per_level
        np.testing.assert_allclose(loaded.final_mass, stats.final_mass)

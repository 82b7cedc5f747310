import numpy as np
import pytest

from conftest import OPEN_X, WALLS, fill_bc_only, set_lake_at_rest, single_patch
from oracles import (
    dam_break_cell_averages,
    two_layer_characteristic_speeds,
)

from mlamr import ghost, physics
from mlamr.errors import CflViolationError
from mlamr.state import surfaces_from_state


def run_steps(hier, patch, params, nsteps, boundaries=WALLS, cfl=0.9,
              t_stop=None):
    t = 0.0
    k = 0
    while True:
        if t_stop is None and k >= nsteps:
            break
        if t_stop is not None and t >= t_stop - 1e-14:
            break
        fill_bc_only(hier, patch, boundaries)
        dt = physics.stable_dt(patch, params, cfl)
        if t_stop is not None:
            dt = min(dt, t_stop - t)
        physics.step_patch(patch, dt, params, y_first=bool(k % 2))
        t += dt
        k += 1
    return t, k


class TestWaveSpeeds:
    def test_frozen_example(self):
        # h1 = h2 = 0.5, g = 1, r = 0.98
        assert physics.external_wave_speed(1.0, 1.0) == pytest.approx(1.0)
        assert physics.internal_wave_speed(0.5, 0.5, 1.0, 0.98) == pytest.approx(
            0.070710678, rel=1e-8
        )

    def test_against_quasilinear_eigenvalues(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            h1, h2 = rng.uniform(0.2, 2.0, size=2)
            r = rng.uniform(0.9, 0.995)
            g = rng.uniform(0.5, 9.81)
            lam = two_layer_characteristic_speeds(h1, 0.0, h2, 0.0, g, r)
            ext = physics.external_wave_speed(h1 + h2, g)
            inn = physics.internal_wave_speed(h1, h2, g, r)
            assert ext == pytest.approx(lam[3], rel=5e-2)
            assert ext == pytest.approx(-lam[0], rel=5e-2)
            assert inn == pytest.approx(lam[2], rel=5e-2)
            assert inn == pytest.approx(-lam[1], rel=5e-2)


class TestStableDt:
    def test_all_dry_returns_dt_max(self, params2):
        hier, patch = single_patch(10, 10, bathy=0.5)  # bed above sea level
        assert physics.stable_dt(patch, params2, 0.9, dt_max=2.5) == 2.5

    def test_formula(self, params2):
        hier, patch = single_patch(10, 10, domain=(0, 1, 0, 1), bathy=-1.0)
        set_lake_at_rest(patch, (0.0, -0.6))
        dt = physics.stable_dt(patch, params2, 0.9)
        assert dt == pytest.approx(0.9 * 0.1 / 1.0, rel=1e-12)

    def test_halving_dx_halves_dt(self, params2):
        _, p1 = single_patch(10, 10, domain=(0, 1, 0, 1))
        _, p2 = single_patch(20, 20, domain=(0, 1, 0, 1))
        for p in (p1, p2):
            set_lake_at_rest(p, (0.0, -0.6))
        dt1 = physics.stable_dt(p1, params2, 0.9)
        dt2 = physics.stable_dt(p2, params2, 0.9)
        assert dt2 == pytest.approx(dt1 / 2, rel=1e-12)


def _shelf(patch, step_x=0.6, b_left=-1.0, b_right=-0.45):
    x = patch.x_centers(ghosts=True)
    x_lo, x_hi = x - patch.dx / 2, x + patch.dx / 2
    frac = np.clip(step_x - x_lo, 0, patch.dx) / patch.dx
    patch.bathy[:, :] = (b_left * frac + b_right * (1 - frac))[None, :]


class TestWellBalancing:
    def test_lake_at_rest_flat_bed(self, params2):
        hier, patch = single_patch(24, 12, bathy=-1.0)
        set_lake_at_rest(patch, (0.0, -0.6))
        h0 = patch.h.copy()
        run_steps(hier, patch, params2, 20)
        assert np.abs(patch.h - h0).max() < 1e-13
        assert np.abs(patch.hu).max() < 1e-13

    def test_lake_at_rest_discontinuous_shelf(self, params2):
        hier, patch = single_patch(40, 8, bathy=-1.0)
        _shelf(patch)
        set_lake_at_rest(patch, (0.0, -0.6))
        eta0 = surfaces_from_state(patch.h, patch.bathy).copy()
        run_steps(hier, patch, params2, 50)
        eta = surfaces_from_state(patch.h, patch.bathy)
        for m in range(2):
            wet = patch.h[m] > params2.dry_tolerance
            assert np.abs((eta[m] - eta0[m])[wet]).max() < 5e-12
        assert np.abs(patch.hu).max() < 5e-12
        assert np.abs(patch.hv).max() < 5e-12

    def test_lake_at_rest_with_outflow_sides(self, params2):
        hier, patch = single_patch(40, 8, bathy=-1.0)
        _shelf(patch)
        set_lake_at_rest(patch, (0.0, -0.6))
        h0 = patch.h.copy()
        run_steps(hier, patch, params2, 30, boundaries=OPEN_X)
        assert np.abs(patch.h - h0).max() < 5e-12


class TestConservation:
    def test_closed_box_mass_constant_1000_steps(self, params2):
        hier, patch = single_patch(40, 8, domain=(0, 4, 0, 0.8), bathy=-1.0)
        set_lake_at_rest(patch, (0.0, -0.6))
        x = patch.x_centers()
        bump = 0.05 * np.exp(-(((x - 1.2) / 0.3) ** 2))
        patch.h[0] += bump[None, :]
        jj, ii = patch.interior
        m0 = patch.h[:, jj, ii].sum(axis=(1, 2)) * patch.cell_area
        run_steps(hier, patch, params2, 1000)
        m1 = patch.h[:, jj, ii].sum(axis=(1, 2)) * patch.cell_area
        np.testing.assert_allclose(m1, m0, rtol=1e-12)

    def test_positivity_dam_break_onto_dry(self, params1):
        hier, patch = single_patch(100, 4, domain=(0, 2, 0, 0.08),
                                   num_layers=1, bathy=0.0)
        x = patch.x_centers()
        patch.h[0] = np.where(x < 1.0, 1.0, 0.0)[None, :]
        run_steps(hier, patch, params1, 200)
        assert (patch.h >= 0).all()
        assert np.isfinite(patch.h).all()


class TestSymmetry:
    def test_x_symmetric_ic_stays_symmetric(self, params2):
        hier, patch = single_patch(32, 8, domain=(0, 2, 0, 0.5), bathy=-1.0)
        set_lake_at_rest(patch, (0.0, -0.6))
        x = patch.x_centers()
        bump = 0.03 * np.exp(-(((x - 1.0) / 0.2) ** 2))
        patch.h[0] += bump[None, :]
        run_steps(hier, patch, params2, 100)
        jj, ii = patch.interior
        h = patch.h[:, jj, ii]
        hu = patch.hu[:, jj, ii]
        np.testing.assert_array_equal(h, h[:, :, ::-1])
        np.testing.assert_array_equal(hu, -hu[:, :, ::-1])


class TestDamBreakOracle:
    def test_l1_error_within_two_percent(self, params1):
        # 400 cells over [-1.5, 1.5], dam at 0, g = 1, depths 1 / 0.5
        hier, patch = single_patch(400, 4, domain=(-1.5, 1.5, 0, 0.03),
                                   num_layers=1, bathy=0.0)
        x = patch.x_centers()
        patch.h[0] = np.where(x < 0.0, 1.0, 0.5)[None, :]
        t, _ = run_steps(hier, patch, params1, 0, boundaries=OPEN_X, t_stop=0.5)
        assert t == pytest.approx(0.5, abs=1e-12)
        jj, ii = patch.interior
        h_num = patch.h[0][jj, ii][0]
        x_int = patch.x_centers(ghosts=False)
        h_ref = dam_break_cell_averages(1.0, 0.5, 1.0, x_int, patch.dx, 0.5)
        err = np.abs(h_num - h_ref).sum() / np.abs(h_ref).sum()
        assert err < 0.02, f"L1 error {err:.4f}"


class TestGuards:
    def test_cfl_violation_raises(self, params2):
        hier, patch = single_patch(16, 8, bathy=-1.0)
        set_lake_at_rest(patch, (0.0, -0.6))
        fill_bc_only(hier, patch)
        with pytest.raises(CflViolationError):
            physics.step_patch(patch, 10.0, params2)

    def test_hyperbolicity_blend_counts_and_restores_bound(self, params2):
        hier, patch = single_patch(16, 8, bathy=-1.0)
        set_lake_at_rest(patch, (0.0, -0.6))
        patch.hu[0, :, :] = 0.25 * patch.h[0]
        patch.hu[1, :, :] = -0.25 * patch.h[1]
        fill_bc_only(hier, patch)
        dt = physics.stable_dt(patch, params2, 0.9)
        res = physics.step_patch(patch, dt, params2)
        assert res.hyperbolicity_fixes > 0
        jj, ii = patch.interior
        h1, h2 = patch.h[0][jj, ii], patch.h[1][jj, ii]
        wet = (h1 > params2.dry_tolerance) & (h2 > params2.dry_tolerance)
        u1 = np.where(wet, patch.hu[0][jj, ii] / np.where(wet, h1, 1), 0)
        u2 = np.where(wet, patch.hu[1][jj, ii] / np.where(wet, h2, 1), 0)
        bound = params2.gravity * (1 - params2.density_ratio) * (h1 + h2)
        assert ((u1 - u2) ** 2 <= bound + 1e-12)[wet].all()

    def test_step_result_counts_interior_cells(self, params2):
        hier, patch = single_patch(16, 8, bathy=-1.0)
        set_lake_at_rest(patch, (0.0, -0.6))
        fill_bc_only(hier, patch)
        res = physics.step_patch(patch, 1e-3, params2)
        assert res.cells_updated == 16 * 8
        assert res.max_wave_speed == pytest.approx(1.0)

"""Subcycled multi-level time stepping with work and mass accounting.

One coarse step advances level 1 once, then recursively advances each
finer level r_t times with dt/r_t before projecting it down, so all levels
meet at the same step-count-derived time at every coarse sync point. The
coarse dt is chosen from the CFL condition on level 1 each coarse step and
divided down the ladder, never re-chosen per level.

Work is counted exactly: one cell update per interior cell per patch step.
Composite mass (counting each region at its finest resolution) changes
only through reported events: refinement initialization, patch removal,
and the per-cycle synchronization residue of running without interface
flux corrections; the accounting identity
``final = initial + refine + derefine + sync`` is exact by construction
and checked by the acceptance suite, while the raw drift quantifies the
no-refluxing tradeoff.
"""

from __future__ import annotations

import json
import logging
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import physics
from .coarsen import average_down
from .config import RunConfig
from .errors import CflViolationError, NumericalAbortError
from .ghost import fill_ghosts, gather, apply_bathymetry_bcs
from .mesh import Hierarchy, IndexBox
from .regrid import rebuild_child_level
from .state import LayerParams

log = logging.getLogger("mlamr.driver")

FrameCallback = Callable[[Hierarchy, float, int], None]


@dataclass
class RunStats:
    """Counters and timers of one run, mirroring the timing-table columns."""

    wall_time: float = 0.0
    cpu_time: float = 0.0
    total_cell_updates: int = 0
    cell_updates_per_level: dict[int, int] = field(default_factory=dict)
    num_coarse_steps: int = 0
    num_regrids: int = 0
    workers: int = 1
    amr_enabled: bool = True
    initial_mass: list[float] = field(default_factory=list)
    final_mass: list[float] = field(default_factory=list)
    mass_drift: list[float] = field(default_factory=list)
    refine_delta: list[float] = field(default_factory=list)
    derefine_delta: list[float] = field(default_factory=list)
    sync_delta: list[float] = field(default_factory=list)
    hyperbolicity_warnings: int = 0
    wet_prefix_repairs: int = 0
    clipped_mass: list[float] = field(default_factory=list)

    def to_json(self, path) -> None:
        data = asdict(self)
        data["cell_updates_per_level"] = {
            str(k): int(v) for k, v in self.cell_updates_per_level.items()
        }
        with open(path, "w") as f:
            # numpy scalars sneak into the lists; .item() normalizes them
            json.dump(
                data, f, indent=2, sort_keys=True,
                default=lambda o: o.item() if hasattr(o, "item") else str(o),
            )
            f.write("\n")

    @classmethod
    def from_json(cls, path) -> "RunStats":
        with open(path) as f:
            data = json.load(f)
        data["cell_updates_per_level"] = {
            int(k): v for k, v in data["cell_updates_per_level"].items()
        }
        return cls(**data)


class Simulation:
    """Owns the hierarchy and runs the subcycled time loop."""

    def __init__(
        self,
        cfg: RunConfig,
        workers: int = 1,
        amr: bool = True,
        check_nesting: bool = True,
    ):
        self.cfg = cfg
        self.params: LayerParams = cfg.layer_params()
        self.scenario = cfg.scenario()
        self.policy = cfg.policy()
        self.workers = max(1, workers)
        self.amr = amr and cfg.max_levels > 1
        self.check_nesting = check_nesting
        self.hier = cfg.build_hierarchy(uniform_fine=not self.amr and cfg.max_levels > 1)
        self.stats = RunStats(workers=self.workers, amr_enabled=self.amr)
        self.steps: dict[int, int] = {s.level: 0 for s in self.hier.levels}
        self._stash: dict[int, tuple[float, float, dict]] = {}
        self._pool = ThreadPoolExecutor(self.workers) if self.workers > 1 else None
        self._event_delta = np.zeros(self.params.num_layers)
        self.time = 0.0

        base = self.hier.patches[1][0]
        self.scenario.fill_bathymetry(base)
        apply_bathymetry_bcs(base, cfg.boundaries, self.hier.level_box(1))
        self.scenario.apply_initial_condition(base, self.params)
        if self.amr:
            for lev in range(1, self.hier.max_levels):
                self._rebuild(lev, init_from_scenario=True)
            if self.check_nesting:
                self.hier.check_nesting()
        self._mass_prev = self.composite_mass()
        self.stats.initial_mass = list(self._mass_prev)
        nlayers = self.params.num_layers
        self.stats.refine_delta = [0.0] * nlayers
        self.stats.derefine_delta = [0.0] * nlayers
        self.stats.sync_delta = [0.0] * nlayers
        self.stats.clipped_mass = [0.0] * nlayers

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    # -- mass accounting ------------------------------------------------

    def composite_mass(self) -> np.ndarray:
        """Per-layer volume counting every region at its finest level."""
        total = np.zeros(self.params.num_layers)
        for level in sorted(self.hier.patches):
            if not self.hier.patches[level]:
                continue
            covered = self.hier.coverage_mask(level)
            area = self.hier.spec(level).dx * self.hier.spec(level).dy
            for p in self.hier.patches[level]:
                jj, ii = p.interior
                sub = covered[
                    p.box.lo_j : p.box.hi_j + 1, p.box.lo_i : p.box.hi_i + 1
                ]
                weights = ~sub
                total += (p.h[:, jj, ii] * weights[None]).sum(axis=(1, 2)) * area
        return total

    # -- ghost filling ----------------------------------------------------

    def _parent_provider(self, level: int, t: float):
        """Coarse-data source for level's ghost interpolation at time t."""
        if level == 1:
            return None
        parent = level - 1
        patches = self.hier.patches[parent]
        stash = self._stash.get(parent)
        blend = None
        if stash is not None:
            t0, dt, old = stash
            theta = min(1.0, max(0.0, (t - t0) / dt)) if dt > 0 else 1.0
            blend = (theta, old)

        def provider(box: IndexBox):
            return gather(patches, box, self.params.num_layers, blend=blend)

        return provider

    def fill_level_ghosts(self, level: int, t: float) -> None:
        spec = self.hier.spec(level)
        parent_spec = self.hier.spec(level - 1) if level > 1 else None
        provider = self._parent_provider(level, t)
        siblings = self.hier.patches[level]
        for p in siblings:
            fill_ghosts(
                p,
                siblings,
                provider,
                self.cfg.boundaries,
                self.hier.level_box(level),
                parent_spec.r_x if parent_spec else 1,
                parent_spec.r_y if parent_spec else 1,
                self.params,
            )

    # -- regridding -------------------------------------------------------

    def _rebuild(self, level: int, init_from_scenario: bool = False) -> bool:
        refine_d, derefine_d, changed = rebuild_child_level(
            self.hier,
            level,
            self.policy,
            self.scenario,
            self.params,
            self.cfg.boundaries,
            allowed_regions=self.cfg.allowed_regions,
            init_from_scenario=init_from_scenario,
        )
        if changed and not init_from_scenario:
            self.stats.num_regrids += 1
            for m in range(self.params.num_layers):
                self.stats.refine_delta[m] += refine_d[m]
                self.stats.derefine_delta[m] += derefine_d[m]
            self._event_delta += refine_d + derefine_d
        return changed

    def regrid_from(self, level: int) -> None:
        """Rebuild level+1 and cascade deeper while the patch sets change."""
        changed = self._rebuild(level)
        if changed:
            for deeper in range(level + 1, self.hier.max_levels):
                self._rebuild(deeper)
            if self.check_nesting:
                self.hier.check_nesting()

    # -- stepping -----------------------------------------------------------

    def _step_patches(self, level: int, dt: float) -> None:
        patches = self.hier.patches[level]
        y_first = bool(self.steps[level] % 2)

        def step(p):
            return physics.step_patch(p, dt, self.params, y_first=y_first)

        if self._pool is not None and len(patches) > 1:
            results = list(self._pool.map(step, patches))
        else:
            results = [step(p) for p in patches]

        ncells = 0
        for res in results:
            ncells += res.cells_updated
            self.stats.hyperbolicity_warnings += res.hyperbolicity_fixes
            self.stats.wet_prefix_repairs += res.wet_prefix_repairs
            for m in range(self.params.num_layers):
                self.stats.clipped_mass[m] += float(res.clipped_mass[m])
        self.stats.total_cell_updates += ncells
        self.stats.cell_updates_per_level[level] = (
            self.stats.cell_updates_per_level.get(level, 0) + ncells
        )

    def advance_level(self, level: int, dt: float, t0: float) -> None:
        """Advance one level by dt, recursing into finer levels."""
        if (
            self.amr
            and level < self.hier.max_levels
            and self.steps[level] % self.policy.regrid_interval == 0
        ):
            self.regrid_from(level)

        self.fill_level_ghosts(level, t0)
        patches = self.hier.patches[level]
        child = self.hier.patches.get(level + 1)
        stash_old = None
        if child:
            stash_old = {
                id(p): (p.h.copy(), p.hu.copy(), p.hv.copy()) for p in patches
            }
        self._step_patches(level, dt)
        self.steps[level] += 1
        t1 = t0 + dt
        for p in patches:
            p.time = t1

        if child:
            self.fill_level_ghosts(level, t1)
            self._stash[level] = (t0, dt, stash_old)
            spec = self.hier.spec(level)
            dt_f = dt / spec.r_t
            for k in range(spec.r_t):
                self.advance_level(level + 1, dt_f, t0 + k * dt_f)
            for p in self.hier.patches[level + 1]:
                p.time = t1
            average_down(
                self.hier.patches[level + 1], patches, spec.r_x, spec.r_y,
                self.params,
            )
            del self._stash[level]

    def _check_finite(self) -> None:
        for level, patches in self.hier.patches.items():
            for p in patches:
                if not (
                    np.isfinite(p.h).all()
                    and np.isfinite(p.hu).all()
                    and np.isfinite(p.hv).all()
                ):
                    raise NumericalAbortError(
                        f"non-finite state on level {level} patch {p.box} "
                        f"at t={self.time:.6g}"
                    )

    def advance_coarse_step(self, dt: float) -> None:
        self._event_delta[:] = 0.0
        self.advance_level(1, dt, self.time)
        self.time += dt
        mass = self.composite_mass()
        sync = mass - self._mass_prev - self._event_delta
        for m in range(self.params.num_layers):
            self.stats.sync_delta[m] += float(sync[m])
        self._mass_prev = mass
        self.stats.num_coarse_steps += 1
        self._check_finite()

    def run(self, frame_callback: FrameCallback | None = None) -> RunStats:
        """Run to t_final, emitting frames at the configured times.

        Wall/CPU timers cover the integration loop only; frame emission is
        excluded.
        """
        cfg = self.cfg
        frame_times = list(cfg.frame_times)
        frame_index = 0
        eps = 1e-12 * max(1.0, cfg.t_final)

        def emit_due_frames():
            nonlocal frame_index
            while (
                frame_index < len(frame_times)
                and frame_times[frame_index] <= self.time + eps
            ):
                if frame_callback is not None:
                    frame_callback(self.hier, self.time, frame_index)
                frame_index += 1

        emit_due_frames()
        try:
            while self.time < cfg.t_final - eps:
                wall0 = _time.perf_counter()
                cpu0 = _time.process_time()
                dt = cfg.dt_max
                for p in self.hier.patches[1]:
                    dt = min(dt, physics.stable_dt(p, self.params, cfg.cfl, cfg.dt_max))
                target = cfg.t_final
                if frame_index < len(frame_times):
                    target = min(target, frame_times[frame_index])
                clipped = self.time + dt >= target - eps
                if clipped:
                    dt = target - self.time
                self.advance_coarse_step(dt)
                if clipped:
                    self.time = target
                self.stats.wall_time += _time.perf_counter() - wall0
                self.stats.cpu_time += _time.process_time() - cpu0
                emit_due_frames()
                log.debug(
                    "t=%.6g dt=%.3g updates=%d",
                    self.time, dt, self.stats.total_cell_updates,
                )
        finally:
            self.close()
        self.stats.final_mass = list(self._mass_prev)
        self.stats.mass_drift = [
            f - i for f, i in zip(self.stats.final_mass, self.stats.initial_mass)
        ]
        return self.stats


def run_simulation(
    cfg: RunConfig,
    out_dir=None,
    workers: int = 1,
    amr: bool = True,
    text_frames: bool = False,
) -> RunStats:
    """Run a configuration, writing frames and stats into ``out_dir``.

    On a numerical abort a diagnostic dump frame and the partial stats are
    written before the error propagates.
    """
    from . import frames as frames_io
    from pathlib import Path

    sim = Simulation(cfg, workers=workers, amr=amr)
    out = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)

    ext = "txt" if text_frames else "bin"

    def frame_cb(hier, t, index):
        if out is None:
            return
        frame = frames_io.frame_from_hierarchy(hier, t, cfg.eta_rest)
        frames_io.write_frame(frame, out / f"frame{index:04d}.{ext}", text_frames)

    try:
        stats = sim.run(frame_cb)
    except (NumericalAbortError, CflViolationError):
        if out is not None:
            frame = frames_io.frame_from_hierarchy(sim.hier, sim.time, cfg.eta_rest)
            frames_io.write_frame(frame, out / f"abort.{ext}", text_frames)
            sim.stats.to_json(out / "stats.json")
        raise
    if out is not None:
        stats.to_json(out / "stats.json")
    log.info(
        "run complete: %d coarse steps, %d cell updates, wall %.3fs",
        stats.num_coarse_steps, stats.total_cell_updates, stats.wall_time,
    )
    return stats

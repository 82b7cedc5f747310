"""Flagging, clustering, and regeneration of fine patch sets.

Cells are flagged where any layer's surface departs from its rest value by
more than that layer's tolerance, or where a wet cell sits within the
buffer distance of a wet/dry front; the flag set is then dilated by the
buffer width so the refined region keeps covering the wave until the next
regrid. Flags are clustered into boxes by recursive bisection on the flag
signatures, accepting a box once it is filled efficiently enough and lies
inside the region proper nesting allows.

Newly created patches copy cells that were already refined directly from
the old patches and initialize the rest by conservative surface
interpolation from the level below; the mass created or destroyed by those
transfers is measured and reported, never hidden.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import refine
from .coarsen import check_bathymetry_consistency
from .ghost import apply_bathymetry_bcs, gather
from .mesh import Hierarchy, IndexBox, Patch, dilate, erode
from .scenario import Scenario
from .state import LayerParams, surfaces_from_state


@dataclass(frozen=True)
class RegridPolicy:
    """Knobs of the refinement criterion and clustering."""

    wave_tolerance: tuple[float, ...]
    regrid_interval: int = 2
    buffer_width: int = 2
    efficiency_target: float = 0.7

    def __post_init__(self):
        if any(t <= 0 for t in self.wave_tolerance):
            raise ValueError("wave tolerances must be positive")
        if self.regrid_interval < 1:
            raise ValueError("regrid_interval must be >= 1")
        if not (0 < self.efficiency_target <= 1):
            raise ValueError("efficiency_target must be in (0, 1]")


@dataclass
class RegridReport:
    """Mass bookkeeping of one regrid pass (volume units, per layer)."""

    refine_delta: np.ndarray
    derefine_delta: np.ndarray
    levels_changed: list[int] = field(default_factory=list)


def flag_cells(
    hier: Hierarchy,
    level: int,
    policy: RegridPolicy,
    scenario: Scenario,
    params: LayerParams,
) -> np.ndarray:
    """Refinement flags over a level's full index space.

    A cell is flagged when any layer's surface perturbation from the
    scenario's rest equilibrium exceeds that layer's tolerance, or when it
    is wet and within buffer_width of a wet/dry front of any layer; the
    result is dilated by buffer_width.
    """
    spec = hier.spec(level)
    flags = np.zeros((spec.ny, spec.nx), dtype=bool)
    covered = np.zeros((spec.ny, spec.nx), dtype=bool)
    wet = np.zeros((params.num_layers, spec.ny, spec.nx), dtype=bool)
    dry = np.zeros_like(wet)

    for p in hier.patches[level]:
        jj, ii = p.interior
        h = p.h[:, jj, ii]
        bathy = p.bathy[jj, ii]
        eta = surfaces_from_state(h, bathy)
        eta_rest = scenario.rest_surfaces(bathy, params)
        dj = slice(p.box.lo_j, p.box.hi_j + 1)
        di = slice(p.box.lo_i, p.box.hi_i + 1)
        covered[dj, di] = True
        cell_flags = np.zeros((p.box.ny, p.box.nx), dtype=bool)
        for m in range(params.num_layers):
            cell_flags |= np.abs(eta[m] - eta_rest[m]) > policy.wave_tolerance[m]
        flags[dj, di] = cell_flags
        for m in range(params.num_layers):
            wet_m = h[m] > params.dry_tolerance
            wet[m, dj, di] = wet_m
            dry[m, dj, di] = ~wet_m

    for m in range(params.num_layers):
        near_dry = dilate(dry[m], policy.buffer_width)
        flags |= wet[m] & near_dry

    flags = dilate(flags, policy.buffer_width)
    return flags & covered


def _signature_cut(signature: np.ndarray) -> tuple[int, int] | None:
    """Preferred cut along one axis as ``(index, quality)``.

    Quality 2 cuts through the widest interior hole, 1 at the strongest
    signature inflection, 0 at the midpoint; None if the axis is too short
    to cut. The cut splits [0, n) into [0, cut) and [cut, n).
    """
    n = signature.size
    if n < 2:
        return None
    holes = np.where(signature == 0)[0]
    if holes.size:
        runs = np.split(holes, np.where(np.diff(holes) != 1)[0] + 1)
        runs = [r for r in runs if r[0] > 0 and r[-1] < n - 1]
        if runs:
            best = max(runs, key=len)
            return int(best[len(best) // 2]), 2
    if n >= 4:
        d2 = signature[2:] - 2 * signature[1:-1] + signature[:-2]
        jump = np.abs(np.diff(d2))
        if jump.size and jump.max() > 0:
            return int(np.argmax(jump)) + 2, 1
    return n // 2, 0


def cluster_flags(
    flags: np.ndarray,
    efficiency_target: float,
    allowed: np.ndarray | None = None,
) -> list[IndexBox]:
    """Cover all flagged cells with boxes by recursive bisection.

    Each returned box is filled with flags at a fraction of at least
    ``efficiency_target`` (or is a single cell) and contains only allowed
    cells. Flags outside the allowed region must be cleared by the caller.
    """
    if allowed is not None and (flags & ~allowed).any():
        raise ValueError("flags outside the allowed region; clear them first")
    boxes: list[IndexBox] = []

    def recurse(lo_i: int, lo_j: int, hi_i: int, hi_j: int) -> None:
        sub = flags[lo_j : hi_j + 1, lo_i : hi_i + 1]
        if not sub.any():
            return
        rows = np.where(sub.any(axis=1))[0]
        cols = np.where(sub.any(axis=0))[0]
        lo_j2, hi_j2 = lo_j + int(rows[0]), lo_j + int(rows[-1])
        lo_i2, hi_i2 = lo_i + int(cols[0]), lo_i + int(cols[-1])
        sub = flags[lo_j2 : hi_j2 + 1, lo_i2 : hi_i2 + 1]
        nflag = int(sub.sum())
        area = sub.size
        ok_region = (
            allowed is None
            or allowed[lo_j2 : hi_j2 + 1, lo_i2 : hi_i2 + 1].all()
        )
        if ok_region and (nflag >= efficiency_target * area or area == 1):
            boxes.append(IndexBox(lo_i2, lo_j2, hi_i2, hi_j2))
            return
        if area == 1:
            boxes.append(IndexBox(lo_i2, lo_j2, hi_i2, hi_j2))
            return
        cut_x = _signature_cut(sub.sum(axis=0))
        cut_y = _signature_cut(sub.sum(axis=1))
        nx, ny = hi_i2 - lo_i2 + 1, hi_j2 - lo_j2 + 1
        if cut_x is None and cut_y is None:  # 1x1 handled above
            boxes.append(IndexBox(lo_i2, lo_j2, hi_i2, hi_j2))
            return
        score_x = (-1, 0) if cut_x is None else (cut_x[1], nx)
        score_y = (-1, 0) if cut_y is None else (cut_y[1], ny)
        if score_x >= score_y:
            recurse(lo_i2, lo_j2, lo_i2 + cut_x[0] - 1, hi_j2)
            recurse(lo_i2 + cut_x[0], lo_j2, hi_i2, hi_j2)
        else:
            recurse(lo_i2, lo_j2, hi_i2, lo_j2 + cut_y[0] - 1)
            recurse(lo_i2, lo_j2 + cut_y[0], hi_i2, hi_j2)

    level_hi_j, level_hi_i = flags.shape[0] - 1, flags.shape[1] - 1
    recurse(0, 0, level_hi_i, level_hi_j)
    return sorted(boxes, key=lambda b: (b.lo_j, b.lo_i))


def nesting_allowed(
    hier: Hierarchy,
    level: int,
    physical_regions: tuple[tuple[float, float, float, float], ...] = (),
) -> np.ndarray:
    """Cells of ``level`` whose refinement keeps proper nesting: the union
    of the level's patches eroded by one cell (boundary-exempt), optionally
    intersected with configured allowed rectangles (cell-center test)."""
    spec = hier.spec(level)
    mask = np.zeros((spec.ny, spec.nx), dtype=bool)
    for p in hier.patches[level]:
        mask[p.box.lo_j : p.box.hi_j + 1, p.box.lo_i : p.box.hi_i + 1] = True
    mask = erode(mask, 1)
    if physical_regions:
        x0, _, y0, _ = hier.domain
        xc = x0 + (np.arange(spec.nx) + 0.5) * spec.dx
        yc = y0 + (np.arange(spec.ny) + 0.5) * spec.dy
        inside = np.zeros_like(mask)
        for rx0, rx1, ry0, ry1 in physical_regions:
            inside |= (
                (xc[None, :] >= rx0)
                & (xc[None, :] <= rx1)
                & (yc[:, None] >= ry0)
                & (yc[:, None] <= ry1)
            )
        mask &= inside
    return mask


def _row_runs(mask: np.ndarray, box: IndexBox) -> list[IndexBox]:
    """Decompose a boolean mask over ``box`` into per-row run boxes."""
    out = []
    for j in range(mask.shape[0]):
        row = mask[j]
        idx = np.where(row)[0]
        if idx.size == 0:
            continue
        splits = np.split(idx, np.where(np.diff(idx) != 1)[0] + 1)
        for run in splits:
            out.append(
                IndexBox(
                    box.lo_i + int(run[0]),
                    box.lo_j + j,
                    box.lo_i + int(run[-1]),
                    box.lo_j + j,
                )
            )
    return out


def rebuild_child_level(
    hier: Hierarchy,
    level: int,
    policy: RegridPolicy,
    scenario: Scenario,
    params: LayerParams,
    boundaries: dict[str, str],
    allowed_regions: tuple[tuple[float, float, float, float], ...] = (),
    init_from_scenario: bool = False,
    check_provenance: bool = False,
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Regenerate the patches of ``level + 1`` from flags on ``level``.

    Returns (refine_delta, derefine_delta, changed). Ghost cells of
    ``level`` must be filled. With ``init_from_scenario`` new cells take
    the scenario's initial condition instead of interpolated data (used at
    t = 0 only).
    """
    spec = hier.spec(level)
    r_x, r_y = spec.r_x, spec.r_y
    old_patches = hier.patches[level + 1]
    sync_time = hier.patches[level][0].time if hier.patches[level] else 0.0

    flags = flag_cells(hier, level, policy, scenario, params)
    allowed = nesting_allowed(hier, level, allowed_regions)
    flags &= allowed
    coarse_boxes = cluster_flags(flags, policy.efficiency_target, allowed)
    new_boxes = [b.refined(r_x, r_y) for b in coarse_boxes]

    zero = np.zeros(params.num_layers)
    if sorted(new_boxes, key=lambda b: (b.lo_j, b.lo_i)) == sorted(
        (p.box for p in old_patches), key=lambda b: (b.lo_j, b.lo_i)
    ):
        return zero, zero, False

    old_coverage = np.zeros((spec.ny, spec.nx), dtype=bool)
    for p in old_patches:
        cb = p.box.coarsened(r_x, r_y)
        old_coverage[cb.lo_j : cb.hi_j + 1, cb.lo_i : cb.hi_i + 1] = True

    coarse_area = spec.dx * spec.dy
    refine_delta = np.zeros(params.num_layers)
    new_patches: list[Patch] = []
    for fine_box, cbox in zip(new_boxes, coarse_boxes):
        patch = hier.new_patch(level + 1, fine_box)
        patch.time = sync_time
        scenario.fill_bathymetry(patch)
        apply_bathymetry_bcs(patch, boundaries, hier.level_box(level + 1))
        check_bathymetry_consistency(patch, hier.patches[level], r_x, r_y)
        provenance = np.zeros((fine_box.ny, fine_box.nx), dtype=np.uint8)

        if init_from_scenario:
            scenario.apply_initial_condition(patch, params)
            provenance[:, :] = 2
        else:
            new_mask = ~old_coverage[
                cbox.lo_j : cbox.hi_j + 1, cbox.lo_i : cbox.hi_i + 1
            ]
            for run in _row_runs(new_mask, cbox):
                region = run.refined(r_x, r_y)
                coarse = gather(
                    hier.patches[level],
                    run.grown(1),
                    params.num_layers,
                    include_ghosts=False,
                )
                delta = refine.refine_patch(
                    coarse, patch, r_x, r_y, params,
                    region=region, coarse_cell_area=coarse_area,
                )
                refine_delta += delta
                rj, ri = patch.local_slices(region)
                provenance[
                    rj.start - patch.ghost_width : rj.stop - patch.ghost_width,
                    ri.start - patch.ghost_width : ri.stop - patch.ghost_width,
                ] = 2
            for old in old_patches:
                ov = fine_box.intersection(old.box)
                if ov is None:
                    continue
                dj, di = patch.local_slices(ov)
                sj, si = old.local_slices(ov)
                patch.h[:, dj, di] = old.h[:, sj, si]
                patch.hu[:, dj, di] = old.hu[:, sj, si]
                patch.hv[:, dj, di] = old.hv[:, sj, si]
                provenance[
                    ov.lo_j - fine_box.lo_j : ov.hi_j - fine_box.lo_j + 1,
                    ov.lo_i - fine_box.lo_i : ov.hi_i - fine_box.lo_i + 1,
                ] = 1
        if check_provenance and not (provenance > 0).all():
            raise AssertionError(
                f"uninitialized cells in new patch {fine_box} at level {level + 1}"
            )
        new_patches.append(patch)

    new_coverage = np.zeros((spec.ny, spec.nx), dtype=bool)
    for b in coarse_boxes:
        new_coverage[b.lo_j : b.hi_j + 1, b.lo_i : b.hi_i + 1] = True

    derefine_delta = np.zeros(params.num_layers)
    gone = old_coverage & ~new_coverage
    if gone.any():
        fine_area = hier.spec(level + 1).dx * hier.spec(level + 1).dy
        for old in old_patches:
            cb = old.box.coarsened(r_x, r_y)
            sub = gone[cb.lo_j : cb.hi_j + 1, cb.lo_i : cb.hi_i + 1]
            if not sub.any():
                continue
            fine_mask = np.repeat(np.repeat(sub, r_y, axis=0), r_x, axis=1)
            jj, ii = old.interior
            h_old = old.h[:, jj, ii]
            fine_mass = (h_old * fine_mask[None]).sum(axis=(1, 2)) * fine_area
            coarse_vals = _gather_coarse_values(hier, level, cb, sub, params)
            derefine_delta += coarse_vals * coarse_area - fine_mass

    hier.patches[level + 1] = new_patches
    # Deeper levels may transiently violate nesting until the caller's
    # cascade rebuilds them; their data stays available for copying.
    return refine_delta, derefine_delta, True


def _gather_coarse_values(
    hier: Hierarchy, level: int, cbox: IndexBox, mask: np.ndarray, params: LayerParams
) -> np.ndarray:
    """Per-layer sum of coarse depths over masked cells of ``cbox``."""
    total = np.zeros(params.num_layers)
    for cp in hier.patches[level]:
        ov = cbox.intersection(cp.box)
        if ov is None:
            continue
        jj, ii = cp.local_slices(ov)
        sub = mask[
            ov.lo_j - cbox.lo_j : ov.hi_j - cbox.lo_j + 1,
            ov.lo_i - cbox.lo_i : ov.hi_i - cbox.lo_i + 1,
        ]
        total += (cp.h[:, jj, ii] * sub[None]).sum(axis=(1, 2))
    return total



"""Projection of fine solutions onto the coarse cells underneath them.

Every conserved quantity of every layer is replaced by the plain mean of
the overlying fine cells, which conserves the covered region's mass and
momentum exactly. Averaging mixed wet/dry fine cells can produce thin
layers, so momenta are re-zeroed wherever the averaged depth lands at or
below the dry tolerance.
"""

from __future__ import annotations

import numpy as np

from .errors import TimeSyncError
from .mesh import Patch
from .state import LayerParams, zero_dry_momenta

_TIME_RTOL = 1e-12


def block_mean(arr: np.ndarray, r_x: int, r_y: int) -> np.ndarray:
    """Mean over each r_y-by-r_x block of the trailing two axes."""
    ny, nx = arr.shape[-2], arr.shape[-1]
    if ny % r_y or nx % r_x:
        raise ValueError(f"array shape {arr.shape} not divisible by ({r_y},{r_x})")
    shaped = arr.reshape(arr.shape[:-2] + (ny // r_y, r_y, nx // r_x, r_x))
    return shaped.mean(axis=(-3, -1))


def average_down(
    fine_patches: list[Patch],
    coarse_patches: list[Patch],
    r_x: int,
    r_y: int,
    params: LayerParams,
    check_time: bool = True,
) -> np.ndarray:
    """Project every fine patch onto the coarse patches under it.

    Returns the per-layer change of the coarse level's mass (volume units),
    a diagnostic for the projection step. Raises TimeSyncError when the two
    levels are not at the same simulation time.
    """
    if not fine_patches or not coarse_patches:
        return np.zeros(params.num_layers)
    if check_time:
        for fp in fine_patches:
            for cp in coarse_patches:
                dt = abs(fp.time - cp.time)
                if dt > _TIME_RTOL * max(1.0, abs(cp.time)):
                    raise TimeSyncError(
                        f"level {fp.level} at t={fp.time!r} vs level "
                        f"{cp.level} at t={cp.time!r}"
                    )

    delta = np.zeros(params.num_layers)
    for fp in fine_patches:
        cbox = fp.box.coarsened(r_x, r_y)
        fjj, fii = fp.interior
        h_avg = block_mean(fp.h[:, fjj, fii], r_x, r_y)
        hu_avg = block_mean(fp.hu[:, fjj, fii], r_x, r_y)
        hv_avg = block_mean(fp.hv[:, fjj, fii], r_x, r_y)
        zero_dry_momenta(h_avg, hu_avg, hv_avg, params.dry_tolerance)
        for cp in coarse_patches:
            overlap = cbox.intersection(cp.box)
            if overlap is None:
                continue
            jj, ii = cp.local_slices(overlap)
            sj = slice(overlap.lo_j - cbox.lo_j, overlap.hi_j - cbox.lo_j + 1)
            si = slice(overlap.lo_i - cbox.lo_i, overlap.hi_i - cbox.lo_i + 1)
            area = cp.cell_area
            delta += (h_avg[:, sj, si] - cp.h[:, jj, ii]).sum(axis=(1, 2)) * area
            cp.h[:, jj, ii] = h_avg[:, sj, si]
            cp.hu[:, jj, ii] = hu_avg[:, sj, si]
            cp.hv[:, jj, ii] = hv_avg[:, sj, si]
    return delta


def check_bathymetry_consistency(
    fine_patch: Patch, coarse_patches: list[Patch], r_x: int, r_y: int, atol: float = 1e-12
) -> None:
    """Assert each covered coarse bathymetry value is the mean of its fine
    values; holds by construction when both levels sample the scenario's
    analytic bathymetry as cell averages."""
    cbox = fine_patch.box.coarsened(r_x, r_y)
    fjj, fii = fine_patch.interior
    b_avg = block_mean(fine_patch.bathy[fjj, fii], r_x, r_y)
    for cp in coarse_patches:
        overlap = cbox.intersection(cp.box)
        if overlap is None:
            continue
        jj, ii = cp.local_slices(overlap)
        sj = slice(overlap.lo_j - cbox.lo_j, overlap.hi_j - cbox.lo_j + 1)
        si = slice(overlap.lo_i - cbox.lo_i, overlap.hi_i - cbox.lo_i + 1)
        err = np.abs(b_avg[sj, si] - cp.bathy[jj, ii]).max()
        if err > atol:
            raise AssertionError(
                f"bathymetry ladder does not telescope under {fine_patch.box}: "
                f"max deviation {err:.3e}"
            )

"""Ghost-cell filling: same-level copies, coarse interpolation, physical BCs.

A patch's ghost frame is filled in three layers of priority: coarse-grid
interpolation everywhere in the domain, overwritten by direct copies from
same-level siblings where they overlap, and finally physical boundary
conditions in the out-of-domain frame (x sides first, then y sides so the
corner cells outside both extents end up consistent).

Coarse data for interpolation is gathered over an arbitrary index box from
the parent level's patches, interior cells first, ghost regions as a
fallback for cells outside the physical domain. Cells nobody provides are
marked unavailable, which the interpolation treats like dry neighbors
(piecewise-constant fallback).
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .mesh import IndexBox, Patch
from .refine import CoarseData, interpolate_state
from .state import LayerParams

ParentProvider = Callable[[IndexBox], CoarseData]


def gather(
    patches: list[Patch],
    box: IndexBox,
    num_layers: int,
    blend: tuple[float, dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]]] | None = None,
    include_ghosts: bool = True,
) -> CoarseData:
    """Assemble level data over a global index box from many patches.

    ``blend=(theta, stash)`` linearly interpolates in time between stashed
    arrays (weight 1-theta) and the patches' current arrays (weight theta);
    the stash maps ``id(patch)`` to its (h, hu, hv) copies. Ghost regions
    are used as a second-pass fallback only when the caller can vouch they
    are filled (``include_ghosts``).
    """
    shape = (num_layers, box.ny, box.nx)
    h = np.zeros(shape)
    hu = np.zeros(shape)
    hv = np.zeros(shape)
    bathy = np.zeros((box.ny, box.nx))
    avail = np.zeros((box.ny, box.nx), dtype=bool)

    passes = (True, False) if include_ghosts else (True,)
    for interior_pass in passes:
        for p in patches:
            src_box = p.box if interior_pass else p.full_box
            region = box.intersection(src_box)
            if region is None:
                continue
            sj, si = p.local_slices(region)
            dj = slice(region.lo_j - box.lo_j, region.hi_j - box.lo_j + 1)
            di = slice(region.lo_i - box.lo_i, region.hi_i - box.lo_i + 1)
            if blend is None:
                src_h = p.h[:, sj, si]
                src_hu = p.hu[:, sj, si]
                src_hv = p.hv[:, sj, si]
            else:
                theta, stash = blend
                old_h, old_hu, old_hv = stash[id(p)]
                w0 = 1.0 - theta
                src_h = w0 * old_h[:, sj, si] + theta * p.h[:, sj, si]
                src_hu = w0 * old_hu[:, sj, si] + theta * p.hu[:, sj, si]
                src_hv = w0 * old_hv[:, sj, si] + theta * p.hv[:, sj, si]
            if interior_pass:
                h[:, dj, di] = src_h
                hu[:, dj, di] = src_hu
                hv[:, dj, di] = src_hv
                bathy[dj, di] = p.bathy[sj, si]
                avail[dj, di] = True
            else:
                need = ~avail[dj, di]
                if need.any():
                    h[:, dj, di][:, need] = src_h[:, need]
                    hu[:, dj, di][:, need] = src_hu[:, need]
                    hv[:, dj, di][:, need] = src_hv[:, need]
                    bathy[dj, di][need] = p.bathy[sj, si][need]
                    avail[dj, di][need] = True
    return CoarseData(box=box, h=h, hu=hu, hv=hv, bathy=bathy, avail=avail)


def _mirror_or_copy(arr: np.ndarray, side: str, g: int, kind: str, sign: float) -> None:
    """Fill one ghost side of a 2D array in place.

    ``wall`` mirrors across the face with the given parity sign; ``outflow``
    copies the first interior row/column.
    """
    if side == "left":
        for k in range(g):
            arr[:, g - 1 - k] = sign * arr[:, g + k] if kind == "wall" else arr[:, g]
    elif side == "right":
        for k in range(g):
            arr[:, -g + k] = sign * arr[:, -g - 1 - k] if kind == "wall" else arr[:, -g - 1]
    elif side == "bottom":
        for k in range(g):
            arr[g - 1 - k, :] = sign * arr[g + k, :] if kind == "wall" else arr[g, :]
    elif side == "top":
        for k in range(g):
            arr[-g + k, :] = sign * arr[-g - 1 - k, :] if kind == "wall" else arr[-g - 1, :]


def _touching_sides(patch: Patch, level_box: IndexBox) -> list[str]:
    sides = []
    if patch.box.lo_i == level_box.lo_i:
        sides.append("left")
    if patch.box.hi_i == level_box.hi_i:
        sides.append("right")
    if patch.box.lo_j == level_box.lo_j:
        sides.append("bottom")
    if patch.box.hi_j == level_box.hi_j:
        sides.append("top")
    # x sides first so the y pass leaves consistent corners
    order = {"left": 0, "right": 1, "bottom": 2, "top": 3}
    return sorted(sides, key=order.get)


def apply_bathymetry_bcs(patch: Patch, boundaries: dict[str, str], level_box: IndexBox) -> None:
    """Make out-of-domain ghost bathymetry consistent with the BC kind, so
    constant-surface states stay balanced across the physical boundary."""
    g = patch.ghost_width
    for side in _touching_sides(patch, level_box):
        _mirror_or_copy(patch.bathy, side, g, boundaries[side], 1.0)


def apply_state_bcs(patch: Patch, boundaries: dict[str, str], level_box: IndexBox) -> None:
    """Physical boundary conditions: solid wall (mirror, normal momentum
    negated) or non-reflecting outflow (zero-order extrapolation)."""
    g = patch.ghost_width
    for side in _touching_sides(patch, level_box):
        kind = boundaries[side]
        normal_is_x = side in ("left", "right")
        for m in range(patch.num_layers):
            _mirror_or_copy(patch.h[m], side, g, kind, 1.0)
            _mirror_or_copy(patch.hu[m], side, g, kind, -1.0 if normal_is_x else 1.0)
            _mirror_or_copy(patch.hv[m], side, g, kind, 1.0 if normal_is_x else -1.0)


def _ghost_bands(patch: Patch) -> list[IndexBox]:
    b = patch.box
    g = patch.ghost_width
    return [
        IndexBox(b.lo_i - g, b.lo_j - g, b.hi_i + g, b.lo_j - 1),  # bottom rows
        IndexBox(b.lo_i - g, b.hi_j + 1, b.hi_i + g, b.hi_j + g),  # top rows
        IndexBox(b.lo_i - g, b.lo_j, b.lo_i - 1, b.hi_j),          # left cols
        IndexBox(b.hi_i + 1, b.lo_j, b.hi_i + g, b.hi_j),          # right cols
    ]


def fill_ghosts(
    patch: Patch,
    siblings: list[Patch],
    parent_provider: ParentProvider | None,
    boundaries: dict[str, str],
    level_box: IndexBox,
    r_x: int,
    r_y: int,
    params: LayerParams,
) -> None:
    """Fill one patch's ghost frame from all sources."""
    if parent_provider is not None:
        for band in _ghost_bands(patch):
            in_dom = band.intersection(level_box)
            if in_dom is None:
                continue
            parent_box = IndexBox(
                in_dom.lo_i // r_x,
                in_dom.lo_j // r_y,
                in_dom.hi_i // r_x,
                in_dom.hi_j // r_y,
            ).grown(1)
            coarse = parent_provider(parent_box)
            jj, ii = patch.local_slices(in_dom)
            h, hu, hv = interpolate_state(
                coarse, in_dom, patch.bathy[jj, ii], r_x, r_y, params
            )
            patch.h[:, jj, ii] = h
            patch.hu[:, jj, ii] = hu
            patch.hv[:, jj, ii] = hv
    for sib in siblings:
        if sib is patch:
            continue
        ov = patch.full_box.intersection(sib.box)
        if ov is None:
            continue
        dj, di = patch.local_slices(ov)
        sj, si = sib.local_slices(ov)
        patch.h[:, dj, di] = sib.h[:, sj, si]
        patch.hu[:, dj, di] = sib.hu[:, sj, si]
        patch.hv[:, dj, di] = sib.hv[:, sj, si]
    apply_state_bcs(patch, boundaries, level_box)

"""Initialization of fine-grid data from coarse-grid data.

Fine cells are filled layer by layer starting at the bottom: the bottom
layer's surface is interpolated against the true (fine-grid) bathymetry,
its recovered depth then thickens the effective bathymetry the next layer
up is interpolated against, and so on to the free surface. Interpolating
surfaces instead of depths keeps lake-at-rest states flat and, combined
with minmod-limited slopes, cannot create new surface extrema.

Fine bathymetry always comes from the scenario's analytic definition
sampled at fine resolution, never from interpolating coarse cell values;
conversely each coarse bathymetry value is the mean of its fine values, so
the bathymetry ladder telescopes exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .mesh import IndexBox, Patch
from .state import LayerParams, surfaces_from_state

__all__ = [
    "minmod",
    "CoarseData",
    "coarse_data_from_patch",
    "interpolate_to_fine",
    "interpolate_layer_surface",
    "interpolate_state",
    "refine_patch",
]


def minmod(a, b):
    """The argument of smaller magnitude, or zero on opposite signs.

    Works elementwise on arrays.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    same_sign = a * b > 0.0
    smaller = np.where(np.abs(a) <= np.abs(b), a, b)
    out = np.where(same_sign, smaller, 0.0)
    return out if out.ndim else float(out)


@dataclass
class CoarseData:
    """Coarse-level fields gathered over one index box.

    ``avail`` marks cells with valid data; unavailable cells only ever sit
    in the slope ring and degrade interpolation to piecewise constant there.
    """

    box: IndexBox
    h: np.ndarray
    hu: np.ndarray
    hv: np.ndarray
    bathy: np.ndarray
    avail: np.ndarray

    @property
    def num_layers(self) -> int:
        return self.h.shape[0]


def coarse_data_from_patch(patch: Patch) -> CoarseData:
    """View a single patch (interior plus ghost frame) as gathered data."""
    return CoarseData(
        box=patch.full_box,
        h=patch.h,
        hu=patch.hu,
        hv=patch.hv,
        bathy=patch.bathy,
        avail=np.ones(patch.bathy.shape, dtype=bool),
    )


def _limited_slopes(values: np.ndarray, usable: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Minmod slope per cell and direction, in units of one coarse cell.

    Slopes are zero at the array border and wherever the cell or either
    neighbor in that direction is unusable (dry or missing data).
    """
    sx = np.zeros_like(values)
    sy = np.zeros_like(values)
    sx[:, 1:-1] = minmod(values[:, 1:-1] - values[:, :-2], values[:, 2:] - values[:, 1:-1])
    sy[1:-1, :] = minmod(values[1:-1, :] - values[:-2, :], values[2:, :] - values[1:-1, :])
    okx = np.zeros_like(usable)
    oky = np.zeros_like(usable)
    okx[:, 1:-1] = usable[:, 1:-1] & usable[:, :-2] & usable[:, 2:]
    oky[1:-1, :] = usable[1:-1, :] & usable[:-2, :] & usable[2:, :]
    sx[~okx] = 0.0
    sy[~oky] = 0.0
    return sx, sy


def _parent_indexing(fine_box: IndexBox, coarse_box: IndexBox, r_x: int, r_y: int):
    """Per-row/column parent indices (local to coarse_box) and center offsets
    as fractions of the parent cell width."""
    fi = np.arange(fine_box.lo_i, fine_box.hi_i + 1)
    fj = np.arange(fine_box.lo_j, fine_box.hi_j + 1)
    pi = fi // r_x
    pj = fj // r_y
    ci = pi - coarse_box.lo_i
    cj = pj - coarse_box.lo_j
    if ci.min() < 0 or cj.min() < 0 or ci.max() >= coarse_box.nx or cj.max() >= coarse_box.ny:
        raise GeometryError(
            f"fine box {fine_box} has parents outside coarse data footprint {coarse_box}"
        )
    off_x = (fi - pi * r_x + 0.5) / r_x - 0.5
    off_y = (fj - pj * r_y + 0.5) / r_y - 0.5
    return ci, cj, off_x, off_y


def interpolate_to_fine(
    values: np.ndarray,
    usable: np.ndarray,
    coarse_box: IndexBox,
    fine_box: IndexBox,
    r_x: int,
    r_y: int,
) -> np.ndarray:
    """Minmod-limited linear prolongation of one coarse field.

    ``values`` covers ``coarse_box``, which must contain every parent of
    ``fine_box``. Slopes are per direction; cross terms are omitted. Fine
    values within a coarse cell average back to the coarse value exactly
    because the fine center offsets are symmetric about the parent center.
    """
    sx, sy = _limited_slopes(values, usable)
    ci, cj, off_x, off_y = _parent_indexing(fine_box, coarse_box, r_x, r_y)
    base = values[np.ix_(cj, ci)]
    return base + sx[np.ix_(cj, ci)] * off_x[None, :] + sy[np.ix_(cj, ci)] * off_y[:, None]


def interpolate_layer_surface(
    coarse: CoarseData,
    layer: int,
    fine_box: IndexBox,
    r_x: int,
    r_y: int,
    params: LayerParams,
) -> np.ndarray:
    """Fine surface elevations for one layer from coarse state.

    Slopes fall back to piecewise constant next to coarse cells where this
    layer is dry, so fronts do not leak into new extrema.
    """
    eta = surfaces_from_state(coarse.h, coarse.bathy)[layer]
    usable = coarse.avail & (coarse.h[layer] > params.dry_tolerance)
    return interpolate_to_fine(eta, usable, coarse.box, fine_box, r_x, r_y)


def interpolate_state(
    coarse: CoarseData,
    fine_box: IndexBox,
    fine_bathy: np.ndarray,
    r_x: int,
    r_y: int,
    params: LayerParams,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Interpolate the full layered state onto a fine box.

    Marches the layers bottom-up: the effective bathymetry a layer's
    surface is rebuilt against accumulates the already-recovered depths of
    the deeper layers. Momenta use the same limited interpolation applied
    to the conserved quantities directly and are zeroed where the recovered
    depth is dry.
    """
    num_layers = coarse.num_layers
    shape = (num_layers, fine_box.ny, fine_box.nx)
    h = np.zeros(shape)
    hu = np.zeros(shape)
    hv = np.zeros(shape)
    bhat = fine_bathy.astype(float, copy=True)
    for m in range(num_layers - 1, -1, -1):
        eta = interpolate_layer_surface(coarse, m, fine_box, r_x, r_y, params)
        h[m] = np.maximum(0.0, eta - bhat)
        usable = coarse.avail & (coarse.h[m] > params.dry_tolerance)
        hu[m] = interpolate_to_fine(coarse.hu[m], usable, coarse.box, fine_box, r_x, r_y)
        hv[m] = interpolate_to_fine(coarse.hv[m], usable, coarse.box, fine_box, r_x, r_y)
        dry = h[m] <= params.dry_tolerance
        hu[m][dry] = 0.0
        hv[m][dry] = 0.0
        bhat += h[m]
    return h, hu, hv


def refine_patch(
    coarse: CoarseData,
    fine_patch: Patch,
    r_x: int,
    r_y: int,
    params: LayerParams,
    region: IndexBox | None = None,
    coarse_cell_area: float | None = None,
) -> np.ndarray:
    """Initialize (part of) a fine patch from coarse data.

    ``region`` is a coarse-aligned sub-box of the patch interior (default:
    the whole interior). Returns the per-layer mass delta introduced by the
    initialization, fine minus coarse, in volume units; nonzero deltas are
    expected where the bathymetry resolves differently across levels (near
    shores and fronts) and are reported rather than hidden.
    """
    if region is None:
        region = fine_patch.box
    if not fine_patch.box.contains_box(region):
        raise GeometryError(f"region {region} outside fine patch {fine_patch.box}")
    try:
        footprint = region.coarsened(r_x, r_y)
    except ValueError as exc:
        raise GeometryError(str(exc)) from None
    if not coarse.box.contains_box(footprint):
        raise GeometryError(
            f"fine box {region} not inside coarse data footprint {coarse.box}"
        )
    fj = slice(footprint.lo_j - coarse.box.lo_j, footprint.hi_j - coarse.box.lo_j + 1)
    fi = slice(footprint.lo_i - coarse.box.lo_i, footprint.hi_i - coarse.box.lo_i + 1)
    if not coarse.avail[fj, fi].all():
        raise GeometryError(f"coarse data under fine box {region} is incomplete")

    jj, ii = fine_patch.local_slices(region)
    fine_bathy = fine_patch.bathy[jj, ii]
    h, hu, hv = interpolate_state(coarse, region, fine_bathy, r_x, r_y, params)
    fine_patch.h[:, jj, ii] = h
    fine_patch.hu[:, jj, ii] = hu
    fine_patch.hv[:, jj, ii] = hv

    area_f = fine_patch.cell_area
    if coarse_cell_area is None:
        coarse_cell_area = (fine_patch.dx * r_x) * (fine_patch.dy * r_y)
    fine_mass = h.sum(axis=(1, 2)) * area_f
    coarse_mass = coarse.h[:, fj, fi].sum(axis=(1, 2)) * coarse_cell_area
    return fine_mass - coarse_mass

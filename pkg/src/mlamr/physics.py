"""Single-patch time step for one- and two-layer shallow water flow.

Each layer is advanced by a first-order HLL scheme with hydrostatic
reconstruction and matching pressure corrections, with the inter-layer
pressure coupling split by interface type:

- Where both layers are wet on both sides of an interface, the top layer
  uses a plain flux and receives the coupling -g h1 d(B + h2)/dx as a
  centered source, and the bottom layer reconstructs against the static
  bed with the source -r g h2 d(h1)/dx; both sources vanish identically on
  lake-at-rest states.
- At every other interface (wet/dry fronts of the lower layer, dry
  regions) the top layer reconstructs against its effective bathymetry
  B + h2, which is static exactly there, blocking fronts and keeping rest
  states balanced.

Folding the evolving lower-layer depth into the reconstruction everywhere
looks natural but is linearly unstable: the max() in the reconstruction
rectifies grid-scale oscillations of the moving bottom and the coupled
baroclinic mode grows. The split above is neutrally stable for Courant
numbers up to about 0.7 across the working regime (verified by numerical
von Neumann analysis), so two-layer configurations should run at a CFL
target of at most 0.7.

Wave-speed bounds use the external (barotropic) speed sqrt(g * total
depth) for both layers; HLL mass dissipation acts on true surface jumps.
Dimensional splitting alternates the x/y order on successive steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import CflViolationError
from .mesh import Patch
from .state import LayerParams, restore_wet_prefix, zero_dry_momenta


@dataclass
class StepResult:
    """Accounting record for one patch step."""

    max_wave_speed: float
    cells_updated: int
    mass_delta: np.ndarray
    hyperbolicity_fixes: int = 0
    wet_prefix_repairs: int = 0
    clipped_mass: np.ndarray = field(default_factory=lambda: np.zeros(0))


def external_wave_speed(h_total, gravity):
    """Approximate barotropic gravity wave speed sqrt(g * H)."""
    return np.sqrt(gravity * np.maximum(h_total, 0.0))


def internal_wave_speed(h_top, h_bottom, gravity, density_ratio):
    """Approximate baroclinic wave speed of a two-layer column,
    sqrt(g' * h1 h2 / (h1 + h2)) with reduced gravity g' = g (1 - r)."""
    h_top = np.asarray(h_top, dtype=float)
    h_bottom = np.asarray(h_bottom, dtype=float)
    total = h_top + h_bottom
    frac = np.divide(
        h_top * h_bottom, total, out=np.zeros_like(total), where=total > 0
    )
    return np.sqrt(gravity * (1.0 - density_ratio) * frac)


@njit(cache=True, nogil=True)
def _sweep(h, hu, hv, Zc, Zf, Bhat, cowet, cw, gw, lam, g, dry, j0, j1):  # pragma: no cover - jitted
    """One directional Godunov sweep of one layer, along the last axis.

    Updates cells of rows [j0, j1) in place; the first sweep of a step
    covers the ghost rows too so that wall mirror symmetry (and with it the
    exactly-zero wall mass flux) survives into the second sweep. ``lam`` is
    dt/dx.

    Interfaces where both layers are wet on both sides (``cowet``) use the
    reconstruction bottom ``Zc``; all others (wet/dry fronts, dry regions)
    use ``Zf``. For the top layer Zc is zero (plain flux, inter-layer
    pressure handled by a separate source) while Zf is the effective
    bathymetry, which is static wherever the layer below is dry, so fronts
    stay exactly balanced without feeding grid-scale coupled modes.

    ``cw`` is the per-cell external wave speed sqrt(g * total depth): every
    layer's HLL bounds must cover the barotropic family. The HLL mass
    dissipation acts on the jump of the layer's true surface h + Bhat,
    which pairs the layers' surface variables full-rank and damps the
    baroclinic grid mode.
    """
    NY, NX = h.shape
    nI = NX - 1
    Fh = np.empty(nI)
    Fm = np.empty(nI)
    Fv = np.empty(nI)
    hsL = np.empty(nI)
    hsR = np.empty(nI)
    for j in range(j0, j1):
        for i in range(gw - 1, NX - gw):
            hl = h[j, i]
            hr = h[j, i + 1]
            if cowet[j, i] and cowet[j, i + 1]:
                Zl = Zc[j, i]
                Zr = Zc[j, i + 1]
            else:
                Zl = Zf[j, i]
                Zr = Zf[j, i + 1]
            ul = hu[j, i] / hl if hl > dry else 0.0
            ur = hu[j, i + 1] / hr if hr > dry else 0.0
            Zs = Zl if Zl > Zr else Zr
            hL = hl + Zl - Zs
            if hL < 0.0:
                hL = 0.0
            hR = hr + Zr - Zs
            if hR < 0.0:
                hR = 0.0
            hsL[i] = hL
            hsR[i] = hR
            if hL <= 0.0 and hR <= 0.0:
                Fh[i] = 0.0
                Fm[i] = 0.0
                Fv[i] = 0.0
                continue
            cl = cw[j, i]
            cr = cw[j, i + 1]
            sl1 = ul - cl
            sl2 = ur - cr
            SL = sl1 if sl1 < sl2 else sl2
            sr1 = ul + cl
            sr2 = ur + cr
            SR = sr1 if sr1 > sr2 else sr2
            FLh = hL * ul
            FRh = hR * ur
            FLm = hL * ul * ul + 0.5 * g * hL * hL
            FRm = hR * ur * ur + 0.5 * g * hR * hR
            if SL >= 0.0:
                fh = FLh
                fm = FLm
            elif SR <= 0.0:
                fh = FRh
                fm = FRm
            else:
                den = SR - SL
                if hL > 0.0 and hR > 0.0:
                    djump = (hr + Bhat[j, i + 1]) - (hl + Bhat[j, i])
                else:
                    djump = hR - hL
                fh = (SR * FLh - SL * FRh + SL * SR * djump) / den
                fm = (SR * FLm - SL * FRm + SL * SR * (hR * ur - hL * ul)) / den
            Fh[i] = fh
            Fm[i] = fm
            vl = hv[j, i] / hl if hl > dry else 0.0
            vr = hv[j, i + 1] / hr if hr > dry else 0.0
            if fh > 0.0:
                Fv[i] = fh * vl
            elif fh < 0.0:
                Fv[i] = fh * vr
            else:
                Fv[i] = 0.0
        for i in range(gw, NX - gw):
            h[j, i] = h[j, i] - lam * (Fh[i] - Fh[i - 1])
            hu[j, i] = (
                hu[j, i]
                - lam * (Fm[i] - Fm[i - 1])
                - lam * 0.5 * g * (hsR[i - 1] * hsR[i - 1] - hsL[i] * hsL[i])
            )
            hv[j, i] = hv[j, i] - lam * (Fv[i] - Fv[i - 1])


def _column_wave_speed(patch: Patch, params: LayerParams) -> np.ndarray:
    return np.sqrt(params.gravity * np.maximum(patch.h.sum(axis=0), 0.0))


def _masked_centered_grad(field: np.ndarray, cowet: np.ndarray, axis: int) -> np.ndarray:
    """Centered difference of ``field`` built from interface differences,
    dropping interfaces that are not co-wet. Vanishes on every lake-at-rest
    state because the masked fields are constant across co-wet interfaces.
    """
    diff = np.diff(field, axis=axis)
    n = cowet.shape[axis]
    pair_ok = cowet.take(range(0, n - 1), axis=axis) & cowet.take(range(1, n), axis=axis)
    diff = np.where(pair_ok, diff, 0.0)
    grad = np.zeros_like(field)
    if axis == 1:
        grad[:, 1:-1] = 0.5 * (diff[:, 1:] + diff[:, :-1])
    else:
        grad[1:-1, :] = 0.5 * (diff[1:, :] + diff[:-1, :])
    return grad


def _layer_inputs(patch: Patch, params: LayerParams, axis: int):
    """Per-layer kernel inputs and coupling sources for one direction.

    Returns (per-layer list of (Zc, Zf, Bhat), cowet, per-layer sources).
    Everything is evaluated on the pre-sweep state of this direction.
    """
    B = patch.bathy
    if params.num_layers == 1:
        ones = np.ones(B.shape, dtype=np.uint8)
        return [(B, B, B)], ones, [None]
    tol = params.dry_tolerance
    g = params.gravity
    r = params.density_ratio
    cowet = ((patch.h[0] > tol) & (patch.h[1] > tol)).astype(np.uint8)
    eta2 = B + patch.h[1]
    zeros = np.zeros_like(B)
    dx = patch.dx if axis == 1 else patch.dy
    src1 = -g * patch.h[0] * _masked_centered_grad(eta2, cowet, axis) / dx
    src2 = -r * g * patch.h[1] * _masked_centered_grad(patch.h[0], cowet, axis) / dx
    return [(zeros, eta2, eta2), (B, B, B)], cowet, [src1, src2]


def _sweep_x(patch: Patch, dt: float, params: LayerParams, full: bool) -> None:
    lam = dt / patch.dx
    gw = patch.ghost_width
    ny = patch.h.shape[1]
    j0, j1 = (0, ny) if full else (gw, ny - gw)
    bottoms, cowet, sources = _layer_inputs(patch, params, axis=1)
    cw = _column_wave_speed(patch, params)
    for m in range(params.num_layers):
        Zc, Zf, bhat = bottoms[m]
        _sweep(
            patch.h[m], patch.hu[m], patch.hv[m],
            Zc, Zf, bhat, cowet, cw,
            gw, lam, params.gravity, params.dry_tolerance, j0, j1,
        )
    for m, src in enumerate(sources):
        if src is not None:
            patch.hu[m][j0:j1, gw:-gw] += dt * src[j0:j1, gw:-gw]


def _sweep_y(patch: Patch, dt: float, params: LayerParams, full: bool) -> None:
    lam = dt / patch.dy
    gw = patch.ghost_width
    nx = patch.h.shape[2]
    j0, j1 = (0, nx) if full else (gw, nx - gw)
    bottoms, cowet, sources = _layer_inputs(patch, params, axis=0)
    cwt = np.ascontiguousarray(_column_wave_speed(patch, params).T)
    cowett = np.ascontiguousarray(cowet.T)
    for m in range(params.num_layers):
        Zc, Zf, bhat = bottoms[m]
        ht = np.ascontiguousarray(patch.h[m].T)
        hut = np.ascontiguousarray(patch.hu[m].T)
        hvt = np.ascontiguousarray(patch.hv[m].T)
        Zct = np.ascontiguousarray(Zc.T)
        Zft = Zct if Zf is Zc else np.ascontiguousarray(Zf.T)
        bhatt = Zft if bhat is Zf else np.ascontiguousarray(bhat.T)
        # In the transposed frame the normal momentum is hv.
        _sweep(ht, hvt, hut, Zct, Zft, bhatt, cowett, cwt,
               gw, lam, params.gravity, params.dry_tolerance, j0, j1)
        patch.h[m] = ht.T
        patch.hu[m] = hut.T
        patch.hv[m] = hvt.T
    for m, src in enumerate(sources):
        if src is not None:
            patch.hv[m][gw:-gw, j0:j1] += dt * src[gw:-gw, j0:j1]


def observed_max_speed(patch: Patch, params: LayerParams) -> float:
    """Largest layer |velocity| plus external wave speed over wet interior
    cells; this matches the HLL bounds the sweeps actually use."""
    jj, ii = patch.interior
    h = patch.h[:, jj, ii]
    htot = h.sum(axis=0)
    wet_col = htot > params.dry_tolerance
    if not wet_col.any():
        return 0.0
    vel = np.zeros_like(htot)
    for m in range(params.num_layers):
        wet = h[m] > params.dry_tolerance
        hm = np.where(wet, h[m], 1.0)
        um = np.abs(patch.hu[m][jj, ii]) / hm
        vm = np.abs(patch.hv[m][jj, ii]) / hm
        vel = np.maximum(vel, np.where(wet, np.maximum(um, vm), 0.0))
    speed = vel + external_wave_speed(htot, params.gravity)
    return float(speed[wet_col].max())


def stable_dt(
    patch: Patch, params: LayerParams, cfl_target: float, dt_max: float = 1.0
) -> float:
    """CFL time step from the external wave speed over wet cells; an
    all-dry patch imposes no restriction and returns dt_max."""
    speed = observed_max_speed(patch, params)
    if speed <= 0.0:
        return dt_max
    return min(dt_max, cfl_target * min(patch.dx, patch.dy) / speed)


def _blend_shear(patch: Patch, params: LayerParams) -> int:
    """Pull layer velocities toward their mass-weighted mean where the
    two-layer shear exceeds the hyperbolicity bound g(1-r)(h1+h2); the
    blend is the smallest that restores the bound and conserves total
    momentum. Returns the number of adjusted cells."""
    jj, ii = patch.interior
    h1 = patch.h[0][jj, ii]
    h2 = patch.h[1][jj, ii]
    tol = params.dry_tolerance
    both = (h1 > tol) & (h2 > tol)
    if not both.any():
        return 0
    hu1 = patch.hu[0][jj, ii]
    hu2 = patch.hu[1][jj, ii]
    hv1 = patch.hv[0][jj, ii]
    hv2 = patch.hv[1][jj, ii]
    with np.errstate(divide="ignore", invalid="ignore"):
        u1 = np.where(both, hu1 / h1, 0.0)
        u2 = np.where(both, hu2 / h2, 0.0)
        v1 = np.where(both, hv1 / h1, 0.0)
        v2 = np.where(both, hv2 / h2, 0.0)
    shear2 = (u1 - u2) ** 2 + (v1 - v2) ** 2
    bound = params.gravity * (1.0 - params.density_ratio) * (h1 + h2)
    viol = both & (shear2 > bound)
    n = int(np.count_nonzero(viol))
    if n == 0:
        return 0
    alpha = np.sqrt(bound[viol] / shear2[viol])
    htot = h1[viol] + h2[viol]
    umean = (hu1[viol] + hu2[viol]) / htot
    vmean = (hv1[viol] + hv2[viol]) / htot
    hu1[viol] = h1[viol] * (umean + alpha * (u1[viol] - umean))
    hu2[viol] = h2[viol] * (umean + alpha * (u2[viol] - umean))
    hv1[viol] = h1[viol] * (vmean + alpha * (v1[viol] - vmean))
    hv2[viol] = h2[viol] * (vmean + alpha * (v2[viol] - vmean))
    return n


def step_patch(
    patch: Patch,
    dt: float,
    params: LayerParams,
    y_first: bool = False,
) -> StepResult:
    """Advance one patch by dt with ghost cells already filled.

    Raises CflViolationError when the observed Courant number exceeds 1.
    The caller alternates ``y_first`` between steps to reduce splitting
    bias.
    """
    speed = observed_max_speed(patch, params)
    if speed * dt / min(patch.dx, patch.dy) > 1.0:
        raise CflViolationError(
            f"Courant number {speed * dt / min(patch.dx, patch.dy):.3f} > 1 "
            f"on level {patch.level} patch {patch.box}"
        )

    jj, ii = patch.interior
    area = patch.cell_area
    mass_before = patch.h[:, jj, ii].sum(axis=(1, 2)) * area

    if y_first:
        _sweep_y(patch, dt, params, full=True)
        _sweep_x(patch, dt, params, full=False)
    else:
        _sweep_x(patch, dt, params, full=True)
        _sweep_y(patch, dt, params, full=False)

    h_int = patch.h[:, jj, ii]
    neg = np.minimum(h_int, 0.0)
    clipped = -neg.sum(axis=(1, 2)) * area
    if (neg < 0.0).any():
        patch.h[:, jj, ii] = np.maximum(h_int, 0.0)

    fixes = 0
    if params.num_layers == 2:
        fixes = _blend_shear(patch, params)
    repairs = restore_wet_prefix(
        patch.h[:, jj, ii], patch.hu[:, jj, ii], patch.hv[:, jj, ii],
        params.dry_tolerance,
    )
    zero_dry_momenta(
        patch.h[:, jj, ii], patch.hu[:, jj, ii], patch.hv[:, jj, ii],
        params.dry_tolerance,
    )

    mass_after = patch.h[:, jj, ii].sum(axis=(1, 2)) * area
    return StepResult(
        max_wave_speed=speed,
        cells_updated=patch.box.ncells,
        mass_delta=mass_after - mass_before,
        hyperbolicity_fixes=fixes,
        wet_prefix_repairs=repairs,
        clipped_mass=clipped,
    )

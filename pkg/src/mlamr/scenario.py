"""Scenario definitions: bathymetry, rest state, and initial conditions.

The shipped demo is a plane wave on the free surface travelling from deep
water onto a shelf modeled as a discontinuous jump in the bathymetry, with
the rest sea level at 0 and the deep floor at -1 in scaled units. Exact
demo dimensions, wave amplitude, density ratio, and shelf height are local
choices, not published values.

Bathymetry is sampled as exact cell averages of the analytic definition at
every level, which makes each coarse value the mean of its fine values by
construction.
"""

from __future__ import annotations

import numpy as np

from .mesh import Patch
from .state import LayerParams, state_from_surfaces, zero_dry_momenta


class Scenario:
    """Analytic bathymetry plus layered rest surfaces and a wave pulse."""

    def __init__(
        self,
        bathymetry: str,
        eta_rest: tuple[float, ...],
        *,
        b_level: float | None = None,
        step_x: float | None = None,
        b_left: float | None = None,
        b_right: float | None = None,
        wave_amplitude: float = 0.0,
        wave_center: float = 0.0,
        wave_width: float = 1.0,
        gravity: float = 1.0,
    ):
        if bathymetry not in ("flat", "step"):
            raise ValueError(f"unknown bathymetry kind {bathymetry!r}")
        if bathymetry == "flat" and b_level is None:
            raise ValueError("flat bathymetry needs b_level")
        if bathymetry == "step" and None in (step_x, b_left, b_right):
            raise ValueError("step bathymetry needs step_x, b_left, b_right")
        self.bathymetry = bathymetry
        self.b_level = b_level
        self.step_x = step_x
        self.b_left = b_left
        self.b_right = b_right
        self.eta_rest = tuple(float(e) for e in eta_rest)
        self.wave_amplitude = wave_amplitude
        self.wave_center = wave_center
        self.wave_width = wave_width
        self.gravity = gravity

    def bathymetry_means(self, x_lo: np.ndarray, x_hi: np.ndarray) -> np.ndarray:
        """Exact mean of the bathymetry over [x_lo, x_hi] per cell."""
        x_lo = np.asarray(x_lo, dtype=float)
        x_hi = np.asarray(x_hi, dtype=float)
        if self.bathymetry == "flat":
            return np.full_like(x_lo, self.b_level)
        width = x_hi - x_lo
        left_part = np.clip(self.step_x - x_lo, 0.0, width)
        frac_left = left_part / width
        return self.b_left * frac_left + self.b_right * (1.0 - frac_left)

    def fill_bathymetry(self, patch: Patch) -> None:
        """Set patch bathymetry (interior and ghost frame) to cell means."""
        x = patch.x_centers(ghosts=True)
        x_lo = x - 0.5 * patch.dx
        x_hi = x + 0.5 * patch.dx
        row = self.bathymetry_means(x_lo, x_hi)
        patch.bathy[:, :] = row[None, :]

    def rest_depths(self, bathy: np.ndarray, params: LayerParams) -> np.ndarray:
        """Lake-at-rest depths implied by the rest surfaces over ``bathy``."""
        eta = np.broadcast_to(
            np.asarray(self.eta_rest, dtype=float).reshape((-1,) + (1,) * bathy.ndim),
            (len(self.eta_rest),) + bathy.shape,
        )
        h, _ = state_from_surfaces(eta, bathy, params.dry_tolerance)
        return h

    def rest_surfaces(self, bathy: np.ndarray, params: LayerParams) -> np.ndarray:
        """Per-layer rest surface elevations; equals the configured constants
        where the layer is wet and tracks the effective floor where dry."""
        h = self.rest_depths(bathy, params)
        from .state import surfaces_from_state

        return surfaces_from_state(h, bathy)

    def perturbation(self, x: np.ndarray) -> np.ndarray:
        """Free-surface displacement of the initial pulse at positions x."""
        if self.wave_amplitude == 0.0:
            return np.zeros_like(np.asarray(x, dtype=float))
        arg = (np.asarray(x, dtype=float) - self.wave_center) / self.wave_width
        return self.wave_amplitude * np.exp(-(arg**2))

    def apply_initial_condition(self, patch: Patch, params: LayerParams) -> None:
        """Rest state plus a right-moving pulse on the free surface.

        The pulse momentum uses the linear barotropic relation
        u = eta' * sqrt(g / H) with H the local total rest depth, shared by
        both layers, so the wave propagates in one direction.
        """
        x = patch.x_centers(ghosts=True)
        pert = self.perturbation(x)[None, :] * np.ones((patch.bathy.shape[0], 1))
        eta = np.broadcast_to(
            np.asarray(self.eta_rest, dtype=float).reshape((-1, 1, 1)),
            (params.num_layers,) + patch.bathy.shape,
        ).copy()
        eta[0] = eta[0] + pert
        h, _ = state_from_surfaces(eta, patch.bathy, params.dry_tolerance)
        patch.h[:, :, :] = h
        rest_total = np.maximum(self.eta_rest[0] - patch.bathy, 0.0)
        wet = rest_total > params.dry_tolerance
        u = np.zeros_like(patch.bathy)
        u[wet] = pert[wet] * np.sqrt(self.gravity / rest_total[wet])
        for m in range(params.num_layers):
            patch.hu[m] = patch.h[m] * u
            patch.hv[m] = 0.0
        zero_dry_momenta(patch.h, patch.hu, patch.hv, params.dry_tolerance)
        patch.time = 0.0

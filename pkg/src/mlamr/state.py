"""Layered conserved state: depths, surfaces, and effective bathymetry.

Layer index 0 is the top (free-surface) layer; deeper layers have larger
indices and strictly larger densities. Over shoaling bathymetry the deeper
layers vanish first, so in any cell the wet layers form a contiguous prefix
of the indices starting at the top.

All functions are pure and operate on scalars or numpy arrays whose leading
axis is the layer axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LayerParams:
    """Physical constants of the layered system.

    densities are top-to-bottom and strictly increasing; ``density_ratio``
    is rho_top / rho_bottom for the two-layer system.
    """

    num_layers: int
    densities: tuple[float, ...]
    gravity: float = 1.0
    dry_tolerance: float = 1e-3

    def __post_init__(self):
        if self.num_layers < 1:
            raise ValueError("num_layers must be >= 1")
        if len(self.densities) != self.num_layers:
            raise ValueError("need one density per layer")
        if any(d <= 0 for d in self.densities):
            raise ValueError("densities must be positive")
        if any(
            self.densities[m] >= self.densities[m + 1]
            for m in range(self.num_layers - 1)
        ):
            raise ValueError("densities must strictly increase with depth")
        if self.gravity <= 0:
            raise ValueError("gravity must be positive")
        if self.dry_tolerance <= 0:
            raise ValueError("dry_tolerance must be positive")

    @property
    def density_ratio(self) -> float:
        if self.num_layers < 2:
            raise ValueError("density_ratio needs at least two layers")
        return self.densities[0] / self.densities[1]


def surfaces_from_state(h: np.ndarray, bathy: np.ndarray) -> np.ndarray:
    """Surface elevation of every layer: eta_m = B + sum of depths at and
    below layer m. Returns an array shaped like ``h``."""
    h = np.asarray(h, dtype=float)
    eta = np.cumsum(h[::-1], axis=0)[::-1]
    return eta + bathy


def effective_bathymetry(h: np.ndarray, bathy: np.ndarray, layer: int) -> np.ndarray:
    """The floor layer ``layer`` rests on: the bed plus all deeper depths.

    For the bottom layer this is the bed itself.
    """
    h = np.asarray(h, dtype=float)
    below = h[layer + 1 :]
    if below.shape[0] == 0:
        return np.asarray(bathy, dtype=float) + np.zeros_like(h[0])
    return bathy + below.sum(axis=0)


def state_from_surfaces(
    eta: np.ndarray, bathy: np.ndarray, dry_tolerance: float
) -> tuple[np.ndarray, np.ndarray]:
    """Recover layer depths from surface elevations, bottom layer first.

    Each depth is ``max(0, eta_m - Bhat_m)`` where the effective bathymetry
    is rebuilt from the already-recovered deeper layers, so an interface
    below the local floor clips to dry. Returns ``(h, clipped)`` where
    ``clipped`` is the per-layer clipped (negative) volume-per-area, a
    diagnostic for conservation drift.
    """
    eta = np.asarray(eta, dtype=float)
    num_layers = eta.shape[0]
    h = np.zeros_like(eta)
    clipped = np.zeros(num_layers)
    bhat = np.zeros_like(eta[0]) + bathy
    for m in range(num_layers - 1, -1, -1):
        depth = eta[m] - bhat
        clipped[m] = -np.sum(np.minimum(depth, 0.0))
        h[m] = np.maximum(depth, 0.0)
        bhat = bhat + h[m]
    return h, clipped


def wet_mask(h: np.ndarray, dry_tolerance: float) -> np.ndarray:
    return np.asarray(h) > dry_tolerance


def zero_dry_momenta(
    h: np.ndarray, hu: np.ndarray, hv: np.ndarray, dry_tolerance: float
) -> None:
    """In place: a layer at or below the dry tolerance carries no momentum."""
    dry = h <= dry_tolerance
    hu[dry] = 0.0
    hv[dry] = 0.0


def wet_prefix_ok(h: np.ndarray, dry_tolerance: float) -> np.ndarray:
    """True per cell when the wet layers form a contiguous top-down prefix:
    no layer may be wet while a layer above it is dry."""
    wet = wet_mask(h, dry_tolerance)
    ok = np.ones(wet.shape[1:], dtype=bool)
    seen_dry = np.zeros(wet.shape[1:], dtype=bool)
    for m in range(wet.shape[0]):
        ok &= ~(wet[m] & seen_dry)
        seen_dry |= ~wet[m]
    return ok


def restore_wet_prefix(
    h: np.ndarray, hu: np.ndarray, hv: np.ndarray, dry_tolerance: float
) -> int:
    """Merge water trapped under a dry layer into the layer above it.

    This is a rare numerical repair near moving fronts; mass and total
    momentum are conserved exactly. Returns the number of repaired cells.
    """
    repaired = 0
    for m in range(1, h.shape[0]):
        bad = (h[m] > dry_tolerance) & (h[m - 1] <= dry_tolerance)
        n = int(np.count_nonzero(bad))
        if n:
            repaired += n
            h[m - 1][bad] += h[m][bad]
            hu[m - 1][bad] += hu[m][bad]
            hv[m - 1][bad] += hv[m][bad]
            h[m][bad] = 0.0
            hu[m][bad] = 0.0
            hv[m][bad] = 0.0
    return repaired

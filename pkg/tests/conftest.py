import numpy as np
import pytest

from mlamr import ghost
from mlamr.mesh import build_hierarchy
from mlamr.state import LayerParams

WALLS = {"left": "wall", "right": "wall", "top": "wall", "bottom": "wall"}
OPEN_X = {"left": "outflow", "right": "outflow", "top": "wall", "bottom": "wall"}


@pytest.fixture
def params2():
    return LayerParams(2, (0.95, 1.0), gravity=1.0, dry_tolerance=1e-3)


@pytest.fixture
def params1():
    return LayerParams(1, (1.0,), gravity=1.0, dry_tolerance=1e-3)


def single_patch(
    nx, ny, domain=(0.0, 1.0, 0.0, 1.0), num_layers=2, bathy=-1.0
):
    """One-level hierarchy whose base patch has constant bathymetry."""
    hier = build_hierarchy(domain, nx, ny, [], [], num_layers=num_layers)
    patch = hier.patches[1][0]
    patch.bathy[:, :] = bathy
    return hier, patch


def set_lake_at_rest(patch, eta_rest, dry_tolerance=1e-3):
    """Depths for flat per-layer surfaces over the patch bathymetry."""
    from mlamr.state import state_from_surfaces

    eta = np.broadcast_to(
        np.asarray(eta_rest, float).reshape((-1, 1, 1)),
        (len(eta_rest),) + patch.bathy.shape,
    )
    h, _ = state_from_surfaces(eta, patch.bathy, dry_tolerance)
    patch.h[:, :, :] = h
    patch.hu[:, :, :] = 0.0
    patch.hv[:, :, :] = 0.0


def fill_bc_only(hier, patch, boundaries=WALLS):
    ghost.apply_state_bcs(patch, boundaries, hier.level_box(patch.level))

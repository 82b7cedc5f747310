"""Block-structured AMR for two-layer depth-averaged shallow water flow.

The package is organized around the life cycle of a nested grid hierarchy:

- ``mesh``: level ladder, patches, and coarse/fine index arithmetic
- ``state``: layered depths, surface elevations, effective bathymetry
- ``physics``: well-balanced finite-volume step for one patch
- ``refine``: surface-interpolation initialization of fine grids
- ``coarsen``: conservative averaging of fine data onto coarse cells
- ``regrid``: flagging, clustering, and patch regeneration
- ``driver``: subcycled multi-level time stepping with work accounting
- ``config`` / ``scenario`` / ``frames`` / ``report`` / ``cli``: run setup and I/O
"""

__version__ = "0.1.0"

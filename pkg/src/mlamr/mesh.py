"""Grid hierarchy: level ladder, index boxes, patches, and index arithmetic.

Cell indices are global per level and zero-based; ``(i, j)`` is the
``(x, y)`` pair, arrays are stored ``[..., j, i]`` (row-major with x last).
Level 1 is the coarsest level and always covers the whole domain with a
single static patch. Physical cell sizes are derived once per level from the
domain extent and the integer cell count of that level, never by repeated
division, so the ladder cannot drift across levels.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np

from .errors import NotRefinedError

GHOST_WIDTH = 2


@dataclass(frozen=True)
class LevelSpec:
    """Geometry of one mesh level and its ratios to the next finer level.

    The finest level carries ratios of 1.
    """

    level: int
    nx: int
    ny: int
    dx: float
    dy: float
    r_x: int = 1
    r_y: int = 1
    r_t: int = 1


@dataclass(frozen=True)
class IndexBox:
    """Inclusive rectangle of cell indices in one level's global index space."""

    lo_i: int
    lo_j: int
    hi_i: int
    hi_j: int

    def __post_init__(self):
        if self.hi_i < self.lo_i or self.hi_j < self.lo_j:
            raise ValueError(f"empty index box {self}")

    @property
    def nx(self) -> int:
        return self.hi_i - self.lo_i + 1

    @property
    def ny(self) -> int:
        return self.hi_j - self.lo_j + 1

    @property
    def ncells(self) -> int:
        return self.nx * self.ny

    def contains(self, i: int, j: int) -> bool:
        return self.lo_i <= i <= self.hi_i and self.lo_j <= j <= self.hi_j

    def contains_box(self, other: "IndexBox") -> bool:
        return (
            self.lo_i <= other.lo_i
            and self.lo_j <= other.lo_j
            and other.hi_i <= self.hi_i
            and other.hi_j <= self.hi_j
        )

    def intersection(self, other: "IndexBox") -> "IndexBox | None":
        lo_i = max(self.lo_i, other.lo_i)
        lo_j = max(self.lo_j, other.lo_j)
        hi_i = min(self.hi_i, other.hi_i)
        hi_j = min(self.hi_j, other.hi_j)
        if hi_i < lo_i or hi_j < lo_j:
            return None
        return IndexBox(lo_i, lo_j, hi_i, hi_j)

    def grown(self, width: int) -> "IndexBox":
        return IndexBox(
            self.lo_i - width, self.lo_j - width, self.hi_i + width, self.hi_j + width
        )

    def refined(self, r_x: int, r_y: int) -> "IndexBox":
        """The fine-level box covering exactly this box's cells."""
        return IndexBox(
            self.lo_i * r_x,
            self.lo_j * r_y,
            (self.hi_i + 1) * r_x - 1,
            (self.hi_j + 1) * r_y - 1,
        )

    def coarsened(self, r_x: int, r_y: int) -> "IndexBox":
        """The coarse-level footprint; requires alignment to the ratio."""
        if (
            self.lo_i % r_x
            or self.lo_j % r_y
            or (self.hi_i + 1) % r_x
            or (self.hi_j + 1) % r_y
        ):
            raise ValueError(f"{self} is not aligned to ratio ({r_x},{r_y})")
        return IndexBox(
            self.lo_i // r_x,
            self.lo_j // r_y,
            (self.hi_i + 1) // r_x - 1,
            (self.hi_j + 1) // r_y - 1,
        )


def dilate(mask: np.ndarray, width: int) -> np.ndarray:
    """Grow a boolean mask by ``width`` cells in the 8-neighbor sense."""
    out = mask.copy()
    for _ in range(width):
        padded = np.pad(out, 1, constant_values=False)
        out = padded[1:-1, 1:-1].copy()
        for dj in (-1, 0, 1):
            for di in (-1, 0, 1):
                out |= padded[1 + dj : padded.shape[0] - 1 + dj,
                              1 + di : padded.shape[1] - 1 + di]
    return out


def erode(mask: np.ndarray, width: int) -> np.ndarray:
    """Shrink a boolean mask by ``width`` cells; the domain exterior counts
    as inside, so cells against the physical boundary are not eroded."""
    out = mask.copy()
    for _ in range(width):
        padded = np.pad(out, 1, constant_values=True)
        nxt = np.ones_like(out)
        for dj in (-1, 0, 1):
            for di in (-1, 0, 1):
                nxt &= padded[1 + dj : padded.shape[0] - 1 + dj,
                              1 + di : padded.shape[1] - 1 + di]
        out = nxt
    return out


def coarse_cell_of(fine_i: int, fine_j: int, r_x: int, r_y: int) -> tuple[int, int]:
    """The unique coarse cell containing a fine cell (floor division)."""
    return fine_i // r_x, fine_j // r_y


def fine_cells_of(coarse_i: int, coarse_j: int, r_x: int, r_y: int):
    """The contiguous block of r_x*r_y fine indices inside a coarse cell."""
    return {
        (coarse_i * r_x + p, coarse_j * r_y + q)
        for p in range(r_x)
        for q in range(r_y)
    }


class Patch:
    """A logically rectangular block of layered cells at one level.

    Arrays cover the interior box plus a ghost frame of ``ghost_width``
    cells on every side; depths/momenta are indexed ``[layer, j, i]`` with
    layer 0 the top layer.
    """

    def __init__(
        self,
        spec: LevelSpec,
        box: IndexBox,
        num_layers: int,
        origin: tuple[float, float],
        ghost_width: int = GHOST_WIDTH,
    ):
        self.spec = spec
        self.level = spec.level
        self.box = box
        self.num_layers = num_layers
        self.origin = origin
        self.ghost_width = ghost_width
        self.time = 0.0
        ny = box.ny + 2 * ghost_width
        nx = box.nx + 2 * ghost_width
        self.h = np.zeros((num_layers, ny, nx))
        self.hu = np.zeros((num_layers, ny, nx))
        self.hv = np.zeros((num_layers, ny, nx))
        self.bathy = np.zeros((ny, nx))

    @property
    def dx(self) -> float:
        return self.spec.dx

    @property
    def dy(self) -> float:
        return self.spec.dy

    @property
    def cell_area(self) -> float:
        return self.spec.dx * self.spec.dy

    @property
    def interior(self) -> tuple[slice, slice]:
        g = self.ghost_width
        return slice(g, g + self.box.ny), slice(g, g + self.box.nx)

    @property
    def full_box(self) -> IndexBox:
        """Interior box grown by the ghost frame, in global indices."""
        return self.box.grown(self.ghost_width)

    def local_slices(self, box: IndexBox) -> tuple[slice, slice]:
        """Array slices for a global-index sub-box (may reach into ghosts)."""
        g = self.ghost_width
        fb = self.full_box
        if not fb.contains_box(box):
            raise ValueError(f"{box} not within patch footprint {fb}")
        j0 = box.lo_j - self.box.lo_j + g
        i0 = box.lo_i - self.box.lo_i + g
        return slice(j0, j0 + box.ny), slice(i0, i0 + box.nx)

    def x_centers(self, ghosts: bool = True) -> np.ndarray:
        g = self.ghost_width if ghosts else 0
        idx = np.arange(self.box.lo_i - g, self.box.hi_i + g + 1)
        return self.origin[0] + (idx + 0.5) * self.spec.dx

    def y_centers(self, ghosts: bool = True) -> np.ndarray:
        g = self.ghost_width if ghosts else 0
        idx = np.arange(self.box.lo_j - g, self.box.hi_j + g + 1)
        return self.origin[1] + (idx + 0.5) * self.spec.dy

    def interior_view(self, arr: np.ndarray) -> np.ndarray:
        jj, ii = self.interior
        return arr[..., jj, ii]


class Hierarchy:
    """The ladder of levels and the per-level patch lists."""

    def __init__(
        self,
        domain: tuple[float, float, float, float],
        levels: list[LevelSpec],
        num_layers: int,
        ghost_width: int = GHOST_WIDTH,
    ):
        self.domain = domain
        self.levels = levels
        self.num_layers = num_layers
        self.ghost_width = ghost_width
        self.patches: dict[int, list[Patch]] = {s.level: [] for s in levels}

    @property
    def max_levels(self) -> int:
        return len(self.levels)

    @property
    def origin(self) -> tuple[float, float]:
        return (self.domain[0], self.domain[2])

    def spec(self, level: int) -> LevelSpec:
        return self.levels[level - 1]

    def level_box(self, level: int) -> IndexBox:
        s = self.spec(level)
        return IndexBox(0, 0, s.nx - 1, s.ny - 1)

    def new_patch(self, level: int, box: IndexBox) -> Patch:
        return Patch(
            self.spec(level), box, self.num_layers, self.origin, self.ghost_width
        )

    def coverage_mask(self, level: int) -> np.ndarray:
        """Boolean array over a level's index space: covered by level+1."""
        s = self.spec(level)
        mask = np.zeros((s.ny, s.nx), dtype=bool)
        if level + 1 in self.patches:
            for p in self.patches[level + 1]:
                cb = p.box.coarsened(s.r_x, s.r_y)
                mask[cb.lo_j : cb.hi_j + 1, cb.lo_i : cb.hi_i + 1] = True
        return mask

    def fine_cells_of(self, level: int, coarse_ij: tuple[int, int]):
        """Fine indices overlying a coarse cell; errors if not refined there."""
        s = self.spec(level)
        i, j = coarse_ij
        covered = any(
            p.box.coarsened(s.r_x, s.r_y).contains(i, j)
            for p in self.patches.get(level + 1, [])
        )
        if not covered:
            raise NotRefinedError(f"level {level} cell ({i},{j}) has no fine patch")
        return fine_cells_of(i, j, s.r_x, s.r_y)

    def check_nesting(self) -> None:
        """Assert patch invariants: disjoint interiors and proper nesting."""
        for level, plist in self.patches.items():
            for a in range(len(plist)):
                for b in range(a + 1, len(plist)):
                    if plist[a].box.intersection(plist[b].box) is not None:
                        raise AssertionError(
                            f"level {level} patches overlap: "
                            f"{plist[a].box} and {plist[b].box}"
                        )
        for level in range(2, self.max_levels + 1):
            if not self.patches.get(level):
                continue
            parent = self.spec(level - 1)
            dom = self.level_box(level - 1)
            allowed = np.zeros((parent.ny, parent.nx), dtype=bool)
            for p in self.patches[level - 1]:
                b = p.box
                allowed[b.lo_j : b.hi_j + 1, b.lo_i : b.hi_i + 1] = True
            shrunk = erode(allowed, 1)
            for p in self.patches[level]:
                cb = p.box.coarsened(parent.r_x, parent.r_y)
                if not dom.contains_box(cb):
                    raise AssertionError(f"level {level} patch {p.box} outside domain")
                region = shrunk[cb.lo_j : cb.hi_j + 1, cb.lo_i : cb.hi_i + 1]
                if not region.all():
                    raise AssertionError(
                        f"level {level} patch {p.box} not nested in level "
                        f"{level - 1} patches"
                    )


def build_hierarchy(
    domain: tuple[float, float, float, float],
    coarse_nx: int,
    coarse_ny: int,
    ratios_x: list[int],
    ratios_y: list[int],
    *,
    num_layers: int = 2,
    ratios_t: list[int] | None = None,
    ghost_width: int = GHOST_WIDTH,
) -> Hierarchy:
    """Construct the level ladder and allocate the static level-1 patch.

    ``ratios_x[k]`` is the refinement ratio between level k+1 and level k+2;
    the temporal ratio defaults to ``max(r_x, r_y)`` per level so each finer
    level keeps the same Courant number.
    """
    x0, x1, y0, y1 = domain
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"domain extents must be positive, got {domain}")
    if coarse_nx < 4 or coarse_ny < 4:
        raise ValueError(f"coarse grid must be at least 4x4, got {coarse_nx}x{coarse_ny}")
    if len(ratios_x) != len(ratios_y):
        raise ValueError("ratios_x and ratios_y must have equal length")
    for r in list(ratios_x) + list(ratios_y):
        if r < 2:
            raise ValueError(f"refinement ratios must be >= 2, got {r}")
    if ratios_t is None:
        ratios_t = [max(rx, ry) for rx, ry in zip(ratios_x, ratios_y)]
    for r in ratios_t:
        if r < 1:
            raise ValueError(f"temporal ratios must be >= 1, got {r}")

    width, height = x1 - x0, y1 - y0
    nlevels = len(ratios_x) + 1
    levels = []
    for lev in range(1, nlevels + 1):
        nx = coarse_nx * prod(ratios_x[: lev - 1])
        ny = coarse_ny * prod(ratios_y[: lev - 1])
        if lev <= len(ratios_x):
            rx, ry, rt = ratios_x[lev - 1], ratios_y[lev - 1], ratios_t[lev - 1]
        else:
            rx = ry = rt = 1
        levels.append(
            LevelSpec(lev, nx, ny, width / nx, height / ny, rx, ry, rt)
        )

    hier = Hierarchy(domain, levels, num_layers, ghost_width)
    base = hier.new_patch(1, hier.level_box(1))
    hier.patches[1].append(base)
    return hier

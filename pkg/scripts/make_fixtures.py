#!/usr/bin/env python3
"""Regenerate the checked-in frame fixtures shared by the Python tests and
the frontend plotter's golden tests.

Run from the repository root:

    python scripts/make_fixtures.py

Produces, under tests/fixtures/frames/:

- shelf_small_frame000[012].bin : the three reduced-size shelf demo frames
- shelf_small_frame0000.txt     : frame 0 in text mode
- single_layer.bin              : one-layer, one-level synthetic frame
- coarse_only.bin               : two layers, no refined level
"""

import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from mlamr.config import parse_config  # noqa: E402
from mlamr.driver import run_simulation  # noqa: E402
from mlamr.frames import frame_from_hierarchy, write_frame  # noqa: E402
from mlamr.mesh import build_hierarchy  # noqa: E402


def synthetic_frames(out_dir: Path) -> None:
    hier = build_hierarchy((0.0, 1.0, 0.0, 0.5), 8, 4, [], [], num_layers=1)
    patch = hier.patches[1][0]
    rng = np.random.default_rng(7)
    patch.bathy[:, :] = rng.uniform(-1.0, -0.5, patch.bathy.shape)
    patch.h[:, :, :] = rng.uniform(0.0, 1.0, patch.h.shape)
    patch.hu[:, :, :] = rng.uniform(-0.2, 0.2, patch.hu.shape)
    write_frame(frame_from_hierarchy(hier, 0.25, (0.0,)), out_dir / "single_layer.bin")

    hier2 = build_hierarchy((0.0, 2.0, 0.0, 1.0), 10, 5, [2], [2], num_layers=2)
    base = hier2.patches[1][0]
    base.bathy[:, :] = -1.0
    base.h[0, :, :] = 0.6
    base.h[1, :, :] = 0.4
    write_frame(
        frame_from_hierarchy(hier2, 0.0, (0.0, -0.6)), out_dir / "coarse_only.bin"
    )


def main() -> None:
    out_dir = ROOT / "tests" / "fixtures" / "frames"
    out_dir.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        cfg = parse_config(ROOT / "configs" / "shelf_demo_small.cfg")
        run_simulation(cfg, out_dir=tmp, workers=1, amr=True)
        for k in range(3):
            shutil.copy(
                Path(tmp) / f"frame{k:04d}.bin",
                out_dir / f"shelf_small_frame{k:04d}.bin",
            )
        run_simulation(cfg, out_dir=tmp + "/text", workers=1, amr=True,
                       text_frames=True)
        shutil.copy(
            Path(tmp) / "text" / "frame0000.txt",
            out_dir / "shelf_small_frame0000.txt",
        )
    synthetic_frames(out_dir)
    print(f"fixtures written to {out_dir}")


if __name__ == "__main__":
    main()

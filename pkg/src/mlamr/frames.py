"""Simulation snapshot files and the frame differ.

A frame is a plain-text header followed by per-patch payloads. Header
floats are written as C99 hexadecimal literals (``(0.1).hex()`` style), so
any language can round-trip them bit-exactly without decimal-formatting
quirks. The binary payload is little-endian float64, row-major with x
fastest, fields ordered bathymetry then per layer depth, x-momentum,
y-momentum. A text mode stores the same payload as comma-separated
hexfloat rows.

Header layout (version 1)::

    MLAMR FRAME 1            (or: MLAMR FRAME-TEXT 1)
    time <hexfloat>
    num_layers <int>
    num_levels <int>
    domain <x0> <x1> <y0> <y1>
    rest <eta_rest per layer...>
    level <index> <nx> <ny> <dx> <dy>     (one line per level)
    num_patches <int>
    end_header

Binary patch record: five little-endian int64 (level, lo_i, lo_j, hi_i,
hi_j) followed by the field arrays. Text patch record: a ``patch`` line
with the same five integers followed by ny hexfloat CSV rows per field.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FrameFormatError
from .mesh import Hierarchy, IndexBox

FORMAT_VERSION = 1
_MAGIC_BINARY = "MLAMR FRAME"
_MAGIC_TEXT = "MLAMR FRAME-TEXT"
_PATCH_HEADER = struct.Struct("<5q")


@dataclass
class FramePatch:
    level: int
    box: IndexBox
    bathy: np.ndarray
    h: np.ndarray
    hu: np.ndarray
    hv: np.ndarray


@dataclass
class Frame:
    version: int
    time: float
    num_layers: int
    domain: tuple[float, float, float, float]
    rest: tuple[float, ...]
    levels: list[tuple[int, int, int, float, float]]  # level, nx, ny, dx, dy
    patches: list[FramePatch]

    @property
    def finest(self) -> tuple[int, int, int, float, float]:
        return self.levels[-1]

    def level_meta(self, level: int) -> tuple[int, int, int, float, float]:
        for meta in self.levels:
            if meta[0] == level:
                return meta
        raise FrameFormatError(f"frame has no level {level}")


def frame_from_hierarchy(hier: Hierarchy, time: float, rest: tuple[float, ...]) -> Frame:
    levels = [
        (s.level, s.nx, s.ny, s.dx, s.dy) for s in hier.levels
    ]
    patches = []
    for level in sorted(hier.patches):
        for p in hier.patches[level]:
            jj, ii = p.interior
            patches.append(
                FramePatch(
                    level=level,
                    box=p.box,
                    bathy=p.bathy[jj, ii].copy(),
                    h=p.h[:, jj, ii].copy(),
                    hu=p.hu[:, jj, ii].copy(),
                    hv=p.hv[:, jj, ii].copy(),
                )
            )
    return Frame(
        version=FORMAT_VERSION,
        time=time,
        num_layers=hier.num_layers,
        domain=hier.domain,
        rest=tuple(rest),
        levels=levels,
        patches=patches,
    )


def _header_lines(frame: Frame, text_mode: bool) -> list[str]:
    magic = _MAGIC_TEXT if text_mode else _MAGIC_BINARY
    lines = [
        f"{magic} {frame.version}",
        f"time {float(frame.time).hex()}",
        f"num_layers {frame.num_layers}",
        f"num_levels {len(frame.levels)}",
        "domain " + " ".join(float(v).hex() for v in frame.domain),
        "rest " + " ".join(float(v).hex() for v in frame.rest),
    ]
    for level, nx, ny, dx, dy in frame.levels:
        lines.append(f"level {level} {nx} {ny} {float(dx).hex()} {float(dy).hex()}")
    lines.append(f"num_patches {len(frame.patches)}")
    lines.append("end_header")
    return lines


def _patch_fields(p: FramePatch):
    yield p.bathy
    for m in range(p.h.shape[0]):
        yield p.h[m]
        yield p.hu[m]
        yield p.hv[m]


def write_frame(frame: Frame, path, text_mode: bool = False) -> None:
    header = "\n".join(_header_lines(frame, text_mode)) + "\n"
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        for p in frame.patches:
            if text_mode:
                f.write(
                    f"patch {p.level} {p.box.lo_i} {p.box.lo_j} "
                    f"{p.box.hi_i} {p.box.hi_j}\n".encode("ascii")
                )
                for field in _patch_fields(p):
                    for row in field:
                        f.write(
                            (",".join(float(v).hex() for v in row) + "\n").encode("ascii")
                        )
            else:
                f.write(
                    _PATCH_HEADER.pack(
                        p.level, p.box.lo_i, p.box.lo_j, p.box.hi_i, p.box.hi_j
                    )
                )
                for field in _patch_fields(p):
                    f.write(np.ascontiguousarray(field, dtype="<f8").tobytes())


def _parse_header(lines: list[str], path) -> tuple[dict, bool]:
    first = lines[0].split()
    if len(first) != 3 or first[0] != "MLAMR":
        raise FrameFormatError(f"{path}: not a frame file")
    magic = f"{first[0]} {first[1]}"
    if magic not in (_MAGIC_BINARY, _MAGIC_TEXT):
        raise FrameFormatError(f"{path}: unknown magic {magic!r}")
    version = int(first[2])
    if version != FORMAT_VERSION:
        raise FrameFormatError(
            f"{path}: format version {version} not supported (expected {FORMAT_VERSION})"
        )
    meta: dict = {"version": version, "levels": []}
    for line in lines[1:]:
        tok = line.split()
        if not tok:
            continue
        key = tok[0]
        if key == "time":
            meta["time"] = float.fromhex(tok[1])
        elif key == "num_layers":
            meta["num_layers"] = int(tok[1])
        elif key == "num_levels":
            meta["num_levels"] = int(tok[1])
        elif key == "domain":
            meta["domain"] = tuple(float.fromhex(v) for v in tok[1:5])
        elif key == "rest":
            meta["rest"] = tuple(float.fromhex(v) for v in tok[1:])
        elif key == "level":
            meta["levels"].append(
                (int(tok[1]), int(tok[2]), int(tok[3]),
                 float.fromhex(tok[4]), float.fromhex(tok[5]))
            )
        elif key == "num_patches":
            meta["num_patches"] = int(tok[1])
        else:
            raise FrameFormatError(f"{path}: unknown header line {line!r}")
    required = ("time", "num_layers", "num_levels", "domain", "rest", "num_patches")
    missing = [k for k in required if k not in meta]
    if missing or len(meta["levels"]) != meta["num_levels"]:
        raise FrameFormatError(f"{path}: incomplete header (missing {missing})")
    return meta, magic == _MAGIC_TEXT


def read_frame(path) -> Frame:
    with open(path, "rb") as f:
        blob = f.read()
    marker = b"end_header\n"
    pos = blob.find(marker)
    if pos < 0:
        raise FrameFormatError(f"{path}: missing end_header")
    header_lines = blob[:pos].decode("ascii", errors="replace").splitlines()
    meta, text_mode = _parse_header(header_lines, path)
    body = blob[pos + len(marker):]
    num_layers = meta["num_layers"]
    nfields = 1 + 3 * num_layers

    patches = []
    if text_mode:
        lines = body.decode("ascii").splitlines()
        k = 0
        for _ in range(meta["num_patches"]):
            tok = lines[k].split()
            if tok[0] != "patch":
                raise FrameFormatError(f"{path}: expected patch line, got {lines[k]!r}")
            k += 1
            level, lo_i, lo_j, hi_i, hi_j = (int(v) for v in tok[1:6])
            box = IndexBox(lo_i, lo_j, hi_i, hi_j)
            fields = []
            for _ in range(nfields):
                rows = []
                for _ in range(box.ny):
                    rows.append([float.fromhex(v) for v in lines[k].split(",")])
                    k += 1
                fields.append(np.array(rows))
            patches.append(_assemble_patch(level, box, fields, num_layers))
    else:
        off = 0
        for _ in range(meta["num_patches"]):
            level, lo_i, lo_j, hi_i, hi_j = _PATCH_HEADER.unpack_from(body, off)
            off += _PATCH_HEADER.size
            box = IndexBox(lo_i, lo_j, hi_i, hi_j)
            count = box.ny * box.nx
            fields = []
            for _ in range(nfields):
                arr = np.frombuffer(body, dtype="<f8", count=count, offset=off)
                off += count * 8
                fields.append(arr.reshape(box.ny, box.nx).copy())
            patches.append(_assemble_patch(level, box, fields, num_layers))

    return Frame(
        version=meta["version"],
        time=meta["time"],
        num_layers=num_layers,
        domain=meta["domain"],
        rest=meta["rest"],
        levels=meta["levels"],
        patches=patches,
    )


def _assemble_patch(level, box, fields, num_layers) -> FramePatch:
    bathy = fields[0]
    h = np.stack([fields[1 + 3 * m] for m in range(num_layers)])
    hu = np.stack([fields[2 + 3 * m] for m in range(num_layers)])
    hv = np.stack([fields[3 + 3 * m] for m in range(num_layers)])
    return FramePatch(level=level, box=box, bathy=bathy, h=h, hu=hu, hv=hv)


def composite_fields(frame: Frame) -> dict[str, np.ndarray]:
    """Flatten the hierarchy onto the finest level's grid, finest data
    winning where levels overlap. Returns bathy, per-layer depths and
    surfaces as (num_layers, ny, nx) / (ny, nx) arrays."""
    _, nx_f, ny_f, _, _ = frame.finest
    M = frame.num_layers
    bathy = np.full((ny_f, nx_f), np.nan)
    h = np.full((M, ny_f, nx_f), np.nan)
    hu = np.full((M, ny_f, nx_f), np.nan)
    hv = np.full((M, ny_f, nx_f), np.nan)
    for p in sorted(frame.patches, key=lambda q: q.level):
        _, nx_l, ny_l, _, _ = frame.level_meta(p.level)
        fx, rem_x = divmod(nx_f, nx_l)
        fy, rem_y = divmod(ny_f, ny_l)
        if rem_x or rem_y:
            raise FrameFormatError(
                f"level {p.level} grid {nx_l}x{ny_l} does not divide finest "
                f"{nx_f}x{ny_f}"
            )
        jj = slice(p.box.lo_j * fy, (p.box.hi_j + 1) * fy)
        ii = slice(p.box.lo_i * fx, (p.box.hi_i + 1) * fx)
        up = lambda a: np.repeat(np.repeat(a, fy, axis=-2), fx, axis=-1)
        bathy[jj, ii] = up(p.bathy)
        h[:, jj, ii] = up(p.h)
        hu[:, jj, ii] = up(p.hu)
        hv[:, jj, ii] = up(p.hv)
    if np.isnan(bathy).any():
        raise FrameFormatError("frame does not cover the domain at level 1")
    eta = np.cumsum(h[::-1], axis=0)[::-1] + bathy
    return {"bathy": bathy, "h": h, "hu": hu, "hv": hv, "eta": eta}


def l1_diff(frame_a: Frame, frame_b: Frame) -> dict[str, float]:
    """Area-weighted mean and max absolute differences of layer surfaces
    and depths, compared on the finer of the two finest grids."""
    if frame_a.domain != frame_b.domain:
        raise FrameFormatError("frames cover different domains")
    if frame_a.num_layers != frame_b.num_layers:
        raise FrameFormatError("frames have different layer counts")
    fa = composite_fields(frame_a)
    fb = composite_fields(frame_b)
    sa = fa["h"].shape
    sb = fb["h"].shape
    if sa != sb:
        fa_ny, fb_ny = sa[1], sb[1]
        if fa_ny < fb_ny:
            fa, fb = fb, fa
            sa, sb = sb, sa
        fy, rem_y = divmod(sa[1], sb[1])
        fx, rem_x = divmod(sa[2], sb[2])
        if rem_x or rem_y:
            raise FrameFormatError("frame resolutions are not nested")
        for key in ("h", "hu", "hv", "eta"):
            fb[key] = np.repeat(np.repeat(fb[key], fy, axis=-2), fx, axis=-1)
    out: dict[str, float] = {}
    for key in ("eta", "h"):
        diff = np.abs(fa[key] - fb[key])
        for m in range(diff.shape[0]):
            out[f"{key}_{m + 1}_l1"] = float(diff[m].mean())
            out[f"{key}_{m + 1}_linf"] = float(diff[m].max())
    return out

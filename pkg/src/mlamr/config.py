"""Run configuration: flat key-value text files with sections.

The grammar is INI-style: ``[section]`` headers followed by ``key = value``
lines; ``#`` starts a comment. Unknown sections or keys are rejected so
typos fail loudly, and every resolved value (including applied defaults) is
echoed to the log so runs are self-documenting.
"""

from __future__ import annotations

import configparser
import logging
from dataclasses import dataclass, fields

from .errors import ConfigError
from .mesh import Hierarchy, build_hierarchy
from .regrid import RegridPolicy
from .scenario import Scenario
from .state import LayerParams

log = logging.getLogger("mlamr.config")

_REQUIRED = object()


def _floats(text: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    return tuple(float(p) for p in parts)


def _ints(text: str) -> tuple[int, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    return tuple(int(p) for p in parts)


def _rects(text: str) -> tuple[tuple[float, float, float, float], ...]:
    rects = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        vals = _floats(chunk)
        if len(vals) != 4:
            raise ValueError(f"rectangle needs 4 values, got {chunk!r}")
        rects.append(tuple(vals))
    return tuple(rects)


_SCHEMA: dict[str, dict[str, tuple]] = {
    "domain": {
        "x_min": (float, _REQUIRED),
        "x_max": (float, _REQUIRED),
        "y_min": (float, _REQUIRED),
        "y_max": (float, _REQUIRED),
    },
    "grid": {
        "nx": (int, _REQUIRED),
        "ny": (int, _REQUIRED),
        "max_levels": (int, 1),
        "refine_x": (_ints, ()),
        "refine_y": (_ints, ()),
    },
    "time": {
        "t_final": (float, _REQUIRED),
        "frame_times": (_floats, None),
        "cfl": (float, 0.9),
        "dt_max": (float, 1.0),
    },
    "physics": {
        "gravity": (float, 1.0),
        "num_layers": (int, 2),
        "density_ratio": (float, 0.95),
        "dry_tolerance": (float, 1e-3),
    },
    "scenario": {
        "name": (str, "unnamed"),
        "bathymetry": (str, _REQUIRED),
        "b_level": (float, None),
        "step_x": (float, None),
        "b_left": (float, None),
        "b_right": (float, None),
        "eta_rest": (_floats, _REQUIRED),
        "wave_amplitude": (float, 0.0),
        "wave_center": (float, 0.0),
        "wave_width": (float, 1.0),
    },
    "boundaries": {
        "left": (str, "wall"),
        "right": (str, "wall"),
        "top": (str, "wall"),
        "bottom": (str, "wall"),
    },
    "amr": {
        "wave_tolerance": (_floats, None),
        "regrid_interval": (int, 2),
        "buffer_width": (int, 2),
        "efficiency_target": (float, 0.7),
        "allowed_regions": (_rects, ()),
    },
}

_DEFAULT_WAVE_TOLERANCE = (1e-2, 5e-2)
_BOUNDARY_KINDS = ("wall", "outflow")


@dataclass
class RunConfig:
    """Fully resolved run configuration."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int
    max_levels: int
    refine_x: tuple[int, ...]
    refine_y: tuple[int, ...]
    t_final: float
    frame_times: tuple[float, ...]
    cfl: float
    dt_max: float
    gravity: float
    num_layers: int
    density_ratio: float
    dry_tolerance: float
    name: str
    bathymetry: str
    b_level: float | None
    step_x: float | None
    b_left: float | None
    b_right: float | None
    eta_rest: tuple[float, ...]
    wave_amplitude: float
    wave_center: float
    wave_width: float
    left: str
    right: str
    top: str
    bottom: str
    wave_tolerance: tuple[float, ...]
    regrid_interval: int
    buffer_width: int
    efficiency_target: float
    allowed_regions: tuple[tuple[float, float, float, float], ...]

    @property
    def domain(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.x_max, self.y_min, self.y_max)

    @property
    def boundaries(self) -> dict[str, str]:
        return {
            "left": self.left,
            "right": self.right,
            "top": self.top,
            "bottom": self.bottom,
        }

    def layer_params(self) -> LayerParams:
        if self.num_layers == 1:
            densities: tuple[float, ...] = (1.0,)
        else:
            densities = (self.density_ratio, 1.0)
        return LayerParams(
            num_layers=self.num_layers,
            densities=densities,
            gravity=self.gravity,
            dry_tolerance=self.dry_tolerance,
        )

    def scenario(self) -> Scenario:
        return Scenario(
            self.bathymetry,
            self.eta_rest,
            b_level=self.b_level,
            step_x=self.step_x,
            b_left=self.b_left,
            b_right=self.b_right,
            wave_amplitude=self.wave_amplitude,
            wave_center=self.wave_center,
            wave_width=self.wave_width,
            gravity=self.gravity,
        )

    def policy(self) -> RegridPolicy:
        return RegridPolicy(
            wave_tolerance=self.wave_tolerance,
            regrid_interval=self.regrid_interval,
            buffer_width=self.buffer_width,
            efficiency_target=self.efficiency_target,
        )

    def build_hierarchy(self, uniform_fine: bool = False) -> Hierarchy:
        """The run's hierarchy; with ``uniform_fine`` the whole domain is a
        single level at the resolution the finest level would have."""
        if uniform_fine and self.max_levels > 1:
            fx = fy = 1
            for r in self.refine_x:
                fx *= r
            for r in self.refine_y:
                fy *= r
            return build_hierarchy(
                self.domain, self.nx * fx, self.ny * fy, [], [],
                num_layers=self.num_layers,
            )
        return build_hierarchy(
            self.domain, self.nx, self.ny, list(self.refine_x), list(self.refine_y),
            num_layers=self.num_layers,
        )


def _coerce(section: str, key: str, raw: str, caster) -> object:
    try:
        return caster(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}.{key}", f"cannot parse {raw!r}: {exc}") from None


def parse_config(path: str) -> RunConfig:
    """Read, validate, and echo a configuration file."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str
    read = parser.read(path)
    if not read:
        raise ConfigError(str(path), "config file not found")

    values: dict[str, object] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(section, "unknown section")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")

    defaulted: set[str] = set()
    for section, keys in _SCHEMA.items():
        for key, (caster, default) in keys.items():
            if parser.has_option(section, key):
                values[key] = _coerce(section, key, parser.get(section, key), caster)
            elif default is _REQUIRED:
                raise ConfigError(f"{section}.{key}", "required key missing")
            else:
                values[key] = default
                defaulted.add(key)

    cfg = _finalize(values, defaulted)
    _echo(cfg, defaulted)
    return cfg


def _finalize(values: dict, defaulted: set[str]) -> RunConfig:
    def fail(key: str, msg: str):
        raise ConfigError(key, msg)

    if values["x_max"] <= values["x_min"]:
        fail("domain.x_max", "domain width must be positive")
    if values["y_max"] <= values["y_min"]:
        fail("domain.y_max", "domain height must be positive")
    if values["nx"] < 4 or values["ny"] < 4:
        fail("grid.nx", "coarse grid must be at least 4x4")
    levels = values["max_levels"]
    if levels < 1:
        fail("grid.max_levels", "must be >= 1")
    for axis in ("refine_x", "refine_y"):
        ratios = values[axis]
        if levels > 1 and len(ratios) != levels - 1:
            fail(f"grid.{axis}", f"need {levels - 1} ratios for {levels} levels")
        for r in ratios:
            if r < 2:
                fail(f"grid.{axis}", f"refinement ratios must be >= 2, got {r}")
    if levels == 1:
        values["refine_x"] = ()
        values["refine_y"] = ()
    if values["t_final"] <= 0:
        fail("time.t_final", "must be positive")
    if not (0 < values["cfl"] <= 1):
        fail("time.cfl", "must be in (0, 1]")
    if values["frame_times"] is None:
        values["frame_times"] = (0.0, values["t_final"])
        defaulted.add("frame_times")
    ft = values["frame_times"]
    if list(ft) != sorted(ft):
        fail("time.frame_times", "must be sorted")
    if ft and (ft[0] < 0 or ft[-1] > values["t_final"] + 1e-12):
        fail("time.frame_times", "must lie within [0, t_final]")
    if values["num_layers"] not in (1, 2):
        fail("physics.num_layers", "solver supports 1 or 2 layers")
    if values["num_layers"] == 2 and not (0 < values["density_ratio"] < 1):
        fail("physics.density_ratio", "must be in (0, 1)")
    if values["dry_tolerance"] <= 0:
        fail("physics.dry_tolerance", "must be positive")
    if len(values["eta_rest"]) != values["num_layers"]:
        fail("scenario.eta_rest", "need one rest surface per layer")
    if any(
        values["eta_rest"][m] <= values["eta_rest"][m + 1]
        for m in range(len(values["eta_rest"]) - 1)
    ):
        fail("scenario.eta_rest", "rest surfaces must strictly decrease with depth")
    if values["wave_width"] <= 0:
        fail("scenario.wave_width", "must be positive")
    for side in ("left", "right", "top", "bottom"):
        if values[side] not in _BOUNDARY_KINDS:
            fail(f"boundaries.{side}", f"must be one of {_BOUNDARY_KINDS}")
    if values["wave_tolerance"] is None:
        values["wave_tolerance"] = _DEFAULT_WAVE_TOLERANCE[: values["num_layers"]]
        defaulted.add("wave_tolerance")
    wt = values["wave_tolerance"]
    if len(wt) == 1 and values["num_layers"] > 1:
        wt = wt * values["num_layers"]
        values["wave_tolerance"] = wt
    if len(wt) != values["num_layers"]:
        fail("amr.wave_tolerance", "need one tolerance per layer (or a single value)")
    if any(t <= 0 for t in wt):
        fail("amr.wave_tolerance", "tolerances must be positive")
    if values["regrid_interval"] < 1:
        fail("amr.regrid_interval", "must be >= 1")
    if values["buffer_width"] < 0:
        fail("amr.buffer_width", "must be >= 0")
    if not (0 < values["efficiency_target"] <= 1):
        fail("amr.efficiency_target", "must be in (0, 1]")

    # Scenario-kind cross checks live in Scenario; surface them as config errors.
    try:
        cfg = RunConfig(**{f.name: values[f.name] for f in fields(RunConfig)})
        cfg.scenario()
        cfg.layer_params()
    except (ValueError, TypeError) as exc:
        raise ConfigError("scenario", str(exc)) from None

    bathy_min = min(
        v for v in (values["b_level"], values["b_left"], values["b_right"])
        if v is not None
    )
    if bathy_min >= values["eta_rest"][-1]:
        fail(
            "scenario.eta_rest",
            "bathymetry must fall below the deepest rest surface somewhere",
        )
    return cfg


def _echo(cfg: RunConfig, defaulted: set[str]) -> None:
    log.info("resolved configuration (* = default applied):")
    for f in fields(RunConfig):
        mark = " *" if f.name in defaulted else ""
        log.info("  %s = %r%s", f.name, getattr(cfg, f.name), mark)

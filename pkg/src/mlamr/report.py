"""Fixed-column timing/work report comparing an adaptive and a uniform run.

The table carries the raw wall time, CPU time, and exact cell-update
counts; the ratio lines underneath are recomputed from those same raw
numbers, so a reader can verify the file is self-consistent.
"""

from __future__ import annotations

from .driver import RunStats

_ROW = "{name:<10s}{workers:>8d}{wall:>14.3f}{cpu:>14.3f}{updates:>22d}\n"
_ABSENT = "{name:<10s}{dash:>8s}{dash:>14s}{dash:>14s}{dash:>22s}\n"


def format_report(stats_amr: RunStats, stats_uniform: RunStats | None) -> str:
    out = ["Timing and work comparison (times in seconds)\n", "\n"]
    out.append(
        "{:<10s}{:>8s}{:>14s}{:>14s}{:>22s}\n".format(
            "Run", "Workers", "Wall Time", "CPU Time", "Total Cell Updates"
        )
    )
    out.append("-" * 68 + "\n")
    out.append(
        _ROW.format(
            name="AMR" if stats_amr.amr_enabled else "Run A",
            workers=stats_amr.workers,
            wall=stats_amr.wall_time,
            cpu=stats_amr.cpu_time,
            updates=stats_amr.total_cell_updates,
        )
    )
    if stats_uniform is None:
        out.append(_ABSENT.format(name="Uniform", dash="-"))
        out.append("\nUpdate ratio:  n/a (no baseline run)\n")
        out.append("Runtime ratio: n/a (no baseline run)\n")
    else:
        out.append(
            _ROW.format(
                name="Uniform",
                workers=stats_uniform.workers,
                wall=stats_uniform.wall_time,
                cpu=stats_uniform.cpu_time,
                updates=stats_uniform.total_cell_updates,
            )
        )
        upd = stats_amr.total_cell_updates / stats_uniform.total_cell_updates
        out.append(f"\nUpdate ratio:  {100.0 * upd:.2f}%\n")
        if stats_uniform.wall_time > 0:
            wall = stats_amr.wall_time / stats_uniform.wall_time
            out.append(f"Runtime ratio: {100.0 * wall:.2f}%\n")
        else:
            out.append("Runtime ratio: n/a (zero baseline wall time)\n")
    return "".join(out)


def write_report(stats_amr: RunStats, stats_uniform: RunStats | None, path) -> str:
    text = format_report(stats_amr, stats_uniform)
    with open(path, "w") as f:
        f.write(text)
    return text


def parse_report(path) -> dict:
    """Recover the raw numbers and printed ratios from a report file."""
    rows: dict[str, dict] = {}
    ratios: dict[str, float | None] = {}
    with open(path) as f:
        for line in f:
            parts = line.split()
            if not parts:
                continue
            if parts[0] in ("AMR", "Uniform", "Run") and len(parts) == 5:
                if parts[1] == "-":
                    rows[parts[0]] = None
                    continue
                try:
                    rows[parts[0]] = {
                        "workers": int(parts[1]),
                        "wall_time": float(parts[2]),
                        "cpu_time": float(parts[3]),
                        "total_cell_updates": int(parts[4]),
                    }
                except ValueError:
                    continue
            elif line.startswith("Update ratio:"):
                val = parts[2]
                ratios["update"] = (
                    float(val.rstrip("%")) / 100.0 if val.endswith("%") else None
                )
            elif line.startswith("Runtime ratio:"):
                val = parts[2]
                ratios["runtime"] = (
                    float(val.rstrip("%")) / 100.0 if val.endswith("%") else None
                )
    return {"rows": rows, "ratios": ratios}

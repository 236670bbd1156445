import csv
import io
import json
import os
from typing import Dict, List, Optional, Sequence

import numpy as np

from simulation import HybridTrajectory
from triggering.gamma import fallback_period

TIBERI_EXAMPLE2_EVENTS = 12907
BENCH_COLUMNS = (
    "mechanism",
    "num_events",
    "mean_interval",
    "min_interval",
    "max_interval",
    "final_V",
    "checks_passed",
)


def _ensure_dir(path: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)


def export_rows(trajectory: HybridTrajectory, stride: int = 1) -> np.ndarray:
    """Indices of the samples written to CSV: every stride-th sample plus
    every jump sample and every flow endpoint."""
    stride = max(1, int(stride))
    n = trajectory.t.size
    keep = np.zeros(n, dtype=bool)
    keep[::stride] = True
    jumps = np.flatnonzero(np.diff(trajectory.j) == 1)
    keep[jumps] = True  # flow endpoint before each jump
    keep[jumps + 1] = True
    keep[0] = keep[-1] = True
    return np.flatnonzero(keep)


def trajectory_table(trajectory: HybridTrajectory, stride: int = 1) -> np.ndarray:
    rows = export_rows(trajectory, stride)
    event_index = trajectory.event_index[rows]
    intervals = np.append(trajectory.intervals, 0.0)[event_index]  # -1 maps to 0
    levels = np.append([event.level for event in trajectory.events], 0)[event_index]
    fallback = np.append([event.fallback for event in trajectory.events], False)[event_index]
    is_jump = np.zeros(trajectory.t.size, dtype=bool)
    is_jump[np.flatnonzero(np.diff(trajectory.j) == 1) + 1] = True
    return np.column_stack(
        [
            trajectory.t[rows],
            trajectory.j[rows],
            trajectory.x[rows],
            trajectory.v[rows],
            intervals,
            is_jump[rows],
            levels,
            fallback,
        ]
    )


def write_trajectory_csv(trajectory: HybridTrajectory, path: str, stride: int = 1):
    n_x = trajectory.x.shape[1]
    header = ["t", "j"] + [f"x{i + 1}" for i in range(n_x)]
    header += ["V", "interval", "event_flag", "level", "fallback_flag"]
    fmt = ["%.17g", "%d"] + ["%.17g"] * n_x + ["%.17g", "%.17g", "%d", "%d", "%d"]
    _ensure_dir(path)
    np.savetxt(
        path,
        trajectory_table(trajectory, stride),
        fmt=fmt,
        delimiter=",",
        header=",".join(header),
        comments="",
    )


def write_json(data: Dict, path: str):
    _ensure_dir(path)
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


## Tables


def bench_row(mechanism: str, summary: Dict) -> Dict:
    return {
        "mechanism": mechanism,
        "num_events": summary["num_events"],
        "mean_interval": summary["mean_interval"],
        "min_interval": summary["min_interval"],
        "max_interval": summary["max_interval"],
        "final_V": summary["final_V"],
        "checks_passed": all(c["passed"] for c in summary["checks"].values()),
    }


def _footer(system: Optional[str]) -> Optional[str]:
    if system == "example2":
        return f"tiberi,{TIBERI_EXAMPLE2_EVENTS} (external, not reproduced)"
    return None


def bench_csv(rows: Sequence[Dict], system: Optional[str] = None) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(row[k]) for k in BENCH_COLUMNS})
    footer = _footer(system)
    if footer and rows:
        buffer.write(f"# {footer}\n")
    return buffer.getvalue()


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "yes" if value else "no"
    if isinstance(value, (float, np.floating)):
        return f"{value:.6g}"
    return str(value)


def bench_text(rows: Sequence[Dict], system: Optional[str] = None) -> str:
    cells: List[List[str]] = [list(BENCH_COLUMNS)]
    cells += [[_fmt(row[k]) for k in BENCH_COLUMNS] for row in rows]
    widths = [max(len(line[i]) for line in cells) for i in range(len(BENCH_COLUMNS))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(line, widths)) for line in cells]
    footer = _footer(system)
    if footer and rows:
        lines.append(footer)
    return "\n".join(lines) + "\n"


def certify_table(bank, delta: float) -> str:
    lines = ["c,n_sets,eps_1,gamma_1,l_gain_1,fallback"]
    for index, level in enumerate(bank.levels):
        first = level.fallback
        lines.append(
            f"{level.c:.6g},{len(level.sets)},{first.epsilon:.6g},{first.gamma:.6g},"
            f"{first.l_gain:.6g},{fallback_period(bank, index, delta):.6g}"
        )
    return "\n".join(lines) + "\n"


def write_surface_csv(gammas, lambdas, table: np.ndarray, path: str):
    _ensure_dir(path)
    with open(path, "w") as f:
        f.write("gamma,lambda,t_max\n")
        for i, gamma in enumerate(gammas):
            for j, lambda_cap in enumerate(lambdas):
                f.write(f"{float(gamma)!r},{float(lambda_cap)!r},{float(table[i, j])!r}\n")

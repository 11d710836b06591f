"""
Writers for the files an experiment leaves in its output directory.

CSV files carry a header row and 17 significant digits, enough to round-trip
float64. Figures need the optional `plot` extra (matplotlib).
"""
import json
import logging
import math
from os import PathLike
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from projeuler.core.harness import ConvergenceReport, MomentTrace
from projeuler.core.model import SdeModel, model_to_dict, theoretical_order
from projeuler.core.pullback import GapSeries, PullbackResult
from projeuler.core.scheme import Trajectory

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    is_loaded_extras = True
except ImportError:
    is_loaded_extras = False

logger = logging.getLogger(__name__)

PathType = Union[str, PathLike]
Line = Tuple[np.ndarray, np.ndarray, str]


def write_csv(path: PathType, header: Sequence[str], columns: Sequence[np.ndarray]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = np.column_stack([np.asarray(c, dtype=np.float64) for c in columns])
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=",".join(header), comments="")
    return path


def _state_header(dim: int) -> List[str]:
    return ["t"] + [f"x_{i}" for i in range(1, dim + 1)]


def write_trajectory(trajectory: Trajectory, path: PathType) -> Path:
    """`t,x_1..x_d` per node."""
    states = trajectory.states.reshape(trajectory.steps + 1, -1)
    columns = [trajectory.times] + [states[:, i] for i in range(states.shape[1])]
    return write_csv(path, _state_header(states.shape[1]), columns)


def write_pullback(result: PullbackResult, out_dir: PathType) -> List[Path]:
    """`pullback.csv` with the Cauchy gaps and `solution.csv` with the deepest window states."""
    out_dir = Path(out_dir)
    k = np.arange(2, len(result.cauchy_gaps) + 2)
    written = [write_csv(out_dir / "pullback.csv", ["k", "cauchy_gap"], [k, result.cauchy_gaps])]
    states = result.solution.reshape(len(result.window_times), -1)
    columns = [result.window_times] + [states[:, i] for i in range(states.shape[1])]
    written.append(write_csv(out_dir / "solution.csv", _state_header(states.shape[1]), columns))
    return written


def write_gap_series(series: GapSeries, path: PathType, with_sem: bool = False) -> Path:
    if with_sem:
        return write_csv(
            path, ["t", "gap_sq", "sem"], [series.times, series.gaps_sq, series.sem]
        )
    return write_csv(path, ["t", "gap_sq"], [series.times, series.gaps_sq])


def write_convergence(report: ConvergenceReport, path: PathType) -> Path:
    return write_csv(path, ["h", "mse", "sem"], [report.hs, report.mses, report.sems])


def write_rate(report: ConvergenceReport, model: SdeModel, path: PathType) -> Path:
    """
    `key=value` lines with the fitted rate and the run settings.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = {
        "kappa": report.kappa,
        "log_c": report.log_c,
        "residual": report.residual,
        "m_paths": report.m_paths,
        "ref_h": report.ref_h,
        "theoretical_order": theoretical_order(model),
        "model": model.name,
    }
    with open(path, "w") as fp:
        for key, value in lines.items():
            fp.write(f"{key}={_format(value)}\n")
    return path


def read_rate(path: PathType) -> Dict[str, str]:
    with open(path) as fp:
        return dict(line.rstrip("\n").split("=", 1) for line in fp if "=" in line)


def _format(value: Any) -> str:
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.17g}"
    return str(value)


def write_moments(trace: MomentTrace, path: PathType) -> Path:
    return write_csv(path, ["t", "mean_sq"], [trace.times, trace.mean_sq])


def write_model(model: SdeModel, path: PathType) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fp:
        json.dump(model_to_dict(model), fp, indent=2)
        fp.write("\n")
    return path


def plot_lines(
    path: PathType,
    lines: Sequence[Line],
    title: str,
    xlabel: str,
    ylabel: str,
    loglog: bool = False,
) -> Optional[Path]:
    """
    Static SVG line chart. Returns None, with a warning, when matplotlib is missing.
    """
    if not is_loaded_extras:
        logger.warning("matplotlib is not installed; skipping figures (install the 'plot' extra)")
        return None
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(7, 4))
    for x, y, label in lines:
        ax.plot(x, y, marker="o" if loglog else None, label=label)
    if loglog:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(lines) > 1:
        ax.legend()
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)
    return path


def plot_convergence(report: ConvergenceReport, model: SdeModel, path: PathType) -> Optional[Path]:
    """Log-log errors with a reference line of the theoretical order through the finest point."""
    hs = report.hs
    errors = np.sqrt(report.mses)
    order = theoretical_order(model)
    lines: List[Line] = [(hs, errors, "root mean-square error")]
    if errors[0] > 0:
        lines.append((hs, errors[0] * (hs / hs[0]) ** order, f"slope {order:g}"))
    return plot_lines(path, lines, model.name, "h", "e_h", loglog=True)

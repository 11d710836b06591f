import argparse
import json
import logging
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

import projeuler
from projeuler.core.errors import BlowUpError, ConfigError, PathBudgetError
from projeuler.core.harness import mse_convergence, moment_monitor
from projeuler.core.inspection import RunStatistics, Stopwatch
from projeuler.core.model import (
    admissible_step_bound,
    model_to_dict,
    offset_norms,
    periodicity_defect,
    probe_growth,
    probe_monotonicity,
    scheme_constants,
)
from projeuler.core.pullback import contraction_gap, periodicity_series, pullback_solve
from projeuler.core.scheme import SchemeConfig, integrate
from projeuler.core.wiener import GridSpec, generate
from projeuler.models.examples import preset_names
from projeuler.utils import artifacts
from projeuler.utils.config import ExperimentConfig, build_config, read_document

logger = logging.getLogger("projeuler.cli")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_NOT_CONVERGED = 4

# A command returns its one-line summary, its statistics and whether it met its
# convergence criterion.
Outcome = Tuple[str, RunStatistics, bool]


def argparser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        "-c",
        default=None,
        metavar="<config.json>",
        help="JSON experiment document. Command line options override its values.",
    )
    common.add_argument(
        "--preset",
        "-p",
        default=None,
        help=f"Built-in model, one of: {', '.join(preset_names())}.",
    )
    common.add_argument("--seed", type=int, default=None, help="Seed of the noise. Defaults to 0.")
    common.add_argument(
        "--out",
        "-o",
        default=None,
        help="Output directory for the artifacts. Defaults to the current directory.",
    )
    common.add_argument(
        "--jobs",
        "-j",
        type=int,
        default=None,
        help="Number of worker processes; 0 means one per CPU. Defaults to $RPS_THREADS or 1.",
    )
    common.add_argument(
        "--plot",
        action="store_true",
        default=None,
        help="Also write SVG figures (needs matplotlib).",
    )
    common.add_argument(
        "--dump-stats",
        default=None,
        metavar="<path to stats.json>",
        help="Dump run statistics to file. If the file exists, it will be appended.",
    )
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", "-v", action="store_true", help="Log progress.")
    verbosity.add_argument("--quiet", "-q", action="store_true", help="Log errors only.")

    parser = argparse.ArgumentParser(
        prog="projeuler",
        description="Projected Euler experiments on random periodic solutions of SDEs.",
    )
    parser.add_argument("--version", action="version", version=projeuler.__version__)
    sub = parser.add_subparsers(dest="command", metavar="<command>", required=True)
    sub.add_parser("simulate", parents=[common], help="Integrate one path, write trajectory.csv.")
    sub.add_parser(
        "pullback", parents=[common], help="Pull-back approximation, write pullback.csv."
    )
    sub.add_parser(
        "contract", parents=[common], help="Two initial values, mean-square gap per node."
    )
    periodicity = sub.add_parser(
        "periodicity", parents=[common], help="Compare a path with its Wiener-shifted copy."
    )
    periodicity.add_argument(
        "--shift-periods",
        type=int,
        default=None,
        help="Shift in whole periods. Defaults to the preset value.",
    )
    sub.add_parser(
        "converge", parents=[common], help="Mean-square convergence rate, write rate.txt."
    )
    sub.add_parser("moments", parents=[common], help="Monte Carlo second moment per node.")
    sub.add_parser(
        "check-model", parents=[common], help="Probe the recorded constants of a model."
    )
    return parser


def _xi(config: ExperimentConfig, key: str = "xi") -> np.ndarray:
    return np.broadcast_to(
        np.asarray(config.params[key], dtype=np.float64), (config.model.dim,)
    )


def _progress(args: argparse.Namespace) -> bool:
    return not args.quiet and sys.stderr.isatty()


def run_simulate(config: ExperimentConfig, args: argparse.Namespace) -> Outcome:
    p = config.params
    h = config.scheme.h
    grid = GridSpec.covering(p["t0"], p["T"], h)
    steps = grid.index_of(p["T"])
    stats = RunStatistics()
    with Stopwatch(stats, 1, steps):
        path = generate(grid, config.model.noise_dim, config.seed, p["stream_id"])
        trajectory = integrate(config.model, config.scheme, path, p["t0"], steps, _xi(config))
    artifacts.write_trajectory(trajectory, config.out / "trajectory.csv")
    if config.plot:
        states = trajectory.states
        artifacts.plot_lines(
            config.out / "trajectory.svg",
            [(trajectory.times, states[:, i], f"x_{i + 1}") for i in range(states.shape[1])],
            config.model.name,
            "t",
            "x",
        )
    terminal = ", ".join(f"{v:.6g}" for v in trajectory.states[-1])
    return f"simulate: {steps} steps of h={h:g}, X(T)=[{terminal}]", stats, True


def run_pullback(config: ExperimentConfig, args: argparse.Namespace) -> Outcome:
    p = config.params
    stats = RunStatistics()
    with Stopwatch(stats, 1, 0):
        result = pullback_solve(
            config.model,
            config.scheme,
            config.seed,
            _xi(config),
            (p["window"][0], p["window"][1]),
            int(p["k_max"]),
            float(p["tol"]),
            p["stream_id"],
        )
    artifacts.write_pullback(result, config.out)
    if config.plot:
        artifacts.plot_lines(
            config.out / "pullback.svg",
            [(np.arange(2, result.k_used + 1), result.cauchy_gaps, "Cauchy gap")],
            config.model.name,
            "k",
            "sup gap",
        )
    last = f"{result.cauchy_gaps[-1]:.3g}" if len(result.cauchy_gaps) else "n/a"
    state = "converged" if result.converged else "not converged"
    return f"pullback: {state} at k={result.k_used}, last gap {last}", stats, result.converged


def run_contract(config: ExperimentConfig, args: argparse.Namespace) -> Outcome:
    p = config.params
    series = contraction_gap(
        config.model,
        config.scheme,
        int(p["m_paths"]),
        config.seed,
        _xi(config),
        _xi(config, "eta"),
        p["t0"],
        p["T"],
        num_jobs=config.jobs,
        progress=_progress(args),
    )
    artifacts.write_gap_series(series, config.out / "contraction.csv", with_sem=True)
    if config.plot:
        artifacts.plot_lines(
            config.out / "contraction.svg",
            [(series.times, series.gaps_sq, "E|X(xi) - X(eta)|^2")],
            config.model.name,
            "t",
            "mean-square gap",
        )
    summary = (
        f"contract: terminal mean-square gap {series.terminal:.6g} "
        f"(sem {float(series.sem[-1]):.3g}, M={series.m_paths})"
    )
    return summary, series.statistics, True


def run_periodicity(config: ExperimentConfig, args: argparse.Namespace) -> Outcome:
    p = config.params
    stats = RunStatistics()
    with Stopwatch(stats, 1, 0):
        series = periodicity_series(
            config.model,
            config.scheme,
            config.seed,
            _xi(config),
            p["t0"],
            (p["observe"][0], p["observe"][1]),
            int(p["shift_periods"]),
            p["stream_id"],
        )
    artifacts.write_gap_series(series, config.out / "gap.csv")
    if config.plot and series.overlay is not None:
        original, shifted = series.overlay
        artifacts.plot_lines(
            config.out / "periodicity.svg",
            [
                (series.times, original[:, 0], "X(t - D, w)"),
                (series.times, shifted[:, 0], "X(t, theta_{-D} w)"),
            ],
            config.model.name,
            "t",
            "x_1",
        )
    sup_gap = float(np.sqrt(np.max(series.gaps_sq)))
    return f"periodicity: sup gap {sup_gap:.6g}", stats, True


def run_converge(config: ExperimentConfig, args: argparse.Namespace) -> Outcome:
    p = config.params
    report = mse_convergence(
        config.model,
        p["t0"],
        p["T"],
        int(p["ref_levels"]),
        [int(i) for i in p["test_exponents"]],
        int(p["m_paths"]),
        config.seed,
        _xi(config),
        kind=config.scheme.kind,
        admissibility=config.scheme.admissibility,
        num_jobs=config.jobs,
        progress=_progress(args),
    )
    artifacts.write_convergence(report, config.out / "convergence.csv")
    artifacts.write_rate(report, config.model, config.out / "rate.txt")
    if config.plot:
        artifacts.plot_convergence(report, config.model, config.out / "convergence.svg")
    summary = f"converge: kappa={report.kappa:.4f}, residual={report.residual:.4f}"
    return summary, report.statistics, True


def run_moments(config: ExperimentConfig, args: argparse.Namespace) -> Outcome:
    p = config.params
    trace = moment_monitor(
        config.model,
        config.scheme,
        p["t0"],
        int(p["steps"]),
        int(p["m_paths"]),
        config.seed,
        _xi(config),
        num_jobs=config.jobs,
        progress=_progress(args),
    )
    artifacts.write_moments(trace, config.out / "moments.csv")
    if config.plot:
        artifacts.plot_lines(
            config.out / "moments.svg",
            [(trace.times, trace.mean_sq, "E|X|^2")],
            config.model.name,
            "t",
            "second moment",
        )
    return f"moments: max E|X|^2 = {trace.max_over_run:.6g}", trace.statistics, True


def run_check_model(config: ExperimentConfig, args: argparse.Namespace) -> Outcome:
    model = config.model
    radius = float(config.params["radius"])
    samples = int(config.params["samples"])
    stats = RunStatistics()
    with Stopwatch(stats, 0, 0):
        alpha1 = probe_monotonicity(model, radius, samples, config.seed)
        c1, c2 = probe_growth(model, radius, samples, config.seed)
        defect = periodicity_defect(model, samples, config.seed, radius)
        f0, g0 = offset_norms(model)
        bound = admissible_step_bound(model, scheme_constants(model))
    report: Dict[str, Any] = {
        "model": model_to_dict(model),
        "probes": {
            "radius": radius,
            "samples": samples,
            "alpha1": alpha1,
            "growth_c1": c1,
            "growth_c2": c2,
            "periodicity_defect": defect,
            "f0_norm": f0,
            "g0_norm": g0,
        },
        "admissible_h": bound,
        "h": config.scheme.h,
    }
    violations: List[str] = []
    if alpha1 > model.alpha1:
        violations.append(f"alpha1 {model.alpha1:g} < sampled {alpha1:.6g}")
    if c1 > model.growth_c1:
        violations.append(f"growth_c1 {model.growth_c1:g} < sampled {c1:.6g}")
    if c2 > model.growth_c2:
        violations.append(f"growth_c2 {model.growth_c2:g} < sampled {c2:.6g}")
    if defect > 0:
        violations.append(f"coefficients are not {model.period:g}-periodic (defect {defect:.3g})")
    report["violations"] = violations
    for v in violations:
        logger.warning(f"{model.name}: {v}")

    config.out.mkdir(parents=True, exist_ok=True)
    artifacts.write_model(model, config.out / "model.json")
    with open(config.out / "check.json", "w") as fp:
        json.dump(report, fp, indent=2)
        fp.write("\n")
    if violations and config.strict:
        raise ConfigError(f"model {model.name!r} violates its recorded constants")
    summary = (
        f"check-model: {len(violations)} violation(s), admissible h <= {bound:.3g}"
        f" (configured h={config.scheme.h:g})"
    )
    return summary, stats, True


COMMANDS: Dict[str, Callable[[ExperimentConfig, argparse.Namespace], Outcome]] = {
    "simulate": run_simulate,
    "pullback": run_pullback,
    "contract": run_contract,
    "periodicity": run_periodicity,
    "converge": run_converge,
    "moments": run_moments,
    "check-model": run_check_model,
}


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.INFO if args.verbose else logging.ERROR if args.quiet else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "preset": args.preset,
        "seed": args.seed,
        "out": args.out,
        "plot": args.plot,
        "jobs": args.jobs,
        "shift_periods": getattr(args, "shift_periods", None),
    }


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Parse `argv`, run one experiment and return the process exit code."""
    try:
        args = argparser().parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_CONFIG
    _configure_logging(args)

    try:
        document = read_document(args.config) if args.config else {}
        config = build_config(args.command, document, _overrides(args))
        summary, stats, converged = COMMANDS[args.command](config, args)
    except BlowUpError as e:
        logger.error(f"numerical blow-up: {e}")
        return EXIT_BLOWUP
    except (ConfigError, PathBudgetError, ValueError) as e:
        logger.error(str(e))
        return EXIT_CONFIG

    print(summary)
    print(
        json.dumps(stats.get_human_readable_values(), ensure_ascii=False, indent=2),
        file=sys.stderr,
    )
    if args.dump_stats:
        with open(args.dump_stats, "a") as fp:
            fp.write(json.dumps(stats.get_human_readable_values(), ensure_ascii=False) + "\n")
    if not converged and config.strict:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()

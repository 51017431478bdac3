"""Command-line entry point: ``stlplan {run,ablate,plot,verify,cases}``.

Exit codes: 0 everything succeeded, 1 some task or check failed,
2 configuration or input error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench
from .backend import TransportError, make_backend
from .motion import DEFAULT_LIBRARY, SEED_FILE, build_library, builtin_controller, load_library, save_library, simulate
from .motion.cases import evaluate_case
from .pipeline import ConfigError, PipelineConfig, run_pipeline
from .plot import export_plot
from .reports import describe_path
from .signal import derive_channels, load_trajectory
from .stl import EmptyWindowError, StlSyntaxError, UnboundPredicateError, explain, parse_stl, robustness
from .world import DATA_DIR, ScenarioError, builtin_scenario, load_scenario

DEFAULT_SUITE = DATA_DIR / "suites" / "fig3.yaml"

OK, FAILED, CONFIG_ERROR = 0, 1, 2


def _config(args) -> PipelineConfig:
    config = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    if getattr(args, "no_stl", False):
        config = PipelineConfig.from_dict({**config.to_dict(), "ablation_no_stl": True})
    return config


def _factory(args):
    # fail fast on a misconfigured backend before any task runs
    make_backend(args.backend, replay_dir=args.replay_dir)

    def factory(task):
        kwargs = {"record_dir": args.record_dir} if args.backend == "llm" and args.record_dir else {}
        return make_backend(args.backend, replay_dir=args.replay_dir, **kwargs)

    return factory


def _scenario(ref: str):
    path = Path(ref)
    return load_scenario(path) if path.exists() else builtin_scenario(ref)


def cmd_run(args) -> int:
    config = _config(args)
    report = bench.run_suite(args.suite, _factory(args), config, args.jobs, args.backend)
    sys.stdout.write(report.table())
    if args.out:
        report.write(args.out)
    return OK if report.all_success else FAILED


def cmd_ablate(args) -> int:
    config = _config(args)
    report = bench.run_ablation(args.suite, _factory(args), config, args.jobs, args.backend)
    sys.stdout.write(report.table())
    if args.out:
        report.write(args.out)
    return OK


def cmd_plot(args) -> int:
    if args.trajectory:
        if not args.scenario:
            raise ConfigError("--trajectory needs --scenario")
        scenario = _scenario(args.scenario)

        class _Artifacts:
            trajectory = load_trajectory(args.trajectory)
            waypoints = None

        svg, traj = export_plot(_Artifacts, scenario, args.out)
    else:
        if not args.task:
            raise ConfigError("give --task (or --trajectory with --scenario)")
        tasks = {t.id: t for t in bench.load_suite(args.suite)}
        if args.task not in tasks:
            raise ConfigError(f"no task {args.task!r} in suite; have {', '.join(sorted(tasks))}")
        task = tasks[args.task]
        result = run_pipeline(task.instruction, task.formula, task.scenario, _factory(args)(task), _config(args), task.id)
        if not result.success:
            print(f"{task.id}: planning failed: {result.reason}")
            return FAILED
        svg, traj = export_plot(result.artifacts, task.scenario, args.out)
    print(f"wrote {svg} and {traj}")
    return OK


def cmd_verify(args) -> int:
    scenario = _scenario(args.scenario)
    text = Path(args.stl_file).read_text(encoding="utf-8") if args.stl_file else args.stl
    if not text:
        raise ConfigError("give --stl or --stl-file")
    formula = parse_stl(text)
    traj = derive_channels(load_trajectory(args.trajectory), scenario)
    rho = robustness(formula, traj, scenario)
    print(f"rho = {rho!r}")
    print(describe_path(explain(formula, traj, scenario)))
    return OK if rho >= 0 else FAILED


def cmd_cases(args) -> int:
    target = Path(args.library)
    if args.build:
        library = build_library(args.seeds, args.dt)
        save_library(library, target)
        print(f"certified {len(library)} cases into {target}")
        return OK
    library = load_library(target)
    failed = 0
    for case in library:
        sc = case.scenario
        traj = simulate(builtin_controller(sc.v_max, sc.omega_max), case.waypoints, sc, args.dt)
        rho = evaluate_case(case, traj)
        same = case.reference is not None and np.array_equal(traj.x, case.reference.x) and np.array_equal(traj.y, case.reference.y)
        ok = rho >= 0 and same
        failed += not ok
        print(f"{'ok  ' if ok else 'FAIL'} {case.id:<40} rho={rho:.4f} reference={'match' if same else 'differs'}")
    print(f"{len(library) - failed}/{len(library)} cases certified")
    return OK if failed == 0 else FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stlplan", description="Verified cascaded planning with STL robustness.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def planning(sp):
        sp.add_argument("--suite", default=str(DEFAULT_SUITE), help="suite YAML (default: shipped fixture suite)")
        sp.add_argument("--backend", choices=("oracle", "replay", "llm"), default="oracle")
        sp.add_argument("--replay-dir", help="fixture directory for --backend replay")
        sp.add_argument("--record-dir", help="save llm replies in replay layout")
        sp.add_argument("--config", help="pipeline config YAML")
        sp.add_argument("--no-stl", action="store_true", help="leave STL out of task-planner prompts")
        sp.add_argument("--jobs", type=int, default=1, help="tasks run in parallel")

    sp = sub.add_parser("run", help="run a task suite and report SR/AT/AC")
    planning(sp)
    sp.add_argument("--out", help="directory for report.yaml, report.txt and runlog.jsonl")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("ablate", help="run a suite with and without STL in the prompts")
    planning(sp)
    sp.add_argument("--out", help="output directory")
    sp.set_defaults(func=cmd_ablate)

    sp = sub.add_parser("plot", help="plan one suite task (or load a trajectory) and write an SVG")
    planning(sp)
    sp.add_argument("--task", help="task id within the suite")
    sp.add_argument("--trajectory", help="plot this trajectory file instead of planning")
    sp.add_argument("--scenario", help="scenario file or built-in name, with --trajectory")
    sp.add_argument("--out", required=True, help="SVG path; the .traj export goes next to it")
    sp.set_defaults(func=cmd_plot)

    sp = sub.add_parser("verify", help="evaluate a formula on a trajectory file")
    sp.add_argument("--trajectory", required=True)
    sp.add_argument("--scenario", required=True, help="scenario file or built-in name")
    sp.add_argument("--stl", help="formula text")
    sp.add_argument("--stl-file", help="file holding the formula")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("cases", help="re-certify (or rebuild) the motional case library")
    sp.add_argument("--library", default=str(DEFAULT_LIBRARY))
    sp.add_argument("--build", action="store_true", help="regenerate the library from seed cases")
    sp.add_argument("--seeds", default=str(SEED_FILE))
    sp.add_argument("--dt", type=float, default=0.05)
    sp.set_defaults(func=cmd_cases)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return CONFIG_ERROR
    try:
        return args.func(args)
    except (ConfigError, bench.SuiteError, ScenarioError, StlSyntaxError, UnboundPredicateError, EmptyWindowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except TransportError as exc:
        print(f"error: backend unreachable: {exc}", file=sys.stderr)
        return FAILED


if __name__ == "__main__":
    sys.exit(main())

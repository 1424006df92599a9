"""Command-line front door.

Subcommands: ``space`` (generate and size a design space), ``partition``
(enumerate, profile and select representatives), ``explore`` (full run),
``report`` (render summary and trace CSVs), ``oracle`` (exhaustive best on
capped spaces). Exit codes: 0 success, 2 configuration error, 3 no
feasible point.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, NoFeasiblePointError, NotFoundError, PragmaDseError
from .evaluate import DEFAULT_TU, CachingEvaluator, MockHlsEvaluator
from .explore import explore_exhaustive
from .kernel import generate_design_space, parse_kernel_model, space_size
from .orchestrator import RunConfig, render_report, run
from .partition import enumerate_partitions, profile_partition, select_representatives
from .space import parse_design_space, serialize_design_space

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_FEASIBLE = 3


def _add_common(p: argparse.ArgumentParser, space_opt: bool = True) -> None:
    p.add_argument("--model", required=True, help="kernel model file")
    if space_opt:
        p.add_argument("--space", help="design-space file (generated from the model if absent)")
    p.add_argument("--evaluator", default="mock", help="evaluation backend (only 'mock' ships)")
    p.add_argument("--tu", type=float, default=DEFAULT_TU, help="utilization threshold in (0, 1)")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pragmadse", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("space", help="generate and size a design space")
    _add_common(p)
    p.add_argument("--out", help="write the (generated) space file here")

    p = sub.add_parser("partition", help="enumerate, profile and select partitions")
    _add_common(p)
    p.add_argument("--reps", type=int, default=1, help="number of representatives")

    p = sub.add_parser("explore", help="full bottleneck-guided exploration run")
    _add_common(p)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--timeout", type=float, default=3600.0, help="wall-clock budget in seconds")
    p.add_argument("--max-evals", type=int, default=None, help="evaluation-count budget")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--resume", action="store_true", help="continue from checkpoints in --out")
    p.add_argument("--serial", action="store_true", help="serialized scheduling (deterministic)")
    p.add_argument("--reps", type=int, default=None, help="representative partitions (default: --threads)")

    p = sub.add_parser("report", help="render summary and trace CSVs for a run")
    p.add_argument("--out", required=True, help="run output directory")

    p = sub.add_parser("oracle", help="exhaustive search on a capped space")
    _add_common(p)
    p.add_argument("--cap", type=int, default=4096, help="maximum valid points to enumerate")

    return parser


def _load_model_and_space(args):
    if getattr(args, "evaluator", "mock") != "mock":
        raise ConfigError(f"unknown evaluator {args.evaluator!r} (only 'mock' ships)")
    with open(args.model, encoding="utf-8") as fh:
        kernel = parse_kernel_model(fh.read())
    if getattr(args, "space", None):
        with open(args.space, encoding="utf-8") as fh:
            space = parse_design_space(fh.read(), loop_tree=kernel)
    else:
        space = generate_design_space(kernel)
    return kernel, space


def cmd_space(args) -> int:
    kernel, space = _load_model_and_space(args)
    size = space_size(space)
    print(f"parameters: {space.k}")
    print(f"grid points: {size.grid_points}")
    print(f"valid points: {size.valid_points}{'' if size.exact else ' (estimated)'}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(serialize_design_space(space))
        print(f"space written to {args.out}")
    return EXIT_OK


def cmd_partition(args) -> int:
    kernel, space = _load_model_and_space(args)
    evaluator = CachingEvaluator(MockHlsEvaluator(kernel, space, tu=args.tu))
    partitions = enumerate_partitions(space)
    profiles = [profile_partition(p, evaluator) for p in partitions]
    selected = set(select_representatives(profiles, args.reps, args.seed))
    print(f"partitions: {len(partitions)}")
    for part, prof in zip(partitions, profiles):
        mark = "*" if part.id in selected else " "
        cycles = "infeasible" if not prof.feasible else f"{prof.cycles:g}"
        split = ", ".join(f"{k}={v}" for k, v in sorted(part.mode_split.items())) or "(whole space)"
        print(f" {mark} partition {part.id}: {cycles:>12}  {split}")
    return EXIT_OK


def cmd_explore(args) -> int:
    rc = RunConfig(
        model_path=args.model,
        space_path=args.space,
        evaluator=args.evaluator,
        threads=args.threads,
        dse_timeout=args.timeout,
        tu=args.tu,
        seed=args.seed,
        out_dir=args.out,
        resume=args.resume,
        serial=args.serial,
        max_evals=args.max_evals,
        representatives=args.reps,
    )
    report = run(rc)
    render_report(args.out)
    if report.no_feasible_point:
        print("no feasible point found; default configuration returned")
        return EXIT_NO_FEASIBLE
    print(f"best cycles: {report.best_cycles:g}")
    print(f"report written under {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    print(render_report(args.out), end="")
    return EXIT_OK


def cmd_oracle(args) -> int:
    kernel, space = _load_model_and_space(args)
    evaluator = CachingEvaluator(MockHlsEvaluator(kernel, space, tu=args.tu))
    best = explore_exhaustive(space, evaluator, cap=args.cap)
    result = evaluator.evaluate(best)
    print(f"oracle best cycles: {result.cycles:g} ({evaluator.backend_calls} evaluations)")
    print(json.dumps(best.as_dict(), indent=2, sort_keys=True))
    return EXIT_OK


_COMMANDS = {
    "space": cmd_space,
    "partition": cmd_partition,
    "explore": cmd_explore,
    "report": cmd_report,
    "oracle": cmd_oracle,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except NoFeasiblePointError as e:
        print(f"no feasible point: {e}", file=sys.stderr)
        return EXIT_NO_FEASIBLE
    except (ConfigError, NotFoundError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except PragmaDseError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""
Command line front end.

    pcone project scenario.yaml
    pcone drive scenario.yaml --out stress.csv
    pcone wave scenario.yaml --out bar.csv
    pcone check --seed 42 --samples 10000

Exit codes: 0 on success, 1 on invalid input, 2 on a numerical failure or a
failed invariant suite.
"""
import argparse
import logging
import os.path as osp
import sys
from typing import List, Optional

import yaml

from . import __version__
from .checks import DEFAULT_ORDER, results_frame, run_checks
from .config import CHECK_SAMPLES, SCENARIO_VERSION
from .constitutive import integrate_path
from .errors import NumericalError, ValidationError
from .oracle import oracle_normal_projection
from .cone_projection import project
from .scenario import build_drive_case, build_project_case, build_wave_scenario, load_scenario
from .util.config import DictAction
from .util.fileio import dump
from .util.logger import setup_logger
from .wave_sim_1d import run

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2

RNG_NAME = "numpy.random.PCG64"
FLOAT_FORMAT = "%.17g"


def _seed(args, doc) -> int:
    if args.seed is not None:
        return args.seed
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ValidationError(f"must be a non-negative integer, got {seed!r}", field="seed")
    return seed


def _rng_tag(seed: int) -> str:
    return f"{RNG_NAME} seed={seed}"


def _write(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w") as f:
        f.write(text)
    logger.info("wrote %s", out)


def _csv(frame, header: str) -> str:
    return f"# {header}\n" + frame.to_csv(index=False, float_format=FLOAT_FORMAT)


def _stem(out: str) -> str:
    return osp.splitext(out)[0]


def _write_resolved(cfg, out: Optional[str]) -> None:
    """Keep the scenario that produced `out`, with bases merged and overrides applied, next to it."""
    if out is None:
        return
    resolved = _stem(out) + ".scenario.yaml"
    cfg.dump(resolved)
    logger.info("wrote %s", resolved)


def cmd_project(args) -> int:
    cfg = load_scenario(args.scenario, args.cfg_options)
    doc = cfg.to_dict()
    case = build_project_case(doc)
    seed = _seed(args, doc)
    split = project(case.domain, case.sigma, case.tau)
    result = {
        "rng": _rng_tag(seed),
        "tangent": split.tangent.to_list(),
        "normal": split.normal.to_list(),
        "branch": split.branch,
    }
    if case.oracle:
        numeric = oracle_normal_projection(case.domain, case.sigma, case.tau, seed=seed)
        result["oracle_normal"] = numeric.to_list()
        result["oracle_gap"] = (numeric - split.normal).norm()
    _write(dump(result, file_format="json") + "\n", args.out)
    _write_resolved(cfg, args.out)
    return EXIT_OK


def cmd_drive(args) -> int:
    cfg = load_scenario(args.scenario, args.cfg_options)
    doc = cfg.to_dict()
    case = build_drive_case(doc)
    seed = _seed(args, doc)
    record = integrate_path(
        case.domain, case.moduli, case.initial, case.path, case.dt, case.drift, progress=args.progress
    )
    header = f"pcone drive version={SCENARIO_VERSION} rng={_rng_tag(seed)}"
    _write(_csv(record.to_frame(), header), args.out)
    _write_resolved(cfg, args.out)
    return EXIT_OK


def _summary_path(args) -> Optional[str]:
    if args.summary:
        return args.summary
    if args.out:
        return _stem(args.out) + ".summary.json"
    return None


def cmd_wave(args) -> int:
    cfg = load_scenario(args.scenario, args.cfg_options)
    doc = cfg.to_dict()
    scenario = build_wave_scenario(doc)
    seed = _seed(args, doc)
    record = run(scenario, progress=args.progress)
    header = f"pcone wave version={SCENARIO_VERSION} rng={_rng_tag(seed)}"
    _write(_csv(record.to_frame(), header), args.out)
    _write_resolved(cfg, args.out)
    summary = dict(rng=_rng_tag(seed), **record.summary())
    summary_path = _summary_path(args)
    if summary_path is None:
        logger.info("summary:\n%s", dump({k: v for k, v in summary.items() if k != "energy"}, file_format="json"))
    else:
        dump(summary, summary_path, file_format="json")
        logger.info("wrote %s", summary_path)
    return EXIT_OK


def cmd_check(args) -> int:
    seed = 0 if args.seed is None else args.seed
    if args.samples < 1:
        raise ValidationError(f"must be positive, got {args.samples}", field="samples")
    if not args.tol_scale > 0.0:
        raise ValidationError(f"must be positive, got {args.tol_scale}", field="tol_scale")
    results = run_checks(seed, args.samples, args.tol_scale, suites=args.suites, progress=args.progress)
    frame = results_frame(results)
    sys.stdout.write(frame.drop(columns=["detail"]).to_string(index=False) + "\n")
    for r in results:
        if not r.passed:
            logger.warning("%s: %s", r.name, r.detail)
    if args.out:
        report = {
            "rng": _rng_tag(seed),
            "samples": args.samples,
            "tol_scale": args.tol_scale,
            # wall-clock seconds stay out so that reports are reproducible
            "suites": [{k: v for k, v in r._asdict().items() if k != "seconds"} for r in results],
        }
        dump(report, args.out, file_format="json")
        logger.info("wrote %s", args.out)
    passed = all(r.passed for r in results)
    logger.info("%d/%d suites passed", sum(r.passed for r in results), len(results))
    return EXIT_OK if passed else EXIT_NUMERICAL


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed of the PCG64 generator (default: scenario seed or 0)")
    common.add_argument("--out", type=str, default=None, help="output file (default: stdout)")
    common.add_argument(
        "--tol-scale", dest="tol_scale", type=float, default=1.0, help="multiplier on every check threshold (default: 1)"
    )
    common.add_argument("--log", type=str, default=None, help="also write the log to this file or directory")
    common.add_argument(
        "--cfg-options",
        dest="cfg_options",
        nargs="+",
        action=DictAction,
        default=None,
        help="override scenario entries, e.g. grid.n_cells=400 k=0.5",
    )
    common.add_argument("--no-progress", dest="progress", action="store_false", help="hide progress bars")
    common.add_argument("-v", "--verbose", action="store_true", help="log debug messages to the console")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="pcone",
        description="Elastic perfectly plastic rate laws through tangent and normal cone projections.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} (scenarios {SCENARIO_VERSION})")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("project", parents=[common], help="split a strain rate at one stress state")
    p.add_argument("scenario", help="yaml/json file with criterion, k, sigma and tau")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("drive", parents=[common], help="integrate a material point along a strain-rate path")
    p.add_argument("scenario", help="yaml/json file with moduli, criterion, path, dt and drift")
    p.set_defaults(func=cmd_drive)

    p = sub.add_parser("wave", parents=[common], help="simulate waves in a 1-D bar")
    p.add_argument("scenario", help="yaml/json file with grid, moduli, criterion, bc, dt/cfl and t_end")
    p.add_argument("--summary", type=str, default=None, help="summary JSON path (default: next to --out)")
    p.set_defaults(func=cmd_wave)

    p = sub.add_parser("check", parents=[common], help="run the randomized invariant suites")
    p.add_argument(
        "--samples", type=int, default=CHECK_SAMPLES, help=f"random samples per suite family (default: {CHECK_SAMPLES})"
    )
    p.add_argument("--suites", nargs="+", choices=DEFAULT_ORDER, default=None, help="run only these suites")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logger(args.log, level=logging.DEBUG if args.verbose else logging.INFO)
    try:
        return args.func(args)
    except NumericalError as e:
        logger.error("numerical failure: %s", e)
        return EXIT_NUMERICAL
    except (ValidationError, ValueError, KeyError, OSError, yaml.YAMLError) as e:
        logger.error("invalid input: %s", e)
        return EXIT_INVALID

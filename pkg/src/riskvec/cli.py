"""Command line entry point.

    riskvec <subcommand> --config PATH [--seed N] [--out DIR]

Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from . import CONFIG_SCHEMA_VERSION, __version__
from .errors import ValidationError
from .pipeline import STAGE_RUNNERS, STAGES, bundled_path, load_config, run_pipeline

log = logging.getLogger("riskvec")

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # usage mistakes are invalid input, not runtime failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
    p.add_argument("--config", type=Path, required=config_required, help="pipeline config (YAML)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", type=Path, help="output directory (overrides the config)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="riskvec", description="Movement risk scoring from geotagged posts.")
    parser.add_argument("--version", action="version",
                        version=f"config schema {CONFIG_SCHEMA_VERSION} (riskvec {__version__})")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run every stage and write the full bundle")
    _common(run)
    run.add_argument("--figures", action="store_true", help="also render report figures")

    helps = {
        "ingest": "parse posts, select users, build the peer graph",
        "vectors": "per-user trajectories and mean movement vectors",
        "risk": "risk levels and RBQ per user, group vector",
        "classify": "content labels for users and their peers",
        "features": "per-user feature table",
        "regress": "regress RBQ on content features",
    }
    for stage in STAGES:
        _common(sub.add_parser(stage, help=helps[stage]))

    report = sub.add_parser("report", help="render figures and a summary table from a finished run")
    _common(report, config_required=False)

    synth = sub.add_parser("synth", help="generate a synthetic scenario with ground truth")
    synth.add_argument("--config", type=Path, help="scenario parameters (YAML); bundled default if omitted")
    synth.add_argument("--seed", type=int, required=True)
    synth.add_argument("--out", type=Path, required=True, help="directory for the scenario files")
    synth.add_argument("-v", "--verbose", action="store_true")
    return parser


def _pipeline_config(args):
    out = args.out.resolve() if args.out is not None else None
    return load_config(args.config, seed=args.seed, output=out)


def _cmd_run(args) -> None:
    cfg = _pipeline_config(args)
    manifest = run_pipeline(cfg)
    for name in sorted(manifest["files"]):
        print(cfg.output / name)
    print(cfg.output / "run_manifest.json")
    if args.figures:
        from .report import render_report

        for name in render_report(cfg.output):
            print(cfg.output / name)
    log.info("counts: %s", json.dumps(manifest["counts"], sort_keys=True))


def _cmd_stage(args) -> None:
    cfg = _pipeline_config(args)
    for name in STAGE_RUNNERS[args.command](cfg):
        print(cfg.output / name)


def _cmd_report(args) -> None:
    from .report import render_report

    if args.config is None and args.out is None:
        raise ValidationError("report needs --config or --out to locate the run directory")
    out = args.out.resolve() if args.out is not None else load_config(args.config).output
    for name in render_report(out):
        print(out / name)


def _cmd_synth(args) -> None:
    from .synth import ScenarioSpec, synthesize_scenario, write_scenario

    if args.seed < 0:
        raise ValidationError("seed must be non-negative")
    doc = {}
    if args.config is not None:
        try:
            doc = yaml.safe_load(args.config.read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ValidationError(f"cannot read scenario {args.config}: {exc}") from None
    else:
        doc = yaml.safe_load(bundled_path("scenario_default.yaml").read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise ValidationError("scenario file must be a mapping")
    scenario = synthesize_scenario(ScenarioSpec.from_dict(doc), args.seed)
    print(write_scenario(scenario, args.out))


COMMANDS = {"run": _cmd_run, "report": _cmd_report, "synth": _cmd_synth}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS.get(args.command, _cmd_stage)(args)
    except ValidationError as exc:
        print(f"riskvec: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - every other failure maps to the runtime code
        log.debug("runtime failure", exc_info=True)
        print(f"riskvec: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

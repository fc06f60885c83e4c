"""Command-line entry point.

    sopinf <run|generate|train|validate|sweep|svd-report>
           --config <path> [--seed N] [--out DIR] [--jobs K]

The config may be a file path or the name of a bundled preset (cantilever,
overhanging, rotor).  The output directory resolves as --out, then the
config's [output] dir, then the SOPINF_OUT environment variable.  Exit
codes: 0 success, 2 config error, 3 numeric failure, 4 missing artifact.
"""

import argparse
import os
import sys
from importlib import resources
from pathlib import Path

from .errors import ConfigError, MissingArtifactError, SopinfError
from .pipeline import STAGES, load_config, run_all

_COMMANDS = ("run", "generate", "train", "validate", "sweep", "svd-report")


def _resolve_config(name: str) -> str:
    path = Path(name)
    if path.exists():
        return str(path)
    if path.suffix == "" and os.sep not in name:
        preset = resources.files("sopinf.presets") / f"{name}.cfg"
        if preset.is_file():
            return str(preset)
    raise ConfigError(f"config file not found: {name}")


def _resolve_outdir(args, cfg) -> Path:
    if args.out:
        return Path(args.out)
    if cfg.outdir:
        return Path(cfg.outdir)
    env = os.environ.get("SOPINF_OUT")
    if env:
        return Path(env)
    raise ConfigError("output.dir: no output directory (use --out, the config "
                      "[output] section, or SOPINF_OUT)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sopinf",
        description="Structure-preserving reduced-order inference pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name, help=f"{name} stage" if name != "run" else
                           "run the full pipeline")
        p.add_argument("--config", required=True,
                       help="config file path or bundled preset name")
        p.add_argument("--seed", type=int, default=None,
                       help="override the training seed")
        p.add_argument("--out", default=None, help="artifact directory")
        p.add_argument("--jobs", type=int, default=1,
                       help="worker processes for sweep points")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(_resolve_config(args.config), seed_override=args.seed)
        outdir = _resolve_outdir(args, cfg)
        if args.command == "run":
            run_all(cfg, outdir, jobs=args.jobs)
        elif args.command == "sweep":
            STAGES["sweep"](cfg, outdir, jobs=args.jobs)
        else:
            STAGES[args.command](cfg, outdir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MissingArtifactError as exc:
        print(str(exc), file=sys.stderr)
        return 4
    except (SopinfError, ValueError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    print(f"{args.command}: ok ({outdir})")
    return 0


if __name__ == "__main__":
    sys.exit(main())

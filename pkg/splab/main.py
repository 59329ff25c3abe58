from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

ROOT_DIR = Path(__file__).resolve().parent.parent
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

from splab import __version__
from splab.controller import run_experiment
from splab.core.config_loader import EXPERIMENTS, FORMATS, load_config
from splab.core.errors import ConfigError, InvalidInput, InvariantViolation

logger = logging.getLogger("splab")

EXIT_CONFIG = 2
EXIT_INVARIANT = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="splab", description="谱投影估计的桌面规模数值实验")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, help="key = value 格式的配置文件")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="输出文件，缺省写到标准输出")
    parser.add_argument("--format", choices=FORMATS)
    parser.add_argument("--threads", type=int)
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    overrides = {
        "experiment": args.experiment,
        "seed": args.seed,
        "output": args.out,
        "format": args.format,
        "threads": args.threads,
    }
    try:
        config = load_config(args.config, overrides)
        report = run_experiment(config)
        text = report.write(config.format, config.output or None)
        if not config.output:
            sys.stdout.write(text)
        if report.violations:
            raise InvariantViolation(f"{report.violations} 个实例违反扰动不等式")
    except (ConfigError, InvalidInput) as exc:
        print(f"错误：{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        logger.error("%s", exc)
        print(f"内部不变量被破坏：{exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

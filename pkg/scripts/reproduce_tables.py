"""Run the Monte Carlo grid from a config and write text, CSV and JSON summaries.

    python scripts/reproduce_tables.py scripts/configs/desk.yaml -o results/desk
"""

import argparse
import sys
from pathlib import Path

from gmdreg.cli import main as cli_main

HERE = Path(__file__).resolve().parent


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("config", nargs="?", default=str(HERE / "configs" / "desk.yaml"))
    ap.add_argument("-o", "--output", default="results")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args(argv)
    cmd = ["simulate", args.config, "-o", args.output, "--threads", str(args.threads)]
    if args.seed is not None:
        cmd += ["--seed", str(args.seed)]
    return cli_main(cmd)


if __name__ == "__main__":
    sys.exit(main())

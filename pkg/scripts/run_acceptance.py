"""Run the bundled acceptance manifest through the suite runner.

Usage::

    python scripts/run_acceptance.py -o out/acceptance
"""

import argparse
import sys

from altphillips.experiments import cli
from altphillips.experiments.scenario import SCENARIO_DIR


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-o", "--output", default="out/acceptance")
    ap.add_argument("--no-plots", action="store_true")
    args = ap.parse_args(argv)
    cmd = ["suite", str(SCENARIO_DIR / "acceptance.toml"), "-o", args.output]
    if args.no_plots:
        cmd.append("--no-plots")
    return cli.main(cmd)


if __name__ == "__main__":
    sys.exit(main())

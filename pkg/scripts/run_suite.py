"""Run the full evaluation suite and write trials.csv + summary.json."""

import sys

from menuplan.cli import main

if __name__ == "__main__":
    sys.exit(main(["eval", "--out-dir", "eval-out", *sys.argv[1:]]))

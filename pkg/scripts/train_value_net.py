"""Generate training data and fit the value network end to end."""

import sys

from menuplan.cli import main

if __name__ == "__main__":
    count = sys.argv[1] if len(sys.argv) > 1 else "50000"
    assert main(["gen-data", "--count", count, "--seed", "2024", "--out", "data.bin"]) == 0
    sys.exit(main(["train", "--dataset", "data.bin", "--out", "model.bin"]))

"""PriorTune - Main Launcher

Runs the ``priortune`` command line from a source checkout, e.g.

    python main.py gen-data data/train --count 200
    python main.py train data/train runs/desk
"""

import sys

from priortune.cli import main

if __name__ == "__main__":
    sys.exit(main())

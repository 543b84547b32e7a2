#!/usr/bin/env python3
"""Run the bundled invariant property suite."""

import sys

from walkref.cli import main

if __name__ == "__main__":
    sys.exit(main(["suite", *sys.argv[1:]]))

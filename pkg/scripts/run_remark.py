#!/usr/bin/env python3
"""Run the WL vs n-walk per-iteration disagreement experiment."""

import sys

from walkref.cli import main

if __name__ == "__main__":
    sys.exit(main(["remark", *sys.argv[1:]]))

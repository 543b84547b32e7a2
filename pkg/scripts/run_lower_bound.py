#!/usr/bin/env python3
"""Run the distinguishing-count lower-bound experiment on CFI pairs."""

import sys

from walkref.cli import main

if __name__ == "__main__":
    sys.exit(main(["lower-bound", *sys.argv[1:]]))

"""Module entry point so `python -m chirascope` works like the script."""

import sys

from chirascope.cli import main

if __name__ == "__main__":
    sys.exit(main())

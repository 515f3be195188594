"""Module entry point so `python -m describeworld` works without the script."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())

"""Allow ``python -m qscatter`` as an alias for the ``qscatter`` script."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())

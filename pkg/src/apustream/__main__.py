"""Allow ``python -m apustream``."""

import sys

from .cli import main

sys.exit(main())

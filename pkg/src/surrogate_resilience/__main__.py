"""Allows ``python -m surrogate_resilience``."""

import sys

from .cli import main

sys.exit(main())

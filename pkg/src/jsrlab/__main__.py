"""``python -m jsrlab``."""
import sys

from .cli import main

sys.exit(main())

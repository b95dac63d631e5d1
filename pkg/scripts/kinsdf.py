#!/usr/bin/env python3
"""
kinsdf launcher. Run from anywhere; see src/cli/main.py for the commands.
"""

import os
import sys

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.cli.main import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())

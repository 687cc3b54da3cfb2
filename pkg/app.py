#!/usr/bin/env python3
"""
LimitForge command-line entry point.

Usage:
    python app.py generate --family paley --p 13 --out g.el
    python app.py density --kind t --F triangle --G g.el
    python app.py --list-checks
"""

import sys

from limitforge.cli import main

if __name__ == "__main__":
    sys.exit(main())

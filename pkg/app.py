"""
Main entry point for the Choquard solver.

Runs one command of the experiment CLI and exits with its return code.
"""

import sys

from src.cli import main
from src.utils import get_logger

logger = get_logger(__name__)


if __name__ == "__main__":
    try:
        sys.exit(main(sys.argv[1:]))
    except KeyboardInterrupt:
        logger.info("Run interrupted by user")
        sys.exit(1)

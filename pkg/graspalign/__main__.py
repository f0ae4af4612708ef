"""
Main entry point for running the package with `python -m graspalign`.
"""
import sys

from graspalign.cli import main

if __name__ == "__main__":
    sys.exit(main())

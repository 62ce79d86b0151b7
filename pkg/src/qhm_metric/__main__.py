"""
Main entry point for running qhm_metric as a module.

Usage:
    python -m qhm_metric verify --config configs/default.json
"""

from .cli import main

if __name__ == '__main__':
    main()

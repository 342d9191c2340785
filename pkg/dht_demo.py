#!/usr/bin/env python3
"""
Surrogate-cache demo entry point (dht-demo): advection with a cached per-cell kernel.
"""
import argparse
import json
import sys

from src.config import settings
from src.core.errors import DhtError, create_error_response
from src.processing.parallel_processor import run_participants
from src.surrogate import run_demo
from src.utils.formatters import STEP_COLUMNS, emit_csv


def build_parser():
    parser = argparse.ArgumentParser(description='Surrogate-cache demo on the distributed hash table.')
    parser.add_argument('--protocol', choices=['coarse', 'fine', 'lockfree'], default=settings.PROTOCOL,
                        help='Consistency protocol of the cache')
    parser.add_argument('--backend', choices=['threads', 'sockets'], default=settings.BACKEND,
                        help='Remote memory backend')
    parser.add_argument('--participants', type=int, default=settings.PARTICIPANTS,
                        help='Number of participants')
    parser.add_argument('--window-size', type=int, default=settings.WINDOW_SIZE,
                        help='Bytes per participant window')
    parser.add_argument('--grid-width', type=int, default=settings.GRID_WIDTH, help='Cells in the grid')
    parser.add_argument('--steps', type=int, default=settings.STEPS, help='Time steps')
    parser.add_argument('--digits', type=int, default=settings.DIGITS,
                        help='Significant digits of cache keys')
    parser.add_argument('--kernel-cost-us', type=float, default=settings.KERNEL_COST_US,
                        help='Artificial kernel cost in microseconds')
    parser.add_argument('--no-cache', action='store_true', help='Run the kernel for every cell')
    parser.add_argument('--csv', help='Write per-step hit counts to this CSV file')
    return parser


def main(argv=None):
    """Main entry point for the demo."""
    args = build_parser().parse_args(argv)

    try:
        results = run_participants(
            run_demo,
            args=(args.grid_width, args.steps, args.digits, args.kernel_cost_us, args.protocol, not args.no_cache),
            participants=args.participants,
            window_size=args.window_size,
            backend=args.backend,
        )
    except DhtError as e:
        print(json.dumps(create_error_response(e), indent=2), file=sys.stderr)
        return 1

    summary = results[0]
    print(summary.summary_line())
    if args.csv:
        emit_csv(summary.step_results, args.csv, STEP_COLUMNS)
    return 0


if __name__ == "__main__":
    sys.exit(main())

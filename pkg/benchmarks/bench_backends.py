#!/usr/bin/env python3
"""Compare the compiled kernel extension against the pure-Python fallback.

Usage: python benchmarks/bench_backends.py [repeats]
"""

import sys

from alrbench.benchmark import run_benchmark

if __name__ == "__main__":
    repeats = int(sys.argv[1]) if len(sys.argv) > 1 else 5
    run_benchmark(repeats=repeats)

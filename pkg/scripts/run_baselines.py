#!/usr/bin/env python3
"""Run the five baseline strategies over the bundled dataset and print the
comparison table (CR%, AR%, SR, MDD%).  Writes comparison.csv under --out.

Usage: python scripts/run_baselines.py [--out runs/baselines] [--cost-bps 5]
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "tests" / "data" / "DEMO.csv"

from quantdesk.cli import main as cli_main  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/baselines")
    parser.add_argument("--data", default=str(DATA))
    args = parser.parse_args()
    if not Path(args.data).exists():
        print(f"dataset {args.data} missing; run scripts/make_fixtures.py first", file=sys.stderr)
        return 2
    argv = ["compare"]
    for name in ("buy_and_hold", "macd", "kdj_rsi", "zmr", "sma"):
        argv += ["--strategy", name]
    argv += [
        "--tickers", Path(args.data).stem.upper(),
        "--from", "2024-01-02",
        "--to", "2024-12-16",
        "--data", args.data,
        "--out", args.out,
    ]
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())

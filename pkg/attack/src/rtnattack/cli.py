"""Command line: run the attack on one exported bitstream file."""

import argparse
import json
import sys

from .bitsio import DataError
from .model import AttackConfig, ConfigError, attack

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_DATA_ERROR = 3


def build_parser():
    p = argparse.ArgumentParser(
        prog="rtnattack",
        description="LSTM next-bit prediction attack on an exported bitstream "
                    "(RTNB or ASCII).",
    )
    p.add_argument("--in", dest="infile", required=True, help="bitstream file")
    p.add_argument("--window", type=int, default=64, help="context bits")
    p.add_argument("--hidden", type=int, default=64, help="LSTM hidden size")
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--split", default="0.8,0.1,0.1",
                   help="train,val,test fractions (must sum to 1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=4096)
    p.add_argument("--learning-rate", type=float, default=3e-3)
    p.add_argument("--out", help="also write the report JSON to this file")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        split = tuple(float(f) for f in args.split.split(","))
        config = AttackConfig(window=args.window, hidden=args.hidden,
                              epochs=args.epochs, split=split, seed=args.seed,
                              batch_size=args.batch_size,
                              learning_rate=args.learning_rate)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        report = attack(args.infile, config)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA_ERROR
    payload = json.dumps(report.to_json(), indent=2, sort_keys=True)
    print(payload)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

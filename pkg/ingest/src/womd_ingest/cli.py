"""womd-ingest: convert motion-dataset TFRecords to scenario JSONL, and
validate scenario JSONL files against the contract."""

from __future__ import annotations

import argparse
import glob
import sys

from .convert import YAW_RATE_SOURCES, convert
from .validate import validate_file


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="womd-ingest", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    conv = sub.add_parser("convert", help="TFRecords -> scenario JSONL")
    conv.add_argument("--in", dest="inputs", required=True,
                      help="TFRecord path or glob (sorted for determinism)")
    conv.add_argument("--out", required=True, help="output JSONL path")
    conv.add_argument("--limit", type=int, default=0, help="max scenarios to emit (0 = all)")
    conv.add_argument("--stride", type=int, default=0,
                      help="slide extra anchors across each track every N steps "
                           "(0 = canonical anchor only)")
    conv.add_argument("--yaw-rate-from", choices=YAW_RATE_SOURCES, default="heading-diff",
                      help="channel the turn rate is finite-differenced from")
    conv.add_argument("--manifest", help="also write the conversion manifest JSON here")

    val = sub.add_parser("validate", help="check a scenario JSONL file")
    val.add_argument("path")
    return parser


def cmd_convert(args) -> int:
    paths = sorted(glob.glob(args.inputs)) or [args.inputs]
    manifest = convert(
        paths, args.out, stride=args.stride, limit=args.limit,
        yaw_rate_source=args.yaw_rate_from,
    )
    if args.manifest:
        with open(args.manifest, "w", encoding="utf-8") as fh:
            fh.write(manifest.to_json())
    sys.stdout.write(manifest.to_json())
    return 0 if not manifest.file_errors else 2


def cmd_validate(args) -> int:
    try:
        report = validate_file(args.path)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for lineno, message in report.findings:
        print(f"{args.path}:{lineno}: {message}")
    status = "ok" if report.ok else f"{len(report.findings)} finding(s)"
    print(f"checked {report.lines_checked} line(s): {status}")
    return 0 if report.ok else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "convert":
        return cmd_convert(args)
    return cmd_validate(args)


if __name__ == "__main__":
    sys.exit(main())

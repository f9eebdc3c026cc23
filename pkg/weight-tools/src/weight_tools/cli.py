"""weight-tools command line: export checkpoints, emit reference fixtures.

    weight-tools export --arch vgg-face --random --seed 7 --out vgg-face.ppwt
    weight-tools export --arch vgg-f --source model.pt --mean 122.6,114.9,101.6 \
                        --out vgg-f.ppwt --emit-lrn-config vgg-f-lrn.json
    weight-tools fixtures --weights vgg-f.ppwt --arch vgg-f \
                          --image a.png --image b.png \
                          --taps "Full 7:PreReLU,Full 7:PostReLU" --out fixtures/
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .archconfig import ExportError, find_architecture, save_architecture, \
    with_lrn_after_early_blocks
from .export import ExportJob, export_weights
from .fixtures import emit_reference_activations


def _parse_mean(text: str) -> tuple[float, float, float]:
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("mean must be three comma-separated values")
    return tuple(parts)


def _parse_taps(text: str) -> list[tuple[str, str]]:
    taps = []
    for item in text.split(","):
        layer, _, phase = item.strip().rpartition(":")
        if not layer or phase not in ("PreReLU", "PostReLU"):
            raise argparse.ArgumentTypeError(
                f"bad tap {item!r}; expected 'Layer Name:PreReLU|PostReLU'"
            )
        taps.append((layer, phase))
    return taps


def cmd_export(args) -> int:
    if (args.source is None) == (not args.random):
        print("error: pass exactly one of --source or --random", file=sys.stderr)
        return 1
    job = ExportJob(
        architecture=args.arch,
        out_path=Path(args.out),
        source_path=Path(args.source) if args.source else None,
        seed=args.seed,
        mean=args.mean,
    )
    path = export_weights(job)
    print(f"wrote {path}")
    if args.emit_lrn_config:
        arch = find_architecture(args.arch)
        save_architecture(with_lrn_after_early_blocks(arch), args.emit_lrn_config)
        print(f"wrote {args.emit_lrn_config}")
    return 0


def cmd_fixtures(args) -> int:
    written = emit_reference_activations(
        weights_path=args.weights,
        architecture=args.arch,
        image_paths=[Path(p) for p in args.image],
        taps=args.taps,
        out_dir=args.out,
    )
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weight-tools", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("export", help="write a PPWT weight file")
    p.add_argument("--arch", required=True, help="builtin name or config JSON path")
    p.add_argument("--source", default=None, help="torch state-dict file")
    p.add_argument("--random", action="store_true", help="seeded random weights")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mean", type=_parse_mean, default=None,
                   help="channel means R,G,B to embed")
    p.add_argument("--out", required=True)
    p.add_argument("--emit-lrn-config", default=None,
                   help="also write an LRN-annotated architecture variant")
    p.set_defaults(handler=cmd_export)

    p = sub.add_parser("fixtures", help="emit reference activations via torch")
    p.add_argument("--weights", required=True)
    p.add_argument("--arch", required=True)
    p.add_argument("--image", action="append", required=True)
    p.add_argument("--taps", type=_parse_taps, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_fixtures)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ExportError, FileNotFoundError, EOFError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())

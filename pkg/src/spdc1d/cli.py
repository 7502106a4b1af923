"""Command-line interface.

Subcommands: simulate, scan, transmission-map, verify, dump-matrix.
Every run is deterministic (no randomness anywhere); --seedless merely
records that assertion in the output summary.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import load_config, parse_config
from .errors import SpdcError
from .runner import MATRIX_NAMES, dump_matrix, scan, simulate, transmission_map, verify


def _add_common(p):
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--bins", type=int, default=None,
                   help="override basis bin count")
    p.add_argument("--window-lo", type=float, default=None,
                   help="window lower edge as a fraction of the pump frequency")
    p.add_argument("--window-hi", type=float, default=None,
                   help="window upper edge as a fraction of the pump frequency")
    p.add_argument("--structure", default=None,
                   help="JSON file whose 'structure' (and optional "
                        "'materials') sections override the config")
    p.add_argument("--seedless", action="store_true",
                   help="assert the run uses no randomness (always true)")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="spdc1d",
        description="Photon-pair generation in 1D nonlinear layered media",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="single-structure SPDC run")
    _add_common(p)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("scan", help="(l1, l2) transmission map + ridge yields")
    _add_common(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--l1-range", type=float, nargs=3, metavar=("LO", "HI", "N"),
                   default=None, help="override scan.l1_nm (nm)")
    p.add_argument("--l2-range", type=float, nargs=3, metavar=("LO", "HI", "N"),
                   default=None, help="override scan.l2_nm (nm)")

    p = sub.add_parser("transmission-map", help="pump transmission over (l1, l2)")
    _add_common(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--l1-range", type=float, nargs=3, default=None)
    p.add_argument("--l2-range", type=float, nargs=3, default=None)

    p = sub.add_parser("verify", help="oracle and invariant checks")
    _add_common(p)
    p.add_argument("--out", default=None, help="write JSON report here")
    p.add_argument("--step-fraction", type=float, default=20.0,
                   help="z-step = min layer length / this")

    p = sub.add_parser("dump-matrix", help="dump one pipeline matrix to CSV")
    _add_common(p)
    p.add_argument("--name", required=True,
                   help=f"matrix name, one of: {', '.join(MATRIX_NAMES)}")
    p.add_argument("--out", required=True)
    return ap


def _window(args):
    if args.window_lo is None and args.window_hi is None:
        return None
    if args.window_lo is None or args.window_hi is None:
        raise SystemExit("--window-lo and --window-hi must be given together")
    return (args.window_lo, args.window_hi)


def _override_scan_ranges(cfg, args):
    if getattr(args, "l1_range", None) is None and getattr(args, "l2_range", None) is None:
        return cfg
    raw = json.loads(json.dumps(cfg.raw))  # deep copy
    if "scan" not in raw:
        raise SystemExit("config has no scan section to override")
    if args.l1_range is not None:
        raw["scan"]["l1_nm"] = list(args.l1_range)
    if args.l2_range is not None:
        raw["scan"]["l2_nm"] = list(args.l2_range)
    return parse_config(raw)


def _apply_structure_override(cfg, args):
    if getattr(args, "structure", None) is None:
        return cfg
    with open(args.structure, "r", encoding="utf-8") as fh:
        override = json.load(fh)
    raw = json.loads(json.dumps(cfg.raw))
    if "structure" in override:
        raw["structure"] = override["structure"]
    if "materials" in override:
        raw["materials"].update(override["materials"])
    return parse_config(raw)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = _apply_structure_override(cfg, args)
        if args.command == "simulate":
            summary, _, _ = simulate(cfg, args.out_dir, bins=args.bins,
                                     window=_window(args))
            ratio = summary["ratio_surface_volume"]
            r_txt = "n/a" if ratio is None else f"{ratio:.4g}"
            print(f"N_SV = {summary['counts_per_mm2']['SV']:.6g} per mm^2, "
                  f"R = {r_txt}")
            if summary["no_emission"]:
                print("note: no emission (all-linear structure)")
            for w in summary["warnings"]:
                print("warning:", w)
        elif args.command == "transmission-map":
            cfg = _override_scan_ranges(cfg, args)
            transmission_map(cfg, args.out_dir)
            print(f"transmission map written to {args.out_dir}")
        elif args.command == "scan":
            cfg = _override_scan_ranges(cfg, args)
            ridges, _, summary = scan(cfg, args.out_dir, workers=args.workers)
            lost = sum(1 for r in ridges if r["lost"])
            print(f"tracked {summary['ridges_tracked']} ridges "
                  f"({lost} flagged lost), scanned {summary['cells']} cells")
        elif args.command == "verify":
            report, ok = verify(cfg, bins=args.bins or 16,
                                step_fraction=args.step_fraction,
                                out_path=args.out)
            for name, chk in report["checks"].items():
                status = "PASS" if chk["error"] <= max(chk["tol"], 0.0) else "FAIL"
                print(f"{status} {name}: error = {chk['error']:.3e} "
                      f"(tol {chk['tol']:.1e})")
            return 0 if ok else 1
        elif args.command == "dump-matrix":
            path = dump_matrix(cfg, args.name, args.out, bins=args.bins)
            print(f"wrote {path}")
    except SpdcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Command line entry point: ``diskpack pack|analyze|render|verify|bench``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .analysis import analyze
from .bench import bench, format_bench
from .billiards import BilliardsParams
from .core import REGION_KINDS, Square, dispersion, validity_violations
from .errors import PackingError, ParseError, VersionError
from .io import RecordStore, load_packing, save_packing
from .phase1 import Phase1Params
from .phase2 import identify_bonds, rigidity_perturbation_check
from .pipeline import RunSpec, multi_restart
from .render import render_svg

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_INTERNAL = 0, 1, 2, 3

# stored and recomputed m must agree this closely
M_CONSISTENCY = 1e-12


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _error_line(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def _cmd_pack(args) -> int:
    p1 = Phase1Params(s0=args.s0, q=args.q, epsilon=args.epsilon,
                      tolerance=args.tolerance, alpha=args.alpha)
    spec = RunSpec(n=args.n, shape=args.shape, phase1=p1, billiards=BilliardsParams(),
                   restarts=args.restarts, base_seed=args.seed, out=args.out, records_dir=args.records)
    out = multi_restart(spec, workers=args.workers)
    for rec in out.trace:
        m = "failed" if not rec.ok else f"{rec.m:.15f}"
        print(f"restart {rec.index:3d} seed {rec.seed:6d} m {m}")
    best = out.best
    print(f"best m {best.m:.17g} (restart {best.provenance['restart']}, bonds {best.bond_graph.total})")
    if args.out:
        save_packing(best, args.out)
        print(f"wrote {args.out}")
    if args.records:
        stored = RecordStore(args.records).insert(best)
        print("new record stored" if stored else "record not improved")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    result = load_packing(args.file)
    bonds = identify_bonds(result.configuration)
    report = analyze(result.configuration, bonds, cutoff=args.cutoff)
    print(f"n {result.n}  m {result.m:.17g}")
    print(report.text())
    return EXIT_OK


def _cmd_render(args) -> int:
    result = load_packing(args.file)
    out = args.out or str(args.file).rsplit(".", 1)[0] + ".svg"
    render_svg(result, out)
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    result = load_packing(args.file)
    cfg = result.configuration
    ok = True
    problems = validity_violations(cfg)
    for p in problems:
        print(f"invalid: {p}")
    ok &= not problems

    bonds = identify_bonds(cfg)
    stored = result.bond_graph
    missing = sorted(stored.disk_edges - bonds.disk_edges) + sorted(stored.wall_edges - bonds.wall_edges)
    extra = sorted(bonds.disk_edges - stored.disk_edges) + sorted(bonds.wall_edges - stored.wall_edges)
    for a, b in missing:
        print(f"stored bond {a + 1}-{b if isinstance(b, str) else b + 1} is not a contact")
    for a, b in extra:
        print(f"contact {a + 1}-{b if isinstance(b, str) else b + 1} is not a stored bond")
    print(f"bonds: {bonds.total} recomputed, {stored.total} stored")
    print(f"ambiguous gaps: {len(bonds.ambiguous)}")
    ok &= not missing and not extra and not bonds.ambiguous

    if cfg.n > 1:
        m = dispersion(cfg)
        if not abs(m - result.m) <= M_CONSISTENCY:
            print(f"stored m {result.m:.17g} differs from recomputed {m:.17g}")
            ok = False

    if args.rigidity and not problems and isinstance(cfg.region, Square) and cfg.n > 1:
        seed = result.provenance.get("seed") or 0
        report = rigidity_perturbation_check(cfg, seed=int(seed))
        print(report.text())
        ok &= report.passed
    print("verify: pass" if ok else "verify: FAIL")
    return EXIT_OK if ok else EXIT_VERIFY


def _cmd_bench(args) -> int:
    print(format_bench(bench(args.n, args.restarts, args.seed)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="diskpack", description="Dense packings of equal disks.")
    parser.add_argument("--version", action="version", version=f"diskpack {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = Phase1Params()
    p = sub.add_parser("pack", help="multi-restart packing run")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--shape", choices=sorted(REGION_KINDS), default="square")
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="base seed; restart k uses seed + k")
    p.add_argument("--s0", type=float, default=d.s0)
    p.add_argument("--q", type=float, default=d.q)
    p.add_argument("--epsilon", type=float, default=d.epsilon)
    p.add_argument("--tolerance", type=int, default=d.tolerance)
    p.add_argument("--alpha", type=float, default=d.alpha)
    p.add_argument("--out", help="packing file for the best result")
    p.add_argument("--records", help="records directory to update")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_pack)

    a = sub.add_parser("analyze", help="bond, rattler, near-contact and symmetry report")
    a.add_argument("file")
    a.add_argument("--cutoff", type=float, default=0.02, help="near-contact cutoff in diameters")
    a.set_defaults(func=_cmd_analyze)

    r = sub.add_parser("render", help="write an SVG diagram")
    r.add_argument("file")
    r.add_argument("--out")
    r.set_defaults(func=_cmd_render)

    v = sub.add_parser("verify", help="validity, bond and rigidity checks")
    v.add_argument("file")
    v.add_argument("--no-rigidity", dest="rigidity", action="store_false")
    v.set_defaults(func=_cmd_verify)

    b = sub.add_parser("bench", help="per-restart timing and digits-vs-time curve")
    b.add_argument("--n", type=int, default=10)
    b.add_argument("--restarts", type=int, default=3)
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        _error_line("usage", str(exc))
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParseError, VersionError) as exc:
        _error_line(exc.kind, str(exc))
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        _error_line("io" if isinstance(exc, OSError) else "invalid_argument", str(exc))
        return EXIT_USAGE
    except PackingError as exc:
        _error_line(exc.kind, str(exc))
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        _error_line("internal", f"{type(exc).__name__}: {exc}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

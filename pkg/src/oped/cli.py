"""Command-line entry point: ``oped {sinogram,reconstruct,cond-report,verify}``.

Exit codes: 0 success, 1 usage error, 2 numerical precondition violated,
3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from oped.errors import FormatError, PreconditionError
from oped.formats import (
    atomic_write,
    compute_metrics,
    metrics_to_json,
    read_sinogram,
    report_summary,
    report_to_csv,
    write_image,
    write_sinogram,
)
from oped.limited_angle import RECOMMENDED_MARGIN, complete_coefficients, tau_bound
from oped.phantom import PARITIES, EllipsePhantom, SinogramGeometry, add_noise, sample_sinogram, shepp_logan, unit_disk
from oped.spectral import FULL, HALF, STANDARD_SWEEP, condition_table
from oped.transform import BUMP, PLATEAU, FilterSpec, oped_evaluate, sine_coefficients
from oped.verify import SUITES

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PRECONDITION = 2
EXIT_VERIFY = 3

log = logging.getLogger("oped")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def load_phantom(spec: str) -> EllipsePhantom:
    if spec == "shepp-logan":
        return shepp_logan()
    if spec == "disk":
        return unit_disk()
    path = Path(spec)
    if not path.is_file():
        raise UsageError(f"unknown phantom {spec!r} (expected shepp-logan, disk or a JSON file)")
    data = json.loads(path.read_text())
    records = data["ellipses"] if isinstance(data, dict) else data
    try:
        return EllipsePhantom.from_records(records, name=path.stem)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid phantom file {path}: {exc}") from None


def _filter_from(args) -> FilterSpec:
    try:
        return FilterSpec(args.tau, args.beta, args.order, args.filter_mode)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_sinogram(args) -> int:
    phantom = load_phantom(args.phantom)
    try:
        geometry = SinogramGeometry(args.N, args.Nd, args.r, args.parity)
    except ValueError as exc:
        raise UsageError(f"invalid geometry: {exc}") from None
    if args.sigma < 0:
        raise UsageError("--sigma must be >= 0")
    sino = sample_sinogram(phantom, geometry)
    if args.sigma > 0:
        sino = add_noise(sino, args.sigma, args.seed)
    write_sinogram(args.out, sino)
    print(
        f"wrote {args.out}: N={geometry.N} N_d={geometry.n_d} r={geometry.r} "
        f"views stored={geometry.view_count - geometry.r} sigma={sino.noise_sigma:g}"
    )
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    filt = _filter_from(args)
    if args.window[0] >= args.window[1]:
        raise UsageError("--window needs LO < HI")
    if args.metrics and not args.phantom:
        raise UsageError("--metrics needs --phantom to know the reference image")
    reference = load_phantom(args.phantom) if args.phantom else None
    try:
        sino = read_sinogram(args.input)
    except (OSError, FormatError) as exc:
        raise UsageError(f"cannot read sinogram: {exc}") from None
    g = sino.geometry
    if g.r > 0:
        bound = tau_bound(g.r, g.n_sys)
        if not filt.tau < bound:
            raise PreconditionError(
                f"r={g.r} missing views need tau < 1 - r/N_sys = 1 - {g.r}/{g.n_sys} = {bound:.6f} "
                f"(got tau={filt.tau:g}); the completion matrices are singular otherwise"
            )
        if filt.tau > bound - RECOMMENDED_MARGIN:
            log.warning("tau=%g is within %.2f of the bound %.4f; expect severe ill-conditioning", filt.tau, RECOMMENDED_MARGIN, bound)
    coeffs = sine_coefficients(sino)
    if g.r > 0:
        coeffs = complete_coefficients(coeffs, filt, workers=args.workers)
        flagged = int(coeffs.ill_conditioned.sum())
        if flagged:
            log.warning("%d of %d frequency systems fell back to the truncated spectral solve", flagged, g.n_d)
    img = oped_evaluate(coeffs, filt, args.grid, workers=args.workers)
    write_image(args.out, img, tuple(args.window))
    print(f"wrote {args.out}: {args.grid}x{args.grid}, {filt.describe()}, r={g.r}")
    if args.metrics:
        metrics = compute_metrics(img, reference)
        metrics.update({"N": g.N, "N_d": g.n_d, "r": g.r, "tau": filt.tau, "beta": filt.beta, "grid": args.grid})
        atomic_write(args.metrics, metrics_to_json(metrics))
        print(f"wrote {args.metrics}: rel_l2_inside_disk={metrics['rel_l2_inside_disk']:.6g}")
    return EXIT_OK


def cmd_cond_report(args) -> int:
    if args.r < 1:
        raise UsageError("--r must be >= 1")
    params = STANDARD_SWEEP if args.sweep else [(args.tau, args.beta)]
    for tau, beta in params:
        try:
            FilterSpec(tau, beta, args.order, args.filter_mode)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    try:
        reports = condition_table(
            args.N, args.r, params, convention=args.table_convention, profile=args.filter_mode, order=args.order,
            workers=args.workers,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out)
    for rep in reports:
        path = out if len(reports) == 1 else out.with_name(f"{out.stem}_tau{rep.tau:g}_beta{rep.beta:g}{out.suffix}")
        atomic_write(path, report_to_csv(rep))
    summary = out.with_suffix(".json")
    atomic_write(summary, (json.dumps(report_summary(reports), indent=2) + "\n").encode("utf-8"))
    print(f"N={args.N} r={args.r} convention={args.table_convention} coverage={reports[0].coverage_degrees:.2f} deg")
    print(f"{'tau':>5} {'beta':>5} {'max cond':>14} {'k*':>5}")
    for rep in reports:
        print(f"{rep.tau:>5g} {rep.beta:>5g} {rep.max_condition:>14.6g} {rep.argmax_k:>5d}")
    print(f"wrote {summary}")
    return EXIT_OK


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    failed = 0
    for name in names:
        fn = SUITES[name]
        checks = fn(args.N) if args.N else fn()
        for check in checks:
            print(check.line())
            failed += not check.passed
    print("verification " + ("FAILED" if failed else "passed"))
    return EXIT_VERIFY if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="oped", description="OPED reconstruction and limited-angle completion")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sinogram", help="sample a phantom on the OPED geometry")
    p.add_argument("--phantom", default="shepp-logan", help="shepp-logan, disk, or a JSON ellipse file")
    p.add_argument("--N", type=int, default=502)
    p.add_argument("--Nd", type=int, default=None, help="rays per view (default N/2)")
    p.add_argument("--r", type=int, default=0, help="number of leading views to drop")
    p.add_argument("--parity", choices=PARITIES, default=None)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sinogram)

    def add_filter_args(p):
        p.add_argument("--tau", type=float, default=0.0)
        p.add_argument("--beta", type=float, default=0.9)
        p.add_argument("--filter-mode", choices=(PLATEAU, BUMP), default=PLATEAU)
        p.add_argument("--order", type=int, default=3, help="bump order m (bump mode only)")
        p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("reconstruct", help="complete coefficients if needed and reconstruct")
    p.add_argument("--in", dest="input", required=True)
    add_filter_args(p)
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--out", required=True, help="16-bit PGM output")
    p.add_argument("--metrics", default=None, help="JSON metrics output")
    p.add_argument("--phantom", default=None, help="reference phantom for --metrics")
    p.add_argument("--window", type=float, nargs=2, default=(0.0, 1.05), metavar=("LO", "HI"))
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("cond-report", help="condition numbers of the completion matrices")
    p.add_argument("--N", type=int, default=502)
    p.add_argument("--r", type=int, required=True)
    add_filter_args(p)
    p.add_argument("--sweep", action="store_true", help="sweep tau over 0, 0.1, 0.2 and beta over 0.5, 0.9")
    p.add_argument("--table-convention", choices=(HALF, FULL), default=HALF)
    p.add_argument("--out", required=True, help="CSV path; the JSON summary goes next to it")
    p.set_defaults(func=cmd_cond_report)

    p = sub.add_parser("verify", help="run structural self-checks")
    p.add_argument("--suite", choices=(*SUITES, "all"), default="all")
    p.add_argument("--N", type=int, default=None)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"oped: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PreconditionError as exc:
        print(f"oped: precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
